//! WAV and feature-file I/O.
//!
//! Binary feature layout (`artivae-feat-v1`, little-endian):
//!
//! ```text
//! magic   16 bytes  "ARTIVAE-FEAT-V1\0"
//! dims    u32       coefficients per frame (18)
//! count   u64       number of frames
//! frames  count × (dims + 1) f64: the coefficients, then time_s
//! ```

use std::io::{Read, Seek, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{AudioSignal, CepstralFrame, N_CEPS};

pub const FEATURE_FORMAT: &str = "artivae-feat-v1";
pub const FEATURE_MAGIC: &[u8; 16] = b"ARTIVAE-FEAT-V1\0";

/// Reads 16-bit PCM mono WAV. Anything else is rejected.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedWav(format!(
            "{:?} {}-bit samples (need 16-bit PCM)",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    if spec.channels != 1 {
        return Err(Error::UnsupportedWav(format!(
            "{} channels (need mono)",
            spec.channels
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    AudioSignal::new(samples, spec.sample_rate)
}

/// Sample value as stored in 16-bit PCM (full scale 32768, clipped).
pub fn pcm16(sample: f64) -> i16 {
    (sample * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// The value a sample reads back as after a 16-bit PCM round trip.
pub fn pcm16_quantize(sample: f64) -> f64 {
    pcm16(sample) as f64 / 32768.0
}

/// Writes 16-bit PCM mono; samples outside [−1, 1) are clipped.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioSignal) -> Result<()> {
    write_wav_to(std::io::BufWriter::new(std::fs::File::create(path)?), audio)
}

pub fn write_wav_to<W: Write + Seek>(out: W, audio: &AudioSignal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::new(out, spec)?;
    for &s in &audio.samples {
        w.write_sample(pcm16(s))?;
    }
    w.finalize()?;
    Ok(())
}

pub fn write_features_csv(path: impl AsRef<Path>, frames: &[CepstralFrame]) -> Result<()> {
    write_features_csv_to(std::fs::File::create(path)?, frames)
}

pub fn write_features_csv_to<W: Write>(out: W, frames: &[CepstralFrame]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..N_CEPS).map(|i| format!("c{i}")).collect();
    header.push("time_s".into());
    w.write_record(&header)?;
    for f in frames {
        let row: Vec<String> = f
            .coeffs
            .iter()
            .chain(std::iter::once(&f.time_s))
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Vec<CepstralFrame>> {
    let path = path.as_ref();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let expected: Vec<String> = (0..N_CEPS)
        .map(|i| format!("c{i}"))
        .chain(std::iter::once("time_s".to_string()))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_err(
            1,
            format!("header must be {}", expected.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| parse_err(e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut vals = [0.0; N_CEPS + 1];
        for (i, field) in record.iter().enumerate() {
            vals[i] = field.parse().map_err(|_| {
                parse_err(line, format!("column {}: not a number: {field:?}", i + 1))
            })?;
        }
        let mut coeffs = [0.0; N_CEPS];
        coeffs.copy_from_slice(&vals[..N_CEPS]);
        out.push(CepstralFrame {
            coeffs,
            time_s: vals[N_CEPS],
        });
    }
    Ok(out)
}

pub fn write_features_bin(path: impl AsRef<Path>, frames: &[CepstralFrame]) -> Result<()> {
    std::fs::File::create(path)?.write_all(&features_bin_bytes(frames))?;
    Ok(())
}

pub fn features_bin_bytes(frames: &[CepstralFrame]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(28 + frames.len() * (N_CEPS + 1) * 8);
    buf.extend_from_slice(FEATURE_MAGIC);
    buf.extend_from_slice(&(N_CEPS as u32).to_le_bytes());
    buf.extend_from_slice(&(frames.len() as u64).to_le_bytes());
    for f in frames {
        for v in f.coeffs.iter().chain(std::iter::once(&f.time_s)) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub fn read_features_bin(path: impl AsRef<Path>) -> Result<Vec<CepstralFrame>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 28 || &bytes[..16] != FEATURE_MAGIC {
        return Err(Error::Format(format!("not an {FEATURE_FORMAT} file")));
    }
    let dims = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[20..28].try_into().unwrap()) as usize;
    if dims != N_CEPS {
        return Err(Error::Format(format!(
            "{dims} coefficients per frame, expected {N_CEPS}"
        )));
    }
    let record = (dims + 1) * 8;
    if bytes.len() != 28 + count * record {
        return Err(Error::Format(format!(
            "file length {} does not match {count} frames",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for chunk in bytes[28..].chunks_exact(record) {
        let vals: Vec<f64> = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let mut coeffs = [0.0; N_CEPS];
        coeffs.copy_from_slice(&vals[..N_CEPS]);
        out.push(CepstralFrame {
            coeffs,
            time_s: vals[N_CEPS],
        });
    }
    Ok(out)
}

/// Dispatches on extension: `.bin` is binary, anything else CSV.
pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<CepstralFrame>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "bin") {
        read_features_bin(path)
    } else {
        read_features_csv(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_pcm16() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(0.1f32).unwrap();
        }
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path), Err(Error::UnsupportedWav(_))));
    }

    #[test]
    fn bin_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        std::fs::write(&path, vec![0u8; 64]).unwrap();
        assert!(matches!(read_features_bin(&path), Err(Error::Format(_))));
    }
}
