//! On-disk corpus layout:
//!
//! ```text
//! manifest.json            utterances, seeds, file paths and SHA-256 digests
//! truth.json               generator matrix, mean frame, spectral map
//! ema/<id>.csv             EMA frames
//! features/<id>.csv|.bin   cepstral frames
//! truth/<id>.csv           ground-truth articulatory and source trajectories
//! wav/<id>.wav             clean audio (16-bit PCM)
//! babble.f64               babble noise, raw little-endian f64 at 16 kHz
//! wav/babble.wav           16-bit preview of the babble, peak-normalized
//! ```

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::articulatory::{read_ema_csv, write_ema_csv_to, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::features::{
    features_bin_bytes, read_features_bin, read_wav, write_features_csv_to, write_wav_to,
    AudioSignal,
};

use super::{sha256_hex, Corpus, GroundTruth, SynthConfig, Utterance, SAMPLE_RATE_HZ};

pub const CORPUS_FORMAT: &str = "artivae-corpus-v1";
const MANIFEST: &str = "manifest.json";
const BABBLE_RAW: &str = "babble.f64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceEntry {
    pub id: String,
    pub seed: u64,
    pub frames: usize,
    pub ema: String,
    pub features: String,
    pub features_bin: String,
    pub truth: String,
    pub audio: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub format: String,
    pub config: SynthConfig,
    pub truth: String,
    pub babble: Option<String>,
    pub babble_preview: Option<String>,
    pub utterances: Vec<UtteranceEntry>,
    /// Relative path → SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

fn truth_header(n_params: usize, source_dims: usize) -> Vec<String> {
    PARAM_NAMES[..n_params]
        .iter()
        .map(|s| s.to_string())
        .chain((0..source_dims).map(|i| format!("src{i}")))
        .collect()
}

fn truth_csv(u: &Utterance) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(truth_header(u.artic_true.ncols(), u.source.ncols()))?;
    for (a, s) in u.artic_true.outer_iter().zip(u.source.outer_iter()) {
        w.write_record(a.iter().chain(s.iter()).map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn wav_bytes(audio: &AudioSignal) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(Vec::new());
    write_wav_to(&mut cur, audio)?;
    Ok(cur.into_inner())
}

/// Every corpus file (manifest last) and the manifest's SHA-256.
pub(crate) fn render(corpus: &Corpus) -> Result<(Vec<(String, Vec<u8>)>, String)> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    files.push((
        "truth.json".into(),
        (serde_json::to_string_pretty(&corpus.truth)? + "\n").into_bytes(),
    ));
    let mut entries = Vec::with_capacity(corpus.utterances.len());
    for u in &corpus.utterances {
        let entry = UtteranceEntry {
            id: u.id.clone(),
            seed: u.seed,
            frames: u.cepstra.len(),
            ema: format!("ema/{}.csv", u.id),
            features: format!("features/{}.csv", u.id),
            features_bin: format!("features/{}.bin", u.id),
            truth: format!("truth/{}.csv", u.id),
            audio: u.audio.as_ref().map(|_| format!("wav/{}.wav", u.id)),
        };
        let mut ema = Vec::new();
        write_ema_csv_to(&mut ema, corpus.layout(), &u.ema)?;
        files.push((entry.ema.clone(), ema));
        let mut feats = Vec::new();
        write_features_csv_to(&mut feats, &u.cepstra)?;
        files.push((entry.features.clone(), feats));
        files.push((entry.features_bin.clone(), features_bin_bytes(&u.cepstra)));
        files.push((entry.truth.clone(), truth_csv(u)?));
        if let (Some(path), Some(audio)) = (&entry.audio, &u.audio) {
            files.push((path.clone(), wav_bytes(audio)?));
        }
        entries.push(entry);
    }
    let (babble, babble_preview) = match &corpus.babble {
        Some(b) => {
            files.push((
                BABBLE_RAW.into(),
                b.samples.iter().flat_map(|s| s.to_le_bytes()).collect(),
            ));
            let peak = b
                .samples
                .iter()
                .fold(0.0f64, |m, s| m.max(s.abs()))
                .max(f64::MIN_POSITIVE);
            let preview = AudioSignal::new(
                b.samples.iter().map(|s| 0.99 * s / peak).collect(),
                b.sample_rate_hz,
            )?;
            files.push(("wav/babble.wav".into(), wav_bytes(&preview)?));
            (
                Some(BABBLE_RAW.to_string()),
                Some("wav/babble.wav".to_string()),
            )
        }
        None => (None, None),
    };
    let manifest = CorpusManifest {
        format: CORPUS_FORMAT.into(),
        config: corpus.config.clone(),
        truth: "truth.json".into(),
        babble,
        babble_preview,
        utterances: entries,
        files: files
            .iter()
            .map(|(p, b)| (p.clone(), sha256_hex(b)))
            .collect(),
    };
    let bytes = (serde_json::to_string_pretty(&manifest)? + "\n").into_bytes();
    let hash = sha256_hex(&bytes);
    files.push((MANIFEST.into(), bytes));
    Ok((files, hash))
}

/// Writes the corpus under `dir` (created if missing) and returns the
/// manifest path.
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let (files, _) = render(corpus)?;
    for (rel, bytes) in &files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
    }
    Ok(dir.join(MANIFEST))
}

fn read_truth_csv(
    path: &Path,
    n_params: usize,
    source_dims: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let expected = truth_header(n_params, source_dims);
    if r.headers()?.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("header must be {}", expected.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let vals = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("not a number: {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    let n = rows.len();
    let a = Array2::from_shape_fn((n, n_params), |(i, j)| rows[i][j]);
    let s = Array2::from_shape_fn((n, source_dims), |(i, j)| rows[i][n_params + j]);
    Ok((a, s))
}

/// Loads a corpus from its directory or its manifest path.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let (dir, manifest_path) = if path.is_dir() {
        (path.to_path_buf(), path.join(MANIFEST))
    } else {
        (
            path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            path.to_path_buf(),
        )
    };
    let ctx = |what: &str| {
        let what = what.to_string();
        move |e: Error| Error::Context {
            context: what,
            source: Box::new(e),
        }
    };
    let manifest: CorpusManifest = serde_json::from_slice(&std::fs::read(&manifest_path)?)
        .map_err(|e| ctx("manifest")(e.into()))?;
    if manifest.format != CORPUS_FORMAT {
        return Err(Error::Format(format!(
            "expected {CORPUS_FORMAT}, found {}",
            manifest.format
        )));
    }
    let config = manifest.config.clone();
    config.validate()?;
    let truth: GroundTruth = serde_json::from_slice(&std::fs::read(dir.join(&manifest.truth))?)?;
    let mut utterances = Vec::with_capacity(manifest.utterances.len());
    for e in &manifest.utterances {
        let (layout, ema) = read_ema_csv(dir.join(&e.ema))?;
        if layout != truth.layout {
            return Err(Error::Format(format!(
                "{}: coil layout differs from ground truth",
                e.ema
            )));
        }
        let cepstra = read_features_bin(dir.join(&e.features_bin))?;
        let (artic_true, source) =
            read_truth_csv(&dir.join(&e.truth), config.n_params, config.source_dims)?;
        let audio = match &e.audio {
            Some(p) => Some(read_wav(dir.join(p))?),
            None => None,
        };
        if ema.len() != e.frames || cepstra.len() != e.frames || artic_true.nrows() != e.frames {
            return Err(Error::Format(format!(
                "utterance {} does not have {} frames everywhere",
                e.id, e.frames
            )));
        }
        utterances.push(Utterance {
            id: e.id.clone(),
            seed: e.seed,
            artic_true,
            source,
            ema,
            cepstra,
            audio,
        });
    }
    let babble = match &manifest.babble {
        Some(p) => {
            let bytes = std::fs::read(dir.join(p))?;
            if bytes.len() % 8 != 0 {
                return Err(Error::Format(format!("{p}: length is not a multiple of 8")));
            }
            let samples = bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            Some(AudioSignal::new(samples, SAMPLE_RATE_HZ)?)
        }
        None => None,
    };
    Ok(Corpus {
        config,
        truth,
        utterances,
        babble,
    })
}
