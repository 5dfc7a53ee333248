//! Bark-scale cepstral features, SNR-controlled noise mixing and frame
//! alignment with articulatory streams.
//!
//! Feature extraction per frame:
//!
//! ```text
//! 20 ms Hann window → |FFT|² → 18 triangular Bark bands → ln(max(E, 1e-10)) → orthonormal DCT-II
//! ```
//!
//! Band edges are uniform on the Bark scale (Traunmüller,
//! `z = 26.81·f/(1960+f) − 0.53`) from 0 Hz to Nyquist, and frames advance
//! by 10 ms.

mod io;

pub use io::{
    features_bin_bytes, pcm16, pcm16_quantize, read_features, read_features_bin, read_features_csv,
    read_wav, write_features_bin, write_features_csv, write_features_csv_to, write_wav,
    write_wav_to, FEATURE_FORMAT, FEATURE_MAGIC,
};

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::articulatory::ArticulatoryVector;
use crate::error::{Error, Result};

/// Number of cepstral coefficients per frame.
pub const N_CEPS: usize = 18;
/// Number of Bark bands (one log energy per coefficient).
pub const N_BANDS: usize = N_CEPS;
pub const WINDOW_MS: f64 = 20.0;
pub const HOP_MS: f64 = 10.0;
pub const ENERGY_FLOOR: f64 = 1e-10;
/// Articulatory/cepstral frames further apart than this are misaligned.
pub const MAX_ALIGN_OFFSET_S: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audio samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Mean square amplitude.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        self.power().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CepstralFrame {
    pub coeffs: [f64; N_CEPS],
    /// Centre of the analysis window.
    pub time_s: f64,
}

/// Cepstral frame paired with its articulatory vector and, for denoising,
/// the noisy counterpart of the same frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelFrame {
    pub x: CepstralFrame,
    pub a: ArticulatoryVector,
    pub x_noisy: Option<CepstralFrame>,
    pub artic_time_s: f64,
}

/// Traunmüller's Hz → Bark approximation.
pub fn hz_to_bark(f: f64) -> f64 {
    26.81 * f / (1960.0 + f) - 0.53
}

pub fn bark_to_hz(z: f64) -> f64 {
    1960.0 * (z + 0.53) / (26.28 - z)
}

/// Window and hop lengths in samples for a sample rate.
pub fn frame_geometry(sample_rate_hz: u32) -> (usize, usize) {
    let sr = sample_rate_hz as f64;
    let win = (sr * WINDOW_MS / 1000.0).round() as usize;
    let hop = (sr * HOP_MS / 1000.0).round() as usize;
    (win.max(2), hop.max(1))
}

/// Number of frames produced for a signal of `len` samples.
pub fn frame_count(len: usize, win: usize, hop: usize) -> usize {
    if len < win {
        0
    } else {
        (len - win) / hop + 1
    }
}

/// Triangular filterbank over the non-negative FFT bins.
#[derive(Debug, Clone)]
pub struct BarkFilterbank {
    /// bands × bins
    weights: Array2<f64>,
    edges_hz: Vec<f64>,
}

impl BarkFilterbank {
    pub fn new(sample_rate_hz: u32, fft_len: usize) -> Self {
        let nyquist = sample_rate_hz as f64 / 2.0;
        let (z_lo, z_hi) = (hz_to_bark(0.0), hz_to_bark(nyquist));
        let edges_hz: Vec<f64> = (0..N_BANDS + 2)
            .map(|i| {
                if i == 0 {
                    0.0
                } else if i == N_BANDS + 1 {
                    nyquist
                } else {
                    bark_to_hz(z_lo + (z_hi - z_lo) * i as f64 / (N_BANDS + 1) as f64)
                }
            })
            .collect();
        let n_bins = fft_len / 2 + 1;
        let bin_hz = sample_rate_hz as f64 / fft_len as f64;
        let weights = Array2::from_shape_fn((N_BANDS, n_bins), |(m, k)| {
            let f = k as f64 * bin_hz;
            let (lo, mid, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
            if f > lo && f <= mid {
                (f - lo) / (mid - lo)
            } else if f > mid && f < hi {
                (hi - f) / (hi - mid)
            } else {
                0.0
            }
        });
        Self { weights, edges_hz }
    }

    /// bands × bins
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    /// Lower edge, centre and upper edge frequencies: `edges[m]`,
    /// `edges[m+1]`, `edges[m+2]` for band `m`.
    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    pub fn apply(&self, power: &[f64]) -> [f64; N_BANDS] {
        let mut out = [0.0; N_BANDS];
        for (m, row) in self.weights.outer_iter().enumerate() {
            out[m] = row.iter().zip(power).map(|(w, p)| w * p).sum();
        }
        out
    }
}

/// Orthonormal DCT-II.
pub fn dct_ii(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let nf = n as f64;
    (0..n)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / nf).sqrt()
            } else {
                (2.0 / nf).sqrt()
            };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / nf).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Inverse of [`dct_ii`] (orthonormal DCT-III).
pub fn idct_ii(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let nf = n as f64;
    (0..n)
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(k, v)| {
                    let scale = if k == 0 {
                        (1.0 / nf).sqrt()
                    } else {
                        (2.0 / nf).sqrt()
                    };
                    scale * v * (PI * k as f64 * (i as f64 + 0.5) / nf).cos()
                })
                .sum()
        })
        .collect()
}

/// Reusable Bark-cepstrum extractor for one sample rate.
pub struct CepstrumAnalyzer {
    sample_rate_hz: u32,
    win: usize,
    hop: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filterbank: BarkFilterbank,
}

impl CepstrumAnalyzer {
    pub fn new(sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        let (win, hop) = frame_geometry(sample_rate_hz);
        // periodic Hann
        let window = (0..win)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / win as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(win);
        Ok(Self {
            sample_rate_hz,
            win,
            hop,
            window,
            fft,
            filterbank: BarkFilterbank::new(sample_rate_hz, win),
        })
    }

    pub fn window_len(&self) -> usize {
        self.win
    }

    pub fn hop_len(&self) -> usize {
        self.hop
    }

    pub fn filterbank(&self) -> &BarkFilterbank {
        &self.filterbank
    }

    /// Magnitude-squared spectrum (bins 0..=win/2) of the Hann-windowed frame
    /// starting at `start`.
    pub fn power_spectrum(&self, samples: &[f64], start: usize) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = samples[start..start + self.win]
            .iter()
            .zip(&self.window)
            .map(|(s, w)| Complex::new(s * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        buf[..self.win / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr())
            .collect()
    }

    /// Floored natural-log band energies for every frame.
    pub fn log_band_energies(&self, audio: &AudioSignal) -> Result<Vec<[f64; N_BANDS]>> {
        self.check(audio)?;
        let n = frame_count(audio.len(), self.win, self.hop);
        Ok((0..n)
            .map(|i| {
                let power = self.power_spectrum(&audio.samples, i * self.hop);
                self.filterbank
                    .apply(&power)
                    .map(|e| e.max(ENERGY_FLOOR).ln())
            })
            .collect())
    }

    pub fn extract(&self, audio: &AudioSignal) -> Result<Vec<CepstralFrame>> {
        let energies = self.log_band_energies(audio)?;
        let sr = self.sample_rate_hz as f64;
        Ok(energies
            .iter()
            .enumerate()
            .map(|(i, le)| {
                let c = dct_ii(le);
                let mut coeffs = [0.0; N_CEPS];
                coeffs.copy_from_slice(&c);
                CepstralFrame {
                    coeffs,
                    time_s: (i * self.hop) as f64 / sr + self.win as f64 / (2.0 * sr),
                }
            })
            .collect())
    }

    fn check(&self, audio: &AudioSignal) -> Result<()> {
        if audio.sample_rate_hz != self.sample_rate_hz {
            return Err(Error::InvalidInput(format!(
                "analyzer built for {} Hz, audio is {} Hz",
                self.sample_rate_hz, audio.sample_rate_hz
            )));
        }
        if audio.len() < self.win {
            return Err(Error::InvalidInput(format!(
                "audio has {} samples, shorter than one {}-sample window",
                audio.len(),
                self.win
            )));
        }
        Ok(())
    }
}

/// 18 Bark cepstral coefficients every 10 ms.
pub fn bark_cepstrum(audio: &AudioSignal) -> Result<Vec<CepstralFrame>> {
    CepstrumAnalyzer::new(audio.sample_rate_hz)?.extract(audio)
}

/// Adds `noise[offset..offset + clean.len()]`, scaled so that the
/// clean-to-noise power ratio over the whole clean signal is `snr_db`.
pub fn mix_at_snr_at(
    clean: &AudioSignal,
    noise: &AudioSignal,
    snr_db: f64,
    offset: usize,
) -> Result<AudioSignal> {
    if clean.sample_rate_hz != noise.sample_rate_hz {
        return Err(Error::InvalidInput(format!(
            "sample rates differ: {} vs {} Hz",
            clean.sample_rate_hz, noise.sample_rate_hz
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidInput("SNR must be finite".into()));
    }
    if offset + clean.len() > noise.len() {
        return Err(Error::InvalidInput(format!(
            "noise has {} samples, need {} from offset {offset}",
            noise.len(),
            clean.len()
        )));
    }
    let crop = &noise.samples[offset..offset + clean.len()];
    let clean_power = clean.power();
    let noise_power = crop.iter().map(|s| s * s).sum::<f64>() / crop.len().max(1) as f64;
    if clean_power == 0.0 {
        return Err(Error::InvalidInput(
            "clean signal is silent; SNR undefined".into(),
        ));
    }
    if noise_power == 0.0 {
        return Err(Error::InvalidInput(
            "noise segment is silent; SNR undefined".into(),
        ));
    }
    let gain = (clean_power / (noise_power * 10f64.powf(snr_db / 10.0))).sqrt();
    let samples = clean
        .samples
        .iter()
        .zip(crop)
        .map(|(c, n)| c + gain * n)
        .collect();
    AudioSignal::new(samples, clean.sample_rate_hz)
}

/// [`mix_at_snr_at`] with the noise crop offset drawn uniformly from `rng`.
pub fn mix_at_snr<R: Rng + ?Sized>(
    clean: &AudioSignal,
    noise: &AudioSignal,
    snr_db: f64,
    rng: &mut R,
) -> Result<AudioSignal> {
    if noise.len() < clean.len() {
        return Err(Error::InvalidInput(format!(
            "noise ({} samples) shorter than clean signal ({} samples)",
            noise.len(),
            clean.len()
        )));
    }
    let offset = rng.random_range(0..=noise.len() - clean.len());
    mix_at_snr_at(clean, noise, snr_db, offset)
}

/// Index-paired streams.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub frames: Vec<ParallelFrame>,
    /// Frames discarded from the longer stream.
    pub dropped: usize,
}

impl Alignment {
    /// Largest |cepstral time − articulatory time| over the pairs.
    pub fn max_time_offset(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| (f.x.time_s - f.artic_time_s).abs())
            .fold(0.0, f64::max)
    }
}

/// Pairs cepstral frames with 100 Hz articulatory vectors by index. The
/// articulatory stream starts at `artic_t0_s`.
pub fn align(
    cepstra: &[CepstralFrame],
    artic: &[ArticulatoryVector],
    artic_t0_s: f64,
) -> Alignment {
    let n = cepstra.len().min(artic.len());
    let dropped = cepstra.len().max(artic.len()) - n;
    let frames = cepstra
        .iter()
        .zip(artic)
        .enumerate()
        .map(|(i, (x, a))| ParallelFrame {
            x: *x,
            a: a.clone(),
            x_noisy: None,
            artic_time_s: artic_t0_s + i as f64 * HOP_MS / 1000.0,
        })
        .collect();
    Alignment { frames, dropped }
}
