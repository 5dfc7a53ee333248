//! Zero-phase low-pass filtering and decimation for raw EMA trajectories.

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::EmaFrame;

/// Second-order section, transposed direct form II, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn lowpass(cutoff_hz: f64, sample_rate_hz: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / sample_rate_hz;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b1 = (1.0 - cos) / a0;
        Self {
            b: [b1 / 2.0, b1, b1 / 2.0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    pub fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Filters in place starting from the steady state for a constant input
    /// equal to `x[0]`.
    fn run(&self, x: &mut [f64]) {
        let Some(&u) = x.first() else { return };
        let g = self.dc_gain();
        let mut z2 = (self.b[2] - self.a[1] * g) * u;
        let mut z1 = (self.b[1] - self.a[0] * g) * u + z2;
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + z1;
            z1 = self.b[1] * input - self.a[0] * y + z2;
            z2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }
}

/// Fourth-order Butterworth low-pass as two cascaded sections.
pub fn butterworth_lowpass4(cutoff_hz: f64, sample_rate_hz: f64) -> Result<[Biquad; 2]> {
    if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
        return Err(Error::InvalidInput(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, {}) Hz",
            sample_rate_hz / 2.0
        )));
    }
    let q1 = 1.0 / (2.0 * (PI / 8.0).cos());
    let q2 = 1.0 / (2.0 * (3.0 * PI / 8.0).cos());
    Ok([
        Biquad::lowpass(cutoff_hz, sample_rate_hz, q1),
        Biquad::lowpass(cutoff_hz, sample_rate_hz, q2),
    ])
}

/// Forward-backward filtering with odd-reflection padding.
pub fn filtfilt(sections: &[Biquad], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return x.to_vec();
    }
    let pad = (6 * sections.len() + 3).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    for s in sections {
        s.run(&mut ext);
    }
    ext.reverse();
    for s in sections {
        s.run(&mut ext);
    }
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Low-passes every coordinate at 20 Hz (zero phase) and keeps every other
/// frame, taking 200 Hz recordings to 100 Hz.
pub fn downsample_ema(frames: &[EmaFrame], sample_rate_hz: f64) -> Result<Vec<EmaFrame>> {
    if frames.is_empty() {
        return Ok(Vec::new());
    }
    let dims = frames[0].coords.len();
    if frames.iter().any(|f| f.coords.len() != dims) {
        return Err(Error::Shape("EMA frames have differing dimensions".into()));
    }
    let sections = butterworth_lowpass4(20.0, sample_rate_hz)?;
    let filtered: Vec<Vec<f64>> = (0..dims)
        .map(|d| {
            let track: Vec<f64> = frames.iter().map(|f| f.coords[d]).collect();
            filtfilt(&sections, &track)
        })
        .collect();
    Ok(frames
        .iter()
        .enumerate()
        .step_by(2)
        .map(|(i, f)| EmaFrame {
            time_s: f.time_s,
            coords: filtered.iter().map(|t| t[i]).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / fs).sin())
            .collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn unit_dc_gain() {
        for s in butterworth_lowpass4(20.0, 200.0).unwrap() {
            assert!((s.dc_gain() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_passes_unchanged() {
        let s = butterworth_lowpass4(20.0, 200.0).unwrap();
        let y = filtfilt(&s, &[3.25; 50]);
        assert!(y.iter().all(|v| (v - 3.25).abs() < 1e-12));
    }

    #[test]
    fn passband_and_stopband() {
        let s = butterworth_lowpass4(20.0, 200.0).unwrap();
        let low = tone(3.0, 200.0, 2000);
        let high = tone(60.0, 200.0, 2000);
        let yl = filtfilt(&s, &low);
        let yh = filtfilt(&s, &high);
        // interior only, away from the padded edges
        let r = 200..1800;
        assert!((rms(&yl[r.clone()]) / rms(&low[r.clone()]) - 1.0).abs() < 0.01);
        assert!(rms(&yh[r.clone()]) / rms(&high[r]) < 1e-3);
    }

    #[test]
    fn zero_phase() {
        let s = butterworth_lowpass4(20.0, 200.0).unwrap();
        let x = tone(5.0, 200.0, 1000);
        let y = filtfilt(&s, &x);
        let err = x[200..800]
            .iter()
            .zip(&y[200..800])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.01, "max deviation {err}");
    }

    #[test]
    fn halves_frame_rate() {
        let frames: Vec<EmaFrame> = (0..201)
            .map(|i| EmaFrame {
                time_s: i as f64 / 200.0,
                coords: vec![1.0, (i as f64 * 0.05).sin()],
            })
            .collect();
        let out = downsample_ema(&frames, 200.0).unwrap();
        assert_eq!(out.len(), 101);
        assert!((out[1].time_s - 0.01).abs() < 1e-12);
        assert!(out.iter().all(|f| (f.coords[0] - 1.0).abs() < 1e-12));
    }
}
