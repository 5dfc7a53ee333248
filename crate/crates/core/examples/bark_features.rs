//! Bark cepstra of a synthetic vowel-like signal, clean and with babble.
//!
//! cargo run --release --example bark_features

use std::f64::consts::PI;

use artivae::features::{bark_cepstrum, mix_at_snr_at, AudioSignal, N_CEPS};

fn main() -> artivae::Result<()> {
    let rate = 16000;
    let samples: Vec<f64> = (0..rate as usize)
        .map(|i| {
            let t = i as f64 / rate as f64;
            [(120.0, 0.4), (700.0, 0.2), (1200.0, 0.1), (2600.0, 0.05)]
                .iter()
                .map(|(f, a)| a * (2.0 * PI * f * t).sin())
                .sum()
        })
        .collect();
    let clean = AudioSignal::new(samples, rate)?;
    let cepstra = bark_cepstrum(&clean)?;
    println!(
        "{:.2} s of audio -> {} frames of {N_CEPS} coefficients",
        clean.duration_s(),
        cepstra.len()
    );

    let noise: Vec<f64> = (0..2 * rate as usize)
        .map(|i| ((i as f64 * 12.9898).sin() * 43758.5453).fract() - 0.5)
        .collect();
    let noise = AudioSignal::new(noise, rate)?;
    for snr in [10.0, 5.0, 0.0] {
        let mixed = mix_at_snr_at(&clean, &noise, snr, 1234)?;
        let noisy = bark_cepstrum(&mixed)?;
        let dist: f64 = cepstra
            .iter()
            .zip(&noisy)
            .map(|(a, b)| {
                a.coeffs
                    .iter()
                    .zip(&b.coeffs)
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / cepstra.len() as f64;
        println!("{snr:>4} dB: mean squared cepstral distance {dist:.3}");
    }

    let mid = &cepstra[cepstra.len() / 2];
    println!("frame at {:.2} s: {:.2?}", mid.time_s, &mid.coeffs[..6]);
    Ok(())
}
