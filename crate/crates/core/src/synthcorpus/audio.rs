use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::features::{
    hz_to_bark, idct_ii, pcm16_quantize, AudioSignal, CepstralFrame, CepstrumAnalyzer, N_BANDS,
};

use super::{
    derive_seed, gen_cepstra, gen_trajectories, rng, GroundTruth, Stream, SynthConfig,
    SAMPLE_RATE_HZ,
};

pub const BABBLE_TALKERS: usize = 6;
/// Overall RMS of the clean utterance audio.
pub const CLEAN_RMS: f64 = 0.05;

/// Envelope interpolation for one FFT bin: band index below and weight of
/// the band above, on the Bark scale.
struct Interp {
    lo: usize,
    frac: f64,
}

/// White noise shaped, frame by frame, by the band energies encoded in the
/// cepstra, overlap-added with a periodic Hann window. Frame `i` occupies
/// samples `i·hop .. i·hop + win`, so the output has `(F + 1)·hop` samples
/// and analysis of it yields exactly `F` frames at the same times.
pub fn synthesize_audio(cepstra: &[CepstralFrame], rng: &mut impl Rng) -> Result<Vec<f64>> {
    let analyzer = CepstrumAnalyzer::new(SAMPLE_RATE_HZ)?;
    let win = analyzer.window_len();
    let hop = analyzer.hop_len();
    let n_bins = win / 2 + 1;
    let fb = analyzer.filterbank();
    let sums: Vec<f64> = fb.weights().outer_iter().map(|r| r.sum()).collect();
    if sums.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidInput("filterbank has an empty band".into()));
    }
    let centres: Vec<f64> = (0..N_BANDS)
        .map(|m| hz_to_bark(fb.edges_hz()[m + 1]))
        .collect();
    let interp: Vec<Interp> = (0..n_bins)
        .map(|k| {
            let z = hz_to_bark(k as f64 * SAMPLE_RATE_HZ as f64 / win as f64);
            if z <= centres[0] {
                Interp { lo: 0, frac: 0.0 }
            } else if z >= centres[N_BANDS - 1] {
                Interp {
                    lo: N_BANDS - 1,
                    frac: 0.0,
                }
            } else {
                let lo = centres.iter().rposition(|&c| c <= z).unwrap();
                Interp {
                    lo,
                    frac: (z - centres[lo]) / (centres[lo + 1] - centres[lo]),
                }
            }
        })
        .collect();
    let window: Vec<f64> = (0..win)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / win as f64).cos())
        .collect();
    let ifft = FftPlanner::new().plan_fft_inverse(win);

    let mut out = vec![0.0; (cepstra.len() + 1) * hop];
    let mut buf = vec![Complex::new(0.0, 0.0); win];
    for (i, frame) in cepstra.iter().enumerate() {
        let level: Vec<f64> = idct_ii(&frame.coeffs)
            .iter()
            .zip(&sums)
            .map(|(e, s)| e - s.ln())
            .collect();
        for (k, ip) in interp.iter().enumerate() {
            let log_density = if ip.frac == 0.0 {
                level[ip.lo]
            } else {
                (1.0 - ip.frac) * level[ip.lo] + ip.frac * level[ip.lo + 1]
            };
            let amp = (0.5 * log_density).exp();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = if k == 0 || k == win / 2 {
                0.0
            } else {
                StandardNormal.sample(rng)
            };
            buf[k] = Complex::new(re, im) * amp;
        }
        for k in n_bins..win {
            buf[k] = buf[win - k].conj();
        }
        ifft.process(&mut buf);
        for (j, (c, w)) in buf.iter().zip(&window).enumerate() {
            out[i * hop + j] += c.re * w;
        }
    }
    Ok(out)
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|s| s * s).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

/// Unit-RMS sum of [`BABBLE_TALKERS`] independent synthetic talkers, each
/// the audio of its own corpus (own spectral map and trajectories).
pub fn gen_babble(config: &SynthConfig, n_samples: usize) -> Result<AudioSignal> {
    let hop = SAMPLE_RATE_HZ as usize / 100;
    let frames = (n_samples / hop).max(1 + 10 * (config.n_params + config.source_dims));
    let mut sum = vec![0.0; n_samples];
    for k in 0..BABBLE_TALKERS {
        let talker = SynthConfig {
            n_utterances: 1,
            frames_per_utterance: frames,
            seed: derive_seed(config.seed, 1_000_000 + k as u64),
            audio: false,
            ..config.clone()
        };
        let truth = GroundTruth::new(&talker)?;
        let traj = gen_trajectories(&talker)?;
        let cepstra = gen_cepstra(
            &truth,
            traj.artic[0].view(),
            traj.source[0].view(),
            talker.cepstral_noise,
            &mut rng(talker.seed, Stream::CepstralNoise),
        )?;
        let audio = synthesize_audio(&cepstra, &mut rng(talker.seed, Stream::Audio))?;
        let gain = 1.0 / rms(&audio);
        for (s, a) in sum.iter_mut().zip(&audio) {
            *s += gain * a;
        }
    }
    let r = rms(&sum);
    if r == 0.0 {
        return Err(Error::InvalidInput("silent babble".into()));
    }
    AudioSignal::new(sum.iter().map(|s| s / r).collect(), SAMPLE_RATE_HZ)
}

/// Clean audio per utterance (one shared gain, overall RMS [`CLEAN_RMS`],
/// quantized to 16-bit PCM) and a babble track one second longer than the
/// whole corpus.
pub fn gen_noise_and_audio(
    config: &SynthConfig,
    cepstra: &[&[CepstralFrame]],
    seeds: &[u64],
) -> Result<(Vec<AudioSignal>, AudioSignal)> {
    if cepstra.len() != seeds.len() {
        return Err(Error::Shape("one seed per utterance required".into()));
    }
    let raw = cepstra
        .iter()
        .zip(seeds)
        .map(|(c, &seed)| synthesize_audio(c, &mut rng(seed, Stream::Audio)))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = raw.iter().map(Vec::len).sum();
    let energy: f64 = raw.iter().flatten().map(|s| s * s).sum();
    let gain = CLEAN_RMS / (energy / total.max(1) as f64).sqrt();
    let clean = raw
        .into_iter()
        .map(|r| {
            AudioSignal::new(
                r.into_iter().map(|s| pcm16_quantize(gain * s)).collect(),
                SAMPLE_RATE_HZ,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let babble = gen_babble(config, total + SAMPLE_RATE_HZ as usize)?;
    Ok((clean, babble))
}
