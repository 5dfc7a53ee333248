//! Seeded synthetic parallel corpora: articulatory ground truth, EMA coil
//! trajectories, cepstral features, audio and babble noise.
//!
//! EMA frames are an exact linear function of the articulatory parameters
//! (plus coil noise) through a fixed generator whose columns are mutually
//! orthogonal and laid out so that each guided-PCA stage isolates exactly
//! one parameter. Cepstra come from a seeded one-hidden-layer tanh network
//! of the articulatory and "source" trajectories.

mod audio;
mod store;

pub use audio::{gen_babble, gen_noise_and_audio, synthesize_audio, BABBLE_TALKERS};
pub use store::{load_corpus, write_corpus, CorpusManifest, UtteranceEntry, CORPUS_FORMAT};

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::articulatory::{ArticulatoryVector, CoilLayout, EmaFrame, GuidedPcaModel};
use crate::error::{Error, Result};
use crate::features::{align, AudioSignal, CepstralFrame, ParallelFrame, HOP_MS, N_CEPS};

/// Frames between articulatory target switches (150 ms at 100 Hz).
pub const TARGET_PERIOD_FRAMES: usize = 15;
pub const FRAME_RATE_HZ: f64 = 100.0;
pub const SAMPLE_RATE_HZ: u32 = 16000;
pub const SPECTRAL_HIDDEN: usize = 64;
/// Natural frequency of the critically damped articulator response (rad/s).
pub const OMEGA: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_utterances: usize,
    pub frames_per_utterance: usize,
    pub n_params: usize,
    pub source_dims: usize,
    pub seed: u64,
    pub nonlinearity_scale: f64,
    pub coil_noise: f64,
    pub cepstral_noise: f64,
    /// Also synthesize per-utterance audio and a babble track.
    pub audio: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_utterances: 25,
            frames_per_utterance: 200,
            n_params: 6,
            source_dims: 2,
            seed: 1,
            nonlinearity_scale: 1.0,
            coil_noise: 0.05,
            cepstral_noise: 0.01,
            audio: true,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_params != 6 && self.n_params != 7 {
            return Err(Error::InvalidInput(format!(
                "number of articulatory parameters must be 6 or 7, got {}",
                self.n_params
            )));
        }
        if self.n_utterances == 0 || self.frames_per_utterance < 2 || self.source_dims == 0 {
            return Err(Error::InvalidInput(
                "utterance count, frames per utterance (≥ 2) and source dims must be positive"
                    .into(),
            ));
        }
        let dims = self.n_params + self.source_dims;
        if self.total_frames() < 10 * dims {
            return Err(Error::InvalidInput(format!(
                "corpus of {} frames too small for {dims} trajectories",
                self.total_frames()
            )));
        }
        if !(self.nonlinearity_scale > 0.0 && self.nonlinearity_scale.is_finite()) {
            return Err(Error::InvalidInput(
                "nonlinearity scale must be positive".into(),
            ));
        }
        if !(self.coil_noise >= 0.0 && self.cepstral_noise >= 0.0) {
            return Err(Error::InvalidInput(
                "noise levels must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn total_frames(&self) -> usize {
        self.n_utterances * self.frames_per_utterance
    }

    pub fn layout(&self) -> CoilLayout {
        CoilLayout::standard(self.n_params == 7)
    }
}

/// SplitMix64 finalizer of `seed` combined with `index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy)]
pub(crate) enum Stream {
    ArticTargets = 0,
    SourceTargets = 1,
    CoilNoise = 2,
    CepstralNoise = 3,
    Audio = 4,
    SpectralMap = 5,
}

pub(crate) fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream as u64);
    r
}

/// `x = b2 + W2ᵀ tanh(scale · (W1ᵀ [a; s] + b1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMap {
    /// inputs × hidden
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// hidden × 18
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub scale: f64,
}

impl SpectralMap {
    pub fn new(n_inputs: usize, scale: f64, seed: u64) -> Self {
        let mut r = rng(seed, Stream::SpectralMap);
        let mut normal = |sd: f64| -> f64 {
            let e: f64 = StandardNormal.sample(&mut r);
            sd * e
        };
        let w1 = Array2::from_shape_simple_fn((n_inputs, SPECTRAL_HIDDEN), || {
            normal(1.0 / (n_inputs as f64).sqrt())
        });
        let b1 = Array1::from_shape_simple_fn(SPECTRAL_HIDDEN, || normal(0.3));
        let mut w2 = Array2::zeros((SPECTRAL_HIDDEN, N_CEPS));
        for k in 0..N_CEPS {
            let amp = 3.0 / (1.0 + 0.1 * k as f64);
            for h in 0..SPECTRAL_HIDDEN {
                w2[[h, k]] = normal(amp / (0.4 * SPECTRAL_HIDDEN as f64).sqrt());
            }
        }
        let mut b2 = Array1::zeros(N_CEPS);
        b2[1] = 2.0;
        Self {
            w1,
            b1,
            w2,
            b2,
            scale,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.w1.nrows()
    }

    /// One output row per input row.
    pub fn eval(&self, inputs: ArrayView2<'_, f64>) -> Array2<f64> {
        let pre = (inputs.dot(&self.w1) + &self.b1) * self.scale;
        pre.mapv(f64::tanh).dot(&self.w2) + &self.b2
    }
}

/// Fixed generator: EMA frame `y = M a + mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub layout: CoilLayout,
    /// D × N
    pub generator: Array2<f64>,
    pub mean: Array1<f64>,
    pub spectral: SpectralMap,
}

impl GroundTruth {
    pub fn new(config: &SynthConfig) -> Result<Self> {
        config.validate()?;
        let (generator, mean) = ema_generator(config.n_params);
        Ok(Self {
            layout: config.layout(),
            generator,
            mean,
            spectral: SpectralMap::new(
                config.n_params + config.source_dims,
                config.nonlinearity_scale,
                config.seed,
            ),
        })
    }
}

/// Generator matrix (standard layout, D × N) and mean frame.
///
/// Parameter columns are JH, TB, TD, TT, LP, LH, (VL). Jaw height also moves
/// the tongue and lips; the tongue tip also follows the tongue body.
pub fn ema_generator(n_params: usize) -> (Array2<f64>, Array1<f64>) {
    let layout = CoilLayout::standard(n_params == 7);
    let dims = layout.dims();
    let mut m = Array2::zeros((dims, n_params));
    let mut set = |coil: [usize; 2], param: usize, v: [f64; 2]| {
        m[[coil[0], param]] = v[0];
        m[[coil[1], param]] = v[1];
    };
    // JH
    set(layout.jaw, 0, [0.8, -2.0]);
    set(layout.tongue_tip, 0, [0.48, 0.64]);
    set(layout.tongue_blade, 0, [0.38, -0.62]);
    set(layout.tongue_dorsum, 0, [0.38, -0.62]);
    set(layout.upper_lip, 0, [0.0, 1.2]);
    set(layout.lower_lip, 0, [-0.4, 0.4]);
    // TB
    set(layout.tongue_tip, 1, [0.36, 0.48]);
    set(layout.tongue_blade, 1, [1.0, 1.0]);
    set(layout.tongue_dorsum, 1, [1.0, 1.0]);
    // TD
    set(layout.tongue_blade, 2, [0.5, 0.5]);
    set(layout.tongue_dorsum, 2, [-0.5, -0.5]);
    // TT
    set(layout.tongue_tip, 3, [-1.2, 0.9]);
    // LP
    set(layout.upper_lip, 4, [1.2, 0.3]);
    set(layout.lower_lip, 4, [1.0, 0.1]);
    // LH
    set(layout.upper_lip, 5, [0.0, 0.5]);
    set(layout.lower_lip, 5, [0.0, -1.5]);
    if let Some(vl) = layout.velum {
        set(vl, 6, [0.7, 1.1]);
    }
    let base = [
        -8.0, -22.0, 12.0, -5.0, 2.0, 4.0, -14.0, 9.0, 14.0, 11.0, 12.0, -13.0, -30.0, 6.0,
    ];
    (m, Array1::from_iter(base[..dims].iter().copied()))
}

/// Standardized articulatory and source trajectories, one matrix per
/// utterance (frames × dims).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    pub artic: Vec<Array2<f64>>,
    pub source: Vec<Array2<f64>>,
}

/// Critically damped second-order response to a piecewise-constant target,
/// sampled at 100 Hz.
pub fn damped_response(targets: &[f64], n_frames: usize) -> Vec<f64> {
    const SUBSTEPS: usize = 10;
    let dt = 1.0 / (FRAME_RATE_HZ * SUBSTEPS as f64);
    let mut x = targets[0];
    let mut v = 0.0;
    let mut out = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        out.push(x);
        let target = targets[i / TARGET_PERIOD_FRAMES];
        for _ in 0..SUBSTEPS {
            v += dt * (OMEGA * OMEGA * (target - x) - 2.0 * OMEGA * v);
            x += dt * v;
        }
    }
    out
}

fn raw_trajectories(n_dims: usize, n_frames: usize, rng: &mut impl Rng) -> Array2<f64> {
    let n_targets = n_frames.div_ceil(TARGET_PERIOD_FRAMES) + 1;
    let mut out = Array2::zeros((n_frames, n_dims));
    for d in 0..n_dims {
        let targets: Vec<f64> = (0..n_targets)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        for (i, v) in damped_response(&targets, n_frames).into_iter().enumerate() {
            out[[i, d]] = v;
        }
    }
    out
}

/// Centres the columns and makes their sample covariance exactly the
/// identity (Cholesky whitening, so column `k` mixes only columns `≤ k`).
pub fn whiten(data: &Array2<f64>) -> Result<Array2<f64>> {
    let n = data.nrows();
    let d = data.ncols();
    let mean = data
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::InvalidInput("no frames".into()))?;
    let centred = data - &mean;
    let cov = centred.t().dot(&centred) / (n as f64 - 1.0);
    let cov = nalgebra::DMatrix::from_fn(d, d, |i, j| cov[[i, j]]);
    let chol = nalgebra::Cholesky::new(cov)
        .ok_or_else(|| Error::InvalidInput("trajectory covariance is singular".into()))?;
    let l = chol.l();
    // rows xᵀ → (L⁻¹ x)ᵀ
    let x = nalgebra::DMatrix::from_fn(d, n, |i, j| centred[[j, i]]);
    let w = l
        .solve_lower_triangular(&x)
        .ok_or_else(|| Error::InvalidInput("trajectory covariance is singular".into()))?;
    Ok(Array2::from_shape_fn((n, d), |(i, j)| w[(j, i)]))
}

pub fn utterance_seed(config: &SynthConfig, index: usize) -> u64 {
    derive_seed(config.seed, index as u64)
}

pub fn gen_trajectories(config: &SynthConfig) -> Result<Trajectories> {
    config.validate()?;
    let f = config.frames_per_utterance;
    let parts: Vec<Array2<f64>> = (0..config.n_utterances)
        .map(|u| {
            let seed = utterance_seed(config, u);
            let a = raw_trajectories(config.n_params, f, &mut rng(seed, Stream::ArticTargets));
            let s = raw_trajectories(config.source_dims, f, &mut rng(seed, Stream::SourceTargets));
            concatenate![Axis(1), a, s]
        })
        .collect();
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    let all = whiten(&concatenate(Axis(0), &views).expect("equal widths"))?;
    let n = config.n_params;
    let mut artic = Vec::with_capacity(config.n_utterances);
    let mut source = Vec::with_capacity(config.n_utterances);
    for u in 0..config.n_utterances {
        let block = all.slice(s![u * f..(u + 1) * f, ..]);
        artic.push(block.slice(s![.., ..n]).to_owned());
        source.push(block.slice(s![.., n..]).to_owned());
    }
    Ok(Trajectories { artic, source })
}

/// Frame `i` is at `(i + 1) · 10 ms`, the centre of cepstral frame `i`.
pub fn frame_time(i: usize) -> f64 {
    (i + 1) as f64 * HOP_MS / 1000.0
}

pub fn gen_ema(
    truth: &GroundTruth,
    a_true: ArrayView2<'_, f64>,
    noise_sd: f64,
    rng: &mut impl Rng,
) -> Vec<EmaFrame> {
    let y = a_true.dot(&truth.generator.t()) + &truth.mean;
    y.outer_iter()
        .enumerate()
        .map(|(i, row)| EmaFrame {
            time_s: frame_time(i),
            coords: row
                .iter()
                .map(|v| {
                    if noise_sd > 0.0 {
                        {
                            let e: f64 = StandardNormal.sample(rng);
                            v + noise_sd * e
                        }
                    } else {
                        *v
                    }
                })
                .collect(),
        })
        .collect()
}

pub fn gen_cepstra(
    truth: &GroundTruth,
    a_true: ArrayView2<'_, f64>,
    source: ArrayView2<'_, f64>,
    noise_sd: f64,
    rng: &mut impl Rng,
) -> Result<Vec<CepstralFrame>> {
    let inputs = concatenate![Axis(1), a_true, source];
    if inputs.ncols() != truth.spectral.n_inputs() {
        return Err(Error::Shape(format!(
            "spectral map takes {} inputs, got {}",
            truth.spectral.n_inputs(),
            inputs.ncols()
        )));
    }
    let x = truth.spectral.eval(inputs.view());
    let noise =
        Normal::new(0.0, noise_sd.max(0.0)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(x.outer_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut coeffs = [0.0; N_CEPS];
            for (c, v) in coeffs.iter_mut().zip(row) {
                *c = if noise_sd > 0.0 {
                    v + noise.sample(rng)
                } else {
                    *v
                };
            }
            CepstralFrame {
                coeffs,
                time_s: frame_time(i),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub seed: u64,
    /// frames × N
    pub artic_true: Array2<f64>,
    /// frames × source dims
    pub source: Array2<f64>,
    pub ema: Vec<EmaFrame>,
    pub cepstra: Vec<CepstralFrame>,
    pub audio: Option<AudioSignal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub config: SynthConfig,
    pub truth: GroundTruth,
    pub utterances: Vec<Utterance>,
    /// Unit RMS.
    pub babble: Option<AudioSignal>,
}

impl Corpus {
    pub fn n_frames(&self) -> usize {
        self.utterances.iter().map(|u| u.cepstra.len()).sum()
    }

    pub fn layout(&self) -> &CoilLayout {
        &self.truth.layout
    }

    pub fn all_ema(&self) -> Vec<EmaFrame> {
        self.utterances
            .iter()
            .flat_map(|u| u.ema.iter().cloned())
            .collect()
    }

    pub fn all_artic_true(&self) -> Array2<f64> {
        let views: Vec<_> = self
            .utterances
            .iter()
            .map(|u| u.artic_true.view())
            .collect();
        concatenate(Axis(0), &views).expect("equal widths")
    }

    /// Cepstra paired with articulatory vectors estimated by `model` from
    /// the EMA stream, utterance by utterance.
    pub fn parallel_frames(&self, model: &GuidedPcaModel) -> Result<Vec<ParallelFrame>> {
        let mut out = Vec::with_capacity(self.n_frames());
        for u in &self.utterances {
            let a = model.ema_to_artic_batch(&u.ema)?;
            let vectors = a
                .outer_iter()
                .map(|r| ArticulatoryVector::new(r.to_vec()))
                .collect::<Result<Vec<_>>>()?;
            out.extend(align(&u.cepstra, &vectors, frame_time(0)).frames);
        }
        Ok(out)
    }

    /// SHA-256 of the manifest that [`write_corpus`] produces for this corpus.
    pub fn manifest_hash(&self) -> Result<String> {
        Ok(store::render(self)?.1)
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Full corpus in memory.
pub fn generate(config: &SynthConfig) -> Result<Corpus> {
    let truth = GroundTruth::new(config)?;
    let traj = gen_trajectories(config)?;
    let mut utterances = Vec::with_capacity(config.n_utterances);
    for (u, (a, s)) in traj.artic.into_iter().zip(traj.source).enumerate() {
        let seed = utterance_seed(config, u);
        let ema = gen_ema(
            &truth,
            a.view(),
            config.coil_noise,
            &mut rng(seed, Stream::CoilNoise),
        );
        let cepstra = gen_cepstra(
            &truth,
            a.view(),
            s.view(),
            config.cepstral_noise,
            &mut rng(seed, Stream::CepstralNoise),
        )?;
        utterances.push(Utterance {
            id: format!("utt{u:04}"),
            seed,
            artic_true: a,
            source: s,
            ema,
            cepstra,
            audio: None,
        });
    }
    let babble = if config.audio {
        let cepstra: Vec<&[CepstralFrame]> =
            utterances.iter().map(|u| u.cepstra.as_slice()).collect();
        let seeds: Vec<u64> = utterances.iter().map(|u| u.seed).collect();
        let (clean, babble) = gen_noise_and_audio(config, &cepstra, &seeds)?;
        for (u, a) in utterances.iter_mut().zip(clean) {
            u.audio = Some(a);
        }
        Some(babble)
    } else {
        None
    };
    Ok(Corpus {
        config: config.clone(),
        truth,
        utterances,
        babble,
    })
}
