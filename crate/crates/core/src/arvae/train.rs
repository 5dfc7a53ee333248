use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ParallelFrame, N_CEPS};

use super::adam::Adam;
use super::loss::{loss_and_grads, Batch};
use super::network::{reconstruct_batch, Architecture, VaeParams, CANONICAL_HIDDEN};

pub const CHECKPOINT_FORMAT: &str = "artivae-vae-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub split_fraction: f64,
    /// Feed `x_noisy` to the encoder and reconstruct the clean `x`.
    pub denoising: bool,
    pub hidden: Vec<usize>,
    /// Defaults to twice the articulatory dimension.
    pub latent_dim: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            split_fraction: 0.8,
            denoising: false,
            hidden: CANONICAL_HIDDEN.to_vec(),
            latent_dim: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "split fraction {} outside (0, 1)",
                self.split_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch size must be at least 1".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "alpha must be nonnegative, got {}",
                self.alpha
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput("learning rate must be positive".into()));
        }
        Ok(())
    }

    /// `"vae"` for α = 0, `"ar-vae"` otherwise.
    pub fn label(&self) -> &'static str {
        model_label(self.alpha)
    }
}

pub fn model_label(alpha: f64) -> &'static str {
    if alpha == 0.0 {
        "vae"
    } else {
        "ar-vae"
    }
}

/// Per-column affine standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Standardizer {
    /// Columns with (near) zero spread keep unit scale.
    pub fn fit(data: ArrayView2<'_, f64>) -> Self {
        let n = data.nrows();
        let mean = data
            .mean_axis(Axis(0))
            .unwrap_or_else(|| Array1::zeros(data.ncols()));
        let scale = Array1::from_shape_fn(data.ncols(), |j| {
            if n < 2 {
                return 1.0;
            }
            let var = data
                .column(j)
                .iter()
                .map(|v| (v - mean[j]).powi(2))
                .sum::<f64>()
                / (n - 1) as f64;
            let sd = var.sqrt();
            if sd > 1e-12 * (1.0 + mean[j].abs()) {
                sd
            } else {
                1.0
            }
        });
        Self { mean, scale }
    }

    pub fn apply(&self, data: ArrayView2<'_, f64>) -> Array2<f64> {
        (&data - &self.mean.view().insert_axis(Axis(0))) / self.scale.view().insert_axis(Axis(0))
    }

    pub fn invert(&self, data: ArrayView2<'_, f64>) -> Array2<f64> {
        &data * &self.scale.view().insert_axis(Axis(0)) + self.mean.view().insert_axis(Axis(0))
    }
}

/// Raw (unstandardized) matrices extracted from parallel frames.
#[derive(Debug, Clone)]
pub struct FrameMatrices {
    pub x_in: Array2<f64>,
    pub x_target: Array2<f64>,
    pub artic: Array2<f64>,
}

impl FrameMatrices {
    pub fn from_frames(frames: &[ParallelFrame], denoising: bool) -> Result<Self> {
        let n = frames.len();
        let n_art = frames.first().map(|f| f.a.len()).unwrap_or(0);
        let mut x_in = Array2::zeros((n, N_CEPS));
        let mut x_target = Array2::zeros((n, N_CEPS));
        let mut artic = Array2::zeros((n, n_art));
        for (i, f) in frames.iter().enumerate() {
            if f.a.len() != n_art {
                return Err(Error::Shape(format!(
                    "frame {i} has {} articulatory parameters, expected {n_art}",
                    f.a.len()
                )));
            }
            let input = if denoising {
                f.x_noisy.as_ref().ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "denoising mode but frame {i} has no noisy features"
                    ))
                })?
            } else {
                &f.x
            };
            for j in 0..N_CEPS {
                x_in[[i, j]] = input.coeffs[j];
                x_target[[i, j]] = f.x.coeffs[j];
            }
            for (j, &v) in f.a.params().iter().enumerate() {
                artic[[i, j]] = v;
            }
        }
        Ok(Self {
            x_in,
            x_target,
            artic,
        })
    }

    fn rows(&self, idx: &[usize]) -> Self {
        Self {
            x_in: self.x_in.select(Axis(0), idx),
            x_target: self.x_target.select(Axis(0), idx),
            artic: self.artic.select(Axis(0), idx),
        }
    }
}

/// Independent RNG stream per purpose so that changing α never shifts the
/// split, initialization, batch order, or noise draws.
#[derive(Clone, Copy)]
enum Stream {
    Split = 0,
    Init = 1,
    Shuffle = 2,
    Noise = 3,
}

fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seeded shuffle-split into (train, test) indices.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed, Stream::Split));
    let n_train = ((n as f64) * fraction).round() as usize;
    let n_train = n_train.clamp(1, n.saturating_sub(1).max(1));
    let test = idx.split_off(n_train);
    (idx, test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: VaeParams,
    /// Test reconstruction MSE after each epoch, in raw feature units.
    pub curve: Vec<f64>,
    pub input_scaler: Standardizer,
    pub target_scaler: Standardizer,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Mean over frames of `‖x_target − x̂‖² / F`, reconstructing through the
/// posterior mean.
pub fn reconstruction_mse(
    params: &VaeParams,
    input_scaler: &Standardizer,
    target_scaler: &Standardizer,
    x_in: ArrayView2<'_, f64>,
    x_target: ArrayView2<'_, f64>,
) -> f64 {
    let recon =
        target_scaler.invert(reconstruct_batch(params, input_scaler.apply(x_in).view()).view());
    let diff = &x_target - &recon;
    diff.iter().map(|d| d * d).sum::<f64>() / diff.len().max(1) as f64
}

pub fn train(config: &TrainConfig, data: &[ParallelFrame]) -> Result<TrainOutcome> {
    train_from(config, data, None)
}

/// Trains from `init` (same architecture) when given, otherwise from a
/// seeded initialization.
pub fn train_from(
    config: &TrainConfig,
    data: &[ParallelFrame],
    init: Option<&VaeParams>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if data.len() < 10 * config.batch_size {
        return Err(Error::InvalidInput(format!(
            "training needs at least {} frames, got {}",
            10 * config.batch_size,
            data.len()
        )));
    }
    let all = FrameMatrices::from_frames(data, config.denoising)?;
    let n_art = all.artic.ncols();
    let arch = Architecture {
        input_dim: N_CEPS,
        hidden: config.hidden.clone(),
        latent_dim: config.latent_dim.unwrap_or(2 * n_art),
        constrained_dim: n_art,
    };
    arch.validate()?;

    let (train_idx, test_idx) = split_indices(data.len(), config.split_fraction, config.seed);
    let train_raw = all.rows(&train_idx);
    let test_raw = all.rows(&test_idx);
    let input_scaler = Standardizer::fit(train_raw.x_in.view());
    let target_scaler = Standardizer::fit(train_raw.x_target.view());
    let train_set = Batch {
        x_in: input_scaler.apply(train_raw.x_in.view()),
        x_target: target_scaler.apply(train_raw.x_target.view()),
        artic: train_raw.artic,
    };

    let mut params = match init {
        Some(p) => {
            if p.arch != arch {
                return Err(Error::InvalidInput(
                    "initial parameters have a different architecture".into(),
                ));
            }
            p.clone()
        }
        None => VaeParams::init(&arch, &mut rng_for(config.seed, Stream::Init))?,
    };
    let mut adam = Adam::new(
        params.tensors().iter().map(|t| t.len()),
        config.learning_rate,
    );
    let mut shuffle_rng = rng_for(config.seed, Stream::Shuffle);
    let mut noise_rng = rng_for(config.seed, Stream::Noise);

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = Batch {
                x_in: train_set.x_in.select(Axis(0), chunk),
                x_target: train_set.x_target.select(Axis(0), chunk),
                artic: train_set.artic.select(Axis(0), chunk),
            };
            let eps = Array2::from_shape_simple_fn((chunk.len(), arch.latent_dim), || {
                StandardNormal.sample(&mut noise_rng)
            });
            let wrap = |e: Error| Error::Training {
                epoch,
                batch: b,
                source: Box::new(e),
            };
            let (_, grads) =
                loss_and_grads(&params, &batch, config.alpha, eps.view()).map_err(wrap)?;
            adam.step(params.tensors_mut(), grads.tensors());
            if !params.is_finite() {
                return Err(wrap(Error::NonFinite("parameters after update".into())));
            }
        }
        let mse = reconstruction_mse(
            &params,
            &input_scaler,
            &target_scaler,
            test_raw.x_in.view(),
            test_raw.x_target.view(),
        );
        if !mse.is_finite() {
            return Err(Error::Training {
                epoch,
                batch: order.len().div_ceil(config.batch_size),
                source: Box::new(Error::NonFinite("test reconstruction".into())),
            });
        }
        curve.push(mse);
    }

    Ok(TrainOutcome {
        params,
        curve,
        input_scaler,
        target_scaler,
        train_indices: train_idx,
        test_indices: test_idx,
    })
}

/// Serialized trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub label: String,
    pub alpha: f64,
    pub seed: u64,
    pub denoising: bool,
    pub latent_dim: usize,
    pub constrained_dim: usize,
    pub input_scaler: Standardizer,
    pub target_scaler: Standardizer,
    pub params: VaeParams,
    pub curve: Vec<f64>,
}

impl Checkpoint {
    pub fn new(config: &TrainConfig, outcome: &TrainOutcome) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            label: config.label().into(),
            alpha: config.alpha,
            seed: config.seed,
            denoising: config.denoising,
            latent_dim: outcome.params.arch.latent_dim,
            constrained_dim: outcome.params.arch.constrained_dim,
            input_scaler: outcome.input_scaler.clone(),
            target_scaler: outcome.target_scaler.clone(),
            params: outcome.params.clone(),
            curve: outcome.curve.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ck: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!(
                "expected {CHECKPOINT_FORMAT}, found {}",
                ck.format
            )));
        }
        Ok(ck)
    }
}

/// Writes `epoch,test_mse` rows (epochs numbered from 1).
pub fn write_curve_csv(path: impl AsRef<Path>, curve: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "test_mse"])?;
    for (i, v) in curve.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
