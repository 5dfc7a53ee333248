//! Encoder/decoder MLPs with hand-written reverse-mode gradients.
//!
//! All batched computations keep frames along rows. Weight matrices are
//! stored `inputs × outputs` so a layer is `H·W + b`.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::N_CEPS;

/// Posterior and likelihood log-variances are clamped to this range.
pub const LOGVAR_MIN: f64 = -15.0;
pub const LOGVAR_MAX: f64 = 15.0;

pub const CANONICAL_HIDDEN: [usize; 4] = [256, 128, 64, 32];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    /// Encoder hidden widths; the decoder uses them reversed.
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    /// Number of leading latent entries tied to articulatory parameters.
    pub constrained_dim: usize,
}

impl Architecture {
    /// 18 → 256 → 128 → 64 → 32 → 2N and back.
    pub fn canonical(n_params: usize) -> Self {
        Self {
            input_dim: N_CEPS,
            hidden: CANONICAL_HIDDEN.to_vec(),
            latent_dim: 2 * n_params,
            constrained_dim: n_params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent_dim == 0 {
            return Err(Error::InvalidInput(
                "input and latent sizes must be positive".into(),
            ));
        }
        if self.constrained_dim >= self.latent_dim {
            return Err(Error::InvalidInput(format!(
                "constrained prefix ({}) must be smaller than the latent size ({})",
                self.constrained_dim, self.latent_dim
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidInput(
                "hidden layers must be non-empty".into(),
            ));
        }
        Ok(())
    }
}

/// Affine layer `H·W + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// inputs × outputs
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Glorot-uniform weights, zero biases.
    fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        Self {
            weight: Array2::from_shape_simple_fn((inputs, outputs), || dist.sample(rng)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn forward(&self, input: ArrayView2<'_, f64>) -> Array2<f64> {
        input.dot(&self.weight) + &self.bias
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to `input`.
    fn backward(
        &self,
        input: ArrayView2<'_, f64>,
        dout: &Array2<f64>,
        grad: &mut Dense,
    ) -> Array2<f64> {
        grad.weight += &input.t().dot(dout);
        grad.bias += &dout.sum_axis(Axis(0));
        dout.dot(&self.weight.t())
    }

    fn backward_params_only(
        &self,
        input: ArrayView2<'_, f64>,
        dout: &Array2<f64>,
        grad: &mut Dense,
    ) {
        grad.weight += &input.t().dot(dout);
        grad.bias += &dout.sum_axis(Axis(0));
    }
}

/// Encoder and decoder parameters. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeParams {
    pub arch: Architecture,
    pub encoder: Vec<Dense>,
    pub enc_mu: Dense,
    pub enc_logvar: Dense,
    pub decoder: Vec<Dense>,
    pub dec_mu: Dense,
    pub dec_logvar: Dense,
}

fn layer_sizes(arch: &Architecture) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut enc = Vec::new();
    let mut prev = arch.input_dim;
    for &h in &arch.hidden {
        enc.push((prev, h));
        prev = h;
    }
    let mut dec = Vec::new();
    let mut prev = arch.latent_dim;
    for &h in arch.hidden.iter().rev() {
        dec.push((prev, h));
        prev = h;
    }
    (enc, dec)
}

impl VaeParams {
    pub fn zeros(arch: &Architecture) -> Self {
        let (enc, dec) = layer_sizes(arch);
        let enc_out = *arch.hidden.last().unwrap_or(&arch.input_dim);
        let dec_out = *arch.hidden.first().unwrap_or(&arch.latent_dim);
        Self {
            arch: arch.clone(),
            encoder: enc.iter().map(|&(i, o)| Dense::zeros(i, o)).collect(),
            enc_mu: Dense::zeros(enc_out, arch.latent_dim),
            enc_logvar: Dense::zeros(enc_out, arch.latent_dim),
            decoder: dec.iter().map(|&(i, o)| Dense::zeros(i, o)).collect(),
            dec_mu: Dense::zeros(dec_out, arch.input_dim),
            dec_logvar: Dense::zeros(dec_out, arch.input_dim),
        }
    }

    pub fn init<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let (enc, dec) = layer_sizes(arch);
        let enc_out = *arch.hidden.last().unwrap_or(&arch.input_dim);
        let dec_out = *arch.hidden.first().unwrap_or(&arch.latent_dim);
        let encoder = enc.iter().map(|&(i, o)| Dense::glorot(i, o, rng)).collect();
        let enc_mu = Dense::glorot(enc_out, arch.latent_dim, rng);
        let enc_logvar = Dense::glorot(enc_out, arch.latent_dim, rng);
        let decoder = dec.iter().map(|&(i, o)| Dense::glorot(i, o, rng)).collect();
        let dec_mu = Dense::glorot(dec_out, arch.input_dim, rng);
        let dec_logvar = Dense::glorot(dec_out, arch.input_dim, rng);
        Ok(Self {
            arch: arch.clone(),
            encoder,
            enc_mu,
            enc_logvar,
            decoder,
            dec_mu,
            dec_logvar,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.arch)
    }

    fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.encoder
            .iter()
            .chain([&self.enc_mu, &self.enc_logvar])
            .chain(self.decoder.iter())
            .chain([&self.dec_mu, &self.dec_logvar])
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.encoder
            .iter_mut()
            .chain([&mut self.enc_mu, &mut self.enc_logvar])
            .chain(self.decoder.iter_mut())
            .chain([&mut self.dec_mu, &mut self.dec_logvar])
    }

    /// Every tensor as a flat slice, in a fixed order (per layer: weight,
    /// then bias).
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    /// Human-readable name of each tensor, matching [`VaeParams::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let mut push = |layer: String| {
            names.push(format!("{layer}.weight"));
            names.push(format!("{layer}.bias"));
        };
        for i in 0..self.encoder.len() {
            push(format!("encoder.{i}"));
        }
        push("enc_mu".into());
        push("enc_logvar".into());
        for i in 0..self.decoder.len() {
            push(format!("decoder.{i}"));
        }
        push("dec_mu".into());
        push("dec_logvar".into());
        names
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Diagonal Gaussian over the latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPosterior {
    pub mu: Vec<f64>,
    /// Clamped to `[LOGVAR_MIN, LOGVAR_MAX]`.
    pub logvar: Vec<f64>,
}

impl LatentPosterior {
    pub fn new(mu: Vec<f64>, logvar: Vec<f64>) -> Result<Self> {
        if mu.len() != logvar.len() {
            return Err(Error::Shape(format!(
                "mean has {} entries, log-variance {}",
                mu.len(),
                logvar.len()
            )));
        }
        if mu.iter().chain(&logvar).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent posterior".into()));
        }
        let logvar = logvar.into_iter().map(clamp_logvar).collect();
        Ok(Self { mu, logvar })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

pub(crate) fn clamp_logvar(v: f64) -> f64 {
    v.clamp(LOGVAR_MIN, LOGVAR_MAX)
}

fn clamp_mask(raw: f64) -> f64 {
    if raw > LOGVAR_MIN && raw < LOGVAR_MAX {
        1.0
    } else {
        0.0
    }
}

/// Forward pass of an MLP with tanh hidden layers, keeping activations.
fn mlp_forward(layers: &[Dense], input: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(input.to_owned());
    for layer in layers {
        let mut a = layer.forward(acts.last().expect("non-empty").view());
        a.mapv_inplace(f64::tanh);
        acts.push(a);
    }
    acts
}

/// Backward through tanh layers; `dtop` is the gradient at the last
/// activation. Returns the gradient at the input when `need_input` is set.
fn mlp_backward(
    layers: &[Dense],
    acts: &[Array2<f64>],
    mut dh: Array2<f64>,
    grads: &mut [Dense],
    need_input: bool,
) -> Option<Array2<f64>> {
    for k in (0..layers.len()).rev() {
        Zip::from(&mut dh)
            .and(&acts[k + 1])
            .for_each(|d, &h| *d *= 1.0 - h * h);
        if k == 0 && !need_input {
            layers[k].backward_params_only(acts[k].view(), &dh, &mut grads[k]);
            return None;
        }
        dh = layers[k].backward(acts[k].view(), &dh, &mut grads[k]);
    }
    Some(dh)
}

/// Batched encoder output: raw (unclamped) and clamped log-variances.
pub(crate) struct EncoderPass {
    pub acts: Vec<Array2<f64>>,
    pub mu: Array2<f64>,
    pub logvar_raw: Array2<f64>,
    pub logvar: Array2<f64>,
}

pub(crate) fn encoder_forward(params: &VaeParams, x: ArrayView2<'_, f64>) -> EncoderPass {
    let acts = mlp_forward(&params.encoder, x);
    let top = acts.last().expect("non-empty").view();
    let mu = params.enc_mu.forward(top);
    let logvar_raw = params.enc_logvar.forward(top);
    let logvar = logvar_raw.mapv(clamp_logvar);
    EncoderPass {
        acts,
        mu,
        logvar_raw,
        logvar,
    }
}

pub(crate) struct DecoderPass {
    pub acts: Vec<Array2<f64>>,
    pub mu: Array2<f64>,
    pub logvar_raw: Array2<f64>,
    pub logvar: Array2<f64>,
}

pub(crate) fn decoder_forward(params: &VaeParams, z: ArrayView2<'_, f64>) -> DecoderPass {
    let acts = mlp_forward(&params.decoder, z);
    let top = acts.last().expect("non-empty").view();
    let mu = params.dec_mu.forward(top);
    let logvar_raw = params.dec_logvar.forward(top);
    let logvar = logvar_raw.mapv(clamp_logvar);
    DecoderPass {
        acts,
        mu,
        logvar_raw,
        logvar,
    }
}

/// Backpropagates `(d mu_x, d logvar_x)` through the decoder, returning
/// `d z`. The log-variance gradient is masked where the clamp is active.
pub(crate) fn decoder_backward(
    params: &VaeParams,
    pass: &DecoderPass,
    dmu: &Array2<f64>,
    mut dlogvar: Array2<f64>,
    grads: &mut VaeParams,
) -> Array2<f64> {
    Zip::from(&mut dlogvar)
        .and(&pass.logvar_raw)
        .for_each(|d, &r| *d *= clamp_mask(r));
    let top = pass.acts.last().expect("non-empty").view();
    let mut dh = params.dec_mu.backward(top, dmu, &mut grads.dec_mu);
    dh += &params
        .dec_logvar
        .backward(top, &dlogvar, &mut grads.dec_logvar);
    mlp_backward(&params.decoder, &pass.acts, dh, &mut grads.decoder, true)
        .expect("input gradient requested")
}

pub(crate) fn encoder_backward(
    params: &VaeParams,
    pass: &EncoderPass,
    dmu: &Array2<f64>,
    mut dlogvar: Array2<f64>,
    grads: &mut VaeParams,
) {
    Zip::from(&mut dlogvar)
        .and(&pass.logvar_raw)
        .for_each(|d, &r| *d *= clamp_mask(r));
    let top = pass.acts.last().expect("non-empty").view();
    let mut dh = params.enc_mu.backward(top, dmu, &mut grads.enc_mu);
    dh += &params
        .enc_logvar
        .backward(top, &dlogvar, &mut grads.enc_logvar);
    mlp_backward(&params.encoder, &pass.acts, dh, &mut grads.encoder, false);
}

fn check_input(values: &[f64], expected: usize, what: &str) -> Result<()> {
    if values.len() != expected {
        return Err(Error::Shape(format!(
            "{what} has {} entries, network expects {expected}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

/// Posterior `q(z|x)` for one (standardized) feature vector.
pub fn encode(params: &VaeParams, x: &[f64]) -> Result<LatentPosterior> {
    check_input(x, params.arch.input_dim, "encoder input")?;
    let input = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
    let pass = encoder_forward(params, input);
    Ok(LatentPosterior {
        mu: pass.mu.row(0).to_vec(),
        logvar: pass.logvar.row(0).to_vec(),
    })
}

/// Likelihood mean and log-variance for one latent vector.
pub fn decode(params: &VaeParams, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_input(z, params.arch.latent_dim, "decoder input")?;
    let input = ArrayView2::from_shape((1, z.len()), z).expect("row vector");
    let pass = decoder_forward(params, input);
    Ok((pass.mu.row(0).to_vec(), pass.logvar.row(0).to_vec()))
}

/// `mu + exp(logvar / 2) ⊙ eps`.
pub fn reparameterize(post: &LatentPosterior, eps: &[f64]) -> Result<Vec<f64>> {
    if eps.len() != post.dim() {
        return Err(Error::Shape(format!(
            "noise has {} entries, posterior has {}",
            eps.len(),
            post.dim()
        )));
    }
    Ok(post
        .mu
        .iter()
        .zip(&post.logvar)
        .zip(eps)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect())
}

/// Posterior-mean reconstruction for a batch of standardized inputs.
pub fn reconstruct_batch(params: &VaeParams, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let enc = encoder_forward(params, x);
    decoder_forward(params, enc.mu.view()).mu
}
