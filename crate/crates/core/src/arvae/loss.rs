//! Objective terms and the batch loss with its exact gradient.
//!
//! Per frame, with one reparameterized sample `z = μ_z + exp(½ log σ²_z) ⊙ ε`:
//!
//! ```text
//! loss = −log N(x_target; μ_x(z), σ²_x(z)) + KL(q(z|x_in) ‖ N(0, I)) + α·‖z[..N] − a‖²
//! ```
//!
//! The batch loss is the mean over frames.

use std::f64::consts::PI;

use ndarray::{s, Array2, ArrayView2, Zip};

use crate::error::{Error, Result};

use super::network::{
    decoder_backward, decoder_forward, encoder_backward, encoder_forward, LatentPosterior,
    VaeParams,
};

/// `½ Σ (exp(logvar) + μ² − 1 − logvar)`.
pub fn kl_standard_normal(post: &LatentPosterior) -> f64 {
    0.5 * post
        .mu
        .iter()
        .zip(&post.logvar)
        .map(|(m, lv)| lv.exp() + m * m - 1.0 - lv)
        .sum::<f64>()
}

/// Diagonal Gaussian log-density.
pub fn gaussian_loglik(x: &[f64], mu: &[f64], logvar: &[f64]) -> f64 {
    x.iter()
        .zip(mu)
        .zip(logvar)
        .map(|((x, m), lv)| -0.5 * ((2.0 * PI).ln() + lv + (x - m).powi(2) * (-lv).exp()))
        .sum()
}

/// Squared distance between the first `a.len()` latent entries and `a`.
pub fn artic_reg(z: &[f64], a: &[f64]) -> Result<f64> {
    if a.len() > z.len() {
        return Err(Error::Shape(format!(
            "articulatory vector ({}) longer than latent vector ({})",
            a.len(),
            z.len()
        )));
    }
    Ok(z.iter().zip(a).map(|(zi, ai)| (zi - ai).powi(2)).sum())
}

/// Network-ready batch: standardized inputs and targets plus articulatory
/// targets, one frame per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x_in: Array2<f64>,
    pub x_target: Array2<f64>,
    pub artic: Array2<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.x_in.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x_in.nrows() == 0
    }

    fn validate(&self, params: &VaeParams) -> Result<()> {
        let arch = &params.arch;
        let n = self.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        if self.x_in.ncols() != arch.input_dim || self.x_target.ncols() != arch.input_dim {
            return Err(Error::Shape(format!(
                "feature width must be {}",
                arch.input_dim
            )));
        }
        if self.x_target.nrows() != n || self.artic.nrows() != n {
            return Err(Error::Shape(
                "batch parts have differing frame counts".into(),
            ));
        }
        if self.artic.ncols() != arch.constrained_dim {
            return Err(Error::Shape(format!(
                "articulatory width {} does not match constrained latent prefix {}",
                self.artic.ncols(),
                arch.constrained_dim
            )));
        }
        Ok(())
    }
}

struct Forward {
    enc: super::network::EncoderPass,
    std: Array2<f64>,
    z: Array2<f64>,
    dec: super::network::DecoderPass,
    loss: f64,
}

fn forward(
    params: &VaeParams,
    batch: &Batch,
    alpha: f64,
    eps: ArrayView2<'_, f64>,
) -> Result<Forward> {
    batch.validate(params)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "alpha must be a finite nonnegative number, got {alpha}"
        )));
    }
    if eps.dim() != (batch.len(), params.arch.latent_dim) {
        return Err(Error::Shape(format!(
            "noise is {:?}, expected ({}, {})",
            eps.dim(),
            batch.len(),
            params.arch.latent_dim
        )));
    }
    let n_con = params.arch.constrained_dim;
    let enc = encoder_forward(params, batch.x_in.view());
    let std = enc.logvar.mapv(|lv| (0.5 * lv).exp());
    let z = &enc.mu + &(&std * &eps);
    let dec = decoder_forward(params, z.view());

    let half_log_2pi = 0.5 * (2.0 * PI).ln();
    let mut total = 0.0;
    for r in 0..batch.len() {
        let mut frame = 0.0;
        for f in 0..params.arch.input_dim {
            let lv = dec.logvar[[r, f]];
            let d = batch.x_target[[r, f]] - dec.mu[[r, f]];
            frame += half_log_2pi + 0.5 * lv + 0.5 * d * d * (-lv).exp();
        }
        for l in 0..params.arch.latent_dim {
            let (m, lv) = (enc.mu[[r, l]], enc.logvar[[r, l]]);
            frame += 0.5 * (lv.exp() + m * m - 1.0 - lv);
        }
        if alpha > 0.0 {
            for l in 0..n_con {
                frame += alpha * (z[[r, l]] - batch.artic[[r, l]]).powi(2);
            }
        }
        if !frame.is_finite() {
            return Err(Error::NonFiniteLoss { frame: r });
        }
        total += frame;
    }
    Ok(Forward {
        enc,
        std,
        z,
        dec,
        loss: total / batch.len() as f64,
    })
}

/// Mean batch loss for fixed noise draws `eps` (frames × latent).
pub fn batch_loss(
    params: &VaeParams,
    batch: &Batch,
    alpha: f64,
    eps: ArrayView2<'_, f64>,
) -> Result<f64> {
    Ok(forward(params, batch, alpha, eps)?.loss)
}

/// Mean batch loss and its gradient with respect to every parameter.
pub fn loss_and_grads(
    params: &VaeParams,
    batch: &Batch,
    alpha: f64,
    eps: ArrayView2<'_, f64>,
) -> Result<(f64, VaeParams)> {
    let fw = forward(params, batch, alpha, eps)?;
    let inv_n = 1.0 / batch.len() as f64;
    let mut grads = params.zeros_like();

    // likelihood head
    let mut dmu_x = Array2::zeros(fw.dec.mu.raw_dim());
    let mut dlv_x = Array2::zeros(fw.dec.mu.raw_dim());
    Zip::from(&mut dmu_x)
        .and(&mut dlv_x)
        .and(&batch.x_target)
        .and(&fw.dec.mu)
        .and(&fw.dec.logvar)
        .for_each(|dm, dl, &x, &m, &lv| {
            let prec = (-lv).exp();
            let d = x - m;
            *dm = -d * prec * inv_n;
            *dl = 0.5 * (1.0 - d * d * prec) * inv_n;
        });
    let mut dz = decoder_backward(params, &fw.dec, &dmu_x, dlv_x, &mut grads);

    if alpha > 0.0 {
        let n_con = params.arch.constrained_dim;
        let diff = &fw.z.slice(s![.., ..n_con]) - &batch.artic;
        dz.slice_mut(s![.., ..n_con])
            .scaled_add(2.0 * alpha * inv_n, &diff);
    }

    // reparameterization and KL
    let dmu_z = &dz + &(&fw.enc.mu * inv_n);
    let mut dlv_z = Array2::zeros(dz.raw_dim());
    Zip::from(&mut dlv_z)
        .and(&dz)
        .and(&eps)
        .and(&fw.std)
        .and(&fw.enc.logvar)
        .for_each(|d, &g, &e, &s, &lv| {
            *d = 0.5 * g * e * s + 0.5 * (lv.exp() - 1.0) * inv_n;
        });
    encoder_backward(params, &fw.enc, &dmu_z, dlv_z, &mut grads);

    Ok((fw.loss, grads))
}
