//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use artivae::arvae::{Architecture, Batch, VaeParams, LOGVAR_MAX, LOGVAR_MIN};
use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

// ---------------------------------------------------------------- linear algebra

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues in
/// descending order; eigenvectors are the columns of the second result.
pub fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * m[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[[k, p]], m[[k, q]]);
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[[p, k]], m[[q, k]]);
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));
    let values = order.iter().map(|&i| m[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    (values, vectors)
}

/// Sample covariance (n − 1).
pub fn covariance(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows() as f64;
    let mean = x.mean_axis(Axis(0)).unwrap();
    let c = &x - &mean;
    c.t().dot(&c) / (n - 1.0)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = concatenate![Axis(1), a.clone(), b.clone()];
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| aug[[i, col]].abs().total_cmp(&aug[[j, col]].abs()))
            .unwrap();
        if piv != col {
            for k in 0..n + m {
                aug.swap([col, k], [piv, k]);
            }
        }
        let d = aug[[col, col]];
        for row in 0..n {
            if row != col {
                let f = aug[[row, col]] / d;
                for k in col..n + m {
                    aug[[row, k]] -= f * aug[[col, k]];
                }
            }
        }
    }
    Array2::from_shape_fn((n, m), |(i, j)| aug[[i, n + j]] / aug[[i, i]])
}

/// OLS with intercept via the normal equations: (coefficients p × q,
/// intercept q).
pub fn normal_equations_ols(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> (Array2<f64>, Array1<f64>) {
    let n = x.nrows();
    let design = concatenate![Axis(1), Array2::ones((n, 1)), x.to_owned()];
    let xtx = design.t().dot(&design);
    let xty = design.t().dot(&y);
    let beta = gauss_solve(&xtx, &xty);
    (beta.slice(s![1.., ..]).to_owned(), beta.row(0).to_owned())
}

/// Residual of `y` after projecting out `[1, x]` with classical Gram–Schmidt
/// on the design columns.
pub fn gram_schmidt_residual(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut basis: Vec<Array1<f64>> = Vec::new();
    let cols =
        std::iter::once(Array1::ones(n)).chain(x.columns().into_iter().map(|c| c.to_owned()));
    for mut c in cols {
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&c);
                c.scaled_add(-d, q);
            }
        }
        let norm = c.dot(&c).sqrt();
        basis.push(c / norm);
    }
    let mut r = y.to_owned();
    for mut col in r.columns_mut() {
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&col);
                col.scaled_add(-d, q);
            }
        }
    }
    r
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

// ---------------------------------------------------------------- signal processing

/// Power spectrum of a periodic-Hann-windowed frame by direct DFT, bins
/// `0..=n/2`.
pub fn naive_power_spectrum(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    let w: Vec<f64> = (0..n)
        .map(|i| frame[i] * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()))
        .collect();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in w.iter().enumerate() {
                let ang = -2.0 * PI * (k * i) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// Textbook DCT-II with orthonormal scaling.
pub fn naive_dct(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    (0..x.len())
        .map(|k| {
            let sum: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI / n * (i as f64 + 0.5) * k as f64).cos())
                .sum();
            sum * if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            }
        })
        .collect()
}

// ---------------------------------------------------------------- statistics

/// Monte Carlo estimate of KL(N(mu, diag exp(logvar)) ‖ N(0, I)) with its
/// standard error.
pub fn monte_carlo_kl(
    mu: &[f64],
    logvar: &[f64],
    samples: usize,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let mut v = 0.0;
        for (m, lv) in mu.iter().zip(logvar) {
            let e: f64 = StandardNormal.sample(rng);
            let z = m + (0.5 * lv).exp() * e;
            // log q(z) − log p(z)
            v += -0.5 * (lv + e * e) + 0.5 * z * z;
        }
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Best `a + b·exp(−c t)` over a dense log grid of rates in `[1e-3, 10]`
/// with closed-form `a, b`; returns `(a, b, c, sse)`.
pub fn dense_grid_exp_fit(t: &[f64], v: &[f64]) -> (f64, f64, f64, f64) {
    let mut best = (0.0, 0.0, 0.0, f64::INFINITY);
    let steps = 20_000;
    for i in 0..=steps {
        let c = 10f64.powf(-3.0 + 4.0 * i as f64 / steps as f64);
        let e: Vec<f64> = t.iter().map(|ti| (-c * ti).exp()).collect();
        let n = t.len() as f64;
        let (se, sv) = (e.iter().sum::<f64>(), v.iter().sum::<f64>());
        let see: f64 = e.iter().map(|x| x * x).sum();
        let sev: f64 = e.iter().zip(v).map(|(x, y)| x * y).sum();
        let det = n * see - se * se;
        if det.abs() < 1e-300 {
            continue;
        }
        let b = (n * sev - se * sv) / det;
        let a = (sv - b * se) / n;
        let sse: f64 = e.iter().zip(v).map(|(x, y)| (a + b * x - y).powi(2)).sum();
        if sse < best.3 {
            best = (a, b, c, sse);
        }
    }
    best
}

// ---------------------------------------------------------------- VAE loss

/// Seeded batch with distinct noisy inputs and clean targets, and its
/// fixed reparameterization noise.
pub fn random_batch(arch: &Architecture, frames: usize, seed: u64) -> (Batch, Array2<f64>) {
    let mut r = rng(seed);
    let x_target = normal_matrix(frames, arch.input_dim, &mut r);
    let x_in = &x_target + &(normal_matrix(frames, arch.input_dim, &mut r) * 0.3);
    let artic = normal_matrix(frames, arch.constrained_dim, &mut r);
    let eps = normal_matrix(frames, arch.latent_dim, &mut r);
    (
        Batch {
            x_in,
            x_target,
            artic,
        },
        eps,
    )
}

fn tanh(x: f64) -> f64 {
    if x.abs() < 0.02 {
        x.tanh()
    } else {
        1.0 - 2.0 / ((2.0 * x).exp() + 1.0)
    }
}

fn clamp_lv(m: Array2<f64>) -> Array2<f64> {
    m.mapv(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX))
}

fn tile(m: &Array2<f64>, k: usize) -> Array2<f64> {
    let views: Vec<_> = (0..k).map(|_| m.view()).collect();
    concatenate(Axis(0), &views).unwrap()
}

fn affine(input: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    input.dot(w) + b
}

#[derive(Clone, Copy, Debug)]
enum Stage {
    EncHidden(usize),
    EncMu,
    EncLogvar,
    DecHidden(usize),
    DecMu,
    DecLogvar,
}

/// Straightforward re-implementation of the per-frame objective, able to
/// evaluate many single-parameter perturbations at once by stacking them
/// along rows and recomputing only the layers downstream of the change.
pub struct ReferenceLoss<'a> {
    p: &'a VaeParams,
    batch: &'a Batch,
    eps: &'a Array2<f64>,
    alpha: f64,
    enc_acts: Vec<Array2<f64>>,
    mu: Array2<f64>,
    lv: Array2<f64>,
    z: Array2<f64>,
    dec_acts: Vec<Array2<f64>>,
    mux: Array2<f64>,
    lvx: Array2<f64>,
}

impl<'a> ReferenceLoss<'a> {
    pub fn new(p: &'a VaeParams, batch: &'a Batch, eps: &'a Array2<f64>, alpha: f64) -> Self {
        let mut enc_acts = vec![batch.x_in.clone()];
        for l in &p.encoder {
            let h = affine(enc_acts.last().unwrap(), &l.weight, &l.bias).mapv(tanh);
            enc_acts.push(h);
        }
        let top = enc_acts.last().unwrap();
        let mu = affine(top, &p.enc_mu.weight, &p.enc_mu.bias);
        let lv = clamp_lv(affine(top, &p.enc_logvar.weight, &p.enc_logvar.bias));
        let z = &mu + &(lv.mapv(|v| (0.5 * v).exp()) * eps);
        let mut dec_acts = vec![z.clone()];
        for l in &p.decoder {
            let h = affine(dec_acts.last().unwrap(), &l.weight, &l.bias).mapv(tanh);
            dec_acts.push(h);
        }
        let top = dec_acts.last().unwrap();
        let mux = affine(top, &p.dec_mu.weight, &p.dec_mu.bias);
        let lvx = clamp_lv(affine(top, &p.dec_logvar.weight, &p.dec_logvar.bias));
        Self {
            p,
            batch,
            eps,
            alpha,
            enc_acts,
            mu,
            lv,
            z,
            dec_acts,
            mux,
            lvx,
        }
    }

    pub fn loss(&self) -> f64 {
        self.losses(&self.mu, &self.lv, &self.z, &self.mux, &self.lvx, 1)[0]
    }

    /// Mean loss per stacked block of `frames` rows.
    fn losses(
        &self,
        mu: &Array2<f64>,
        lv: &Array2<f64>,
        z: &Array2<f64>,
        mux: &Array2<f64>,
        lvx: &Array2<f64>,
        k: usize,
    ) -> Vec<f64> {
        let n = self.batch.x_target.nrows();
        let n_con = self.batch.artic.ncols();
        let half_log_2pi = 0.5 * (2.0 * PI).ln();
        let mut out = vec![0.0; k];
        for r in 0..n * k {
            let f = r % n;
            let mut v = 0.0;
            for j in 0..mux.ncols() {
                let d = self.batch.x_target[[f, j]] - mux[[r, j]];
                v += half_log_2pi + 0.5 * lvx[[r, j]] + 0.5 * d * d * (-lvx[[r, j]]).exp();
            }
            for j in 0..mu.ncols() {
                v += 0.5 * (lv[[r, j]].exp() + mu[[r, j]] * mu[[r, j]] - 1.0 - lv[[r, j]]);
            }
            for j in 0..n_con {
                v += self.alpha * (z[[r, j]] - self.batch.artic[[f, j]]).powi(2);
            }
            out[r / n] += v / n as f64;
        }
        out
    }

    fn from_stage(&self, stage: Stage, pre: Array2<f64>, k: usize) -> Vec<f64> {
        let p = self.p;
        let (mu, lv) = match stage {
            Stage::EncHidden(i) => {
                let mut h = pre.mapv(tanh);
                for l in &p.encoder[i + 1..] {
                    h = affine(&h, &l.weight, &l.bias).mapv(tanh);
                }
                (
                    affine(&h, &p.enc_mu.weight, &p.enc_mu.bias),
                    clamp_lv(affine(&h, &p.enc_logvar.weight, &p.enc_logvar.bias)),
                )
            }
            Stage::EncMu => (pre.clone(), tile(&self.lv, k)),
            Stage::EncLogvar => (tile(&self.mu, k), clamp_lv(pre.clone())),
            _ => (tile(&self.mu, k), tile(&self.lv, k)),
        };
        let z = match stage {
            Stage::DecHidden(_) | Stage::DecMu | Stage::DecLogvar => tile(&self.z, k),
            _ => &mu + &(lv.mapv(|v| (0.5 * v).exp()) * tile(self.eps, k)),
        };
        let decode_from = |mut h: Array2<f64>, first: usize| {
            for l in &p.decoder[first..] {
                h = affine(&h, &l.weight, &l.bias).mapv(tanh);
            }
            (
                affine(&h, &p.dec_mu.weight, &p.dec_mu.bias),
                clamp_lv(affine(&h, &p.dec_logvar.weight, &p.dec_logvar.bias)),
            )
        };
        let (mux, lvx) = match stage {
            Stage::DecHidden(i) => decode_from(pre.mapv(tanh), i + 1),
            Stage::DecMu => (pre, tile(&self.lvx, k)),
            Stage::DecLogvar => (tile(&self.mux, k), clamp_lv(pre)),
            _ => decode_from(z.clone(), 0),
        };
        self.losses(&mu, &lv, &z, &mux, &lvx, k)
    }

    fn stages(&self) -> Vec<(Stage, &'a artivae::arvae::Dense, Array2<f64>)> {
        let p = self.p;
        let mut out = Vec::new();
        for (i, l) in p.encoder.iter().enumerate() {
            out.push((Stage::EncHidden(i), l, self.enc_acts[i].clone()));
        }
        let top = self.enc_acts.last().unwrap().clone();
        out.push((Stage::EncMu, &p.enc_mu, top.clone()));
        out.push((Stage::EncLogvar, &p.enc_logvar, top));
        for (i, l) in p.decoder.iter().enumerate() {
            out.push((Stage::DecHidden(i), l, self.dec_acts[i].clone()));
        }
        let top = self.dec_acts.last().unwrap().clone();
        out.push((Stage::DecMu, &p.dec_mu, top.clone()));
        out.push((Stage::DecLogvar, &p.dec_logvar, top));
        out
    }

    /// Central finite differences of the mean batch loss for every
    /// parameter, laid out like [`VaeParams::tensors`].
    pub fn finite_difference_grads(&self, h: f64) -> Vec<Vec<f64>> {
        const CHUNK: usize = 48;
        let mut grads = Vec::new();
        for (stage, layer, input) in self.stages() {
            let base_pre = affine(&input, &layer.weight, &layer.bias);
            let (n_in, n_out) = layer.weight.dim();
            let n = input.nrows();
            // flat index < n_in·n_out is weight (i, j); beyond that bias j
            let total = n_in * n_out + n_out;
            let mut g = vec![0.0; total];
            let mut start = 0;
            while start < total {
                let end = (start + CHUNK).min(total);
                let m = end - start;
                let mut pre = tile(&base_pre, 2 * m);
                for (v, idx) in (start..end).enumerate() {
                    let (i, j) = if idx < n_in * n_out {
                        (Some(idx / n_out), idx % n_out)
                    } else {
                        (None, idx - n_in * n_out)
                    };
                    for (block, sign) in [(2 * v, 1.0), (2 * v + 1, -1.0)] {
                        for r in 0..n {
                            let delta = match i {
                                Some(i) => input[[r, i]],
                                None => 1.0,
                            };
                            pre[[block * n + r, j]] += sign * h * delta;
                        }
                    }
                }
                let l = self.from_stage(stage, pre, 2 * m);
                for v in 0..m {
                    g[start + v] = (l[2 * v] - l[2 * v + 1]) / (2.0 * h);
                }
                start = end;
            }
            let (w, b) = g.split_at(n_in * n_out);
            grads.push(w.to_vec());
            grads.push(b.to_vec());
        }
        grads
    }
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
