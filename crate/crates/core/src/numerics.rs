//! Dense linear-algebra and curve-fitting primitives.
//!
//! Matrices are `ndarray::Array2<f64>` with samples along rows. Everything
//! here is a pure function of its inputs.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = Array2<f64>;

/// Principal axes of a data matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub mean: Array1<f64>,
    /// One orthonormal row per retained component.
    pub components: Array2<f64>,
    /// Variance of the projections, non-increasing.
    pub explained_variance: Array1<f64>,
}

impl PcaResult {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    /// Projects rows of `data` onto the components.
    pub fn transform(&self, data: ArrayView2<'_, f64>) -> Array2<f64> {
        let centered = &data - &self.mean.view().insert_axis(Axis(0));
        centered.dot(&self.components.t())
    }
}

/// Linear map with intercept, `Y ≈ X·coefficients + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsResult {
    /// predictors × responses
    pub coefficients: Array2<f64>,
    pub intercept: Array1<f64>,
}

impl OlsResult {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.coefficients.nrows() {
            return Err(Error::Shape(format!(
                "predictor matrix has {} columns, fit expects {}",
                x.ncols(),
                self.coefficients.nrows()
            )));
        }
        Ok(x.dot(&self.coefficients) + self.intercept.view().insert_axis(Axis(0)))
    }
}

/// `v(t) = offset + amplitude·exp(−rate·t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub offset: f64,
    pub amplitude: f64,
    pub rate: f64,
}

impl ExpFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (-self.rate * t).exp()
    }

    /// Sum of squared residuals over the given points.
    pub fn sse(&self, t: &[f64], v: &[f64]) -> f64 {
        t.iter()
            .zip(v)
            .map(|(&ti, &vi)| (vi - self.eval(ti)).powi(2))
            .sum()
    }
}

pub(crate) fn ensure_finite(m: ArrayView2<'_, f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Sample mean of each column.
pub fn column_means(data: ArrayView2<'_, f64>) -> Array1<f64> {
    data.mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(data.ncols()))
}

/// Unbiased (n−1) sample variance.
pub fn variance(values: ArrayView1<'_, f64>) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.sum() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Pearson correlation; zero when either side has no variance.
pub fn correlation(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let ma = a.iter().take(n).sum::<f64>() / n as f64;
    let mb = b.iter().take(n).sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()).take(n) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Flips `v` so that its largest-magnitude entry is nonnegative (first index
/// wins ties).
pub(crate) fn apply_sign_convention(mut v: ndarray::ArrayViewMut1<'_, f64>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

/// Top-`k` principal components from the eigendecomposition of the sample
/// covariance (divisor n−1).
///
/// Identical samples give zero explained variance with the canonical axes as
/// components.
pub fn pca(data: ArrayView2<'_, f64>, k: usize) -> Result<PcaResult> {
    let (n, dims) = data.dim();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "pca needs at least 2 samples, got {n}"
        )));
    }
    if k == 0 || k > dims {
        return Err(Error::InvalidInput(format!(
            "pca component count {k} outside 1..={dims}"
        )));
    }
    ensure_finite(data, "pca input")?;

    let mean = column_means(data);
    let centered = &data - &mean.view().insert_axis(Axis(0));
    let cov = centered.t().dot(&centered) / (n - 1) as f64;

    let scale = 1.0 + mean.iter().map(|m| m * m).sum::<f64>();
    let trace: f64 = cov.diag().sum();
    if trace <= 1e-24 * scale {
        let mut components = Array2::zeros((k, dims));
        for i in 0..k {
            components[[i, i]] = 1.0;
        }
        return Ok(PcaResult {
            mean,
            components,
            explained_variance: Array1::zeros(k),
        });
    }

    let sym = nalgebra::DMatrix::from_fn(dims, dims, |i, j| 0.5 * (cov[[i, j]] + cov[[j, i]]));
    let eig = nalgebra::SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..dims).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut components = Array2::zeros((k, dims));
    let mut explained_variance = Array1::zeros(k);
    for (row, &idx) in order.iter().take(k).enumerate() {
        for d in 0..dims {
            components[[row, d]] = eig.eigenvectors[(d, idx)];
        }
        apply_sign_convention(components.row_mut(row));
        explained_variance[row] = eig.eigenvalues[idx].max(0.0);
    }

    Ok(PcaResult {
        mean,
        components,
        explained_variance,
    })
}

/// Ordinary least squares with intercept.
///
/// Solved through a modified Gram–Schmidt QR of the centered predictors.
/// A column that is constant or lies in the span of earlier columns is
/// reported as [`Error::RankDeficient`].
pub fn ols_fit(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<OlsResult> {
    let (n, p) = x.dim();
    let q = y.ncols();
    if y.nrows() != n {
        return Err(Error::Shape(format!(
            "predictors have {n} rows, responses have {}",
            y.nrows()
        )));
    }
    if p == 0 {
        return Err(Error::InvalidInput(
            "ols needs at least one predictor".into(),
        ));
    }
    if n <= p {
        return Err(Error::InvalidInput(format!(
            "ols needs more samples ({n}) than predictors ({p})"
        )));
    }
    ensure_finite(x, "ols predictors")?;
    ensure_finite(y, "ols responses")?;

    let x_mean = column_means(x);
    let y_mean = column_means(y);
    let xc = &x - &x_mean.view().insert_axis(Axis(0));
    let yc = &y - &y_mean.view().insert_axis(Axis(0));

    let mut qmat = Array2::<f64>::zeros((n, p));
    let mut r = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut v = xc.column(j).to_owned();
        let scale = x
            .column(j)
            .iter()
            .fold(0.0f64, |m, a| m.max(a.abs()))
            .max(1.0);
        let original = v.dot(&v).sqrt();
        if original <= 1e-12 * scale * (n as f64).sqrt() {
            return Err(Error::RankDeficient { column: j });
        }
        // two passes keep Q orthogonal to working precision
        for _ in 0..2 {
            for i in 0..j {
                let qi = qmat.column(i);
                let proj = qi.dot(&v);
                r[[i, j]] += proj;
                v.scaled_add(-proj, &qi);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm <= 1e-10 * original {
            return Err(Error::RankDeficient { column: j });
        }
        r[[j, j]] = norm;
        qmat.column_mut(j).assign(&(v / norm));
    }

    let qty = qmat.t().dot(&yc);
    let mut coefficients = Array2::<f64>::zeros((p, q));
    for col in 0..q {
        for i in (0..p).rev() {
            let mut acc = qty[[i, col]];
            for k in (i + 1)..p {
                acc -= r[[i, k]] * coefficients[[k, col]];
            }
            coefficients[[i, col]] = acc / r[[i, i]];
        }
    }
    let intercept = &y_mean - &x_mean.dot(&coefficients);

    Ok(OlsResult {
        coefficients,
        intercept,
    })
}

/// `Y − (X·coefficients + intercept)`.
pub fn residualize(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    fit: &OlsResult,
) -> Result<Array2<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::Shape(format!(
            "predictors have {} rows, responses have {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if y.ncols() != fit.coefficients.ncols() {
        return Err(Error::Shape(format!(
            "responses have {} columns, fit expects {}",
            y.ncols(),
            fit.coefficients.ncols()
        )));
    }
    Ok(&y - &fit.predict(x)?)
}

const EXP_GRID_POINTS: usize = 200;
const EXP_RATE_MIN: f64 = 1e-3;
const EXP_RATE_MAX: f64 = 10.0;

/// Closed-form `(offset, amplitude)` for a fixed rate, plus the SSE.
pub(crate) fn exp_linear_solve(t: &[f64], v: &[f64], rate: f64) -> ExpFit {
    let n = t.len() as f64;
    let e: Vec<f64> = t.iter().map(|&ti| (-rate * ti).exp()).collect();
    let e_mean = e.iter().sum::<f64>() / n;
    let v_mean = v.iter().sum::<f64>() / n;
    let (mut see, mut sev) = (0.0, 0.0);
    for (ei, vi) in e.iter().zip(v) {
        see += (ei - e_mean).powi(2);
        sev += (ei - e_mean) * (vi - v_mean);
    }
    let amplitude = if see > 0.0 { sev / see } else { 0.0 };
    ExpFit {
        offset: v_mean - amplitude * e_mean,
        amplitude,
        rate,
    }
}

fn log_grid(points: usize) -> Vec<f64> {
    let (lo, hi) = (EXP_RATE_MIN.ln(), EXP_RATE_MAX.ln());
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Least-squares fit of `v ≈ a + b·exp(−c·t)`.
///
/// The rate is searched on a 200-point log grid over `[1e-3, 10]`, then
/// refined by golden-section search between the neighbours of the best grid
/// point. The refined value is kept only if it does not increase the SSE.
pub fn fit_exponential_decay(t: &[f64], v: &[f64]) -> Result<ExpFit> {
    if t.len() != v.len() {
        return Err(Error::Shape(format!(
            "{} time points but {} values",
            t.len(),
            v.len()
        )));
    }
    if t.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "exponential fit needs at least 4 points, got {}",
            t.len()
        )));
    }
    if t.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("exponential fit input".into()));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "time points must be strictly increasing".into(),
        ));
    }
    if v.iter().all(|&x| x == v[0]) {
        return Ok(ExpFit {
            offset: v[0],
            amplitude: 0.0,
            rate: 0.0,
        });
    }

    let grid = log_grid(EXP_GRID_POINTS);
    let objective = |rate: f64| {
        let fit = exp_linear_solve(t, v, rate);
        (fit.sse(t, v), fit)
    };

    let (mut best_idx, mut best) = (0, objective(grid[0]));
    for (i, &rate) in grid.iter().enumerate().skip(1) {
        let cand = objective(rate);
        if cand.0 < best.0 {
            best_idx = i;
            best = cand;
        }
    }

    let mut lo = grid[best_idx.saturating_sub(1)];
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1).0;
    let mut f2 = objective(x2).0;
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2).0;
        }
    }
    let refined = objective(0.5 * (lo + hi));
    Ok(if refined.0 <= best.0 {
        refined.1
    } else {
        best.1
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pca_axis_aligned_line() {
        let data =
            Array2::from_shape_fn((100, 2), |(i, j)| if j == 0 { i as f64 * 0.1 } else { 0.0 });
        let res = pca(data.view(), 1).unwrap();
        assert!((res.components[[0, 0]] - 1.0).abs() < 1e-12);
        assert!(res.components[[0, 1]].abs() < 1e-12);
        let var_x = variance(data.column(0));
        assert!((res.explained_variance[0] - var_x).abs() < 1e-10);
    }

    #[test]
    fn pca_diagonal_line() {
        let data = array![[1.0, 1.0], [-1.0, -1.0], [2.0, 2.0], [-2.0, -2.0]];
        let res = pca(data.view(), 1).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((res.components[[0, 0]] - h).abs() < 1e-12);
        assert!((res.components[[0, 1]] - h).abs() < 1e-12);
    }

    #[test]
    fn pca_constant_data_is_zero_variance() {
        let data = Array2::from_elem((10, 3), 3.7);
        let res = pca(data.view(), 2).unwrap();
        assert_eq!(res.explained_variance, array![0.0, 0.0]);
        assert_eq!(res.components, array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
    }

    #[test]
    fn pca_rejects_bad_arguments() {
        let one = Array2::zeros((1, 2));
        assert!(pca(one.view(), 1).is_err());
        let data = Array2::zeros((5, 2));
        assert!(pca(data.view(), 0).is_err());
        assert!(pca(data.view(), 3).is_err());
    }

    #[test]
    fn pca_projection_variance_matches() {
        let data = Array2::from_shape_fn((40, 3), |(i, j)| {
            ((i * 7 + j * 13) % 11) as f64 + (i as f64).sin() * j as f64
        });
        let res = pca(data.view(), 3).unwrap();
        let proj = res.transform(data.view());
        for k in 0..3 {
            assert!((variance(proj.column(k)) - res.explained_variance[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn ols_exact_line() {
        let x = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        let y = x.mapv(|v| 2.0 * v + 3.0);
        let fit = ols_fit(x.view(), y.view()).unwrap();
        assert!((fit.coefficients[[0, 0]] - 2.0).abs() < 1e-12);
        assert!((fit.intercept[0] - 3.0).abs() < 1e-12);
        let res = residualize(x.view(), y.view(), &fit).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn ols_names_rank_deficient_column() {
        let x = Array2::from_shape_fn((10, 3), |(i, j)| match j {
            0 => i as f64,
            1 => (i * i) as f64,
            _ => 2.0 * i as f64 + 1.0,
        });
        let y = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        match ols_fit(x.view(), y.view()) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, 2),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        let constant = Array2::from_elem((10, 1), 4.0);
        assert!(matches!(
            ols_fit(constant.view(), y.view()),
            Err(Error::RankDeficient { column: 0 })
        ));
    }

    #[test]
    fn ols_requires_more_samples_than_predictors() {
        let x = Array2::from_shape_fn((2, 2), |(i, j)| (i + j) as f64);
        let y = Array2::zeros((2, 1));
        assert!(matches!(
            ols_fit(x.view(), y.view()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn residual_means_vanish() {
        let x = Array2::from_shape_fn((25, 2), |(i, j)| {
            ((i * (j + 3)) % 7) as f64 + 0.3 * i as f64
        });
        let y = Array2::from_shape_fn((25, 2), |(i, j)| ((i * 5 + j) % 9) as f64);
        let fit = ols_fit(x.view(), y.view()).unwrap();
        let res = residualize(x.view(), y.view(), &fit).unwrap();
        for m in column_means(res.view()).iter() {
            assert!(m.abs() < 1e-10);
        }
    }

    #[test]
    fn residualize_checks_shapes() {
        let x = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        let y = Array2::from_shape_fn((10, 2), |(i, j)| (i + j) as f64);
        let fit = ols_fit(x.view(), y.view()).unwrap();
        let bad = Array2::zeros((10, 3));
        assert!(matches!(
            residualize(x.view(), bad.view(), &fit),
            Err(Error::Shape(_))
        ));
        let short = Array2::zeros((9, 2));
        assert!(matches!(
            residualize(x.view(), short.view(), &fit),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn exp_fit_noiseless() {
        let t: Vec<f64> = (0..60).map(f64::from).collect();
        let v: Vec<f64> = t.iter().map(|&x| 1.0 + 2.0 * (-0.3 * x).exp()).collect();
        let fit = fit_exponential_decay(&t, &v).unwrap();
        assert!((fit.offset - 1.0).abs() < 0.01);
        assert!((fit.amplitude - 2.0).abs() < 0.02);
        assert!((fit.rate - 0.3).abs() < 0.003);
    }

    #[test]
    fn exp_fit_constant() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let fit = fit_exponential_decay(&t, &[5.0; 10]).unwrap();
        assert_eq!(
            fit,
            ExpFit {
                offset: 5.0,
                amplitude: 0.0,
                rate: 0.0
            }
        );
    }

    #[test]
    fn exp_fit_rejects_short_or_unsorted() {
        assert!(fit_exponential_decay(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_exponential_decay(&[0.0, 2.0, 1.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn sign_convention_flips_negative_peak() {
        let mut v = array![0.1, -0.9, 0.2];
        apply_sign_convention(v.view_mut());
        assert_eq!(v, array![-0.1, 0.9, -0.2]);
    }
}
