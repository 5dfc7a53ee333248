//! Guided-PCA articulatory model.
//!
//! Parameters are extracted in stages, each stage removing by linear
//! regression the contribution of parameters already extracted:
//!
//! 1. `JH`: first PC of the jaw coil.
//! 2. Regress `JH` out of the three tongue coils.
//! 3. `TB`, `TD`: first two PCs of the residual blade + dorsum coordinates.
//! 4. Regress `(TB, TD)` out of the residual tongue-tip coordinates.
//! 5. `TT`: first PC of that residual.
//! 6. Regress `JH` out of the lip coordinates. `LP` is the first PC of the
//!    residual horizontal lip coordinates; `LH` the first PC of the residual
//!    vertical coordinates once `LP` is regressed out of them.
//! 7. `VL`: first PC of the velum coil, when present.
//!
//! Every stage is affine in the input frame, so the whole chain collapses to
//! a single `a = F·y + o` map which is stored alongside its minimum-norm
//! inverse.

mod filter;
mod io;

pub use filter::{butterworth_lowpass4, downsample_ema, filtfilt, Biquad};
pub use io::{read_ema_csv, write_ema_csv, write_ema_csv_to};

use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, OlsResult, PcaResult};

pub const MODEL_FORMAT: &str = "artivae-gpca-v1";

/// Parameter names in vector order.
pub const PARAM_NAMES: [&str; 7] = ["JH", "TB", "TD", "TT", "LP", "LH", "VL"];

/// Minimum number of frames accepted by [`fit_guided_pca`].
pub const MIN_FRAMES: usize = 100;

/// Coordinate indices (x, y) of every coil inside an EMA frame. `x` is the
/// anterior–posterior (protrusion) axis, `y` the vertical axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoilLayout {
    pub jaw: [usize; 2],
    pub tongue_tip: [usize; 2],
    pub tongue_blade: [usize; 2],
    pub tongue_dorsum: [usize; 2],
    pub upper_lip: [usize; 2],
    pub lower_lip: [usize; 2],
    pub velum: Option<[usize; 2]>,
}

const COIL_PREFIXES: [&str; 7] = ["jaw", "tt", "tb", "td", "ul", "ll", "vl"];

impl CoilLayout {
    /// Columns in the order jaw, tt, tb, td, ul, ll, [vl], each as x then y.
    pub fn standard(with_velum: bool) -> Self {
        Self {
            jaw: [0, 1],
            tongue_tip: [2, 3],
            tongue_blade: [4, 5],
            tongue_dorsum: [6, 7],
            upper_lip: [8, 9],
            lower_lip: [10, 11],
            velum: with_velum.then_some([12, 13]),
        }
    }

    fn coils(&self) -> Vec<(&'static str, [usize; 2])> {
        let mut out = vec![
            ("jaw", self.jaw),
            ("tt", self.tongue_tip),
            ("tb", self.tongue_blade),
            ("td", self.tongue_dorsum),
            ("ul", self.upper_lip),
            ("ll", self.lower_lip),
        ];
        if let Some(v) = self.velum {
            out.push(("vl", v));
        }
        out
    }

    pub fn dims(&self) -> usize {
        if self.velum.is_some() {
            14
        } else {
            12
        }
    }

    /// Number of articulatory parameters this layout supports.
    pub fn n_params(&self) -> usize {
        if self.velum.is_some() {
            7
        } else {
            6
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        let mut seen = vec![false; dims];
        for (name, idx) in self.coils() {
            for i in idx {
                if i >= dims {
                    return Err(Error::InvalidInput(format!(
                        "coil {name} index {i} outside frame of {dims} values"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidInput(format!(
                        "coordinate index {i} assigned twice (coil {name})"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }

    /// Column name for every coordinate, e.g. `jaw_x`, `tt_y`.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.dims()];
        for (prefix, [x, y]) in self.coils() {
            names[x] = format!("{prefix}_x");
            names[y] = format!("{prefix}_y");
        }
        names
    }

    /// Builds a layout from coordinate column names (without `time_s`).
    pub fn from_column_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let find = |prefix: &str, axis: &str| -> Option<usize> {
            let want = format!("{prefix}_{axis}");
            names.iter().position(|n| n.as_ref() == want)
        };
        let mut found: Vec<Option<[usize; 2]>> = Vec::new();
        for prefix in COIL_PREFIXES {
            let pair = match (find(prefix, "x"), find(prefix, "y")) {
                (Some(x), Some(y)) => Some([x, y]),
                (None, None) => None,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "coil {prefix} needs both {prefix}_x and {prefix}_y columns"
                    )))
                }
            };
            found.push(pair);
        }
        let required = |i: usize| {
            found[i]
                .ok_or_else(|| Error::InvalidInput(format!("missing coil {}", COIL_PREFIXES[i])))
        };
        let layout = Self {
            jaw: required(0)?,
            tongue_tip: required(1)?,
            tongue_blade: required(2)?,
            tongue_dorsum: required(3)?,
            upper_lip: required(4)?,
            lower_lip: required(5)?,
            velum: found[6],
        };
        if names.len() != layout.dims() {
            return Err(Error::InvalidInput(format!(
                "{} coordinate columns do not match a {}-value coil layout",
                names.len(),
                layout.dims()
            )));
        }
        layout.validate()?;
        Ok(layout)
    }
}

/// One EMA sample: midsagittal coil coordinates (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmaFrame {
    pub time_s: f64,
    pub coords: Vec<f64>,
}

/// Standardized articulatory parameters `[JH, TB, TD, TT, LP, LH, (VL)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticulatoryVector {
    params: Vec<f64>,
}

impl ArticulatoryVector {
    pub fn new(params: Vec<f64>) -> Result<Self> {
        if params.len() != 6 && params.len() != 7 {
            return Err(Error::InvalidInput(format!(
                "articulatory vector must have 6 or 7 entries, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("articulatory vector".into()));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
}

/// Fitted staged model and its collapsed affine maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidedPcaModel {
    pub format: String,
    pub layout: CoilLayout,
    pub param_names: Vec<String>,
    pub jaw: PcaResult,
    pub tongue_on_jaw: OlsResult,
    pub tongue_body: PcaResult,
    pub tip_on_body: OlsResult,
    pub tongue_tip: PcaResult,
    pub lips_on_jaw: OlsResult,
    pub lip_protrusion: PcaResult,
    pub aperture_on_protrusion: OlsResult,
    pub lip_height: PcaResult,
    pub velum: Option<PcaResult>,
    /// Training mean of the raw (unscaled) stage outputs.
    pub param_means: Array1<f64>,
    /// Training standard deviation of the raw stage outputs.
    pub param_scales: Array1<f64>,
    /// Training mean frame.
    pub mean_frame: Array1<f64>,
    /// N × D
    pub forward: Array2<f64>,
    pub forward_offset: Array1<f64>,
    /// D × N, right pseudo-inverse of `forward`.
    pub inverse: Array2<f64>,
    pub inverse_offset: Array1<f64>,
}

fn columns(data: ArrayView2<'_, f64>, idx: &[usize]) -> Array2<f64> {
    data.select(Axis(1), idx)
}

fn frames_to_matrix(frames: &[EmaFrame], dims: usize) -> Result<Array2<f64>> {
    let mut m = Array2::zeros((frames.len(), dims));
    for (i, f) in frames.iter().enumerate() {
        if f.coords.len() != dims {
            return Err(Error::Shape(format!(
                "frame {i} has {} coordinates, layout expects {dims}",
                f.coords.len()
            )));
        }
        for (j, &v) in f.coords.iter().enumerate() {
            m[[i, j]] = v;
        }
    }
    numerics::ensure_finite(m.view(), "EMA frames")?;
    Ok(m)
}

struct Groups {
    jaw: Vec<usize>,
    tongue: Vec<usize>,
    lips: Vec<usize>,
    velum: Option<Vec<usize>>,
}

impl Groups {
    fn new(layout: &CoilLayout) -> Self {
        let [tt_x, tt_y] = layout.tongue_tip;
        let [tb_x, tb_y] = layout.tongue_blade;
        let [td_x, td_y] = layout.tongue_dorsum;
        let [ul_x, ul_y] = layout.upper_lip;
        let [ll_x, ll_y] = layout.lower_lip;
        Self {
            jaw: layout.jaw.to_vec(),
            // tip first, then blade + dorsum
            tongue: vec![tt_x, tt_y, tb_x, tb_y, td_x, td_y],
            // horizontal at 0 and 2, vertical at 1 and 3
            lips: vec![ul_x, ul_y, ll_x, ll_y],
            velum: layout.velum.map(|v| v.to_vec()),
        }
    }
}

const HORIZONTAL: [usize; 2] = [0, 2];
const VERTICAL: [usize; 2] = [1, 3];

fn check_variance(pc: &PcaResult, tol: f64, stage: &'static str) -> Result<()> {
    if pc.explained_variance.iter().any(|&v| v <= tol) {
        Err(Error::ZeroVariance { stage })
    } else {
        Ok(())
    }
}

/// Fits the staged model on parallel EMA frames.
pub fn fit_guided_pca(frames: &[EmaFrame], layout: &CoilLayout) -> Result<GuidedPcaModel> {
    layout.validate()?;
    if frames.len() < MIN_FRAMES {
        return Err(Error::InvalidInput(format!(
            "guided PCA needs at least {MIN_FRAMES} frames, got {}",
            frames.len()
        )));
    }
    let dims = layout.dims();
    let data = frames_to_matrix(frames, dims)?;
    let groups = Groups::new(layout);

    let total_var: f64 = (0..dims).map(|j| numerics::variance(data.column(j))).sum();
    let tol = 1e-12 * total_var.max(f64::MIN_POSITIVE);

    // 1. jaw height
    let jaw_xy = columns(data.view(), &groups.jaw);
    let jaw = numerics::pca(jaw_xy.view(), 1).map_err(Error::in_stage("jaw"))?;
    check_variance(&jaw, tol, "jaw")?;
    let jh = jaw.transform(jaw_xy.view());

    // 2-5. tongue
    let tongue = columns(data.view(), &groups.tongue);
    let tongue_on_jaw =
        numerics::ols_fit(jh.view(), tongue.view()).map_err(Error::in_stage("tongue-on-jaw"))?;
    let tongue_res = numerics::residualize(jh.view(), tongue.view(), &tongue_on_jaw)?;
    let body = tongue_res.slice(s![.., 2..6]);
    let tongue_body = numerics::pca(body, 2).map_err(Error::in_stage("tongue-body"))?;
    check_variance(&tongue_body, tol, "tongue-body")?;
    let tb_td = tongue_body.transform(body);
    let tip = tongue_res.slice(s![.., 0..2]);
    let tip_on_body =
        numerics::ols_fit(tb_td.view(), tip).map_err(Error::in_stage("tip-on-body"))?;
    let tip_res = numerics::residualize(tb_td.view(), tip, &tip_on_body)?;
    let tongue_tip = numerics::pca(tip_res.view(), 1).map_err(Error::in_stage("tongue-tip"))?;
    check_variance(&tongue_tip, tol, "tongue-tip")?;

    // 6. lips
    let lips = columns(data.view(), &groups.lips);
    let lips_on_jaw =
        numerics::ols_fit(jh.view(), lips.view()).map_err(Error::in_stage("lips-on-jaw"))?;
    let lips_res = numerics::residualize(jh.view(), lips.view(), &lips_on_jaw)?;
    let horizontal = columns(lips_res.view(), &HORIZONTAL);
    let lip_protrusion =
        numerics::pca(horizontal.view(), 1).map_err(Error::in_stage("lip-protrusion"))?;
    check_variance(&lip_protrusion, tol, "lip-protrusion")?;
    let lp = lip_protrusion.transform(horizontal.view());
    let vertical = columns(lips_res.view(), &VERTICAL);
    let aperture_on_protrusion = numerics::ols_fit(lp.view(), vertical.view())
        .map_err(Error::in_stage("aperture-on-protrusion"))?;
    let aperture_res = numerics::residualize(lp.view(), vertical.view(), &aperture_on_protrusion)?;
    let lip_height =
        numerics::pca(aperture_res.view(), 1).map_err(Error::in_stage("lip-height"))?;
    check_variance(&lip_height, tol, "lip-height")?;

    // 7. velum
    let velum = match &groups.velum {
        Some(idx) => {
            let v = columns(data.view(), idx);
            let pc = numerics::pca(v.view(), 1).map_err(Error::in_stage("velum"))?;
            check_variance(&pc, tol, "velum")?;
            Some(pc)
        }
        None => None,
    };

    let n_params = layout.n_params();
    let mut model = GuidedPcaModel {
        format: MODEL_FORMAT.to_string(),
        layout: layout.clone(),
        param_names: PARAM_NAMES[..n_params]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        jaw,
        tongue_on_jaw,
        tongue_body,
        tip_on_body,
        tongue_tip,
        lips_on_jaw,
        lip_protrusion,
        aperture_on_protrusion,
        lip_height,
        velum,
        param_means: Array1::zeros(n_params),
        param_scales: Array1::ones(n_params),
        mean_frame: numerics::column_means(data.view()),
        forward: Array2::zeros((n_params, dims)),
        forward_offset: Array1::zeros(n_params),
        inverse: Array2::zeros((dims, n_params)),
        inverse_offset: Array1::zeros(dims),
    };

    let raw = model.apply_stages(data.view())?;
    for k in 0..n_params {
        let col = raw.column(k);
        let sd = numerics::variance(col).sqrt();
        if sd <= tol.sqrt() {
            return Err(Error::ZeroVariance {
                stage: stage_of_param(k),
            });
        }
        model.param_means[k] = col.sum() / col.len() as f64;
        model.param_scales[k] = sd;
    }
    model.assemble_maps()?;
    Ok(model)
}

fn stage_of_param(k: usize) -> &'static str {
    match k {
        0 => "jaw",
        1 | 2 => "tongue-body",
        3 => "tongue-tip",
        4 => "lip-protrusion",
        5 => "lip-height",
        _ => "velum",
    }
}

impl GuidedPcaModel {
    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn dims(&self) -> usize {
        self.layout.dims()
    }

    /// Runs the fitted stages on raw frames (rows), returning unscaled
    /// parameters.
    fn apply_stages(&self, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let groups = Groups::new(&self.layout);
        let jh = self.jaw.transform(columns(data, &groups.jaw).view());

        let tongue = columns(data, &groups.tongue);
        let tongue_res = numerics::residualize(jh.view(), tongue.view(), &self.tongue_on_jaw)?;
        let tb_td = self.tongue_body.transform(tongue_res.slice(s![.., 2..6]));
        let tip = tongue_res.slice(s![.., 0..2]);
        let tip_res = numerics::residualize(tb_td.view(), tip, &self.tip_on_body)?;
        let tt = self.tongue_tip.transform(tip_res.view());

        let lips = columns(data, &groups.lips);
        let lips_res = numerics::residualize(jh.view(), lips.view(), &self.lips_on_jaw)?;
        let lp = self
            .lip_protrusion
            .transform(columns(lips_res.view(), &HORIZONTAL).view());
        let vertical = columns(lips_res.view(), &VERTICAL);
        let aperture_res =
            numerics::residualize(lp.view(), vertical.view(), &self.aperture_on_protrusion)?;
        let lh = self.lip_height.transform(aperture_res.view());

        let mut parts = vec![jh.view(), tb_td.view(), tt.view(), lp.view(), lh.view()];
        let vl;
        if let (Some(pc), Some(idx)) = (&self.velum, &groups.velum) {
            vl = pc.transform(columns(data, idx).view());
            parts.push(vl.view());
        }
        Ok(concatenate(Axis(1), &parts).expect("stage outputs share a row count"))
    }

    fn assemble_maps(&mut self) -> Result<()> {
        let dims = self.dims();
        let n = self.n_params();
        // row 0 is the origin, row j+1 the unit vector e_j
        let mut probe = Array2::zeros((dims + 1, dims));
        for j in 0..dims {
            probe[[j + 1, j]] = 1.0;
        }
        let raw = self.apply_stages(probe.view())?;
        let scaled = (&raw - &self.param_means.view().insert_axis(Axis(0)))
            / self.param_scales.view().insert_axis(Axis(0));
        let offset = scaled.row(0).to_owned();
        let mut forward = Array2::zeros((n, dims));
        for j in 0..dims {
            let col = &scaled.row(j + 1) - &offset;
            forward.column_mut(j).assign(&col);
        }

        let gram = forward.dot(&forward.t());
        let gram_inv = nalgebra::DMatrix::from_fn(n, n, |i, j| gram[[i, j]])
            .try_inverse()
            .ok_or_else(|| Error::Stage {
                stage: "assemble",
                source: Box::new(Error::InvalidInput("forward map is not full rank".into())),
            })?;
        let gram_inv = Array2::from_shape_fn((n, n), |(i, j)| gram_inv[(i, j)]);
        let inverse = forward.t().dot(&gram_inv);

        let at_mean = forward.dot(&self.mean_frame) + &offset;
        self.inverse_offset = &self.mean_frame - &inverse.dot(&at_mean);
        self.forward = forward;
        self.forward_offset = offset;
        self.inverse = inverse;
        Ok(())
    }

    /// `a = F·y + o`.
    pub fn ema_to_artic(&self, frame: &EmaFrame) -> Result<ArticulatoryVector> {
        if frame.coords.len() != self.dims() {
            return Err(Error::Shape(format!(
                "frame has {} coordinates, model expects {}",
                frame.coords.len(),
                self.dims()
            )));
        }
        let y = Array1::from(frame.coords.clone());
        let a = self.forward.dot(&y) + &self.forward_offset;
        ArticulatoryVector::new(a.to_vec())
    }

    /// Maps many frames at once; rows of the result are articulatory vectors.
    pub fn ema_to_artic_batch(&self, frames: &[EmaFrame]) -> Result<Array2<f64>> {
        let data = frames_to_matrix(frames, self.dims())?;
        Ok(data.dot(&self.forward.t()) + self.forward_offset.view().insert_axis(Axis(0)))
    }

    /// Minimum-norm frame reconstruction around the training mean.
    pub fn artic_to_ema(&self, a: &ArticulatoryVector) -> Result<EmaFrame> {
        if a.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "articulatory vector has {} entries, model expects {}",
                a.len(),
                self.n_params()
            )));
        }
        let a = Array1::from(a.params().to_vec());
        let y = self.inverse.dot(&a) + &self.inverse_offset;
        Ok(EmaFrame {
            time_s: 0.0,
            coords: y.to_vec(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Format(format!(
                "expected {MODEL_FORMAT}, found {}",
                model.format
            )));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout_names(with_velum: bool) -> Vec<String> {
        CoilLayout::standard(with_velum).column_names()
    }

    #[test]
    fn standard_layouts_validate() {
        for v in [false, true] {
            let l = CoilLayout::standard(v);
            l.validate().unwrap();
            assert_eq!(l.dims(), if v { 14 } else { 12 });
            assert_eq!(CoilLayout::from_column_names(&layout_names(v)).unwrap(), l);
        }
    }

    #[test]
    fn layout_rejects_overlap_and_missing() {
        let mut l = CoilLayout::standard(false);
        l.lower_lip = [0, 11];
        assert!(l.validate().is_err());
        let mut names = layout_names(false);
        names.retain(|n| n != "td_y");
        assert!(CoilLayout::from_column_names(&names).is_err());
    }

    #[test]
    fn artic_vector_length_checked() {
        assert!(ArticulatoryVector::new(vec![0.0; 5]).is_err());
        assert!(ArticulatoryVector::new(vec![0.0; 6]).is_ok());
        assert!(ArticulatoryVector::new(vec![f64::NAN; 7]).is_err());
    }

    #[test]
    fn constant_corpus_fails_at_jaw() {
        let frames: Vec<EmaFrame> = (0..120)
            .map(|i| EmaFrame {
                time_s: i as f64 * 0.01,
                coords: vec![1.5; 12],
            })
            .collect();
        let err = fit_guided_pca(&frames, &CoilLayout::standard(false)).unwrap_err();
        assert_eq!(err.to_string(), "zero variance at stage jaw");
    }

    #[test]
    fn too_few_frames_rejected() {
        let frames = vec![
            EmaFrame {
                time_s: 0.0,
                coords: vec![0.0; 12]
            };
            50
        ];
        assert!(matches!(
            fit_guided_pca(&frames, &CoilLayout::standard(false)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let frames: Vec<EmaFrame> = (0..120)
            .map(|i| EmaFrame {
                time_s: 0.0,
                coords: vec![i as f64; 14],
            })
            .collect();
        assert!(matches!(
            fit_guided_pca(&frames, &CoilLayout::standard(false)),
            Err(Error::Shape(_))
        ));
    }
}
