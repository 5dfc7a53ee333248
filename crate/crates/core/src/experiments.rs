//! Multi-seed comparisons of the plain VAE (α = 0) against articulatory
//! regularized models: learning speed on clean features and denoising of
//! babble-corrupted features.
//!
//! Runs at the same seed differ only in α: data split, initial weights,
//! batch order and reparameterization noise are all drawn from seed-keyed
//! streams that do not depend on α.

use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::articulatory::fit_guided_pca;
use crate::arvae::{model_label, train, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{bark_cepstrum, mix_at_snr, ParallelFrame};
use crate::numerics::{fit_exponential_decay, ExpFit};
use crate::synthcorpus::{derive_seed, Corpus};

pub const REPORT_FORMAT: &str = "artivae-report-v1";
pub const THREADS_ENV: &str = "ARTIVAE_THREADS";

/// Worker threads for independent runs: `ARTIVAE_THREADS`, default 1.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Runs `jobs` on up to `threads` workers; results come back in job order.
pub fn run_ordered<J, T, F>(jobs: &[J], threads: usize, f: F) -> Vec<T>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> T + Sync,
{
    if threads <= 1 || jobs.len() <= 1 {
        return jobs.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<T>> = (0..jobs.len()).map(|_| None).collect();
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..threads.min(jobs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let out = f(&jobs[i]);
                results.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// Corpus cepstra paired with articulatory parameters estimated by a
/// guided-PCA model fitted on the corpus EMA.
pub fn prepare_frames(corpus: &Corpus) -> Result<Vec<ParallelFrame>> {
    let model = fit_guided_pca(&corpus.all_ema(), corpus.layout())?;
    corpus.parallel_frames(&model)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn context(what: String) -> impl FnOnce(Error) -> Error {
    move |e| Error::Context {
        context: what,
        source: Box::new(e),
    }
}

/// Training settings shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub split_fraction: f64,
    pub hidden: Vec<usize>,
}

impl Default for RunSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            split_fraction: t.split_fraction,
            hidden: t.hidden,
        }
    }
}

impl RunSettings {
    fn train_config(&self, alpha: f64, seed: u64, denoising: bool) -> TrainConfig {
        TrainConfig {
            alpha,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed,
            split_fraction: self.split_fraction,
            denoising,
            hidden: self.hidden.clone(),
            latent_dim: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub alphas: Vec<f64>,
    pub n_seeds: usize,
    pub base_seed: u64,
    /// Epoch (1-based) at which paired seeds are compared for speed.
    pub compare_epoch: usize,
    pub run: RunSettings,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.0, 0.25, 1.0],
            n_seeds: 5,
            base_seed: 0,
            compare_epoch: 10,
            run: RunSettings::default(),
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.n_seeds == 0 || self.run.epochs == 0 {
            return Err(Error::InvalidInput(
                "need at least one α, one seed and one epoch".into(),
            ));
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidInput("α values must be nonnegative".into()));
        }
        for (i, a) in self.alphas.iter().enumerate() {
            if self.alphas[..i].contains(a) {
                return Err(Error::InvalidInput(format!("α = {a} listed twice")));
            }
        }
        if self.run.epochs < 4 {
            return Err(Error::InvalidInput(format!(
                "the learning-curve fit needs at least 4 epochs, got {}",
                self.run.epochs
            )));
        }
        if self.compare_epoch == 0 || self.compare_epoch > self.run.epochs {
            return Err(Error::InvalidInput(format!(
                "comparison epoch {} outside 1..={}",
                self.compare_epoch, self.run.epochs
            )));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64)
            .map(|i| self.base_seed + i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRun {
    pub alpha: f64,
    pub model: String,
    pub seed: u64,
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub model: String,
    pub mean_curve: Vec<f64>,
    /// Fit of the mean curve against epoch number (1-based).
    pub fit: ExpFit,
    pub final_mean: f64,
    pub final_std: f64,
    pub compare_mean: f64,
}

/// How many paired seeds favour regularized models over α = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignCounts {
    pub n_seeds: usize,
    /// Per α > 0: seeds whose MSE at the comparison epoch is below α = 0's.
    pub at_compare_epoch: Vec<(f64, usize)>,
    /// Per α > 0: seeds whose final MSE is below α = 0's.
    pub at_final_epoch: Vec<(f64, usize)>,
    /// Seeds where some α > 0 beats α = 0 at the comparison epoch.
    pub any_alpha_at_compare_epoch: usize,
    pub any_alpha_at_final_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub format: String,
    pub experiment: String,
    pub corpus_hash: String,
    pub config: ConvergenceConfig,
    pub runs: Vec<CurveRun>,
    pub per_alpha: Vec<AlphaSummary>,
    /// Absent when α = 0 is not among the α values.
    pub sign_counts: Option<SignCounts>,
}

impl ConvergenceReport {
    pub fn summary(&self, alpha: f64) -> Option<&AlphaSummary> {
        self.per_alpha.iter().find(|s| s.alpha == alpha)
    }

    pub fn curve(&self, alpha: f64, seed: u64) -> Option<&[f64]> {
        self.runs
            .iter()
            .find(|r| r.alpha == alpha && r.seed == seed)
            .map(|r| r.curve.as_slice())
    }

    /// α > 0 with the lowest mean final MSE.
    pub fn best_regularized(&self) -> Option<&AlphaSummary> {
        self.per_alpha
            .iter()
            .filter(|s| s.alpha > 0.0)
            .min_by(|a, b| a.final_mean.total_cmp(&b.final_mean))
    }
}

fn sign_counts(
    alphas: &[f64],
    seeds: &[u64],
    value: impl Fn(f64, u64) -> f64,
) -> (Vec<(f64, usize)>, usize) {
    let per_alpha = alphas
        .iter()
        .filter(|&&a| a > 0.0)
        .map(|&a| {
            (
                a,
                seeds
                    .iter()
                    .filter(|&&s| value(a, s) < value(0.0, s))
                    .count(),
            )
        })
        .collect();
    let any = seeds
        .iter()
        .filter(|&&s| {
            alphas
                .iter()
                .any(|&a| a > 0.0 && value(a, s) < value(0.0, s))
        })
        .count();
    (per_alpha, any)
}

pub fn run_convergence(
    corpus: &Corpus,
    frames: &[ParallelFrame],
    config: &ConvergenceConfig,
) -> Result<ConvergenceReport> {
    config.validate()?;
    let seeds = config.seeds();
    let jobs: Vec<(f64, u64)> = config
        .alphas
        .iter()
        .flat_map(|&a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    let results = run_ordered(&jobs, thread_count(), |&(alpha, seed)| {
        train(&config.run.train_config(alpha, seed, false), frames)
            .map(|o| o.curve)
            .map_err(context(format!("α = {alpha}, seed {seed}")))
    });
    let mut runs = Vec::with_capacity(jobs.len());
    for (&(alpha, seed), curve) in jobs.iter().zip(results) {
        runs.push(CurveRun {
            alpha,
            model: model_label(alpha).into(),
            seed,
            curve: curve?,
        });
    }

    let epochs = config.run.epochs;
    let t: Vec<f64> = (1..=epochs).map(|e| e as f64).collect();
    let mut per_alpha = Vec::with_capacity(config.alphas.len());
    for &alpha in &config.alphas {
        let curves: Vec<&[f64]> = runs
            .iter()
            .filter(|r| r.alpha == alpha)
            .map(|r| r.curve.as_slice())
            .collect();
        let mean_curve: Vec<f64> = (0..epochs)
            .map(|e| curves.iter().map(|c| c[e]).sum::<f64>() / curves.len() as f64)
            .collect();
        let finals: Vec<f64> = curves.iter().map(|c| c[epochs - 1]).collect();
        let (final_mean, final_std) = mean_std(&finals);
        per_alpha.push(AlphaSummary {
            alpha,
            model: model_label(alpha).into(),
            fit: fit_exponential_decay(&t, &mean_curve)
                .map_err(context(format!("exponential fit for α = {alpha}")))?,
            compare_mean: mean_curve[config.compare_epoch - 1],
            mean_curve,
            final_mean,
            final_std,
        });
    }

    let sign_counts = config.alphas.contains(&0.0).then(|| {
        let at = |epoch: usize| {
            let runs = &runs;
            move |a: f64, s: u64| {
                runs.iter()
                    .find(|r| r.alpha == a && r.seed == s)
                    .map(|r| r.curve[epoch])
                    .unwrap_or(f64::NAN)
            }
        };
        let (at_compare, any_compare) =
            sign_counts(&config.alphas, &seeds, at(config.compare_epoch - 1));
        let (at_final, any_final) = sign_counts(&config.alphas, &seeds, at(epochs - 1));
        SignCounts {
            n_seeds: seeds.len(),
            at_compare_epoch: at_compare,
            at_final_epoch: at_final,
            any_alpha_at_compare_epoch: any_compare,
            any_alpha_at_final_epoch: any_final,
        }
    });

    Ok(ConvergenceReport {
        format: REPORT_FORMAT.into(),
        experiment: "convergence".into(),
        corpus_hash: corpus.manifest_hash()?,
        config: config.clone(),
        runs,
        per_alpha,
        sign_counts,
    })
}

/// Noise condition: clean input, or babble mixed at a given SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Clean,
    Db(f64),
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Clean => f.write_str("clean"),
            Snr::Db(db) => write!(f, "{db}"),
        }
    }
}

impl std::str::FromStr for Snr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("clean") {
            return Ok(Snr::Clean);
        }
        let db: f64 = s
            .trim_end_matches("dB")
            .trim_end_matches("db")
            .trim()
            .parse()
            .map_err(|_| {
                Error::InvalidInput(format!("bad SNR {s:?} (expected \"clean\" or dB)"))
            })?;
        if !db.is_finite() {
            return Err(Error::InvalidInput(format!("bad SNR {s:?}")));
        }
        Ok(Snr::Db(db))
    }
}

impl Serialize for Snr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoisingConfig {
    pub snrs: Vec<Snr>,
    pub alphas: Vec<f64>,
    pub n_seeds: usize,
    pub base_seed: u64,
    /// Seeds the babble crop offsets (shared by every SNR).
    pub mix_seed: u64,
    pub run: RunSettings,
}

impl Default for DenoisingConfig {
    fn default() -> Self {
        Self {
            snrs: vec![Snr::Clean, Snr::Db(10.0), Snr::Db(5.0), Snr::Db(0.0)],
            alphas: vec![0.0, 1.0],
            n_seeds: 5,
            base_seed: 0,
            mix_seed: 0,
            run: RunSettings::default(),
        }
    }
}

impl DenoisingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snrs.is_empty()
            || self.alphas.is_empty()
            || self.n_seeds == 0
            || self.run.epochs == 0
        {
            return Err(Error::InvalidInput(
                "need at least one SNR, one α, one seed and one epoch".into(),
            ));
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidInput("α values must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64)
            .map(|i| self.base_seed + i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoisingRun {
    pub snr: Snr,
    pub alpha: f64,
    pub model: String,
    pub seed: u64,
    pub curve: Vec<f64>,
    pub final_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoisingSummary {
    pub snr: Snr,
    pub alpha: f64,
    pub model: String,
    pub mean: f64,
    pub std: f64,
    /// Seeds where this α beats α = 0 at the same SNR (absent for α = 0 or
    /// when α = 0 is not run).
    pub seeds_better_than_vae: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoisingReport {
    pub format: String,
    pub experiment: String,
    pub corpus_hash: String,
    pub config: DenoisingConfig,
    pub runs: Vec<DenoisingRun>,
    pub summaries: Vec<DenoisingSummary>,
}

impl DenoisingReport {
    pub fn summary(&self, snr: Snr, alpha: f64) -> Option<&DenoisingSummary> {
        self.summaries
            .iter()
            .find(|s| s.snr == snr && s.alpha == alpha)
    }
}

/// Frames whose encoder input is the corpus audio mixed with babble at
/// `snr` and re-analysed; for [`Snr::Clean`] the input is the clean
/// features themselves. Crop offsets depend only on `mix_seed` and the
/// utterance index.
pub fn noisy_frames(
    corpus: &Corpus,
    frames: &[ParallelFrame],
    snr: Snr,
    mix_seed: u64,
) -> Result<Vec<ParallelFrame>> {
    if frames.len() != corpus.n_frames() {
        return Err(Error::Shape(format!(
            "{} frames given for a corpus of {}",
            frames.len(),
            corpus.n_frames()
        )));
    }
    let mut out = frames.to_vec();
    let db = match snr {
        Snr::Clean => {
            for f in &mut out {
                f.x_noisy = Some(f.x);
            }
            return Ok(out);
        }
        Snr::Db(db) => db,
    };
    let babble = corpus
        .babble
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("corpus has no babble noise track".into()))?;
    let mut start = 0;
    for (i, u) in corpus.utterances.iter().enumerate() {
        let audio = u
            .audio
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("utterance {} has no audio", u.id)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(mix_seed, i as u64));
        let mixed = mix_at_snr(audio, babble, db, &mut rng)?;
        let noisy = bark_cepstrum(&mixed)?;
        let n = u.cepstra.len();
        if noisy.len() != n {
            return Err(Error::Shape(format!(
                "utterance {}: {} noisy frames for {n} clean frames",
                u.id,
                noisy.len()
            )));
        }
        for (f, x) in out[start..start + n].iter_mut().zip(noisy) {
            f.x_noisy = Some(x);
        }
        start += n;
    }
    Ok(out)
}

pub fn run_denoising(
    corpus: &Corpus,
    frames: &[ParallelFrame],
    config: &DenoisingConfig,
) -> Result<DenoisingReport> {
    config.validate()?;
    let seeds = config.seeds();
    let mut runs = Vec::new();
    for &snr in &config.snrs {
        let data = noisy_frames(corpus, frames, snr, config.mix_seed)
            .map_err(context(format!("SNR {snr}")))?;
        let jobs: Vec<(f64, u64)> = config
            .alphas
            .iter()
            .flat_map(|&a| seeds.iter().map(move |&s| (a, s)))
            .collect();
        let results = run_ordered(&jobs, thread_count(), |&(alpha, seed)| {
            train(&config.run.train_config(alpha, seed, true), &data)
                .map(|o| o.curve)
                .map_err(context(format!("SNR {snr}, α = {alpha}, seed {seed}")))
        });
        for (&(alpha, seed), curve) in jobs.iter().zip(results) {
            let curve = curve?;
            runs.push(DenoisingRun {
                snr,
                alpha,
                model: model_label(alpha).into(),
                seed,
                final_mse: *curve.last().expect("at least one epoch"),
                curve,
            });
        }
    }

    let final_of = |snr: Snr, alpha: f64, seed: u64| {
        runs.iter()
            .find(|r| r.snr == snr && r.alpha == alpha && r.seed == seed)
            .map(|r| r.final_mse)
    };
    let mut summaries = Vec::new();
    for &snr in &config.snrs {
        for &alpha in &config.alphas {
            let finals: Vec<f64> = seeds
                .iter()
                .filter_map(|&s| final_of(snr, alpha, s))
                .collect();
            let (mean, std) = mean_std(&finals);
            let better = (alpha > 0.0 && config.alphas.contains(&0.0)).then(|| {
                seeds
                    .iter()
                    .filter(|&&s| final_of(snr, alpha, s) < final_of(snr, 0.0, s))
                    .count()
            });
            summaries.push(DenoisingSummary {
                snr,
                alpha,
                model: model_label(alpha).into(),
                mean,
                std,
                seeds_better_than_vae: better,
            });
        }
    }

    Ok(DenoisingReport {
        format: REPORT_FORMAT.into(),
        experiment: "denoising".into(),
        corpus_hash: corpus.manifest_hash()?,
        config: config.clone(),
        runs,
        summaries,
    })
}

/// Either experiment's report.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Convergence(ConvergenceReport),
    Denoising(DenoisingReport),
}

const REPORT_README: &str = "\
Experiment report
=================

curves.csv    test reconstruction MSE after every epoch of every run
              (condition, alpha, model, seed, epoch, mse); condition is
              \"clean\" for the convergence study, the SNR otherwise
summary.json  the full report: configuration, corpus manifest hash,
              per-run curves and aggregates
config.json   the configuration alone
";

fn fig_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn curve_rows<'a>(
    runs: impl Iterator<Item = (String, f64, &'a str, u64, &'a [f64])>,
) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (cond, alpha, model, seed, curve) in runs {
        for (e, v) in curve.iter().enumerate() {
            rows.push(vec![
                cond.clone(),
                alpha.to_string(),
                model.to_string(),
                seed.to_string(),
                (e + 1).to_string(),
                v.to_string(),
            ]);
        }
    }
    rows
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    Ok((serde_json::to_string_pretty(v)? + "\n").into_bytes())
}

/// Report files as (name, bytes).
pub fn render_report(report: &Report) -> Result<Vec<(String, Vec<u8>)>> {
    const CURVE_HEADER: [&str; 6] = ["condition", "alpha", "model", "seed", "epoch", "mse"];
    let mut files = Vec::new();
    match report {
        Report::Convergence(r) => {
            let rows = curve_rows(r.runs.iter().map(|x| {
                (
                    "clean".to_string(),
                    x.alpha,
                    x.model.as_str(),
                    x.seed,
                    x.curve.as_slice(),
                )
            }));
            files.push(("curves.csv".into(), fig_csv(&CURVE_HEADER, rows)?));
            files.push(("summary.json".into(), json(r)?));
            files.push(("config.json".into(), json(&r.config)?));
            // learning curves with their exponential fits
            let mut header = vec!["epoch".to_string()];
            for s in &r.per_alpha {
                header.push(format!("mean_alpha_{}", s.alpha));
                header.push(format!("fit_alpha_{}", s.alpha));
            }
            let rows = (0..r.config.run.epochs)
                .map(|e| {
                    let mut row = vec![(e + 1).to_string()];
                    for s in &r.per_alpha {
                        row.push(s.mean_curve[e].to_string());
                        row.push(s.fit.eval((e + 1) as f64).to_string());
                    }
                    row
                })
                .collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            files.push(("fig2a.csv".into(), fig_csv(&header, rows)?));
            let rows = r
                .per_alpha
                .iter()
                .map(|s| {
                    vec![
                        s.alpha.to_string(),
                        s.model.clone(),
                        s.final_mean.to_string(),
                        s.final_std.to_string(),
                        s.fit.offset.to_string(),
                        s.fit.amplitude.to_string(),
                        s.fit.rate.to_string(),
                    ]
                })
                .collect();
            files.push((
                "fig2b.csv".into(),
                fig_csv(
                    &[
                        "alpha",
                        "model",
                        "final_mean",
                        "final_std",
                        "fit_offset",
                        "fit_amplitude",
                        "fit_rate",
                    ],
                    rows,
                )?,
            ));
        }
        Report::Denoising(r) => {
            let rows = curve_rows(r.runs.iter().map(|x| {
                (
                    x.snr.to_string(),
                    x.alpha,
                    x.model.as_str(),
                    x.seed,
                    x.curve.as_slice(),
                )
            }));
            files.push(("curves.csv".into(), fig_csv(&CURVE_HEADER, rows)?));
            files.push(("summary.json".into(), json(r)?));
            files.push(("config.json".into(), json(&r.config)?));
            let rows = r
                .summaries
                .iter()
                .map(|s| {
                    vec![
                        s.snr.to_string(),
                        s.alpha.to_string(),
                        s.model.clone(),
                        s.mean.to_string(),
                        s.std.to_string(),
                        s.seeds_better_than_vae
                            .map(|n| n.to_string())
                            .unwrap_or_default(),
                    ]
                })
                .collect();
            files.push((
                "fig3.csv".into(),
                fig_csv(
                    &[
                        "snr",
                        "alpha",
                        "model",
                        "mean_mse",
                        "std_mse",
                        "seeds_better_than_vae",
                    ],
                    rows,
                )?,
            ));
        }
    }
    files.push(("README.txt".into(), REPORT_README.as_bytes().to_vec()));
    Ok(files)
}

/// Writes the report files into `out_dir`, creating it if needed.
pub fn emit_report(report: &Report, out_dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)
        .map_err(|e| context(format!("creating {}", dir.display()))(e.into()))?;
    let mut written = Vec::new();
    for (name, bytes) in render_report(report)? {
        let path = dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| context(format!("writing {}", path.display()))(e.into()))?;
        written.push(path);
    }
    Ok(written)
}
