//! Command-line front end.
//!
//! Every subcommand reads settings from built-in defaults, then an optional
//! `key = value` file (`--config`), then command-line flags, in increasing
//! priority. The effective settings are written next to the outputs as
//! `effective.conf` in the same format.
//!
//! Exit status: 0 on success, 1 on runtime errors, 2 on usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::articulatory::{fit_guided_pca, read_ema_csv};
use crate::arvae::{train_from, write_curve_csv, Checkpoint, TrainConfig};
use crate::error::Error;
use crate::experiments::{
    emit_report, noisy_frames, prepare_frames, run_convergence, run_denoising, ConvergenceConfig,
    DenoisingConfig, Report, RunSettings, Snr,
};
use crate::features::{bark_cepstrum, read_wav, write_features_bin, write_features_csv};
use crate::synthcorpus::{generate, load_corpus, write_corpus, Corpus, SynthConfig};

pub const VERSION_TEXT: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nformats: artivae-gpca-v1 (articulatory model), artivae-feat-v1 (binary features),",
    " artivae-vae-v1 (checkpoint), artivae-corpus-v1 (corpus manifest),",
    " artivae-report-v1 (experiment summary)"
);

#[derive(Debug, Parser)]
#[command(name = "artivae", version = VERSION_TEXT, about = "Articulatory-regularized VAE toolkit")]
pub struct Cli {
    /// Settings file with `key = value` lines
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress progress messages
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic parallel corpus
    GenCorpus(GenCorpusArgs),
    /// Fit a guided-PCA articulatory model on an EMA CSV file
    FitArtic(FitArticArgs),
    /// Extract Bark cepstral features from a 16-bit PCM WAV file
    Features(FeaturesArgs),
    /// Train one VAE / AR-VAE on a corpus
    Train(TrainArgs),
    /// Run a multi-seed experiment
    Exp(ExpArgs),
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub utterances: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Articulatory parameters (6, or 7 with velum)
    #[arg(long, value_parser = clap::value_parser!(u8).range(6..=7))]
    pub params: Option<u8>,
    #[arg(long)]
    pub source_dims: Option<usize>,
    #[arg(long)]
    pub nonlinearity: Option<f64>,
    #[arg(long)]
    pub coil_noise: Option<f64>,
    /// Skip audio and babble synthesis
    #[arg(long)]
    pub no_audio: bool,
}

#[derive(Debug, Args)]
pub struct FitArticArgs {
    /// EMA CSV (`time_s` then `<coil>_x`, `<coil>_y` columns)
    pub ema: PathBuf,
    /// Model file (default: <out>/artic_model.json)
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FeatureFormat {
    Csv,
    Bin,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    pub wav: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FeatureFormat,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus directory or manifest
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Reconstruct clean features from noisy ones
    #[arg(long)]
    pub denoising: bool,
    /// Babble SNR in dB, or "clean" (denoising only)
    #[arg(long)]
    pub snr: Option<String>,
    /// Continue from a checkpoint's weights
    #[arg(long, value_name = "CHECKPOINT")]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Convergence,
    Denoising,
}

#[derive(Debug, Args)]
pub struct ExpArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    /// Corpus directory or manifest (default: generate one from the settings)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Comma-separated α values
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Comma-separated SNRs in dB or "clean"
    #[arg(long)]
    pub snrs: Option<String>,
}

/// Failure classes mapped to exit codes 2 and 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Recognized settings-file keys, their defaults and meaning.
pub const SETTINGS: &[(&str, &str, &str)] = &[
    ("out", "artivae-out", "output directory"),
    (
        "seed",
        "0",
        "training / experiment base seed (corpus seed for gen-corpus)",
    ),
    ("corpus_seed", "1", "seed of a corpus generated by exp"),
    ("utterances", "25", "corpus utterances"),
    ("frames", "200", "frames per utterance"),
    ("params", "6", "articulatory parameters (6 or 7)"),
    ("source_dims", "2", "non-articulatory source trajectories"),
    ("nonlinearity", "1", "spectral map nonlinearity scale"),
    ("coil_noise", "0.05", "EMA coil noise standard deviation"),
    (
        "cepstral_noise",
        "0.01",
        "cepstral observation noise standard deviation",
    ),
    ("audio", "true", "synthesize audio and babble"),
    ("alpha", "0", "articulatory regularization weight (train)"),
    ("epochs", "30", "training epochs"),
    ("batch_size", "32", "minibatch size"),
    ("learning_rate", "0.001", "Adam step size"),
    ("split", "0.8", "training fraction"),
    ("hidden", "256,128,64,32", "encoder hidden widths"),
    ("alphas", "", "experiment α values (default per experiment)"),
    ("seeds", "5", "seeds per configuration"),
    ("snrs", "clean,10,5,0", "denoising SNR conditions"),
    ("snr", "clean", "train --denoising SNR"),
    ("compare_epoch", "10", "convergence comparison epoch"),
    ("mix_seed", "0", "babble crop seed"),
];

/// Effective `key = value` settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn defaults() -> Self {
        Self {
            values: SETTINGS
                .iter()
                .map(|(k, v, _)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<(), Failure> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("{origin}:{}: expected key = value", i + 1)))?;
            let k = k.trim();
            if !self.values.contains_key(k) {
                return Err(usage(format!("{origin}:{}: unknown setting {k:?}", i + 1)));
            }
            self.values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        debug_assert!(self.values.contains_key(key), "unknown key {key}");
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T, Failure> {
        self.raw(key)
            .parse()
            .map_err(|_| usage(format!("setting {key}: cannot parse {:?}", self.raw(key))))
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, Failure> {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| usage(format!("setting {key}: cannot parse {s:?}")))
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn synth_config(&self, seed_key: &str) -> Result<SynthConfig, Failure> {
        let cfg = SynthConfig {
            n_utterances: self.get("utterances")?,
            frames_per_utterance: self.get("frames")?,
            n_params: self.get("params")?,
            source_dims: self.get("source_dims")?,
            seed: self.get(seed_key)?,
            nonlinearity_scale: self.get("nonlinearity")?,
            coil_noise: self.get("coil_noise")?,
            cepstral_noise: self.get("cepstral_noise")?,
            audio: self.get("audio")?,
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }

    fn run_settings(&self) -> Result<RunSettings, Failure> {
        Ok(RunSettings {
            epochs: self.get("epochs")?,
            batch_size: self.get("batch_size")?,
            learning_rate: self.get("learning_rate")?,
            split_fraction: self.get("split")?,
            hidden: self.list("hidden")?,
        })
    }
}

struct Ctx {
    settings: Settings,
    quiet: bool,
}

impl Ctx {
    fn out_dir(&self) -> Result<PathBuf, Failure> {
        let dir = PathBuf::from(self.settings.raw("out"));
        std::fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(e.into()))?;
        Ok(dir)
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn echo_settings(&self, dir: &Path) -> Result<(), Failure> {
        let text = self.settings.render();
        std::fs::write(dir.join("effective.conf"), &text)
            .map_err(|e| Failure::Runtime(e.into()))?;
        self.note(format!("effective settings:\n{text}"));
        Ok(())
    }
}

fn load(path: &Path) -> Result<Corpus, Failure> {
    load_corpus(path).map_err(|e| {
        Failure::Runtime(Error::Context {
            context: format!("loading corpus {}", path.display()),
            source: Box::new(e),
        })
    })
}

fn cmd_gen_corpus(ctx: &mut Ctx, args: &GenCorpusArgs) -> Result<(), Failure> {
    let s = &mut ctx.settings;
    if let Some(v) = args.utterances {
        s.set("utterances", v);
    }
    if let Some(v) = args.frames {
        s.set("frames", v);
    }
    if let Some(v) = args.params {
        s.set("params", v);
    }
    if let Some(v) = args.source_dims {
        s.set("source_dims", v);
    }
    if let Some(v) = args.nonlinearity {
        s.set("nonlinearity", v);
    }
    if let Some(v) = args.coil_noise {
        s.set("coil_noise", v);
    }
    if args.no_audio {
        s.set("audio", false);
    }
    let cfg = ctx.settings.synth_config("seed")?;
    let dir = ctx.out_dir()?;
    ctx.note(format!("generating {} frames", cfg.total_frames()));
    let corpus = generate(&cfg)?;
    let manifest = write_corpus(&corpus, &dir)?;
    ctx.echo_settings(&dir)?;
    println!("{}", manifest.display());
    Ok(())
}

fn cmd_fit_artic(ctx: &mut Ctx, args: &FitArticArgs) -> Result<(), Failure> {
    let (layout, frames) = read_ema_csv(&args.ema)?;
    let model = fit_guided_pca(&frames, &layout)?;
    let path = match &args.model {
        Some(p) => p.clone(),
        None => ctx.out_dir()?.join("artic_model.json"),
    };
    model.save(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_features(ctx: &mut Ctx, args: &FeaturesArgs) -> Result<(), Failure> {
    let audio = read_wav(&args.wav)?;
    let frames = bark_cepstrum(&audio)?;
    let stem = args
        .wav
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "features".into());
    let dir = ctx.out_dir()?;
    let path = match args.format {
        FeatureFormat::Csv => {
            let p = dir.join(format!("{stem}.csv"));
            write_features_csv(&p, &frames)?;
            p
        }
        FeatureFormat::Bin => {
            let p = dir.join(format!("{stem}.bin"));
            write_features_bin(&p, &frames)?;
            p
        }
    };
    ctx.note(format!("{} frames", frames.len()));
    println!("{}", path.display());
    Ok(())
}

fn cmd_train(ctx: &mut Ctx, args: &TrainArgs) -> Result<(), Failure> {
    if let Some(v) = args.alpha {
        ctx.settings.set("alpha", v);
    }
    if let Some(v) = args.epochs {
        ctx.settings.set("epochs", v);
    }
    if let Some(v) = &args.snr {
        if !args.denoising {
            return Err(usage("--snr requires --denoising"));
        }
        ctx.settings.set("snr", v);
    }
    let s = &ctx.settings;
    let run = s.run_settings()?;
    let config = TrainConfig {
        alpha: s.get("alpha")?,
        epochs: run.epochs,
        batch_size: run.batch_size,
        learning_rate: run.learning_rate,
        seed: s.get("seed")?,
        split_fraction: run.split_fraction,
        denoising: args.denoising,
        hidden: run.hidden,
        latent_dim: None,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let snr: Snr = s
        .raw("snr")
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    let mix_seed: u64 = s.get("mix_seed")?;

    let init = match &args.resume {
        Some(p) => Some(Checkpoint::load(p)?.params),
        None => None,
    };
    let corpus = load(&args.corpus)?;
    let mut frames = prepare_frames(&corpus)?;
    if args.denoising {
        frames = noisy_frames(&corpus, &frames, snr, mix_seed)?;
    }
    ctx.note(format!(
        "training {} (α = {}) for {} epochs on {} frames",
        config.label(),
        config.alpha,
        config.epochs,
        frames.len()
    ));
    let outcome = train_from(&config, &frames, init.as_ref())?;
    let dir = ctx.out_dir()?;
    let ckpt = dir.join("checkpoint.json");
    Checkpoint::new(&config, &outcome).save(&ckpt)?;
    let curve = dir.join("curve.csv");
    write_curve_csv(&curve, &outcome.curve)?;
    ctx.echo_settings(&dir)?;
    println!("{}", ckpt.display());
    println!("{}", curve.display());
    Ok(())
}

fn cmd_exp(ctx: &mut Ctx, args: &ExpArgs) -> Result<(), Failure> {
    if let Some(v) = &args.alphas {
        ctx.settings.set("alphas", v);
    }
    if let Some(v) = args.seeds {
        ctx.settings.set("seeds", v);
    }
    if let Some(v) = args.epochs {
        ctx.settings.set("epochs", v);
    }
    if let Some(v) = &args.snrs {
        ctx.settings.set("snrs", v);
    }
    let s = &ctx.settings;
    let run = s.run_settings()?;
    let alphas: Vec<f64> = s.list("alphas")?;
    let n_seeds: usize = s.get("seeds")?;
    let base_seed: u64 = s.get("seed")?;
    let corpus = match &args.corpus {
        Some(p) => load(p)?,
        None => {
            let mut cfg = s.synth_config("corpus_seed")?;
            if args.experiment == Experiment::Denoising && !cfg.audio {
                return Err(usage("the denoising experiment needs audio = true"));
            }
            cfg.audio = args.experiment == Experiment::Denoising;
            ctx.note(format!("generating a {}-frame corpus", cfg.total_frames()));
            generate(&cfg)?
        }
    };
    let frames = prepare_frames(&corpus)?;
    let report = match args.experiment {
        Experiment::Convergence => {
            let d = ConvergenceConfig::default();
            let cfg = ConvergenceConfig {
                alphas: if alphas.is_empty() { d.alphas } else { alphas },
                n_seeds,
                base_seed,
                compare_epoch: s.get::<usize>("compare_epoch")?.min(run.epochs),
                run,
            };
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            ctx.note(format!(
                "convergence: {} α values × {} seeds × {} epochs",
                cfg.alphas.len(),
                cfg.n_seeds,
                cfg.run.epochs
            ));
            Report::Convergence(run_convergence(&corpus, &frames, &cfg)?)
        }
        Experiment::Denoising => {
            let d = DenoisingConfig::default();
            let cfg = DenoisingConfig {
                snrs: s
                    .raw("snrs")
                    .split(',')
                    .map(|x| x.parse::<Snr>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| usage(e.to_string()))?,
                alphas: if alphas.is_empty() { d.alphas } else { alphas },
                n_seeds,
                base_seed,
                mix_seed: s.get("mix_seed")?,
                run,
            };
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            ctx.note(format!(
                "denoising: {} SNRs × {} α values × {} seeds × {} epochs",
                cfg.snrs.len(),
                cfg.alphas.len(),
                cfg.n_seeds,
                cfg.run.epochs
            ));
            Report::Denoising(run_denoising(&corpus, &frames, &cfg)?)
        }
    };
    let dir = ctx.out_dir()?;
    emit_report(&report, &dir)?;
    ctx.echo_settings(&dir)?;
    println!("{}", dir.join("summary.json").display());
    Ok(())
}

/// Parses the settings file and global flags, then dispatches.
pub fn execute(cli: &Cli) -> Result<(), Failure> {
    let mut settings = Settings::defaults();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        settings.merge_text(&text, &path.display().to_string())?;
    }
    if let Some(out) = &cli.out {
        settings.set("out", out.display());
    }
    if let Some(seed) = cli.seed {
        settings.set("seed", seed);
    }
    let mut ctx = Ctx {
        settings,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::GenCorpus(a) => cmd_gen_corpus(&mut ctx, a),
        Command::FitArtic(a) => cmd_fit_artic(&mut ctx, a),
        Command::Features(a) => cmd_features(&mut ctx, a),
        Command::Train(a) => cmd_train(&mut ctx, a),
        Command::Exp(a) => cmd_exp(&mut ctx, a),
    }
}

/// Full entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Runtime(e) => {
                    eprint!("error: {e}");
                    let mut src = std::error::Error::source(e);
                    while let Some(s) = src {
                        eprint!(": {s}");
                        src = s.source();
                    }
                    eprintln!();
                }
            }
            f.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{articulatory, arvae, experiments, features, synthcorpus};

    #[test]
    fn version_lists_every_format() {
        for f in [
            articulatory::MODEL_FORMAT,
            features::FEATURE_FORMAT,
            arvae::CHECKPOINT_FORMAT,
            synthcorpus::CORPUS_FORMAT,
            experiments::REPORT_FORMAT,
        ] {
            assert!(VERSION_TEXT.contains(f), "{f}");
        }
    }

    #[test]
    fn settings_file_parsing() {
        let mut s = Settings::defaults();
        s.merge_text("# comment\nepochs = 7\n\nalphas = 0, 0.5 # trailing\n", "t")
            .unwrap();
        assert_eq!(s.get::<usize>("epochs").unwrap(), 7);
        assert_eq!(s.list::<f64>("alphas").unwrap(), vec![0.0, 0.5]);
        assert!(matches!(
            s.merge_text("bogus = 1", "t"),
            Err(Failure::Usage(_))
        ));
        assert!(matches!(
            s.merge_text("epochs 3", "t"),
            Err(Failure::Usage(_))
        ));
    }

    #[test]
    fn render_round_trips() {
        let mut s = Settings::defaults();
        s.set("alpha", 0.25);
        let mut back = Settings::defaults();
        back.merge_text(&s.render(), "r").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
