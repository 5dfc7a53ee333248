//! A reduced convergence study: learning curves for several α over paired
//! seeds, with exponential fits, written as a report directory.
//!
//! cargo run --release --example convergence -- [out_dir]
//!
//! Set ARTIVAE_THREADS to run seeds in parallel; results do not change.

use artivae::experiments::{
    emit_report, prepare_frames, run_convergence, ConvergenceConfig, Report, RunSettings,
};
use artivae::synthcorpus::{generate, SynthConfig};

fn main() -> artivae::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir()
            .join("artivae-convergence")
            .display()
            .to_string()
    });
    let corpus = generate(&SynthConfig {
        n_utterances: 10,
        audio: false,
        ..SynthConfig::default()
    })?;
    let frames = prepare_frames(&corpus)?;
    let config = ConvergenceConfig {
        alphas: vec![0.0, 0.25, 1.0],
        n_seeds: 3,
        compare_epoch: 4,
        run: RunSettings {
            epochs: 10,
            hidden: vec![64, 32],
            ..RunSettings::default()
        },
        ..ConvergenceConfig::default()
    };
    let report = run_convergence(&corpus, &frames, &config)?;

    for s in &report.per_alpha {
        println!(
            "α={:<5} final {:.4} ± {:.4}   fit {:.3} + {:.3}·exp(−{:.3}·t)",
            s.alpha, s.final_mean, s.final_std, s.fit.offset, s.fit.amplitude, s.fit.rate
        );
    }
    if let Some(sc) = &report.sign_counts {
        println!(
            "seeds where some α > 0 beats α = 0: {}/{} at epoch {}, {}/{} at the end",
            sc.any_alpha_at_compare_epoch,
            sc.n_seeds,
            config.compare_epoch,
            sc.any_alpha_at_final_epoch,
            sc.n_seeds
        );
    }
    for path in emit_report(&Report::Convergence(report), &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
