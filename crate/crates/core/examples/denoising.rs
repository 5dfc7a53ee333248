//! A reduced denoising study: VAE against AR-VAE on babble-corrupted
//! cepstra at several SNRs.
//!
//! cargo run --release --example denoising -- [out_dir]

use artivae::experiments::{
    emit_report, prepare_frames, run_denoising, DenoisingConfig, Report, RunSettings,
};
use artivae::synthcorpus::{generate, SynthConfig};

fn main() -> artivae::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir()
            .join("artivae-denoising")
            .display()
            .to_string()
    });
    let corpus = generate(&SynthConfig {
        n_utterances: 10,
        ..SynthConfig::default()
    })?;
    let frames = prepare_frames(&corpus)?;
    let config = DenoisingConfig {
        n_seeds: 2,
        run: RunSettings {
            epochs: 8,
            hidden: vec![64, 32],
            ..RunSettings::default()
        },
        ..DenoisingConfig::default()
    };
    let report = run_denoising(&corpus, &frames, &config)?;

    println!("{:>6}  {:>16}  {:>16}", "SNR", "VAE", "AR-VAE");
    for &snr in &config.snrs {
        let vae = report.summary(snr, 0.0).expect("α = 0 run");
        let ar = report.summary(snr, 1.0).expect("α = 1 run");
        println!(
            "{:>6}  {:.4} ± {:.4}  {:.4} ± {:.4}",
            snr.to_string(),
            vae.mean,
            vae.std,
            ar.mean,
            ar.std
        );
    }
    for path in emit_report(&Report::Denoising(report), &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
