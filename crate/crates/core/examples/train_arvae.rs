//! Train a plain VAE and an articulatory-regularized VAE on the same split.
//!
//! cargo run --release --example train_arvae -- [epochs]

use artivae::arvae::{train, TrainConfig};
use artivae::experiments::prepare_frames;
use artivae::synthcorpus::{generate, SynthConfig};

fn main() -> artivae::Result<()> {
    let epochs = std::env::args()
        .nth(1)
        .map_or(8, |s| s.parse().expect("epochs"));
    let corpus = generate(&SynthConfig {
        n_utterances: 10,
        audio: false,
        ..SynthConfig::default()
    })?;
    let frames = prepare_frames(&corpus)?;

    let base = TrainConfig {
        epochs,
        hidden: vec![64, 32],
        seed: 3,
        ..TrainConfig::default()
    };
    for alpha in [0.0, 1.0] {
        let config = TrainConfig {
            alpha,
            ..base.clone()
        };
        let out = train(&config, &frames)?;
        let curve: Vec<String> = out.curve.iter().map(|m| format!("{m:.4}")).collect();
        println!("{:<6} α={alpha}: {}", config.label(), curve.join(" "));
    }
    Ok(())
}
