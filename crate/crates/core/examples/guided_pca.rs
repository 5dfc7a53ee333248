//! Fit the staged articulatory model on noisy EMA and compare the recovered
//! parameters with the generating ones.
//!
//! cargo run --release --example guided_pca

use artivae::articulatory::{fit_guided_pca, PARAM_NAMES};
use artivae::numerics::correlation;
use artivae::synthcorpus::{generate, SynthConfig};

fn main() -> artivae::Result<()> {
    for n_params in [6, 7] {
        let corpus = generate(&SynthConfig {
            n_params,
            coil_noise: 0.05,
            audio: false,
            ..SynthConfig::default()
        })?;
        let frames = corpus.all_ema();
        let model = fit_guided_pca(&frames, corpus.layout())?;
        let fitted = model.ema_to_artic_batch(&frames)?;
        let truth = corpus.all_artic_true();

        println!("N = {n_params}, {} coil coordinates", model.dims());
        for (j, name) in PARAM_NAMES.iter().take(n_params).enumerate() {
            let r = correlation(fitted.column(j), truth.column(j));
            println!("  {name}  corr {r:+.5}");
        }

        // a -> y -> a is exact
        let a = model.ema_to_artic(&frames[0])?;
        let back = model.ema_to_artic(&model.artic_to_ema(&a)?)?;
        let err = a
            .params()
            .iter()
            .zip(back.params())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        println!("  round trip error {err:.1e}");
    }
    Ok(())
}
