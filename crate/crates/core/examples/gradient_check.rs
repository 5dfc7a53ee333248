//! Compare analytic gradients with central differences on a small network.
//!
//! cargo run --release --example gradient_check

use artivae::arvae::{batch_loss, loss_and_grads, Architecture, Batch, VaeParams};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> artivae::Result<()> {
    let arch = Architecture {
        input_dim: 18,
        hidden: vec![16, 8],
        latent_dim: 12,
        constrained_dim: 6,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut params = VaeParams::init(&arch, &mut rng)?;
    let mut normal =
        |r, c| Array2::from_shape_simple_fn((r, c), || StandardNormal.sample(&mut rng));
    let x = normal(8, 18);
    let batch = Batch {
        x_in: x.clone(),
        x_target: x,
        artic: normal(8, 6),
    };
    let eps = normal(8, 12);

    let alpha = 0.5;
    let (loss, grads) = loss_and_grads(&params, &batch, alpha, eps.view())?;
    println!("loss {loss:.6}, {} parameters", params.n_params());

    let h = 1e-5;
    let names = params.tensor_names();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    let mut worst = 0.0f64;
    for (t, name) in names.iter().enumerate() {
        let mut tensor_worst = 0.0f64;
        for k in 0..analytic[t].len() {
            let orig = params.tensors()[t][k];
            params.tensors_mut()[t][k] = orig + h;
            let up = batch_loss(&params, &batch, alpha, eps.view())?;
            params.tensors_mut()[t][k] = orig - h;
            let down = batch_loss(&params, &batch, alpha, eps.view())?;
            params.tensors_mut()[t][k] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = analytic[t][k];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-5);
            tensor_worst = tensor_worst.max(rel);
        }
        println!("{name:<18} max relative error {tensor_worst:.2e}");
        worst = worst.max(tensor_worst);
    }
    println!("overall {worst:.2e}");
    Ok(())
}
