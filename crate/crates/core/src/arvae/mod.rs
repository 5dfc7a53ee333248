//! Variational autoencoder over cepstral frames with an optional
//! articulatory penalty tying the first `N` latent entries to the
//! articulatory vector of each frame.

mod adam;
mod loss;
mod network;
mod train;

pub use adam::{adam_step, Adam, BETA1, BETA2, EPSILON};
pub use loss::{artic_reg, batch_loss, gaussian_loglik, kl_standard_normal, loss_and_grads, Batch};
pub use network::{
    decode, encode, reconstruct_batch, reparameterize, Architecture, Dense, LatentPosterior,
    VaeParams, CANONICAL_HIDDEN, LOGVAR_MAX, LOGVAR_MIN,
};
pub use train::{
    model_label, reconstruction_mse, split_indices, train, train_from, write_curve_csv, Checkpoint,
    FrameMatrices, Standardizer, TrainConfig, TrainOutcome, CHECKPOINT_FORMAT,
};
