pub mod articulatory;
pub mod arvae;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod features;
pub mod numerics;
pub mod synthcorpus;

pub use error::{Error, Result};
