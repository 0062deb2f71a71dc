pub mod baselines;
pub mod cli;
pub mod error;
pub mod graphgen;
pub mod matcore;
pub mod mmf;
pub mod rlpolicy;
pub mod seeding;
pub mod stiefel;
pub mod wavelets;
pub mod wnn;

pub use error::{Error, Result};
