//! Noisy boson sampling: exact output probabilities of partially
//! distinguishable, lossy photons in a linear interferometer, their
//! truncated permutation expansion, a Metropolis sampler over the truncated
//! distribution, and the accompanying error bounds.

pub mod bounds;
pub mod combinatorics;
pub mod ensembles;
pub mod error;
pub mod exact;
pub mod matrix;
pub mod permanent;
pub mod sampler;
pub mod summation;
pub mod truncation;

pub use combinatorics::{ModeConfiguration, Permutation};
pub use ensembles::{InterferometerUnitary, RngSeed};
pub use error::{Error, Result};
pub use exact::NoiseModel;
pub use matrix::ComplexMatrix;
pub use permanent::PermanentAlgorithm;
