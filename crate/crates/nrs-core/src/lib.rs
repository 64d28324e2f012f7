//! Neural random subspace networks for vectorized inputs.
//!
//! The core pipeline expands a feature vector into an `n_h x n_h x C` tensor
//! through `M = n_h^2 * n_mul` seeded random permutations, aggregates each
//! channel group with a full-extent grouped convolution (one scalar per
//! channel), and classifies with a batch-normalized two-layer FC head. Every
//! backward pass is written by hand and verified against central
//! differences; all randomness flows from explicit seeds through ChaCha8
//! streams, so training runs are bit-reproducible.
//!
//! Crate layout:
//! - [`tensor`]: dense row-major f64 arrays with a fixed summation order
//! - [`net`]: permutation plans, expansion, layers, losses, full models
//! - [`optim`]: Adam and SGD with frozen-parameter support
//! - [`data`]: LIBSVM/CSV ingestion, standardization, splits, batches
//! - [`train`]: the deterministic training loop
//! - [`analysis`]: cost accounting, gradient checks, sweeps, ablations
//! - [`checkpoint`]: versioned binary model files

pub mod analysis;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod net;
pub mod optim;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{NrsError, Result};
pub use net::{Arch, ExpansionMode, Model, Network, NetworkSpec, Task};
pub use tensor::DenseTensor;
