//! Group ensemble ConvNets from scratch.
//!
//! A shared-base, multi-head convolutional network built on grouped
//! convolution, trained end-to-end with three sample-weight aggregation
//! strategies (averaging, wagging, boosting), plus a statistical simulator
//! for the ensemble-output variance analysis. Everything runs on the CPU in
//! plain Rust; f32 is the training precision, f64 backs the gradient-check
//! oracles.

pub mod error;
pub mod rng;
pub mod tensor;
pub mod linalg;
pub mod conv;

pub use error::{Error, Result};
pub use rng::RngState;
pub use tensor::{Scalar, Tensor};
