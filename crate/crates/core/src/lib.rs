//! Infinite-width NNGP/NTK kernels for multilayer perceptrons, their leading
//! 1/width correction tensors, and a deterministic Monte-Carlo ensemble
//! sampler used to validate the layer-wise recursions.
//!
//! The crate is organized around five building blocks:
//!
//! - [`activation`]: activation functions with pointwise derivatives up to
//!   third order and scale-invariance metadata.
//! - [`moments`]: mean-zero Gaussian expectations of products of activation
//!   derivatives, the primitive every recursion is assembled from. Closed
//!   forms are used for scale-invariant activations, tensorized quadrature
//!   otherwise.
//! - [`kernels`]: the layer recursion for the infinite-width NNGP kernel `K`
//!   and frozen NTK `Theta`, plus the four susceptibilities and the critical
//!   initialization variance.
//! - [`tensors`]: recursions for the order-1/width statistics `V4, D, F, A,
//!   B`, the mean corrections `K1, Theta1`, and the dNTK/ddNTK tensors
//!   `P, Q, R, S, T, U`.
//! - [`mc`]: finite-width network ensembles sampled with a counter-based RNG,
//!   empirical NNGP/NTK kernels, and the rank-4 cumulant estimators.
//!
//! Scalars are `f64` throughout. States are immutable snapshots; stepping a
//! recursion returns a new state.

pub mod activation;
pub mod error;
pub mod fit;
pub mod input;
pub mod kernels;
pub mod linalg;
pub mod mc;
pub mod moments;
pub mod tensors;

pub use activation::{ActivationKind, ActivationModel};
pub use error::{Error, Result};
pub use input::InputSet;
pub use kernels::{critical_cw, init_kernels, step_kernels, susceptibilities, KernelState, Susceptibilities};
pub use moments::{Covariance, MomentEngine, MomentQuery};
pub use tensors::{init_tensors, TensorState};
