//! Verification laboratory for gradient descent on over-parameterized
//! two-layer ReLU networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: dense linear algebra (norms, eigenvalues, singular values,
//!   Geršgorin and Weyl helpers).
//! - [`dataset`]: unit-sphere training sets, pairwise angles, the angle-based
//!   matrix and its smallest eigenvalue.
//! - [`network`]: the two-layer ReLU model, quadratic loss, gradients,
//!   directional curvature and the gradient-descent loop.
//! - [`activation`]: binary activation matrices, their perturbations and
//!   flip-candidate sets.
//! - [`oracles`]: closed-form Gaussian-geometry expectations with quadrature
//!   and Monte Carlo twins.
//! - [`bounds`]: every inequality and rate formula evaluated as a
//!   [`BoundCheck`].
//! - [`harness`]: experiment configuration, seeded runs, sweeps and
//!   CSV/JSON/report output.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod activation;
pub mod bounds;
pub mod check;
pub mod dataset;
mod error;
pub mod harness;
pub mod network;
pub mod oracles;
pub mod seed;
pub mod spectral;
pub(crate) mod textio;

pub use check::BoundCheck;
pub use error::{Error, Result};
pub use spectral::RealMatrix;
