//! Loop vertex representation and loop vertex expansion of the
//! zero-dimensional `(phibar phi)^p` model.
//!
//! * [`kernel`]: the Fuss-Catalan tree function `T_p` and the loop vertex
//!   kernels `F_p`, `S_p`, `E_p` on the cut plane.
//! * [`derivative`]: exact derivatives of `S_p` by jet recursion.
//! * [`combinatorics`]: exact Fuss-Catalan, perturbative and tree counts.
//! * [`oracle`]: quadrature references for `Z_p` and the two-point cumulant.
//! * [`lve`]: the tree expansion of `log Z_p` with Monte Carlo field integrals.
//! * [`record`] and [`verify`]: persisted run records and invariant suites.

pub mod combinatorics;
pub mod derivative;
pub mod error;
pub mod jet;
pub mod kernel;
pub mod lve;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod record;
mod summation;
pub mod verify;

pub use error::{Error, Result};
pub use model::ModelSpec;
pub use summation::NeumaierSum;
