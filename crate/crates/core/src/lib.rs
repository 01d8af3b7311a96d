//! Pseudo-spectral primitive equations and ε-scaled Navier–Stokes on the
//! 3-torus, with tools to measure the hydrostatic-approximation error and
//! to probe the underlying kernel, projection and nonlinear estimates
//! numerically.

// NaN must fail range checks, which `!(x > 0.0)` expresses directly
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aniso;
pub mod checkpoint;
pub mod error;
pub mod estimates;
pub mod harness;
pub mod nse;
pub mod pe;
pub mod quadrature;
pub mod random;
pub mod semigroup;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{Grid, PhysicalField, SpectralField};
