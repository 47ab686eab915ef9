//! Spectral variational solvers for nonlocal nonlinear curl-curl equations
//! `curl curl E + E = N(E)` on a periodic box.

pub mod calculus;
pub mod concentration;
pub mod dual;
pub mod duality;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod kerr;
pub mod local;
pub mod power;
pub mod qmax;
pub mod rearrange;

pub use error::{Error, Result};
pub use field::{integrate, lp_norm, LpNorm, ScalarField, SpectralScalar, SpectralVector, VectorField};
pub use grid::{Grid, GridSpec};
pub use kernels::{Kernel, KernelKind, KernelSpec, ScalarMultiplier, TensorMultiplier};
