//! Finite element continuous data assimilation with algebraic nudging.
//!
//! The toolkit discretizes evolution equations (advection-diffusion transport,
//! incompressible Navier-Stokes) with Lagrange finite elements and BDF2 time
//! stepping, and nudges the computed solution toward pointwise observations of
//! a reference solution. Nudging is applied purely at the linear-algebra level
//! through a diagonal matrix built from a coarse cover of observation cells,
//! so it composes with any existing assembly code.
//!
//! Module map:
//! - [`mesh`]: triangulations, uniform refinement, coarse observation covers;
//! - [`fem`]: Lagrange spaces, quadrature, sparse assembly, direct solves,
//!   error norms and the BDF2 G-norm;
//! - [`nudge`]: the piecewise-constant sampling interpolant, its L2-projection
//!   counterpart, and the diagonal nudging operator;
//! - [`transport`]: BDF2 data assimilation for advection-diffusion;
//! - [`nse`]: IMEX-BDF2 Taylor-Hood data assimilation for Navier-Stokes,
//!   with DNS archiving and lift/drag probes.

pub mod error;
pub mod fem;
pub mod mesh;
pub mod nse;
pub mod nudge;
pub mod transport;
pub mod util;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
