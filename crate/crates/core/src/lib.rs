//! Numerical laboratory for quasilinear parabolic equations `u_t = div A(Du)`
//! under Orlicz growth.
//!
//! The crate is `no_std` (it needs `alloc`) and holds the numerics only:
//!
//! - [`orlicz`]: structure functions `g`, their primitives `G`, Young
//!   conjugates, the map `V_g` and the Luxemburg norm.
//! - [`field`]: the model field `A(ξ) = g(|ξ|)ξ/|ξ|`, its mollified and
//!   perturbed regularization, and the structural margins.
//! - [`geometry`]: parabolic distances, cylinders, scaling and concave moduli.
//! - [`solver`]: an explicit conservative finite-difference solver on boxes
//!   in one or two space dimensions, with ε-continuation.
//! - [`verify`]: margin reports for energy estimates, gradient bounds and
//!   boundary barriers.
//!
//! File formats, configuration and the command line live in `orlicz-lab`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod field;
pub mod geometry;
pub mod math;
pub mod orlicz;
pub mod quad;
pub mod report;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use report::{Calibration, MarginReport, Provenance};
