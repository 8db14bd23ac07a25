//! Simulation kernels for population processes with general interaction.
//!
//! The crate covers four linked objects:
//!
//! * the discrete interacting birth-death chain and its renormalized version
//!   ([`discrete`]), together with the planar genealogical forest and its
//!   contour (exploration) path ([`forest`]);
//! * the generalized Feller diffusion `dZ = f(Z) dt + 2 sqrt(Z) dW` and its
//!   coupled and environment-driven variants ([`diffusion`]);
//! * reflected Brownian motion whose drift is `f'/2` evaluated at the local
//!   time accumulated at the current level, and the local-time field read at
//!   the inverse local time at zero ([`rayknight`]);
//! * the statistics used to compare all of the above ([`analysis`]).
//!
//! Everything here is `no_std` + `alloc`. Parallel execution, file formats
//! and the command line live in the `genfeller` crate.
#![no_std]
// `!(x > 0.0)` is the NaN-rejecting form used throughout validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod diffusion;
pub mod discrete;
mod error;
pub mod forest;
pub mod interaction;
mod ostree;
mod quadrature;
pub mod rayknight;
pub mod rng;

pub use error::{Error, Result};
pub use interaction::{DerivativeMode, InteractionFunction, InteractionKind};
pub use rng::{Replicates, Sequential, SimRng};
