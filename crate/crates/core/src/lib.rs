//! A desk-scale laboratory for condensing zero-range processes.
//!
//! * [`thermo`]: one-site statics (partition function, `R`, `Φ`, critical density).
//! * [`ensembles`]: canonical normalizations by dynamic programming and samplers.
//! * [`sim`]: event-driven simulation of the diffusively rescaled process on the torus.
//! * [`empirical`]: empirical density, jump rate, current and generalized Young measures.
//! * [`pde`]: explicit solver for the saturated filtration equation.
//! * [`verify`]: replica statistics for the limit theorems.

pub mod empirical;
pub mod ensembles;
pub mod error;
pub mod parallel;
pub mod pde;
pub mod rng;
pub mod sim;
pub mod thermo;
pub mod verify;

pub use error::{Error, Result};
