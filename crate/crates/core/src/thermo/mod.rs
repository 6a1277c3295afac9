//! Exact statics of the zero-range process: partition function, the
//! fugacity/density duality, critical quantities, extended homologues,
//! rate functions and entropy densities.

mod cylinder;
mod profile;
mod rates;
pub mod series;

pub use cylinder::{CylinderFn, CylinderKind, CylinderObservable, Offset, HOMOLOGUE_SAMPLES};
pub use profile::{critical_fugacity, SiteLaw, ThermoProfile, INVERSION_TOL};
pub use rates::{JumpRateSpec, RateFamily, DEFAULT_K_MAX};
