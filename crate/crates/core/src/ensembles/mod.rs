//! Canonical normalizations and samplers for the initial laws.

mod canonical;
mod initial;

pub use canonical::{CanonicalTable, MAX_CANONICAL_PARTICLES};
pub use initial::{condensate_site, sample_initial, DensityProfile, InitialCondition};
