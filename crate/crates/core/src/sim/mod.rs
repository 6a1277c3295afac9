//! Event-driven simulation of the symmetric nearest-neighbour process on `T_N^d`.

pub mod blocks;
mod checkpoint;
mod config;
mod dynamics;
mod lattice;
mod observe;
mod tree;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::Configuration;
pub use dynamics::{Clock, JumpEvent, Observer, Simulation, DEFAULT_EVENT_BUDGET};
pub use lattice::Lattice;
pub use observe::{
    ConservationCheck, EventCounter, JumpRate, LocalSum, Occupancy, SiteFn, SiteFunctional, SiteIntegrals, SiteQuantity,
    TimeFactor,
};
pub use tree::RateTree;
