use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::Configuration;
use super::dynamics::{Clock, Simulation};
use super::lattice::Lattice;
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::thermo::JumpRateSpec;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to continue a trajectory bit for bit.
///
/// The time is stored both as a number and as its IEEE bit pattern; the bit
/// pattern is authoritative on restore.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub dim: usize,
    pub side: usize,
    pub occupancy: Vec<u32>,
    pub t: f64,
    pub t_bits: u64,
    pub event_count: u64,
    pub event_budget: u64,
    pub rng: RngState,
}

impl Checkpoint {
    pub fn capture(sim: &Simulation) -> Self {
        let clock = sim.clock();
        Self {
            version: CHECKPOINT_VERSION,
            dim: sim.lattice().dim(),
            side: sim.lattice().side(),
            occupancy: sim.config().occupancy().to_vec(),
            t: clock.t,
            t_bits: clock.t.to_bits(),
            event_count: clock.events,
            event_budget: clock.budget,
            rng: RngState::capture(sim.rng()),
        }
    }

    pub fn restore(&self, spec: Arc<JumpRateSpec>) -> Result<Simulation> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {}", self.version)));
        }
        let lattice = Arc::new(Lattice::new(self.dim, self.side)?);
        if self.occupancy.len() != lattice.sites() {
            return Err(Error::Checkpoint("occupancy length does not match the lattice".into()));
        }
        let config = Configuration::new(spec, self.occupancy.clone())?;
        let clock = Clock { t: f64::from_bits(self.t_bits), events: self.event_count, budget: self.event_budget };
        Ok(Simulation::restore_parts(lattice, config, clock, self.rng.restore()?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn resume_is_bit_exact() {
        let spec = Arc::new(JumpRateSpec::evans(4.0).unwrap());
        let lattice = Arc::new(Lattice::new(2, 8).unwrap());
        let occ: Vec<u32> = (0..64).map(|i| (i % 3) as u32).collect();
        let config = Configuration::new(spec.clone(), occ).unwrap();
        let mut straight = Simulation::new(lattice.clone(), config, stream_rng(99, 3)).unwrap();
        straight.run_until(0.01, &mut []).unwrap();
        let cp = Checkpoint::from_json(&Checkpoint::capture(&straight).to_json()).unwrap();
        let mut resumed = cp.restore(spec).unwrap();
        straight.run_until(0.03, &mut []).unwrap();
        resumed.run_until(0.03, &mut []).unwrap();
        assert_eq!(straight.config().occupancy(), resumed.config().occupancy());
        assert_eq!(straight.clock(), resumed.clock());
    }
}
