//! Replica statistics for the limit theorems.
//!
//! Each statistic runs `R` independent replicas of an [`Ensemble`]; replica `r`
//! draws everything (initial state and dynamics) from stream `r` of the master
//! seed, so results are reproducible and the replicas are independent.

mod continuity;
mod field;
mod limits;
mod local;

pub use continuity::{continuity_residuals, martingale_qv_check, ContinuityReport, QvReport};
pub use field::{DiscreteTestField, FieldTerm, SpatialFn, TimeFn};
pub use limits::{eoe_table, hydro, EoeRow, HydroReport};
pub use local::{
    double_block_stat, energy_dictionary, energy_stat, jump_rate_bound, one_block_stat, DoubleBlockReport,
    EnergyReport, JumpBoundReport,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::ensembles::{sample_initial, CanonicalTable, InitialCondition};
use crate::error::{invalid, Result};
use crate::parallel::map_replicas;
use crate::rng::stream_rng;
use crate::sim::{Configuration, Lattice, Simulation, TimeFactor, DEFAULT_EVENT_BUDGET};
use crate::thermo::ThermoProfile;

/// Default statistical pass threshold in standard errors.
pub const SE_MARGIN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Diagnostic,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

/// Per-replica values of a scalar statistic with their mean and standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaStats {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(R)`.
    pub se: f64,
    pub replicas: usize,
    pub seed: u64,
    /// RNG stream of each replica.
    pub streams: Vec<u64>,
}

impl ReplicaStats {
    pub fn new(values: Vec<f64>, seed: u64) -> Self {
        let r = values.len();
        let mean = if r == 0 { 0.0 } else { values.iter().sum::<f64>() / r as f64 };
        let se = if r < 2 { 0.0 } else { (sample_variance(&values, mean) / r as f64).sqrt() };
        Self { streams: (0..r as u64).collect(), values, mean, se, replicas: r, seed }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        sample_variance(&self.values, self.mean)
    }

    /// One-sided upper confidence limit for the variance under normality,
    /// `(R - 1) s² / χ²_{R-1}(1 - level)`.
    pub fn variance_upper_limit(&self, level: f64) -> Result<f64> {
        if self.replicas < 2 || !(0.0..1.0).contains(&level) {
            return invalid("variance confidence limit needs R >= 2 and a level in [0, 1)");
        }
        let dof = (self.replicas - 1) as f64;
        let chi = ChiSquared::new(dof).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        Ok(dof * self.variance() / chi.inverse_cdf(1.0 - level))
    }
}

fn sample_variance(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// A space-time weight `H(t, u) = a(t) h(u)`; `time = None` means `a ≡ 1`.
#[derive(Clone)]
pub struct SpaceTimeWeight {
    pub time: Option<TimeFactor>,
    pub space: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
}

impl SpaceTimeWeight {
    pub fn one() -> Self {
        Self { time: None, space: Arc::new(|_| 1.0) }
    }

    pub(crate) fn on_lattice(&self, lattice: &Lattice) -> Vec<f64> {
        let vol = lattice.volume();
        (0..lattice.sites()).map(|x| (self.space)(lattice.position(x)) / vol).collect()
    }
}

/// Replicated trajectories: a model, a torus, an initial law, a horizon and seeds.
#[derive(Clone)]
pub struct Ensemble {
    profile: ThermoProfile,
    lattice: Arc<Lattice>,
    initial: InitialCondition,
    canonical: Option<Arc<CanonicalTable>>,
    horizon: f64,
    replicas: usize,
    seed: u64,
    budget: u64,
}

impl Ensemble {
    pub fn new(
        profile: ThermoProfile,
        lattice: Arc<Lattice>,
        initial: InitialCondition,
        horizon: f64,
        replicas: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return invalid(format!("horizon must be finite and >= 0, got {horizon}"));
        }
        if replicas == 0 {
            return invalid("at least one replica is required");
        }
        let canonical = match &initial {
            InitialCondition::Canonical { particles } => {
                Some(Arc::new(CanonicalTable::build(profile.spec(), lattice.sites(), *particles as usize)?))
            }
            _ => None,
        };
        Ok(Self { profile, lattice, initial, canonical, horizon, replicas, seed, budget: DEFAULT_EVENT_BUDGET })
    }

    /// Per-replica event budget.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn profile(&self) -> &ThermoProfile {
        &self.profile
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn initial(&self) -> &InitialCondition {
        &self.initial
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Replica `r` at time 0.
    pub fn start(&self, r: usize) -> Result<Simulation> {
        let mut rng = stream_rng(self.seed, r as u64);
        let occ = match &self.canonical {
            Some(table) => table.sample(&mut rng),
            None => sample_initial(&self.initial, &self.lattice, &self.profile, &mut rng)?,
        };
        let config = Configuration::new(self.profile.spec().clone(), occ)?;
        Ok(Simulation::new(self.lattice.clone(), config, rng)?.with_budget(self.budget))
    }

    /// Runs `f` on every replica, results in replica order.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(Simulation) -> Result<T> + Sync + Send,
    {
        map_replicas(self.replicas, |r| f(self.start(r)?))
    }

    pub(crate) fn stats(&self, values: Vec<f64>) -> ReplicaStats {
        ReplicaStats::new(values, self.seed)
    }

    /// `t_s = T s / samples`, `s = 1..=samples`.
    pub(crate) fn sample_times(&self, samples: usize) -> Vec<f64> {
        (1..=samples).map(|s| self.horizon * s as f64 / samples as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::JumpRateSpec;

    #[test]
    fn replica_stats_moments() {
        let s = ReplicaStats::new(vec![1.0, 2.0, 3.0, 4.0], 9);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.streams, vec![0, 1, 2, 3]);
        // (R-1)s²/χ²_{3}(0.05) with χ²_{3}(0.05) = 0.351846...
        let upper = s.variance_upper_limit(0.95).unwrap();
        assert!((upper - 5.0 / 0.351_846_317_749_271_6).abs() < 1e-6);
    }

    #[test]
    fn replicas_are_reproducible_and_distinct() {
        let profile = ThermoProfile::new(Arc::new(JumpRateSpec::evans(0.0).unwrap())).unwrap();
        let lattice = Arc::new(Lattice::new(1, 32).unwrap());
        let ens =
            Ensemble::new(profile, lattice, InitialCondition::GrandCanonical { density: 1.0 }, 0.01, 3, 11).unwrap();
        let a = ens.map(|mut s| {
            s.run_until(0.01, &mut [])?;
            Ok(s.config().occupancy().to_vec())
        });
        let a = a.unwrap();
        let b = ens
            .map(|mut s| {
                s.run_until(0.01, &mut [])?;
                Ok(s.config().occupancy().to_vec())
            })
            .unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }
}
