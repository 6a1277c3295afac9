//! Empirical measures of a configuration and their time integrals.

mod fields;
mod test_function;
mod young;

pub use fields::{extract_fields, EmpiricalFields};
pub use test_function::{Growth, TestFunction};
pub use young::{build_young, GeneralizedYoungMeasure, ValueBins, YoungIntegrand, YoungMetadata, DEFAULT_DLAMBDA};

use std::sync::Arc;

use crate::error::Result;
use crate::sim::{LocalSum, Observer, SiteFunctional, Simulation, TimeFactor};

/// One separable piece `a(t) b(x/N)` of a space-time weight; `time = None` means `a ≡ 1`.
#[derive(Clone)]
pub struct WeightTerm {
    pub time: Option<TimeFactor>,
    pub space: Vec<f64>,
}

impl WeightTerm {
    pub fn stationary(space: Vec<f64>) -> Self {
        Self { time: None, space }
    }
}

/// `∫_{t_0}^{t_end} sum_x G(t, x/N) f(τ_x η_t) dt` for `G = sum_k a_k(t) b_k(u)`,
/// accumulated event by event while the simulation advances to `t_end`.
pub fn time_integrate<F>(sim: &mut Simulation, t_end: f64, functional: F, terms: &[WeightTerm]) -> Result<f64>
where
    F: SiteFunctional + Clone,
{
    let lattice = Arc::clone(sim.lattice());
    let mut sums = terms
        .iter()
        .map(|term| {
            let sum = LocalSum::new(functional.clone(), lattice.clone(), term.space.clone(), sim.config())?;
            Ok(match &term.time {
                Some(a) => sum.with_time_factor(a.clone()),
                None => sum,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    {
        let mut observers: Vec<&mut dyn Observer> = sums.iter_mut().map(|s| s as &mut dyn Observer).collect();
        sim.run_until(t_end, &mut observers)?;
    }
    Ok(sums.iter().map(|s| s.integral()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::sim::{Configuration, JumpRate, Lattice};
    use crate::thermo::JumpRateSpec;

    #[test]
    fn zero_weight_and_frozen_cases() {
        let spec = Arc::new(JumpRateSpec::evans(0.0).unwrap());
        let lattice = Arc::new(Lattice::new(1, 16).unwrap());
        let occ: Vec<u32> = (0..16).map(|i| (i % 3) as u32).collect();
        let config = Configuration::new(spec.clone(), occ).unwrap();
        let mut sim = Simulation::new(lattice.clone(), config, stream_rng(1, 0)).unwrap();
        let zero = time_integrate(&mut sim, 0.1, JumpRate, &[WeightTerm::stationary(vec![0.0; 16])]).unwrap();
        assert_eq!(zero, 0.0);

        let empty = Configuration::new(spec, vec![0; 16]).unwrap();
        let mut frozen = Simulation::new(lattice, empty, stream_rng(1, 0)).unwrap();
        let ones = WeightTerm::stationary(vec![1.0 / 16.0; 16]);
        let v = time_integrate(&mut frozen, 0.25, crate::sim::Occupancy, &[ones]).unwrap();
        assert_eq!(v, 0.0);
    }
}
