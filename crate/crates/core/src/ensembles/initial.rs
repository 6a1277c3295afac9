use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::canonical::CanonicalTable;
use crate::error::{invalid, Error, Result};
use crate::sim::Lattice;
use crate::thermo::{SiteLaw, ThermoProfile};

/// Macroscopic density profile `rho0: T^d -> R_+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityProfile {
    Constant { value: f64 },
    /// `mean + amplitude sin(2π mode u_1)`
    Sine { mean: f64, amplitude: f64, mode: u32 },
    /// One value per lattice site.
    Grid { values: Vec<f64> },
}

impl DensityProfile {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn sine(mean: f64, amplitude: f64, mode: u32) -> Self {
        Self::Sine { mean, amplitude, mode }
    }

    pub fn at(&self, site: usize, position: [f64; 2]) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Sine { mean, amplitude, mode } => mean + amplitude * (TAU * *mode as f64 * position[0]).sin(),
            Self::Grid { values } => values[site],
        }
    }

    /// Values at the lattice sites.
    pub fn on_lattice(&self, lattice: &Lattice) -> Result<Vec<f64>> {
        if let Self::Grid { values } = self {
            if values.len() != lattice.sites() {
                return invalid(format!(
                    "grid profile has {} values for {} sites",
                    values.len(),
                    lattice.sites()
                ));
            }
        }
        let values: Vec<f64> = (0..lattice.sites())
            .map(|x| self.at(x, lattice.position(x)))
            .collect();
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return invalid(format!("density profile must be finite and >= 0, got {bad}"));
        }
        Ok(values)
    }

    /// Values at grid nodes `i/G` of a `G^d` grid (PDE initial data).
    pub fn on_grid(&self, dim: usize, g: usize) -> Result<Vec<f64>> {
        let lattice = Lattice::new(dim, g)?;
        self.on_lattice(&lattice)
    }
}

/// Initial distributions used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Product law with slowly varying parameter: independent `ν^1_{rho0(x/N)}` marginals.
    Product { profile: DensityProfile },
    /// The product law with a condensate `⌊α N^d⌋` at site `⌊N u⌋`.
    ProductWithCondensate { profile: DensityProfile, position: Vec<f64>, mass: f64 },
    /// `ν_{N,K}`.
    Canonical { particles: u64 },
    /// `ν_rho^N`.
    GrandCanonical { density: f64 },
    Deterministic { occupancy: Vec<u32> },
}

impl InitialCondition {
    /// Largest total this initial condition can produce, when it is bounded a priori.
    pub fn fixed_total(&self) -> Option<u64> {
        match self {
            Self::Canonical { particles } => Some(*particles),
            Self::Deterministic { occupancy } => Some(occupancy.iter().map(|&k| k as u64).sum()),
            _ => None,
        }
    }
}

/// Site index `⌊N u⌋` (componentwise) of a macroscopic point.
pub fn condensate_site(lattice: &Lattice, position: &[f64]) -> Result<usize> {
    if position.len() != lattice.dim() {
        return invalid(format!(
            "condensate position has {} coordinates, lattice dimension is {}",
            position.len(),
            lattice.dim()
        ));
    }
    let n = lattice.side();
    let mut coords = [0usize; 2];
    for (c, &u) in coords.iter_mut().zip(position) {
        if !(0.0..1.0).contains(&u) {
            return invalid(format!("condensate position must lie in [0, 1), got {u}"));
        }
        *c = ((n as f64 * u).floor() as usize).min(n - 1);
    }
    Ok(lattice.site(coords))
}

/// Draws an initial configuration.
pub fn sample_initial<R: Rng + ?Sized>(
    ic: &InitialCondition,
    lattice: &Lattice,
    profile: &ThermoProfile,
    rng: &mut R,
) -> Result<Vec<u32>> {
    match ic {
        InitialCondition::Product { profile: rho0 } => sample_product(rho0, lattice, profile, None, rng),
        InitialCondition::ProductWithCondensate { profile: rho0, position, mass } => {
            if !(mass.is_finite() && *mass >= 0.0) {
                return invalid(format!("condensate mass must be >= 0, got {mass}"));
            }
            let site = condensate_site(lattice, position)?;
            let particles = (mass * lattice.volume()).floor() as u64;
            profile.spec().ensure_capacity(particles)?;
            sample_product(rho0, lattice, profile, Some((site, particles as u32)), rng)
        }
        InitialCondition::GrandCanonical { density } => {
            sample_product(&DensityProfile::constant(*density), lattice, profile, None, rng)
        }
        InitialCondition::Canonical { particles } => {
            let table = CanonicalTable::build(profile.spec(), lattice.sites(), *particles as usize)?;
            Ok(table.sample(rng))
        }
        InitialCondition::Deterministic { occupancy } => {
            if occupancy.len() != lattice.sites() {
                return invalid(format!(
                    "deterministic configuration has {} sites, lattice has {}",
                    occupancy.len(),
                    lattice.sites()
                ));
            }
            Ok(occupancy.clone())
        }
    }
}

fn sample_product<R: Rng + ?Sized>(
    rho0: &DensityProfile,
    lattice: &Lattice,
    profile: &ThermoProfile,
    condensate: Option<(usize, u32)>,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let values = rho0.on_lattice(lattice)?;
    if let Some(&rho) = values.iter().find(|&&r| r > profile.rho_c()) {
        return Err(Error::SupercriticalProfile { rho, rho_c: profile.rho_c() });
    }
    let mut laws: HashMap<u64, SiteLaw> = HashMap::new();
    let mut occ = Vec::with_capacity(values.len());
    for (x, rho) in values.into_iter().enumerate() {
        if let Some((site, mass)) = condensate {
            if site == x {
                occ.push(mass);
                continue;
            }
        }
        let law = match laws.entry(rho.to_bits()) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(profile.site_law(profile.mean_jump_rate(rho))?)
            }
        };
        occ.push(law.sample(rng));
    }
    Ok(occ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::thermo::JumpRateSpec;
    use std::sync::Arc;

    fn evans(b: f64) -> ThermoProfile {
        ThermoProfile::new(Arc::new(JumpRateSpec::evans(b).unwrap())).unwrap()
    }

    #[test]
    fn empty_profile_gives_empty_configuration() {
        let lat = Lattice::new(1, 50).unwrap();
        let mut rng = stream_rng(3, 0);
        let ic = InitialCondition::Product { profile: DensityProfile::constant(0.0) };
        let occ = sample_initial(&ic, &lat, &evans(4.0), &mut rng).unwrap();
        assert!(occ.iter().all(|&k| k == 0));
    }

    #[test]
    fn geometric_mean_within_three_sigma() {
        // b = 0, rho = 0.5: geometric marginal with variance rho(1+rho) = 0.75
        let lat = Lattice::new(1, 10_000).unwrap();
        let mut rng = stream_rng(5, 0);
        let ic = InitialCondition::GrandCanonical { density: 0.5 };
        let occ = sample_initial(&ic, &lat, &evans(0.0), &mut rng).unwrap();
        let mean = occ.iter().map(|&k| k as f64).sum::<f64>() / 1e4;
        assert!((0.485..=0.515).contains(&mean), "{mean}");
    }

    #[test]
    fn condensate_is_placed() {
        let lat = Lattice::new(1, 100).unwrap();
        let mut rng = stream_rng(9, 0);
        let ic = InitialCondition::ProductWithCondensate {
            profile: DensityProfile::constant(0.2),
            position: vec![0.5],
            mass: 0.3,
        };
        let p4 = evans(4.0);
        let occ = sample_initial(&ic, &lat, &p4, &mut rng).unwrap();
        assert_eq!(occ[50], 30);
        let total: u32 = occ.iter().sum();
        // background: 99 sites with mean 0.2 and variance Var_{ν_0.2}(η)
        let m = p4.moments(p4.mean_jump_rate(0.2)).unwrap();
        let sigma = (99.0 * m.variance()).sqrt() / 100.0;
        let mass = total as f64 / 100.0;
        let expected = 0.3 + 99.0 * 0.2 / 100.0;
        assert!((mass - expected).abs() <= 3.0 * sigma, "{mass} vs {expected} ± {sigma}");
    }

    #[test]
    fn supercritical_profile_rejected() {
        let lat = Lattice::new(1, 10).unwrap();
        let mut rng = stream_rng(1, 0);
        let ic = InitialCondition::Product { profile: DensityProfile::constant(1.0) };
        assert!(matches!(
            sample_initial(&ic, &lat, &evans(4.0), &mut rng),
            Err(Error::SupercriticalProfile { .. })
        ));
    }

    #[test]
    fn canonical_total_is_exact() {
        let lat = Lattice::new(2, 4).unwrap();
        let mut rng = stream_rng(2, 0);
        let ic = InitialCondition::Canonical { particles: 23 };
        for _ in 0..20 {
            let occ = sample_initial(&ic, &lat, &evans(4.0), &mut rng).unwrap();
            assert_eq!(occ.iter().sum::<u32>(), 23);
        }
    }
}
