use serde::{Deserialize, Serialize};

use super::{Ensemble, ReplicaStats, Verdict};
use crate::ensembles::{CanonicalTable, DensityProfile, InitialCondition};
use crate::error::{invalid, Result};
use crate::pde::{solve, weak_dictionary, weak_error, Grid, RECOMMENDED_SAFETY};
use crate::thermo::ThermoProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EoeRow {
    pub n: usize,
    /// `⌊ρ n⌋`.
    pub k: usize,
    /// `E_{ν_{n,k}}[g(η(0))]`.
    pub expectation: f64,
    /// `Φ̄(ρ)`.
    pub target: f64,
    pub deviation: f64,
}

/// Exact canonical deviations `|E_{ν_{n,⌊ρn⌋}}[g] - Φ̄(ρ)|`, one row per size.
pub fn eoe_table(profile: &ThermoProfile, rho: f64, sizes: &[usize]) -> Result<Vec<EoeRow>> {
    if !(rho.is_finite() && rho >= 0.0) {
        return invalid(format!("density must be finite and >= 0, got {rho}"));
    }
    if sizes.contains(&0) {
        return invalid("sizes must be positive");
    }
    let Some(&n_max) = sizes.iter().max() else {
        return Ok(Vec::new());
    };
    let k_of = |n: usize| (rho * n as f64).floor() as usize;
    let k_max = sizes.iter().map(|&n| k_of(n)).max().unwrap_or(0);
    let table = CanonicalTable::build(profile.spec(), n_max, k_max)?;
    let target = profile.mean_jump_rate(rho);
    sizes
        .iter()
        .map(|&n| {
            let k = k_of(n);
            let expectation = if k == 0 { 0.0 } else { table.expectation_g(n, k)? };
            Ok(EoeRow { n, k, expectation, target, deviation: (expectation - target).abs() })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HydroRow {
    pub name: String,
    /// `⟨f, π_T⟩` over replicas.
    pub empirical: ReplicaStats,
    /// `sum_i f(u_i) rho_i dx^d` for the PDE solution.
    pub pde: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HydroReport {
    pub n: usize,
    pub grid: usize,
    pub horizon: f64,
    pub rows: Vec<HydroRow>,
    pub weak_error: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Replica-mean weak pairings at `T` against the PDE solved on a `G^d` grid
/// from the same initial profile.
pub fn hydro(ens: &Ensemble, grid_side: usize, tolerance: f64) -> Result<HydroReport> {
    let rho0 = match ens.initial() {
        InitialCondition::Product { profile } => profile.clone(),
        InitialCondition::GrandCanonical { density } => DensityProfile::constant(*density),
        _ => return invalid("the hydrodynamic comparison needs a product initial law"),
    };
    let lattice = ens.lattice();
    let dict = weak_dictionary();
    let vol = lattice.volume();
    let weights: Vec<Vec<f64>> =
        dict.iter().map(|(_, f)| (0..lattice.sites()).map(|x| f(lattice.position(x))).collect()).collect();
    let t_end = ens.horizon();
    let runs = ens.map(|mut sim| {
        sim.run_until(t_end, &mut [])?;
        let occ = sim.config().occupancy();
        Ok(weights
            .iter()
            .map(|w| w.iter().zip(occ).map(|(f, &k)| f * k as f64).sum::<f64>() / vol)
            .collect::<Vec<f64>>())
    })?;
    let grid = Grid::new(lattice.dim(), grid_side)?;
    let rho_grid = rho0.on_grid(lattice.dim(), grid_side)?;
    let solution = solve(&rho_grid, grid, ens.profile(), t_end, RECOMMENDED_SAFETY, &[])?;
    let rho_t = &solution.last().rho;
    let tests: Vec<&dyn Fn([f64; 2]) -> f64> = dict.iter().map(|(_, f)| f as &dyn Fn([f64; 2]) -> f64).collect();
    let rows: Vec<HydroRow> = dict
        .iter()
        .enumerate()
        .map(|(i, (name, f))| HydroRow {
            name: name.to_string(),
            empirical: ens.stats(runs.iter().map(|r| r[i]).collect()),
            pde: crate::pde::grid_pairing(rho_t, grid, f),
        })
        .collect();
    let means: Vec<f64> = rows.iter().map(|r| r.empirical.mean).collect();
    let err = weak_error(&means, rho_t, grid, &tests)?;
    Ok(HydroReport {
        n: lattice.side(),
        grid: grid_side,
        horizon: t_end,
        rows,
        weak_error: err,
        tolerance,
        verdict: Verdict::from_bool(err <= tolerance),
    })
}
