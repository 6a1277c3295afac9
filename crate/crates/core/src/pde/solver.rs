use std::fmt::Write as _;

use super::table::PhiBarTable;
use crate::error::{invalid, Error, Result};
use crate::thermo::ThermoProfile;

/// Cells with `Φ̄(rho)` below this are left out of the energy functional.
pub const ENERGY_FLOOR: f64 = 1e-12;

/// Largest `safety` factor accepted without complaint; values up to 1 still run.
pub const RECOMMENDED_SAFETY: f64 = 0.9;

/// Periodic grid of `G^d` cells with nodes `i/G`, indexed like the lattice (`i_0 + G i_1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub dim: usize,
    pub side: usize,
}

impl Grid {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) || side < 2 {
            return invalid(format!("grid needs d in {{1, 2}} and G >= 2, got d = {dim}, G = {side}"));
        }
        Ok(Self { dim, side })
    }

    pub fn cells(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.side as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        let g = self.side as f64;
        if self.dim == 1 {
            [i as f64 / g, 0.0]
        } else {
            [(i % self.side) as f64 / g, (i / self.side) as f64 / g]
        }
    }

    /// Neighbour of cell `i` one step in `+e_j` (`forward`) or `-e_j`.
    #[inline]
    pub fn neighbor(&self, i: usize, j: usize, forward: bool) -> usize {
        let g = self.side;
        let stride = if j == 0 { 1 } else { g };
        let c = (i / stride) % g;
        match (forward, c) {
            (true, c) if c + 1 == g => i + stride - g * stride,
            (true, _) => i + stride,
            (false, 0) => i + (g - 1) * stride,
            (false, _) => i - stride,
        }
    }

    /// Cell containing the macroscopic point `u`.
    pub fn cell_of(&self, u: &[f64]) -> Result<usize> {
        if u.len() != self.dim {
            return invalid(format!("point has {} coordinates, grid dimension is {}", u.len(), self.dim));
        }
        let g = self.side;
        let mut idx = 0;
        let mut stride = 1;
        for &x in u {
            if !(0.0..1.0).contains(&x) {
                return invalid(format!("point coordinate {x} outside [0, 1)"));
            }
            idx += ((x * g as f64).floor() as usize).min(g - 1) * stride;
            stride *= g;
        }
        Ok(idx)
    }
}

/// Adds a Dirac mass `alpha δ_u` as `alpha / dx^d` in the cell containing `u`.
pub fn deposit_condensate(rho: &mut [f64], grid: Grid, u: &[f64], alpha: f64) -> Result<()> {
    if rho.len() != grid.cells() {
        return invalid("density vector does not match the grid");
    }
    let cell = grid.cell_of(u)?;
    rho[cell] += alpha / grid.cell_volume();
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub rho: Vec<f64>,
    /// `sum |∇Φ̄(rho)|² / Φ̄(rho) dx^d` at this time.
    pub energy_rate: f64,
}

#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub grid: Grid,
    pub dt: f64,
    pub steps: u64,
    /// `dt · 2d · Lip / dx²` of the full steps.
    pub cfl: f64,
    pub safety: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Largest `|mass_{n+1} - mass_n|` over all steps.
    pub max_mass_drift: f64,
    /// `∫_0^T sum |∇Φ̄(rho)|²/Φ̄(rho) dx^d dt`, left Riemann sum over the steps.
    pub energy: f64,
    pub snapshots: Vec<Snapshot>,
}

impl PdeSolution {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a solution always holds the initial snapshot")
    }

    /// Snapshot at time `t`, if one was recorded.
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.t == t)
    }

    /// CSV rows `(t, u_index, rho)`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,u_index,rho\n");
        for snap in &self.snapshots {
            for (i, r) in snap.rho.iter().enumerate() {
                let _ = writeln!(s, "{},{},{}", snap.t, i, r);
            }
        }
        s
    }
}

/// Explicit solver for `∂_t rho = Δ Φ̄(rho)` on the periodic grid.
pub struct Solver<'a> {
    grid: Grid,
    table: &'a PhiBarTable,
    lip: f64,
    safety: f64,
}

impl<'a> Solver<'a> {
    /// `lip` bounds the Lipschitz constant of `Φ̄` (the rate gradient bound).
    pub fn new(grid: Grid, table: &'a PhiBarTable, lip: f64, safety: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::CflViolation { safety });
        }
        if !(lip > 0.0 && lip.is_finite()) {
            return invalid(format!("Lipschitz bound must be positive, got {lip}"));
        }
        Ok(Self { grid, table, lip, safety })
    }

    /// `safety · dx² / (2d · Lip)`.
    pub fn dt(&self) -> f64 {
        let dx = self.grid.dx();
        self.safety * dx * dx / (2.0 * self.grid.dim as f64 * self.lip)
    }

    fn fluxes(&self, phi: &[f64], out: &mut [f64], j: usize) {
        // out[i] = (Φ̄_{i+e_j} - Φ̄_i) / dx, the flux through the face between i and i+e_j
        let inv_dx = 1.0 / self.grid.dx();
        for i in 0..phi.len() {
            out[i] = (phi[self.grid.neighbor(i, j, true)] - phi[i]) * inv_dx;
        }
    }

    fn energy_rate(&self, phi: &[f64], flux: &[Vec<f64>]) -> f64 {
        let vol = self.grid.cell_volume();
        let mut e = 0.0;
        for (i, &p) in phi.iter().enumerate() {
            if p >= ENERGY_FLOOR {
                let g2: f64 = flux.iter().map(|f| f[i] * f[i]).sum();
                e += g2 / p * vol;
            }
        }
        e
    }

    fn mass(&self, rho: &[f64]) -> f64 {
        rho.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Advances `rho0` to time `t_end`, recording the initial state and a snapshot at
    /// every requested time in `(0, t_end]`. Steps are shortened to land on those times.
    pub fn solve(&self, rho0: &[f64], t_end: f64, snapshot_times: &[f64]) -> Result<PdeSolution> {
        if rho0.len() != self.grid.cells() {
            return invalid(format!("initial data has {} cells, grid has {}", rho0.len(), self.grid.cells()));
        }
        if let Some((cell, &value)) = rho0.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NegativeDensity { cell, value });
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return invalid(format!("final time must be finite and >= 0, got {t_end}"));
        }
        let mut stops: Vec<f64> = snapshot_times.iter().copied().filter(|&t| t > 0.0 && t <= t_end).collect();
        stops.push(t_end);
        stops.sort_by(f64::total_cmp);
        stops.dedup();

        let dim = self.grid.dim;
        let n = self.grid.cells();
        let dx = self.grid.dx();
        let dt_full = self.dt();
        let mut rho = rho0.to_vec();
        let mut phi = vec![0.0; n];
        let mut flux = vec![vec![0.0; n]; dim];
        let refresh = |rho: &[f64], phi: &mut [f64]| {
            for (p, &r) in phi.iter_mut().zip(rho) {
                *p = self.table.eval(r);
            }
        };
        refresh(&rho, &mut phi);
        for (j, f) in flux.iter_mut().enumerate() {
            self.fluxes(&phi, f, j);
        }
        let initial_mass = self.mass(&rho);
        let mut snapshots = vec![Snapshot { t: 0.0, rho: rho.clone(), energy_rate: self.energy_rate(&phi, &flux) }];
        let mut t = 0.0;
        let mut steps = 0u64;
        let mut energy = 0.0;
        let mut mass = initial_mass;
        let mut max_drift = 0.0f64;

        for &stop in &stops {
            while t < stop {
                let remaining = stop - t;
                let (dt, landing) = if remaining <= dt_full * (1.0 + 1e-12) { (remaining, true) } else { (dt_full, false) };
                energy += self.energy_rate(&phi, &flux) * dt;
                let ratio = dt / dx;
                for i in 0..n {
                    let mut div = 0.0;
                    for (j, f) in flux.iter().enumerate() {
                        div += f[i] - f[self.grid.neighbor(i, j, false)];
                    }
                    rho[i] += ratio * div;
                }
                if let Some((cell, &value)) = rho.iter().enumerate().find(|(_, v)| **v < -1e-12) {
                    return Err(Error::NegativeDensity { cell, value });
                }
                t = if landing { stop } else { t + dt };
                steps += 1;
                refresh(&rho, &mut phi);
                for (j, f) in flux.iter_mut().enumerate() {
                    self.fluxes(&phi, f, j);
                }
                let new_mass = self.mass(&rho);
                max_drift = max_drift.max((new_mass - mass).abs());
                mass = new_mass;
            }
            if snapshot_times.contains(&stop) || stop == t_end {
                snapshots.push(Snapshot { t: stop, rho: rho.clone(), energy_rate: self.energy_rate(&phi, &flux) });
            }
        }
        if t_end == 0.0 {
            snapshots.truncate(1);
        }
        Ok(PdeSolution {
            grid: self.grid,
            dt: dt_full,
            steps,
            cfl: dt_full * 2.0 * dim as f64 * self.lip / (dx * dx),
            safety: self.safety,
            initial_mass,
            final_mass: mass,
            max_mass_drift: max_drift,
            energy,
            snapshots,
        })
    }
}

/// Convenience wrapper: tabulates `Φ̄` up to the largest initial value and solves
/// with the rate gradient bound as Lipschitz constant.
pub fn solve(
    rho0: &[f64],
    grid: Grid,
    profile: &ThermoProfile,
    t_end: f64,
    safety: f64,
    snapshot_times: &[f64],
) -> Result<PdeSolution> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::CflViolation { safety });
    }
    let rho_max = rho0.iter().copied().fold(0.0f64, f64::max).max(1e-3);
    let table = PhiBarTable::new(profile, rho_max)?;
    Solver::new(grid, &table, profile.grad_sup(), safety)?.solve(rho0, t_end, snapshot_times)
}

/// `max_k |⟨f_k, π⟩ - sum_i f_k(u_i) rho_i dx^d|` given the empirical pairings `⟨f_k, π⟩`.
pub fn weak_error(empirical_pairings: &[f64], rho: &[f64], grid: Grid, tests: &[&dyn Fn([f64; 2]) -> f64]) -> Result<f64> {
    if empirical_pairings.len() != tests.len() {
        return invalid("one empirical pairing per test function is required");
    }
    Ok(tests
        .iter()
        .zip(empirical_pairings)
        .map(|(f, &e)| (e - grid_pairing(rho, grid, f)).abs())
        .fold(0.0, f64::max))
}

/// `sum_i f(u_i) rho_i dx^d`.
pub fn grid_pairing(rho: &[f64], grid: Grid, f: &dyn Fn([f64; 2]) -> f64) -> f64 {
    rho.iter().enumerate().map(|(i, r)| f(grid.node(i)) * r).sum::<f64>() * grid.cell_volume()
}

/// Observed order `log2(e_coarse / e_fine)` from three grids `G, 2G, 4G`, with
/// `e` the L¹ distance between consecutive solutions on the coarse nodes.
pub fn observed_order(coarse: &[f64], mid: &[f64], fine: &[f64], grid_coarse: Grid) -> Result<(f64, f64, f64)> {
    let g = grid_coarse.side;
    let d = grid_coarse.dim;
    if mid.len() != (2 * g).pow(d as u32) || fine.len() != (4 * g).pow(d as u32) || coarse.len() != g.pow(d as u32) {
        return invalid("observed order needs grids of sides G, 2G and 4G");
    }
    let sample = |v: &[f64], factor: usize, i: usize| -> f64 {
        let side = g * factor;
        if d == 1 {
            v[i * factor]
        } else {
            let (a, b) = (i % g, i / g);
            v[a * factor + side * b * factor]
        }
    };
    let vol = grid_coarse.cell_volume();
    let n = coarse.len();
    let e1: f64 = (0..n).map(|i| (sample(coarse, 1, i) - sample(mid, 2, i)).abs()).sum::<f64>() * vol;
    let e2: f64 = (0..n).map(|i| (sample(mid, 2, i) - sample(fine, 4, i)).abs()).sum::<f64>() * vol;
    Ok(((e1 / e2).log2(), e1, e2))
}
