//! Finite-difference solver for the saturated filtration equation `∂_t rho = Δ Φ̄(rho)`.
//!
//! The scheme is the explicit flux form
//! `rho_i += dt/dx · sum_j (F_{i+e_j/2} - F_{i-e_j/2})` with `F = ∇_dx Φ̄(rho)`,
//! which conserves mass up to rounding and is monotone for
//! `dt <= dx² / (2d Lip(Φ̄))`.

mod solver;
mod table;

pub use solver::{
    deposit_condensate, grid_pairing, observed_order, solve, weak_error, Grid, PdeSolution, Snapshot, Solver,
    ENERGY_FLOOR, RECOMMENDED_SAFETY,
};
pub use table::{PhiBarTable, PHIBAR_POINTS};

use std::f64::consts::TAU;

/// The weak-error dictionary `{1, cos 2πu_1, sin 2πu_1, cos 4πu_1, sin 4πu_1}`.
pub fn weak_dictionary() -> Vec<(&'static str, fn([f64; 2]) -> f64)> {
    vec![
        ("one", |_| 1.0),
        ("cos_2pi", |u| (TAU * u[0]).cos()),
        ("sin_2pi", |u| (TAU * u[0]).sin()),
        ("cos_4pi", |u| (2.0 * TAU * u[0]).cos()),
        ("sin_4pi", |u| (2.0 * TAU * u[0]).sin()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::ensembles::DensityProfile;
    use crate::thermo::{JumpRateSpec, ThermoProfile};
    use std::sync::Arc;

    fn evans(b: f64) -> ThermoProfile {
        ThermoProfile::new(Arc::new(JumpRateSpec::evans(b).unwrap())).unwrap()
    }

    #[test]
    fn constants_are_stationary() {
        let grid = Grid::new(1, 64).unwrap();
        for (b, c) in [(0.0, 0.7), (4.0, 2.0), (4.0, 0.3)] {
            let sol = solve(&vec![c; 64], grid, &evans(b), 0.01, 0.9, &[]).unwrap();
            assert!(sol.last().rho.iter().all(|&r| r == c), "b = {b}, c = {c}");
            assert_eq!(sol.energy, 0.0);
        }
    }

    #[test]
    fn safety_above_one_is_rejected() {
        let grid = Grid::new(1, 8).unwrap();
        assert!(matches!(solve(&[0.1; 8], grid, &evans(0.0), 0.1, 1.5, &[]), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn mass_is_conserved_and_snapshots_land_exactly() {
        let grid = Grid::new(2, 32).unwrap();
        let rho0 = DensityProfile::sine(0.5, 0.3, 1).on_grid(2, 32).unwrap();
        let sol = solve(&rho0, grid, &evans(0.0), 0.01, 0.9, &[0.003, 0.007]).unwrap();
        assert!(sol.max_mass_drift <= 1e-12);
        assert!((sol.final_mass - sol.initial_mass).abs() <= 1e-12);
        assert_eq!(sol.snapshots.iter().map(|s| s.t).collect::<Vec<_>>(), vec![0.0, 0.003, 0.007, 0.01]);
        assert!(sol.cfl <= 0.9 + 1e-12);
    }

    #[test]
    fn energy_rate_decreases_for_smooth_data() {
        let grid = Grid::new(1, 128).unwrap();
        let rho0 = DensityProfile::sine(0.5, 0.3, 1).on_grid(1, 128).unwrap();
        let sol = solve(&rho0, grid, &evans(0.0), 0.05, 0.9, &[0.01]).unwrap();
        let early = sol.at(0.01).unwrap().energy_rate;
        let late = sol.at(0.05).unwrap().energy_rate;
        assert!(early.is_finite() && late < early);
    }

    #[test]
    fn comparison_principle() {
        let grid = Grid::new(1, 64).unwrap();
        let low = DensityProfile::sine(0.4, 0.3, 1).on_grid(1, 64).unwrap();
        let high: Vec<f64> = low.iter().enumerate().map(|(i, r)| r + 0.2 + 0.1 * ((i * 7 % 5) as f64)).collect();
        let p = evans(4.0);
        let times = [0.001, 0.004, 0.01];
        let a = solve(&low, grid, &p, 0.01, 0.9, &times).unwrap();
        let b = solve(&high, grid, &p, 0.01, 0.9, &times).unwrap();
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            assert!(sa.rho.iter().zip(&sb.rho).all(|(x, y)| x <= y));
        }
    }

    #[test]
    fn condensate_deposit() {
        let grid = Grid::new(1, 10).unwrap();
        let mut rho = vec![0.0; 10];
        deposit_condensate(&mut rho, grid, &[0.55], 0.3).unwrap();
        assert!((rho[5] - 3.0).abs() < 1e-12);
    }
}
