use crate::error::{invalid, Result};
use crate::thermo::ThermoProfile;

/// Number of tabulation points of `Φ̄`.
pub const PHIBAR_POINTS: usize = 10_000;

/// `Φ̄` tabulated on `[0, min(rho_max, rho_c)]` with linear interpolation.
///
/// Above `rho_c` the value is exactly `phi_c`, so flat regions stay flat to
/// the last bit. Beyond the table (only possible when `rho_c = ∞`) the
/// inversion is done directly.
#[derive(Debug, Clone)]
pub struct PhiBarTable {
    profile: ThermoProfile,
    top: f64,
    step: f64,
    values: Vec<f64>,
}

impl PhiBarTable {
    pub fn new(profile: &ThermoProfile, rho_max: f64) -> Result<Self> {
        Self::with_points(profile, rho_max, PHIBAR_POINTS)
    }

    pub fn with_points(profile: &ThermoProfile, rho_max: f64, points: usize) -> Result<Self> {
        if !(rho_max.is_finite() && rho_max > 0.0) || points < 2 {
            return invalid(format!("Φ̄ table needs rho_max > 0 and at least 2 points, got {rho_max}, {points}"));
        }
        let top = rho_max.min(profile.rho_c());
        let step = top / (points - 1) as f64;
        let values = (0..points).map(|i| profile.mean_jump_rate(i as f64 * step)).collect();
        Ok(Self { profile: profile.clone(), top, step, values })
    }

    pub fn rho_top(&self) -> f64 {
        self.top
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (i as f64 * self.step, v))
    }

    #[inline]
    pub fn eval(&self, rho: f64) -> f64 {
        if !(rho > 0.0) {
            return 0.0;
        }
        if rho >= self.profile.rho_c() {
            return self.profile.phi_c();
        }
        if rho >= self.top {
            return if rho == self.top { self.values[self.values.len() - 1] } else { self.profile.mean_jump_rate(rho) };
        }
        let s = rho / self.step;
        let i = (s as usize).min(self.values.len() - 2);
        let w = s - i as f64;
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::JumpRateSpec;
    use std::sync::Arc;

    #[test]
    fn interpolation_error_is_small_and_plateau_exact() {
        let p0 = ThermoProfile::new(Arc::new(JumpRateSpec::evans(0.0).unwrap())).unwrap();
        let t = PhiBarTable::new(&p0, 1.0).unwrap();
        for i in 0..97 {
            let rho = i as f64 * 0.0103;
            assert!((t.eval(rho) - rho / (1.0 + rho)).abs() < 1e-8);
        }
        let p4 = ThermoProfile::new(Arc::new(JumpRateSpec::evans(4.0).unwrap())).unwrap();
        let t4 = PhiBarTable::new(&p4, 3.0).unwrap();
        assert_eq!(t4.eval(2.0), 1.0);
        assert_eq!(t4.eval(p4.rho_c()), 1.0);
        assert_eq!(t4.eval(0.6), 1.0);
        assert_eq!(t4.eval(0.0), 0.0);
    }
}
