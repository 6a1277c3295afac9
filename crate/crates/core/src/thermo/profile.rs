use std::sync::Arc;

use rand::Rng;

use super::rates::{JumpRateSpec, RateFamily};
use super::series::{self, Moments};
use crate::error::{invalid, Error, Result};

/// Target accuracy `|R(phi) - rho|` when inverting the mean density.
pub const INVERSION_TOL: f64 = 1e-10;

/// Critical fugacity `phi_c = lim g!(k)^{1/k}`.
///
/// Evans rates have `phi_c = 1` for every `b`. Otherwise `log g!(k)/k` is
/// extrapolated from the last decade of the table: if `log g!(k)/k = L + c/k`
/// then `L` is the mean of `log g` over the decade. The extrapolant from the
/// previous decade must agree to `1e-6` relative.
pub fn critical_fugacity(spec: &JumpRateSpec) -> Result<f64> {
    if let RateFamily::Evans { .. } = spec.family() {
        return Ok(1.0);
    }
    let k = spec.k_max();
    if k < 1000 {
        return invalid(format!("critical fugacity needs k_max >= 1000, got {k}"));
    }
    let decade_mean = |hi: usize| {
        let lo = hi / 10;
        (spec.log_gfact(hi) - spec.log_gfact(lo)) / (hi - lo) as f64
    };
    let first = decade_mean(k);
    let second = decade_mean(k / 10);
    if (first - second).abs() > 1e-6 * first.abs().max(1.0) {
        return Err(Error::Unstable {
            first: first.exp(),
            second: second.exp(),
        });
    }
    Ok(first.exp())
}

/// Exact statics of one jump rate: fugacity/density duality and critical quantities.
///
/// Immutable after construction; share it behind an `Arc`.
#[derive(Debug, Clone)]
pub struct ThermoProfile {
    spec: Arc<JumpRateSpec>,
    phi_c: f64,
    rho_c: f64,
}

impl ThermoProfile {
    pub fn new(spec: Arc<JumpRateSpec>) -> Result<Self> {
        let phi_c = critical_fugacity(&spec)?;
        let rho_c = match series::moments(&spec, phi_c, phi_c) {
            Ok(m) if m.s0.is_finite() && m.s1.is_finite() => m.mean(),
            Ok(_) | Err(Error::Diverges { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        Ok(Self { spec, phi_c, rho_c })
    }

    pub fn spec(&self) -> &Arc<JumpRateSpec> {
        &self.spec
    }

    pub fn phi_c(&self) -> f64 {
        self.phi_c
    }

    /// `R(phi_c)`, `+inf` when the first moment at `phi_c` diverges.
    pub fn rho_c(&self) -> f64 {
        self.rho_c
    }

    pub fn grad_sup(&self) -> f64 {
        self.spec.grad_sup()
    }

    pub fn moments(&self, phi: f64) -> Result<Moments> {
        series::moments(&self.spec, phi, self.phi_c)
    }

    /// `Z(phi)`.
    pub fn partition_z(&self, phi: f64) -> Result<f64> {
        let m = self.moments(phi)?;
        if m.s0.is_finite() {
            Ok(m.s0)
        } else {
            Err(Error::Diverges { phi })
        }
    }

    /// `Z'(phi)`.
    pub fn partition_z_prime(&self, phi: f64) -> Result<f64> {
        if phi == 0.0 {
            return Ok((-self.spec.log_gfact(1)).exp());
        }
        let m = self.moments(phi)?;
        if m.s1.is_finite() {
            Ok(m.s1 / phi)
        } else {
            Err(Error::Diverges { phi })
        }
    }

    /// Mean density `R(phi) = phi Z'(phi) / Z(phi)`.
    pub fn mean_density(&self, phi: f64) -> Result<f64> {
        let m = self.moments(phi)?;
        if m.s0.is_finite() && m.s1.is_finite() {
            Ok(m.mean())
        } else {
            Err(Error::Diverges { phi })
        }
    }

    /// Extended mean jump rate `Phi(rho ∧ rho_c)`, total on `rho >= 0`.
    pub fn mean_jump_rate(&self, rho: f64) -> f64 {
        if !(rho > 0.0) {
            return 0.0;
        }
        if rho >= self.rho_c {
            return self.phi_c;
        }
        self.invert_density(rho)
    }

    /// Solves `R(phi) = rho` for `rho < rho_c` by Newton steps safeguarded by bisection.
    fn invert_density(&self, rho: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, self.phi_c);
        let mut phi = (rho / (1.0 + rho) * self.phi_c).min(0.5 * (lo + hi));
        for _ in 0..500 {
            let m = match self.moments(phi) {
                Ok(m) if m.s1.is_finite() => m,
                _ => {
                    hi = phi;
                    phi = 0.5 * (lo + hi);
                    continue;
                }
            };
            let r = m.mean();
            let err = r - rho;
            if err.abs() < INVERSION_TOL * rho.max(1.0) * 1e-2 {
                return phi;
            }
            if err > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return phi;
            }
            // dR/dphi = Var / phi
            let slope = m.variance() / phi;
            let newton = phi - err / slope;
            phi = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        phi
    }

    /// Legendre transform `Λ*_{rho_star}(rho)` of the log-moment generating function of `ν_{rho_star}`.
    pub fn rate_function(&self, rho_star: f64, rho: f64) -> Result<f64> {
        if !(rho_star > 0.0 && rho_star < self.rho_c) {
            return invalid(format!(
                "reference density must lie in (0, rho_c = {}), got {rho_star}",
                self.rho_c
            ));
        }
        if rho < 0.0 {
            return Ok(f64::INFINITY);
        }
        let phi_star = self.mean_jump_rate(rho_star);
        let log_z_star = self.partition_z(phi_star)?.ln();
        let phi = self.mean_jump_rate(rho);
        let log_z = self.partition_z(phi)?.ln();
        let linear = if rho == 0.0 { 0.0 } else { rho * (phi / phi_star).ln() };
        Ok(linear - (log_z - log_z_star))
    }

    /// Limit of `N^{-d} H(ν_{rho0(·)} | ν_{rho_star})` for a profile given by its
    /// cell values (midpoint quadrature on the torus), plus `alpha log(phi_c / Phi(rho_star))`
    /// for an optional condensate of mass `alpha`.
    pub fn entropy_density(&self, profile: &[f64], rho_star: f64, condensate: Option<f64>) -> Result<f64> {
        if profile.is_empty() {
            return invalid("empty density profile");
        }
        if let Some(bad) = profile.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return invalid(format!("profile values must be finite and >= 0, got {bad}"));
        }
        let mut total = 0.0;
        for &rho in profile {
            total += self.rate_function(rho_star, rho.min(self.rho_c))?;
        }
        let mut entropy = total / profile.len() as f64;
        if let Some(alpha) = condensate.filter(|a| *a > 0.0) {
            if !self.phi_c.is_finite() {
                return Err(Error::InfiniteEntropy);
            }
            entropy += alpha * (self.phi_c / self.mean_jump_rate(rho_star)).ln();
        }
        Ok(entropy)
    }

    /// One-site law `ν̄_phi` prepared for inverse-CDF sampling.
    pub fn site_law(&self, phi: f64) -> Result<SiteLaw> {
        let log_z = self.partition_z(phi)?.ln();
        Ok(SiteLaw {
            spec: Arc::clone(&self.spec),
            ln_phi: if phi > 0.0 { phi.ln() } else { f64::NEG_INFINITY },
            log_z,
        })
    }

    /// Probability `ν̄_phi{k}`.
    pub fn site_probability(&self, phi: f64, k: usize) -> Result<f64> {
        self.site_law(phi).map(|law| law.probability(k))
    }
}

/// Single-site marginal `ν̄_phi{k} = phi^k / (g!(k) Z(phi))`.
#[derive(Debug, Clone)]
pub struct SiteLaw {
    spec: Arc<JumpRateSpec>,
    ln_phi: f64,
    log_z: f64,
}

impl SiteLaw {
    pub fn probability(&self, k: usize) -> f64 {
        if k == 0 {
            return (-self.log_z).exp();
        }
        if self.ln_phi == f64::NEG_INFINITY {
            return 0.0;
        }
        (k as f64 * self.ln_phi - self.spec.log_gfact(k) - self.log_z).exp()
    }

    /// Sequential inversion; the expected cost is `1 + mean`.
    /// Mass beyond the rate table (below `1e-15` in practice) is assigned to `k_max`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let k_max = self.spec.k_max();
        for k in 0..=k_max {
            acc += self.probability(k);
            if u < acc {
                return k as u32;
            }
        }
        k_max as u32
    }
}
