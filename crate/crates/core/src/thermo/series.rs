//! Truncated evaluation of the one-site partition series `sum_k phi^k / g!(k)`
//! together with its first two moments.
//!
//! Terms are built in log space. Away from the critical fugacity the sum stops
//! once a term is below `EPS_SERIES` relative to every partial moment (and at
//! least `MIN_TERMS` terms were taken), then a geometric tail bound from the
//! ratio of the last two terms is added. At the critical fugacity convergence
//! is algebraic, so the tail is modelled as `C k^{-s}` fitted over the last
//! decade of summed terms and integrated.

use super::rates::JumpRateSpec;
use crate::error::{Error, Result};

pub const EPS_SERIES: f64 = 1e-14;
pub const MIN_TERMS: usize = 64;
/// Consecutive non-decreasing term ratios after which the series is declared divergent.
pub const DIVERGENCE_RUN: usize = 32;
/// A fitted tail exponent must beat the integrability threshold by this margin,
/// otherwise the moment is reported infinite.
pub const POWER_TAIL_MARGIN: f64 = 0.05;
/// Relative distance below `phi_c` at which the boundary (power-tail) treatment kicks in.
pub const BOUNDARY_REL: f64 = 1e-12;
/// Relative excess above `phi_c` still treated as `phi_c`.
pub const ABOVE_CRITICAL_REL: f64 = 1e-9;

/// `S_p = sum_k k^p phi^k / g!(k)` for `p = 0, 1, 2`; an entry may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
}

impl Moments {
    pub fn mean(&self) -> f64 {
        self.s1 / self.s0
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.s2 / self.s0 - m * m).max(0.0)
    }
}

pub fn moments(spec: &JumpRateSpec, phi: f64, phi_c: f64) -> Result<Moments> {
    if !(phi >= 0.0) || !phi.is_finite() {
        return Err(Error::InvalidArgument(format!("fugacity must be >= 0, got {phi}")));
    }
    if phi == 0.0 {
        return Ok(Moments { s0: 1.0, s1: 0.0, s2: 0.0 });
    }
    if phi > phi_c * (1.0 + ABOVE_CRITICAL_REL) {
        return Err(Error::Diverges { phi });
    }
    let at_boundary = phi >= phi_c * (1.0 - BOUNDARY_REL);
    let ln_phi = phi.ln();
    let k_max = spec.k_max();
    let log_term = |k: usize| k as f64 * ln_phi - spec.log_gfact(k);

    let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
    let mut prev = 0.0f64;
    let mut rising = 0usize;
    let mut last = k_max;
    let mut ratio = 1.0;

    for k in 0..=k_max {
        let kf = k as f64;
        let term = log_term(k).exp();
        s0 += term;
        s1 += kf * term;
        s2 += kf * kf * term;
        if k > 0 {
            ratio = term / prev;
            if ratio >= 1.0 {
                rising += 1;
                if rising >= DIVERGENCE_RUN {
                    return Err(Error::Diverges { phi });
                }
            } else {
                rising = 0;
            }
            if k >= MIN_TERMS
                && ratio < 1.0
                && term <= EPS_SERIES * s0
                && kf * term <= EPS_SERIES * s1
                && kf * kf * term <= EPS_SERIES * s2
            {
                last = k;
                break;
            }
        }
        prev = term;
    }

    let tail = if at_boundary {
        power_tail(spec, ln_phi, last)
    } else if ratio < 1.0 {
        geometric_tail(log_term(last).exp(), ratio, last as f64)
    } else {
        return Err(Error::Diverges { phi });
    };
    Ok(Moments {
        s0: s0 + tail.s0,
        s1: s1 + tail.s1,
        s2: s2 + tail.s2,
    })
}

/// `sum_{m>=1} (k+m)^p t r^m` for `p = 0, 1, 2`.
fn geometric_tail(term: f64, r: f64, k: f64) -> Moments {
    let a = r / (1.0 - r);
    let b = r / ((1.0 - r) * (1.0 - r));
    let c = r * (1.0 + r) / ((1.0 - r) * (1.0 - r) * (1.0 - r));
    Moments {
        s0: term * a,
        s1: term * (k * a + b),
        s2: term * (k * k * a + 2.0 * k * b + c),
    }
}

/// Integral of the fitted power law `C k^{-s}` beyond `last`.
fn power_tail(spec: &JumpRateSpec, ln_phi: f64, last: usize) -> Moments {
    let first = (last / 10).max(1);
    if last < 10 || first == last {
        return Moments { s0: 0.0, s1: 0.0, s2: 0.0 };
    }
    let lt = |k: usize| k as f64 * ln_phi - spec.log_gfact(k);
    let (lo, hi) = (first as f64, last as f64);
    let s = -(lt(last) - lt(first)) / (hi.ln() - lo.ln());
    let ln_c = lt(last) + s * hi.ln();
    let edge = hi + 0.5;
    let moment = |p: f64| {
        let excess = s - p - 1.0;
        if excess <= POWER_TAIL_MARGIN {
            f64::INFINITY
        } else {
            (ln_c + (p + 1.0 - s) * edge.ln()).exp() / excess
        }
    };
    Moments {
        s0: moment(0.0),
        s1: moment(1.0),
        s2: moment(2.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::rates::RateFamily;

    #[test]
    fn geometric_case_matches_closed_form() {
        let spec = JumpRateSpec::evans(0.0).unwrap();
        for &phi in &[0.1, 0.5, 0.9, 0.99] {
            let m = moments(&spec, phi, 1.0).unwrap();
            let z = 1.0 / (1.0 - phi);
            assert!((m.s0 - z).abs() < 1e-12 * z);
            assert!((m.mean() - phi / (1.0 - phi)).abs() < 1e-10 * z);
            // geometric law: variance = phi / (1-phi)^2
            assert!((m.variance() - phi * z * z).abs() < 1e-8 * z * z);
        }
    }

    #[test]
    fn boundary_divergence_detection() {
        // b = 0 at phi_c: all terms equal one.
        let spec = JumpRateSpec::evans(0.0).unwrap();
        assert!(matches!(moments(&spec, 1.0, 1.0), Err(Error::Diverges { .. })));
        // b = 1 at phi_c: harmonic series, Z infinite.
        let spec = JumpRateSpec::evans(1.0).unwrap();
        assert!(moments(&spec, 1.0, 1.0).unwrap().s0.is_infinite());
        // b = 2: Z finite (= 2) but the mean is infinite.
        let spec = JumpRateSpec::evans(2.0).unwrap();
        let m = moments(&spec, 1.0, 1.0).unwrap();
        assert!((m.s0 - 2.0).abs() < 1e-4);
        assert!(m.s1.is_infinite());
    }

    #[test]
    fn above_critical_diverges() {
        let spec = JumpRateSpec::evans(4.0).unwrap();
        assert!(matches!(moments(&spec, 1.2, 1.0), Err(Error::Diverges { .. })));
        // Even when told a wrong phi_c, the rising-ratio detector fires.
        assert!(matches!(moments(&spec, 1.2, 2.0), Err(Error::Diverges { .. })));
    }

    #[test]
    fn constant_rate_table() {
        let spec = JumpRateSpec::with_capacity(RateFamily::Table { rates: vec![2.0] }, 2000).unwrap();
        let m = moments(&spec, 1.0, 2.0).unwrap();
        assert!((m.s0 - 2.0).abs() < 1e-12);
    }
}
