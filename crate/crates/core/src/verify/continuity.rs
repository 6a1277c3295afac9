use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::field::{DiscreteTestField, FieldTerm};
use super::{Ensemble, ReplicaStats, Verdict};
use crate::error::{invalid, Result};
use crate::sim::{Configuration, JumpEvent, JumpRate, Lattice, LocalSum, Observer, Occupancy, TimeFactor};

/// Bookkeeping for one separable term `a(t) b(u)` of the test field.
struct TermTracker {
    term: FieldTerm,
    /// `c · K / N^d` when `b ≡ c`.
    constant_pairing: Option<f64>,
    /// `⟨b, π_t⟩`, integrating `a'(t) ⟨b, π_t⟩`.
    pairing: Option<LocalSum<Occupancy>>,
    /// `∫ a ⟨Δb, σ⟩`.
    laplacian: Option<LocalSum<JumpRate>>,
    /// `∫ a ⟨∇b, W⟩` after summation by parts, `∇b` taken at bond midpoints.
    current: Option<LocalSum<JumpRate>>,
    /// `∫ a ⟨Δ^N b, σ⟩`.
    discrete: Option<LocalSum<JumpRate>>,
}

/// Running `V¹`, `V²` and the martingale `A` of a test field.
pub(crate) struct FieldTracker {
    terms: Vec<TermTracker>,
    initial_pairing: f64,
}

fn factor(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> TimeFactor {
    f
}

impl FieldTracker {
    pub(crate) fn new(field: &DiscreteTestField, lattice: &Arc<Lattice>, config: &Configuration) -> Result<Self> {
        if field.dim() != lattice.dim() {
            return invalid("test field and lattice dimensions differ");
        }
        let n = lattice.side();
        let vol = lattice.volume();
        let surface = vol / n as f64;
        let positions: Vec<[f64; 2]> = (0..lattice.sites()).map(|x| lattice.position(x)).collect();
        let mut terms = Vec::with_capacity(field.terms().len());
        for term in field.terms() {
            let b = &term.space;
            let a = factor(term.time.value_fn());
            if b.is_constant() {
                terms.push(TermTracker {
                    term: term.clone(),
                    constant_pairing: Some(b.value([0.0; 2]) * config.total() as f64 / vol),
                    pairing: None,
                    laplacian: None,
                    current: None,
                    discrete: None,
                });
                continue;
            }
            let weights: Vec<f64> = positions.iter().map(|&u| b.value(u) / vol).collect();
            let mut pairing = LocalSum::new(Occupancy, lattice.clone(), weights, config)?;
            if !term.time.is_constant() {
                pairing = pairing.with_time_factor(factor(term.time.derivative_fn()));
            }
            let lap: Vec<f64> = positions.iter().map(|&u| b.laplacian(u) / vol).collect();
            let single = DiscreteTestField::stationary(field.dim(), b.clone());
            let disc: Vec<f64> = positions.iter().map(|&u| single.discrete_laplacian(0.0, u, n) / vol).collect();
            let cur: Vec<f64> = (0..lattice.sites())
                .map(|x| {
                    (0..lattice.dim())
                        .map(|j| {
                            let half = 0.5 / n as f64;
                            let mut ahead = positions[x];
                            let mut behind = positions[x];
                            ahead[j] += half;
                            behind[j] -= half;
                            b.gradient(ahead)[j] - b.gradient(behind)[j]
                        })
                        .sum::<f64>()
                        / surface
                })
                .collect();
            terms.push(TermTracker {
                term: term.clone(),
                constant_pairing: None,
                pairing: Some(pairing),
                laplacian: Some(LocalSum::new(JumpRate, lattice.clone(), lap, config)?.with_time_factor(a.clone())),
                current: Some(LocalSum::new(JumpRate, lattice.clone(), cur, config)?.with_time_factor(a.clone())),
                discrete: Some(LocalSum::new(JumpRate, lattice.clone(), disc, config)?.with_time_factor(a)),
            });
        }
        let mut tracker = Self { terms, initial_pairing: 0.0 };
        tracker.initial_pairing = tracker.pairing(0.0);
        Ok(tracker)
    }

    /// `⟨G_t, π_t⟩`.
    fn pairing(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|k| {
                let p = k.constant_pairing.unwrap_or_else(|| k.pairing.as_ref().map_or(0.0, |s| s.current()));
                k.term.time.value(t) * p
            })
            .sum()
    }

    /// `⟨G_t,π_t⟩ - ⟨G_0,π_0⟩ - ∫⟨∂_s G, π⟩`.
    fn increment(&self, t: f64) -> f64 {
        let drift: f64 = self
            .terms
            .iter()
            .filter(|k| !k.term.time.is_constant())
            .map(|k| match (k.constant_pairing, &k.pairing) {
                (Some(p), _) => p * (k.term.time.value(t) - k.term.time.value(0.0)),
                (None, Some(s)) => s.integral(),
                (None, None) => 0.0,
            })
            .sum();
        self.pairing(t) - self.initial_pairing - drift
    }

    fn integral(sum: &Option<LocalSum<JumpRate>>) -> f64 {
        sum.as_ref().map_or(0.0, |s| s.integral())
    }

    /// `(V¹_t, V²_t, A_t)`.
    pub(crate) fn residuals(&self, t: f64) -> (f64, f64, f64) {
        let inc = self.increment(t);
        let lap: f64 = self.terms.iter().map(|k| Self::integral(&k.laplacian)).sum();
        let cur: f64 = self.terms.iter().map(|k| Self::integral(&k.current)).sum();
        let disc: f64 = self.terms.iter().map(|k| Self::integral(&k.discrete)).sum();
        (inc - lap, inc - cur, inc - disc)
    }
}

impl Observer for FieldTracker {
    fn advance(&mut self, config: &Configuration, t0: f64, t1: f64) {
        for k in &mut self.terms {
            for s in [&mut k.laplacian, &mut k.current, &mut k.discrete].into_iter().flatten() {
                s.advance(config, t0, t1);
            }
            if let Some(s) = &mut k.pairing {
                s.advance(config, t0, t1);
            }
        }
    }

    fn on_jump(&mut self, config: &Configuration, event: &JumpEvent) {
        for k in &mut self.terms {
            for s in [&mut k.laplacian, &mut k.current, &mut k.discrete].into_iter().flatten() {
                s.on_jump(config, event);
            }
            if let Some(s) = &mut k.pairing {
                s.on_jump(config, event);
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// Per replica, `sup_s |V¹_{t_s}|` (jump-rate form).
    pub v1: ReplicaStats,
    /// Per replica, `sup_s |V²_{t_s}|` (current form).
    pub v2: ReplicaStats,
    pub samples: usize,
}

/// Continuity-equation residuals along every replica, maximized over `samples`
/// equally spaced times in `(0, T]`.
pub fn continuity_residuals(ens: &Ensemble, field: &DiscreteTestField, samples: usize) -> Result<ContinuityReport> {
    if samples == 0 {
        return invalid("at least one sample time is required");
    }
    let times = ens.sample_times(samples);
    let sups = ens.map(|mut sim| {
        let mut tracker = FieldTracker::new(field, ens.lattice(), sim.config())?;
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for &t in &times {
            sim.run_until(t, &mut [&mut tracker])?;
            let (v1, v2, _) = tracker.residuals(t);
            s1 = s1.max(v1.abs());
            s2 = s2.max(v2.abs());
        }
        Ok((s1, s2))
    })?;
    Ok(ContinuityReport {
        v1: ens.stats(sups.iter().map(|s| s.0).collect()),
        v2: ens.stats(sups.iter().map(|s| s.1).collect()),
        samples,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QvReport {
    /// `A_T` per replica.
    pub martingale: ReplicaStats,
    /// `⟨1, π_0⟩` per replica.
    pub initial_mass: ReplicaStats,
    pub variance: f64,
    /// One-sided 95% upper confidence limit of `Var(A_T)`.
    pub variance_upper95: f64,
    /// `2d ‖∇G‖² ‖g'‖_∞ T E⟨1,π_0⟩ / N^d`.
    pub bound: f64,
    pub verdict: Verdict,
}

/// Cross-replica variance of the Dynkin martingale `A_T` against its
/// quadratic-variation bound.
pub fn martingale_qv_check(ens: &Ensemble, field: &DiscreteTestField) -> Result<QvReport> {
    if !field.is_time_independent() {
        return invalid("the quadratic-variation check needs a time-independent field");
    }
    let lattice = ens.lattice();
    let t_end = ens.horizon();
    let runs = ens.map(|mut sim| {
        let mass = sim.config().total() as f64 / lattice.volume();
        let mut tracker = FieldTracker::new(field, lattice, sim.config())?;
        sim.run_until(t_end, &mut [&mut tracker])?;
        Ok((tracker.residuals(t_end).2, mass))
    })?;
    let martingale = ens.stats(runs.iter().map(|r| r.0).collect());
    let initial_mass = ens.stats(runs.iter().map(|r| r.1).collect());
    let grad2 = field.gradient_sup_squared(0.0, lattice.side().max(1024));
    let d = lattice.dim() as f64;
    let bound = 2.0 * d * grad2 * ens.profile().grad_sup() * t_end * initial_mass.mean / lattice.volume();
    let variance = martingale.variance();
    let variance_upper95 = if martingale.replicas >= 2 { martingale.variance_upper_limit(0.95)? } else { variance };
    Ok(QvReport {
        verdict: Verdict::from_bool(variance_upper95 <= bound),
        martingale,
        initial_mass,
        variance,
        variance_upper95,
        bound,
    })
}
