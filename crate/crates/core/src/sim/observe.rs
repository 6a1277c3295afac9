use std::sync::Arc;

use super::config::Configuration;
use super::dynamics::{JumpEvent, Observer};
use super::lattice::Lattice;
use crate::error::{invalid, Result};

/// A per-site quantity `f(τ_x η)` that only reads occupancies within `radius` of `x`.
pub trait SiteFunctional {
    fn radius(&self) -> usize;
    fn eval(&mut self, config: &Configuration, lattice: &Lattice, site: usize) -> f64;
}

/// `η(x)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Occupancy;

impl SiteFunctional for Occupancy {
    fn radius(&self) -> usize {
        0
    }
    fn eval(&mut self, config: &Configuration, _: &Lattice, site: usize) -> f64 {
        config.occ(site) as f64
    }
}

/// `g(η(x))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct JumpRate;

impl SiteFunctional for JumpRate {
    fn radius(&self) -> usize {
        0
    }
    fn eval(&mut self, config: &Configuration, _: &Lattice, site: usize) -> f64 {
        config.rate_at(site)
    }
}

/// Closure-backed functional.
pub struct SiteFn<F> {
    radius: usize,
    f: F,
}

impl<F> SiteFn<F>
where
    F: FnMut(&Configuration, &Lattice, usize) -> f64,
{
    pub fn new(radius: usize, f: F) -> Self {
        Self { radius, f }
    }
}

impl<F> SiteFunctional for SiteFn<F>
where
    F: FnMut(&Configuration, &Lattice, usize) -> f64,
{
    fn radius(&self) -> usize {
        self.radius
    }
    fn eval(&mut self, config: &Configuration, lattice: &Lattice, site: usize) -> f64 {
        (self.f)(config, lattice, site)
    }
}

pub type TimeFactor = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const REFRESH_EVERY: u32 = 1 << 16;

/// Tracks `S(η) = sum_x w(x) f(τ_x η)` along a trajectory together with
/// `∫ a(t) S(η_t) dt`.
///
/// After each jump only the sites whose window contains the source or the
/// target are re-evaluated. The running sum is recomputed from scratch every
/// 65536 jumps, which bounds floating-point drift without costing `O(N^d)`
/// per event. When `a` is present it is evaluated at the midpoint of every
/// holding interval.
pub struct LocalSum<F> {
    functional: F,
    lattice: Arc<Lattice>,
    weights: Vec<f64>,
    time_factor: Option<TimeFactor>,
    values: Vec<f64>,
    ball: Vec<[i32; 2]>,
    stamp: Vec<u64>,
    generation: u64,
    current: f64,
    integral: f64,
    since_refresh: u32,
}

impl<F: SiteFunctional> LocalSum<F> {
    pub fn new(functional: F, lattice: Arc<Lattice>, weights: Vec<f64>, config: &Configuration) -> Result<Self> {
        if weights.len() != lattice.sites() {
            return invalid(format!("{} weights for {} sites", weights.len(), lattice.sites()));
        }
        if config.occupancy().len() != lattice.sites() {
            return invalid("configuration does not match the lattice");
        }
        let radius = functional.radius();
        lattice.check_radius(radius)?;
        let ball = lattice.ball_offsets(radius);
        let sites = lattice.sites();
        let mut sum = Self {
            functional,
            lattice,
            weights,
            time_factor: None,
            values: vec![0.0; sites],
            ball,
            stamp: vec![0; sites],
            generation: 0,
            current: 0.0,
            integral: 0.0,
            since_refresh: 0,
        };
        sum.reset(config);
        Ok(sum)
    }

    /// Same weight `w` on every site.
    pub fn uniform(functional: F, lattice: Arc<Lattice>, w: f64, config: &Configuration) -> Result<Self> {
        let weights = vec![w; lattice.sites()];
        Self::new(functional, lattice, weights, config)
    }

    pub fn with_time_factor(mut self, a: TimeFactor) -> Self {
        self.time_factor = Some(a);
        self
    }

    /// Re-evaluates every site and clears the time integral.
    pub fn reset(&mut self, config: &Configuration) {
        for x in 0..self.lattice.sites() {
            self.values[x] = if self.weights[x] != 0.0 {
                self.functional.eval(config, &self.lattice, x)
            } else {
                0.0
            };
        }
        self.refresh();
        self.integral = 0.0;
    }

    fn refresh(&mut self) {
        self.current = self.weights.iter().zip(&self.values).map(|(w, v)| w * v).sum();
        self.since_refresh = 0;
    }

    /// `S(η)` for the configuration currently held.
    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// Per-site values `f(τ_x η)` (zero where the weight is zero).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn functional(&self) -> &F {
        &self.functional
    }

    fn touch(&mut self, config: &Configuration, centre: usize) {
        for k in 0..self.ball.len() {
            let x = self.lattice.shift(centre, self.ball[k]);
            if self.stamp[x] == self.generation {
                continue;
            }
            self.stamp[x] = self.generation;
            let w = self.weights[x];
            if w == 0.0 {
                continue;
            }
            let new = self.functional.eval(config, &self.lattice, x);
            self.current += w * (new - self.values[x]);
            self.values[x] = new;
        }
    }
}

impl<F: SiteFunctional> Observer for LocalSum<F> {
    fn advance(&mut self, _: &Configuration, t0: f64, t1: f64) {
        let dt = t1 - t0;
        if dt > 0.0 {
            let a = self.time_factor.as_ref().map_or(1.0, |a| a(0.5 * (t0 + t1)));
            self.integral += a * self.current * dt;
        }
    }

    fn on_jump(&mut self, config: &Configuration, event: &JumpEvent) {
        self.generation += 1;
        self.touch(config, event.from);
        self.touch(config, event.to);
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            self.refresh();
        }
    }
}

/// Exact per-site time integrals `∫ f(η_t(x)) dt` of a single-site quantity.
///
/// Each site settles its integral only when its value changes, so a jump costs `O(1)`.
#[derive(Debug, Clone)]
pub struct SiteIntegrals {
    kind: SiteQuantity,
    now: f64,
    since: Vec<f64>,
    value: Vec<f64>,
    integral: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteQuantity {
    Occupancy,
    JumpRate,
}

impl SiteIntegrals {
    pub fn new(kind: SiteQuantity, config: &Configuration, t0: f64) -> Self {
        let n = config.occupancy().len();
        let value = (0..n).map(|x| Self::read(kind, config, x)).collect();
        Self { kind, now: t0, since: vec![t0; n], value, integral: vec![0.0; n] }
    }

    fn read(kind: SiteQuantity, config: &Configuration, x: usize) -> f64 {
        match kind {
            SiteQuantity::Occupancy => config.occ(x) as f64,
            SiteQuantity::JumpRate => config.rate_at(x),
        }
    }

    fn settle(&mut self, x: usize) {
        self.integral[x] += self.value[x] * (self.now - self.since[x]);
        self.since[x] = self.now;
    }

    /// Integrals up to the last time seen.
    pub fn integrals(&self) -> Vec<f64> {
        (0..self.value.len())
            .map(|x| self.integral[x] + self.value[x] * (self.now - self.since[x]))
            .collect()
    }
}

impl Observer for SiteIntegrals {
    fn advance(&mut self, _: &Configuration, _t0: f64, t1: f64) {
        self.now = t1;
    }

    fn on_jump(&mut self, config: &Configuration, event: &JumpEvent) {
        for x in [event.from, event.to] {
            self.settle(x);
            self.value[x] = Self::read(self.kind, config, x);
        }
    }
}

/// Recounts the particles after every jump and remembers the first discrepancy.
#[derive(Debug, Clone)]
pub struct ConservationCheck {
    expected: u64,
    checked: u64,
    violation: Option<(u64, u64)>,
}

impl ConservationCheck {
    pub fn new(config: &Configuration) -> Self {
        Self { expected: config.recount(), checked: 0, violation: None }
    }

    pub fn events_checked(&self) -> u64 {
        self.checked
    }

    /// `(event index, observed total)` of the first violation.
    pub fn violation(&self) -> Option<(u64, u64)> {
        self.violation
    }

    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

impl Observer for ConservationCheck {
    fn on_jump(&mut self, config: &Configuration, _: &JumpEvent) {
        self.checked += 1;
        let total = config.recount();
        if (total != self.expected || config.total() != self.expected) && self.violation.is_none() {
            self.violation = Some((self.checked, total));
        }
    }
}

/// Counts jumps and elapsed time.
#[derive(Debug, Clone, Default)]
pub struct EventCounter {
    pub jumps: u64,
    pub time: f64,
}

impl Observer for EventCounter {
    fn advance(&mut self, _: &Configuration, t0: f64, t1: f64) {
        self.time += t1 - t0;
    }
    fn on_jump(&mut self, _: &Configuration, _: &JumpEvent) {
        self.jumps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::sim::Simulation;
    use crate::thermo::JumpRateSpec;

    #[test]
    fn incremental_sum_matches_direct_evaluation() {
        let lattice = Arc::new(Lattice::new(2, 6).unwrap());
        let spec = Arc::new(JumpRateSpec::evans(4.0).unwrap());
        let occ: Vec<u32> = (0..36).map(|i| (i * 7 % 5) as u32).collect();
        let config = Configuration::new(spec, occ).unwrap();
        let weights: Vec<f64> = (0..36).map(|i| (i as f64 * 0.37).sin()).collect();
        let pair = SiteFn::new(1, |c: &Configuration, l: &Lattice, x: usize| {
            (c.occ(x) * c.occ(l.neighbor(x, 0)) + c.occ(l.neighbor(x, 3))) as f64
        });
        let mut obs = LocalSum::new(pair, lattice.clone(), weights.clone(), &config).unwrap();
        let mut sim = Simulation::new(lattice.clone(), config, stream_rng(1, 0)).unwrap();
        sim.run_until(0.2, &mut [&mut obs]).unwrap();
        let c = sim.config();
        let direct: f64 = (0..36)
            .map(|x| {
                let v = c.occ(x) * c.occ(lattice.neighbor(x, 0)) + c.occ(lattice.neighbor(x, 3));
                weights[x] * v as f64
            })
            .sum();
        assert!(sim.clock().events > 1000);
        assert!((obs.current() - direct).abs() < 1e-9, "{} vs {direct}", obs.current());
    }

    #[test]
    fn site_integrals_match_sampled_sums() {
        let lattice = Arc::new(Lattice::new(1, 8).unwrap());
        let spec = Arc::new(JumpRateSpec::evans(0.0).unwrap());
        let config = Configuration::new(spec, vec![1, 0, 2, 0, 0, 1, 0, 0]).unwrap();
        let mut exact = SiteIntegrals::new(SiteQuantity::Occupancy, &config, 0.0);
        let mut sim = Simulation::new(lattice, config, stream_rng(2, 0)).unwrap();
        let mut riemann = vec![0.0; 8];
        let h = 1e-5;
        for k in 0..2000 {
            sim.run_until((k + 1) as f64 * h, &mut [&mut exact]).unwrap();
            for (r, &o) in riemann.iter_mut().zip(sim.config().occupancy()) {
                *r += o as f64 * h;
            }
        }
        let total: f64 = exact.integrals().iter().sum();
        assert!((total - 4.0 * 0.02).abs() < 1e-12);
        for (e, r) in exact.integrals().iter().zip(&riemann) {
            assert!((e - r).abs() < 2e-3 * 0.02 * 4.0, "{e} vs {r}");
        }
    }

    #[test]
    fn frozen_configuration_integrates_linearly() {
        let lattice = Arc::new(Lattice::new(1, 8).unwrap());
        let spec = Arc::new(JumpRateSpec::evans(0.0).unwrap());
        let config = Configuration::new(spec, vec![0; 8]).unwrap();
        let mut obs = LocalSum::uniform(Occupancy, lattice.clone(), 1.0, &config).unwrap();
        let mut sim = Simulation::new(lattice, config, stream_rng(1, 0)).unwrap();
        sim.run_until(0.7, &mut [&mut obs]).unwrap();
        assert_eq!(obs.integral(), 0.0);
        assert_eq!(sim.time(), 0.7);
    }
}
