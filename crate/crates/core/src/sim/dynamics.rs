use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::config::Configuration;
use super::lattice::Lattice;
use crate::error::{invalid, Error, Result};
use crate::rng::SimRng;

/// Default cap on the number of jumps a single trajectory may perform.
pub const DEFAULT_EVENT_BUDGET: u64 = 1_000_000_000;

/// One particle moved `from -> to` along direction `dir` after holding for `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub from: usize,
    pub to: usize,
    pub dir: usize,
    pub dt: f64,
}

/// Receives the piecewise-constant trajectory.
///
/// `advance` is called with the configuration that is held on `[t0, t1)`;
/// `on_jump` after the configuration has changed.
pub trait Observer {
    fn advance(&mut self, _config: &Configuration, _t0: f64, _t1: f64) {}
    fn on_jump(&mut self, _config: &Configuration, _event: &JumpEvent) {}
}

/// Macroscopic clock of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    pub t: f64,
    pub events: u64,
    pub budget: u64,
}

/// A single diffusively rescaled trajectory of the symmetric nearest-neighbour process.
///
/// The generator is `N^2 sum_x sum_{|e|=1} g(η(x)) [f(η^{x,x+e}) - f(η)]`, so the
/// total jump rate is `N^2 · 2d · sum_x g(η(x))` and time is macroscopic.
#[derive(Debug, Clone)]
pub struct Simulation {
    lattice: Arc<Lattice>,
    config: Configuration,
    clock: Clock,
    rng: SimRng,
}

impl Simulation {
    pub fn new(lattice: Arc<Lattice>, config: Configuration, rng: SimRng) -> Result<Self> {
        if config.occupancy().len() != lattice.sites() {
            return invalid(format!(
                "configuration has {} sites, lattice has {}",
                config.occupancy().len(),
                lattice.sites()
            ));
        }
        Ok(Self {
            lattice,
            config,
            clock: Clock { t: 0.0, events: 0, budget: DEFAULT_EVENT_BUDGET },
            rng,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.clock.budget = budget;
        self
    }

    pub(crate) fn restore_parts(
        lattice: Arc<Lattice>,
        config: Configuration,
        clock: Clock,
        rng: SimRng,
    ) -> Self {
        Self { lattice, config, clock, rng }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut Configuration {
        &mut self.config
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn time(&self) -> f64 {
        self.clock.t
    }

    pub fn rng(&self) -> &SimRng {
        &self.rng
    }

    /// `N^2 · 2d · sum_x g(η(x))`.
    pub fn total_rate(&self) -> f64 {
        let n = self.lattice.side() as f64;
        n * n * self.lattice.directions() as f64 * self.config.rate_sum()
    }

    fn holding_time(&mut self) -> f64 {
        let rate = self.total_rate();
        if rate > 0.0 {
            let e: f64 = Exp1.sample(&mut self.rng);
            e / rate
        } else {
            f64::INFINITY
        }
    }

    fn pick_jump(&mut self) -> (usize, usize, usize) {
        let tree = self.config.tree();
        let from = loop {
            let target = self.rng.random::<f64>() * tree.total();
            let site = tree.find(target);
            // A zero-weight leaf can only come out of a rounding tie at a boundary.
            if site < self.lattice.sites() && tree.weight(site) > 0.0 {
                break site;
            }
        };
        let dir = self.rng.random_range(0..self.lattice.directions());
        (from, self.lattice.neighbor(from, dir), dir)
    }

    /// One jump of the chain; `Frozen` when no particle can move.
    pub fn step(&mut self) -> Result<JumpEvent> {
        let dt = self.holding_time();
        if dt.is_infinite() {
            return Err(Error::Frozen);
        }
        Ok(self.apply(dt))
    }

    fn apply(&mut self, dt: f64) -> JumpEvent {
        let (from, to, dir) = self.pick_jump();
        self.config.move_particle(from, to);
        self.clock.t += dt;
        self.clock.events += 1;
        JumpEvent { from, to, dir, dt }
    }

    /// Advances to exactly `t_end`. Observers see every holding interval, so
    /// time integrals are exact sums `value × holding time`.
    ///
    /// The pending exponential clock at `t_end` is discarded, which leaves the
    /// law of the process unchanged by memorylessness.
    pub fn run_until(&mut self, t_end: f64, observers: &mut [&mut dyn Observer]) -> Result<()> {
        if !(t_end >= self.clock.t) {
            return invalid(format!("t_end = {t_end} precedes current time {}", self.clock.t));
        }
        loop {
            let t0 = self.clock.t;
            let dt = self.holding_time();
            if !(t0 + dt <= t_end) {
                for obs in observers.iter_mut() {
                    obs.advance(&self.config, t0, t_end);
                }
                self.clock.t = t_end;
                return Ok(());
            }
            if self.clock.events >= self.clock.budget {
                return Err(Error::EventBudgetExceeded { budget: self.clock.budget, t: t0 });
            }
            for obs in observers.iter_mut() {
                obs.advance(&self.config, t0, t0 + dt);
            }
            let event = self.apply(dt);
            for obs in observers.iter_mut() {
                obs.on_jump(&self.config, &event);
            }
        }
    }
}
