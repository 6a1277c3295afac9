use crate::sim::{Configuration, Lattice};

/// Atomic empirical measures of one configuration.
///
/// `density[x] = η(x)/N^d` and `jump_rate[x] = g(η(x))/N^d` are the atoms of
/// `π^N` and `σ^N` at `x/N`; `current[j][x] = [g(η(x)) - g(η(x+e_j))]/N^{d-1}`
/// is the current through the bond `(x, x+e_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalFields {
    pub t: f64,
    pub dim: usize,
    pub side: usize,
    pub total: u64,
    pub density: Vec<f64>,
    pub jump_rate: Vec<f64>,
    pub current: Vec<Vec<f64>>,
}

pub fn extract_fields(config: &Configuration, lattice: &Lattice, t: f64) -> EmpiricalFields {
    let volume = lattice.volume();
    let bond_scale = (lattice.side() as f64).powi(lattice.dim() as i32 - 1);
    let sites = lattice.sites();
    let density = config.occupancy().iter().map(|&k| k as f64 / volume).collect();
    let rates: Vec<f64> = (0..sites).map(|x| config.rate_at(x)).collect();
    let jump_rate = rates.iter().map(|g| g / volume).collect();
    let current = (0..lattice.dim())
        .map(|j| (0..sites).map(|x| (rates[x] - rates[lattice.neighbor(x, 2 * j)]) / bond_scale).collect())
        .collect();
    EmpiricalFields {
        t,
        dim: lattice.dim(),
        side: lattice.side(),
        total: config.total(),
        density,
        jump_rate,
        current,
    }
}

/// Sum that depends only on the multiset of values, not on their order.
fn order_free_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

impl EmpiricalFields {
    pub fn volume(&self) -> f64 {
        (self.side as f64).powi(self.dim as i32)
    }

    /// `⟨1, π^N⟩ = total / N^d`.
    pub fn mass(&self) -> f64 {
        self.total as f64 / self.volume()
    }

    pub fn position(&self, x: usize) -> [f64; 2] {
        let n = self.side;
        let p = [(x % n) as f64 / n as f64, (x / n) as f64 / n as f64];
        if self.dim == 1 {
            [p[0], 0.0]
        } else {
            p
        }
    }

    pub fn pair_density(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.density.iter().enumerate().map(|(x, m)| f(self.position(x)) * m).sum()
    }

    pub fn pair_jump_rate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.jump_rate.iter().enumerate().map(|(x, m)| f(self.position(x)) * m).sum()
    }

    /// Total current in direction `j`, `sum_x g(η(x)) - sum_x g(η(x+e_j))` over `N^{d-1}`.
    ///
    /// The two sums run over the same multiset of rates, so summing each
    /// in sorted order makes the result exactly zero.
    pub fn total_current(&self, j: usize) -> f64 {
        let scale = (self.side as f64).powi(self.dim as i32 - 1);
        let volume = self.volume();
        let rate = |x: usize| self.jump_rate[x] * volume / scale;
        let stride = if j == 0 { 1 } else { self.side };
        let shifted = |x: usize| {
            let c = (x / stride) % self.side;
            if c + 1 == self.side {
                x + stride - self.side * stride
            } else {
                x + stride
            }
        };
        let n = self.jump_rate.len();
        order_free_sum((0..n).map(rate)) - order_free_sum((0..n).map(|x| rate(shifted(x))))
    }
}
