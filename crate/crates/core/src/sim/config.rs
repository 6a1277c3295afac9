use std::sync::Arc;

use super::tree::RateTree;
use crate::error::Result;
use crate::thermo::JumpRateSpec;

/// Occupancies on the torus with the cached total and the per-site rate tree.
#[derive(Debug, Clone)]
pub struct Configuration {
    spec: Arc<JumpRateSpec>,
    occ: Vec<u32>,
    total: u64,
    tree: RateTree,
}

impl Configuration {
    /// Fails when the rate table cannot hold every particle on one site.
    pub fn new(spec: Arc<JumpRateSpec>, occ: Vec<u32>) -> Result<Self> {
        let total: u64 = occ.iter().map(|&k| k as u64).sum();
        spec.ensure_capacity(total)?;
        let weights: Vec<f64> = occ.iter().map(|&k| spec.rate(k as usize)).collect();
        let tree = RateTree::new(&weights);
        Ok(Self { spec, occ, total, tree })
    }

    pub fn spec(&self) -> &Arc<JumpRateSpec> {
        &self.spec
    }

    pub fn occupancy(&self) -> &[u32] {
        &self.occ
    }

    #[inline]
    pub fn occ(&self, site: usize) -> u32 {
        self.occ[site]
    }

    /// `g(η(x))`.
    #[inline]
    pub fn rate_at(&self, site: usize) -> f64 {
        self.spec.rate(self.occ[site] as usize)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `sum_x g(η(x))`.
    pub fn rate_sum(&self) -> f64 {
        self.tree.total()
    }

    pub(crate) fn tree(&self) -> &RateTree {
        &self.tree
    }

    /// Moves one particle `from -> to`; the caller guarantees `η(from) >= 1`.
    pub(crate) fn move_particle(&mut self, from: usize, to: usize) {
        debug_assert!(self.occ[from] > 0);
        self.occ[from] -= 1;
        self.occ[to] += 1;
        self.tree.set(from, self.spec.rate(self.occ[from] as usize));
        self.tree.set(to, self.spec.rate(self.occ[to] as usize));
    }

    /// Fresh `sum_x η(x)`, for conservation checks.
    pub fn recount(&self) -> u64 {
        self.occ.iter().map(|&k| k as u64).sum()
    }

    /// Rebuilds the rate tree from the occupancies and returns the largest
    /// relative change of any leaf weight or of the total.
    pub fn rebuild_rates(&mut self) -> f64 {
        let weights: Vec<f64> = self.occ.iter().map(|&k| self.spec.rate(k as usize)).collect();
        let fresh = RateTree::new(&weights);
        let mut worst = 0.0f64;
        for (i, &w) in weights.iter().enumerate() {
            let old = self.tree.weight(i);
            worst = worst.max((old - w).abs() / w.abs().max(f64::MIN_POSITIVE));
        }
        let (old, new) = (self.tree.total(), fresh.total());
        worst = worst.max((old - new).abs() / new.abs().max(f64::MIN_POSITIVE));
        self.tree = fresh;
        worst
    }
}
