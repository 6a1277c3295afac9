use rand::Rng;

use crate::error::{Error, Result};
use crate::thermo::JumpRateSpec;

/// Largest particle count the `O(n K^2)` table is built for.
pub const MAX_CANONICAL_PARTICLES: usize = 5000;

/// `log Z_{n,k}` with `Z_{n,k} = sum_{|η|=k on n sites} prod_x 1/g!(η_x)`,
/// for `0 <= n <= n_sites` and `0 <= k <= k_total`.
///
/// The canonical measure `ν_{N,K}` is the product weight `prod 1/g!(η_x)`
/// conditioned on `|η| = K`, so these are its normalizations.
#[derive(Debug, Clone)]
pub struct CanonicalTable {
    n_sites: usize,
    k_total: usize,
    log_z: Vec<f64>,
    log_gfact: Vec<f64>,
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

impl CanonicalTable {
    pub fn build(spec: &JumpRateSpec, n_sites: usize, k_total: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidArgument("canonical table needs at least one site".into()));
        }
        spec.ensure_capacity(k_total as u64)?;
        if k_total > MAX_CANONICAL_PARTICLES {
            return Err(Error::Capacity {
                what: "canonical particle count",
                requested: k_total as u64,
                capacity: MAX_CANONICAL_PARTICLES as u64,
            });
        }
        let width = k_total + 1;
        let lg: Vec<f64> = spec.log_gfact_table()[..width].to_vec();
        let mut log_z = vec![f64::NEG_INFINITY; (n_sites + 1) * width];
        log_z[0] = 0.0;
        for n in 1..=n_sites {
            let (prev_rows, rest) = log_z.split_at_mut(n * width);
            let prev = &prev_rows[(n - 1) * width..];
            let row = &mut rest[..width];
            for k in 0..width {
                row[k] = log_sum_exp((0..=k).map(|j| prev[k - j] - lg[j]));
            }
        }
        Ok(Self { n_sites, k_total, log_z, log_gfact: lg })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn k_total(&self) -> usize {
        self.k_total
    }

    pub fn log_z(&self, n: usize, k: usize) -> f64 {
        self.log_z[n * (self.k_total + 1) + k]
    }

    pub fn z(&self, n: usize, k: usize) -> f64 {
        self.log_z(n, k).exp()
    }

    /// `E_{ν_{n,k}}[g(η(0))] = Z_{n,k-1} / Z_{n,k}`.
    pub fn expectation_g(&self, n: usize, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidArgument("E[g] under ν_{n,0} needs k >= 1".into()));
        }
        self.check_index(n, k)?;
        Ok((self.log_z(n, k - 1) - self.log_z(n, k)).exp())
    }

    /// `P(η(0) = j)` under `ν_{n,k}`.
    pub fn marginal(&self, n: usize, k: usize, j: usize) -> f64 {
        if j > k {
            return 0.0;
        }
        (self.log_z(n - 1, k - j) - self.log_gfact[j] - self.log_z(n, k)).exp()
    }

    fn check_index(&self, n: usize, k: usize) -> Result<()> {
        if n == 0 || n > self.n_sites || k > self.k_total {
            return Err(Error::InvalidArgument(format!(
                "(n, k) = ({n}, {k}) outside table ({}, {})",
                self.n_sites, self.k_total
            )));
        }
        Ok(())
    }

    /// Exact draw from `ν_{n_sites, k_total}`, site by site in index order:
    /// `P(η_i = j | rest) = Z_{m-1, r-j} / (g!(j) Z_{m, r})` with `m` sites and `r` particles left.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        self.sample_sized(self.n_sites, self.k_total, rng)
    }

    pub fn sample_sized<R: Rng + ?Sized>(&self, n: usize, k: usize, rng: &mut R) -> Vec<u32> {
        let mut occ = vec![0u32; n];
        let mut left = k;
        for (i, slot) in occ.iter_mut().enumerate() {
            let m = n - i;
            if m == 1 {
                *slot = left as u32;
                break;
            }
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = left;
            for j in 0..=left {
                acc += self.marginal(m, left, j);
                if u < acc {
                    pick = j;
                    break;
                }
            }
            *slot = pick as u32;
            left -= pick;
        }
        occ
    }
}
