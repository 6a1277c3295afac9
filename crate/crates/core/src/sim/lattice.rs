use crate::error::{invalid, Result};
use crate::thermo::Offset;

/// The discrete torus `T_N^d` for `d ∈ {1, 2}` with its nearest-neighbour table.
///
/// Sites are numbered `x_0 + N x_1`. Direction `2j` is `+e_j`, direction `2j + 1` is `-e_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    d: usize,
    n: usize,
    sites: usize,
    neighbors: Vec<u32>,
}

impl Lattice {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return invalid(format!("dimension must be 1 or 2, got {d}"));
        }
        if n < 2 {
            return invalid(format!("side length must be at least 2, got {n}"));
        }
        let sites = n.checked_pow(d as u32).filter(|s| *s <= u32::MAX as usize);
        let Some(sites) = sites else {
            return invalid("lattice too large");
        };
        let mut lattice = Self { d, n, sites, neighbors: Vec::with_capacity(sites * 2 * d) };
        for site in 0..sites {
            for dir in 0..2 * d {
                let mut off = [0i32; 2];
                off[dir / 2] = if dir % 2 == 0 { 1 } else { -1 };
                let y = lattice.shift(site, off);
                lattice.neighbors.push(y as u32);
            }
        }
        Ok(lattice)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn directions(&self) -> usize {
        2 * self.d
    }

    /// `N^d` as a float, the mass normalization of the empirical measures.
    pub fn volume(&self) -> f64 {
        self.sites as f64
    }

    pub fn coords(&self, site: usize) -> [usize; 2] {
        if self.d == 1 {
            [site, 0]
        } else {
            [site % self.n, site / self.n]
        }
    }

    pub fn site(&self, coords: [usize; 2]) -> usize {
        if self.d == 1 {
            coords[0] % self.n
        } else {
            coords[0] % self.n + self.n * (coords[1] % self.n)
        }
    }

    /// Periodic translate of `site` by `off`.
    pub fn shift(&self, site: usize, off: Offset) -> usize {
        let n = self.n as i64;
        let c = self.coords(site);
        let x0 = (c[0] as i64 + off[0] as i64).rem_euclid(n) as usize;
        if self.d == 1 {
            return x0;
        }
        let x1 = (c[1] as i64 + off[1] as i64).rem_euclid(n) as usize;
        x0 + self.n * x1
    }

    #[inline]
    pub fn neighbor(&self, site: usize, dir: usize) -> usize {
        self.neighbors[site * 2 * self.d + dir] as usize
    }

    /// Macroscopic position `x/N ∈ [0, 1)^d`; unused components are zero.
    pub fn position(&self, site: usize) -> [f64; 2] {
        let c = self.coords(site);
        let n = self.n as f64;
        [c[0] as f64 / n, if self.d == 2 { c[1] as f64 / n } else { 0.0 }]
    }

    /// Offsets `y` with `|y|_∞ <= radius`, in a fixed order.
    pub fn ball_offsets(&self, radius: usize) -> Vec<Offset> {
        let r = radius as i32;
        let mut out = Vec::new();
        if self.d == 1 {
            out.extend((-r..=r).map(|a| [a, 0]));
        } else {
            for b in -r..=r {
                out.extend((-r..=r).map(|a| [a, b]));
            }
        }
        out
    }

    /// Number of sites in a sup-norm ball, `(2 radius + 1)^d`.
    pub fn ball_size(&self, radius: usize) -> usize {
        (2 * radius + 1).pow(self.d as u32)
    }

    /// Radius `r` is admissible for block averages when the window does not wrap onto itself.
    pub fn check_radius(&self, radius: usize) -> Result<()> {
        if 2 * radius + 1 > self.n {
            return invalid(format!("block radius {radius} needs 2r+1 <= N = {}", self.n));
        }
        Ok(())
    }
}
