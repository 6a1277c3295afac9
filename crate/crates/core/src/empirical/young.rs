use std::fmt::Write as _;
use std::sync::Arc;

use super::test_function::TestFunction;
use crate::error::{invalid, Error, Result};
use crate::sim::{blocks, Configuration, Lattice, SiteFunctional};

/// Default width of the value bins.
pub const DEFAULT_DLAMBDA: f64 = 0.05;

/// Value discretization of `[0, M]`.
///
/// Bin `j` (for `j = 0..=B`, `B = M/Δλ`) stands for the value `λ_j = jΔλ`
/// and collects the values in `[λ_j - Δλ/2, λ_j + Δλ/2) ∩ [0, M]`, so every
/// recorded value is within `Δλ/2` of the true one and multiples of `Δλ` are
/// recorded exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueBins {
    m: f64,
    count: usize,
}

impl ValueBins {
    pub fn new(m: f64, dlambda: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite() && dlambda > 0.0) {
            return invalid(format!("need M > 0 and Δλ > 0, got M = {m}, Δλ = {dlambda}"));
        }
        let ratio = m / dlambda;
        let b = ratio.round();
        if (ratio - b).abs() > 1e-9 * ratio.max(1.0) || b < 1.0 {
            return invalid(format!("M = {m} is not a positive multiple of Δλ = {dlambda}"));
        }
        Ok(Self { m, count: b as usize })
    }

    pub fn cap(&self) -> f64 {
        self.m
    }

    /// `B`; the bins are numbered `0..=B`.
    pub fn last(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.count + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn width(&self) -> f64 {
        self.m / self.count as f64
    }

    /// `λ_j = M j / B`.
    pub fn value(&self, j: usize) -> f64 {
        (self.m * j as f64) / self.count as f64
    }

    /// Bin of a value in `[0, M]`.
    pub fn index(&self, v: f64) -> usize {
        ((v / self.m * self.count as f64 + 0.5).floor() as usize).min(self.count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YoungMetadata {
    pub dim: usize,
    pub side: usize,
    pub ell: usize,
    pub m: f64,
    pub dlambda: f64,
}

/// Atomic generalized Young measure on `T^d × [0, M]` plus a singular part on `T^d`.
///
/// Space cells are the lattice sites. `regular[x * bins + j]` is the mass of
/// cell `(x/N, λ_j)`; `singular[x]` the singular mass at `x/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedYoungMeasure {
    pub meta: YoungMetadata,
    bins: ValueBins,
    pub regular: Vec<f64>,
    pub singular: Vec<f64>,
}

/// `(η^ℓ(x) ∧ M, (η^ℓ(x) - M)^+)` as the micro-empirical Young measure.
pub fn build_young(config: &Configuration, lattice: &Lattice, ell: usize, m: f64, dlambda: f64) -> Result<GeneralizedYoungMeasure> {
    let bins = ValueBins::new(m, dlambda)?;
    let averages = blocks::block_averages(lattice, config.occupancy(), ell)?;
    let volume = lattice.volume();
    let mass = 1.0 / volume;
    let sites = lattice.sites();
    let mut regular = vec![0.0; sites * bins.len()];
    let mut singular = vec![0.0; sites];
    for (x, &v) in averages.iter().enumerate() {
        regular[x * bins.len() + bins.index(v.min(m))] += mass;
        if v > m {
            singular[x] = (v - m) / volume;
        }
    }
    Ok(GeneralizedYoungMeasure {
        meta: YoungMetadata { dim: lattice.dim(), side: lattice.side(), ell, m, dlambda },
        bins,
        regular,
        singular,
    })
}

impl GeneralizedYoungMeasure {
    pub fn bins(&self) -> &ValueBins {
        &self.bins
    }

    pub fn sites(&self) -> usize {
        self.singular.len()
    }

    pub fn regular_mass(&self, x: usize, j: usize) -> f64 {
        self.regular[x * self.bins.len() + j]
    }

    pub fn position(&self, x: usize) -> [f64; 2] {
        let n = self.meta.side;
        if self.meta.dim == 1 {
            [x as f64 / n as f64, 0.0]
        } else {
            [(x % n) as f64 / n as f64, (x / n) as f64 / n as f64]
        }
    }

    /// `⟨F, π⟩ = sum F(u_i, λ_j) m_ij + sum F^∞(u_i) m^⊥_i`.
    pub fn pair(&self, f: &TestFunction) -> Result<f64> {
        let nb = self.bins.len();
        let mut total = 0.0;
        for x in 0..self.sites() {
            let u = self.position(x);
            for j in 0..nb {
                let w = self.regular[x * nb + j];
                if w != 0.0 {
                    total += f.eval(u, self.bins.value(j)) * w;
                }
            }
        }
        if self.singular.iter().any(|&s| s != 0.0) {
            let rf = f.recession_fn().ok_or(Error::MissingRecession)?;
            for (x, &s) in self.singular.iter().enumerate() {
                if s != 0.0 {
                    total += rf(self.position(x)) * s;
                }
            }
        }
        Ok(total)
    }

    /// `Ψ`-projection: cell `x` gets `sum_j Ψ(λ_j) m_xj + Ψ'(∞) m^⊥_x`.
    pub fn project(&self, psi: impl Fn(f64) -> f64, slope_at_infinity: f64) -> Vec<f64> {
        let nb = self.bins.len();
        let psi_values: Vec<f64> = (0..nb).map(|j| psi(self.bins.value(j))).collect();
        (0..self.sites())
            .map(|x| {
                let regular: f64 = (0..nb)
                    .map(|j| self.regular[x * nb + j])
                    .zip(&psi_values)
                    .filter(|(w, _)| *w != 0.0)
                    .map(|(w, p)| p * w)
                    .sum();
                if slope_at_infinity != 0.0 {
                    regular + slope_at_infinity * self.singular[x]
                } else {
                    regular
                }
            })
            .collect()
    }

    /// Barycentric projection (`Ψ = id`).
    pub fn barycenter(&self) -> Vec<f64> {
        self.project(|l| l, 1.0)
    }

    /// `∫ (1 + λ) d|regular| + |singular|`.
    pub fn tv_norm(&self) -> f64 {
        let nb = self.bins.len();
        let reg: f64 = self
            .regular
            .iter()
            .enumerate()
            .map(|(i, w)| (1.0 + self.bins.value(i % nb)) * w.abs())
            .sum();
        reg + self.singular.iter().map(|s| s.abs()).sum::<f64>()
    }

    /// Truncates at a lower cap `m_new` on the same bin grid: mass above
    /// `m_new` moves to the top bin and its excess becomes singular.
    pub fn retruncate(&self, m_new: f64) -> Result<Self> {
        let bins = ValueBins::new(m_new, self.bins.width())?;
        if bins.last() > self.bins.last() {
            return invalid(format!("cannot raise the cap from {} to {m_new}", self.meta.m));
        }
        let (old_nb, nb) = (self.bins.len(), bins.len());
        let mut regular = vec![0.0; self.sites() * nb];
        let mut singular = self.singular.clone();
        for x in 0..self.sites() {
            for j in 0..old_nb {
                let w = self.regular[x * old_nb + j];
                if w == 0.0 {
                    continue;
                }
                if j < bins.last() {
                    regular[x * nb + j] += w;
                } else {
                    regular[x * nb + bins.last()] += w;
                    let lambda = self.bins.value(j);
                    if lambda > m_new {
                        singular[x] += (lambda - m_new) * w;
                    }
                }
            }
        }
        let mut meta = self.meta.clone();
        meta.m = m_new;
        Ok(Self { meta, bins, regular, singular })
    }

    /// Adds `weight × other`, for mixtures and time integrals.
    pub fn add_scaled(&mut self, other: &Self, weight: f64) -> Result<()> {
        if self.bins != other.bins || self.sites() != other.sites() {
            return invalid("Young measures on different grids");
        }
        for (a, b) in self.regular.iter_mut().zip(&other.regular) {
            *a += weight * b;
        }
        for (a, b) in self.singular.iter_mut().zip(&other.singular) {
            *a += weight * b;
        }
        Ok(())
    }

    pub fn scaled(&self, weight: f64) -> Self {
        let mut out = self.clone();
        out.regular.iter_mut().for_each(|w| *w *= weight);
        out.singular.iter_mut().for_each(|w| *w *= weight);
        out
    }

    /// CSV with `#` header lines (N, d, ℓ, M, Δλ), a regular table of the
    /// nonzero cells and a singular table of the nonzero singular masses.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let m = &self.meta;
        let _ = writeln!(s, "# young_measure");
        let _ = writeln!(s, "# N={}", m.side);
        let _ = writeln!(s, "# d={}", m.dim);
        let _ = writeln!(s, "# ell={}", m.ell);
        let _ = writeln!(s, "# M={}", m.m);
        let _ = writeln!(s, "# dlambda={}", m.dlambda);
        let _ = writeln!(s, "# section=regular");
        let _ = writeln!(s, "u_index,lambda_bin_index,mass");
        let nb = self.bins.len();
        for (i, &w) in self.regular.iter().enumerate() {
            if w != 0.0 {
                let _ = writeln!(s, "{},{},{}", i / nb, i % nb, w);
            }
        }
        let _ = writeln!(s, "# section=singular");
        let _ = writeln!(s, "u_index,mass");
        for (x, &w) in self.singular.iter().enumerate() {
            if w != 0.0 {
                let _ = writeln!(s, "{x},{w}");
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("young measure csv: {msg}"));
        let mut header = std::collections::HashMap::new();
        let mut section = "";
        let mut regular_rows = Vec::new();
        let mut singular_rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(sec) = rest.strip_prefix("section=") {
                    section = if sec == "regular" { "regular" } else { "singular" };
                } else if let Some((k, v)) = rest.split_once('=') {
                    header.insert(k.to_string(), v.to_string());
                }
                continue;
            }
            if line.starts_with("u_index") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let parse_err = |e: String| bad(format!("line {}: {e}", lineno + 1));
            match (section, fields.len()) {
                ("regular", 3) => regular_rows.push((
                    fields[0].parse::<usize>().map_err(|e| parse_err(e.to_string()))?,
                    fields[1].parse::<usize>().map_err(|e| parse_err(e.to_string()))?,
                    fields[2].parse::<f64>().map_err(|e| parse_err(e.to_string()))?,
                )),
                ("singular", 2) => singular_rows.push((
                    fields[0].parse::<usize>().map_err(|e| parse_err(e.to_string()))?,
                    fields[1].parse::<f64>().map_err(|e| parse_err(e.to_string()))?,
                )),
                _ => return Err(parse_err(format!("unexpected row `{line}`"))),
            }
        }
        let get = |k: &str| header.get(k).cloned().ok_or_else(|| bad(format!("missing header {k}")));
        let side: usize = get("N")?.parse().map_err(|_| bad("N".into()))?;
        let dim: usize = get("d")?.parse().map_err(|_| bad("d".into()))?;
        let ell: usize = get("ell")?.parse().map_err(|_| bad("ell".into()))?;
        let m: f64 = get("M")?.parse().map_err(|_| bad("M".into()))?;
        let dlambda: f64 = get("dlambda")?.parse().map_err(|_| bad("dlambda".into()))?;
        let bins = ValueBins::new(m, dlambda)?;
        let sites = side.pow(dim as u32);
        let mut regular = vec![0.0; sites * bins.len()];
        let mut singular = vec![0.0; sites];
        for (x, j, w) in regular_rows {
            if x >= sites || j >= bins.len() {
                return Err(bad(format!("cell ({x}, {j}) out of range")));
            }
            regular[x * bins.len() + j] = w;
        }
        for (x, w) in singular_rows {
            if x >= sites {
                return Err(bad(format!("site {x} out of range")));
            }
            singular[x] = w;
        }
        Ok(Self { meta: YoungMetadata { dim, side, ell, m, dlambda }, bins, regular, singular })
    }
}

/// Per-site integrand `F(x/N, λ(η^ℓ(x) ∧ M)) + F^∞(x/N)(η^ℓ(x) - M)^+` of
/// `⟨F, π^{N,ℓ}⟩`, for exact time integration along a trajectory.
///
/// The block value is quantized on the same bins as [`build_young`].
pub struct YoungIntegrand {
    f: TestFunction,
    recession: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
    ell: usize,
    bins: ValueBins,
    ball: Vec<[i32; 2]>,
}

impl YoungIntegrand {
    pub fn new(f: TestFunction, lattice: &Lattice, ell: usize, m: f64, dlambda: f64) -> Result<Self> {
        lattice.check_radius(ell)?;
        let recession = f.recession_fn().ok_or(Error::MissingRecession)?;
        Ok(Self { f, recession, ell, bins: ValueBins::new(m, dlambda)?, ball: lattice.ball_offsets(ell) })
    }
}

impl SiteFunctional for YoungIntegrand {
    fn radius(&self) -> usize {
        self.ell
    }

    fn eval(&mut self, config: &Configuration, lattice: &Lattice, site: usize) -> f64 {
        let sum: u64 = self.ball.iter().map(|&y| config.occ(lattice.shift(site, y)) as u64).sum();
        let v = sum as f64 / self.ball.len() as f64;
        let m = self.bins.cap();
        let u = lattice.position(site);
        let regular = self.f.eval(u, self.bins.value(self.bins.index(v.min(m))));
        if v > m {
            regular + (self.recession)(u) * (v - m)
        } else {
            regular
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::JumpRateSpec;

    fn config(occ: Vec<u32>, b: f64) -> Configuration {
        Configuration::new(Arc::new(JumpRateSpec::evans(b).unwrap()), occ).unwrap()
    }

    #[test]
    fn condensed_example() {
        let lat = Lattice::new(1, 4).unwrap();
        let ym = build_young(&config(vec![8, 0, 0, 0], 0.0), &lat, 0, 2.0, 0.05).unwrap();
        assert_eq!(ym.regular_mass(0, 40), 0.25);
        for x in 1..4 {
            assert_eq!(ym.regular_mass(x, 0), 0.25);
        }
        assert_eq!(ym.singular, vec![1.5, 0.0, 0.0, 0.0]);
        let f = TestFunction::asymptotically_linear(
            |u, l| (std::f64::consts::TAU * u[0]).cos() * l,
            |u| (std::f64::consts::TAU * u[0]).cos(),
        );
        assert_eq!(ym.pair(&f).unwrap(), 2.0);
        assert_eq!(ym.pair(&TestFunction::sublinear(|_, _| 1.0)).unwrap(), 1.0);
        let no_rf = TestFunction::new(|_, l| l, None, super::super::Growth::AsymptoticallyLinear);
        assert!(matches!(ym.pair(&no_rf), Err(Error::MissingRecession)));
    }

    #[test]
    fn empty_configuration_sits_in_first_bin() {
        let lat = Lattice::new(2, 4).unwrap();
        let ym = build_young(&config(vec![0; 16], 4.0), &lat, 1, 1.0, 0.05).unwrap();
        for x in 0..16 {
            assert_eq!(ym.regular_mass(x, 0), 1.0 / 16.0);
        }
        assert!(ym.singular.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn bins_validate() {
        assert!(ValueBins::new(1.0, 0.3).is_err());
        let b = ValueBins::new(2.0, 0.05).unwrap();
        assert_eq!(b.len(), 41);
        assert_eq!(b.value(b.index(1.0)), 1.0);
        assert_eq!(b.index(0.024), 0);
        assert_eq!(b.index(0.026), 1);
        assert_eq!(b.index(7.0), 40);
    }

    #[test]
    fn csv_round_trip() {
        let lat = Lattice::new(1, 6).unwrap();
        let ym = build_young(&config(vec![0, 3, 9, 1, 0, 2], 4.0), &lat, 1, 2.5, 0.05).unwrap();
        let back = GeneralizedYoungMeasure::from_csv(&ym.to_csv()).unwrap();
        assert_eq!(back, ym);
    }
}
