use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::profile::ThermoProfile;
use crate::error::Result;

/// Lattice offset of a supporting site; the second component is ignored in `d = 1`.
pub type Offset = [i32; 2];

pub type CylinderFn = Arc<dyn Fn(&[u32]) -> f64 + Send + Sync>;

/// Monte Carlo sample count for homologues without a closed form.
pub const HOMOLOGUE_SAMPLES: usize = 1_000_000;

#[derive(Clone)]
pub enum CylinderKind {
    /// `η(0)`
    Occupation,
    /// `g(η(0))`
    Rate,
    /// `1{η(0) >= m}`
    AtLeast(u32),
    /// Arbitrary map of the occupancies at `offsets`, listed in the same order.
    Custom {
        name: String,
        offsets: Vec<Offset>,
        eval: CylinderFn,
        slope_at_infinity: f64,
        seed: u64,
    },
}

/// A cylinder map `Ψ` together with what is needed for its extended homologue.
#[derive(Clone)]
pub struct CylinderObservable {
    kind: CylinderKind,
    offsets: Vec<Offset>,
}

impl fmt::Debug for CylinderObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylinderObservable")
            .field("name", &self.name())
            .field("offsets", &self.offsets)
            .finish()
    }
}

impl CylinderObservable {
    pub fn occupation() -> Self {
        Self { kind: CylinderKind::Occupation, offsets: vec![[0, 0]] }
    }

    pub fn rate() -> Self {
        Self { kind: CylinderKind::Rate, offsets: vec![[0, 0]] }
    }

    pub fn at_least(m: u32) -> Self {
        Self { kind: CylinderKind::AtLeast(m), offsets: vec![[0, 0]] }
    }

    pub fn custom(
        name: impl Into<String>,
        offsets: Vec<Offset>,
        slope_at_infinity: f64,
        seed: u64,
        eval: impl Fn(&[u32]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let offsets_kind = offsets.clone();
        Self {
            kind: CylinderKind::Custom {
                name: name.into(),
                offsets: offsets_kind,
                eval: Arc::new(eval),
                slope_at_infinity,
                seed,
            },
            offsets,
        }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            CylinderKind::Occupation => "occupation",
            CylinderKind::Rate => "rate",
            CylinderKind::AtLeast(_) => "at_least",
            CylinderKind::Custom { name, .. } => name,
        }
    }

    pub fn kind(&self) -> &CylinderKind {
        &self.kind
    }

    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    /// Sup-norm radius of the support.
    pub fn radius(&self) -> usize {
        self.offsets
            .iter()
            .map(|o| o[0].unsigned_abs().max(o[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// `⟨∇Ψ(∞), 1_J⟩`; zero for sublinear maps.
    pub fn slope_at_infinity(&self) -> f64 {
        match &self.kind {
            CylinderKind::Occupation => 1.0,
            CylinderKind::Rate | CylinderKind::AtLeast(_) => 0.0,
            CylinderKind::Custom { slope_at_infinity, .. } => *slope_at_infinity,
        }
    }

    pub fn is_sublinear(&self) -> bool {
        self.slope_at_infinity() == 0.0
    }

    /// Evaluates `Ψ` on the occupancies at the supporting sites (same order as `offsets`).
    pub fn eval(&self, window: &[u32], profile: &ThermoProfile) -> f64 {
        match &self.kind {
            CylinderKind::Occupation => window[0] as f64,
            CylinderKind::Rate => profile.spec().rate(window[0] as usize),
            CylinderKind::AtLeast(m) => (window[0] >= *m) as u8 as f64,
            CylinderKind::Custom { eval, .. } => eval(window),
        }
    }

    /// Grand-canonical homologue `Ψ̃(rho) = E_{ν_rho}[Ψ]` for `rho <= rho_c`.
    pub fn homologue(&self, profile: &ThermoProfile, rho: f64) -> Result<f64> {
        let phi = profile.mean_jump_rate(rho);
        match &self.kind {
            CylinderKind::Occupation => Ok(rho),
            CylinderKind::Rate => Ok(phi),
            CylinderKind::AtLeast(m) => {
                let law = profile.site_law(phi)?;
                let below: f64 = (0..*m as usize).map(|k| law.probability(k)).sum();
                Ok((1.0 - below).max(0.0))
            }
            CylinderKind::Custom { eval, offsets, seed, .. } => {
                let law = profile.site_law(phi)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut window = vec![0u32; offsets.len()];
                let mut acc = 0.0;
                for _ in 0..HOMOLOGUE_SAMPLES {
                    for slot in window.iter_mut() {
                        *slot = law.sample(&mut rng);
                    }
                    acc += eval(&window);
                }
                Ok(acc / HOMOLOGUE_SAMPLES as f64)
            }
        }
    }

    /// Extended homologue `Ψ̄(rho) = Ψ̃(rho ∧ rho_c) + slope·(rho - rho_c)^+`.
    pub fn extended_homologue(&self, profile: &ThermoProfile, rho: f64) -> Result<f64> {
        if let CylinderKind::Occupation = self.kind {
            return Ok(rho);
        }
        let rho_c = profile.rho_c();
        let base = self.homologue(profile, rho.min(rho_c))?;
        let excess = (rho - rho_c).max(0.0);
        Ok(if excess > 0.0 { base + self.slope_at_infinity() * excess } else { base })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::JumpRateSpec;

    fn evans(b: f64) -> ThermoProfile {
        ThermoProfile::new(Arc::new(JumpRateSpec::evans(b).unwrap())).unwrap()
    }

    #[test]
    fn extended_homologue_examples() {
        let p4 = evans(4.0);
        assert_eq!(CylinderObservable::rate().extended_homologue(&p4, 2.0).unwrap(), 1.0);
        assert_eq!(CylinderObservable::occupation().extended_homologue(&p4, 0.7).unwrap(), 0.7);
        // rho = 0: ν_0 is the empty configuration
        assert_eq!(CylinderObservable::rate().extended_homologue(&p4, 0.0).unwrap(), 0.0);
        assert_eq!(CylinderObservable::at_least(1).extended_homologue(&p4, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn at_least_matches_geometric() {
        // b = 0: ν̄_phi is geometric, P(η >= m) = phi^m.
        let p = evans(0.0);
        let h = CylinderObservable::at_least(3).homologue(&p, 1.0).unwrap();
        assert!((h - 0.125).abs() < 1e-12);
    }

    #[test]
    fn custom_homologue_by_monte_carlo() {
        // Ψ = η(0)η(1): product law gives rho^2.
        let p = evans(0.0);
        let obs = CylinderObservable::custom("pair", vec![[0, 0], [1, 0]], 0.0, 11, |w| {
            w[0] as f64 * w[1] as f64
        });
        assert_eq!(obs.radius(), 1);
        let h = obs.homologue(&p, 0.5).unwrap();
        // Var(η0 η1) = E[η²]² - ρ⁴ = (0.5 + 2·0.25)² - 0.0625 ≈ 0.94; s.e. ≈ 1e-3
        assert!((h - 0.25).abs() < 5e-3, "{h}");
    }
}
