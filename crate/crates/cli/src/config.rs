//! Experiment configuration (TOML). Every section rejects unknown keys.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use zrp_core::ensembles::InitialCondition;
use zrp_core::sim::Lattice;
use zrp_core::thermo::{CylinderObservable, JumpRateSpec, RateFamily, ThermoProfile, DEFAULT_K_MAX};

use crate::CliError;

/// Environment variable overriding the output directory (below `--out`).
pub const OUT_ENV: &str = "ZRP_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default = "default_initial")]
    pub initial: InitialCondition,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub observables: ObservableConfig,
    #[serde(default)]
    pub stats: StatsConfig,
}

fn default_initial() -> InitialCondition {
    InitialCondition::GrandCanonical { density: 0.5 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Evans,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    /// Evans parameter `b` in `g(k) = 1 + b/k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Custom rates `g(1), g(2), …`; the last value is held constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    /// Largest occupancy the rate tables cover.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_k_max() -> usize {
    DEFAULT_K_MAX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub d: usize,
    pub n: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { d: 1, n: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Number of equally spaced sample times in `(0, T]`.
    pub samples: usize,
    pub out: PathBuf,
    /// Worker threads; 0 means the available parallelism.
    pub threads: usize,
    pub event_budget: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 0.05,
            replicas: 50,
            seed: 20261018,
            samples: 10,
            out: PathBuf::from("out"),
            threads: 0,
            event_budget: zrp_core::sim::DEFAULT_EVENT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableConfig {
    pub fields: bool,
    pub young: bool,
    pub checkpoint: bool,
}

impl Default for ObservableConfig {
    fn default() -> Self {
        Self { fields: true, young: false, checkpoint: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cylinder {
    Occupation,
    Rate,
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldShape {
    One,
    Cos2pi,
    Sin2pi,
    Cos4pi,
    Sin4pi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub ell: usize,
    pub eps: f64,
    /// Truncation level `M` (Young measures, double-block).
    pub m: f64,
    /// Cut-off level `A`.
    pub a: f64,
    pub dlambda: f64,
    pub cylinder: Cylinder,
    /// Threshold for `Cylinder::AtLeast`.
    pub at_least: u32,
    pub field: FieldShape,
    /// Density and sizes for the canonical table.
    pub rho: f64,
    pub sizes: Vec<usize>,
    /// PDE grid side and CFL safety factor.
    pub grid: usize,
    pub safety: f64,
    pub tolerance: f64,
    /// `φ` grid points for the thermo table; the `Φ̄` table runs up to `rho_max`.
    pub thermo_points: usize,
    pub rho_max: f64,
    /// Extra fugacities appended to the thermo table; a divergent one is an error.
    pub fugacities: Vec<f64>,
    /// Draws for `sample-canonical`.
    pub canonical_samples: usize,
    /// Exit 5 when a verdict fails.
    pub assert: bool,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            ell: 2,
            eps: 0.0625,
            m: 4.0,
            a: 2.0,
            dlambda: 0.05,
            cylinder: Cylinder::Rate,
            at_least: 1,
            field: FieldShape::Cos2pi,
            rho: 1.0,
            sizes: vec![50, 100, 200, 400],
            grid: 512,
            safety: 0.9,
            tolerance: 0.05,
            thermo_points: 100,
            rho_max: 5.0,
            fugacities: Vec::new(),
            canonical_samples: 1000,
            assert: true,
        }
    }
}

/// Command-line overrides. `out` beats `ZRP_OUT`, which beats the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub out: Option<PathBuf>,
    pub env_out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(seed) = o.seed {
            self.run.seed = seed;
        }
        if let Some(r) = o.replicas {
            self.run.replicas = r;
        }
        if let Some(out) = o.out.as_ref().or(o.env_out.as_ref()) {
            self.run.out = out.clone();
        }
        self.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        match self.model.family {
            Family::Evans if self.model.b.is_none() => return bad("model.b is required for the evans family".into()),
            Family::Table if self.model.rates.is_none() => {
                return bad("model.rates is required for the table family".into())
            }
            _ => {}
        }
        if !(self.run.horizon.is_finite() && self.run.horizon >= 0.0) {
            return bad(format!("run.horizon must be finite and >= 0, got {}", self.run.horizon));
        }
        if self.run.replicas == 0 {
            return bad("run.replicas must be at least 1".into());
        }
        if self.run.samples == 0 {
            return bad("run.samples must be at least 1".into());
        }
        if !(self.stats.eps > 0.0 && self.stats.eps < 1.0) {
            return bad(format!("stats.eps must lie in (0, 1), got {}", self.stats.eps));
        }
        if self.stats.thermo_points < 2 {
            return bad("stats.thermo_points must be at least 2".into());
        }
        Lattice::new(self.lattice.d, self.lattice.n).map_err(CliError::from)?;
        Ok(())
    }

    pub fn spec(&self) -> Result<Arc<JumpRateSpec>, CliError> {
        let family = match self.model.family {
            Family::Evans => RateFamily::Evans { b: self.model.b.unwrap_or_default() },
            Family::Table => RateFamily::Table { rates: self.model.rates.clone().unwrap_or_default() },
        };
        Ok(Arc::new(JumpRateSpec::with_capacity(family, self.model.k_max)?))
    }

    pub fn profile(&self) -> Result<ThermoProfile, CliError> {
        Ok(ThermoProfile::new(self.spec()?)?)
    }

    pub fn lattice(&self) -> Result<Arc<Lattice>, CliError> {
        Ok(Arc::new(Lattice::new(self.lattice.d, self.lattice.n)?))
    }

    pub fn cylinder(&self) -> CylinderObservable {
        match self.stats.cylinder {
            Cylinder::Occupation => CylinderObservable::occupation(),
            Cylinder::Rate => CylinderObservable::rate(),
            Cylinder::AtLeast => CylinderObservable::at_least(self.stats.at_least),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nfamily = \"evans\"\nb = 4.0\n";

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.lattice, LatticeConfig::default());
        assert_eq!(cfg.run.replicas, 50);
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            format!("{MINIMAL}colour = 1\n"),
            format!("{MINIMAL}[run]\nhorizon = 1.0\nreplica = 3\n"),
            format!("{MINIMAL}[initial]\nkind = \"grand_canonical\"\ndensity = 0.5\nextra = 2\n"),
            format!("{MINIMAL}[initial]\nkind = \"product\"\n[initial.profile]\nshape = \"sine\"\nmean = 0.5\namplitude = 0.3\nmode = 1\nphase = 0\n"),
        ] {
            assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn empty_model_is_an_error() {
        assert!(matches!(ExperimentConfig::parse("[model]\n"), Err(CliError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("[model]\nfamily = \"evans\"\n"), Err(CliError::Config(_))));
        assert!(matches!(ExperimentConfig::parse(""), Err(CliError::Config(_))));
    }

    #[test]
    fn flag_beats_environment_beats_file() {
        let mut cfg = ExperimentConfig::parse(&format!("{MINIMAL}[run]\nout = \"from_file\"\n")).unwrap();
        let mut o = Overrides { env_out: Some("from_env".into()), ..Default::default() };
        cfg.apply(&o).unwrap();
        assert_eq!(cfg.run.out, PathBuf::from("from_env"));
        o.out = Some("from_flag".into());
        cfg.apply(&o).unwrap();
        assert_eq!(cfg.run.out, PathBuf::from("from_flag"));
    }
}
