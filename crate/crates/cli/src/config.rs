//! Versioned JSON experiment configuration.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use acstab_core::green::EtaLadder;
use acstab_core::pool::PoolParams;
use acstab_core::qgraph::QgPoolParams;
use acstab_core::stats::linspace;
use acstab_core::tree::{Correlation, DisorderFamily, DisorderSpec, PotentialSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Marker of the embedded config line in CSV headers.
pub const HEADER_CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Tree,
    Qgraph,
    Scattering,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub model: Model,
    #[serde(default)]
    pub tree: TreeSection,
    #[serde(default)]
    pub qgraph: QGraphSection,
    #[serde(default)]
    pub scattering: ScatteringSection,
    pub grid: GridSection,
    #[serde(default)]
    pub pool: PoolParams,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeSection {
    pub branching: usize,
    pub family: DisorderFamily,
    pub correlation: Correlation,
    /// Declared weak-correlation constant; iid fields always use 1.
    pub kappa: f64,
    pub potential: PotentialSpec,
    /// Root sampler strategy name.
    pub sampler: String,
    pub depth: usize,
    pub realizations: usize,
}

impl Default for TreeSection {
    fn default() -> Self {
        Self {
            branching: 2,
            family: DisorderFamily::Uniform,
            correlation: Correlation::Iid,
            kappa: 1.0,
            potential: PotentialSpec::Zero,
            sampler: "pool".into(),
            depth: 10,
            realizations: 100,
        }
    }
}

impl TreeSection {
    pub fn disorder(&self, lambda: f64) -> DisorderSpec {
        DisorderSpec {
            family: self.family,
            strength: lambda,
            correlation: self.correlation,
            kappa: self.kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QGraphSection {
    pub branching: usize,
    pub length: f64,
    pub alpha_root: f64,
    pub family: DisorderFamily,
    pub bands: usize,
    /// Threshold on the median `Im m_α` for the ac measure.
    pub threshold: f64,
    pub pool: QgPoolParams,
    pub scan_points: usize,
    pub scan_eta: f64,
    pub scan_threshold: f64,
}

impl Default for QGraphSection {
    fn default() -> Self {
        Self {
            branching: 2,
            length: 1.0,
            alpha_root: 0.0,
            family: DisorderFamily::Uniform,
            bands: 3,
            threshold: 1e-2,
            pool: QgPoolParams::default(),
            scan_points: 600,
            scan_eta: 1e-10,
            scan_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringSection {
    pub k: f64,
    pub t: f64,
    /// Threshold on `Im Γ₀` for disordered rows; clean rows at `η = 0` use 0.
    pub threshold: f64,
}

impl Default for ScatteringSection {
    fn default() -> Self {
        Self {
            k: FRAC_PI_2,
            t: 1.0,
            threshold: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub energy_min: f64,
    pub energy_max: f64,
    pub points: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// When present, each point walks this ladder instead of using `eta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_ladder: Option<EtaLadder>,
    pub lambdas: Vec<f64>,
}

fn default_eta() -> f64 {
    1e-3
}

impl GridSection {
    pub fn energies(&self) -> Vec<f64> {
        linspace(self.energy_min, self.energy_max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub checks: Vec<String>,
    pub alpha: f64,
    /// Tuples drawn from each pool for the Jensen and log-current checks.
    pub tuples: usize,
    /// Tree depth for the current-deficit check.
    pub depth: usize,
    pub eta_values: Vec<f64>,
    /// Random cases for the identity checks.
    pub cases: usize,
    /// Depth of the radial identity check.
    pub radial_depth: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            checks: Vec::new(),
            alpha: 0.25,
            tuples: 20_000,
            depth: 8,
            eta_values: vec![1e-2, 1e-3, 1e-4],
            cases: 100,
            radial_depth: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// File name stem; defaults to the experiment name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
    pub svg: bool,
    pub width: u32,
    pub height: u32,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            prefix: None,
            svg: true,
            width: 800,
            height: 500,
        }
    }
}

fn check(cond: bool, field: &str, message: impl FnOnce() -> String) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::config(field, message()))
    }
}

fn positive(x: f64, field: &str) -> CliResult<()> {
    check(x > 0.0 && x.is_finite(), field, || format!("must be positive and finite, got {x}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a JSON config, or the config embedded in an output file's header.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        if text.starts_with('#') {
            let line = text
                .lines()
                .take_while(|l| l.starts_with('#'))
                .find_map(|l| l.strip_prefix(HEADER_CONFIG_PREFIX))
                .ok_or_else(|| CliError::config("<header>", "no embedded config line"))?;
            Self::from_json(line)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn stem(&self) -> &str {
        self.output.prefix.as_deref().unwrap_or(&self.experiment)
    }

    pub fn validate(&self) -> CliResult<()> {
        check(self.schema_version == SCHEMA_VERSION, "schema_version", || {
            format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version)
        })?;
        check(
            !self.experiment.is_empty()
                && self
                    .experiment
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'),
            "experiment",
            || "must be a non-empty name of [A-Za-z0-9_-]".into(),
        )?;

        let g = &self.grid;
        check(g.energy_min.is_finite() && g.energy_max.is_finite(), "grid.energy_min", || {
            "energy range must be finite".into()
        })?;
        check(g.energy_max >= g.energy_min, "grid.energy_max", || {
            format!("must be at least energy_min ({})", g.energy_min)
        })?;
        check(g.points >= 1, "grid.points", || "at least one grid point".into())?;
        check(g.eta >= 0.0 && g.eta.is_finite(), "grid.eta", || format!("must be non-negative, got {}", g.eta))?;
        if let Some(l) = &g.eta_ladder {
            l.validate().map_err(|e| CliError::config("grid.eta_ladder", e.to_string()))?;
        }
        check(!g.lambdas.is_empty(), "grid.lambdas", || "λ list is empty".into())?;
        for (i, l) in g.lambdas.iter().enumerate() {
            check(l.is_finite() && *l >= 0.0, &format!("grid.lambdas[{i}]"), || {
                format!("must be finite and non-negative, got {l}")
            })?;
        }

        let t = &self.tree;
        check(t.branching >= 2, "tree.branching", || format!("must be at least 2, got {}", t.branching))?;
        t.family
            .validate()
            .map_err(|e| CliError::config("tree.family", e.to_string()))?;
        check(t.kappa > 0.0 && t.kappa <= 1.0, "tree.kappa", || format!("must lie in (0, 1], got {}", t.kappa))?;
        t.potential
            .validate()
            .map_err(|e| CliError::config("tree.potential", e.to_string()))?;
        check(t.realizations >= 1, "tree.realizations", || "at least one realization".into())?;

        let q = &self.qgraph;
        check(q.branching >= 2, "qgraph.branching", || format!("must be at least 2, got {}", q.branching))?;
        positive(q.length, "qgraph.length")?;
        check((0.0..std::f64::consts::PI).contains(&q.alpha_root), "qgraph.alpha_root", || {
            format!("must lie in [0, π), got {}", q.alpha_root)
        })?;
        q.family
            .validate()
            .map_err(|e| CliError::config("qgraph.family", e.to_string()))?;
        check(q.bands >= 1, "qgraph.bands", || "at least one band".into())?;
        positive(q.threshold, "qgraph.threshold")?;
        q.pool
            .validate()
            .map_err(|e| CliError::config("qgraph.pool", e.to_string()))?;
        check(q.scan_points >= 2, "qgraph.scan_points", || "at least two scan points".into())?;
        check(q.scan_eta >= 0.0, "qgraph.scan_eta", || "must be non-negative".into())?;
        positive(q.scan_threshold, "qgraph.scan_threshold")?;

        let s = &self.scattering;
        check(s.k > 0.0 && s.k < std::f64::consts::PI, "scattering.k", || {
            format!("must lie in (0, π), got {}", s.k)
        })?;
        check(s.t != 0.0 && s.t.is_finite(), "scattering.t", || "coupling must be finite and non-zero".into())?;
        check(s.threshold >= 0.0, "scattering.threshold", || "must be non-negative".into())?;

        let v = &self.verify;
        check(v.alpha > 0.0 && v.alpha <= 0.5, "verify.alpha", || format!("must lie in (0, 1/2], got {}", v.alpha))?;
        check(v.tuples >= 1, "verify.tuples", || "at least one tuple".into())?;
        check(v.depth >= 1, "verify.depth", || "depth must be at least 1".into())?;
        for (i, e) in v.eta_values.iter().enumerate() {
            positive(*e, &format!("verify.eta_values[{i}]"))?;
        }
        check(v.cases >= 1, "verify.cases", || "at least one case".into())?;
        check(v.radial_depth >= 1, "verify.radial_depth", || "depth must be at least 1".into())?;

        check(!self.output.dir.is_empty(), "output.dir", || "empty output directory".into())?;
        check(self.output.width >= 50 && self.output.height >= 50, "output.width", || {
            "SVG must be at least 50×50".into()
        })?;
        Ok(())
    }

    /// The model section a command needs.
    pub fn require_model(&self, model: Model, command: &str) -> CliResult<()> {
        check(self.model == model, "model", || {
            format!("`{command}` needs model {model:?}, config has {:?}", self.model)
        })
    }

    /// `grid.eta`, which must be positive for Monte Carlo commands.
    pub fn positive_eta(&self) -> CliResult<f64> {
        positive(self.grid.eta, "grid.eta")?;
        Ok(self.grid.eta)
    }

    /// Config with `seed` replaced when given on the command line.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    /// Core pool parameters, validated with the field path.
    pub fn pool_params(&self) -> CliResult<PoolParams> {
        self.pool
            .validate()
            .map_err(|e| CliError::config("pool.size", e.to_string()))?;
        Ok(self.pool)
    }
}
