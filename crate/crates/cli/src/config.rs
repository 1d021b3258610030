//! Flat JSON configuration files with flag overrides (flags win).

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Kahler,
    Brackets,
    Fisher,
    Madelung,
    Weyl,
    All,
}

impl SuiteName {
    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteName::Kahler => "kahler",
            SuiteName::Brackets => "brackets",
            SuiteName::Fisher => "fisher",
            SuiteName::Madelung => "madelung",
            SuiteName::Weyl => "weyl",
            SuiteName::All => "all",
        }
    }

    pub fn parse(s: &str) -> anyhow::Result<Self> {
        match s {
            "kahler" => Ok(SuiteName::Kahler),
            "brackets" => Ok(SuiteName::Brackets),
            "fisher" => Ok(SuiteName::Fisher),
            "madelung" => Ok(SuiteName::Madelung),
            "weyl" => Ok(SuiteName::Weyl),
            "all" => Ok(SuiteName::All),
            other => bail!("unknown suite '{other}' (kahler|brackets|fisher|madelung|weyl|all)"),
        }
    }
}

/// Verification-suite configuration. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub suite: SuiteName,
    /// Hilbert dimension for the state-space suites.
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    /// Nodes per axis for the grid-based suites.
    pub grid_nodes: usize,
    pub hbar: f64,
    pub mass: f64,
    /// Per-check tolerance overrides by check name.
    pub tolerances: BTreeMap<String, f64>,
    /// Report output path (stdout summary is always printed).
    pub out: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suite: SuiteName::All,
            dim: 4,
            trials: 200,
            seed: 42,
            grid_nodes: 1024,
            hbar: 1.0,
            mass: 1.0,
            tolerances: BTreeMap::new(),
            out: None,
        }
    }
}

impl SuiteConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: SuiteConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.trials < 1 {
            bail!("trials must be at least 1");
        }
        if self.dim < 2 {
            bail!("dim must be at least 2");
        }
        if self.grid_nodes < 64 {
            bail!("grid_nodes must be at least 64");
        }
        if !(self.hbar > 0.0) || !(self.mass > 0.0) {
            bail!("hbar and mass must be positive");
        }
        for (k, v) in &self.tolerances {
            if !(*v > 0.0) {
                bail!("tolerance '{k}' must be positive, got {v}");
            }
        }
        Ok(())
    }
}

/// Parses a `NAME=VALUE` tolerance flag.
pub fn parse_tol(s: &str) -> anyhow::Result<(String, f64)> {
    let (name, value) = s
        .split_once('=')
        .with_context(|| format!("--tol expects NAME=VALUE, got '{s}'"))?;
    let v: f64 = value
        .parse()
        .with_context(|| format!("bad tolerance value in '{s}'"))?;
    if !(v > 0.0) {
        bail!("tolerance '{name}' must be positive");
    }
    Ok((name.to_string(), v))
}

/// Evolution-run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub scheme: qgeo_core::Scheme,
    pub grid: EvolveGrid,
    pub initial: InitialState,
    #[serde(default)]
    pub potential: Potential,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    pub out: PathBuf,
}

fn one() -> f64 {
    1.0
}

fn default_snapshot_every() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveGrid {
    pub nodes: usize,
    pub min: f64,
    pub max: f64,
    pub boundary: qgeo_core::Boundary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// `exp(i k0 x) exp(-(x-center)^2 / 4 sigma^2)`, normalized
    Gaussian { sigma: f64, center: f64, k0: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    #[default]
    Free,
    Harmonic {
        omega: f64,
    },
}

impl EvolveConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: EvolveConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.steps == 0 && cfg.snapshot_every == 0 {
            bail!("snapshot_every must be positive");
        }
        if !(cfg.dt > 0.0) {
            bail!("dt must be positive");
        }
        if cfg.grid.nodes < 64 {
            bail!("grid.nodes must be at least 64");
        }
        if !(cfg.grid.max > cfg.grid.min) {
            bail!("grid.max must exceed grid.min");
        }
        Ok(cfg)
    }
}

/// Identity-report configuration: a built-in density family or a CSV field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub density: DensityInput,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityInput {
    Gaussian { dim: usize, sigma: f64, nodes: usize, halfwidth: f64 },
    Mixture { dim: usize, separation: f64, nodes: usize, halfwidth: f64 },
    Uniform { dim: usize, nodes: usize, halfwidth: f64 },
    Csv { csv: PathBuf, header: PathBuf },
}

impl ReportConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Ok(serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?)
    }
}
