//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ffgap_core::coarse::{absorption_precondition, layout_for, Interval};
use ffgap_core::layering::layer_lattice;
use ffgap_core::models::ModelSpec;
use ffgap_core::operator::Boundary;
use ffgap_core::spectral::SolverSettings;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub name: String,
    /// Root seed; every randomized check derives its stream from it.
    pub seed: u64,
    /// Model used by checks that do not name their own.
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// JSON report path.
    pub json: Option<PathBuf>,
    /// Directory for CSV tables and counterexample artifacts.
    pub csv_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    #[serde(default)]
    pub model: Option<ModelSpec>,
    /// Overrides whether the check affects the exit code.
    #[serde(default)]
    pub assert: Option<bool>,
    pub run: Verifier,
}

fn default_x_samples() -> usize {
    10_000
}

fn default_tol() -> f64 {
    1e-9
}

fn default_claim_samples() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verifier", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Verifier {
    /// Global spectrum; asserted only with `expect`.
    Gap {
        #[serde(default)]
        expect: Option<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// Minimum box gap; asserted only with `expect`.
    LocalGap {
        sides: Vec<usize>,
        #[serde(default)]
        expect: Option<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Layout {
        n: usize,
        t: usize,
        #[serde(default)]
        boundary: Boundary,
    },
    /// Every layout with `n <= n_max`, `t <= t_max` and both boundaries.
    LayoutScan { n_max: usize, t_max: usize },
    Detectability {},
    Converse { constant: u32 },
    JordanPairs { pairs: usize, max_dim: usize },
    BlockInequality {
        nu: f64,
        #[serde(default = "default_claim_samples")]
        samples: usize,
    },
    /// Passes when the block inequality visibly fails at `nu` near `|a| = 1`.
    BlockBoundary { nu: f64 },
    Chebyshev {
        #[serde(default = "default_x_samples")]
        x_samples: usize,
        #[serde(default)]
        grid: Option<Vec<(f64, f64)>>,
    },
    GapLink { t: Vec<usize> },
    Lightcone { t: Vec<usize> },
    /// Segments as `[first, last]` sites.
    Absorb {
        s: (usize, usize),
        #[serde(rename = "T")]
        t: (usize, usize),
        q: usize,
        probes: usize,
    },
    Theorem1 { t: Vec<usize> },
    Theorem2 { sides: Vec<usize> },
    Comparison { t: Vec<usize> },
    MinVsAverage { k: usize },
    /// Informational `gamma(t)` table.
    Sweep { t: Vec<usize> },
}

impl Verifier {
    pub fn name(&self) -> &'static str {
        match self {
            Verifier::Gap { .. } => "gap",
            Verifier::LocalGap { .. } => "local-gap",
            Verifier::Layout { .. } => "layout",
            Verifier::LayoutScan { .. } => "layout-scan",
            Verifier::Detectability {} => "detectability",
            Verifier::Converse { .. } => "converse",
            Verifier::JordanPairs { .. } => "jordan-pairs",
            Verifier::BlockInequality { .. } => "block-inequality",
            Verifier::BlockBoundary { .. } => "block-boundary",
            Verifier::Chebyshev { .. } => "chebyshev",
            Verifier::GapLink { .. } => "gap-link",
            Verifier::Lightcone { .. } => "lightcone",
            Verifier::Absorb { .. } => "absorb",
            Verifier::Theorem1 { .. } => "theorem1",
            Verifier::Theorem2 { .. } => "theorem2",
            Verifier::Comparison { .. } => "comparison",
            Verifier::MinVsAverage { .. } => "min-vs-average",
            Verifier::Sweep { .. } => "sweep",
        }
    }

    pub fn needs_model(&self) -> bool {
        !matches!(
            self,
            Verifier::Layout { .. }
                | Verifier::LayoutScan { .. }
                | Verifier::JordanPairs { .. }
                | Verifier::BlockInequality { .. }
                | Verifier::BlockBoundary { .. }
                | Verifier::Chebyshev { .. }
        )
    }

    pub fn randomized(&self) -> bool {
        matches!(
            self,
            Verifier::JordanPairs { .. } | Verifier::BlockInequality { .. } | Verifier::Absorb { .. }
        )
    }

    /// Whether a result counts toward the exit code by default.
    pub fn asserted_by_default(&self) -> bool {
        match self {
            Verifier::Gap { expect, .. } | Verifier::LocalGap { expect, .. } => expect.is_some(),
            Verifier::Sweep { .. } => false,
            _ => true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config does not match the schema: {0}")]
    Schema(#[from] toml::de::Error),
    #[error("check {index} ({verifier}): {message}")]
    Check {
        index: usize,
        verifier: &'static str,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn model_for<'a>(&'a self, check: &'a CheckSpec) -> Option<&'a ModelSpec> {
        check.model.as_ref().or(self.model.as_ref())
    }

    /// Static checks: version, models present and buildable, layouts that
    /// exist, parameter ranges.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Invalid(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            )));
        }
        if self.checks.is_empty() {
            return Err(ConfigError::Invalid("config declares no checks".into()));
        }
        for (index, check) in self.checks.iter().enumerate() {
            let fail = |message: String| ConfigError::Check {
                index,
                verifier: check.run.name(),
                message,
            };
            let lattice = match (check.run.needs_model(), self.model_for(check)) {
                (true, None) => return Err(fail("no model given".into())),
                (true, Some(m)) => Some(m.build().map_err(|e| fail(e.to_string()))?),
                (false, _) => None,
            };
            let chain = lattice.as_ref().and_then(|l| {
                (l.num_axes() == 1).then(|| (l.axis_lengths()[0], l.boundary()[0]))
            });
            let need_chain = || chain.ok_or_else(|| fail("verifier needs a one-axis model".into()));
            match &check.run {
                Verifier::Layout { n, t, boundary } => {
                    layout_for(*n, *t, *boundary).map_err(|e| fail(e.to_string()))?;
                }
                Verifier::GapLink { t } | Verifier::Lightcone { t } => {
                    let (n, b) = need_chain()?;
                    for &t in t {
                        layout_for(n, t, b).map_err(|e| fail(e.to_string()))?;
                    }
                }
                Verifier::Theorem1 { t } | Verifier::Comparison { t } | Verifier::Sweep { t } => {
                    let (n, _) = need_chain()?;
                    if let Some(bad) = t.iter().find(|&&t| t < 2 || t > n) {
                        return Err(fail(format!("window length {bad} outside 2..={n}")));
                    }
                }
                Verifier::MinVsAverage { k } => {
                    let (n, _) = need_chain()?;
                    if *k < 2 || *k > n {
                        return Err(fail(format!("window length {k} outside 2..={n}")));
                    }
                }
                Verifier::Absorb { s, t, q, .. } => {
                    let (n, b) = need_chain()?;
                    for &(first, last) in [s, t] {
                        let ok = (1..=n).contains(&first)
                            && (1..=n).contains(&last)
                            && (last >= first || b == Boundary::Periodic);
                        if !ok {
                            return Err(fail(format!("segment [{first}:{last}] does not fit the chain")));
                        }
                    }
                    let lattice = lattice.as_ref().expect("chain model");
                    let layers = layer_lattice(lattice).map_err(|e| fail(e.to_string()))?;
                    let overlap = interval(*s, n).overlap(&interval(*t, n), n);
                    absorption_precondition(layers.num_layers, overlap, *q)
                        .map_err(|e| fail(e.to_string()))?;
                }
                Verifier::LocalGap { sides, .. } | Verifier::Theorem2 { sides } => {
                    let axes = lattice.as_ref().map(|l| l.axis_lengths().to_vec()).unwrap_or_default();
                    if sides.len() != axes.len() || sides.iter().zip(&axes).any(|(s, a)| *s < 1 || s > a) {
                        return Err(fail(format!("sides {sides:?} do not fit the lattice {axes:?}")));
                    }
                }
                Verifier::Converse { constant } if !matches!(constant, 3 | 4) => {
                    return Err(fail(format!("constant must be 3 or 4, got {constant}")));
                }
                Verifier::BlockInequality { nu, .. } | Verifier::BlockBoundary { nu }
                    if !(0.0..1.0).contains(nu) =>
                {
                    return Err(fail(format!("nu must lie in [0, 1), got {nu}")));
                }
                Verifier::JordanPairs { max_dim, .. } if *max_dim < 2 => {
                    return Err(fail("max_dim must be at least 2".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl CheckSpec {
    pub fn asserted(&self) -> bool {
        self.assert.unwrap_or_else(|| self.run.asserted_by_default())
    }
}

/// Segment given by its first and last site.
pub fn interval((first, last): (usize, usize), n: usize) -> Interval {
    Interval::from_ends(first, last, n)
}

pub const BUNDLED: &[&str] = &["verify-all-small"];

/// Text of a bundled configuration.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "verify-all-small" => Some(include_str!("../configs/verify-all-small.toml")),
        _ => None,
    }
}
