//! Experiment configuration files (TOML) and their validation.

use horolab_core::model::ModelSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(rename = "experiment", default)]
    pub experiments: Vec<ExperimentEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Also write tabular series as CSV files.
    #[serde(default = "yes")]
    pub csv: bool,
}

fn default_dir() -> String {
    "horolab-out".into()
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), csv: true }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Geodesic,
    Jacobi,
    FocalScan,
    Busemann,
    ConvexityCert,
    RadialConstants,
    Spectral,
    EssentialRange,
    RankChecks,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Geodesic => "geodesic",
            ExperimentKind::Jacobi => "jacobi",
            ExperimentKind::FocalScan => "focal-scan",
            ExperimentKind::Busemann => "busemann",
            ExperimentKind::ConvexityCert => "convexity-cert",
            ExperimentKind::RadialConstants => "radial-constants",
            ExperimentKind::Spectral => "spectral",
            ExperimentKind::EssentialRange => "essential-range",
            ExperimentKind::RankChecks => "rank-checks",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentEntry {
    pub name: String,
    pub kind: ExperimentKind,
    pub model: ModelSpec,
    /// Kind-specific parameters; omitted fields take their defaults.
    #[serde(default)]
    pub params: toml::Table,
}

/// A problem found in a configuration, located by its field path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Schema(Diagnostic),
    #[error("{} invalid field(s): {}", .0.len(), .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

/// Collects diagnostics under a path prefix.
pub struct Checker<'a> {
    prefix: String,
    out: &'a mut Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    pub fn new(prefix: impl Into<String>, out: &'a mut Vec<Diagnostic>) -> Self {
        Checker { prefix: prefix.into(), out }
    }

    fn push(&mut self, field: &str, message: String) {
        self.out.push(Diagnostic { path: format!("{}.{field}", self.prefix), message });
    }

    pub fn positive(&mut self, field: &str, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.push(field, format!("must be positive and finite, got {x}"));
        }
    }

    pub fn nonnegative(&mut self, field: &str, x: f64) {
        if !(x >= 0.0 && x.is_finite()) {
            self.push(field, format!("must be nonnegative and finite, got {x}"));
        }
    }

    pub fn at_least(&mut self, field: &str, x: usize, min: usize) {
        if x < min {
            self.push(field, format!("must be at least {min}, got {x}"));
        }
    }

    pub fn all_positive(&mut self, field: &str, xs: &[f64]) {
        for (i, x) in xs.iter().enumerate() {
            if !(*x > 0.0 && x.is_finite()) {
                self.push(&format!("{field}[{i}]"), format!("must be positive and finite, got {x}"));
            }
        }
    }

    pub fn increasing(&mut self, field: &str, xs: &[f64]) {
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            self.push(field, "must be strictly increasing".into());
        }
    }

    pub fn require(&mut self, field: &str, ok: bool, message: &str) {
        if !ok {
            self.push(field, message.into());
        }
    }
}

/// Parameters of one experiment kind.
pub trait Params: DeserializeOwned + Serialize + Default {
    fn check(&self, c: &mut Checker<'_>);
}

/// Deserialises `params` with field-path errors and checks value ranges.
pub fn parse_params<P: Params>(table: &toml::Table, prefix: &str) -> Result<P, Vec<Diagnostic>> {
    let value = toml::Value::Table(table.clone());
    let p: P = serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { prefix.to_string() } else { format!("{prefix}.{inner}") };
        vec![Diagnostic { path, message: e.into_inner().to_string().trim().to_string() }]
    })?;
    let mut out = Vec::new();
    p.check(&mut Checker::new(prefix, &mut out));
    if out.is_empty() {
        Ok(p)
    } else {
        Err(out)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| ConfigError::Schema(Diagnostic { path: ".".into(), message: e.message().trim().to_string() }))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Schema(Diagnostic { path, message: e.into_inner().message().trim().to_string() })
        })?;
        let diags = cfg.validate();
        if diags.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(diags))
        }
    }

    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    /// Every problem found: duplicate names, unbuildable models and invalid
    /// parameters.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.experiments.is_empty() {
            out.push(Diagnostic { path: "experiment".into(), message: "no experiments configured".into() });
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, e) in self.experiments.iter().enumerate() {
            let prefix = format!("experiment[{i}]");
            if e.name.is_empty() || e.name.contains(['/', '\\']) {
                out.push(Diagnostic { path: format!("{prefix}.name"), message: "must be a nonempty file-safe name".into() });
            }
            if !seen.insert(e.name.clone()) {
                out.push(Diagnostic { path: format!("{prefix}.name"), message: format!("duplicate experiment name {:?}", e.name) });
            }
            if let Err(err) = e.model.build() {
                out.push(Diagnostic { path: format!("{prefix}.model"), message: err.to_string() });
            }
            if let Err(d) = crate::experiments::check_params(e.kind, &e.params, &format!("{prefix}.params")) {
                out.extend(d);
            }
        }
        out
    }

    /// Hex SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canon = serde_json::to_vec(self).expect("configuration serialises");
        Sha256::digest(&canon).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Configuration exercising every experiment kind at small sizes.
pub const DEFAULT_CONFIG: &str = r#"seed = 1

[output]
dir = "horolab-out"

[[experiment]]
name = "flat-geodesic"
kind = "geodesic"
model = { kind = "euclidean", dim = 2 }

[[experiment]]
name = "h2-jacobi"
kind = "jacobi"
model = { kind = "hyperbolic_ball", dim = 2 }

[[experiment]]
name = "flat-focal"
kind = "focal-scan"
model = { kind = "euclidean", dim = 2 }

[[experiment]]
name = "h2-busemann"
kind = "busemann"
model = { kind = "hyperbolic_ball", dim = 2 }
params = { points = 10 }

[[experiment]]
name = "h2-exhaustion"
kind = "convexity-cert"
model = { kind = "hyperbolic_ball", dim = 2 }
params = { function = "exhaustion_f", points = 20, margin = 0.0 }

[[experiment]]
name = "flat-radial"
kind = "radial-constants"
model = { kind = "euclidean", dim = 3 }

[[experiment]]
name = "h2-spectral"
kind = "spectral"
model = { kind = "hyperbolic_ball", dim = 2 }
params = { directions = 8, points = 4 }

[[experiment]]
name = "h3-essential"
kind = "essential-range"
model = { kind = "hyperbolic_ball", dim = 3 }

[[experiment]]
name = "h2xh2-rank"
kind = "rank-checks"
model = { kind = "product", factors = [{ kind = "hyperbolic_ball", dim = 2 }, { kind = "hyperbolic_ball", dim = 2 }] }
params = { polar = 2, first = 2, second = 1 }
"#;
