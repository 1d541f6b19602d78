//! Batch execution of a configuration and report writing.

use crate::config::ExperimentConfig;
use crate::experiments::run_experiment;
use crate::report::{to_json, ExperimentOutcome, Verdict};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Report format version written into every manifest.
pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Overrides the configuration seed.
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: String,
    pub model: String,
    pub verdict: Verdict,
    pub message: Option<String>,
    pub report: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub experiments: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn failures(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.experiments.iter().filter(|e| !e.verdict.passed())
    }

    pub fn all_passed(&self) -> bool {
        self.failures().next().is_none()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot build thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("horolab-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("horolab-core".to_string(), horolab_core::VERSION.to_string()),
        ("report-format".to_string(), REPORT_FORMAT.to_string()),
    ])
}

/// Runs every experiment in order of the configuration, in a pool of `threads` workers.
pub fn execute(cfg: &ExperimentConfig, seed: u64, threads: Option<usize>) -> Result<(Vec<ExperimentOutcome>, usize), RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let n = pool.current_num_threads();
    let outcomes = pool.install(|| {
        cfg.experiments
            .par_iter()
            .enumerate()
            .map(|(i, e)| run_experiment(e, seed.wrapping_add(i as u64)))
            .collect()
    });
    Ok((outcomes, n))
}

/// Runs the configuration and writes `manifest.json`, one JSON report per
/// experiment and its CSV series into the output directory.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(RunManifest, Vec<ExperimentOutcome>), RunError> {
    let start = Instant::now();
    let seed = opts.seed.unwrap_or(cfg.seed);
    let (outcomes, threads) = execute(cfg, seed, opts.threads)?;
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let experiments = outcomes
        .iter()
        .map(|o| ManifestEntry {
            name: o.name.clone(),
            kind: o.kind.clone(),
            model: o.model.clone(),
            verdict: o.verdict,
            message: o.message.clone(),
            report: format!("{}.json", o.name),
        })
        .collect();
    let mut manifest = RunManifest {
        config_hash: cfg.hash(),
        versions: versions(),
        seed,
        threads,
        wall_time_seconds: 0.0,
        experiments,
    };
    write_reports(&dir, &outcomes, cfg.output.csv)?;
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    write_file(&dir.join("manifest.json"), &to_json(&manifest))?;
    Ok((manifest, outcomes))
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|source| RunError::Io { path: path.display().to_string(), source })
}

pub fn write_reports(dir: &Path, outcomes: &[ExperimentOutcome], csv: bool) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.display().to_string(), source })?;
    for o in outcomes {
        write_file(&dir.join(format!("{}.json", o.name)), &to_json(o))?;
        if csv {
            for s in &o.series {
                let path = dir.join(format!("{}.{}.csv", o.name, s.name));
                s.write_csv(&path).map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
            }
        }
    }
    Ok(())
}

/// Registry dump: every model kind with an example instance and the flags it claims.
pub fn model_registry() -> Vec<serde_json::Value> {
    use horolab_core::model::{registry, ModelSpec, RadialProfile};
    let example = |kind: &str| -> ModelSpec {
        match kind {
            "euclidean" => ModelSpec::Euclidean { dim: 2 },
            "hyperbolic_ball" => ModelSpec::HyperbolicBall { dim: 2 },
            "hyperbolic_halfspace" => ModelSpec::HyperbolicHalfspace { dim: 2 },
            "sphere2" => ModelSpec::Sphere2 { guard: None },
            "warped" => ModelSpec::Warped { dim: 2, profile: RadialProfile::Polynomial(vec![1.0, 1.0]) },
            _ => ModelSpec::Product { factors: vec![ModelSpec::HyperbolicBall { dim: 2 }, ModelSpec::HyperbolicBall { dim: 2 }] },
        }
    };
    registry::list_models()
        .into_iter()
        .map(|info| {
            let spec = example(info.kind);
            let built = spec.build();
            serde_json::json!({
                "kind": info.kind,
                "parameters": info.parameters,
                "description": info.description,
                "example": spec,
                "example_name": built.as_ref().map(|m| m.name().to_string()).unwrap_or_default(),
                "flags": built.map(|m| serde_json::to_value(m.flags()).unwrap_or_default()).unwrap_or_default(),
            })
        })
        .collect()
}
