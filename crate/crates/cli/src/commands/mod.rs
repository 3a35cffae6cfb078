pub mod calibrate;
pub mod eval;
pub mod finetune;
pub mod sweep;
pub mod train;

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use pulseforge::baselines::{BaselineConfig, Scheme};
use pulseforge::gym::EnvConfig;
use pulseforge::qutrit::SystemParams;

use crate::config::{self, StrictMiss};

/// Shared command-line settings.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub resume: bool,
    pub strict: bool,
}

/// The whole config file: one optional table per command.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    calibrate: Option<calibrate::CalibrateConfig>,
    sweep: Option<sweep::SweepConfig>,
    train: Option<train::TrainConfig>,
    eval: Option<eval::EvalConfig>,
    finetune: Option<finetune::FinetuneConfig>,
}

impl Ctx {
    fn file(&self) -> Result<FileConfig> {
        match &self.config_path {
            Some(p) => config::load(p),
            None => Ok(FileConfig::default()),
        }
    }

    /// Resolves a path from the config file against the file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.config_path {
            Some(c) => config::relative_to(c, p),
            None => p.to_path_buf(),
        }
    }

    pub fn seed_or(&self, configured: u64) -> u64 {
        self.seed.unwrap_or(configured)
    }

    /// Fails under `--strict`, warns otherwise.
    pub fn check(&self, ok: bool, what: impl Into<String>) -> Result<()> {
        if ok {
            return Ok(());
        }
        let what = what.into();
        if self.strict {
            return Err(StrictMiss(what).into());
        }
        log::warn!("{what}");
        eprintln!("warning: {what}");
        Ok(())
    }
}

/// Device parameters: Valencia with the given fields replaced.
pub fn system(patch: Option<&serde_json::Value>) -> Result<SystemParams> {
    let p = config::overlay(&SystemParams::valencia(), patch, "system")?;
    p.validate(Default::default()).map_err(|e| config::ConfigError(e.to_string()))?;
    Ok(p)
}

/// A preset with optional field overrides, validated.
pub fn environment(preset: &str, overrides: Option<&serde_json::Value>) -> Result<EnvConfig> {
    let base = EnvConfig::preset(preset)?;
    let env: EnvConfig = config::overlay(&base, overrides, "env_overrides")?;
    env.validate()?;
    Ok(env)
}

#[derive(Serialize)]
struct PresetRow {
    name: &'static str,
    target: String,
    duration_ns: f64,
    segments: usize,
    drives: Vec<&'static str>,
    windows: Vec<f64>,
}

pub fn presets() -> Result<()> {
    let names = [
        "ix90",
        "zx90@248.9",
        "cnot@248.9",
        "cnot@177.7",
        "zx90-3drive@177.8",
        "cnot-drift-detuning",
        "cnot-drift-all",
        "cnot-drift-all+context",
    ];
    println!("environment presets (train.env, eval.env, finetune.env):");
    for name in names {
        let e = EnvConfig::preset(name)?;
        let row = PresetRow {
            name,
            target: e.target.name().into(),
            duration_ns: e.duration_ns,
            segments: e.segments,
            drives: e.drives.channels().iter().map(|c| c.name()).collect(),
            windows: vec![e.window_u, e.window_d],
        };
        println!("  {}", serde_json::to_string(&row)?);
    }
    println!("  toy  (one-dimensional reference problem, train only)");
    println!("\ncalibration defaults:");
    for scheme in [Scheme::Drag, Scheme::Echoed, Scheme::Direct] {
        let c = BaselineConfig::for_scheme(scheme);
        println!(
            "  {scheme}: duration {:.1} ns, threshold {}, drag sigma {} ticks, flank sigma {} ticks",
            calibrate::default_duration_ns(scheme),
            calibrate::default_threshold(scheme),
            c.drag_sigma_ticks,
            c.cr_sigma_ticks
        );
    }
    Ok(())
}
