use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use pulseforge::evalkit::{episode_reduction, finetune, train_from_scratch, FinetuneOptions, FinetuneOutcome};
use pulseforge::gym::param_group;
use pulseforge::rl::AgentConfig;

use super::train::load_checkpoint;
use super::{environment, Ctx};
use crate::config::{self, ConfigError};
use crate::report::Run;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FinetuneConfig {
    pub checkpoint: Option<PathBuf>,
    pub env: String,
    pub env_overrides: Option<serde_json::Value>,
    /// Relative shift of the drift distribution by parameter name or
    /// group, e.g. `{ detuning = 0.03 }`.
    pub drift_center: BTreeMap<String, f64>,
    pub episodes: usize,
    pub threshold: f64,
    pub window: usize,
    pub warmup: Option<usize>,
    pub seed: u64,
    /// Also train from scratch on the shifted distribution.
    pub scratch: bool,
    /// Fields replacing the checkpoint's agent settings for the scratch run.
    pub scratch_agent: Option<serde_json::Value>,
    /// Smallest scratch-over-finetune episode ratio accepted under
    /// `--strict`.
    pub min_reduction: Option<f64>,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        let o = FinetuneOptions::default();
        Self {
            checkpoint: None,
            env: "cnot-drift-detuning".into(),
            env_overrides: None,
            drift_center: BTreeMap::new(),
            episodes: o.episodes,
            threshold: o.threshold,
            window: o.window,
            warmup: o.warmup,
            seed: o.seed,
            scratch: true,
            scratch_agent: None,
            min_reduction: None,
        }
    }
}

#[derive(Serialize)]
struct Side {
    episodes_run: usize,
    episodes_to_threshold: Option<usize>,
    best_fidelity: Option<f64>,
    halted: Option<String>,
}

impl From<&FinetuneOutcome> for Side {
    fn from(o: &FinetuneOutcome) -> Self {
        Self {
            episodes_run: o.outcome.records.len(),
            episodes_to_threshold: o.episodes_to_threshold,
            best_fidelity: o.outcome.best_fidelity,
            halted: o.outcome.halted.clone(),
        }
    }
}

#[derive(Serialize)]
struct FinetuneSummary {
    finetuned: Side,
    scratch: Option<Side>,
    reduction: Option<f64>,
}

#[derive(Serialize)]
struct Row {
    run: &'static str,
    episode: usize,
    fidelity: Option<f64>,
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let mut cfg = ctx.file()?.finetune.unwrap_or_default();
    cfg.seed = ctx.seed_or(cfg.seed);
    let path = cfg.checkpoint.as_ref().ok_or_else(|| ConfigError("finetune.checkpoint is required".into()))?;
    let ckpt = load_checkpoint(&ctx.resolve(path))?;
    let mut env = environment(&cfg.env, cfg.env_overrides.as_ref())?;
    for (name, shift) in &cfg.drift_center {
        for k in param_group(name)? {
            env.drift_center[k] = *shift;
        }
    }
    env.validate()?;
    let opts = FinetuneOptions { episodes: cfg.episodes, threshold: cfg.threshold, window: cfg.window, warmup: cfg.warmup, seed: cfg.seed };

    let mut run = Run::start("finetune", &cfg, vec![cfg.seed], &ctx.out_dir)?;
    let scratch_cfg: AgentConfig = config::overlay(&ckpt.config, cfg.scratch_agent.as_ref(), "finetune.scratch_agent")?;
    let tuned = finetune(ckpt, &env, &opts)?;
    run.write_text("checkpoints/finetuned.json", &tuned.checkpoint.to_json()?)?;
    let scratch = if cfg.scratch { Some(train_from_scratch(scratch_cfg, &env, &opts)?) } else { None };
    let reduction = scratch.as_ref().and_then(|s| episode_reduction(&tuned, s));

    let mut rows: Vec<Row> = tuned.outcome.records.iter().map(|r| Row { run: "finetune", episode: r.episode, fidelity: r.fidelity }).collect();
    if let Some(s) = &scratch {
        rows.extend(s.outcome.records.iter().map(|r| Row { run: "scratch", episode: r.episode, fidelity: r.fidelity }));
    }
    run.write_csv("finetune_episodes.csv", &rows)?;
    let summary = FinetuneSummary { finetuned: Side::from(&tuned), scratch: scratch.as_ref().map(Side::from), reduction };
    run.write_json("finetune.json", &summary)?;
    println!(
        "fine-tuned: {:?} episodes to {}; scratch: {:?}; reduction {:?}",
        tuned.episodes_to_threshold,
        cfg.threshold,
        scratch.as_ref().map(|s| s.episodes_to_threshold),
        reduction
    );
    if let Some(r) = reduction {
        run.metric("episode_reduction", r)?;
    }
    if let Some(n) = tuned.episodes_to_threshold {
        run.metric("finetune_episodes_to_threshold", n as f64)?;
    }
    let ok = match cfg.min_reduction {
        Some(m) => reduction.is_some_and(|r| r >= m),
        None => true,
    };
    run.finish(if ok { "ok" } else { "below-threshold" })?;
    ctx.check(ok, format!("episode reduction {reduction:?} is below {:?}", cfg.min_reduction))
}
