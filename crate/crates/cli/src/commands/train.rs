use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use pulseforge::gym::{replay, GateEnv};
use pulseforge::pulses::PulseFile;
use pulseforge::rl::{evaluate, learning_curve, train, Agent, AgentConfig, Checkpoint, Env, EpisodeRecord, Observer, ToyEnv, TrainOptions, TrainOutcome};

use super::{environment, Ctx};
use crate::config::{self, ConfigError, NumericalHalt};
use crate::report::Run;

pub const LATEST_CHECKPOINT: &str = "checkpoints/latest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Environment preset, or `toy`.
    pub env: String,
    /// Fields replacing those of the preset.
    pub env_overrides: Option<serde_json::Value>,
    pub episodes: usize,
    pub max_steps: Option<usize>,
    pub target_fidelity: Option<f64>,
    pub seed: u64,
    /// Checkpoint interval in episodes; 0 keeps only the final one.
    pub checkpoint_every: usize,
    pub curve_window: usize,
    /// Fields replacing the recommended agent settings.
    pub agent: Option<serde_json::Value>,
    /// Best fidelity (or, for `toy`, greedy return over the optimum)
    /// required under `--strict`.
    pub threshold: Option<f64>,
    /// Greedy evaluation episodes after training.
    pub eval_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            env: "ix90".into(),
            env_overrides: None,
            episodes: 50_000,
            max_steps: None,
            target_fidelity: None,
            seed: 0,
            checkpoint_every: 1000,
            curve_window: 3500,
            agent: None,
            threshold: None,
            eval_episodes: 100,
        }
    }
}

/// Small networks and a short warmup for the toy problem.
pub fn toy_agent() -> AgentConfig {
    AgentConfig {
        hidden: vec![64, 64],
        learning_rate: 1e-3,
        batch_size: 64,
        soft_update: 0.005,
        buffer_capacity: 20_000,
        warmup: 1_000,
        ..Default::default()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub steps: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub fidelity: Option<f64>,
}

#[derive(Serialize)]
struct TrainSummary {
    env: String,
    episodes: usize,
    steps: usize,
    best_fidelity: Option<f64>,
    best_return: f64,
    /// Fidelity of the best action sequence replayed on the reference device.
    replayed_fidelity: Option<f64>,
    eval_mean_return: f64,
    eval_mean_fidelity: Option<f64>,
    optimal_return: Option<f64>,
    halted: Option<String>,
    checkpoint: String,
}

/// Writes periodic checkpoints; episode numbers continue from `offset`.
struct Checkpointer {
    dir: PathBuf,
    every: usize,
    offset: usize,
    written: Vec<String>,
}

impl Checkpointer {
    fn save(&mut self, agent: &Agent, episode: usize) -> pulseforge::Result<String> {
        let text = Checkpoint::capture(agent, episode).to_json()?;
        let name = format!("checkpoints/ckpt-{episode:08}.json");
        std::fs::create_dir_all(self.dir.join("checkpoints"))?;
        std::fs::write(self.dir.join(&name), &text)?;
        std::fs::write(self.dir.join(LATEST_CHECKPOINT), &text)?;
        self.written.push(name.clone());
        Ok(name)
    }
}

impl Observer for Checkpointer {
    fn on_episode(&mut self, agent: &Agent, record: &EpisodeRecord) -> pulseforge::Result<bool> {
        let done = self.offset + record.episode + 1;
        if self.every > 0 && done % self.every == 0 {
            self.save(agent, done)?;
            log::info!("episode {done}: fidelity {:?}, return {:.4}", record.fidelity, record.ret);
        }
        Ok(true)
    }
}

fn read_episodes(path: &Path) -> Result<Vec<EpisodeRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(r.deserialize().collect::<Result<Vec<EpisodeRow>, _>>()?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read checkpoint {}: {e}", path.display())))?;
    Ok(Checkpoint::from_json(&text)?)
}

/// The environment a config table trains on.
pub enum TrainEnv {
    Toy(ToyEnv),
    Gate(Box<GateEnv>),
}

impl TrainEnv {
    fn build(name: &str, overrides: Option<&serde_json::Value>, seed: u64) -> Result<Self> {
        if name == "toy" {
            if overrides.is_some() {
                return Err(ConfigError("env_overrides do not apply to the toy environment".into()).into());
            }
            return Ok(TrainEnv::Toy(ToyEnv::new(seed)));
        }
        Ok(TrainEnv::Gate(Box::new(GateEnv::new(environment(name, overrides)?, seed)?)))
    }

    fn agent_defaults(&self) -> AgentConfig {
        match self {
            TrainEnv::Toy(_) => toy_agent(),
            TrainEnv::Gate(g) => g.config().recommended_agent(),
        }
    }

    fn state_dim(&self) -> usize {
        match self {
            TrainEnv::Toy(e) => e.state_dim(),
            TrainEnv::Gate(e) => e.state_dim(),
        }
    }

    fn bounds(&self) -> Vec<f64> {
        match self {
            TrainEnv::Toy(e) => e.action_bounds(),
            TrainEnv::Gate(e) => e.action_bounds(),
        }
    }

    fn train(&mut self, agent: &mut Agent, opts: &TrainOptions, obs: &mut Checkpointer) -> pulseforge::Result<TrainOutcome> {
        match self {
            TrainEnv::Toy(e) => train(e, agent, opts, obs),
            TrainEnv::Gate(e) => train(e.as_mut(), agent, opts, obs),
        }
    }
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let mut cfg = ctx.file()?.train.unwrap_or_default();
    cfg.seed = ctx.seed_or(cfg.seed);
    if cfg.curve_window == 0 {
        return Err(ConfigError("curve_window must be at least 1".into()).into());
    }
    let out = ctx.out_dir.clone();
    let (prior, resumed) = if ctx.resume {
        let ckpt = load_checkpoint(&out.join(LATEST_CHECKPOINT)).context("--resume needs a checkpoint from an earlier run")?;
        let rows = if out.join("episodes.csv").exists() { read_episodes(&out.join("episodes.csv"))? } else { Vec::new() };
        let rows: Vec<EpisodeRow> = rows.into_iter().filter(|r| r.episode < ckpt.episode).collect();
        (rows, Some(ckpt))
    } else {
        (Vec::new(), None)
    };
    let offset = resumed.as_ref().map_or(0, |c| c.episode);
    let step_offset = prior.last().map_or(0, |r| r.steps);
    // Offsetting the seeds by the episodes done keeps a resumed run from
    // replaying the noise of the first one.
    let seed = cfg.seed.wrapping_add(offset as u64);
    let mut env = TrainEnv::build(&cfg.env, cfg.env_overrides.as_ref(), seed.wrapping_add(1))?;
    let mut agent = match resumed {
        Some(ckpt) => {
            if ckpt.state_dim != env.state_dim() || ckpt.bounds != env.bounds() {
                return Err(ConfigError(format!("checkpoint does not match environment '{}'", cfg.env)).into());
            }
            ckpt.restore(seed)?
        }
        None => {
            let agent_cfg: AgentConfig = config::overlay(&env.agent_defaults(), cfg.agent.as_ref(), "train.agent")?;
            Agent::new(agent_cfg, env.state_dim(), &env.bounds(), seed)?
        }
    };

    let mut run = Run::start("train", &cfg, vec![cfg.seed, offset as u64], &out)?;
    let opts = TrainOptions { episodes: cfg.episodes, target_fidelity: cfg.target_fidelity, max_steps: cfg.max_steps, seed: seed.wrapping_add(2) };
    let mut ckpt = Checkpointer { dir: out.clone(), every: cfg.checkpoint_every, offset, written: Vec::new() };
    let outcome = env.train(&mut agent, &opts, &mut ckpt)?;
    let total = offset + outcome.records.len();
    let final_ckpt = ckpt.save(&agent, total)?;
    for name in ckpt.written.iter().chain([&LATEST_CHECKPOINT.to_string()]) {
        run.record(name);
    }

    let mut rows = prior;
    rows.extend(outcome.records.iter().map(|r| EpisodeRow {
        episode: offset + r.episode,
        steps: step_offset + r.steps,
        ret: r.ret,
        fidelity: r.fidelity,
    }));
    run.write_csv("episodes.csv", &rows)?;
    let values: Vec<f64> = rows.iter().map(|r| r.fidelity.unwrap_or(r.ret)).collect();
    run.write_csv("learning_curve.csv", &learning_curve(&values, cfg.curve_window))?;

    let mut summary = TrainSummary {
        env: cfg.env.clone(),
        episodes: total,
        steps: rows.last().map_or(0, |r| r.steps),
        best_fidelity: outcome.best_fidelity,
        best_return: outcome.best_return,
        replayed_fidelity: None,
        eval_mean_return: f64::NAN,
        eval_mean_fidelity: None,
        optimal_return: None,
        halted: outcome.halted.clone(),
        checkpoint: final_ckpt,
    };
    if outcome.halted.is_none() {
        match &mut env {
            TrainEnv::Toy(_) => {
                let mut eval_env = ToyEnv::new(seed.wrapping_add(3));
                let r = evaluate(&mut eval_env, &agent, cfg.eval_episodes.max(1))?;
                summary.eval_mean_return = r.iter().map(|x| x.0).sum::<f64>() / r.len() as f64;
                summary.optimal_return = Some(eval_env.optimal_return());
            }
            TrainEnv::Gate(g) => {
                let p0 = g.config().p0;
                if !outcome.best_actions.is_empty() {
                    let mut fresh = GateEnv::new(g.config().clone(), 0)?;
                    let best = replay(&mut fresh, p0, &outcome.best_actions)?;
                    summary.replayed_fidelity = Some(best.fidelity.fidelity);
                    let file = PulseFile::from_pulse(&best.pulse)
                        .with_metadata("target", serde_json::json!(g.config().target.name()))
                        .with_metadata("fidelity", serde_json::json!(best.fidelity.fidelity))
                        .with_metadata("virtual_z", serde_json::json!(best.fidelity.angles));
                    run.write_text("best_pulse.json", &file.to_json()?)?;
                }
                let r = evaluate(g.as_mut(), &agent, cfg.eval_episodes.max(1))?;
                summary.eval_mean_return = r.iter().map(|x| x.0).sum::<f64>() / r.len() as f64;
                let f: Vec<f64> = r.iter().filter_map(|x| x.1).collect();
                summary.eval_mean_fidelity = (!f.is_empty()).then(|| f.iter().sum::<f64>() / f.len() as f64);
            }
        }
    }
    run.write_json("train_summary.json", &summary)?;
    if let Some(f) = summary.best_fidelity {
        run.metric("best_fidelity", f)?;
    }
    run.metric("best_return", summary.best_return)?;
    run.metric("eval_mean_return", summary.eval_mean_return)?;
    println!(
        "{} episodes, {} steps; best fidelity {:?}, greedy mean return {:.4}",
        summary.episodes, summary.steps, summary.best_fidelity, summary.eval_mean_return
    );

    if let Some(msg) = &outcome.halted {
        run.finish("halted")?;
        return Err(NumericalHalt(format!(
            "{msg}; artifacts up to the halt are in {}. Lower agent.learning_rate or raise agent.q_guard and resume from the last checkpoint",
            out.display()
        ))
        .into());
    }
    let (ok, what) = match (cfg.threshold, summary.optimal_return) {
        (None, _) => (true, String::new()),
        (Some(t), Some(opt)) => (summary.eval_mean_return >= t * opt, format!("greedy return {:.4} is below {t} of the optimum {opt:.4}", summary.eval_mean_return)),
        (Some(t), None) => {
            let best = summary.best_fidelity.unwrap_or(0.0);
            (best >= t, format!("best fidelity {best:.6} is below the threshold {t}"))
        }
    };
    run.finish(if ok { "ok" } else { "below-threshold" })?;
    ctx.check(ok, what)
}
