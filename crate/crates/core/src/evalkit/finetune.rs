//! Continued training of a checkpointed agent on a new drift distribution.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::gym::{EnvConfig, GateEnv};
use crate::rl::{train, Agent, AgentConfig, Checkpoint, EpisodeRecord, Observer, TrainOptions, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinetuneOptions {
    /// Episode budget.
    pub episodes: usize,
    /// Mean training fidelity that ends the run.
    pub threshold: f64,
    /// Episodes in the moving mean.
    pub window: usize,
    /// Replaces the checkpoint's warmup; the replay buffer is not part of
    /// a checkpoint and is refilled from scratch.
    pub warmup: Option<usize>,
    pub seed: u64,
}

impl Default for FinetuneOptions {
    fn default() -> Self {
        Self { episodes: 100_000, threshold: 0.999, window: 100, warmup: None, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct FinetuneOutcome {
    pub checkpoint: Checkpoint,
    /// Episodes run until the moving mean first reached the threshold.
    pub episodes_to_threshold: Option<usize>,
    pub outcome: TrainOutcome,
}

/// Stops training once the mean fidelity of the last `window` episodes
/// reaches the threshold.
struct MeanThreshold {
    window: usize,
    threshold: f64,
    recent: VecDeque<f64>,
    sum: f64,
    reached: Option<usize>,
}

impl Observer for MeanThreshold {
    fn on_episode(&mut self, _agent: &Agent, record: &EpisodeRecord) -> Result<bool> {
        let f = record.fidelity.unwrap_or(0.0);
        self.recent.push_back(f);
        self.sum += f;
        if self.recent.len() > self.window {
            self.sum -= self.recent.pop_front().expect("non-empty");
        }
        if self.recent.len() == self.window && self.sum / self.window as f64 >= self.threshold {
            self.reached = Some(record.episode + 1);
            return Ok(false);
        }
        Ok(true)
    }
}

fn run(mut agent: Agent, env: &EnvConfig, opts: &FinetuneOptions, start_episode: usize) -> Result<FinetuneOutcome> {
    ensure!(opts.window >= 1, Config, "the threshold window must hold at least one episode");
    ensure!(opts.threshold > 0.0 && opts.threshold <= 1.0, Config, "threshold must lie in (0, 1], got {}", opts.threshold);
    let mut gym = GateEnv::new(env.clone(), opts.seed)?;
    let mut obs = MeanThreshold { window: opts.window, threshold: opts.threshold, recent: VecDeque::new(), sum: 0.0, reached: None };
    let train_opts = TrainOptions { episodes: opts.episodes, target_fidelity: None, max_steps: None, seed: opts.seed };
    let outcome = train(&mut gym, &mut agent, &train_opts, &mut obs)?;
    Ok(FinetuneOutcome {
        checkpoint: Checkpoint::capture(&agent, start_episode + outcome.records.len()),
        episodes_to_threshold: obs.reached,
        outcome,
    })
}

/// Continues training `checkpoint` on `env` until the moving mean of the
/// training fidelity reaches the threshold or the budget runs out.
pub fn finetune(checkpoint: Checkpoint, env: &EnvConfig, opts: &FinetuneOptions) -> Result<FinetuneOutcome> {
    env.validate()?;
    ensure!(
        checkpoint.state_dim == env.state_dim(),
        Config,
        "checkpoint takes {}-entry states but the environment produces {}",
        checkpoint.state_dim,
        env.state_dim()
    );
    ensure!(
        checkpoint.bounds == env.windows(),
        Config,
        "checkpoint action windows {:?} differ from the environment's {:?}",
        checkpoint.bounds,
        env.windows()
    );
    let start = checkpoint.episode;
    let mut checkpoint = checkpoint;
    if let Some(w) = opts.warmup {
        checkpoint.config.warmup = w;
    }
    let agent = checkpoint.restore(opts.seed)?;
    run(agent, env, opts, start)
}

/// The from-scratch baseline on the same environment and budget.
pub fn train_from_scratch(config: AgentConfig, env: &EnvConfig, opts: &FinetuneOptions) -> Result<FinetuneOutcome> {
    env.validate()?;
    let mut config = config;
    if let Some(w) = opts.warmup {
        config.warmup = w;
    }
    let agent = Agent::new(config, env.state_dim(), &env.windows(), opts.seed)?;
    run(agent, env, opts, 0)
}

/// Episodes from scratch divided by episodes when fine-tuning.
pub fn episode_reduction(finetuned: &FinetuneOutcome, scratch: &FinetuneOutcome) -> Option<f64> {
    Some(scratch.episodes_to_threshold? as f64 / finetuned.episodes_to_threshold? as f64)
}
