//! The off-policy training loop, learning curves and checkpoints.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{Agent, AgentConfig, AgentNets, Batch, Losses};
use super::env::Env;
use super::noise::OuNoise;
use super::replay::{ReplayBuffer, Transition};
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub episodes: usize,
    /// Stop early once the environment reports this fidelity.
    pub target_fidelity: Option<f64>,
    /// Stop after this many environment steps.
    pub max_steps: Option<usize>,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { episodes: 1000, target_fidelity: None, max_steps: None, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Environment steps taken so far, this episode included.
    pub steps: usize,
    pub ret: f64,
    pub fidelity: Option<f64>,
    pub last_losses: Option<Losses>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub records: Vec<EpisodeRecord>,
    pub best_fidelity: Option<f64>,
    /// Actions of the episode with the best fidelity (or return).
    pub best_actions: Vec<Vec<f64>>,
    pub best_return: f64,
    /// Set when training stopped on a numerical halt.
    pub halted: Option<String>,
}

/// Hook invoked after every episode. `Ok(false)` stops training after
/// this episode; an error aborts it.
pub trait Observer {
    fn on_episode(&mut self, _agent: &Agent, _record: &EpisodeRecord) -> Result<bool> {
        Ok(true)
    }
}

impl Observer for () {}

/// Runs DDPG/TD3 on `env`. Exploration noise is on throughout; learning
/// starts once the buffer holds `warmup` transitions.
pub fn train<E: Env, O: Observer>(env: &mut E, agent: &mut Agent, opts: &TrainOptions, observer: &mut O) -> Result<TrainOutcome> {
    let cfg = agent.config.clone();
    ensure!(env.state_dim() == agent.state_dim, Config, "env state has {} entries, agent expects {}", env.state_dim(), agent.state_dim);
    let bounds = env.action_bounds();
    ensure!(bounds.len() == agent.action_dim(), Config, "env has {} action components, agent {}", bounds.len(), agent.action_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut noise = OuNoise::new(cfg.noise, &bounds);
    let mut out = TrainOutcome { records: Vec::new(), best_fidelity: None, best_actions: Vec::new(), best_return: f64::NEG_INFINITY, halted: None };
    let mut steps = 0usize;
    let budget = opts.max_steps.map_or(opts.episodes as f64, |m| m as f64);
    'episodes: for episode in 0..opts.episodes {
        let mut state = env.reset()?;
        noise.reset();
        let mut ret = 0.0;
        let mut actions = Vec::new();
        let mut last_losses = None;
        let fidelity = loop {
            let progress = if opts.max_steps.is_some() { steps as f64 / budget } else { episode as f64 / budget };
            let n = noise.sample(progress, &mut rng);
            let action = match agent.act(&state, Some(&n)) {
                Ok(a) => a,
                Err(Error::Numerical(msg)) => {
                    out.halted = Some(msg);
                    break 'episodes;
                }
                Err(e) => return Err(e),
            };
            let step = env.step(&action)?;
            steps += 1;
            ret += step.reward;
            buffer.push(Transition {
                state: std::mem::take(&mut state),
                action: action.clone(),
                reward: step.reward,
                next_state: step.state.clone(),
                terminal: step.done,
            });
            actions.push(action);
            state = step.state;
            if buffer.len() >= cfg.warmup.max(cfg.batch_size) {
                let batch = Batch::from_transitions(&buffer.sample(cfg.batch_size, &mut rng));
                match agent.train_step(&batch) {
                    Ok(l) => last_losses = Some(l),
                    Err(Error::Numerical(msg)) => {
                        out.halted = Some(msg);
                        break 'episodes;
                    }
                    Err(e) => return Err(e),
                }
            }
            if step.done {
                break step.fidelity;
            }
        };
        let record = EpisodeRecord { episode, steps, ret, fidelity, last_losses };
        let better = match (fidelity, out.best_fidelity) {
            (Some(f), Some(b)) => f > b,
            (Some(_), None) => true,
            (None, _) => ret > out.best_return,
        };
        if better {
            out.best_fidelity = fidelity.or(out.best_fidelity);
            out.best_return = ret;
            out.best_actions = actions;
        }
        out.records.push(record);
        let keep_going = observer.on_episode(agent, &record)?;
        let reached = opts.target_fidelity.is_some_and(|t| fidelity.is_some_and(|f| f >= t));
        if !keep_going || reached || opts.max_steps.is_some_and(|m| steps >= m) {
            break;
        }
    }
    Ok(out)
}

/// Noise-free returns (and fidelities) of `episodes` rollouts.
pub fn evaluate<E: Env>(env: &mut E, agent: &Agent, episodes: usize) -> Result<Vec<(f64, Option<f64>)>> {
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = env.reset()?;
        let mut ret = 0.0;
        loop {
            let step = env.step(&agent.act(&state, None)?)?;
            ret += step.reward;
            state = step.state;
            if step.done {
                out.push((ret, step.fidelity));
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub value: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Trailing moving mean, min and max over `window` episodes.
pub fn learning_curve(values: &[f64], window: usize) -> Vec<CurveRow> {
    assert!(window > 0, "window must be positive");
    let mut sum = 0.0;
    let mut mins: VecDeque<usize> = VecDeque::new();
    let mut maxs: VecDeque<usize> = VecDeque::new();
    let mut rows = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        let lo = (i + 1).saturating_sub(window);
        while mins.back().is_some_and(|&j| values[j] >= v) {
            mins.pop_back();
        }
        mins.push_back(i);
        while maxs.back().is_some_and(|&j| values[j] <= v) {
            maxs.pop_back();
        }
        maxs.push_back(i);
        while mins.front().is_some_and(|&j| j < lo) {
            mins.pop_front();
        }
        while maxs.front().is_some_and(|&j| j < lo) {
            maxs.pop_front();
        }
        rows.push(CurveRow {
            episode: i,
            value: v,
            mean: sum / (i + 1 - lo) as f64,
            min: values[mins[0]],
            max: values[maxs[0]],
        });
    }
    rows
}

pub const CHECKPOINT_VERSION: &str = "pulseforge/checkpoint/v1";

/// JSON dump of the networks, targets and optimizer moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub config: AgentConfig,
    pub state_dim: usize,
    pub bounds: Vec<f64>,
    pub episode: usize,
    pub nets: AgentNets,
}

impl Checkpoint {
    pub fn capture(agent: &Agent, episode: usize) -> Self {
        Self {
            version: CHECKPOINT_VERSION.into(),
            config: agent.config.clone(),
            state_dim: agent.state_dim,
            bounds: agent.bounds.to_vec(),
            episode,
            nets: agent.nets.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        ensure!(c.version == CHECKPOINT_VERSION, Format, "unsupported checkpoint version {:?}", c.version);
        Ok(c)
    }

    pub fn restore(self, seed: u64) -> Result<Agent> {
        Agent::from_nets(self.config, self.state_dim, &self.bounds, self.nets, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::env::ToyEnv;

    #[test]
    fn curve_matches_brute_force() {
        let values: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        for row in learning_curve(&values, 7) {
            let lo = (row.episode + 1).saturating_sub(7);
            let w = &values[lo..=row.episode];
            assert_eq!(row.min, w.iter().cloned().fold(f64::INFINITY, f64::min));
            assert_eq!(row.max, w.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            assert!((row.mean - w.iter().sum::<f64>() / w.len() as f64).abs() < 1e-12);
        }
    }

    fn toy_config() -> AgentConfig {
        AgentConfig { hidden: vec![16, 16], batch_size: 16, warmup: 64, buffer_capacity: 1000, ..Default::default() }
    }

    #[test]
    fn training_is_reproducible() {
        let run = || {
            let mut env = ToyEnv::new(1);
            let mut agent = Agent::new(toy_config(), 2, &[0.25], 2).unwrap();
            let out = train(&mut env, &mut agent, &TrainOptions { episodes: 30, seed: 3, ..Default::default() }, &mut ()).unwrap();
            (out.records.iter().map(|r| r.ret).collect::<Vec<_>>(), agent.nets)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn checkpoint_round_trips() {
        let mut env = ToyEnv::new(1);
        let mut agent = Agent::new(toy_config(), 2, &[0.25], 2).unwrap();
        train(&mut env, &mut agent, &TrainOptions { episodes: 12, ..Default::default() }, &mut ()).unwrap();
        let ck = Checkpoint::capture(&agent, 12);
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back, ck);
        let restored = back.restore(0).unwrap();
        assert_eq!(restored.act(&[0.3, 0.5], None).unwrap(), agent.act(&[0.3, 0.5], None).unwrap());
    }

    #[test]
    fn step_budget_stops_training() {
        let mut env = ToyEnv::new(1);
        let mut agent = Agent::new(toy_config(), 2, &[0.25], 2).unwrap();
        let out = train(&mut env, &mut agent, &TrainOptions { episodes: 100, max_steps: Some(40), ..Default::default() }, &mut ()).unwrap();
        assert_eq!(out.records.last().unwrap().steps, 40);
    }
}
