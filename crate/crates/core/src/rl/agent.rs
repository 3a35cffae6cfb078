//! DDPG actor-critic with an optional TD3 mode (twin critics, delayed
//! policy updates, target smoothing).

use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Adam, AdamConfig, Grads, Mlp};
use super::noise::NoiseConfig;
use super::replay::Transition;
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Td3Config {
    pub enabled: bool,
    pub policy_delay: usize,
    /// Std of the target-policy smoothing noise, in action windows.
    pub target_noise: f64,
    pub noise_clip: f64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self { enabled: false, policy_delay: 2, target_noise: 0.2, noise_clip: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Polyak coefficient κ.
    pub soft_update: f64,
    pub buffer_capacity: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub gamma: f64,
    pub td3: Td3Config,
    /// Halt once any |Q| exceeds this.
    pub q_guard: f64,
    pub policy_init_scale: f64,
    pub noise: NoiseConfig,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: vec![800, 400, 200],
            activation: Activation::Relu,
            learning_rate: 1e-4,
            batch_size: 64,
            soft_update: 0.002,
            buffer_capacity: 100_000,
            warmup: 10_000,
            gamma: 0.99,
            td3: Td3Config::default(),
            q_guard: 1e4,
            policy_init_scale: 1e-3,
            noise: NoiseConfig::default(),
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.soft_update > 0.0 && self.soft_update <= 1.0, Config, "soft update κ must lie in (0, 1], got {}", self.soft_update);
        ensure!(self.warmup <= self.buffer_capacity, Config, "warmup {} exceeds buffer capacity {}", self.warmup, self.buffer_capacity);
        ensure!((0.0..=1.0).contains(&self.gamma), Config, "discount must lie in [0, 1], got {}", self.gamma);
        ensure!(self.batch_size > 0, Config, "batch size must be positive");
        ensure!(self.learning_rate > 0.0 && self.learning_rate.is_finite(), Config, "learning rate must be positive");
        ensure!(self.q_guard > 0.0, Config, "Q guard must be positive");
        ensure!(!self.td3.enabled || self.td3.policy_delay >= 1, Config, "TD3 policy delay must be at least 1");
        ensure!(self.hidden.iter().all(|&h| h > 0), Config, "hidden layers must be non-empty");
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, beta1: self.adam_beta1, beta2: self.adam_beta2, epsilon: self.adam_epsilon }
    }
}

/// Learned networks, their targets and optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentNets {
    pub actor: Mlp,
    pub critic: Mlp,
    pub twin: Option<Mlp>,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub twin_target: Option<Mlp>,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub twin_opt: Option<Adam>,
    /// Critic updates performed.
    pub updates: u64,
}

/// A minibatch laid out row-wise.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub terminal: Array1<f64>,
}

impl Batch {
    pub fn from_transitions(items: &[&Transition]) -> Self {
        let rows = |f: &dyn Fn(&Transition) -> &Vec<f64>| {
            let width = f(items[0]).len();
            Array2::from_shape_fn((items.len(), width), |(i, j)| f(items[i])[j])
        };
        Self {
            states: rows(&|t| &t.state),
            actions: rows(&|t| &t.action),
            rewards: items.iter().map(|t| t.reward).collect(),
            next_states: rows(&|t| &t.next_state),
            terminal: items.iter().map(|t| if t.terminal { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Losses {
    pub critic: f64,
    /// Present on steps that updated the policy.
    pub actor: Option<f64>,
    pub q_mean: f64,
}

fn scale_actions(raw: &Array2<f64>, bounds: &Array1<f64>) -> Array2<f64> {
    raw * bounds
}

fn critic_input(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[states.view(), actions.view()]).expect("matching batch rows")
}

/// Mean squared Bellman residual against fixed targets `y`, and its
/// parameter gradient.
pub fn critic_loss(critic: &Mlp, batch: &Batch, y: &Array1<f64>) -> (f64, Grads) {
    let cache = critic.forward_cached(&critic_input(&batch.states, &batch.actions));
    let q = cache.output().column(0).to_owned();
    let n = batch.len() as f64;
    let resid = &q - y;
    let loss = resid.mapv(|v| v * v).sum() / n;
    let g = (resid * (2.0 / n)).insert_axis(Axis(1));
    let (grads, _) = critic.backward(&cache, &g);
    (loss, grads)
}

/// `−mean Q(s, μ(s))` and its gradient with respect to the policy.
pub fn actor_loss(actor: &Mlp, critic: &Mlp, bounds: &Array1<f64>, states: &Array2<f64>) -> (f64, Grads) {
    let n = states.nrows() as f64;
    let a_cache = actor.forward_cached(states);
    let actions = scale_actions(a_cache.output(), bounds);
    let c_cache = critic.forward_cached(&critic_input(states, &actions));
    let loss = -c_cache.output().sum() / n;
    let g = Array2::from_elem((states.nrows(), 1), -1.0 / n);
    let (_, d_input) = critic.backward(&c_cache, &g);
    let d_actions = d_input.slice(s![.., states.ncols()..]).to_owned() * bounds;
    let (grads, _) = actor.backward(&a_cache, &d_actions);
    (loss, grads)
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub config: AgentConfig,
    pub state_dim: usize,
    pub bounds: Array1<f64>,
    pub nets: AgentNets,
    rng: ChaCha8Rng,
}

impl Agent {
    /// Fresh networks for `state_dim` inputs and actions bounded by
    /// `±bounds` per component.
    pub fn new(config: AgentConfig, state_dim: usize, bounds: &[f64], seed: u64) -> Result<Self> {
        config.validate()?;
        ensure!(state_dim > 0 && !bounds.is_empty(), Config, "state and action dimensions must be positive");
        ensure!(bounds.iter().all(|b| *b > 0.0 && b.is_finite()), Config, "action bounds must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let action_dim = bounds.len();
        let mut actor_sizes = vec![state_dim];
        actor_sizes.extend(&config.hidden);
        actor_sizes.push(action_dim);
        let mut critic_sizes = vec![state_dim + action_dim];
        critic_sizes.extend(&config.hidden);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, config.activation, Activation::Tanh, config.policy_init_scale, &mut rng);
        let critic_scale = 1.0 / (*critic_sizes.iter().rev().nth(1).expect("hidden") as f64).sqrt();
        let critic = Mlp::new(&critic_sizes, config.activation, Activation::Identity, critic_scale, &mut rng);
        let twin = config
            .td3
            .enabled
            .then(|| Mlp::new(&critic_sizes, config.activation, Activation::Identity, critic_scale, &mut rng));
        let adam = config.adam();
        let nets = AgentNets {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            twin_target: twin.clone(),
            actor_opt: Adam::new(&actor, adam),
            critic_opt: Adam::new(&critic, adam),
            twin_opt: twin.as_ref().map(|t| Adam::new(t, adam)),
            actor,
            critic,
            twin,
            updates: 0,
        };
        Ok(Self { config, state_dim, bounds: Array1::from(bounds.to_vec()), nets, rng })
    }

    pub fn from_nets(config: AgentConfig, state_dim: usize, bounds: &[f64], nets: AgentNets, seed: u64) -> Result<Self> {
        config.validate()?;
        ensure!(nets.actor.input_dim() == state_dim, Config, "checkpoint actor expects {} inputs, not {state_dim}", nets.actor.input_dim());
        ensure!(nets.actor.output_dim() == bounds.len(), Config, "checkpoint actor has {} outputs, not {}", nets.actor.output_dim(), bounds.len());
        ensure!(nets.twin.is_some() == config.td3.enabled, Config, "checkpoint and config disagree on TD3");
        Ok(Self { config, state_dim, bounds: Array1::from(bounds.to_vec()), nets, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn action_dim(&self) -> usize {
        self.bounds.len()
    }

    fn diagnostic(&self) -> String {
        format!(
            "parameter norms: actor {:.4e}, critic {:.4e}{}",
            self.nets.actor.param_norm(),
            self.nets.critic.param_norm(),
            self.nets.twin.as_ref().map(|t| format!(", twin {:.4e}", t.param_norm())).unwrap_or_default()
        )
    }

    /// `μ(s) + noise`, clipped to the bounds. Deterministic without noise.
    pub fn act(&self, state: &[f64], noise: Option<&[f64]>) -> Result<Vec<f64>> {
        ensure!(state.len() == self.state_dim, Validation, "state has {} entries, expected {}", state.len(), self.state_dim);
        let x = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("row vector");
        let mu = scale_actions(&self.nets.actor.forward(&x), &self.bounds);
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("policy produced a non-finite action; {}", self.diagnostic())));
        }
        Ok(mu
            .row(0)
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let b = self.bounds[k];
                (m + noise.map_or(0.0, |n| n[k])).clamp(-b, b)
            })
            .collect())
    }

    /// Bellman targets `r + γ(1 − done)·Q'(s', μ'(s'))`, with the twin
    /// minimum and smoothing noise in TD3 mode.
    pub fn targets(&mut self, batch: &Batch) -> Array1<f64> {
        let mut next = scale_actions(&self.nets.actor_target.forward(&batch.next_states), &self.bounds);
        let td3 = self.config.td3;
        if td3.enabled && td3.target_noise > 0.0 {
            for ((_, k), a) in next.indexed_iter_mut() {
                let b = self.bounds[k];
                let n: f64 = self.rng.sample(StandardNormal);
                let eps = (td3.target_noise * b * n).clamp(-td3.noise_clip * b, td3.noise_clip * b);
                *a = (*a + eps).clamp(-b, b);
            }
        }
        self.bootstrap(batch, &next)
    }

    /// Targets for given next actions, without smoothing noise.
    pub fn bootstrap(&self, batch: &Batch, next_actions: &Array2<f64>) -> Array1<f64> {
        let input = critic_input(&batch.next_states, next_actions);
        let mut q = self.nets.critic_target.forward(&input).column(0).to_owned();
        if let Some(twin) = &self.nets.twin_target {
            let q2 = twin.forward(&input);
            q.zip_mut_with(&q2.column(0), |a, &b| *a = a.min(b));
        }
        let cont = batch.terminal.mapv(|d| 1.0 - d);
        &batch.rewards + &(cont * q * self.config.gamma)
    }

    /// One critic update, plus a policy update and Polyak step when due.
    pub fn train_step(&mut self, batch: &Batch) -> Result<Losses> {
        ensure!(batch.len() == self.config.batch_size, Validation, "batch of {} rows, configured {}", batch.len(), self.config.batch_size);
        let y = self.targets(batch);
        let guard = self.config.q_guard;
        if let Some(bad) = y.iter().find(|v| !v.is_finite() || v.abs() > guard) {
            return Err(Error::Numerical(format!("exploding Q target {bad:.4e} exceeds guard {guard:.1e}; {}", self.diagnostic())));
        }
        let (c_loss, c_grads) = critic_loss(&self.nets.critic, batch, &y);
        let q_mean = self.nets.critic.forward(&critic_input(&batch.states, &batch.actions)).mean().unwrap_or(0.0);
        if !c_loss.is_finite() || q_mean.abs() > guard {
            return Err(Error::Numerical(format!("exploding Q value (mean {q_mean:.4e}); {}", self.diagnostic())));
        }
        let nets = &mut self.nets;
        nets.critic_opt.step(&mut nets.critic, &c_grads);
        if let (Some(twin), Some(opt)) = (nets.twin.as_mut(), nets.twin_opt.as_mut()) {
            let (_, g) = critic_loss(twin, batch, &y);
            opt.step(twin, &g);
        }
        nets.updates += 1;
        let delay = if self.config.td3.enabled { self.config.td3.policy_delay as u64 } else { 1 };
        let mut a_loss = None;
        if nets.updates % delay == 0 {
            let (loss, g) = actor_loss(&nets.actor, &nets.critic, &self.bounds, &batch.states);
            nets.actor_opt.step(&mut nets.actor, &g);
            a_loss = Some(loss);
            let kappa = self.config.soft_update;
            nets.actor_target.soft_update(&nets.actor, kappa);
            nets.critic_target.soft_update(&nets.critic, kappa);
            if let (Some(t), Some(s)) = (nets.twin_target.as_mut(), nets.twin.as_ref()) {
                t.soft_update(s, kappa);
            }
        }
        if !nets.actor.is_finite() || !nets.critic.is_finite() {
            return Err(Error::Numerical(format!("non-finite network parameters; {}", self.diagnostic())));
        }
        Ok(Losses { critic: c_loss, actor: a_loss, q_mean })
    }
}
