//! Episodic gate-design environment over the two-transmon simulator.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::EnvConfig;
use crate::error::{ensure, Result};
use crate::linalg::{identity, CMatrix};
use crate::metrics::{corrected_fidelity, VirtualZResult};
use crate::pulses::{clip_amplitude, PulseGrid, PwcPulse};
use crate::qutrit::{SystemParams, TransmonPair, DIM_2Q, NUM_PARAMS, QUBIT_INDICES_2Q};
use crate::rl::{Env, Step};

/// Infidelity floor of the reward.
pub const INFIDELITY_FLOOR: f64 = 1e-12;

/// `−log10(1 − F)`, with the infidelity floored at 1e-12.
pub fn reward_from_fidelity(fidelity: f64) -> f64 {
    -(1.0 - fidelity).max(INFIDELITY_FLOOR).log10()
}

/// Builds a pulse segment by segment from windowed amplitude changes.
/// The observation is the evolved computational basis states, the
/// previous amplitudes and, optionally, the relative parameter drift.
#[derive(Debug, Clone)]
pub struct GateEnv {
    config: EnvConfig,
    grid: PulseGrid,
    windows: Vec<f64>,
    target: CMatrix,
    rng: ChaCha8Rng,
    params: SystemParams,
    system: TransmonPair,
    context: [f64; NUM_PARAMS],
    pulse: PwcPulse,
    u: CMatrix,
    segment: usize,
    clamped: u64,
    last: Option<VirtualZResult>,
}

impl GateEnv {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let system = TransmonPair::new(config.p0)?;
        Ok(Self {
            windows: config.windows(),
            target: config.target.matrix(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            params: config.p0,
            system,
            context: [0.0; NUM_PARAMS],
            pulse: PwcPulse::zeros(grid, &config.drives),
            u: identity(DIM_2Q),
            segment: 0,
            clamped: 0,
            last: None,
            grid,
            config,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn grid(&self) -> &PulseGrid {
        &self.grid
    }

    /// Parameters of the current episode.
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn context(&self) -> &[f64; NUM_PARAMS] {
        &self.context
    }

    /// Pulse built so far; untouched segments are zero.
    pub fn pulse(&self) -> &PwcPulse {
        &self.pulse
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.u
    }

    /// Out-of-window action components clamped since construction.
    pub fn clamped_actions(&self) -> u64 {
        self.clamped
    }

    /// Fidelity of the last completed episode.
    pub fn last_fidelity(&self) -> Option<&VirtualZResult> {
        self.last.as_ref()
    }

    /// Starts an episode on explicit parameters, bypassing the drift
    /// sampler.
    pub fn reset_with(&mut self, params: SystemParams) -> Result<Vec<f64>> {
        self.system = TransmonPair::new(params)?;
        self.params = params;
        self.context = params.relative_to(&self.config.p0);
        self.pulse = PwcPulse::zeros(self.grid, &self.config.drives);
        self.u = identity(DIM_2Q);
        self.segment = 0;
        Ok(self.observe())
    }

    fn observe(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.config.state_dim());
        for &j in &QUBIT_INDICES_2Q {
            for k in 0..DIM_2Q {
                let z = self.u[(k, j)];
                s.push(z.re);
                s.push(z.im);
            }
        }
        let prev = if self.segment == 0 { None } else { Some(self.segment - 1) };
        for (_, samples) in self.pulse.channels() {
            let a = prev.map_or(Complex64::new(0.0, 0.0), |i| samples[i]);
            s.push(a.re);
            s.push(a.im);
        }
        if self.config.context {
            s.extend_from_slice(&self.context);
        }
        s
    }
}

impl Env for GateEnv {
    fn state_dim(&self) -> usize {
        self.config.state_dim()
    }

    fn action_bounds(&self) -> Vec<f64> {
        self.windows.clone()
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        let mut rel = self.config.drift.sample(&mut self.rng)?;
        for (r, c) in rel.iter_mut().zip(&self.config.drift_center) {
            *r += c;
        }
        self.reset_with(self.config.p0.perturbed(&rel))
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        ensure!(action.len() == self.windows.len(), Validation, "action has {} components, expected {}", action.len(), self.windows.len());
        ensure!(self.segment < self.grid.segments(), Contract, "step after the final segment; reset first");
        ensure!(action.iter().all(|a| a.is_finite()), Validation, "non-finite action");
        let i = self.segment;
        let channels: Vec<_> = self.pulse.channels().iter().map(|(c, _)| *c).collect();
        for (k, ch) in channels.into_iter().enumerate() {
            let mut delta = [0.0; 2];
            for q in 0..2 {
                let (a, w) = (action[2 * k + q], self.windows[2 * k + q]);
                if a.abs() > w {
                    self.clamped += 1;
                }
                delta[q] = a.clamp(-w, w);
            }
            let prev = if i == 0 { Complex64::new(0.0, 0.0) } else { self.pulse.samples(ch).expect("own channel")[i - 1] };
            self.pulse.set_sample(ch, i, clip_amplitude(prev + Complex64::new(delta[0], delta[1])))?;
        }
        let p = self.system.segment_range_propagator(&self.pulse, i..i + 1, &self.config.propagation)?;
        self.u = p * &self.u;
        self.segment += 1;
        let done = self.segment == self.grid.segments();
        let (reward, fidelity) = if done {
            let f = corrected_fidelity(&self.u, &self.target)?;
            self.last = Some(f);
            (reward_from_fidelity(f.fidelity), Some(f.fidelity))
        } else {
            (0.0, None)
        };
        Ok(Step { state: self.observe(), reward, done, fidelity })
    }
}

/// Record of one complete episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub pulse: PwcPulse,
    pub fidelity: VirtualZResult,
    pub unitary: CMatrix,
    pub params: SystemParams,
    /// Observations before each step, then the final one.
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
}

/// Runs `policy` through one episode that starts from `state`, which must
/// be the observation returned by the preceding reset.
pub fn rollout_from<P: FnMut(&[f64]) -> Result<Vec<f64>>>(env: &mut GateEnv, state: Vec<f64>, mut policy: P) -> Result<Rollout> {
    let mut states = vec![state];
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    loop {
        let a = policy(states.last().expect("non-empty"))?;
        let step = env.step(&a)?;
        actions.push(a);
        rewards.push(step.reward);
        states.push(step.state);
        if step.done {
            break;
        }
    }
    Ok(Rollout {
        pulse: env.pulse().clone(),
        fidelity: *env.last_fidelity().expect("episode completed"),
        unitary: env.unitary().clone(),
        params: *env.params(),
        states,
        actions,
        rewards,
    })
}

/// Resets `env` (drawing new parameters) and runs `policy` to the end.
pub fn rollout<P: FnMut(&[f64]) -> Result<Vec<f64>>>(env: &mut GateEnv, policy: P) -> Result<Rollout> {
    let s = env.reset()?;
    rollout_from(env, s, policy)
}

/// Replays a recorded action sequence on fixed parameters.
pub fn replay(env: &mut GateEnv, params: SystemParams, actions: &[Vec<f64>]) -> Result<Rollout> {
    ensure!(actions.len() == env.grid().segments(), Validation, "{} actions for {} segments", actions.len(), env.grid().segments());
    let s = env.reset_with(params)?;
    let mut it = actions.iter();
    rollout_from(env, s, |_| Ok(it.next().expect("one action per segment").clone()))
}
