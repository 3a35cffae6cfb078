//! Gate design as an episodic reinforcement-learning environment.

mod config;
mod env;

pub use config::{param_group, DriftMode, EnvConfig, BASIS_STATE_ENTRIES};
pub use env::{reward_from_fidelity, replay, rollout, rollout_from, GateEnv, Rollout, INFIDELITY_FLOOR};
