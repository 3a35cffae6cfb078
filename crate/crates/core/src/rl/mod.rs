//! Continuous-control learner: MLPs with manual backpropagation, replay,
//! Ornstein-Uhlenbeck exploration and DDPG/TD3.

mod agent;
mod env;
mod mlp;
mod noise;
mod replay;
mod train;

pub use agent::{actor_loss, critic_loss, Agent, AgentConfig, AgentNets, Batch, Losses, Td3Config};
pub use env::{Env, Step, ToyEnv};
pub use mlp::{Activation, Adam, AdamConfig, Cache, Dense, Grads, Mlp};
pub use noise::{NoiseConfig, OuNoise};
pub use replay::{ReplayBuffer, Transition};
pub use train::{evaluate, learning_curve, train, Checkpoint, CurveRow, EpisodeRecord, Observer, TrainOptions, TrainOutcome, CHECKPOINT_VERSION};
