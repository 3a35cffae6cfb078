//! Post-training analyses: stochastic noise, drift generalization, the
//! role of the target drive, and fine-tuning.

mod drift;
mod finetune;
mod noise;
mod roles;
mod stats;

pub use drift::{drift_sweep, BinLayout, BinRow, DriftSample, DriftSweepOptions, DriftTable, SolutionSource};
pub use finetune::{episode_reduction, finetune, train_from_scratch, FinetuneOptions, FinetuneOutcome};
pub use noise::{noise_sweep, noisy_rollout, non_increasing_within, NoiseResult, NoiseSpec, DEFAULT_NOISE_SAMPLES, MAX_NOISE_SIGMA};
pub use roles::{reduced_control, remove_on_resonance, role_analysis, uhlmann_fidelity, RoleAnalysis, RoleTrace, CONTROL_INPUTS};
pub use stats::{mean_std, std_err};
