//! Pulse-level simulation, calibration and reinforcement-learning control
//! of two coupled qutrit transmons.

pub mod baselines;
pub mod error;
pub mod evalkit;
pub mod gym;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod pulses;
pub mod qutrit;
pub mod rl;

pub use error::{Error, Result};
