//! Ornstein-Uhlenbeck exploration noise with a linearly decaying scale.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub theta: f64,
    /// Diffusion, in units of each action window.
    pub sigma: f64,
    /// Fraction of the training budget over which the scale falls to
    /// `floor`.
    pub decay_fraction: f64,
    pub floor: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { theta: 0.15, sigma: 0.2, decay_fraction: 0.6, floor: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct OuNoise {
    config: NoiseConfig,
    windows: Vec<f64>,
    x: Vec<f64>,
}

impl OuNoise {
    pub fn new(config: NoiseConfig, windows: &[f64]) -> Self {
        Self { config, windows: windows.to_vec(), x: vec![0.0; windows.len()] }
    }

    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Scale factor after `progress` (in [0, 1]) of the budget.
    pub fn scale(&self, progress: f64) -> f64 {
        let c = &self.config;
        if c.decay_fraction <= 0.0 {
            return c.floor;
        }
        let s = 1.0 - progress / c.decay_fraction;
        s.max(c.floor).min(1.0)
    }

    /// Advances the process one step and returns the scaled sample.
    pub fn sample<R: Rng + ?Sized>(&mut self, progress: f64, rng: &mut R) -> Vec<f64> {
        let scale = self.scale(progress);
        let NoiseConfig { theta, sigma, .. } = self.config;
        self.x
            .iter_mut()
            .zip(&self.windows)
            .map(|(x, w)| {
                let n: f64 = rng.sample(StandardNormal);
                *x += -theta * *x + sigma * n;
                scale * w * *x
            })
            .collect()
    }
}
