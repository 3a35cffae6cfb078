//! Robustness to fast Gaussian fluctuations of the system parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean_std, std_err};
use crate::error::{ensure, Result};
use crate::linalg::{identity, CMatrix};
use crate::metrics::{corrected_fidelity, fidelity_with_angles, TargetGate, VirtualZAngles};
use crate::pulses::PwcPulse;
use crate::qutrit::{PropagationOptions, SystemParams, TransmonPair, DIM_2Q, NUM_PARAMS};

/// Largest relative σ accepted unless explicitly overridden.
pub const MAX_NOISE_SIGMA: f64 = 0.03;
pub const DEFAULT_NOISE_SAMPLES: usize = 50;

fn default_samples() -> usize {
    DEFAULT_NOISE_SAMPLES
}

/// Every `dt` tick all nine parameters are redrawn as `p0 (1 + ε)`,
/// `ε ~ N(0, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Lifts the σ ≤ 3% guard.
    #[serde(default)]
    pub allow_large: bool,
}

impl NoiseSpec {
    pub fn new(sigma: f64) -> Self {
        Self { sigma, samples: DEFAULT_NOISE_SAMPLES, allow_large: false }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.sigma.is_finite() && self.sigma >= 0.0, Config, "noise sigma must be non-negative, got {}", self.sigma);
        ensure!(
            self.allow_large || self.sigma <= MAX_NOISE_SIGMA,
            Config,
            "noise sigma {} exceeds the {MAX_NOISE_SIGMA} guard; set allow_large to override",
            self.sigma
        );
        ensure!(self.samples >= 1, Config, "at least one noise sample is needed");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseResult {
    pub sigma: f64,
    /// Noise-free fidelity of the same tick-by-tick propagation.
    pub nominal: f64,
    /// Virtual-Z angles calibrated on the noise-free run and kept fixed
    /// for every noisy sample.
    pub angles: VirtualZAngles,
    pub fidelities: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl NoiseResult {
    pub fn std_err(&self) -> f64 {
        std_err(self.std, self.fidelities.len())
    }
}

/// Product of per-tick propagators, each on parameters `p0 (1 + σ z)`
/// with a fresh standard-normal `z` drawn from `rng`.
fn noisy_unitary(
    ticks: &PwcPulse,
    p0: &SystemParams,
    sigma: f64,
    rng: Option<&mut ChaCha8Rng>,
    opts: &PropagationOptions,
) -> Result<CMatrix> {
    let mut u = identity(DIM_2Q);
    let mut rng = rng;
    for k in 0..ticks.grid().segments() {
        let mut rel = [0.0; NUM_PARAMS];
        if let Some(r) = rng.as_deref_mut() {
            for e in rel.iter_mut() {
                let z: f64 = StandardNormal.sample(r);
                *e = sigma * z;
            }
        }
        let pair = TransmonPair::new(p0.perturbed(&rel))?;
        u = pair.segment_range_propagator(ticks, k..k + 1, opts)? * u;
    }
    Ok(u)
}

/// Per-sample RNG: one ChaCha stream per sample index, so results do not
/// depend on scheduling. Draws are standard normals scaled by σ, so runs
/// at different σ with the same seed share their random numbers.
fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Fidelity samples of `pulse` under per-tick parameter noise.
pub fn noisy_rollout(
    pulse: &PwcPulse,
    p0: &SystemParams,
    target: TargetGate,
    spec: &NoiseSpec,
    seed: u64,
    opts: &PropagationOptions,
) -> Result<NoiseResult> {
    spec.validate()?;
    ensure!(target.dim() == 4, Validation, "noise analysis needs a two-qubit target, got {}", target.name());
    let ticks = pulse.to_tick_grid();
    let t = target.matrix();
    let u0 = noisy_unitary(&ticks, p0, 0.0, None, opts)?;
    let angles = corrected_fidelity(&u0, &t)?.angles;
    let nominal = fidelity_with_angles(&u0, &t, angles)?;
    let fidelities = (0..spec.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let u = noisy_unitary(&ticks, p0, spec.sigma, Some(&mut rng), opts)?;
            fidelity_with_angles(&u, &t, angles)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_std(&fidelities);
    Ok(NoiseResult { sigma: spec.sigma, nominal, angles, fidelities, mean, std })
}

/// [`noisy_rollout`] at each σ with a shared seed.
pub fn noise_sweep(
    pulse: &PwcPulse,
    p0: &SystemParams,
    target: TargetGate,
    sigmas: &[f64],
    samples: usize,
    seed: u64,
    opts: &PropagationOptions,
) -> Result<Vec<NoiseResult>> {
    sigmas
        .iter()
        .map(|&sigma| noisy_rollout(pulse, p0, target, &NoiseSpec { sigma, samples, allow_large: false }, seed, opts))
        .collect()
}

/// Whether each mean is at most the previous one plus `k` combined
/// standard errors.
pub fn non_increasing_within(results: &[NoiseResult], k: f64) -> bool {
    results.windows(2).all(|w| {
        let se = w[0].std_err().hypot(w[1].std_err());
        w[1].mean <= w[0].mean + k * se
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{Channel, PulseGrid};
    use num_complex::Complex64;

    fn small_pulse() -> PwcPulse {
        let g = PulseGrid::new(4, 10).unwrap();
        let u01 = (0..4).map(|k| Complex64::new(0.2 + 0.05 * k as f64, 0.01)).collect();
        let d1 = vec![Complex64::new(0.01, -0.02); 4];
        PwcPulse::new(g, vec![(Channel::U01, u01), (Channel::D1, d1)]).unwrap()
    }

    #[test]
    fn zero_sigma_reproduces_the_nominal_fidelity() {
        let p0 = SystemParams::valencia();
        let r = noisy_rollout(&small_pulse(), &p0, TargetGate::Zx90, &NoiseSpec { sigma: 0.0, samples: 5, allow_large: false }, 3, &Default::default()).unwrap();
        assert!(r.fidelities.iter().all(|&f| f == r.nominal));
        assert_eq!(r.std, 0.0);
        // The tick-resolved product agrees with the run-exponentiated one.
        let u = TransmonPair::new(p0).unwrap().propagate(&small_pulse(), &Default::default()).unwrap().matrix;
        let f = fidelity_with_angles(&u, &TargetGate::Zx90.matrix(), r.angles).unwrap();
        assert!((f - r.nominal).abs() < 1e-12);
    }

    #[test]
    fn reproducible_and_seed_dependent() {
        let p0 = SystemParams::valencia();
        let spec = NoiseSpec { sigma: 0.02, samples: 4, allow_large: false };
        let a = noisy_rollout(&small_pulse(), &p0, TargetGate::Zx90, &spec, 7, &Default::default()).unwrap();
        let b = noisy_rollout(&small_pulse(), &p0, TargetGate::Zx90, &spec, 7, &Default::default()).unwrap();
        let c = noisy_rollout(&small_pulse(), &p0, TargetGate::Zx90, &spec, 8, &Default::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.fidelities, c.fidelities);
    }

    #[test]
    fn sigma_guard() {
        assert!(NoiseSpec::new(0.031).validate().is_err());
        assert!(NoiseSpec { allow_large: true, ..NoiseSpec::new(0.05) }.validate().is_ok());
        assert!(NoiseSpec::new(-0.01).validate().is_err());
    }
}
