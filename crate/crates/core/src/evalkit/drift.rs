//! Generalization of fixed pulses and trained agents to drifted systems,
//! binned by the largest relative drift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::mean_std;
use crate::error::{ensure, Error, Result};
use crate::gym::{param_group, rollout_from, EnvConfig, GateEnv};
use crate::metrics::{corrected_fidelity, TargetGate};
use crate::pulses::PwcPulse;
use crate::qutrit::{PropagationOptions, SystemParams, TransmonPair, NUM_PARAMS};
use crate::rl::Agent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSample {
    /// `Δp/p0` per parameter.
    pub rel: [f64; NUM_PARAMS],
    /// `max_k |Δp_k/p0_k|`.
    pub max_abs_drift: f64,
    /// The component attaining `max_abs_drift`, with its sign; samples are
    /// binned by this value.
    pub max_drift: f64,
    pub fidelity: f64,
}

impl DriftSample {
    pub fn new(rel: [f64; NUM_PARAMS], fidelity: f64) -> Self {
        let max_drift = rel.iter().copied().fold(0.0, |m: f64, r| if r.abs() > m.abs() { r } else { m });
        Self { rel, max_abs_drift: max_drift.abs(), max_drift, fidelity }
    }
}

/// What is evaluated on each drifted system.
#[derive(Debug, Clone, Copy)]
pub enum SolutionSource<'a> {
    /// A frozen pulse, propagated on the drifted parameters.
    Pulse { pulse: &'a PwcPulse, target: TargetGate, p0: SystemParams, propagation: PropagationOptions },
    /// The deterministic proposal of a trained agent interacting with the
    /// drifted environment (with context input if `env.context`).
    Agent { agent: &'a Agent, env: &'a EnvConfig },
}

impl SolutionSource<'_> {
    pub fn p0(&self) -> SystemParams {
        match self {
            SolutionSource::Pulse { p0, .. } => *p0,
            SolutionSource::Agent { env, .. } => env.p0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SolutionSource::Agent { agent, env } = self {
            env.validate()?;
            let expected = env.state_dim();
            if agent.state_dim != expected {
                let hint = if env.context && agent.state_dim + NUM_PARAMS == expected {
                    "; the agent was trained without context but context input was requested"
                } else if !env.context && agent.state_dim == expected + NUM_PARAMS {
                    "; the agent expects context input"
                } else {
                    ""
                };
                return Err(Error::Config(format!(
                    "agent takes {}-entry states, environment produces {expected}{hint}",
                    agent.state_dim
                )));
            }
            ensure!(
                agent.bounds.to_vec() == env.windows(),
                Config,
                "agent action windows {:?} differ from the environment's {:?}",
                agent.bounds.to_vec(),
                env.windows()
            );
        }
        Ok(())
    }

    /// Virtual-Z-corrected fidelity on `p0 ⊙ (1 + rel)`.
    pub fn fidelity(&self, rel: &[f64; NUM_PARAMS]) -> Result<f64> {
        let params = self.p0().perturbed(rel);
        match self {
            SolutionSource::Pulse { pulse, target, propagation, .. } => {
                let u = TransmonPair::new(params)?.propagate(pulse, propagation)?.matrix;
                Ok(corrected_fidelity(&u, &target.matrix())?.fidelity)
            }
            SolutionSource::Agent { agent, env } => {
                let mut gym = GateEnv::new((*env).clone(), 0)?;
                let s = gym.reset_with(params)?;
                Ok(rollout_from(&mut gym, s, |s| agent.act(s, None))?.fidelity.fidelity)
            }
        }
    }
}

/// Bins of equal width centered at `k·width`, `|k| ≤ half_bins`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinLayout {
    pub width: f64,
    pub half_bins: usize,
}

impl BinLayout {
    /// Bins of `width` covering `[−range, range]`.
    pub fn covering(range: f64, width: f64) -> Result<Self> {
        ensure!(width > 0.0 && width.is_finite(), Config, "bin width must be positive, got {width}");
        ensure!(range >= 0.0 && range < 1.0, Config, "drift range must lie in [0, 1), got {range}");
        Ok(Self { width, half_bins: (range / width).round() as usize })
    }

    pub fn len(&self) -> usize {
        2 * self.half_bins + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn center(&self, bin: usize) -> f64 {
        (bin as f64 - self.half_bins as f64) * self.width
    }

    /// Bin holding `x`, if inside the layout.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let k = (x / self.width).round();
        let idx = k + self.half_bins as f64;
        (idx >= 0.0 && idx < self.len() as f64).then_some(idx as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub center: f64,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftTable {
    pub kind: String,
    pub layout: BinLayout,
    pub rows: Vec<BinRow>,
    pub samples: Vec<DriftSample>,
}

impl DriftTable {
    /// Bins `samples` by their signed maximum drift; samples outside the
    /// layout are an error.
    pub fn from_samples(kind: &str, layout: BinLayout, samples: Vec<DriftSample>) -> Result<Self> {
        let mut groups: Vec<Vec<f64>> = vec![Vec::new(); layout.len()];
        for s in &samples {
            let b = layout
                .bin_of(s.max_drift)
                .ok_or_else(|| Error::Validation(format!("drift {} lies outside the binned range", s.max_drift)))?;
            groups[b].push(s.fidelity);
        }
        let rows = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_empty())
            .map(|(b, g)| {
                let (mean, std) = mean_std(g);
                BinRow { center: layout.center(b), mean, std, count: g.len() }
            })
            .collect();
        Ok(Self { kind: kind.into(), layout, rows, samples })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftSweepOptions {
    /// Parameter name or group (`detuning`, `anharmonicity`, `drive`,
    /// `coupling`, `all`).
    pub kind: String,
    pub range: f64,
    pub bin_width: f64,
    /// Samples in the central bin; the count ramps linearly to
    /// `edge_count` at `±range`.
    pub center_count: usize,
    pub edge_count: usize,
    pub seed: u64,
}

impl Default for DriftSweepOptions {
    fn default() -> Self {
        Self { kind: "all".into(), range: 0.07, bin_width: 0.002, center_count: 15, edge_count: 60, seed: 0 }
    }
}

impl DriftSweepOptions {
    pub fn layout(&self) -> Result<BinLayout> {
        BinLayout::covering(self.range, self.bin_width)
    }

    /// Samples to draw in `bin`.
    pub fn count(&self, layout: &BinLayout, bin: usize) -> usize {
        if layout.half_bins == 0 {
            return self.center_count;
        }
        let frac = (bin as f64 - layout.half_bins as f64).abs() / layout.half_bins as f64;
        (self.center_count as f64 + (self.edge_count as f64 - self.center_count as f64) * frac).round() as usize
    }
}

/// Parameters of `kind` that can drift; entries with `p0 = 0` (the frame
/// detuning) have no relative drift.
fn drifting_indices(kind: &str, p0: &SystemParams) -> Result<Vec<usize>> {
    let v = p0.to_vector();
    let idx: Vec<usize> = param_group(kind)?.into_iter().filter(|&k| v[k] != 0.0).collect();
    ensure!(!idx.is_empty(), Config, "no parameter of '{kind}' has a nonzero reference value");
    Ok(idx)
}

/// A drift whose signed maximum lies in `bin`: one component of `kind`
/// takes that maximum, the others are uniform within its magnitude.
fn draw_in_bin<R: Rng>(layout: &BinLayout, bin: usize, indices: &[usize], rng: &mut R) -> [f64; NUM_PARAMS] {
    let c = layout.center(bin);
    let (lo, hi) = (c - 0.5 * layout.width, c + 0.5 * layout.width);
    let m = loop {
        let m = rng.random_range(lo..hi);
        if layout.bin_of(m) == Some(bin) {
            break m;
        }
    };
    let mut rel = [0.0; NUM_PARAMS];
    let lead = indices[rng.random_range(0..indices.len())];
    for &k in indices {
        rel[k] = if k == lead || m == 0.0 { m } else { rng.random_range(-m.abs()..m.abs()) };
    }
    rel
}

/// Samples drifts of one kind bin by bin and evaluates `source` on each.
pub fn drift_sweep(source: &SolutionSource<'_>, opts: &DriftSweepOptions) -> Result<DriftTable> {
    source.validate()?;
    let layout = opts.layout()?;
    let indices = drifting_indices(&opts.kind, &source.p0())?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut drifts = Vec::new();
    for bin in 0..layout.len() {
        for _ in 0..opts.count(&layout, bin) {
            drifts.push(draw_in_bin(&layout, bin, &indices, &mut rng));
        }
    }
    let samples = drifts
        .into_par_iter()
        .map(|rel| Ok(DriftSample::new(rel, source.fidelity(&rel)?)))
        .collect::<Result<Vec<_>>>()?;
    DriftTable::from_samples(&opts.kind, layout, samples)
}
