//! Environment configuration, drift modes and the standard presets.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::metrics::TargetGate;
use crate::pulses::{Channel, DriveSet, PulseGrid};
use crate::qutrit::{PropagationOptions, SystemParams, NUM_PARAMS, PARAM_NAMES};
use crate::rl::AgentConfig;

/// Indices into the parameter vector for a name from [`PARAM_NAMES`] or
/// one of the groups `detuning`, `anharmonicity`, `drive`, `coupling`,
/// `all`.
pub fn param_group(name: &str) -> Result<Vec<usize>> {
    Ok(match name {
        "detuning" => vec![4, 5],
        "anharmonicity" => vec![6, 7],
        "drive" => vec![0, 1, 2, 3],
        "coupling" => vec![8],
        "all" => (0..NUM_PARAMS).collect(),
        other => vec![PARAM_NAMES
            .iter()
            .position(|n| *n == other)
            .ok_or_else(|| Error::Config(format!("unknown system parameter or group '{other}'")))?],
    })
}

/// How system parameters are drawn at each reset, relative to `p0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftMode {
    #[default]
    Fixed,
    /// Each listed parameter drifts by `U(−range, range)`.
    Uniform { params: Vec<String>, range: f64 },
    /// Every parameter drifts by `N(0, σ²)`.
    Normal { sigma: f64 },
}

impl DriftMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            DriftMode::Fixed => Ok(()),
            DriftMode::Uniform { params, range } => {
                ensure!(!params.is_empty(), Config, "uniform drift needs at least one parameter");
                ensure!(*range >= 0.0 && *range < 1.0, Config, "drift range must lie in [0, 1), got {range}");
                params.iter().try_for_each(|p| param_group(p).map(|_| ()))
            }
            DriftMode::Normal { sigma } => {
                ensure!(*sigma >= 0.0 && *sigma < 0.5, Config, "drift sigma must lie in [0, 0.5), got {sigma}");
                Ok(())
            }
        }
    }

    /// Relative drift `Δp/p0`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<[f64; NUM_PARAMS]> {
        let mut rel = [0.0; NUM_PARAMS];
        match self {
            DriftMode::Fixed => {}
            DriftMode::Uniform { params, range } => {
                for name in params {
                    for k in param_group(name)? {
                        rel[k] = if *range > 0.0 { rng.random_range(-range..=*range) } else { 0.0 };
                    }
                }
            }
            DriftMode::Normal { sigma } => {
                let n = Normal::new(0.0, *sigma).map_err(|e| Error::Config(e.to_string()))?;
                for r in rel.iter_mut() {
                    *r = n.sample(rng);
                }
            }
        }
        Ok(rel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub target: TargetGate,
    pub duration_ns: f64,
    pub segments: usize,
    pub drives: DriveSet,
    /// Per-step window of the cross-resonance channels.
    pub window_u: f64,
    /// Per-step window of the on-resonance channels.
    pub window_d: f64,
    #[serde(default)]
    pub drift: DriftMode,
    /// Relative offset added to every drift draw, so the distribution is
    /// centered at `p0 ⊙ (1 + drift_center)` while the context stays
    /// relative to `p0`.
    #[serde(default)]
    pub drift_center: [f64; NUM_PARAMS],
    /// Append `Δp/p0` to the observation.
    #[serde(default)]
    pub context: bool,
    #[serde(default = "SystemParams::valencia")]
    pub p0: SystemParams,
    #[serde(default)]
    pub propagation: PropagationOptions,
}

/// Observation entries contributed by the tracked basis states.
pub const BASIS_STATE_ENTRIES: usize = 2 * 4 * 9;

impl EnvConfig {
    /// `IX(π/2)` with `d1` alone, 9 segments over 10 ns.
    pub fn ix90() -> Self {
        Self {
            target: TargetGate::Ix90,
            duration_ns: 10.0,
            segments: 9,
            drives: DriveSet::single(Channel::D1),
            window_u: 0.4,
            window_d: 0.13,
            drift: DriftMode::Fixed,
            drift_center: [0.0; NUM_PARAMS],
            context: false,
            p0: SystemParams::valencia(),
            propagation: PropagationOptions::default(),
        }
    }

    /// Two drives `(u01, d1)`, 20 segments; windows 0.1/0.01 from
    /// 248.9 ns up and 0.2/0.02 below.
    pub fn fixed(target: TargetGate, duration_ns: f64) -> Self {
        let (window_u, window_d) = if duration_ns >= 248.8 { (0.1, 0.01) } else { (0.2, 0.02) };
        Self { target, duration_ns, segments: 20, drives: DriveSet::two_drive(), window_u, window_d, ..Self::ix90() }
    }

    /// 248.9 ns CNOT with the detuning drifting uniformly by ±5%.
    pub fn drifting_detuning(context: bool) -> Self {
        Self {
            drift: DriftMode::Uniform { params: vec!["detuning".into()], range: 0.05 },
            context,
            ..Self::fixed(TargetGate::Cnot, 248.9)
        }
    }

    /// 248.9 ns CNOT, 28 segments, every parameter drifting by N(0, 2%).
    pub fn drifting_all(context: bool) -> Self {
        Self { segments: 28, drift: DriftMode::Normal { sigma: 0.02 }, context, ..Self::fixed(TargetGate::Cnot, 248.9) }
    }

    /// Three drives `(d0, u01, d1)`; windows 0.1/0.01 from 248.9 ns up,
    /// 0.15/0.015 below.
    pub fn three_drive(target: TargetGate, duration_ns: f64) -> Self {
        let (window_u, window_d) = if duration_ns >= 248.8 { (0.1, 0.01) } else { (0.15, 0.015) };
        Self { drives: DriveSet::three_drive(), window_u, window_d, ..Self::fixed(target, duration_ns) }
    }

    /// Named presets: `ix90`, `zx90@248.9`, `cnot@177.7`,
    /// `zx90-3drive@177.8`, `cnot-drift-detuning`, `cnot-drift-all`
    /// (append `+context` to the drift presets).
    pub fn preset(name: &str) -> Result<Self> {
        let (base, context) = match name.strip_suffix("+context") {
            Some(b) => (b, true),
            None => (name, false),
        };
        match base {
            "ix90" => return Ok(Self::ix90()),
            "cnot-drift-detuning" => return Ok(Self::drifting_detuning(context)),
            "cnot-drift-all" => return Ok(Self::drifting_all(context)),
            _ => {}
        }
        let (head, duration) = base
            .split_once('@')
            .ok_or_else(|| Error::Config(format!("unknown environment preset '{name}'")))?;
        let duration: f64 = duration.parse().map_err(|_| Error::Config(format!("bad duration in preset '{name}'")))?;
        let (gate, three) = match head.strip_suffix("-3drive") {
            Some(g) => (g, true),
            None => (head, false),
        };
        let target = match gate {
            "zx90" => TargetGate::Zx90,
            "cnot" => TargetGate::Cnot,
            other => return Err(Error::Config(format!("preset target must be zx90 or cnot, got '{other}'"))),
        };
        let cfg = if three { Self::three_drive(target, duration) } else { Self::fixed(target, duration) };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            matches!(self.target, TargetGate::Ix90 | TargetGate::Zx90 | TargetGate::Cnot),
            Config,
            "environment target must be ix90, zx90 or cnot, got {}",
            self.target.name()
        );
        for w in [self.window_u, self.window_d] {
            ensure!(w > 0.0 && w <= 1.0, Config, "action windows must lie in (0, 1], got {w}");
        }
        self.grid()?;
        self.drift.validate()?;
        ensure!(
            self.drift_center.iter().all(|c| c.is_finite() && c.abs() < 1.0),
            Config,
            "drift center entries must lie in (-1, 1), got {:?}",
            self.drift_center
        );
        self.p0.validate(Default::default())
    }

    pub fn grid(&self) -> Result<PulseGrid> {
        PulseGrid::from_duration(self.duration_ns, self.segments).map_err(|e| Error::Config(e.to_string()))
    }

    /// Window of each action component, two per drive.
    pub fn windows(&self) -> Vec<f64> {
        self.drives
            .channels()
            .iter()
            .flat_map(|ch| {
                let w = if ch.is_cross_resonance() { self.window_u } else { self.window_d };
                [w, w]
            })
            .collect()
    }

    pub fn state_dim(&self) -> usize {
        BASIS_STATE_ENTRIES + 2 * self.drives.len() + if self.context { NUM_PARAMS } else { 0 }
    }

    /// Learner settings from the matching column of the reference table.
    pub fn recommended_agent(&self) -> AgentConfig {
        let hidden = if self.target == TargetGate::Ix90 {
            vec![100, 200, 100]
        } else if self.drift != DriftMode::Fixed || self.drift_center != [0.0; NUM_PARAMS] {
            vec![800, 800, 800]
        } else {
            vec![800, 400, 200]
        };
        AgentConfig { hidden, ..AgentConfig::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_split_into_whole_ticks() {
        for name in [
            "ix90",
            "zx90@320",
            "zx90@284.4",
            "zx90@248.9",
            "cnot@213.3",
            "cnot@177.7",
            "cnot@142.2",
            "zx90-3drive@248.9",
            "cnot-3drive@177.8",
            "cnot-drift-detuning",
            "cnot-drift-all+context",
        ] {
            let cfg = EnvConfig::preset(name).unwrap();
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn table_windows_and_dimensions() {
        let c = EnvConfig::preset("zx90@248.9").unwrap();
        assert_eq!(c.windows(), vec![0.1, 0.1, 0.01, 0.01]);
        assert_eq!(c.state_dim(), 72 + 4);
        let c = EnvConfig::preset("cnot@177.7").unwrap();
        assert_eq!((c.window_u, c.window_d), (0.2, 0.02));
        let c = EnvConfig::preset("cnot-3drive@177.8").unwrap();
        assert_eq!(c.windows(), vec![0.015, 0.015, 0.15, 0.15, 0.015, 0.015]);
        let c = EnvConfig::preset("cnot-drift-all+context").unwrap();
        assert_eq!((c.segments, c.state_dim()), (28, 72 + 4 + 9));
        assert_eq!(EnvConfig::ix90().windows(), vec![0.13, 0.13]);
    }

    #[test]
    fn unknown_presets_are_config_errors() {
        for bad in ["zz@248.9", "cnot@abc", "nothing"] {
            assert!(matches!(EnvConfig::preset(bad), Err(Error::Config(_))));
        }
        assert!(matches!(EnvConfig::preset("cnot@100.1"), Err(Error::Config(_))));
    }

    #[test]
    fn json_round_trip() {
        let c = EnvConfig::drifting_detuning(true);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<EnvConfig>(&text).unwrap(), c);
    }
}
