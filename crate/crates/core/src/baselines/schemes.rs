//! Pulse construction and fast fidelity evaluation for the analytic
//! baseline schemes.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::linalg::CMatrix;
use crate::metrics::{corrected_fidelity, TargetGate, VirtualZResult};
use crate::optim::{Bounds, NelderMeadOptions};
use crate::pulses::{assemble_echoed, AnalyticWaveform, Channel, EchoLayout, PulseGrid, PwcPulse, DT_NS};
use crate::qutrit::{
    effective_zx_rate, Propagator, PropagationOptions, SingleTransmon, SystemParams, TransmonPair, MHZ_TO_RAD_PER_NS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Drag,
    Echoed,
    Direct,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Drag => "drag",
            Scheme::Echoed => "echoed",
            Scheme::Direct => "direct",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Scheme::Drag => &["amplitude", "beta"],
            Scheme::Echoed => &["cr_amplitude", "cancel_amplitude", "cr_phase", "cancel_phase"],
            Scheme::Direct => &[
                "cr_amplitude",
                "cancel_amplitude",
                "rotary_amplitude",
                "cr_phase",
                "cancel_phase",
                "rotary_phase",
            ],
        }
    }

    pub fn num_params(self) -> usize {
        self.param_names().len()
    }

    /// Indices optimized in each calibration stage.
    pub fn stages(self) -> Vec<Vec<usize>> {
        match self {
            Scheme::Drag => vec![vec![0, 1]],
            Scheme::Echoed => vec![vec![0, 1], vec![2, 3]],
            Scheme::Direct => vec![vec![0, 1, 2], vec![3, 4, 5]],
        }
    }

    pub fn default_target(self) -> TargetGate {
        match self {
            Scheme::Drag => TargetGate::Rx90,
            _ => TargetGate::Zx90,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "drag" => Ok(Scheme::Drag),
            "echoed" | "echo" => Ok(Scheme::Echoed),
            "direct" => Ok(Scheme::Direct),
            other => Err(Error::Config(format!("unknown scheme '{other}' (expected drag, echoed or direct)"))),
        }
    }
}

/// Waveform and optimizer settings. Widths are in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Gaussian width of the DRAG pulses.
    pub drag_sigma_ticks: usize,
    /// Gaussian width of the GaussianSquare flanks.
    pub cr_sigma_ticks: usize,
    /// Length of each GaussianSquare flank in units of its sigma.
    pub flank_sigmas: f64,
    /// Length of each π-pulse inside the echo.
    pub pi_ticks: usize,
    /// Transmon driven by single-qubit DRAG calibrations.
    pub drag_transmon: usize,
    /// Evaluations for the echo's π-pulse calibration.
    pub pi_budget: usize,
    /// Initial simplex size as a fraction of each parameter range.
    pub simplex_fraction: f64,
    /// Share of the budget spent on a final joint pass over all
    /// parameters after the staged passes; 0 disables it.
    pub polish_fraction: f64,
    /// Simplex size of the joint pass relative to the staged one.
    pub polish_step_scale: f64,
    pub beta_bound: f64,
    pub nelder_mead: NelderMeadOptions,
    pub propagation: PropagationOptions,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            drag_sigma_ticks: 40,
            cr_sigma_ticks: 64,
            flank_sigmas: 3.0,
            pi_ticks: 160,
            drag_transmon: 1,
            pi_budget: 600,
            simplex_fraction: 0.1,
            polish_fraction: 0.5,
            polish_step_scale: 0.1,
            beta_bound: 5.0,
            nelder_mead: NelderMeadOptions { ftol: 1e-12, xtol: 1e-9, ..NelderMeadOptions::default() },
            propagation: PropagationOptions::default(),
        }
    }
}

/// A scheme at a fixed duration on a fixed device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProblem {
    pub scheme: Scheme,
    pub target: TargetGate,
    pub duration_ticks: usize,
    pub system: SystemParams,
    pub config: BaselineConfig,
}

impl BaselineConfig {
    /// Defaults with the flank width suited to each scheme: the echo packs
    /// two flanked halves and two π-pulses into the gate, so its flanks are
    /// half as wide.
    pub fn for_scheme(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Echoed => Self { cr_sigma_ticks: 32, ..Self::default() },
            Scheme::Drag | Scheme::Direct => Self::default(),
        }
    }
}

impl CalibrationProblem {
    pub fn new(scheme: Scheme, duration_ticks: usize, system: SystemParams) -> Self {
        Self { scheme, target: scheme.default_target(), duration_ticks, system, config: BaselineConfig::for_scheme(scheme) }
    }

    pub fn duration_ns(&self) -> f64 {
        self.duration_ticks as f64 * DT_NS
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.target.dim() == if self.scheme == Scheme::Drag { 2 } else { 4 },
            Validation,
            "target {} does not match scheme {}",
            self.target,
            self.scheme
        );
        ensure!(self.config.simplex_fraction > 0.0, Validation, "simplex fraction must be positive");
        ensure!(
            (0.0..1.0).contains(&self.config.polish_fraction),
            Validation,
            "polish fraction must lie in [0, 1), got {}",
            self.config.polish_fraction
        );
        ensure!(self.config.flank_sigmas > 0.0, Validation, "flank length must be positive");
        ensure!(self.config.drag_transmon < 2, Validation, "drag_transmon must be 0 or 1");
        let min = match self.scheme {
            Scheme::Drag => 1,
            Scheme::Direct => (2.0 * self.config.flank_sigmas * self.config.cr_sigma_ticks as f64).ceil() as usize,
            Scheme::Echoed => {
                2 * self.config.pi_ticks + 2 * (2.0 * self.config.flank_sigmas * self.config.cr_sigma_ticks as f64).ceil() as usize
            }
        };
        ensure!(
            self.duration_ticks >= min,
            Validation,
            "{} needs at least {min} ticks with the configured widths, got {}",
            self.scheme,
            self.duration_ticks
        );
        if self.scheme == Scheme::Echoed {
            EchoLayout::for_total(self.duration_ticks, self.config.pi_ticks)?;
        }
        Ok(())
    }

    pub fn bounds(&self) -> Bounds {
        let n = self.scheme.num_params();
        let (mut lower, mut upper) = (vec![-1.0; n], vec![1.0; n]);
        match self.scheme {
            Scheme::Drag => {
                lower[1] = -self.config.beta_bound;
                upper[1] = self.config.beta_bound;
            }
            _ => {
                for k in n / 2..n {
                    lower[k] = -PI;
                    upper[k] = PI;
                }
            }
        }
        Bounds { lower, upper }
    }

    /// Initial simplex steps: a fixed fraction of each range.
    pub fn steps(&self) -> Vec<f64> {
        let b = self.bounds();
        b.lower.iter().zip(&b.upper).map(|(l, u)| self.config.simplex_fraction * (u - l)).collect()
    }

    fn sigma_ns(&self, ticks: usize) -> f64 {
        ticks as f64 * DT_NS
    }

    /// Physics-informed starting point. DRAG starts from the area rule; the
    /// cross-resonance schemes from the block-diagonalized ZX and IX rates.
    pub fn initial_guess(&self) -> Result<Vec<f64>> {
        match self.scheme {
            Scheme::Drag => {
                let p = self.system.transmon(self.config.drag_transmon);
                let angle = rotation_angle(self.target);
                Ok(vec![drag_area_amplitude(&p.drive_strength, angle, self.duration_ticks, self.config.drag_sigma_ticks)?, 0.0])
            }
            Scheme::Direct | Scheme::Echoed => {
                // Rates are close to linear in the drive below ~60 MHz.
                let probe = 40.0;
                let rate = effective_zx_rate(&self.system, probe)?;
                let cr_ticks = match self.scheme {
                    Scheme::Echoed => 2 * EchoLayout::for_total(self.duration_ticks, self.config.pi_ticks)?.half_ticks,
                    _ => self.duration_ticks,
                };
                let half = if self.scheme == Scheme::Echoed { cr_ticks / 2 } else { cr_ticks };
                let shape = self.square(1.0, 0.0, false);
                let area: f64 = shape.discretize(half)?.iter().map(|a| a.re).sum::<f64>() * DT_NS;
                let area = area * (cr_ticks / half) as f64;
                let zx_per_mhz = rate.omega_zx_mhz / probe * MHZ_TO_RAD_PER_NS;
                ensure!(zx_per_mhz != 0.0, Numerical, "no ZX interaction for this device");
                let omega = FRAC_PI_2 / (zx_per_mhz * area);
                let cr = omega / self.system.omega_u01;
                let cancel = Complex64::new(-rate.omega_ix_mhz, rate.omega_iy_mhz) * (omega / probe / self.system.omega_d1);
                let (ca, cp) = signed_polar(cancel);
                let mut x = match self.scheme {
                    Scheme::Echoed => vec![cr, ca, 0.0, cp],
                    _ => vec![cr, ca, 0.0, 0.0, cp, 0.0],
                };
                let b = self.bounds();
                b.project(&mut x);
                Ok(x)
            }
        }
    }

    /// Pulse for a parameter vector, on a per-tick grid.
    pub fn build_pulse(&self, x: &[f64]) -> Result<PwcPulse> {
        ensure!(
            x.len() == self.scheme.num_params(),
            Validation,
            "{} takes {} parameters, got {}",
            self.scheme,
            self.scheme.num_params(),
            x.len()
        );
        let grid = PulseGrid::per_tick(self.duration_ticks)?;
        match self.scheme {
            Scheme::Drag => {
                let w = self.drag_waveform(x);
                let ch = if self.config.drag_transmon == 0 { Channel::D0 } else { Channel::D1 };
                PwcPulse::new(grid, vec![(ch, w.discretize(self.duration_ticks)?)])
            }
            Scheme::Direct => {
                let cr = self.square(x[0], x[3], false);
                let cancel = self.square(x[1], x[4], false).discretize(self.duration_ticks)?;
                let rotary = self.square(x[2], x[5], true).discretize(self.duration_ticks)?;
                let d1: Vec<Complex64> = cancel.iter().zip(&rotary).map(|(a, b)| a + b).collect();
                if let Some(k) = d1.iter().position(|a| a.re.abs() > 1.0 || a.im.abs() > 1.0) {
                    return Err(Error::Validation(format!("cancellation plus rotary tone leaves the unit box at tick {k}")));
                }
                PwcPulse::new(grid, vec![(Channel::U01, cr.discretize(self.duration_ticks)?), (Channel::D1, d1)])
            }
            Scheme::Echoed => Err(Error::Contract(
                "echoed pulses need a calibrated π-pulse; use SchemeEvaluator::build_pulse".into(),
            )),
        }
    }

    fn square(&self, amplitude: f64, phase: f64, antisymmetric: bool) -> AnalyticWaveform {
        AnalyticWaveform::GaussianSquare {
            amplitude: Complex64::from_polar(1.0, phase) * amplitude,
            sigma_ns: self.sigma_ns(self.config.cr_sigma_ticks),
            antisymmetric,
            flank_sigmas: self.config.flank_sigmas,
        }
    }

    fn drag_waveform(&self, x: &[f64]) -> AnalyticWaveform {
        AnalyticWaveform::DragPair {
            amplitude: Complex64::new(x[0], 0.0),
            sigma_ns: self.sigma_ns(self.config.drag_sigma_ticks),
            beta: x[1],
        }
    }
}

fn rotation_angle(target: TargetGate) -> f64 {
    match target {
        TargetGate::Rx180 => PI,
        _ => FRAC_PI_2,
    }
}

/// Amplitude of a lifted-Gaussian pulse whose area gives `angle`.
fn drag_area_amplitude(drive_mhz: &f64, angle: f64, ticks: usize, sigma_ticks: usize) -> Result<f64> {
    let g = AnalyticWaveform::Gaussian { amplitude: Complex64::new(1.0, 0.0), sigma_ns: sigma_ticks as f64 * DT_NS };
    let area: f64 = g.discretize(ticks)?.iter().map(|a| a.re).sum::<f64>() * DT_NS;
    Ok((angle / (drive_mhz * MHZ_TO_RAD_PER_NS * area)).clamp(-1.0, 1.0))
}

/// `(a, φ)` with `a·e^{iφ} = z` and `|φ| ≤ π/2`.
fn signed_polar(z: Complex64) -> (f64, f64) {
    if z.norm() == 0.0 {
        return (0.0, 0.0);
    }
    let (r, phi) = z.to_polar();
    if phi.abs() <= FRAC_PI_2 {
        (r, phi)
    } else {
        (-r, phi - PI * phi.signum())
    }
}


/// Result of one fidelity evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub unitary: CMatrix,
    pub fidelity: VirtualZResult,
}

/// Evaluates parameter vectors of one problem, caching everything that does
/// not depend on them (the echo's π-pulse propagators in particular).
#[derive(Debug, Clone)]
pub struct SchemeEvaluator {
    problem: CalibrationProblem,
    target: CMatrix,
    pair: Option<TransmonPair>,
    echo: Option<EchoCache>,
}

#[derive(Debug, Clone)]
struct EchoCache {
    layout: EchoLayout,
    pi_pulse: AnalyticWaveform,
    pi_fidelity: f64,
    /// π-pulse propagators starting after the first and second CR half.
    pi_props: [CMatrix; 2],
}

impl SchemeEvaluator {
    pub fn new(problem: CalibrationProblem) -> Result<Self> {
        problem.validate()?;
        let target = problem.target.matrix();
        let (pair, echo) = match problem.scheme {
            Scheme::Drag => (None, None),
            Scheme::Direct => (Some(TransmonPair::new(problem.system)?), None),
            Scheme::Echoed => {
                let pair = TransmonPair::new(problem.system)?;
                let echo = EchoCache::build(&problem, &pair)?;
                (Some(pair), Some(echo))
            }
        };
        Ok(Self { problem, target, pair, echo })
    }

    pub fn problem(&self) -> &CalibrationProblem {
        &self.problem
    }

    /// The calibrated π-pulse of an echoed scheme and its single-qubit
    /// fidelity.
    pub fn pi_pulse(&self) -> Option<(AnalyticWaveform, f64)> {
        self.echo.as_ref().map(|e| (e.pi_pulse, e.pi_fidelity))
    }

    pub fn build_pulse(&self, x: &[f64]) -> Result<PwcPulse> {
        match &self.echo {
            Some(e) => {
                ensure!(x.len() == 4, Validation, "echoed takes 4 parameters, got {}", x.len());
                let p = &self.problem;
                assemble_echoed(&p.square(x[0], x[2], false), &p.square(x[1], x[3], false), &e.pi_pulse, e.layout)
            }
            None => self.problem.build_pulse(x),
        }
    }

    /// Qutrit propagator of the pulse for `x` (3×3 or 9×9).
    pub fn unitary(&self, x: &[f64]) -> Result<CMatrix> {
        let pulse = self.build_pulse(x)?;
        match (&self.pair, &self.echo) {
            (None, _) => {
                let p = &self.problem;
                let transmon = SingleTransmon::new(p.system.transmon(p.config.drag_transmon), pulse.channels()[0].0);
                Ok(transmon.propagate(&pulse)?.matrix)
            }
            (Some(pair), None) => Ok(pair.propagate(&pulse, &self.problem.config.propagation)?.matrix),
            (Some(pair), Some(e)) => e.propagate(pair, &pulse, &self.problem.config.propagation),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        let unitary = self.unitary(x)?;
        let fidelity = corrected_fidelity(&unitary, &self.target)?;
        Ok(Evaluation { unitary, fidelity })
    }

    /// Virtual-Z corrected infidelity; invalid points score 1.
    pub fn cost(&self, x: &[f64]) -> f64 {
        match self.evaluate(x) {
            Ok(e) if e.fidelity.fidelity.is_finite() => 1.0 - e.fidelity.fidelity,
            _ => 1.0,
        }
    }
}

impl EchoCache {
    fn build(problem: &CalibrationProblem, pair: &TransmonPair) -> Result<Self> {
        let cfg = &problem.config;
        let layout = EchoLayout::for_total(problem.duration_ticks, cfg.pi_ticks)?;
        // X(π) on the control, calibrated in the control's own frame.
        let pi_problem = CalibrationProblem {
            scheme: Scheme::Drag,
            target: TargetGate::Rx180,
            duration_ticks: cfg.pi_ticks,
            system: problem.system,
            config: BaselineConfig { drag_transmon: 0, ..*cfg },
        };
        let mut own_frame = pi_problem.clone();
        own_frame.system.delta0 = 0.0;
        let pi_eval = SchemeEvaluator::new(own_frame)?;
        let pi_cal = super::calibrate::calibrate_with(&pi_eval, &pi_eval.problem.initial_guess()?, cfg.pi_budget)?;
        let pi_pulse = pi_problem.drag_waveform(&pi_cal.params);
        let samples = pi_pulse.discretize(cfg.pi_ticks)?;
        let mut pi_props = Vec::with_capacity(2);
        for start in [layout.half_ticks, 2 * layout.half_ticks + cfg.pi_ticks] {
            // Zero pulse up to `start`, then the π-pulse, so each block is
            // propagated with its absolute frame phase.
            let mut d0 = vec![Complex64::new(0.0, 0.0); start];
            d0.extend_from_slice(&samples);
            let pulse = PwcPulse::new(PulseGrid::per_tick(start + cfg.pi_ticks)?, vec![(Channel::D0, d0)])?;
            let segs = pair.segment_propagators_from(&pulse, start, &cfg.propagation)?;
            let mut u = Propagator::identity(pair.dim(), 0.0);
            for s in &segs {
                u = u.then(s);
            }
            pi_props.push(u.matrix);
        }
        let [a, b]: [CMatrix; 2] = pi_props.try_into().expect("two blocks");
        Ok(Self { layout, pi_pulse, pi_fidelity: pi_cal.fidelity, pi_props: [a, b] })
    }

    fn propagate(&self, pair: &TransmonPair, pulse: &PwcPulse, opts: &PropagationOptions) -> Result<CMatrix> {
        let h = self.layout.half_ticks;
        let p = self.layout.pi_ticks;
        let first = pair.segment_range_propagator(pulse, 0..h, opts)?;
        let second = pair.segment_range_propagator(pulse, h + p..2 * h + p, opts)?;
        Ok(&self.pi_props[1] * second * &self.pi_props[0] * first)
    }
}
