//! Nelder-Mead calibration of the baseline schemes and duration sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::schemes::{CalibrationProblem, Scheme, SchemeEvaluator};
use crate::error::{ensure, Result};
use crate::metrics::{TargetGate, VirtualZAngles};
use crate::optim::{minimize, Bounds, NelderMeadOptions};
use crate::pulses::{PulseFile, PwcPulse, DT_NS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub scheme: Scheme,
    pub params: Vec<f64>,
    /// Virtual-Z corrected average gate fidelity.
    pub fidelity: f64,
    pub uncorrected_fidelity: f64,
    pub virtual_z: VirtualZAngles,
    pub evaluations: usize,
    /// Fidelity of every evaluation, in order.
    pub trace: Vec<f64>,
    /// Some stage ended without meeting the tolerances.
    pub unconverged: bool,
}

/// Staged calibration (amplitudes, then phases, then an optional joint
/// pass) within `budget` evaluations, from the physics-informed initial
/// guess.
pub fn calibrate(problem: &CalibrationProblem, budget: usize) -> Result<CalibrationResult> {
    let eval = SchemeEvaluator::new(problem.clone())?;
    calibrate_with(&eval, &problem.initial_guess()?, budget)
}

/// Calibration from an explicit starting point, reusing an evaluator.
pub fn calibrate_with(eval: &SchemeEvaluator, x0: &[f64], budget: usize) -> Result<CalibrationResult> {
    ensure!(budget >= 1, Validation, "calibration budget must be at least one evaluation");
    let problem = eval.problem();
    let scheme = problem.scheme;
    ensure!(x0.len() == scheme.num_params(), Validation, "{scheme} takes {} parameters", scheme.num_params());
    let bounds = problem.bounds();
    let steps = problem.steps();
    let mut stages: Vec<(Vec<usize>, f64)> = scheme.stages().into_iter().map(|st| (st, 1.0)).collect();
    let polish = problem.config.polish_fraction;
    let staged_budget = if polish > 0.0 && stages.len() > 1 {
        stages.push(((0..scheme.num_params()).collect(), problem.config.polish_step_scale));
        ((1.0 - polish) * budget as f64).round() as usize
    } else {
        budget
    };
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut trace = Vec::new();
    let mut used = 0;
    let mut unconverged = false;
    let staged = if stages.len() > scheme.stages().len() { stages.len() - 1 } else { stages.len() };
    for (k, (stage, scale)) in stages.iter().enumerate() {
        let remaining = budget.saturating_sub(used);
        if remaining == 0 {
            break;
        }
        // Staged passes split their share evenly; the last pass takes
        // whatever is left.
        let share = if k + 1 == stages.len() {
            remaining
        } else {
            (staged_budget.saturating_sub(used) / (staged - k)).min(remaining)
        };
        let sub_bounds = Bounds {
            lower: stage.iter().map(|&i| bounds.lower[i]).collect(),
            upper: stage.iter().map(|&i| bounds.upper[i]).collect(),
        };
        let sub_steps: Vec<f64> = stage.iter().map(|&i| scale * steps[i]).collect();
        let sub_x0: Vec<f64> = stage.iter().map(|&i| x[i]).collect();
        let opts = NelderMeadOptions { max_evals: share.max(1), ..problem.config.nelder_mead };
        let base = x.clone();
        let res = minimize(
            |y| {
                let mut full = base.clone();
                for (j, &i) in stage.iter().enumerate() {
                    full[i] = y[j];
                }
                eval.cost(&full)
            },
            &sub_x0,
            &sub_steps,
            Some(&sub_bounds),
            &opts,
        );
        for (j, &i) in stage.iter().enumerate() {
            x[i] = res.x[j];
        }
        used += res.evals;
        unconverged |= !res.converged;
        trace.extend(res.trace.iter().map(|c| 1.0 - c));
    }
    let best = eval.evaluate(&x)?;
    log::debug!("{scheme} calibrated to {:.6} in {used} evaluations", best.fidelity.fidelity);
    Ok(CalibrationResult {
        scheme,
        params: x,
        fidelity: best.fidelity.fidelity,
        uncorrected_fidelity: best.fidelity.uncorrected,
        virtual_z: best.fidelity.angles,
        evaluations: used,
        trace,
        unconverged,
    })
}

/// `k` calibrations: the physics-informed start, then starts drawn
/// uniformly within ±`spread` of each parameter range around it. Returns
/// all runs, best first.
pub fn calibrate_restarts(problem: &CalibrationProblem, budget: usize, k: usize, spread: f64, seed: u64) -> Result<Vec<CalibrationResult>> {
    ensure!(k >= 1, Validation, "need at least one calibration run");
    let eval = SchemeEvaluator::new(problem.clone())?;
    let guess = problem.initial_guess()?;
    let bounds = problem.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::with_capacity(k);
    for run in 0..k {
        let mut x0 = guess.clone();
        if run > 0 {
            for (i, v) in x0.iter_mut().enumerate() {
                let width = bounds.upper[i] - bounds.lower[i];
                *v += spread * width * rng.random_range(-1.0..=1.0);
            }
            bounds.project(&mut x0);
        }
        runs.push(calibrate_with(&eval, &x0, budget)?);
    }
    runs.sort_by(|a, b| b.fidelity.total_cmp(&a.fidelity));
    Ok(runs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    /// Calibrations per duration.
    pub restarts: usize,
    /// Evaluations per calibration.
    pub budget: usize,
    /// Half-width of the random starts, as a fraction of each range.
    pub spread: f64,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { restarts: 12, budget: 1500, spread: 0.05, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub duration_ticks: usize,
    pub duration_ns: f64,
    pub best_fidelity: f64,
    pub best_params: Vec<f64>,
    pub fidelities: Vec<f64>,
}

/// Best-of-k calibrated fidelity for each duration (in ticks).
pub fn duration_sweep(template: &CalibrationProblem, durations: &[usize], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(durations.len());
    for (i, &ticks) in durations.iter().enumerate() {
        let problem = CalibrationProblem { duration_ticks: ticks, ..template.clone() };
        let runs = calibrate_restarts(&problem, opts.budget, opts.restarts, opts.spread, opts.seed.wrapping_add(i as u64))?;
        log::info!("{} at {:.1} ns: best {:.6}", problem.scheme, problem.duration_ns(), runs[0].fidelity);
        rows.push(SweepRow {
            duration_ticks: ticks,
            duration_ns: ticks as f64 * DT_NS,
            best_fidelity: runs[0].fidelity,
            best_params: runs[0].params.clone(),
            fidelities: runs.iter().map(|r| r.fidelity).collect(),
        });
    }
    Ok(rows)
}

/// Shortest duration from which every longer swept duration stays at or
/// above `threshold`; `None` if the longest one misses it.
pub fn threshold_crossing(rows: &[SweepRow], threshold: f64) -> Option<f64> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.duration_ticks);
    let mut crossing = None;
    for r in sorted.iter().rev() {
        if r.best_fidelity >= threshold {
            crossing = Some(r.duration_ns);
        } else {
            break;
        }
    }
    crossing
}

/// Everything needed to reproduce and audit a calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub scheme: Scheme,
    pub target: TargetGate,
    pub duration_ticks: usize,
    pub duration_ns: f64,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub fidelity: f64,
    pub uncorrected_fidelity: f64,
    pub virtual_z: VirtualZAngles,
    pub evaluations: usize,
    pub unconverged: bool,
    pub problem: CalibrationProblem,
}

impl CalibrationReport {
    pub fn new(problem: &CalibrationProblem, result: &CalibrationResult) -> Self {
        Self {
            scheme: problem.scheme,
            target: problem.target,
            duration_ticks: problem.duration_ticks,
            duration_ns: problem.duration_ns(),
            param_names: problem.scheme.param_names().iter().map(|s| s.to_string()).collect(),
            params: result.params.clone(),
            fidelity: result.fidelity,
            uncorrected_fidelity: result.uncorrected_fidelity,
            virtual_z: result.virtual_z,
            evaluations: result.evaluations,
            unconverged: result.unconverged,
            problem: problem.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Calibrated pulse with the report's key numbers attached as metadata.
pub fn calibrated_pulse_file(pulse: &PwcPulse, report: &CalibrationReport) -> PulseFile {
    PulseFile::from_pulse(pulse)
        .with_metadata("scheme", serde_json::json!(report.scheme))
        .with_metadata("target", serde_json::json!(report.target.name()))
        .with_metadata("fidelity", serde_json::json!(report.fidelity))
        .with_metadata("virtual_z", serde_json::json!(report.virtual_z))
}
