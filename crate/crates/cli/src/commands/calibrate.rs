use anyhow::Result;
use serde::{Deserialize, Serialize};

use pulseforge::baselines::{calibrate_restarts, calibrated_pulse_file, CalibrationProblem, CalibrationReport, Scheme, SchemeEvaluator};
use pulseforge::metrics::TargetGate;
use pulseforge::pulses::duration_to_ticks;

use super::{system, Ctx};
use crate::config::{ConfigError, WaveformOverrides};
use crate::report::Run;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    pub scheme: Scheme,
    /// Defaults to 35.6 ns for DRAG and 248.9 ns otherwise.
    pub duration_ns: Option<f64>,
    pub target: Option<TargetGate>,
    pub budget: usize,
    pub restarts: usize,
    pub spread: f64,
    pub seed: u64,
    pub threshold: Option<f64>,
    /// Fields replacing the Valencia parameters.
    pub system: Option<serde_json::Value>,
    pub waveform: WaveformOverrides,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Direct,
            duration_ns: None,
            target: None,
            budget: 1500,
            restarts: 1,
            spread: 0.05,
            seed: 0,
            threshold: None,
            system: None,
            waveform: WaveformOverrides::default(),
        }
    }
}

pub fn default_duration_ns(scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Drag => 35.6,
        _ => 248.9,
    }
}

pub fn default_threshold(scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Drag => 0.999,
        Scheme::Direct => 0.998,
        Scheme::Echoed => 0.993,
    }
}

/// The calibration problem described by a config table.
pub fn problem(scheme: Scheme, duration_ns: f64, target: Option<TargetGate>, sys: Option<&serde_json::Value>, waveform: &WaveformOverrides) -> Result<CalibrationProblem> {
    let ticks = duration_to_ticks(duration_ns).map_err(|e| ConfigError(e.to_string()))?;
    let mut p = CalibrationProblem::new(scheme, ticks, system(sys)?);
    if let Some(t) = target {
        p.target = t;
    }
    p.config = waveform.apply(p.config);
    p.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(p)
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let mut cfg = ctx.file()?.calibrate.unwrap_or_default();
    cfg.seed = ctx.seed_or(cfg.seed);
    let duration = cfg.duration_ns.unwrap_or_else(|| default_duration_ns(cfg.scheme));
    cfg.duration_ns = Some(duration);
    let threshold = cfg.threshold.unwrap_or_else(|| default_threshold(cfg.scheme));
    cfg.threshold = Some(threshold);
    if cfg.restarts == 0 || cfg.budget == 0 {
        return Err(ConfigError("restarts and budget must be at least 1".into()).into());
    }
    let problem = problem(cfg.scheme, duration, cfg.target, cfg.system.as_ref(), &cfg.waveform)?;

    let mut run = Run::start("calibrate", &cfg, vec![cfg.seed], &ctx.out_dir)?;
    let runs = calibrate_restarts(&problem, cfg.budget, cfg.restarts, cfg.spread, cfg.seed)?;
    let best = &runs[0];
    let report = CalibrationReport::new(&problem, best);
    let pulse = SchemeEvaluator::new(problem.clone())?.build_pulse(&best.params)?;
    run.write_text("calibration_report.json", &report.to_json()?)?;
    run.write_text("pulse.json", &calibrated_pulse_file(&pulse, &report).to_json()?)?;
    run.metric("fidelity", best.fidelity)?;
    run.metric("uncorrected_fidelity", best.uncorrected_fidelity)?;
    run.metric("evaluations", best.evaluations as f64)?;
    println!(
        "{} {} at {:.1} ns: fidelity {:.6} ({} evaluations{})",
        cfg.scheme,
        problem.target,
        problem.duration_ns(),
        best.fidelity,
        best.evaluations,
        if best.unconverged { ", unconverged" } else { "" }
    );
    let passed = best.fidelity >= threshold;
    run.finish(if passed { "ok" } else { "below-threshold" })?;
    ctx.check(passed, format!("calibrated fidelity {:.6} is below the threshold {threshold}", best.fidelity))
}
