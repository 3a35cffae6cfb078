use anyhow::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pulseforge::baselines::{duration_sweep, threshold_crossing, Scheme, SweepOptions, SweepRow};
use pulseforge::metrics::TargetGate;

use super::{calibrate, Ctx};
use crate::config::{ConfigError, WaveformOverrides};
use crate::report::Run;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub scheme: Scheme,
    pub target: Option<TargetGate>,
    pub durations_ns: Vec<f64>,
    pub restarts: usize,
    pub budget: usize,
    pub spread: f64,
    pub seed: u64,
    pub threshold: f64,
    /// Checked under `--strict` when set.
    pub expected_crossing_ns: Option<f64>,
    /// Relative tolerance on the crossing.
    pub tolerance: f64,
    pub system: Option<serde_json::Value>,
    pub waveform: WaveformOverrides,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let o = SweepOptions::default();
        Self {
            scheme: Scheme::Direct,
            target: None,
            durations_ns: vec![177.7, 213.3, 248.9, 284.4, 320.0, 355.6],
            restarts: o.restarts,
            budget: o.budget,
            spread: o.spread,
            seed: o.seed,
            threshold: 0.999,
            expected_crossing_ns: None,
            tolerance: 0.15,
            system: None,
            waveform: WaveformOverrides::default(),
        }
    }
}

#[derive(Serialize)]
struct CsvRow {
    duration_ns: f64,
    duration_ticks: usize,
    best_fidelity: f64,
    worst_fidelity: f64,
    restarts: usize,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    scheme: Scheme,
    threshold: f64,
    crossing_ns: Option<f64>,
    expected_crossing_ns: Option<f64>,
    rows: &'a [SweepRow],
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let mut cfg = ctx.file()?.sweep.unwrap_or_default();
    cfg.seed = ctx.seed_or(cfg.seed);
    if cfg.durations_ns.is_empty() || cfg.restarts == 0 || cfg.budget == 0 {
        return Err(ConfigError("sweep needs durations, restarts >= 1 and budget >= 1".into()).into());
    }
    let mut problems = Vec::with_capacity(cfg.durations_ns.len());
    for &d in &cfg.durations_ns {
        problems.push(calibrate::problem(cfg.scheme, d, cfg.target, cfg.system.as_ref(), &cfg.waveform)?);
    }
    let mut run = Run::start("sweep", &cfg, vec![cfg.seed], &ctx.out_dir)?;
    // Durations are independent; each keeps the seed it would get in a
    // sequential sweep.
    let rows = problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let opts = SweepOptions { restarts: cfg.restarts, budget: cfg.budget, spread: cfg.spread, seed: cfg.seed.wrapping_add(i as u64) };
            duration_sweep(p, &[p.duration_ticks], &opts).map(|mut r| r.remove(0))
        })
        .collect::<pulseforge::Result<Vec<SweepRow>>>()?;
    let crossing = threshold_crossing(&rows, cfg.threshold);
    let csv: Vec<CsvRow> = rows
        .iter()
        .map(|r| CsvRow {
            duration_ns: r.duration_ns,
            duration_ticks: r.duration_ticks,
            best_fidelity: r.best_fidelity,
            worst_fidelity: r.fidelities.iter().copied().fold(f64::INFINITY, f64::min),
            restarts: r.fidelities.len(),
        })
        .collect();
    run.write_csv("sweep.csv", &csv)?;
    let summary = SweepSummary { scheme: cfg.scheme, threshold: cfg.threshold, crossing_ns: crossing, expected_crossing_ns: cfg.expected_crossing_ns, rows: &rows };
    run.write_json("sweep.json", &summary)?;
    for r in &rows {
        println!("{:>7.1} ns  best {:.6}", r.duration_ns, r.best_fidelity);
        run.metric(&format!("best_fidelity@{:.1}", r.duration_ns), r.best_fidelity)?;
    }
    match crossing {
        Some(c) => println!("fidelity stays >= {} from {c:.1} ns", cfg.threshold),
        None => println!("the longest duration misses {}", cfg.threshold),
    }
    let within = match (cfg.expected_crossing_ns, crossing) {
        (Some(e), Some(c)) => (c - e).abs() <= cfg.tolerance * e,
        (Some(_), None) => false,
        (None, _) => true,
    };
    if let Some(c) = crossing {
        run.metric("crossing_ns", c)?;
    }
    run.finish(if within { "ok" } else { "crossing-off-target" })?;
    ctx.check(
        within,
        format!("threshold crossing {crossing:?} ns is not within {:.0}% of {:?} ns", 100.0 * cfg.tolerance, cfg.expected_crossing_ns),
    )
}
