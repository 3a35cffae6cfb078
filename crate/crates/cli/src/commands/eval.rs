use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use pulseforge::evalkit::{drift_sweep, noisy_rollout, role_analysis, DriftSweepOptions, NoiseResult, NoiseSpec, SolutionSource, DEFAULT_NOISE_SAMPLES};
use pulseforge::gym::{rollout_from, EnvConfig, GateEnv};
use pulseforge::linalg::{identity, CMatrix};
use pulseforge::metrics::{apply_virtual_z, corrected_fidelity, leakage, rotation_angles, worst_case_fidelity, RotationAngleTrace, RotationOptions, TargetGate, DEFAULT_STARTS};
use pulseforge::pulses::{PulseFile, PwcPulse};
use pulseforge::qutrit::{PropagationOptions, SingleTransmon, SystemParams, TransmonPair};
use pulseforge::rl::Agent;

use super::train::load_checkpoint;
use super::{environment, system, Ctx};
use crate::config::ConfigError;
use crate::report::Run;

const ANALYSES: [&str; 5] = ["fidelity", "noise", "drift", "roles", "rotation"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigmas: Vec<f64>,
    pub samples: usize,
    /// Accept σ above 3%.
    pub allow_large: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { sigmas: vec![0.0, 0.005, 0.01, 0.02, 0.03], samples: DEFAULT_NOISE_SAMPLES, allow_large: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftConfig {
    pub kinds: Vec<String>,
    pub range: f64,
    pub bin_width: f64,
    pub center_count: usize,
    pub edge_count: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        let d = DriftSweepOptions::default();
        Self { kinds: vec![d.kind], range: d.range, bin_width: d.bin_width, center_count: d.center_count, edge_count: d.edge_count }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Pulse file to evaluate.
    pub pulse: Option<PathBuf>,
    /// Agent checkpoint; its greedy pulse is evaluated and drift analyses
    /// let the agent react to each drifted device.
    pub checkpoint: Option<PathBuf>,
    /// Environment preset of the checkpoint.
    pub env: Option<String>,
    pub env_overrides: Option<serde_json::Value>,
    /// Defaults to the pulse file's `target` metadata.
    pub target: Option<TargetGate>,
    pub system: Option<serde_json::Value>,
    /// Transmon driven by single-qubit pulses.
    pub transmon: usize,
    pub analyses: Vec<String>,
    pub threshold: Option<f64>,
    pub seed: u64,
    pub worst_case_starts: usize,
    pub noise: NoiseConfig,
    pub drift: DriftConfig,
    pub rotation: Option<RotationOptions>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            pulse: None,
            checkpoint: None,
            env: None,
            env_overrides: None,
            target: None,
            system: None,
            transmon: 1,
            analyses: vec!["fidelity".into()],
            threshold: None,
            seed: 0,
            worst_case_starts: DEFAULT_STARTS,
            noise: NoiseConfig::default(),
            drift: DriftConfig::default(),
            rotation: None,
        }
    }
}

#[derive(Serialize)]
struct FidelityReport {
    target: TargetGate,
    duration_ns: f64,
    fidelity: f64,
    uncorrected_fidelity: f64,
    virtual_z: pulseforge::metrics::VirtualZAngles,
    leakage: f64,
    worst_case_fidelity: f64,
    worst_case_unconverged: bool,
}

#[derive(Serialize)]
struct NoiseRow {
    sigma: f64,
    mean: f64,
    std: f64,
    count: usize,
}

#[derive(Serialize)]
struct RoleRow {
    time_ns: f64,
    entropy: f64,
    entropy_without_d1: f64,
    control_fidelity: f64,
    control_fidelity_without_d1: f64,
}

enum Source {
    Pulse,
    Agent { agent: Box<Agent>, env: Box<EnvConfig> },
}

fn target_from_metadata(file: &PulseFile) -> Option<TargetGate> {
    serde_json::from_value(file.metadata.get("target")?.clone()).ok()
}

/// Propagator of `pulse`: on the pair for two-qubit targets, on one
/// transmon otherwise.
fn unitary(pulse: &PwcPulse, p0: &SystemParams, target: TargetGate, transmon: usize) -> Result<CMatrix> {
    if target.dim() == 4 {
        return Ok(TransmonPair::new(*p0)?.propagate(pulse, &PropagationOptions::default())?.matrix);
    }
    if pulse.channels().len() != 1 || transmon > 1 {
        return Err(ConfigError("single-qubit targets need a one-channel pulse and transmon 0 or 1".into()).into());
    }
    Ok(SingleTransmon::new(p0.transmon(transmon), pulse.channels()[0].0).propagate(pulse)?.matrix)
}

fn fidelity_report(pulse: &PwcPulse, p0: &SystemParams, target: TargetGate, cfg: &EvalConfig) -> Result<FidelityReport> {
    let u = unitary(pulse, p0, target, cfg.transmon)?;
    let t = target.matrix();
    let vz = corrected_fidelity(&u, &t)?;
    // The frame correction multiplies the overlap by D; folding D† into
    // the target gives the worst case of the corrected gate.
    let d = apply_virtual_z(&identity(t.nrows()), vz.angles);
    let wc = worst_case_fidelity(&u, &(&t * d.adjoint()), cfg.worst_case_starts, cfg.seed)?;
    Ok(FidelityReport {
        target,
        duration_ns: pulse.grid().duration(),
        fidelity: vz.fidelity,
        uncorrected_fidelity: vz.uncorrected,
        virtual_z: vz.angles,
        leakage: leakage(&u)?,
        worst_case_fidelity: wc.fidelity,
        worst_case_unconverged: wc.unconverged,
    })
}

fn rotation_rows(trace: &RotationAngleTrace) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header = vec!["time_ns".to_string()];
    header.extend(RotationAngleTrace::labels().into_iter().map(|l| format!("theta_{l}")));
    let rows = trace
        .times
        .iter()
        .zip(&trace.theta)
        .map(|(t, th)| std::iter::once(*t).chain(th.iter().flatten().copied()).collect())
        .collect();
    (header, rows)
}

pub fn run(ctx: &Ctx) -> Result<()> {
    let mut cfg = ctx.file()?.eval.unwrap_or_default();
    cfg.seed = ctx.seed_or(cfg.seed);
    if let Some(bad) = cfg.analyses.iter().find(|a| !ANALYSES.contains(&a.as_str())) {
        return Err(ConfigError(format!("unknown analysis '{bad}' (expected one of {ANALYSES:?})")).into());
    }
    let wants = |name: &str| cfg.analyses.iter().any(|a| a == name);

    let (pulse, target, p0, source) = match (&cfg.pulse, &cfg.checkpoint) {
        (Some(path), None) => {
            let path = ctx.resolve(path);
            let text = std::fs::read_to_string(&path).map_err(|e| ConfigError(format!("cannot read pulse {}: {e}", path.display())))?;
            let file = PulseFile::from_json(&text)?;
            let target = cfg
                .target
                .or_else(|| target_from_metadata(&file))
                .ok_or_else(|| ConfigError("eval.target is required when the pulse file names no target".into()))?;
            (file.to_pulse()?, target, system(cfg.system.as_ref())?, Source::Pulse)
        }
        (None, Some(path)) => {
            let preset = cfg.env.as_deref().ok_or_else(|| ConfigError("eval.env is required with a checkpoint".into()))?;
            let mut env = environment(preset, cfg.env_overrides.as_ref())?;
            if cfg.system.is_some() {
                env.p0 = system(cfg.system.as_ref())?;
            }
            let agent = load_checkpoint(&ctx.resolve(path))?.restore(cfg.seed)?;
            let source = SolutionSource::Agent { agent: &agent, env: &env };
            source.validate()?;
            let mut gym = GateEnv::new(env.clone(), 0)?;
            let s = gym.reset_with(env.p0)?;
            let pulse = rollout_from(&mut gym, s, |s| agent.act(s, None))?.pulse;
            (pulse, env.target, env.p0, Source::Agent { agent: Box::new(agent), env: Box::new(env) })
        }
        _ => return Err(ConfigError("eval needs exactly one of pulse or checkpoint".into()).into()),
    };
    if target.dim() != 4 && cfg.analyses.iter().any(|a| a != "fidelity") {
        return Err(ConfigError(format!("only the fidelity analysis applies to the single-qubit target {target}")).into());
    }

    let mut run = Run::start("eval", &cfg, vec![cfg.seed], &ctx.out_dir)?;
    run.write_text("evaluated_pulse.json", &PulseFile::from_pulse(&pulse).with_metadata("target", serde_json::json!(target.name())).to_json()?)?;
    let mut passed = true;
    let mut miss = String::new();

    if wants("fidelity") {
        let r = fidelity_report(&pulse, &p0, target, &cfg)?;
        println!(
            "{target}: fidelity {:.6} (uncorrected {:.6}), leakage {:.2e}, worst case {:.6}",
            r.fidelity, r.uncorrected_fidelity, r.leakage, r.worst_case_fidelity
        );
        run.metric("fidelity", r.fidelity)?;
        run.metric("leakage", r.leakage)?;
        run.metric("worst_case_fidelity", r.worst_case_fidelity)?;
        if let Some(t) = cfg.threshold {
            if r.fidelity < t {
                passed = false;
                miss = format!("fidelity {:.6} is below the threshold {t}", r.fidelity);
            }
        }
        run.write_json("fidelity.json", &r)?;
    }

    if wants("noise") {
        let mut results: Vec<NoiseResult> = Vec::with_capacity(cfg.noise.sigmas.len());
        for &sigma in &cfg.noise.sigmas {
            let spec = NoiseSpec { sigma, samples: cfg.noise.samples, allow_large: cfg.noise.allow_large };
            results.push(noisy_rollout(&pulse, &p0, target, &spec, cfg.seed, &PropagationOptions::default())?);
        }
        let rows: Vec<NoiseRow> = results.iter().map(|r| NoiseRow { sigma: r.sigma, mean: r.mean, std: r.std, count: r.fidelities.len() }).collect();
        for r in &rows {
            println!("noise sigma {:.4}: mean {:.6} std {:.6} (n = {})", r.sigma, r.mean, r.std, r.count);
            run.metric(&format!("noise_mean@{}", r.sigma), r.mean)?;
        }
        run.write_csv("noise.csv", &rows)?;
        run.write_json("noise.json", &results)?;
    }

    if wants("drift") {
        let pulse_source = SolutionSource::Pulse { pulse: &pulse, target, p0, propagation: PropagationOptions::default() };
        let source = match &source {
            Source::Pulse => pulse_source,
            Source::Agent { agent, env } => SolutionSource::Agent { agent: agent.as_ref(), env: env.as_ref() },
        };
        for kind in &cfg.drift.kinds {
            let opts = DriftSweepOptions {
                kind: kind.clone(),
                range: cfg.drift.range,
                bin_width: cfg.drift.bin_width,
                center_count: cfg.drift.center_count,
                edge_count: cfg.drift.edge_count,
                seed: cfg.seed,
            };
            let table = drift_sweep(&source, &opts)?;
            let worst = table.rows.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
            println!("drift {kind}: {} bins, {} samples, lowest bin mean {worst:.6}", table.rows.len(), table.samples.len());
            run.metric(&format!("drift_worst_bin_mean@{kind}"), worst)?;
            run.write_csv(&format!("drift_{kind}.csv"), &table.rows)?;
            run.write_json(&format!("drift_{kind}.json"), &table)?;
        }
    }

    if wants("roles") {
        let r = role_analysis(&pulse, &p0, target, &PropagationOptions::default())?;
        let rows: Vec<RoleRow> = (0..r.times.len())
            .map(|k| RoleRow {
                time_ns: r.times[k],
                entropy: r.full.entropy[k],
                entropy_without_d1: r.removed.entropy[k],
                control_fidelity: r.full.control_fidelity[k],
                control_fidelity_without_d1: r.removed.control_fidelity[k],
            })
            .collect();
        println!("roles: max entropy deviation {:.4}, max control deviation {:.5}", r.max_entropy_deviation, r.max_control_deviation);
        run.metric("roles_max_entropy_deviation", r.max_entropy_deviation)?;
        run.metric("roles_max_control_deviation", r.max_control_deviation)?;
        run.write_csv("roles.csv", &rows)?;
    }

    if wants("rotation") {
        let traj = TransmonPair::new(p0)?.trajectory(&pulse, &PropagationOptions::default())?;
        let trace = rotation_angles(&traj, &cfg.rotation.unwrap_or_default())?;
        let (header, rows) = rotation_rows(&trace);
        if let Some(last) = trace.theta_zx().last() {
            println!("rotation: final theta_ZX {last:.6} rad, {} flagged steps", trace.outliers.len());
            run.metric("final_theta_zx", *last)?;
        }
        run.write_table("rotation.csv", &header, &rows)?;
        run.write_json("rotation.json", &trace)?;
    }

    run.finish(if passed { "ok" } else { "below-threshold" })?;
    ctx.check(passed, miss)
}
