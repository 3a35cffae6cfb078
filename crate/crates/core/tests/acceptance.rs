//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p pulseforge --test acceptance`. Criterion numbers
//! given as arguments restrict the run, e.g. `-- 1 4 8`. Setting
//! `PULSEFORGE_ACCEPTANCE_STRICT=1` runs the gate-learning check for its
//! full episode budget instead of stopping at the target.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ndarray::Array1;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pulseforge::baselines::{calibrate, duration_sweep, threshold_crossing, CalibrationProblem, Scheme, SchemeEvaluator, SweepOptions, SweepRow};
use pulseforge::evalkit::{noise_sweep, non_increasing_within};
use pulseforge::gym::{reward_from_fidelity, EnvConfig, GateEnv};
use pulseforge::linalg::{c, embed, expm_hermitian, max_abs_diff, random_hermitian, random_state, random_unitary, unitarity_error, CMatrix};
use pulseforge::metrics::{
    avg_gate_fidelity, corrected_fidelity, entangled_input_pairs, fidelity_with_angles, linear_entropy, pauli_eigenstates, product_state,
    state_fidelity, worst_case_fidelity, worst_case_scqp_1q, OverlapMatrix, TargetGate, VirtualZAngles,
};
use pulseforge::optim::{minimize, NelderMeadOptions};
use pulseforge::pulses::{Channel, PulseGrid, PwcPulse};
use pulseforge::qutrit::{effective_zx_rate, propagate_tise, FramePhases, Integrator, PropagationOptions, SystemParams, TransmonPair, QUBIT_INDICES_2Q};
use pulseforge::rl::{
    actor_loss, critic_loss, evaluate, train, Activation, Agent, AgentConfig, Batch, Env, Mlp, ReplayBuffer, ToyEnv, TrainOptions, Transition,
};

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Qubit-subspace gate `t` embedded in the two-qutrit space, identity on
/// the leakage levels.
fn embed_2q(t: &CMatrix) -> CMatrix {
    let mut u = embed(t, &QUBIT_INDICES_2Q, 9);
    for k in [2, 5, 6, 7, 8] {
        u[(k, k)] = c(1.0, 0.0);
    }
    u
}

/// `exp(-iεH) · embed(t)` with a random Hermitian `H` scaled to unit
/// spectral radius; `ε` sets the distance from the target and lets
/// population leak out of the qubit subspace.
fn near_target<R: Rng>(t: &CMatrix, eps: f64, rng: &mut R) -> CMatrix {
    let n = if t.nrows() == 4 { 9 } else { 3 };
    let h = random_hermitian(n, rng);
    let radius = h.clone().symmetric_eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let base = if n == 9 {
        embed_2q(t)
    } else {
        let mut u = embed(t, &[0, 1], 3);
        u[(2, 2)] = c(1.0, 0.0);
        u
    };
    expm_hermitian(&h, eps / radius) * base
}

/// Half a unit in the third significant digit of the larger value.
fn three_digit_tolerance(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    0.5 * 10f64.powf(m.log10().floor() - 2.0)
}

fn criterion_1() -> Check {
    const PAIRS: usize = 50;
    const SAMPLES: usize = 200_000;
    let gates = [TargetGate::Zx90, TargetGate::Cnot, TargetGate::Ix90, TargetGate::Identity];
    let rows: Vec<(f64, f64, f64)> = (0..PAIRS)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
            let t = if k % 5 == 4 { random_unitary(4, &mut rng) } else { gates[k % 4].matrix() };
            let eps = 10f64.powf(rng.random_range(-2.0..-0.8));
            let u = near_target(&t, eps, &mut rng);
            let m = OverlapMatrix::from_unitary(&u, &t).unwrap();
            let formula = avg_gate_fidelity(&m);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..SAMPLES {
                let f = state_fidelity(m.matrix(), &random_state(4, &mut rng));
                s += f;
                s2 += f * f;
            }
            let mean = s / SAMPLES as f64;
            let se = ((s2 / SAMPLES as f64 - mean * mean).max(0.0) / SAMPLES as f64).sqrt();
            (formula, mean, se)
        })
        .collect();
    let misses = rows.iter().filter(|(f, mc, _)| (f - mc).abs() > three_digit_tolerance(*f, *mc)).count();
    let worst = rows.iter().map(|(f, mc, _)| (f - mc).abs()).fold(0.0, f64::max);
    let worst_z = rows.iter().map(|(f, mc, se)| (f - mc).abs() / se).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.0).fold(1.0, f64::min);
    verdict(
        misses == 0,
        format!("{PAIRS} pairs (F from {lo:.4} to 1), {SAMPLES} Haar states each: {misses} disagree at 3 digits, max |Δ| {worst:.2e} ({worst_z:.1} SE)"),
    )
}

fn criterion_2() -> Check {
    let gates = [TargetGate::Zx90, TargetGate::Cnot, TargetGate::Identity];
    let grid = 72;
    let diffs: Vec<f64> = (0..200)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + k as u64);
            let t = gates[k % 3].matrix();
            let eps = rng.random_range(0.01..0.3);
            let (a, b) = (rng.random_range(-3.1..3.1), rng.random_range(-1.57..1.57));
            let z = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(4, |i, _| Complex64::from_polar(1.0, a * (i / 2) as f64 + b * (i % 2) as f64)));
            let u = near_target(&(z * &t), eps, &mut rng);
            let seq = corrected_fidelity(&u, &t).unwrap().fidelity;
            let f = |x: &[f64]| -fidelity_with_angles(&u, &t, VirtualZAngles { theta0: x[0], theta1: x[1] }).unwrap();
            let mut best = (f64::INFINITY, vec![0.0, 0.0]);
            for i in 0..grid {
                for j in 0..grid {
                    let x = [2.0 * std::f64::consts::PI * i as f64 / grid as f64, 2.0 * std::f64::consts::PI * j as f64 / grid as f64];
                    let v = f(&x);
                    if v < best.0 {
                        best = (v, x.to_vec());
                    }
                }
            }
            let opts = NelderMeadOptions { max_evals: 4000, ftol: 1e-15, xtol: 1e-12, ..Default::default() };
            let r = minimize(f, &best.1, &[0.05, 0.05], None, &opts);
            let joint = (-r.f).max(-best.0);
            joint - seq
        })
        .collect();
    let worst = diffs.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let ahead = diffs.iter().filter(|d| **d < -1e-9).count();
    verdict(
        worst < 1e-5 && ahead == 0,
        format!("200 Z-corrupted near-target unitaries: max |joint − sequential| {worst:.2e}, sequential above joint in {ahead}"),
    )
}

fn criterion_3() -> Check {
    let one_q: Vec<f64> = (0..100)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + k as u64);
            let t = random_unitary(2, &mut rng);
            let u = if k % 2 == 0 { random_unitary(3, &mut rng) } else { near_target(&t, rng.random_range(0.01..0.5), &mut rng) };
            let (scqp, _) = worst_case_scqp_1q(&u, &t).unwrap();
            let ms = worst_case_fidelity(&u, &t, 16, k as u64).unwrap().fidelity;
            (scqp - ms).abs()
        })
        .collect();
    let worst_1q = one_q.iter().fold(0.0f64, |a, d| a.max(*d));

    const SCAN: usize = 1_000_000;
    const CASES: usize = 10;
    let mut excess: f64 = f64::NEG_INFINITY;
    for k in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(350 + k as u64);
        let t = if k % 2 == 0 { TargetGate::Zx90.matrix() } else { random_unitary(4, &mut rng) };
        let u = near_target(&t, rng.random_range(0.05..0.8), &mut rng);
        let wc = worst_case_fidelity(&u, &t, 16, k as u64).unwrap().fidelity;
        let m = t.adjoint() * pulseforge::metrics::qubit_block(&u).unwrap();
        let scan = (0..64u64)
            .into_par_iter()
            .map(|chunk| {
                let mut r = ChaCha8Rng::seed_from_u64(10_000 * k as u64 + chunk);
                (0..SCAN / 64 + 1).map(|_| state_fidelity(&m, &random_state(4, &mut r))).fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min);
        excess = excess.max(wc - scan);
    }
    verdict(
        worst_1q < 1e-9 && excess <= 1e-6,
        format!("1q: max |SCQP − multi-start| {worst_1q:.2e} over 100 cases; 2q: minimizer − 1e6-state scan minimum at most {excess:.2e} over {CASES} cases"),
    )
}

fn criterion_4() -> Check {
    let pair = TransmonPair::new(SystemParams::valencia()).unwrap();
    // A constant drive on (u01, d1) with δ1 = 0 carries no frame phase, so
    // the exact exponential is the reference.
    let grid = PulseGrid::new(1, 45).unwrap();
    let pulse = PwcPulse::new(grid, vec![(Channel::U01, vec![c(0.6, 0.3)]), (Channel::D1, vec![c(-0.2, 0.4)])]).unwrap();
    let h = pair.hamiltonian(&pulse.amplitudes(0), 0.0, FramePhases::Off).unwrap();
    let exact = propagate_tise(&h, 0.0, grid.segment_duration()).unwrap().matrix;
    let subs = [4usize, 8, 16, 32, 64];
    let errs: Vec<f64> =
        subs.iter().map(|&s| max_abs_diff(&pair.propagate_tdse(&pulse, 0, s, f64::INFINITY).unwrap().matrix, &exact)).collect();
    let xs: Vec<f64> = subs.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 5.0, ys.iter().sum::<f64>() / 5.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let order = -slope;

    // 1120 ticks of phase-carrying drive on all four channels, as 20
    // random segments through the RK4 path.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let chans = [Channel::D0, Channel::U01, Channel::D1, Channel::U10];
    let long = PwcPulse::new(
        PulseGrid::new(20, 56).unwrap(),
        chans.iter().map(|&ch| (ch, (0..20).map(|_| c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))).collect())).collect(),
    )
    .unwrap();
    let opts = PropagationOptions { integrator: Integrator::Tdse, ..Default::default() };
    let drift = pair.propagate(&long, &opts).unwrap().unitarity_error();
    let bare = PwcPulse::new(PulseGrid::new(1, 1120).unwrap(), chans.iter().map(|&ch| (ch, vec![c(0.2, -0.1)])).collect()).unwrap();
    let bare_drift = unitarity_error(&pair.propagate_tdse_raw(&bare, 0, 64).unwrap());
    verdict(
        order >= 3.5 && drift < 1e-8,
        format!(
            "RK4 order {order:.2} (errors {:.1e} to {:.1e} at 4 to 64 substeps); unitarity drift {drift:.2e} over 1120 ticks (bare RK4 without projection {bare_drift:.1e})",
            errs[0], errs[4]
        ),
    )
}

fn criterion_5() -> Check {
    let r = calibrate(&CalibrationProblem::new(Scheme::Drag, 160, SystemParams::valencia()), 1500).unwrap();
    verdict(r.fidelity >= 0.999, format!("DRAG X(π/2) at 35.6 ns: {:.6}", r.fidelity))
}

/// The calibrated direct ZX(π/2) pulse at 248.9 ns and its fidelity.
fn direct_248() -> &'static (PwcPulse, f64) {
    static PULSE: OnceLock<(PwcPulse, f64)> = OnceLock::new();
    PULSE.get_or_init(|| {
        let p = CalibrationProblem::new(Scheme::Direct, 1120, SystemParams::valencia());
        let r = calibrate(&p, 1500).unwrap();
        (SchemeEvaluator::new(p).unwrap().build_pulse(&r.params).unwrap(), r.fidelity)
    })
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let direct = direct_248().1;
    let echoed = calibrate(&CalibrationProblem::new(Scheme::Echoed, 1120, SystemParams::valencia()), 1500).unwrap().fidelity;

    let ticks = [800usize, 960, 1120, 1280, 1440, 1600];
    let opts = SweepOptions { restarts: 12, budget: 1500, spread: 0.05, seed: 0 };
    let jobs: Vec<(Scheme, usize, usize)> =
        [Scheme::Direct, Scheme::Echoed].iter().flat_map(|&s| ticks.iter().enumerate().map(move |(i, &t)| (s, i, t))).collect();
    let rows: Vec<(Scheme, SweepRow)> = jobs
        .par_iter()
        .map(|&(s, i, t)| {
            let template = CalibrationProblem::new(s, t, SystemParams::valencia());
            let o = SweepOptions { seed: opts.seed.wrapping_add(i as u64), ..opts };
            (s, duration_sweep(&template, &[t], &o).unwrap().remove(0))
        })
        .collect();
    let table = |s: Scheme| -> Vec<SweepRow> { rows.iter().filter(|r| r.0 == s).map(|r| r.1.clone()).collect() };
    let (d_rows, e_rows) = (table(Scheme::Direct), table(Scheme::Echoed));
    let fmt = |rows: &[SweepRow]| rows.iter().map(|r| format!("{:.1}:{:.5}", r.duration_ns, r.best_fidelity)).collect::<Vec<_>>().join(" ");
    let d_cross = threshold_crossing(&d_rows, 0.999);
    let e_cross = threshold_crossing(&e_rows, 0.999);
    let within = |x: Option<f64>, center: f64| x.is_some_and(|v| (v - center).abs() <= 0.15 * center);
    let elapsed = start.elapsed();
    let ok = direct >= 0.998 && echoed >= 0.993 && within(d_cross, 213.0) && within(e_cross, 320.0) && elapsed < Duration::from_secs(7200);
    verdict(
        ok,
        format!(
            "248.9 ns: direct {direct:.6}, echoed {echoed:.6}; crossing direct {d_cross:?} ns, echoed {e_cross:?} ns; direct [{}] echoed [{}]; {:.0} s",
            fmt(&d_rows),
            fmt(&e_rows),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Check {
    let p = SystemParams::valencia();
    let tau = effective_zx_rate(&p, 58.0).unwrap().gate_time_ns;
    let omegas: Vec<f64> = (1..=10).map(|k| k as f64).collect();
    let rates: Vec<f64> = omegas.iter().map(|&w| effective_zx_rate(&p, w).unwrap().omega_zx_mhz).collect();
    let slope = omegas.iter().zip(&rates).map(|(w, r)| w * r).sum::<f64>() / omegas.iter().map(|w| w * w).sum::<f64>();
    let resid = omegas.iter().zip(&rates).map(|(w, r)| ((r - slope * w) / r).abs()).fold(0.0, f64::max);
    verdict(
        (tau - 248.9).abs() <= 0.15 * 248.9 && resid < 0.05,
        format!("τ(58 MHz) = {tau:.1} ns ({:+.1}%); linear fit on 1 to 10 MHz: slope {slope:.5}, max relative residual {resid:.2e}", 100.0 * (tau / 248.9 - 1.0)),
    )
}

fn criterion_8() -> Check {
    let cnot = TargetGate::Cnot.matrix();
    let states = pauli_eigenstates();
    let mut maximal = Vec::new();
    let mut stray = 0;
    for a in 0..6 {
        for b in 0..6 {
            let s = linear_entropy(&(&cnot * product_state(&states[a], &states[b], 4))).unwrap();
            if (s - 0.5).abs() < 1e-12 {
                maximal.push((a, b));
            } else if s.abs() > 1e-12 {
                stray += 1;
            }
        }
    }
    let ok = maximal.len() == 16 && stray == 0 && maximal == entangled_input_pairs();
    verdict(ok, format!("{} of 36 products reach S = 0.5, {stray} partially entangled", maximal.len()))
}

fn batch(rng: &mut ChaCha8Rng, n: usize, sd: usize, ad: usize, terminal_every: usize) -> Batch {
    let items: Vec<Transition> = (0..n)
        .map(|i| Transition {
            state: (0..sd).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action: (0..ad).map(|_| rng.random_range(-0.3..0.3)).collect(),
            reward: rng.random_range(-1.0..1.0),
            next_state: (0..sd).map(|_| rng.random_range(-1.0..1.0)).collect(),
            terminal: terminal_every > 0 && i % terminal_every == 0,
        })
        .collect();
    Batch::from_transitions(&items.iter().collect::<Vec<_>>())
}

/// Largest relative gap between `analytic` and central differences.
fn gradient_gap(analytic: &[f64], f: impl Fn(&[f64]) -> f64, p0: &[f64]) -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..p0.len() {
        let mut p = p0.to_vec();
        p[k] += h;
        let up = f(&p);
        p[k] -= 2.0 * h;
        let fd = (up - f(&p)) / (2.0 * h);
        worst = worst.max((fd - analytic[k]).abs() / fd.abs().max(analytic[k].abs()).max(1e-6));
    }
    worst
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = AgentConfig { hidden: vec![6, 5], batch_size: 8, warmup: 8, buffer_capacity: 64, policy_init_scale: 0.5, ..Default::default() };
    let agent = Agent::new(cfg, 4, &[0.3, 0.2], 1).unwrap();
    let b = batch(&mut rng, 8, 4, 2, 3);
    let y: Array1<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let critic = agent.nets.critic.clone();
    let (_, g) = critic_loss(&critic, &b, &y);
    let critic_gap = gradient_gap(&g.flatten(), |p| {
        let mut net = critic.clone();
        net.set_params(p);
        critic_loss(&net, &b, &y).0
    }, &critic.params());
    let actor = agent.nets.actor.clone();
    let (_, g) = actor_loss(&actor, &critic, &agent.bounds, &b.states);
    let actor_gap = gradient_gap(&g.flatten(), |p| {
        let mut net = actor.clone();
        net.set_params(p);
        actor_loss(&net, &critic, &agent.bounds, &b.states).0
    }, &actor.params());

    let source = Mlp::new(&[3, 4, 1], Activation::Relu, Activation::Identity, 0.1, &mut rng);
    let mut target = Mlp::new(&[3, 4, 1], Activation::Relu, Activation::Identity, 0.1, &mut rng);
    let dist = |a: &Mlp, b: &Mlp| a.params().iter().zip(b.params()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let d0 = dist(&source, &target);
    for _ in 0..500 {
        target.soft_update(&source, 0.002);
    }
    let polyak = (dist(&source, &target) - d0 * 0.998f64.powi(500)).abs() < 1e-12 * d0.max(1.0);

    let mut buf = ReplayBuffer::new(3);
    for k in 0..5 {
        buf.push(Transition { state: vec![], action: vec![], reward: k as f64, next_state: vec![], terminal: false });
    }
    let fifo = buf.len() == 3 && buf.iter().map(|t| t.reward).collect::<Vec<_>>() == vec![2.0, 3.0, 4.0];

    let next = ndarray::Array2::zeros((8, 2));
    let targets = agent.bootstrap(&b, &next);
    let terminal_ok = (0..8).all(|i| (b.terminal[i] == 1.0) == (targets[i] == b.rewards[i]));

    let reward = reward_from_fidelity(0.99);
    let ok = critic_gap < 1e-4 && actor_gap < 1e-4 && polyak && fifo && terminal_ok && (reward - 2.0).abs() < 1e-12;
    verdict(
        ok,
        format!(
            "gradient gap critic {critic_gap:.1e}, actor {actor_gap:.1e}; Polyak {polyak}; FIFO buffer {fifo}; terminal bootstrap {terminal_ok}; r(0.99) = {reward}"
        ),
    )
}

fn criterion_10() -> Check {
    let mut env = ToyEnv::new(7);
    let optimum = env.optimal_return();
    let cfg = AgentConfig { hidden: vec![64, 64], learning_rate: 1e-3, batch_size: 64, soft_update: 0.005, buffer_capacity: 20_000, warmup: 1_000, ..Default::default() };
    let mut agent = Agent::new(cfg, env.state_dim(), &env.action_bounds(), 1).unwrap();
    let out = train(&mut env, &mut agent, &TrainOptions { episodes: usize::MAX, max_steps: Some(20_000), seed: 2, ..Default::default() }, &mut ()).unwrap();
    let steps = out.records.last().map_or(0, |r| r.steps);
    let returns = evaluate(&mut ToyEnv::new(99), &agent, 2000).unwrap();
    let mean = returns.iter().map(|r| r.0).sum::<f64>() / returns.len() as f64;
    let toy_ok = out.halted.is_none() && steps <= 20_000 && mean >= 0.95 * optimum;

    let strict = std::env::var("PULSEFORGE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let cfg = EnvConfig::ix90();
    let ok_setup = cfg.segments == 9 && (cfg.duration_ns - 10.0).abs() < 1e-12 && cfg.window_u == 0.4 && cfg.window_d == 0.13;
    let mut gate = GateEnv::new(cfg.clone(), 3).unwrap();
    let mut ix_agent = Agent::new(cfg.recommended_agent(), gate.state_dim(), &gate.action_bounds(), 4).unwrap();
    let opts = TrainOptions { episodes: 50_000, target_fidelity: (!strict).then_some(0.99), max_steps: None, seed: 5 };
    let ix = train(&mut gate, &mut ix_agent, &opts, &mut ()).unwrap();
    let best = ix.best_fidelity.unwrap_or(0.0);
    let ix_ok = ok_setup && ix.halted.is_none() && best >= 0.99 && ix.records.len() <= 50_000;
    verdict(
        toy_ok && ix_ok,
        format!(
            "toy: greedy return {mean:.4} = {:.1}% of optimum after {steps} steps; IX(π/2): best fidelity {best:.5} in {} episodes{}",
            100.0 * mean / optimum,
            ix.records.len(),
            if strict { " (full budget)" } else { "" }
        ),
    )
}

fn criterion_11() -> Check {
    let (pulse, _) = direct_248();
    let p0 = SystemParams::valencia();
    let u = TransmonPair::new(p0).unwrap().propagate(pulse, &PropagationOptions::default()).unwrap();
    let noiseless = corrected_fidelity(&u.matrix, &TargetGate::Zx90.matrix()).unwrap().fidelity;
    let sigmas = [0.0, 0.005, 0.01, 0.02, 0.03];
    let rows = noise_sweep(pulse, &p0, TargetGate::Zx90, &sigmas, 50, 11, &PropagationOptions::default()).unwrap();
    let zero_gap = rows[0].fidelities.iter().map(|f| (f - noiseless).abs()).fold(0.0, f64::max);
    let monotone = non_increasing_within(&rows, 2.0);
    let m3 = rows[4].mean;
    let means = rows.iter().map(|r| format!("{:.5}", r.mean)).collect::<Vec<_>>().join(", ");
    verdict(
        zero_gap < 1e-10 && monotone && (0.985..=0.998).contains(&m3),
        format!("σ = 0 off the noiseless {noiseless:.6} by {zero_gap:.1e}; means [{means}] at σ = 0 to 3%; non-increasing within 2 SE: {monotone}"),
    )
}

fn main() {
    let checks: [(usize, &str, fn() -> Check); 11] = [
        (1, "average fidelity formula", criterion_1),
        (2, "sequential virtual-Z", criterion_2),
        (3, "worst-case fidelity", criterion_3),
        (4, "integrator accuracy", criterion_4),
        (5, "DRAG single-qubit gate", criterion_5),
        (6, "cross-resonance baselines", criterion_6),
        (7, "effective ZX rate", criterion_7),
        (8, "CNOT entangling power", criterion_8),
        (9, "learner mechanics", criterion_9),
        (10, "learning", criterion_10),
        (11, "noise robustness", criterion_11),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in checks {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
