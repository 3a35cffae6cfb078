use std::sync::OnceLock;

use pulseforge::baselines::{calibrate, CalibrationProblem, Scheme, SchemeEvaluator};
use pulseforge::evalkit::{drift_sweep, noise_sweep, non_increasing_within, role_analysis, DriftSweepOptions, SolutionSource};
use pulseforge::metrics::TargetGate;
use pulseforge::pulses::PwcPulse;
use pulseforge::qutrit::{PropagationOptions, SystemParams};

/// Direct ZX(π/2) at 248.9 ns, calibrated once per test binary.
fn direct_pulse() -> &'static (PwcPulse, f64) {
    static PULSE: OnceLock<(PwcPulse, f64)> = OnceLock::new();
    PULSE.get_or_init(|| {
        let p = CalibrationProblem::new(Scheme::Direct, 1120, SystemParams::valencia());
        let r = calibrate(&p, 600).unwrap();
        (SchemeEvaluator::new(p).unwrap().build_pulse(&r.params).unwrap(), r.fidelity)
    })
}

#[test]
fn noise_degrades_the_direct_pulse_gracefully() {
    let (pulse, f0) = direct_pulse();
    let sigmas = [0.0, 0.005, 0.01, 0.02, 0.03];
    let rows = noise_sweep(pulse, &SystemParams::valencia(), TargetGate::Zx90, &sigmas, 50, 11, &PropagationOptions::default()).unwrap();
    for r in &rows {
        eprintln!("sigma {:.3}: mean {:.5} std {:.5} se {:.6}", r.sigma, r.mean, r.std, r.std_err());
    }
    assert!(rows[0].fidelities.iter().all(|&f| f == rows[0].nominal));
    assert!((rows[0].nominal - f0).abs() < 1e-10, "{} vs calibrated {f0}", rows[0].nominal);
    assert!(non_increasing_within(&rows, 2.0));
    let m = rows[4].mean;
    assert!((0.985..=0.998).contains(&m), "mean at 3% is {m}");
}

#[test]
fn drive_drift_hurts_the_direct_pulse_more_than_anharmonicity_drift() {
    let (pulse, _) = direct_pulse();
    let source = SolutionSource::Pulse { pulse, target: TargetGate::Zx90, p0: SystemParams::valencia(), propagation: PropagationOptions::default() };
    let edge_mean = |kind: &str| {
        let opts = DriftSweepOptions { kind: kind.into(), range: 0.06, bin_width: 0.02, center_count: 2, edge_count: 8, seed: 5 };
        let t = drift_sweep(&source, &opts).unwrap();
        let edges: Vec<_> = t.rows.iter().filter(|r| r.center.abs() > 0.05).collect();
        assert_eq!(edges.iter().map(|r| r.count).sum::<usize>(), 16);
        edges.iter().map(|r| r.mean).sum::<f64>() / edges.len() as f64
    };
    let drive = edge_mean("drive");
    let anharmonicity = edge_mean("anharmonicity");
    eprintln!("±6% drift: drive {drive:.5}, anharmonicity {anharmonicity:.5}");
    assert!(drive < anharmonicity);
}

#[test]
fn target_drive_barely_changes_the_direct_pulse_dynamics() {
    let (pulse, _) = direct_pulse();
    let r = role_analysis(pulse, &SystemParams::valencia(), TargetGate::Zx90, &PropagationOptions::default()).unwrap();
    eprintln!("entropy dev {:.4}, control dev {:.5}", r.max_entropy_deviation, r.max_control_deviation);
    assert!(r.max_entropy_deviation < 0.05);
    assert!(r.max_control_deviation < 0.01);
    let last = r.full.entropy.len() - 1;
    assert!(r.full.entropy[last] > 0.45, "final entangling power {}", r.full.entropy[last]);
}

mod agents {
    use pulseforge::evalkit::{drift_sweep, finetune, DriftSweepOptions, FinetuneOptions, SolutionSource};
    use pulseforge::gym::{rollout, EnvConfig, GateEnv};
    use pulseforge::rl::{Agent, AgentConfig, Checkpoint};
    use pulseforge::Error;

    fn small(env: &EnvConfig, seed: u64) -> Agent {
        let cfg = AgentConfig { hidden: vec![16, 16], policy_init_scale: 0.5, ..AgentConfig::default() };
        Agent::new(cfg, env.state_dim(), &env.windows(), seed).unwrap()
    }

    #[test]
    fn zero_drift_matches_the_fixed_environment() {
        let env = EnvConfig::drifting_all(true);
        let agent = small(&env, 3);
        let source = SolutionSource::Agent { agent: &agent, env: &env };
        let drifted = source.fidelity(&[0.0; 9]).unwrap();
        let fixed_cfg = EnvConfig { drift: Default::default(), ..env.clone() };
        let mut fixed = GateEnv::new(fixed_cfg, 0).unwrap();
        let r = rollout(&mut fixed, |s| agent.act(s, None)).unwrap();
        assert_eq!(drifted, r.fidelity.fidelity);
        let opts = DriftSweepOptions { kind: "all".into(), range: 0.0, bin_width: 0.002, center_count: 3, edge_count: 3, seed: 0 };
        let t = drift_sweep(&source, &opts).unwrap();
        assert_eq!(t.rows.len(), 1);
        // Draws inside the central bin are within ±0.1%, not exactly zero.
        assert!((t.rows[0].mean - drifted).abs() < 0.05);
    }

    #[test]
    fn context_request_without_context_training_is_a_config_error() {
        let plain = EnvConfig::drifting_all(false);
        let agent = small(&plain, 1);
        let with_context = EnvConfig::drifting_all(true);
        let source = SolutionSource::Agent { agent: &agent, env: &with_context };
        match drift_sweep(&source, &DriftSweepOptions { range: 0.0, ..Default::default() }) {
            Err(Error::Config(msg)) => assert!(msg.contains("without context"), "{msg}"),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn finetune_rejects_incompatible_checkpoints() {
        let plain = EnvConfig::drifting_all(false);
        let ckpt = Checkpoint::capture(&small(&plain, 1), 10);
        let err = finetune(ckpt.clone(), &EnvConfig::drifting_all(true), &FinetuneOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = finetune(ckpt, &EnvConfig::ix90(), &FinetuneOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn finetune_counts_episodes_to_the_threshold() {
        let env = EnvConfig::ix90();
        let ckpt = Checkpoint::capture(&small(&env, 2), 40);
        let opts = FinetuneOptions { episodes: 50, threshold: 1e-9, window: 7, warmup: Some(16), seed: 4 };
        let out = finetune(ckpt, &env, &opts).unwrap();
        assert_eq!(out.episodes_to_threshold, Some(7));
        assert_eq!(out.outcome.records.len(), 7);
        assert_eq!(out.checkpoint.episode, 47);
        let never = FinetuneOptions { episodes: 12, threshold: 1.0, ..opts };
        let out = finetune(out.checkpoint, &env, &never).unwrap();
        assert_eq!(out.episodes_to_threshold, None);
        assert_eq!(out.outcome.records.len(), 12);
    }
}
