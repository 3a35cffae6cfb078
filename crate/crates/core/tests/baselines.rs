use pulseforge::baselines::{calibrate, calibrated_pulse_file, threshold_crossing, CalibrationProblem, CalibrationReport, Scheme, SchemeEvaluator, SweepRow};
use pulseforge::metrics::corrected_fidelity;
use pulseforge::pulses::{Channel, PulseFile};
use pulseforge::qutrit::{PropagationOptions, SystemParams, TransmonPair};

const T_248: usize = 1120;

fn problem(scheme: Scheme, ticks: usize) -> CalibrationProblem {
    CalibrationProblem::new(scheme, ticks, SystemParams::valencia())
}

#[test]
fn parameter_counts() {
    assert_eq!(Scheme::Drag.num_params(), 2);
    assert_eq!(Scheme::Echoed.num_params(), 4);
    assert_eq!(Scheme::Direct.num_params(), 6);
    for s in [Scheme::Drag, Scheme::Echoed, Scheme::Direct] {
        assert_eq!(s.param_names().len(), s.num_params());
        assert_eq!(problem(s, T_248).bounds().lower.len(), s.num_params());
    }
}

#[test]
fn echo_halves_cancel_on_the_cross_resonance_drive() {
    let eval = SchemeEvaluator::new(problem(Scheme::Echoed, T_248)).unwrap();
    let pulse = eval.build_pulse(&[0.5, 0.05, 0.3, -0.2]).unwrap();
    assert!(pulse.area(Channel::U01).norm() < 1e-12);
    assert!(pulse.area(Channel::D1).norm() < 1e-12);
    assert!(pulse.area(Channel::D0).norm() > 1.0);
}

#[test]
fn calibration_is_deterministic() {
    let p = problem(Scheme::Direct, T_248);
    let a = calibrate(&p, 60).unwrap();
    let b = calibrate(&p, 60).unwrap();
    assert_eq!(a, b);
    assert!(a.evaluations <= 60);
}

#[test]
fn reported_fidelity_matches_a_fresh_propagation_of_the_stored_pulse() {
    for scheme in [Scheme::Direct, Scheme::Echoed] {
        let p = problem(scheme, T_248);
        let result = calibrate(&p, 150).unwrap();
        let report = CalibrationReport::new(&p, &result);
        let eval = SchemeEvaluator::new(p.clone()).unwrap();
        let file = calibrated_pulse_file(&eval.build_pulse(&result.params).unwrap(), &report);
        let pulse = PulseFile::from_json(&file.to_json().unwrap()).unwrap().to_pulse().unwrap();
        // The π-pulse blocks drive d0 and are integrated with RK4.
        let u = TransmonPair::new(p.system).unwrap().propagate(&pulse, &PropagationOptions::default()).unwrap();
        let f = corrected_fidelity(&u.matrix, &p.target.matrix()).unwrap().fidelity;
        assert!((f - report.fidelity).abs() < 1e-10, "{scheme}: {f} vs {}", report.fidelity);
    }
}

#[test]
fn echo_without_pi_pulses_fails() {
    let p = problem(Scheme::Echoed, T_248);
    let result = calibrate(&p, 150).unwrap();
    let eval = SchemeEvaluator::new(p.clone()).unwrap();
    let pulse = eval.build_pulse(&result.params).unwrap().without_channel(Channel::D0);
    let u = TransmonPair::new(p.system).unwrap().propagate(&pulse, &PropagationOptions::default()).unwrap();
    let f = corrected_fidelity(&u.matrix, &p.target.matrix()).unwrap().fidelity;
    assert!(result.fidelity > 0.95);
    assert!(f < 0.8, "echo without refocusing still reached {f}");
}

#[test]
fn report_round_trips() {
    let p = problem(Scheme::Drag, 160);
    let r = calibrate(&p, 80).unwrap();
    let report = CalibrationReport::new(&p, &r);
    assert_eq!(CalibrationReport::from_json(&report.to_json().unwrap()).unwrap(), report);
}

#[test]
fn drag_at_35_6_ns_exceeds_99_9_percent() {
    let r = calibrate(&problem(Scheme::Drag, 160), 400).unwrap();
    assert!(r.fidelity >= 0.999, "{}", r.fidelity);
}

#[test]
fn crossing_is_the_start_of_the_passing_tail() {
    let row = |ticks: usize, f: f64| SweepRow { duration_ticks: ticks, duration_ns: ticks as f64 * 2.0 / 9.0, best_fidelity: f, best_params: vec![], fidelities: vec![f] };
    let rows = vec![row(800, 0.998), row(960, 0.9991), row(1120, 0.9989), row(1280, 0.9995), row(1440, 0.9996)];
    assert_eq!(threshold_crossing(&rows, 0.999), Some(1280.0 * 2.0 / 9.0));
    assert_eq!(threshold_crossing(&rows[..3], 0.999), None);
}

#[test]
fn unknown_scheme_is_a_config_error() {
    assert!(matches!("cr3".parse::<Scheme>(), Err(pulseforge::Error::Config(_))));
    assert_eq!("echo".parse::<Scheme>().unwrap(), Scheme::Echoed);
}
