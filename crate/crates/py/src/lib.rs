//! Python bindings: device parameters, pulses, calibration, fidelity and
//! noise analysis. Structured results come back as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use pulseforge::baselines::{calibrate as calibrate_scheme, CalibrationProblem, CalibrationReport, Scheme, SchemeEvaluator};
use pulseforge::evalkit::{noisy_rollout, NoiseSpec};
use pulseforge::gym::{reward_from_fidelity as reward, EnvConfig};
use pulseforge::metrics::{corrected_fidelity, leakage, TargetGate};
use pulseforge::pulses::{duration_to_ticks, Channel, DriveSet, PulseFile, PulseGrid, PwcPulse};
use pulseforge::qutrit::{PropagationOptions, SingleTransmon, TransmonPair};
use pulseforge::rl::{evaluate, train, Agent, AgentConfig, Env, ToyEnv, TrainOptions};

fn to_py(e: pulseforge::Error) -> PyErr {
    use pulseforge::Error as E;
    match e {
        E::Config(_) | E::Validation(_) | E::Format(_) | E::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: serde::de::DeserializeOwned>(what: &str, name: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.to_ascii_lowercase()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} '{name}'")))
}

fn to_dict<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Device parameters in MHz.
#[pyclass(name = "SystemParams", module = "pulseforge_py", skip_from_py_object)]
#[derive(Clone)]
struct PySystemParams {
    inner: pulseforge::qutrit::SystemParams,
}

#[pymethods]
impl PySystemParams {
    /// The Valencia pair.
    #[staticmethod]
    fn valencia() -> Self {
        Self { inner: pulseforge::qutrit::SystemParams::valencia() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: pulseforge::qutrit::SystemParams = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate(Default::default()).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Values in the order of `PARAM_NAMES`.
    fn to_list(&self) -> Vec<f64> {
        self.inner.to_vector().to_vec()
    }

    /// `p ⊙ (1 + rel)`.
    fn perturbed(&self, rel: Vec<f64>) -> PyResult<Self> {
        let rel: [f64; 9] = rel.try_into().map_err(|_| PyValueError::new_err("rel needs 9 entries"))?;
        Ok(Self { inner: self.inner.perturbed(&rel) })
    }

    fn __repr__(&self) -> String {
        format!("SystemParams({:?})", self.inner)
    }
}

/// A piecewise-constant pulse on the 2/9 ns grid.
#[pyclass(name = "Pulse", module = "pulseforge_py", skip_from_py_object)]
#[derive(Clone)]
struct PyPulse {
    inner: PwcPulse,
}

#[pymethods]
impl PyPulse {
    /// All-zero pulse on the given channels (`d0`, `u01`, `d1`, `u10`).
    #[staticmethod]
    fn zeros(segments: usize, ticks_per_segment: usize, channels: Vec<String>) -> PyResult<Self> {
        let grid = PulseGrid::new(segments, ticks_per_segment).map_err(to_py)?;
        let chans = channels.iter().map(|c| parse::<Channel>("channel", c)).collect::<PyResult<Vec<_>>>()?;
        let drives = DriveSet::new(chans).map_err(to_py)?;
        Ok(Self { inner: PwcPulse::zeros(grid, &drives) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: PulseFile::from_json(text).and_then(|f| f.to_pulse()).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: pulseforge::pulses::load_pulse(path.as_ref()).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        PulseFile::from_pulse(&self.inner).to_json().map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        pulseforge::pulses::save_pulse(&self.inner, path.as_ref()).map_err(to_py)
    }

    #[getter]
    fn duration_ns(&self) -> f64 {
        self.inner.grid().duration()
    }

    #[getter]
    fn segments(&self) -> usize {
        self.inner.grid().segments()
    }

    #[getter]
    fn channels(&self) -> Vec<&'static str> {
        self.inner.channels().iter().map(|(c, _)| c.name()).collect()
    }

    fn samples(&self, channel: &str) -> PyResult<Vec<Complex64>> {
        let ch = parse::<Channel>("channel", channel)?;
        self.inner.samples(ch).map(|s| s.to_vec()).ok_or_else(|| PyValueError::new_err(format!("pulse has no channel {channel}")))
    }

    fn set_sample(&mut self, channel: &str, segment: usize, value: Complex64) -> PyResult<()> {
        let ch = parse::<Channel>("channel", channel)?;
        self.inner.set_sample(ch, segment, value).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Pulse({:.3} ns, {} segments, channels {:?})", self.duration_ns(), self.segments(), self.channels())
    }
}

#[derive(Serialize)]
struct FidelityDict {
    fidelity: f64,
    uncorrected: f64,
    theta0: f64,
    theta1: f64,
    leakage: f64,
}

/// Virtual-Z corrected fidelity of `pulse` against `target` (`zx90`,
/// `cnot`, `ix90`, `identity`, `rx90`, `rx180`). Single-qubit targets
/// drive `transmon`.
#[pyfunction]
#[pyo3(signature = (pulse, target, system=None, transmon=1))]
fn fidelity<'py>(py: Python<'py>, pulse: &PyPulse, target: &str, system: Option<&PySystemParams>, transmon: usize) -> PyResult<Bound<'py, PyAny>> {
    let target: TargetGate = parse("target", target)?;
    let p0 = system.map_or_else(pulseforge::qutrit::SystemParams::valencia, |s| s.inner);
    let p = &pulse.inner;
    let u = if target.dim() == 4 {
        TransmonPair::new(p0).and_then(|pair| pair.propagate(p, &PropagationOptions::default())).map_err(to_py)?.matrix
    } else {
        if p.channels().len() != 1 || transmon > 1 {
            return Err(PyValueError::new_err("single-qubit targets need a one-channel pulse and transmon 0 or 1"));
        }
        SingleTransmon::new(p0.transmon(transmon), p.channels()[0].0).propagate(p).map_err(to_py)?.matrix
    };
    let vz = corrected_fidelity(&u, &target.matrix()).map_err(to_py)?;
    let out = FidelityDict {
        fidelity: vz.fidelity,
        uncorrected: vz.uncorrected,
        theta0: vz.angles.theta0,
        theta1: vz.angles.theta1,
        leakage: leakage(&u).map_err(to_py)?,
    };
    to_dict(py, &out)
}

/// Calibrates a baseline scheme (`drag`, `echoed`, `direct`); returns
/// the report as a dict and the pulse.
#[pyfunction]
#[pyo3(signature = (scheme, duration_ns=None, budget=1500))]
fn calibrate<'py>(py: Python<'py>, scheme: &str, duration_ns: Option<f64>, budget: usize) -> PyResult<(Bound<'py, PyAny>, PyPulse)> {
    let scheme: Scheme = scheme.parse().map_err(to_py)?;
    let duration = duration_ns.unwrap_or(if scheme == Scheme::Drag { 35.6 } else { 248.9 });
    let ticks = duration_to_ticks(duration).map_err(to_py)?;
    let problem = CalibrationProblem::new(scheme, ticks, pulseforge::qutrit::SystemParams::valencia());
    let (report, pulse) = py
        .detach(|| -> pulseforge::Result<_> {
            let r = calibrate_scheme(&problem, budget)?;
            let pulse = SchemeEvaluator::new(problem.clone())?.build_pulse(&r.params)?;
            Ok((CalibrationReport::new(&problem, &r), pulse))
        })
        .map_err(to_py)?;
    Ok((to_dict(py, &report)?, PyPulse { inner: pulse }))
}

#[derive(Serialize)]
struct NoiseDict {
    sigma: f64,
    nominal: f64,
    mean: f64,
    std: f64,
    fidelities: Vec<f64>,
}

/// Fidelity statistics under per-tick Gaussian parameter noise.
#[pyfunction]
#[pyo3(signature = (pulse, target, sigmas, samples=50, seed=0))]
fn noise_sweep<'py>(py: Python<'py>, pulse: &PyPulse, target: &str, sigmas: Vec<f64>, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let target: TargetGate = parse("target", target)?;
    let p0 = pulseforge::qutrit::SystemParams::valencia();
    let p = pulse.inner.clone();
    let rows = py
        .detach(|| {
            sigmas
                .iter()
                .map(|&sigma| {
                    let spec = NoiseSpec { sigma, samples, allow_large: false };
                    noisy_rollout(&p, &p0, target, &spec, seed, &PropagationOptions::default())
                        .map(|r| NoiseDict { sigma, nominal: r.nominal, mean: r.mean, std: r.std, fidelities: r.fidelities })
                })
                .collect::<pulseforge::Result<Vec<_>>>()
        })
        .map_err(to_py)?;
    to_dict(py, &rows)
}

/// `−log10(1 − F)` with the infidelity floored at 1e-12.
#[pyfunction]
fn reward_from_fidelity(fidelity: f64) -> f64 {
    reward(fidelity)
}

/// Settings of a named environment preset.
#[pyfunction]
fn env_preset<'py>(py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &EnvConfig::preset(name).map_err(to_py)?)
}

#[derive(Serialize)]
struct ToyDict {
    steps: usize,
    episodes: usize,
    mean_return: f64,
    optimal_return: f64,
}

/// Trains a small agent on the one-dimensional toy problem and reports
/// its greedy mean return.
#[pyfunction]
#[pyo3(signature = (max_steps=20000, seed=0))]
fn train_toy<'py>(py: Python<'py>, max_steps: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let out = py
        .detach(|| -> pulseforge::Result<ToyDict> {
            let mut env = ToyEnv::new(seed);
            let cfg = AgentConfig { hidden: vec![64, 64], learning_rate: 1e-3, soft_update: 0.005, buffer_capacity: 20_000, warmup: 1_000, ..Default::default() };
            let mut agent = Agent::new(cfg, env.state_dim(), &env.action_bounds(), seed)?;
            let opts = TrainOptions { episodes: usize::MAX, max_steps: Some(max_steps), seed: seed.wrapping_add(1), ..Default::default() };
            let o = train(&mut env, &mut agent, &opts, &mut ())?;
            let mut eval_env = ToyEnv::new(seed.wrapping_add(2));
            let r = evaluate(&mut eval_env, &agent, 500)?;
            Ok(ToyDict {
                steps: o.records.last().map_or(0, |r| r.steps),
                episodes: o.records.len(),
                mean_return: r.iter().map(|x| x.0).sum::<f64>() / r.len() as f64,
                optimal_return: eval_env.optimal_return(),
            })
        })
        .map_err(to_py)?;
    to_dict(py, &out)
}

#[pymodule]
fn pulseforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyPulse>()?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(noise_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(reward_from_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(env_preset, m)?)?;
    m.add_function(wrap_pyfunction!(train_toy, m)?)?;
    m.add("PARAM_NAMES", pulseforge::qutrit::PARAM_NAMES.to_vec())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
