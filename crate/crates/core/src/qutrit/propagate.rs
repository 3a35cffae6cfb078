//! Propagators for piecewise-constant pulses.
//!
//! Segments whose Hamiltonian is time independent are exponentiated
//! exactly. Segments that drive a phase-carrying channel are integrated
//! with fixed-step RK4 on `U' = -i H(t) U`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{hamiltonian_1q_unchecked, FramePhases, TransmonPair, DIM_2Q, LEVELS};
use super::params::SingleTransmonParams;
use crate::error::{ensure, Error, Result};
use crate::linalg::{expm_hermitian, identity, polar_unitary, unitarity_error, CMatrix, CVector};
use crate::pulses::{Channel, DriveAmplitudes, PwcPulse};

/// Drift from unitarity of one RK4 segment above which a warning is logged.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub matrix: CMatrix,
    pub t_start: f64,
    pub t_end: f64,
}

impl Propagator {
    pub fn identity(dim: usize, t: f64) -> Self {
        Self { matrix: identity(dim), t_start: t, t_end: t }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `later ∘ self`.
    pub fn then(&self, later: &Propagator) -> Self {
        Self { matrix: &later.matrix * &self.matrix, t_start: self.t_start, t_end: later.t_end }
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.matrix)
    }
}

/// `exp(-i H dt)` for a constant Hamiltonian.
pub fn propagate_tise(h: &CMatrix, t_start: f64, dt: f64) -> Result<Propagator> {
    ensure!(dt >= 0.0 && dt.is_finite(), Validation, "time step must be non-negative, got {dt}");
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite Hamiltonian entry".into()));
    }
    Ok(Propagator { matrix: expm_hermitian(h, dt), t_start, t_end: t_start + dt })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// RK4 only where a drive carries a time-dependent phase.
    #[default]
    Auto,
    Tise,
    Tdse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub integrator: Integrator,
    /// RK4 substeps per `dt` tick.
    pub substeps_per_tick: usize,
    /// Largest accepted estimate of the accumulated RK4 truncation error
    /// on one segment.
    pub error_budget: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { integrator: Integrator::Auto, substeps_per_tick: 64, error_budget: 1e-6 }
    }
}

fn inf_norm(h: &CMatrix) -> f64 {
    (0..h.nrows()).map(|r| h.row(r).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn rhs(h: &CMatrix, u: &CMatrix) -> CMatrix {
    (h * u) * Complex64::new(0.0, -1.0)
}

/// Classical RK4 on `U' = -i H(t) U` from `t0` over `duration` in `steps`
/// equal steps. Also returns the largest `‖H‖∞` seen.
fn rk4_raw<F: Fn(f64) -> CMatrix>(h_at: F, dim: usize, t0: f64, duration: f64, steps: usize) -> Result<(CMatrix, f64)> {
    ensure!(steps >= 1, Validation, "RK4 needs at least one step");
    let h = duration / steps as f64;
    let mut u = identity(dim);
    let mut norm_max: f64 = 0.0;
    let mut h_start = h_at(t0);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let h_mid = h_at(t + 0.5 * h);
        let h_end = h_at(t + h);
        norm_max = norm_max.max(inf_norm(&h_start)).max(inf_norm(&h_mid));
        let k1 = rhs(&h_start, &u);
        let k2 = rhs(&h_mid, &(&u + &k1 * Complex64::new(0.5 * h, 0.0)));
        let k3 = rhs(&h_mid, &(&u + &k2 * Complex64::new(0.5 * h, 0.0)));
        let k4 = rhs(&h_end, &(&u + &k3 * Complex64::new(h, 0.0)));
        u += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
        h_start = h_end;
    }
    Ok((u, norm_max))
}

fn rk4<F: Fn(f64) -> CMatrix>(h_at: F, dim: usize, t0: f64, duration: f64, steps: usize, budget: f64) -> Result<CMatrix> {
    let (u, norm_max) = rk4_raw(h_at, dim, t0, duration, steps)?;
    let h = duration / steps as f64;
    let estimate = steps as f64 * (h * norm_max).powi(5) / 120.0;
    if estimate > budget {
        return Err(Error::StepRejected(format!(
            "estimated RK4 error {estimate:.2e} exceeds budget {budget:.2e}; increase substeps"
        )));
    }
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite propagator".into()));
    }
    // RK4 loses norm at O(h^5) per step, mostly through the static
    // anharmonic terms; products of many segments would accumulate it.
    let drift = unitarity_error(&u);
    if drift > UNITARITY_TOLERANCE {
        log::warn!("RK4 unitarity drift {drift:.2e} on one segment; consider more substeps");
    }
    Ok(polar_unitary(&u))
}

impl TransmonPair {
    fn segment_needs_tdse(&self, amps: &DriveAmplitudes) -> bool {
        let zero = Complex64::new(0.0, 0.0);
        amps.needs_frame_phases()
            || (self.params().delta1 != 0.0 && (amps.get(Channel::U01) != zero || amps.get(Channel::D1) != zero))
    }

    /// RK4 propagator of one segment with the frame phases kept.
    pub fn propagate_tdse(&self, pulse: &PwcPulse, segment: usize, substeps_per_tick: usize, error_budget: f64) -> Result<Propagator> {
        let grid = pulse.grid();
        ensure!(segment < grid.segments(), Validation, "segment {segment} out of range");
        let amps = pulse.amplitudes(segment);
        let t0 = grid.segment_start(segment);
        let duration = grid.segment_duration();
        let steps = substeps_per_tick * grid.ticks_per_segment();
        let u = rk4(|t| self.hamiltonian_unchecked(&amps, t, FramePhases::On), DIM_2Q, t0, duration, steps, error_budget)?;
        Ok(Propagator { matrix: u, t_start: t0, t_end: t0 + duration })
    }

    /// Bare RK4 propagator of one segment: no error budget and no
    /// projection back onto the unitaries.
    pub fn propagate_tdse_raw(&self, pulse: &PwcPulse, segment: usize, substeps_per_tick: usize) -> Result<CMatrix> {
        let grid = pulse.grid();
        ensure!(segment < grid.segments(), Validation, "segment {segment} out of range");
        let amps = pulse.amplitudes(segment);
        let steps = substeps_per_tick * grid.ticks_per_segment();
        let (u, _) = rk4_raw(|t| self.hamiltonian_unchecked(&amps, t, FramePhases::On), DIM_2Q, grid.segment_start(segment), grid.segment_duration(), steps)?;
        Ok(u)
    }

    fn segment_matrix(&self, pulse: &PwcPulse, segment: usize, opts: &PropagationOptions) -> Result<CMatrix> {
        let amps = pulse.amplitudes(segment);
        let tdse = match opts.integrator {
            Integrator::Tdse => true,
            Integrator::Tise => {
                if self.segment_needs_tdse(&amps) {
                    return Err(Error::Contract(format!(
                        "segment {segment} drives a phase-carrying channel; the exact exponential needs a constant Hamiltonian"
                    )));
                }
                false
            }
            Integrator::Auto => self.segment_needs_tdse(&amps),
        };
        if tdse {
            Ok(self.propagate_tdse(pulse, segment, opts.substeps_per_tick, opts.error_budget)?.matrix)
        } else {
            let h = self.hamiltonian_unchecked(&amps, 0.0, FramePhases::Off);
            Ok(propagate_tise(&h, 0.0, pulse.grid().segment_duration())?.matrix)
        }
    }

    /// Per-segment propagators. Consecutive segments with identical,
    /// phase-free amplitudes reuse the previous exponential.
    pub fn segment_propagators(&self, pulse: &PwcPulse, opts: &PropagationOptions) -> Result<Vec<Propagator>> {
        self.range_propagators(pulse, 0..pulse.grid().segments(), opts)
    }

    /// Propagators of the segments from `first` to the end.
    pub fn segment_propagators_from(&self, pulse: &PwcPulse, first: usize, opts: &PropagationOptions) -> Result<Vec<Propagator>> {
        self.range_propagators(pulse, first..pulse.grid().segments(), opts)
    }

    /// Product of the propagators of segments `range`, in time order.
    pub fn segment_range_propagator(&self, pulse: &PwcPulse, range: std::ops::Range<usize>, opts: &PropagationOptions) -> Result<CMatrix> {
        self.range_product(pulse, range, opts)
    }

    fn range_product(&self, pulse: &PwcPulse, range: std::ops::Range<usize>, opts: &PropagationOptions) -> Result<CMatrix> {
        let grid = pulse.grid();
        ensure!(range.end <= grid.segments(), Validation, "segment range {range:?} exceeds {} segments", grid.segments());
        let mut u: Option<CMatrix> = None;
        let mut s = range.start;
        while s < range.end {
            let amps = pulse.amplitudes(s);
            let reusable = opts.integrator != Integrator::Tdse && !self.segment_needs_tdse(&amps);
            let mut run = 1;
            if reusable {
                while s + run < range.end && pulse.amplitudes(s + run) == amps {
                    run += 1;
                }
            }
            let step = if run > 1 {
                let h = self.hamiltonian_unchecked(&amps, 0.0, FramePhases::Off);
                expm_hermitian(&h, run as f64 * grid.segment_duration())
            } else {
                self.segment_matrix(pulse, s, opts)?
            };
            u = Some(match u {
                Some(prev) => step * prev,
                None => step,
            });
            s += run;
        }
        Ok(u.unwrap_or_else(|| crate::linalg::identity(DIM_2Q)))
    }

    fn range_propagators(&self, pulse: &PwcPulse, range: std::ops::Range<usize>, opts: &PropagationOptions) -> Result<Vec<Propagator>> {
        let grid = pulse.grid();
        ensure!(range.end <= grid.segments(), Validation, "segment range {range:?} exceeds {} segments", grid.segments());
        let mut out: Vec<Propagator> = Vec::with_capacity(range.len());
        let mut prev: Option<(DriveAmplitudes, bool)> = None;
        for s in range {
            let amps = pulse.amplitudes(s);
            let reusable = opts.integrator != Integrator::Tdse && !self.segment_needs_tdse(&amps);
            let matrix = match (&prev, out.last()) {
                (Some((a, true)), Some(last)) if reusable && *a == amps => last.matrix.clone(),
                _ => self.segment_matrix(pulse, s, opts)?,
            };
            prev = Some((amps, reusable));
            let t0 = grid.segment_start(s);
            out.push(Propagator { matrix, t_start: t0, t_end: t0 + grid.segment_duration() });
        }
        Ok(out)
    }

    /// Full-pulse propagator. Runs of identical phase-free segments are
    /// exponentiated in one step.
    pub fn propagate(&self, pulse: &PwcPulse, opts: &PropagationOptions) -> Result<Propagator> {
        let grid = pulse.grid();
        let u = self.range_product(pulse, 0..grid.segments(), opts)?;
        Ok(Propagator { matrix: u, t_start: 0.0, t_end: grid.duration() })
    }

    /// Cumulative propagators `U(t_k)` after each segment.
    pub fn trajectory(&self, pulse: &PwcPulse, opts: &PropagationOptions) -> Result<Vec<Propagator>> {
        let segs = self.segment_propagators(pulse, opts)?;
        let mut out = Vec::with_capacity(segs.len());
        let mut u = Propagator::identity(DIM_2Q, 0.0);
        for s in &segs {
            u = u.then(s);
            out.push(u.clone());
        }
        Ok(out)
    }

    /// States after each segment for every input ket.
    pub fn evolve_basis(&self, pulse: &PwcPulse, kets: &[CVector], opts: &PropagationOptions) -> Result<Vec<Vec<CVector>>> {
        for k in kets {
            ensure!(k.len() == DIM_2Q, Validation, "ket has dimension {}, expected {DIM_2Q}", k.len());
        }
        let segs = self.segment_propagators(pulse, opts)?;
        let mut states: Vec<CVector> = kets.to_vec();
        let mut out = Vec::with_capacity(segs.len());
        for s in &segs {
            for psi in states.iter_mut() {
                *psi = &s.matrix * &*psi;
            }
            out.push(states.clone());
        }
        Ok(out)
    }
}

/// A single transmon driven through one channel of a pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleTransmon {
    pub params: SingleTransmonParams,
    pub channel: Channel,
}

impl SingleTransmon {
    pub fn new(params: SingleTransmonParams, channel: Channel) -> Self {
        Self { params, channel }
    }

    pub fn hamiltonian(&self, d: Complex64) -> Result<CMatrix> {
        super::hamiltonian::build_hamiltonian_1q(&self.params, d)
    }

    /// Per-segment propagators, reusing exponentials for repeated samples.
    pub fn segment_propagators(&self, pulse: &PwcPulse) -> Result<Vec<Propagator>> {
        let grid = pulse.grid();
        let samples = pulse
            .samples(self.channel)
            .ok_or_else(|| Error::Validation(format!("pulse has no {} channel", self.channel)))?;
        let mut out: Vec<Propagator> = Vec::with_capacity(samples.len());
        for (s, d) in samples.iter().enumerate() {
            let matrix = if s > 0 && samples[s - 1] == *d {
                out[s - 1].matrix.clone()
            } else {
                expm_hermitian(&hamiltonian_1q_unchecked(&self.params, *d), grid.segment_duration())
            };
            let t0 = grid.segment_start(s);
            out.push(Propagator { matrix, t_start: t0, t_end: t0 + grid.segment_duration() });
        }
        Ok(out)
    }

    pub fn propagate(&self, pulse: &PwcPulse) -> Result<Propagator> {
        let mut u = Propagator::identity(LEVELS, 0.0);
        for s in &self.segment_propagators(pulse)? {
            u = u.then(s);
        }
        Ok(u)
    }
}
