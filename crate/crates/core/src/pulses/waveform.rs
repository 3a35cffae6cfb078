//! Analytic envelopes sampled at `dt` tick midpoints.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{PulseGrid, DT_NS};
use super::pwc::{Channel, PwcPulse};
use crate::error::{ensure, Error, Result};

/// Default flank length of a GaussianSquare in units of sigma.
pub const FLANK_SIGMAS: f64 = 3.0;

fn default_flank_sigmas() -> f64 {
    FLANK_SIGMAS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticWaveform {
    /// Gaussian centered on the pulse, lifted so the end points are zero.
    Gaussian { amplitude: Complex64, sigma_ns: f64 },
    /// Flat top of height `amplitude` between Gaussian flanks of length
    /// `flank_sigmas·σ`, each lifted to zero at the pulse ends. With
    /// `antisymmetric` the second half has its sign flipped (rotary tone).
    GaussianSquare {
        amplitude: Complex64,
        sigma_ns: f64,
        #[serde(default)]
        antisymmetric: bool,
        #[serde(default = "default_flank_sigmas")]
        flank_sigmas: f64,
    },
    /// Lifted Gaussian `g` plus an out-of-phase derivative:
    /// `amplitude · (g + i·beta·dt·g')`.
    DragPair { amplitude: Complex64, sigma_ns: f64, beta: f64 },
}

fn lifted_gaussian(t: f64, center: f64, half_width: f64, sigma: f64) -> (f64, f64) {
    let edge = (-(half_width * half_width) / (2.0 * sigma * sigma)).exp();
    let x = t - center;
    let e = (-(x * x) / (2.0 * sigma * sigma)).exp();
    let norm = 1.0 - edge;
    ((e - edge) / norm, -x / (sigma * sigma) * e / norm)
}

impl AnalyticWaveform {
    fn sigma(&self) -> f64 {
        match *self {
            AnalyticWaveform::Gaussian { sigma_ns, .. }
            | AnalyticWaveform::GaussianSquare { sigma_ns, .. }
            | AnalyticWaveform::DragPair { sigma_ns, .. } => sigma_ns,
        }
    }

    pub fn amplitude(&self) -> Complex64 {
        match *self {
            AnalyticWaveform::Gaussian { amplitude, .. }
            | AnalyticWaveform::GaussianSquare { amplitude, .. }
            | AnalyticWaveform::DragPair { amplitude, .. } => amplitude,
        }
    }

    /// Same waveform with its amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut w = *self;
        match &mut w {
            AnalyticWaveform::Gaussian { amplitude, .. }
            | AnalyticWaveform::GaussianSquare { amplitude, .. }
            | AnalyticWaveform::DragPair { amplitude, .. } => *amplitude *= factor,
        }
        w
    }

    /// Envelope value at time `t` within a pulse of length `duration` (ns).
    pub fn value(&self, t: f64, duration: f64) -> Complex64 {
        let sigma = self.sigma();
        match *self {
            AnalyticWaveform::Gaussian { amplitude, .. } => {
                amplitude * lifted_gaussian(t, 0.5 * duration, 0.5 * duration, sigma).0
            }
            AnalyticWaveform::DragPair { amplitude, beta, .. } => {
                let (g, dg) = lifted_gaussian(t, 0.5 * duration, 0.5 * duration, sigma);
                amplitude * Complex64::new(g, beta * DT_NS * dg)
            }
            AnalyticWaveform::GaussianSquare { amplitude, antisymmetric, flank_sigmas, .. } => {
                let rise = flank_sigmas * sigma;
                let shape = if t < rise {
                    lifted_gaussian(t, rise, rise, sigma).0
                } else if t > duration - rise {
                    lifted_gaussian(t, duration - rise, rise, sigma).0
                } else {
                    1.0
                };
                let sign = if antisymmetric && t > 0.5 * duration { -1.0 } else { 1.0 };
                amplitude * (sign * shape)
            }
        }
    }

    /// Samples at the midpoints of `ticks` consecutive `dt` ticks.
    pub fn discretize(&self, ticks: usize) -> Result<Vec<Complex64>> {
        let sigma = self.sigma();
        ensure!(sigma > 0.0 && sigma.is_finite(), Validation, "sigma must be positive, got {sigma}");
        ensure!(ticks >= 1, Validation, "a waveform needs at least one tick");
        let duration = ticks as f64 * DT_NS;
        if let AnalyticWaveform::GaussianSquare { flank_sigmas, .. } = *self {
            ensure!(flank_sigmas > 0.0, Validation, "flank length must be positive, got {flank_sigmas}σ");
            ensure!(
                duration >= 2.0 * flank_sigmas * sigma,
                Validation,
                "GaussianSquare of {duration:.3} ns is shorter than its two {flank_sigmas}σ flanks (σ = {sigma} ns)"
            );
        }
        let samples: Vec<Complex64> =
            (0..ticks).map(|k| self.value((k as f64 + 0.5) * DT_NS, duration)).collect();
        if let Some(k) = samples.iter().position(|a| !(a.re.abs() <= 1.0 && a.im.abs() <= 1.0)) {
            return Err(Error::Validation(format!(
                "waveform amplitude {} at tick {k} leaves the unit box",
                samples[k]
            )));
        }
        Ok(samples)
    }
}

/// Tick layout of an echoed cross-resonance schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EchoLayout {
    pub half_ticks: usize,
    pub pi_ticks: usize,
}

impl EchoLayout {
    /// Splits `total_ticks` into two CR halves around two π-pulses.
    pub fn for_total(total_ticks: usize, pi_ticks: usize) -> Result<Self> {
        ensure!(
            total_ticks > 2 * pi_ticks && (total_ticks - 2 * pi_ticks) % 2 == 0,
            Validation,
            "{total_ticks} ticks cannot hold two equal CR halves and two {pi_ticks}-tick π-pulses"
        );
        Ok(Self { half_ticks: (total_ticks - 2 * pi_ticks) / 2, pi_ticks })
    }

    pub fn total_ticks(&self) -> usize {
        2 * (self.half_ticks + self.pi_ticks)
    }
}

/// Echoed schedule on a per-tick grid, in time order:
/// CR(+Ω) with cancellation, X(π) on the control, CR(−Ω) with negated
/// cancellation, X(π) on the control.
pub fn assemble_echoed(
    cr: &AnalyticWaveform,
    cancel: &AnalyticWaveform,
    pi_pulse: &AnalyticWaveform,
    layout: EchoLayout,
) -> Result<PwcPulse> {
    let EchoLayout { half_ticks, pi_ticks } = layout;
    let cr_half = cr.discretize(half_ticks)?;
    let cancel_half = cancel.discretize(half_ticks)?;
    let pi = pi_pulse.discretize(pi_ticks)?;
    let zero = Complex64::new(0.0, 0.0);
    let total = layout.total_ticks();
    let mut d0 = Vec::with_capacity(total);
    let mut u01 = Vec::with_capacity(total);
    let mut d1 = Vec::with_capacity(total);
    for sign in [1.0, -1.0] {
        u01.extend(cr_half.iter().map(|a| a * sign));
        d1.extend(cancel_half.iter().map(|a| a * sign));
        d0.extend(std::iter::repeat_n(zero, half_ticks));
        u01.extend(std::iter::repeat_n(zero, pi_ticks));
        d1.extend(std::iter::repeat_n(zero, pi_ticks));
        d0.extend_from_slice(&pi);
    }
    PwcPulse::new(PulseGrid::per_tick(total)?, vec![(Channel::D0, d0), (Channel::U01, u01), (Channel::D1, d1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_amplitude_gaussian_is_zero() {
        let s = AnalyticWaveform::Gaussian { amplitude: c(0.0, 0.0), sigma_ns: 5.0 }.discretize(40).unwrap();
        assert!(s.iter().all(|a| *a == c(0.0, 0.0)));
    }

    #[test]
    fn gaussian_is_symmetric_for_odd_counts() {
        let s = AnalyticWaveform::Gaussian { amplitude: c(0.7, 0.0), sigma_ns: 3.0 }.discretize(41).unwrap();
        for k in 0..41 {
            assert!((s[k] - s[40 - k]).norm() < 1e-15);
        }
        assert!((s[20].re - 0.7).abs() < 1e-15);
    }

    #[test]
    fn flat_top_is_exact() {
        let a = c(0.31, -0.12);
        let w = AnalyticWaveform::GaussianSquare { amplitude: a, sigma_ns: 64.0 * DT_NS, antisymmetric: false, flank_sigmas: FLANK_SIGMAS };
        let s = w.discretize(1120).unwrap();
        let rise = (FLANK_SIGMAS * 64.0) as usize;
        for sample in &s[rise..1120 - rise] {
            assert_eq!(*sample, a);
        }
        assert!(s[0].norm() < 0.01 && s[1119].norm() < 0.01);
    }

    #[test]
    fn rotary_flips_sign_halfway() {
        let w = AnalyticWaveform::GaussianSquare { amplitude: c(0.2, 0.0), sigma_ns: 2.0, antisymmetric: true, flank_sigmas: FLANK_SIGMAS };
        let s = w.discretize(200).unwrap();
        let sum: Complex64 = s.iter().sum();
        assert!(sum.norm() < 1e-12);
        assert_eq!(s[50], c(0.2, 0.0));
        assert_eq!(s[150], c(-0.2, 0.0));
    }

    #[test]
    fn drag_quadrature_is_a_finite_difference_derivative() {
        let beta = 0.8;
        let sigma = 40.0 * DT_NS;
        let ticks = 160;
        let duration = ticks as f64 * DT_NS;
        let drag = AnalyticWaveform::DragPair { amplitude: c(0.4, 0.0), sigma_ns: sigma, beta };
        let real = AnalyticWaveform::Gaussian { amplitude: c(0.4, 0.0), sigma_ns: sigma };
        let s = drag.discretize(ticks).unwrap();
        for k in 1..ticks - 1 {
            let t = (k as f64 + 0.5) * DT_NS;
            let fd = (real.value(t + 0.5 * DT_NS, duration).re - real.value(t - 0.5 * DT_NS, duration).re) / DT_NS;
            assert!((s[k].im - beta * DT_NS * fd).abs() < 1e-5, "tick {k}");
        }
    }

    #[test]
    fn overflow_names_first_tick() {
        let w = AnalyticWaveform::GaussianSquare { amplitude: c(1.5, 0.0), sigma_ns: 1.0, antisymmetric: false, flank_sigmas: FLANK_SIGMAS };
        let err = w.discretize(100).unwrap_err().to_string();
        assert!(err.contains("tick"), "{err}");
    }

    #[test]
    fn echoed_halves_cancel() {
        let cr = AnalyticWaveform::GaussianSquare { amplitude: c(0.3, 0.1), sigma_ns: 10.0, antisymmetric: false, flank_sigmas: FLANK_SIGMAS };
        let cancel = AnalyticWaveform::GaussianSquare { amplitude: c(0.02, 0.0), sigma_ns: 10.0, antisymmetric: false, flank_sigmas: FLANK_SIGMAS };
        let pi = AnalyticWaveform::DragPair { amplitude: c(0.5, 0.0), sigma_ns: 8.0, beta: 0.3 };
        let layout = EchoLayout::for_total(1120, 160).unwrap();
        assert_eq!(layout.half_ticks, 400);
        let p = assemble_echoed(&cr, &cancel, &pi, layout).unwrap();
        assert_eq!(p.grid().total_ticks(), 1120);
        assert!(p.area(Channel::U01).norm() < 1e-12);
        assert!(p.area(Channel::D1).norm() < 1e-12);
        assert!(EchoLayout::for_total(1121, 160).is_err());
    }
}
