//! What the on-resonance target drive contributes: the pulse is replayed
//! with `d1` zeroed and entangling power and control-qubit fidelity are
//! compared over time.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::linalg::{embed, hermitian_map, trace, CMatrix, CVector};
use crate::metrics::{avg_linear_entropy, TargetGate};
use crate::pulses::{Channel, PwcPulse};
use crate::qutrit::{PropagationOptions, SystemParams, TransmonPair, DIM_2Q, LEVELS, QUBIT_INDICES_2Q};

/// Initial states whose control qubit is tracked: `|00⟩` and `|10⟩`.
pub const CONTROL_INPUTS: [usize; 2] = [0, 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleTrace {
    /// Average linear entropy of `U(t)` over the entangling inputs.
    pub entropy: Vec<f64>,
    /// Control-qubit fidelity averaged over [`CONTROL_INPUTS`].
    pub control_fidelity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleAnalysis {
    /// Segment end times in ns.
    pub times: Vec<f64>,
    pub full: RoleTrace,
    pub removed: RoleTrace,
    pub max_entropy_deviation: f64,
    pub max_control_deviation: f64,
}

/// The pulse with its on-resonance target drive zeroed.
pub fn remove_on_resonance(pulse: &PwcPulse) -> PwcPulse {
    pulse.without_channel(Channel::D1)
}

/// Reduced density matrix of transmon 0 (three levels).
pub fn reduced_control(psi: &CVector) -> CMatrix {
    CMatrix::from_fn(LEVELS, LEVELS, |a, b| (0..LEVELS).map(|k| psi[LEVELS * a + k] * psi[LEVELS * b + k].conj()).sum())
}

/// Eigenvalues below this are round-off; their square roots would
/// otherwise add errors of order 1e-8.
const SPECTRUM_FLOOR: f64 = 1e-13;

fn psd_sqrt(m: &CMatrix) -> CMatrix {
    hermitian_map(m, |x| if x > SPECTRUM_FLOOR { x.sqrt() } else { 0.0 })
}

/// Uhlmann fidelity `(Tr √(√σ ρ √σ))²`.
pub fn uhlmann_fidelity(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let s = psd_sqrt(sigma);
    let inner = &s * rho * &s;
    let root = psd_sqrt(&((&inner + inner.adjoint()) * num_complex::Complex64::new(0.5, 0.0)));
    trace(&root).re.powi(2)
}

fn trace_of(pair: &TransmonPair, pulse: &PwcPulse, ideal: &[CMatrix], opts: &PropagationOptions) -> Result<RoleTrace> {
    let traj = pair.trajectory(pulse, opts)?;
    let mut entropy = Vec::with_capacity(traj.len());
    let mut control_fidelity = Vec::with_capacity(traj.len());
    for u in &traj {
        entropy.push(avg_linear_entropy(&u.matrix)?);
        let f: f64 = CONTROL_INPUTS
            .iter()
            .zip(ideal)
            .map(|(&j, sigma)| uhlmann_fidelity(&reduced_control(&u.matrix.column(j).into_owned()), sigma))
            .sum();
        control_fidelity.push(f / CONTROL_INPUTS.len() as f64);
    }
    Ok(RoleTrace { entropy, control_fidelity })
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Paired traces of the full pulse and the pulse without `d1`. The ideal
/// control state is the reduced state of the target gate applied to each
/// input.
pub fn role_analysis(pulse: &PwcPulse, p0: &SystemParams, target: TargetGate, opts: &PropagationOptions) -> Result<RoleAnalysis> {
    ensure!(
        pulse.samples(Channel::U01).is_some() && pulse.samples(Channel::D1).is_some(),
        Validation,
        "role analysis needs a pulse with channels u01 and d1"
    );
    ensure!(target.dim() == 4, Validation, "role analysis needs a two-qubit target, got {}", target.name());
    let pair = TransmonPair::new(*p0)?;
    let gate = embed(&target.matrix(), &QUBIT_INDICES_2Q, DIM_2Q);
    let ideal: Vec<CMatrix> = CONTROL_INPUTS.iter().map(|&j| reduced_control(&gate.column(j).into_owned())).collect();
    let full = trace_of(&pair, pulse, &ideal, opts)?;
    let removed = trace_of(&pair, &remove_on_resonance(pulse), &ideal, opts)?;
    let grid = pulse.grid();
    let times = (0..grid.segments()).map(|s| grid.segment_start(s) + grid.segment_duration()).collect();
    Ok(RoleAnalysis {
        times,
        max_entropy_deviation: max_deviation(&full.entropy, &removed.entropy),
        max_control_deviation: max_deviation(&full.control_fidelity, &removed.control_fidelity),
        full,
        removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, random_state};
    use crate::pulses::PulseGrid;
    use num_complex::Complex64;
    use rand::SeedableRng;

    #[test]
    fn uhlmann_reduces_to_overlap_for_pure_states() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let a = random_state(3, &mut rng);
        let b = random_state(3, &mut rng);
        let f = uhlmann_fidelity(&(&a * a.adjoint()), &(&b * b.adjoint()));
        assert!((f - a.dotc(&b).norm_sqr()).abs() < 1e-10);
        let rho = &a * a.adjoint();
        assert!((uhlmann_fidelity(&rho, &rho) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reduced_state_of_a_product() {
        let mut psi = CVector::zeros(9);
        psi[3] = c(0.6, 0.0);
        psi[5] = c(0.0, 0.8);
        let rho = reduced_control(&psi);
        assert!((rho[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!(rho[(0, 0)].norm() == 0.0);
    }

    #[test]
    fn zero_d1_gives_identical_traces() {
        let g = PulseGrid::new(6, 20).unwrap();
        let u01 = (0..6).map(|k| Complex64::new(0.3 - 0.02 * k as f64, 0.05)).collect();
        let pulse = PwcPulse::new(g, vec![(Channel::U01, u01), (Channel::D1, vec![Complex64::new(0.0, 0.0); 6])]).unwrap();
        let r = role_analysis(&pulse, &SystemParams::valencia(), TargetGate::Zx90, &Default::default()).unwrap();
        assert_eq!(r.full, r.removed);
        assert_eq!(r.max_entropy_deviation, 0.0);
        assert_eq!(r.times.len(), 6);
        let twice = remove_on_resonance(&remove_on_resonance(&pulse));
        assert_eq!(twice, remove_on_resonance(&pulse));
    }

    #[test]
    fn needs_both_channels() {
        let g = PulseGrid::new(2, 1).unwrap();
        let pulse = PwcPulse::new(g, vec![(Channel::U01, vec![Complex64::new(0.1, 0.0); 2])]).unwrap();
        assert!(role_analysis(&pulse, &SystemParams::valencia(), TargetGate::Zx90, &Default::default()).is_err());
    }
}
