//! Time-resolved two-qubit rotation angles from the matrix logarithm of
//! the accumulated propagator.
//!
//! With `U = V diag(e^{iφ_k}) V†`, every branch of the logarithm gives
//! `i ln U = V diag(−φ_k + 2π n_k) V†`. Projecting onto the qubit subspace
//! and expanding in Pauli products yields `θ_ij = Tr[Π (i ln U) Π P_ij] / 2`,
//! which is affine in the integers `n_k`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::linalg::{pauli2, unitary_eigen, CMatrix};
use crate::qutrit::{Propagator, QUBIT_INDICES_2Q};

pub const PAULI_LABELS: [&str; 4] = ["I", "X", "Y", "Z"];

/// Eigenvectors with less qubit-subspace weight than this cannot move the
/// projected angles and are left on the principal branch.
const WEIGHT_CUTOFF: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationOptions {
    /// Largest branch offset tried per eigenphase.
    pub max_winding: i32,
    /// Offsets are only used when the principal branch jumps by more than
    /// this; steps that still exceed it are flagged.
    pub jump_threshold: f64,
}

impl Default for RotationOptions {
    fn default() -> Self {
        Self { max_winding: 1, jump_threshold: std::f64::consts::FRAC_PI_4 }
    }
}

pub type PauliAngles = [[f64; 4]; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationAngleTrace {
    pub times: Vec<f64>,
    /// Angles on the branch chosen for a smooth θ_ZX.
    pub theta: Vec<PauliAngles>,
    /// Angles on the principal branch.
    pub principal: Vec<PauliAngles>,
    /// Chosen offsets `n_k` per eigenphase and step.
    pub branches: Vec<Vec<i32>>,
    /// Steps with an eigenphase within 1e-9 of ±π.
    pub branch_point: Vec<bool>,
    /// Steps whose θ_ZX jump exceeds the threshold.
    pub outliers: Vec<usize>,
}

impl RotationAngleTrace {
    pub fn theta_zx(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t[3][1]).collect()
    }

    /// Column labels `II, IX, ..., ZZ`.
    pub fn labels() -> Vec<String> {
        let mut out = Vec::with_capacity(16);
        for a in PAULI_LABELS {
            for b in PAULI_LABELS {
                out.push(format!("{a}{b}"));
            }
        }
        out
    }
}

struct StepDecomposition {
    principal: PauliAngles,
    /// `weights[k][i][j] = ⟨v_k|Π P_ij Π|v_k⟩ / 2`.
    weights: Vec<PauliAngles>,
    relevant: Vec<usize>,
    branch_point: bool,
}

fn decompose(u: &CMatrix) -> Result<StepDecomposition> {
    let idx: Vec<usize> = match u.nrows() {
        9 => QUBIT_INDICES_2Q.to_vec(),
        4 => (0..4).collect(),
        n => return Err(crate::Error::Validation(format!("rotation angles need dim 9 or 4, got {n}"))),
    };
    let (phases, v) = unitary_eigen(u);
    let paulis: Vec<Vec<CMatrix>> = (0..4).map(|i| (0..4).map(|j| pauli2(i, j)).collect()).collect();
    let mut principal = [[0.0; 4]; 4];
    let mut weights = Vec::with_capacity(phases.len());
    let mut relevant = Vec::new();
    for (k, phi) in phases.iter().enumerate() {
        let vq = nalgebra::DVector::from_iterator(4, idx.iter().map(|&r| v[(r, k)]));
        let weight = vq.norm_squared();
        let mut w = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                w[i][j] = 0.5 * vq.dotc(&(&paulis[i][j] * &vq)).re;
                principal[i][j] += -phi * w[i][j];
            }
        }
        if weight > WEIGHT_CUTOFF {
            relevant.push(k);
        }
        weights.push(w);
    }
    let branch_point = phases.iter().any(|p| (p.abs() - std::f64::consts::PI).abs() < 1e-9);
    Ok(StepDecomposition { principal, weights, relevant, branch_point })
}

fn shifted(d: &StepDecomposition, n: &[i32]) -> PauliAngles {
    let mut t = d.principal;
    for (k, &nk) in n.iter().enumerate() {
        if nk != 0 {
            let s = 2.0 * std::f64::consts::PI * nk as f64;
            for i in 0..4 {
                for j in 0..4 {
                    t[i][j] += s * d.weights[k][i][j];
                }
            }
        }
    }
    t
}

/// Rotation angles along a time-ordered list of accumulated propagators
/// starting after the first segment; `θ(0) = 0` is the reference for the
/// first step.
pub fn rotation_angles(trace: &[Propagator], opts: &RotationOptions) -> Result<RotationAngleTrace> {
    ensure!(opts.max_winding >= 0, Validation, "max_winding must be non-negative");
    let mut out = RotationAngleTrace {
        times: Vec::with_capacity(trace.len()),
        theta: Vec::with_capacity(trace.len()),
        principal: Vec::with_capacity(trace.len()),
        branches: Vec::with_capacity(trace.len()),
        branch_point: Vec::with_capacity(trace.len()),
        outliers: Vec::new(),
    };
    let mut prev_zx = 0.0;
    let w = opts.max_winding;
    for (step, p) in trace.iter().enumerate() {
        let d = decompose(&p.matrix)?;
        let dim = d.weights.len();
        let base_zx = d.principal[3][1];
        // θ_ZX is affine in n: search offsets over the relevant eigenvectors.
        let r = d.relevant.len();
        let span = (2 * w + 1) as usize;
        let combos = span.pow(r as u32);
        // Fewest windings among offsets that keep the jump under the
        // threshold; the smallest jump if none does.
        let mut best_ok: Option<(i32, f64, usize)> = None;
        let mut best_any: (f64, i32, usize) = (f64::INFINITY, i32::MAX, 0);
        for code in 0..combos {
            let mut rem = code;
            let mut zx = base_zx;
            let mut cost = 0;
            for &k in &d.relevant {
                let nk = (rem % span) as i32 - w;
                rem /= span;
                zx += 2.0 * std::f64::consts::PI * nk as f64 * d.weights[k][3][1];
                cost += nk.abs();
            }
            let jump = (zx - prev_zx).abs();
            if jump <= opts.jump_threshold && best_ok.is_none_or(|(c, j, _)| cost < c || (cost == c && jump < j - 1e-9)) {
                best_ok = Some((cost, jump, code));
            }
            if jump < best_any.0 - 1e-9 || ((jump - best_any.0).abs() <= 1e-9 && cost < best_any.1) {
                best_any = (jump, cost, code);
            }
        }
        let best = match best_ok {
            Some((cost, jump, code)) => (jump, cost, code),
            None => best_any,
        };
        let mut n = vec![0; dim];
        let mut rem = best.2;
        for &k in &d.relevant {
            n[k] = (rem % span) as i32 - w;
            rem /= span;
        }
        let theta = shifted(&d, &n);
        if best.0 > opts.jump_threshold {
            // Outliers do not become the reference for the next step.
            out.outliers.push(step);
        } else {
            prev_zx = theta[3][1];
        }
        out.times.push(p.t_end);
        out.theta.push(theta);
        out.principal.push(d.principal);
        out.branches.push(n);
        out.branch_point.push(d.branch_point);
    }
    Ok(out)
}

/// `exp(−i Σ θ_ij P_ij / 2)` on the qubit subspace.
pub fn reconstruct(theta: &PauliAngles) -> CMatrix {
    let mut h = CMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            h += pauli2(i, j) * crate::linalg::c(0.5 * theta[i][j], 0.0);
        }
    }
    crate::linalg::expm_hermitian(&h, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, random_hermitian};
    use crate::metrics::TargetGate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prop(m: CMatrix, t: f64) -> Propagator {
        Propagator { matrix: m, t_start: 0.0, t_end: t }
    }

    #[test]
    fn pure_zx_generator() {
        let tr = rotation_angles(&[prop(TargetGate::Zx90.matrix(), 1.0)], &RotationOptions::default()).unwrap();
        let th = tr.theta[0];
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (3, 1) { std::f64::consts::FRAC_PI_2 } else { 0.0 };
                assert!((th[i][j] - expected).abs() < 1e-12, "θ[{i}][{j}] = {}", th[i][j]);
            }
        }
    }

    #[test]
    fn short_times_stay_on_principal_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(4, &mut rng);
        let steps: Vec<Propagator> =
            (1..=10).map(|k| prop(crate::linalg::expm_hermitian(&h, 0.01 * k as f64), k as f64)).collect();
        let tr = rotation_angles(&steps, &RotationOptions::default()).unwrap();
        assert_eq!(tr.theta, tr.principal);
        assert!(tr.branches.iter().all(|n| n.iter().all(|&x| x == 0)));
    }

    #[test]
    fn reconstruction_reproduces_qubit_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = crate::linalg::expm_hermitian(&random_hermitian(4, &mut rng), 0.7);
        let tr = rotation_angles(&[prop(u.clone(), 1.0)], &RotationOptions::default()).unwrap();
        assert!(max_abs_diff(&reconstruct(&tr.theta[0]), &u) < 1e-10);
    }

    #[test]
    fn growing_zx_rotation_is_unwrapped() {
        // θ_ZX runs from 0 to 3π; the principal branch wraps, the smoothed
        // branch does not. At θ = 2π the propagator is −I, every eigenbasis
        // is valid and the step can only be flagged.
        let steps: Vec<Propagator> = (1..=30)
            .map(|k| {
                let th = 0.1 * std::f64::consts::PI * k as f64;
                prop(crate::linalg::expm_hermitian(&pauli2(3, 1), 0.5 * th), k as f64)
            })
            .collect();
        let tr = rotation_angles(&steps, &RotationOptions::default()).unwrap();
        for (k, zx) in tr.theta_zx().iter().enumerate() {
            if tr.branch_point[k] {
                assert_eq!(k, 19);
                continue;
            }
            let expected = 0.1 * std::f64::consts::PI * (k + 1) as f64;
            assert!((zx - expected).abs() < 1e-9, "step {k}: {zx} vs {expected}");
        }
        assert!(tr.principal.iter().any(|t| t[3][1] < 2.0));
        assert!(tr.outliers.iter().all(|&k| k == 19));
    }
}
