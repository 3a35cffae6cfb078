//! Worst-case state fidelity `min_ψ |⟨ψ| U_target† U_qubit |ψ⟩|²` over
//! pure qubit-subspace states.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fidelity::qubit_block;
use crate::error::{ensure, Result};
use crate::linalg::{c, pauli, CMatrix, CVector};
use crate::optim::{minimize, NelderMeadOptions};

pub const DEFAULT_STARTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub fidelity: f64,
    /// Minimizing initial state in the qubit subspace.
    pub state: CVector,
    /// Set when no local search met its convergence tolerance.
    pub unconverged: bool,
}

/// Real chart of a pure state: `c0 = x0`, `c_k = x_{2k-1} + i x_{2k}`,
/// normalized. `2n − 1` reals for dimension `n`.
pub fn state_from_chart(x: &[f64]) -> CVector {
    let n = x.len().div_ceil(2);
    let mut v = CVector::zeros(n);
    v[0] = c(x[0], 0.0);
    for k in 1..n {
        v[k] = c(x[2 * k - 1], x[2 * k]);
    }
    let norm = v.norm();
    if norm == 0.0 {
        v[0] = c(1.0, 0.0);
        return v;
    }
    v / c(norm, 0.0)
}

/// `|⟨ψ|M|ψ⟩|²`.
pub fn state_fidelity(m: &CMatrix, psi: &CVector) -> f64 {
    psi.dotc(&(m * psi)).norm_sqr()
}

fn overlap(u: &CMatrix, target: &CMatrix) -> Result<CMatrix> {
    let uq = qubit_block(u)?;
    ensure!(
        matches!(uq.nrows(), 2 | 4) && target.nrows() == uq.nrows(),
        Validation,
        "target is {}×{} but the qubit block is {}×{}",
        target.nrows(),
        target.ncols(),
        uq.nrows(),
        uq.ncols()
    );
    Ok(target.adjoint() * uq)
}

/// Multi-start Nelder-Mead over the real chart of the state.
pub fn worst_case_fidelity(u: &CMatrix, target: &CMatrix, starts: usize, seed: u64) -> Result<WorstCase> {
    let m = overlap(u, target)?;
    let n = m.nrows();
    let dim = 2 * n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = NelderMeadOptions { max_evals: 4000, ftol: 1e-15, xtol: 1e-10, restarts: 3, ..Default::default() };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut any_converged = false;
    for s in 0..starts.max(1) {
        // The first starts are the computational basis states.
        let x0: Vec<f64> = if s < n {
            let mut x = vec![0.0; dim];
            if s == 0 { x[0] = 1.0 } else { x[2 * s - 1] = 1.0 }
            x
        } else {
            (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let r = minimize(|x| state_fidelity(&m, &state_from_chart(x)), &x0, &vec![0.25; dim], None, &opts);
        any_converged |= r.converged;
        if best.as_ref().is_none_or(|(f, _)| r.f < *f) {
            best = Some((r.f, r.x));
        }
    }
    let (f, x) = best.expect("at least one start");
    if !any_converged {
        log::warn!("worst-case search did not converge; returning best value found ({f:.3e})");
    }
    Ok(WorstCase { fidelity: f, state: state_from_chart(&x), unconverged: !any_converged })
}

/// Coefficients of `F(n) = nᵀb + ½ nᵀ(A + 2cI)n` on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochQuadratic {
    pub c: f64,
    pub b: [f64; 3],
    pub a: [[f64; 3]; 3],
}

impl BlochQuadratic {
    /// Gell-Mann expansion of `Tr[U ρ U† · U_t ρ U_t†]` for qubit-subspace
    /// `ρ` of a qutrit, with `U_t` embedded as `diag(target, 1)`.
    pub fn from_qutrit(u: &CMatrix, target: &CMatrix) -> Result<Self> {
        ensure!(u.nrows() == 3 && u.ncols() == 3, Validation, "expected a qutrit propagator");
        ensure!(target.nrows() == 2 && target.ncols() == 2, Validation, "expected a single-qubit target");
        let mut ut = CMatrix::identity(3, 3);
        ut.view_mut((0, 0), (2, 2)).copy_from(target);
        let lambda = |k: usize| -> CMatrix {
            if k == 8 {
                let s = 1.0 / 3f64.sqrt();
                CMatrix::from_diagonal(&CVector::from_vec(vec![c(s, 0.0), c(s, 0.0), c(-2.0 * s, 0.0)]))
            } else {
                let mut m = CMatrix::zeros(3, 3);
                m.view_mut((0, 0), (2, 2)).copy_from(&pauli(k));
                m
            }
        };
        let evolved: Vec<CMatrix> = [1, 2, 3, 8].iter().map(|&k| u * lambda(k) * u.adjoint()).collect();
        let ideal: Vec<CMatrix> = [1, 2, 3, 8].iter().map(|&k| &ut * lambda(k) * ut.adjoint()).collect();
        let tr = |a: &CMatrix, b: &CMatrix| -> f64 { (a * b).trace().re };
        let cc = 1.0 / 3.0 + tr(&evolved[3], &ideal[3]) / 12.0;
        let mut b = [0.0; 3];
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            b[i] = (tr(&evolved[3], &ideal[i]) + tr(&evolved[i], &ideal[3])) / (4.0 * 3f64.sqrt());
            for j in 0..3 {
                a[i][j] = (tr(&evolved[i], &ideal[j]) + tr(&evolved[j], &ideal[i])) / 4.0;
            }
        }
        Ok(Self { c: cc, b, a })
    }

    pub fn eval(&self, n: &[f64; 3]) -> f64 {
        let mut v = self.c * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        for i in 0..3 {
            v += n[i] * self.b[i];
            for j in 0..3 {
                v += 0.5 * n[i] * self.a[i][j] * n[j];
            }
        }
        v
    }
}

/// Global minimum of `bᵀn + ½ nᵀQn` on `|n| = 1`. Returns `(value, n)`.
///
/// At the minimum `(Q − μI)n = −b` with `μ ≤ λ_min(Q)`. In the eigenbasis
/// of `Q` this is the secular equation `Σ β_k² / (λ_k − μ)² = 1`, solved by
/// safeguarded Newton iteration. If `b` has no component along the lowest
/// eigenspace and the secular sum stays below one at `μ = λ_min` (the
/// hard case), the remaining norm goes into that eigenspace.
pub fn minimize_on_sphere(q: &Matrix3<f64>, b: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let sym = 0.5 * (q + q.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lam: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs: Vec<Vector3<f64>> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
    let beta: Vec<f64> = vecs.iter().map(|v| v.dot(b)).collect();
    let scale = lam.iter().map(|l| l.abs()).fold(b.norm(), f64::max).max(1.0);
    let tol = 1e-13 * scale;
    let low: Vec<usize> = (0..3).filter(|&k| lam[k] - lam[0] <= tol).collect();
    let objective = |n: &Vector3<f64>| b.dot(n) + 0.5 * n.dot(&(sym * n));

    let low_beta = low.iter().map(|&k| beta[k] * beta[k]).sum::<f64>().sqrt();
    if low_beta <= 1e-12 * scale {
        let rest: f64 = (0..3).filter(|k| !low.contains(k)).map(|k| (beta[k] / (lam[k] - lam[0])).powi(2)).sum();
        if rest <= 1.0 {
            let mut n = Vector3::zeros();
            for k in (0..3).filter(|k| !low.contains(k)) {
                n -= vecs[k] * (beta[k] / (lam[k] - lam[0]));
            }
            n += vecs[low[0]] * (1.0 - rest).max(0.0).sqrt();
            let alt = n - 2.0 * vecs[low[0]] * vecs[low[0]].dot(&n);
            let (fa, fb) = (objective(&n), objective(&alt));
            return if fa <= fb { (fa, n) } else { (fb, alt) };
        }
    }

    // secular(μ) = Σ β²/(λ−μ)² − 1, increasing on μ < λ_min.
    let secular = |mu: f64| -> (f64, f64) {
        let mut s = -1.0;
        let mut ds = 0.0;
        for k in 0..3 {
            let d = lam[k] - mu;
            s += beta[k] * beta[k] / (d * d);
            ds += 2.0 * beta[k] * beta[k] / (d * d * d);
        }
        (s, ds)
    };
    let bn = b.norm();
    let mut hi = lam[0];
    let mut lo = lam[0] - bn - 1.0;
    let mut mu = lam[0] - bn.max(1e-300);
    for _ in 0..200 {
        let (s, ds) = secular(mu);
        if s > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        let mut next = mu - s / ds;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - mu).abs() <= 1e-16 * scale.max(mu.abs()) {
            mu = next;
            break;
        }
        mu = next;
    }
    let mut n = Vector3::zeros();
    for k in 0..3 {
        n -= vecs[k] * (beta[k] / (lam[k] - mu));
    }
    let n = n / n.norm();
    (objective(&n), n)
}

/// Single-qubit worst-case fidelity via the sphere-constrained quadratic
/// program. `u` is the 3×3 qutrit propagator.
pub fn worst_case_scqp_1q(u: &CMatrix, target: &CMatrix) -> Result<(f64, [f64; 3])> {
    let quad = BlochQuadratic::from_qutrit(u, target)?;
    let q = Matrix3::from_fn(|i, j| quad.a[i][j] + if i == j { 2.0 * quad.c } else { 0.0 });
    let b = Vector3::from(quad.b);
    let (value, n) = minimize_on_sphere(&q, &b);
    Ok((value, [n[0], n[1], n[2]]))
}

/// Qubit state with Bloch vector `n`.
pub fn bloch_state(n: &[f64; 3]) -> CVector {
    let theta = n[2].clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    CVector::from_vec(vec![c((0.5 * theta).cos(), 0.0), Complex64::from_polar((0.5 * theta).sin(), phi)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{embed, expm_hermitian, identity, random_unitary};

    fn rz(eps: f64) -> CMatrix {
        expm_hermitian(&pauli(3), 0.5 * eps)
    }

    #[test]
    fn identity_is_perfect() {
        let w = worst_case_fidelity(&identity(4), &identity(4), 4, 0).unwrap();
        assert!((w.fidelity - 1.0).abs() < 1e-12);
        let (f, _) = worst_case_scqp_1q(&identity(3), &identity(2)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_rotation_worst_case_is_analytic() {
        let eps: f64 = 0.1;
        let expected = (0.5 * eps).cos().powi(2);
        let w = worst_case_fidelity(&rz(eps), &identity(2), 16, 1).unwrap();
        assert!((w.fidelity - expected).abs() < 1e-10, "{}", w.fidelity);
        let mut u3 = embed(&rz(eps), &[0, 1], 3);
        u3[(2, 2)] = c(1.0, 0.0);
        let (f, n) = worst_case_scqp_1q(&u3, &identity(2)).unwrap();
        assert!((f - expected).abs() < 1e-12);
        assert!(n[2].abs() < 1e-6, "equator state expected, got {n:?}");
    }

    #[test]
    fn quadratic_reproduces_state_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary(3, &mut rng);
        let t = random_unitary(2, &mut rng);
        let quad = BlochQuadratic::from_qutrit(&u, &t).unwrap();
        let m = t.adjoint() * qubit_block(&u).unwrap();
        for _ in 0..20 {
            let v: Vector3<f64> = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let v = v / v.norm();
            let n = [v[0], v[1], v[2]];
            let f = state_fidelity(&m, &bloch_state(&n));
            assert!((quad.eval(&n) - f).abs() < 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&f));
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((quad.a[i][j] - quad.a[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sphere_solver_handles_hard_case() {
        // b orthogonal to the lowest eigenvector, small enough to leave norm.
        let q = Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 2.0));
        let b = Vector3::new(0.0, 0.5, 0.0);
        let (v, n) = minimize_on_sphere(&q, &b);
        // Oracle: dense scan of the sphere.
        let mut best: f64 = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..800 {
                let th = std::f64::consts::PI * i as f64 / 400.0;
                let ph = 2.0 * std::f64::consts::PI * j as f64 / 800.0;
                let m = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                best = best.min(b.dot(&m) + 0.5 * m.dot(&(q * m)));
            }
        }
        assert!(v <= best + 1e-12 && v > best - 1e-3);
        assert!((n.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn worst_case_below_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let u = random_unitary(4, &mut rng);
            let t = random_unitary(4, &mut rng);
            let wc = worst_case_fidelity(&u, &t, 8, 3).unwrap().fidelity;
            let avg = super::super::fidelity::gate_fidelity(&u, &t).unwrap();
            assert!(wc <= avg + 1e-12);
        }
    }
}
