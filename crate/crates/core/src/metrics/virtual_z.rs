//! Virtual-Z frame corrections that maximize the average fidelity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fidelity::{avg_gate_fidelity, OverlapMatrix};
use crate::error::Result;
use crate::linalg::CMatrix;

/// Angles of `diag(1, e^{iθ0}) ⊗ diag(1, e^{iθ1})` applied to `M`.
/// Single-qubit corrections only use `theta0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VirtualZAngles {
    pub theta0: f64,
    pub theta1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualZResult {
    pub angles: VirtualZAngles,
    pub fidelity: f64,
    pub uncorrected: f64,
    /// Set when a cross term vanished and the angle was fixed to zero.
    pub degenerate: bool,
}

/// `V_Z M` for the given angles.
pub fn apply_virtual_z(m: &CMatrix, angles: VirtualZAngles) -> CMatrix {
    let n = m.nrows();
    let phase = |row: usize| -> Complex64 {
        let theta = if n == 2 {
            if row == 1 { angles.theta0 } else { 0.0 }
        } else {
            let (q0, q1) = (row / 2, row % 2);
            q0 as f64 * angles.theta0 + q1 as f64 * angles.theta1
        };
        Complex64::from_polar(1.0, theta)
    };
    let mut out = m.clone();
    for r in 0..n {
        let p = phase(r);
        for c in 0..n {
            out[(r, c)] *= p;
        }
    }
    out
}

/// Angle maximizing `Re(ℳ e^{iθ})`: `tan θ = −Im ℳ / Re ℳ`, taking the
/// root with negative second derivative.
fn best_angle(cross: Complex64) -> (f64, bool) {
    if cross.norm() == 0.0 {
        return (0.0, true);
    }
    let mut theta = if cross.re == 0.0 {
        -cross.im.signum() * std::f64::consts::FRAC_PI_2
    } else {
        (-cross.im / cross.re).atan()
    };
    if !(theta.sin() * cross.im < theta.cos() * cross.re) {
        let s = if theta == 0.0 { 1.0 } else { theta.signum() };
        theta -= s * std::f64::consts::PI;
    }
    (theta, false)
}

/// Sequential correction: `θ0` first on `M`, then `θ1` on `V_Z(θ0) M`.
pub fn virtual_z_correct(m: &OverlapMatrix) -> VirtualZResult {
    let mat = m.matrix();
    let uncorrected = avg_gate_fidelity(m);
    let (angles, degenerate) = if m.n() == 2 {
        let (t, d) = best_angle(mat[(0, 0)].conj() * mat[(1, 1)]);
        (VirtualZAngles { theta0: t, theta1: 0.0 }, d)
    } else {
        let cross0 = (mat[(0, 0)] + mat[(1, 1)]).conj() * (mat[(2, 2)] + mat[(3, 3)]);
        let (t0, d0) = best_angle(cross0);
        let m1 = apply_virtual_z(mat, VirtualZAngles { theta0: t0, theta1: 0.0 });
        let cross1 = (m1[(0, 0)] + m1[(2, 2)]).conj() * (m1[(1, 1)] + m1[(3, 3)]);
        let (t1, d1) = best_angle(cross1);
        (VirtualZAngles { theta0: t0, theta1: t1 }, d0 || d1)
    };
    let corrected = OverlapMatrix::new(apply_virtual_z(mat, angles)).expect("same shape");
    VirtualZResult { angles, fidelity: avg_gate_fidelity(&corrected), uncorrected, degenerate }
}

/// Virtual-Z-corrected average fidelity of `u` against `target`.
pub fn corrected_fidelity(u: &CMatrix, target: &CMatrix) -> Result<VirtualZResult> {
    Ok(virtual_z_correct(&OverlapMatrix::from_unitary(u, target)?))
}

/// Fidelity with fixed, previously determined angles.
pub fn fidelity_with_angles(u: &CMatrix, target: &CMatrix, angles: VirtualZAngles) -> Result<f64> {
    let m = OverlapMatrix::from_unitary(u, target)?;
    Ok(avg_gate_fidelity(&OverlapMatrix::new(apply_virtual_z(m.matrix(), angles))?))
}
