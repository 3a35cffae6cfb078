//! Effective ZX interaction rate of a constant cross-resonance drive.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::cr_hamiltonian;
use super::params::{SystemParams, MHZ_TO_RAD_PER_NS};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, polar_unitary, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZxRate {
    /// Signed rate in MHz, with `H ⊇ (ω/2)·Z⊗X`.
    pub omega_zx_mhz: f64,
    /// Time for a `ZX(π/2)` rotation, ns.
    pub gate_time_ns: f64,
    /// Spurious target rotation rates in the same convention,
    /// `H ⊇ (ω_IX/2)·I⊗X + (ω_IY/2)·I⊗Y`.
    pub omega_ix_mhz: f64,
    pub omega_iy_mhz: f64,
}

/// Block-diagonalizes the dressed CR Hamiltonian on the computational
/// subspace. For each control state `c` the two eigenvectors with the
/// largest weight on `{|c0⟩, |c1⟩}` are selected; their projections are
/// orthonormalized and give a 2×2 effective target Hamiltonian `H_c`.
/// The ZX rate is the difference of the X components of `H_0` and `H_1`.
pub fn effective_zx_rate(params: &SystemParams, omega_mhz: f64) -> Result<ZxRate> {
    if !(omega_mhz >= 0.0 && omega_mhz.is_finite()) {
        return Err(Error::Validation(format!("drive strength must be non-negative, got {omega_mhz}")));
    }
    let h = cr_hamiltonian(params, omega_mhz);
    let (energies, vecs) = hermitian_eigen(&h);
    let mut used = [false; 9];
    let mut hx = [0.0; 2];
    let mut hy = [0.0; 2];
    for c in 0..2 {
        let rows = [3 * c, 3 * c + 1];
        let weight = |k: usize| rows.iter().map(|&r| vecs[(r, k)].norm_sqr()).sum::<f64>();
        let mut picked = Vec::with_capacity(2);
        for _ in 0..2 {
            let best = (0..9)
                .filter(|&k| !used[k])
                .max_by(|&a, &b| weight(a).total_cmp(&weight(b)))
                .expect("nine eigenvectors");
            if weight(best) <= 0.5 {
                return Err(Error::Assignment(format!(
                    "control block |{c}⟩: dressed state {best} (E = {:.4} rad/ns) has only {:.3} weight on |{c}0⟩,|{c}1⟩; \
                     levels are crossing at omega = {omega_mhz} MHz",
                    energies[best],
                    weight(best)
                )));
            }
            used[best] = true;
            picked.push(best);
        }
        let mut w = CMatrix::zeros(2, 2);
        for (col, &k) in picked.iter().enumerate() {
            for (row, &r) in rows.iter().enumerate() {
                w[(row, col)] = vecs[(r, k)];
            }
        }
        let w = polar_unitary(&w);
        let mut d = CMatrix::zeros(2, 2);
        for (col, &k) in picked.iter().enumerate() {
            d[(col, col)] = Complex64::new(energies[k], 0.0);
        }
        let hc = &w * d * w.adjoint();
        hx[c] = 0.5 * (hc[(0, 1)] + hc[(1, 0)]).re;
        hy[c] = 0.5 * (hc[(1, 0)] - hc[(0, 1)]).im;
    }
    let omega_rad = hx[0] - hx[1];
    // A vanishing rate gives an infinite gate time.
    Ok(ZxRate {
        omega_zx_mhz: omega_rad / MHZ_TO_RAD_PER_NS,
        gate_time_ns: std::f64::consts::FRAC_PI_2 / omega_rad.abs(),
        omega_ix_mhz: (hx[0] + hx[1]) / MHZ_TO_RAD_PER_NS,
        omega_iy_mhz: (hy[0] + hy[1]) / MHZ_TO_RAD_PER_NS,
    })
}
