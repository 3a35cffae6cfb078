//! Leakage out of the computational subspace and linear entropy.

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::qutrit::{QUBIT_INDICES_1Q, QUBIT_INDICES_2Q};

fn qubit_indices(dim: usize) -> Result<&'static [usize]> {
    match dim {
        9 => Ok(&QUBIT_INDICES_2Q),
        3 => Ok(&QUBIT_INDICES_1Q),
        n => Err(Error::Validation(format!("leakage needs a qutrit propagator (dim 3 or 9), got {n}"))),
    }
}

/// `L = Tr[I2 · U (I1/d1) U†]`: population leaving the computational
/// subspace, averaged over its basis states.
pub fn leakage(u: &CMatrix) -> Result<f64> {
    let idx = qubit_indices(u.nrows())?;
    let dim = u.nrows();
    let mut total = 0.0;
    for &j in idx {
        for i in (0..dim).filter(|i| !idx.contains(i)) {
            total += u[(i, j)].norm_sqr();
        }
    }
    Ok(total / idx.len() as f64)
}

/// Population kept inside the computational subspace; `1 − leakage` for
/// unitary `u`.
pub fn retained_population(u: &CMatrix) -> Result<f64> {
    let idx = qubit_indices(u.nrows())?;
    let mut total = 0.0;
    for &j in idx {
        for &i in idx {
            total += u[(i, j)].norm_sqr();
        }
    }
    Ok(total / idx.len() as f64)
}

/// `1 − Tr ρ_B²` of a two-qubit state, given in the 9-level basis (projected
/// onto the qubit subspace and renormalized) or directly as a 4-vector.
pub fn linear_entropy(state: &CVector) -> Result<f64> {
    let q: Vec<Complex64> = match state.len() {
        9 => QUBIT_INDICES_2Q.iter().map(|&k| state[k]).collect(),
        4 => state.iter().copied().collect(),
        n => return Err(Error::Validation(format!("expected a 9- or 4-component state, got {n}"))),
    };
    let norm2: f64 = q.iter().map(|z| z.norm_sqr()).sum();
    ensure!(norm2.sqrt() >= 1e-6, Numerical, "state has no weight in the qubit subspace");
    // ρ_B[b, b'] = Σ_a ψ[a b] ψ*[a b'] / norm²
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for bp in 0..2 {
                rho[b][bp] += q[2 * a + b] * q[2 * a + bp].conj();
            }
        }
    }
    let mut purity = 0.0;
    for b in 0..2 {
        for bp in 0..2 {
            purity += (rho[b][bp] * rho[bp][b]).re;
        }
    }
    Ok(1.0 - purity / (norm2 * norm2))
}

/// The six Pauli eigenstates `|0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩`.
pub fn pauli_eigenstates() -> [[Complex64; 2]; 6] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
        [c(s, 0.0), c(s, 0.0)],
        [c(s, 0.0), c(-s, 0.0)],
        [c(s, 0.0), c(0.0, s)],
        [c(s, 0.0), c(0.0, -s)],
    ]
}

/// Product state `|a⟩⊗|b⟩` embedded in dimension `dim` (4 or 9).
pub fn product_state(a: &[Complex64; 2], b: &[Complex64; 2], dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    let stride = if dim == 9 { 3 } else { 2 };
    for i in 0..2 {
        for j in 0..2 {
            v[stride * i + j] = a[i] * b[j];
        }
    }
    v
}

/// Index pairs `(control, target)` into [`pauli_eigenstates`] that a
/// CNOT-class gate maps to maximally entangled states: control off the Z
/// axis, target off the X axis.
pub fn entangled_input_pairs() -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(16);
    for a in [2, 3, 4, 5] {
        for b in [0, 1, 4, 5] {
            out.push((a, b));
        }
    }
    out
}

/// Mean linear entropy of `U|a b⟩` over the 16 inputs of
/// [`entangled_input_pairs`].
pub fn avg_linear_entropy(u: &CMatrix) -> Result<f64> {
    let dim = u.nrows();
    ensure!(dim == 9 || dim == 4, Validation, "expected a two-qubit-capable propagator, got dim {dim}");
    let states = pauli_eigenstates();
    let pairs = entangled_input_pairs();
    let mut total = 0.0;
    for &(a, b) in &pairs {
        total += linear_entropy(&(u * product_state(&states[a], &states[b], dim)))?;
    }
    Ok(total / pairs.len() as f64)
}
