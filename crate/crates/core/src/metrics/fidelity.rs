//! Average gate fidelity on the qubit subspace.

use crate::error::{ensure, Result};
use crate::linalg::{select, trace, CMatrix};
use crate::qutrit::{QUBIT_INDICES_1Q, QUBIT_INDICES_2Q};

/// `M = U_qubit · U_target†` with `n ∈ {2, 4}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    m: CMatrix,
}

impl OverlapMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure!(m.is_square(), Validation, "overlap matrix must be square, got {}×{}", m.nrows(), m.ncols());
        ensure!(matches!(m.nrows(), 2 | 4), Validation, "overlap matrix must be 2×2 or 4×4, got {}", m.nrows());
        Ok(Self { m })
    }

    /// Projects `u` (dim 9, 3, 4 or 2) onto the qubit subspace and forms
    /// the overlap with `target`.
    pub fn from_unitary(u: &CMatrix, target: &CMatrix) -> Result<Self> {
        let uq = qubit_block(u)?;
        ensure!(
            uq.nrows() == target.nrows() && target.is_square(),
            Validation,
            "target is {}×{} but the qubit block is {}×{}",
            target.nrows(),
            target.ncols(),
            uq.nrows(),
            uq.ncols()
        );
        Self::new(uq * target.adjoint())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }
}

/// `Π U Π` restricted to the qubit subspace. Qubit-sized inputs pass
/// through unchanged.
pub fn qubit_block(u: &CMatrix) -> Result<CMatrix> {
    ensure!(u.is_square(), Validation, "expected a square matrix");
    match u.nrows() {
        9 => Ok(select(u, &QUBIT_INDICES_2Q)),
        3 => Ok(select(u, &QUBIT_INDICES_1Q)),
        2 | 4 => Ok(u.clone()),
        n => Err(crate::Error::Validation(format!("no qubit subspace defined for dimension {n}"))),
    }
}

/// `[Tr(MM†) + |Tr M|²] / (n(n+1))`.
pub fn avg_gate_fidelity(m: &OverlapMatrix) -> f64 {
    let n = m.n() as f64;
    let mm = m.m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    (mm + trace(&m.m).norm_sqr()) / (n * (n + 1.0))
}

/// Average fidelity of `u` against `target` without frame correction.
pub fn gate_fidelity(u: &CMatrix, target: &CMatrix) -> Result<f64> {
    Ok(avg_gate_fidelity(&OverlapMatrix::from_unitary(u, target)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, pauli2, random_state, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_has_unit_fidelity() {
        assert!((avg_gate_fidelity(&OverlapMatrix::new(identity(4)).unwrap()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn traceless_unitary_gives_one_fifth() {
        let m = OverlapMatrix::new(pauli2(3, 1)).unwrap();
        assert!((avg_gate_fidelity(&m) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(OverlapMatrix::new(identity(3)).is_err());
        assert!(OverlapMatrix::new(CMatrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn global_phase_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(4, &mut rng);
        let a = gate_fidelity(&u, &identity(4)).unwrap();
        let b = gate_fidelity(&(u * c(0.6, 0.8)), &identity(4)).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn matches_haar_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(4, &mut rng);
        let t = random_unitary(4, &mut rng);
        let m = OverlapMatrix::from_unitary(&u, &t).unwrap();
        let samples = 20_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let psi = random_state(4, &mut rng);
            acc += psi.dotc(&(m.matrix() * &psi)).norm_sqr();
        }
        assert!((acc / samples as f64 - avg_gate_fidelity(&m)).abs() < 0.01);
    }
}
