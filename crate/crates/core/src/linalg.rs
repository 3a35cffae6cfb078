//! Small dense complex linear algebra used by the simulator and metrics.
//!
//! Every matrix here is at most 9×9, so everything is built on dynamically
//! sized `nalgebra` matrices and favors exactness over asymptotic speed.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |U†U − I|`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &identity(n))
}

/// `max |H − H†|`.
pub fn hermiticity_error(h: &CMatrix) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are returned in
/// ascending order with matching eigenvector columns.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// `exp(-i H t)` for Hermitian `H`, through its eigen-decomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let mut scaled = vectors.clone();
    for (k, e) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -e * t);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// Function of a Hermitian matrix applied to its spectrum.
pub fn hermitian_map(h: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let mut scaled = vectors.clone();
    for (k, e) in values.iter().enumerate() {
        let s = f(*e);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= s;
        }
    }
    scaled * vectors.adjoint()
}

/// Unitary polar factor `W (W†W)^{-1/2}` of a nonsingular matrix.
pub fn polar_unitary(w: &CMatrix) -> CMatrix {
    let gram = w.adjoint() * w;
    let inv_sqrt = hermitian_map(&gram, |x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt());
    w * inv_sqrt
}

/// Eigen-decomposition of a unitary (normal) matrix: returns eigen-phases
/// `φ_k ∈ (−π, π]` and a unitary matrix of eigenvectors with
/// `U = V diag(e^{iφ}) V†`.
pub fn unitary_eigen(u: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = u.nrows();
    let schur = Schur::new(u.clone());
    let (q, t) = schur.unpack();
    let phases = (0..n).map(|k| t[(k, k)].arg()).collect();
    // Re-orthonormalize in case of clustered eigenvalues.
    (phases, polar_unitary(&q))
}

/// Submatrix at the given row/column indices.
pub fn select(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Embeds a small matrix into a zero matrix of size `n` at `idx`.
pub fn embed(m: &CMatrix, idx: &[usize], n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(n, n);
    for (r, &i) in idx.iter().enumerate() {
        for (col, &j) in idx.iter().enumerate() {
            out[(i, j)] = m[(r, col)];
        }
    }
    out
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn pauli(k: usize) -> CMatrix {
    match k {
        0 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        1 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// Two-qubit Pauli product `P_i ⊗ P_j`, first factor acting on qubit 0.
pub fn pauli2(i: usize, j: usize) -> CMatrix {
    kron(&pauli(i), &pauli(j))
}

/// Random Hermitian matrix with entries uniform in the unit square.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix
/// with the phases of `R`'s diagonal divided out.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let (q, r) = z.qr().unpack();
    let mut q = q;
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let norm = v.norm();
    v / c(norm, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian(&CMatrix::zeros(9, 9), 3.0);
        assert!(max_abs_diff(&u, &identity(9)) < 1e-14);
    }

    #[test]
    fn expm_matches_taylor_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(5, &mut rng) * c(0.3, 0.0);
        // Taylor series oracle, converges fast for small norm.
        let a = &h * c(0.0, -1.0);
        let mut term = identity(5);
        let mut sum = identity(5);
        for k in 1..40 {
            term = &term * &a * c(1.0 / k as f64, 0.0);
            sum += &term;
        }
        assert!(max_abs_diff(&expm_hermitian(&h, 1.0), &sum) < 1e-12);
    }

    #[test]
    fn unitary_eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(9, &mut rng);
        let u = expm_hermitian(&h, 2.0);
        let (phases, v) = unitary_eigen(&u);
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            9,
            phases.iter().map(|p| Complex64::from_polar(1.0, *p)),
        ));
        assert!(max_abs_diff(&(&v * d * v.adjoint()), &u) < 1e-10);
    }

    #[test]
    fn polar_projection_restores_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = expm_hermitian(&random_hermitian(4, &mut rng), 1.0);
        let noisy = &u + CMatrix::from_fn(4, 4, |_, _| c(rng.random_range(-1e-6..1e-6), 0.0));
        let p = polar_unitary(&noisy);
        assert!(unitarity_error(&p) < 1e-13);
        assert!(max_abs_diff(&p, &u) < 1e-5);
    }
}
