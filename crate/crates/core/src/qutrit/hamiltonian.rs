//! Rotating-frame Hamiltonians of one and two three-level transmons.
//!
//! Two-transmon states are ordered `|n0 n1⟩ → 3·n0 + n1`, i.e.
//! `(00, 01, 02, 10, ...)`. Energies are returned in rad/ns.

use num_complex::Complex64;

use super::params::{SingleTransmonParams, SystemParams, ValidationOptions, MHZ_TO_RAD_PER_NS};
use crate::error::{ensure, Error, Result};
use crate::linalg::{identity, kron, CMatrix};
use crate::pulses::{Channel, DriveAmplitudes};

pub const LEVELS: usize = 3;
pub const DIM_2Q: usize = LEVELS * LEVELS;

/// Annihilation operator truncated at three levels.
pub fn annihilation() -> CMatrix {
    let mut b = CMatrix::zeros(LEVELS, LEVELS);
    b[(0, 1)] = Complex64::new(1.0, 0.0);
    b[(1, 2)] = Complex64::new(2f64.sqrt(), 0.0);
    b
}

/// Index of `|n0 n1⟩` in the two-transmon basis.
pub fn pair_index(n0: usize, n1: usize) -> usize {
    LEVELS * n0 + n1
}

/// Whether the rotating-frame phase factors `e^{iδ_j t}` are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FramePhases {
    On,
    Off,
}

/// `δ b†b + (α/2) b†b†bb + (Ω/2)(d·b + d*·b†)` for one transmon.
pub fn build_hamiltonian_1q(params: &SingleTransmonParams, d: Complex64) -> Result<CMatrix> {
    ensure!(
        d.re.abs() <= 1.0 && d.im.abs() <= 1.0,
        Validation,
        "drive amplitude {d} outside the unit box"
    );
    Ok(hamiltonian_1q_unchecked(params, d))
}

pub(crate) fn hamiltonian_1q_unchecked(params: &SingleTransmonParams, d: Complex64) -> CMatrix {
    let mut h = CMatrix::zeros(LEVELS, LEVELS);
    for n in 0..LEVELS {
        let n_f = n as f64;
        let e = params.detuning * n_f + 0.5 * params.anharmonicity * n_f * (n_f - 1.0);
        h[(n, n)] = Complex64::new(e * MHZ_TO_RAD_PER_NS, 0.0);
    }
    let drive = 0.5 * params.drive_strength * MHZ_TO_RAD_PER_NS * d;
    // d·b lands above the diagonal, d*·b† below.
    for n in 0..LEVELS - 1 {
        let m = ((n + 1) as f64).sqrt();
        h[(n, n + 1)] += drive * m;
        h[(n + 1, n)] += drive.conj() * m;
    }
    h
}

/// Nonzero entries `(row, col, value)` of a real sparse operator.
type Sparse = Vec<(usize, usize, f64)>;

fn sparse_of(m: &CMatrix) -> Sparse {
    let mut out = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if m[(r, c)].norm() > 0.0 {
                out.push((r, c, m[(r, c)].re));
            }
        }
    }
    out
}

/// Two coupled transmons with a fixed parameter set. Immutable and cheap to
/// clone; safe to share between rollout workers.
#[derive(Debug, Clone)]
pub struct TransmonPair {
    params: SystemParams,
    h_sys: CMatrix,
    b0: Sparse,
    b1: Sparse,
}

impl TransmonPair {
    pub fn new(params: SystemParams) -> Result<Self> {
        Self::with_options(params, ValidationOptions::default())
    }

    pub fn with_options(params: SystemParams, opts: ValidationOptions) -> Result<Self> {
        params.validate(opts)?;
        Ok(Self::new_unchecked(params))
    }

    /// Skips validation; used on the hot path of noisy rollouts where every
    /// tick redraws the parameters.
    pub(crate) fn new_unchecked(params: SystemParams) -> Self {
        let b = annihilation();
        let id = identity(LEVELS);
        let b0 = kron(&b, &id);
        let b1 = kron(&id, &b);
        let mut h_sys = CMatrix::zeros(DIM_2Q, DIM_2Q);
        for n0 in 0..LEVELS {
            for n1 in 0..LEVELS {
                let (a, b) = (n0 as f64, n1 as f64);
                let e = params.delta0 * a
                    + params.delta1 * b
                    + 0.5 * params.alpha0 * a * (a - 1.0)
                    + 0.5 * params.alpha1 * b * (b - 1.0);
                let k = pair_index(n0, n1);
                h_sys[(k, k)] = Complex64::new(e * MHZ_TO_RAD_PER_NS, 0.0);
            }
        }
        let hop = b0.adjoint() * &b1 + &b0 * b1.adjoint();
        h_sys += hop * Complex64::new(params.j * MHZ_TO_RAD_PER_NS, 0.0);
        Self { params, h_sys, b0: sparse_of(&b0), b1: sparse_of(&b1) }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        DIM_2Q
    }

    /// Drift part: detunings, anharmonicities and exchange coupling.
    pub fn system_hamiltonian(&self) -> &CMatrix {
        &self.h_sys
    }

    /// Full rotating-frame Hamiltonian at time `t` (ns).
    ///
    /// With `FramePhases::Off` only `u01` and `d1` may be driven; their
    /// phase factors `e^{iδ1 t}` are dropped, which is exact in the
    /// `δ1 = 0` frame.
    pub fn hamiltonian(&self, amps: &DriveAmplitudes, t: f64, frame: FramePhases) -> Result<CMatrix> {
        ensure!(amps.in_unit_box(), Validation, "drive amplitudes {amps:?} outside the unit box");
        if frame == FramePhases::Off && amps.needs_frame_phases() {
            return Err(Error::Contract(
                "frame phases are off but d0 or u10 is driven".to_string(),
            ));
        }
        Ok(self.hamiltonian_unchecked(amps, t, frame))
    }

    pub(crate) fn hamiltonian_unchecked(&self, amps: &DriveAmplitudes, t: f64, frame: FramePhases) -> CMatrix {
        let p = &self.params;
        let k = 0.5 * MHZ_TO_RAD_PER_NS;
        let (ph0, ph1) = match frame {
            FramePhases::On => (
                Complex64::from_polar(1.0, p.delta0 * MHZ_TO_RAD_PER_NS * t),
                Complex64::from_polar(1.0, p.delta1 * MHZ_TO_RAD_PER_NS * t),
            ),
            FramePhases::Off => (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)),
        };
        let c0 = k * (p.omega_d0 * ph0 * amps.get(Channel::D0) + p.omega_u01 * ph1 * amps.get(Channel::U01));
        let c1 = k * (p.omega_d1 * ph1 * amps.get(Channel::D1) + p.omega_u10 * ph0 * amps.get(Channel::U10));
        let mut h = self.h_sys.clone();
        for (coef, ops) in [(c0, &self.b0), (c1, &self.b1)] {
            if coef == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(r, c, v) in ops.iter() {
                h[(r, c)] += coef * v;
                h[(c, r)] += coef.conj() * v;
            }
        }
        h
    }
}

/// Constant cross-resonance Hamiltonian: only `u01 = 1` driven with
/// strength `omega_mhz`, no frame phases, `δ1 = 0`. Built from explicit
/// operator products, independent of [`TransmonPair`].
pub fn cr_hamiltonian(params: &SystemParams, omega_mhz: f64) -> CMatrix {
    let b = annihilation();
    let bd = b.adjoint();
    let id = identity(LEVELS);
    let n = &bd * &b;
    let nn = &bd * &bd * &b * &b;
    let b0 = kron(&b, &id);
    let b1 = kron(&id, &b);
    let s = |x: f64| Complex64::new(x * MHZ_TO_RAD_PER_NS, 0.0);
    kron(&n, &id) * s(params.delta0)
        + kron(&nn, &id) * s(0.5 * params.alpha0)
        + kron(&id, &nn) * s(0.5 * params.alpha1)
        + (b0.adjoint() * &b1 + &b0 * b1.adjoint()) * s(params.j)
        + (&b0 + b0.adjoint()) * s(0.5 * omega_mhz)
}
