//! Two coupled three-level transmons: parameters, Hamiltonians and
//! propagators.

mod hamiltonian;
mod params;
mod propagate;
mod zx_rate;

pub use hamiltonian::{
    annihilation, build_hamiltonian_1q, cr_hamiltonian, pair_index, FramePhases, TransmonPair, DIM_2Q, LEVELS,
};
pub use params::{SingleTransmonParams, SystemParams, ValidationOptions, MHZ_TO_RAD_PER_NS, NUM_PARAMS, PARAM_NAMES};
pub use propagate::{
    propagate_tise, Integrator, PropagationOptions, Propagator, SingleTransmon, UNITARITY_TOLERANCE,
};
pub use zx_rate::{effective_zx_rate, ZxRate};

/// Indices of the qubit subspace `{|00⟩, |01⟩, |10⟩, |11⟩}` in the 9-level basis.
pub const QUBIT_INDICES_2Q: [usize; 4] = [0, 1, 3, 4];
/// Indices of `{|0⟩, |1⟩}` in a single qutrit.
pub const QUBIT_INDICES_1Q: [usize; 2] = [0, 1];
