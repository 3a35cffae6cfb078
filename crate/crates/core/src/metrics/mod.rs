//! Figures of merit for simulated gates.

mod entanglement;
mod fidelity;
mod gates;
mod rotation;
mod virtual_z;
mod worst_case;

pub use entanglement::{
    avg_linear_entropy, entangled_input_pairs, leakage, linear_entropy, pauli_eigenstates, product_state,
    retained_population,
};
pub use fidelity::{avg_gate_fidelity, gate_fidelity, qubit_block, OverlapMatrix};
pub use gates::TargetGate;
pub use rotation::{reconstruct, rotation_angles, PauliAngles, RotationAngleTrace, RotationOptions, PAULI_LABELS};
pub use virtual_z::{
    apply_virtual_z, corrected_fidelity, fidelity_with_angles, virtual_z_correct, VirtualZAngles, VirtualZResult,
};
pub use worst_case::{
    bloch_state, minimize_on_sphere, state_fidelity, state_from_chart, worst_case_fidelity, worst_case_scqp_1q,
    BlochQuadratic, WorstCase, DEFAULT_STARTS,
};
