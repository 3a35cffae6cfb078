//! Target gates on the qubit subspace.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{c, expm_hermitian, identity, pauli, pauli2, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetGate {
    /// `exp(-iπ/4 Z⊗X)`.
    Zx90,
    /// `exp(-iπ/4 I⊗X)`.
    Ix90,
    /// CNOT with transmon 0 as control.
    Cnot,
    /// Two-qubit identity.
    Identity,
    /// Single-qubit `exp(-iπ/4 X)`.
    Rx90,
    /// Single-qubit `exp(-iπ/2 X)`.
    Rx180,
}

impl TargetGate {
    /// Qubit-subspace dimension, 2 or 4.
    pub fn dim(self) -> usize {
        match self {
            TargetGate::Rx90 | TargetGate::Rx180 => 2,
            _ => 4,
        }
    }

    pub fn matrix(self) -> CMatrix {
        match self {
            TargetGate::Zx90 => expm_hermitian(&pauli2(3, 1), FRAC_PI_4),
            TargetGate::Ix90 => expm_hermitian(&pauli2(0, 1), FRAC_PI_4),
            TargetGate::Cnot => {
                let mut m = CMatrix::zeros(4, 4);
                m[(0, 0)] = c(1.0, 0.0);
                m[(1, 1)] = c(1.0, 0.0);
                m[(2, 3)] = c(1.0, 0.0);
                m[(3, 2)] = c(1.0, 0.0);
                m
            }
            TargetGate::Identity => identity(4),
            TargetGate::Rx90 => expm_hermitian(&pauli(1), FRAC_PI_4),
            TargetGate::Rx180 => expm_hermitian(&pauli(1), 2.0 * FRAC_PI_4),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TargetGate::Zx90 => "zx90",
            TargetGate::Ix90 => "ix90",
            TargetGate::Cnot => "cnot",
            TargetGate::Identity => "identity",
            TargetGate::Rx90 => "rx90",
            TargetGate::Rx180 => "rx180",
        }
    }
}

impl fmt::Display for TargetGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TargetGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "zx90" | "zx" => TargetGate::Zx90,
            "ix90" | "ix" => TargetGate::Ix90,
            "cnot" => TargetGate::Cnot,
            "identity" | "id" => TargetGate::Identity,
            "rx90" => TargetGate::Rx90,
            "rx180" => TargetGate::Rx180,
            other => return Err(Error::Validation(format!("unknown target gate '{other}'"))),
        })
    }
}
