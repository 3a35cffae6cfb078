use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Converts a linear frequency in MHz to an angular frequency in rad/ns.
pub const MHZ_TO_RAD_PER_NS: f64 = 2.0 * std::f64::consts::PI * 1e-3;

/// Number of physical parameters of the two-transmon model.
pub const NUM_PARAMS: usize = 9;

/// Names of the entries of [`SystemParams::to_vector`], in order.
pub const PARAM_NAMES: [&str; NUM_PARAMS] = [
    "omega_d0", "omega_u01", "omega_d1", "omega_u10", "delta0", "delta1", "alpha0", "alpha1", "j",
];

/// Physical parameters of two coupled, three-level transmons in the frame
/// rotating at the second transmon's frequency. All values are linear
/// frequencies in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub delta0: f64,
    pub delta1: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub j: f64,
    pub omega_d0: f64,
    pub omega_u01: f64,
    pub omega_d1: f64,
    pub omega_u10: f64,
}

/// Relaxations of the physical checks in [`SystemParams::validate`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Accept non-negative anharmonicities.
    #[serde(default)]
    pub allow_unphysical: bool,
    /// Accept a nonzero `delta1`, i.e. a frame other than the second
    /// transmon's rotating frame.
    #[serde(default)]
    pub frame_override: bool,
}

impl SystemParams {
    /// The IBMQ Valencia pair used throughout the reference study.
    pub const fn valencia() -> Self {
        Self {
            delta0: -86.6,
            delta1: 0.0,
            alpha0: -310.5,
            alpha1: -313.9,
            j: 2.2,
            omega_d0: 204.7,
            omega_u01: 204.7,
            omega_d1: 158.5,
            omega_u10: 158.5,
        }
    }

    pub fn validate(&self, opts: ValidationOptions) -> Result<()> {
        let v = self.to_vector();
        ensure!(v.iter().all(|x| x.is_finite()), Validation, "non-finite system parameter: {self:?}");
        for (name, value) in [
            ("omega_d0", self.omega_d0),
            ("omega_u01", self.omega_u01),
            ("omega_d1", self.omega_d1),
            ("omega_u10", self.omega_u10),
        ] {
            ensure!(value > 0.0, Validation, "drive strength {name} must be positive, got {value}");
        }
        if !opts.allow_unphysical {
            ensure!(
                self.alpha0 < 0.0 && self.alpha1 < 0.0,
                Validation,
                "anharmonicities must be negative (alpha0 = {}, alpha1 = {})",
                self.alpha0,
                self.alpha1
            );
        }
        if !opts.frame_override {
            ensure!(
                self.delta1 == 0.0,
                Validation,
                "delta1 must vanish in the target-transmon frame, got {}",
                self.delta1
            );
        }
        Ok(())
    }

    /// Parameters as a vector ordered like [`PARAM_NAMES`].
    pub fn to_vector(&self) -> [f64; NUM_PARAMS] {
        [
            self.omega_d0,
            self.omega_u01,
            self.omega_d1,
            self.omega_u10,
            self.delta0,
            self.delta1,
            self.alpha0,
            self.alpha1,
            self.j,
        ]
    }

    pub fn from_vector(v: &[f64; NUM_PARAMS]) -> Self {
        Self {
            omega_d0: v[0],
            omega_u01: v[1],
            omega_d1: v[2],
            omega_u10: v[3],
            delta0: v[4],
            delta1: v[5],
            alpha0: v[6],
            alpha1: v[7],
            j: v[8],
        }
    }

    /// `p0 ⊙ (1 + rel)`. Zero-valued entries (the frame detuning) stay zero.
    pub fn perturbed(&self, rel: &[f64; NUM_PARAMS]) -> Self {
        let mut v = self.to_vector();
        for (x, r) in v.iter_mut().zip(rel) {
            *x *= 1.0 + r;
        }
        Self::from_vector(&v)
    }

    /// Elementwise `(p − p0) / p0`, with 0 where `p0` vanishes.
    pub fn relative_to(&self, reference: &SystemParams) -> [f64; NUM_PARAMS] {
        let p = self.to_vector();
        let p0 = reference.to_vector();
        let mut out = [0.0; NUM_PARAMS];
        for k in 0..NUM_PARAMS {
            if p0[k] != 0.0 {
                out[k] = (p[k] - p0[k]) / p0[k];
            }
        }
        out
    }

    /// Scales every drive strength by `factor`.
    pub fn with_drive_scale(&self, factor: f64) -> Self {
        Self {
            omega_d0: self.omega_d0 * factor,
            omega_u01: self.omega_u01 * factor,
            omega_d1: self.omega_d1 * factor,
            omega_u10: self.omega_u10 * factor,
            ..*self
        }
    }

    /// One of the two transmons viewed in isolation, driven by its own
    /// on-resonance channel.
    pub fn transmon(&self, index: usize) -> SingleTransmonParams {
        match index {
            0 => SingleTransmonParams {
                detuning: self.delta0,
                anharmonicity: self.alpha0,
                drive_strength: self.omega_d0,
            },
            1 => SingleTransmonParams {
                detuning: self.delta1,
                anharmonicity: self.alpha1,
                drive_strength: self.omega_d1,
            },
            _ => panic!("transmon index {index} out of range"),
        }
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::valencia()
    }
}

/// A single driven transmon, in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleTransmonParams {
    pub detuning: f64,
    pub anharmonicity: f64,
    pub drive_strength: f64,
}

impl SingleTransmonParams {
    /// The same transmon in its own rotating frame.
    pub fn on_resonance(&self) -> Self {
        Self { detuning: 0.0, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valencia_validates() {
        SystemParams::valencia().validate(ValidationOptions::default()).unwrap();
    }

    #[test]
    fn rejects_nonzero_frame_detuning_without_override() {
        let p = SystemParams { delta1: 3.0, ..SystemParams::valencia() };
        assert!(p.validate(ValidationOptions::default()).is_err());
        p.validate(ValidationOptions { frame_override: true, ..Default::default() }).unwrap();
    }

    #[test]
    fn rejects_positive_anharmonicity_unless_flagged() {
        let p = SystemParams { alpha0: 10.0, ..SystemParams::valencia() };
        assert!(p.validate(ValidationOptions::default()).is_err());
        p.validate(ValidationOptions { allow_unphysical: true, ..Default::default() }).unwrap();
    }

    #[test]
    fn rejects_nonpositive_drive() {
        let p = SystemParams { omega_d1: 0.0, ..SystemParams::valencia() };
        assert!(p.validate(ValidationOptions::default()).is_err());
    }

    #[test]
    fn relative_drift_roundtrip() {
        let p0 = SystemParams::valencia();
        let mut rel = [0.0; NUM_PARAMS];
        rel[0] = 0.02;
        rel[8] = -0.05;
        rel[5] = 0.3; // frame detuning stays zero
        let p = p0.perturbed(&rel);
        assert_eq!(p.delta1, 0.0);
        let back = p.relative_to(&p0);
        assert!((back[0] - 0.02).abs() < 1e-15);
        assert!((back[8] + 0.05).abs() < 1e-15);
        assert_eq!(back[5], 0.0);
    }
}
