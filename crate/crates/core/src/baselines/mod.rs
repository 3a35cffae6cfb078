//! Analytic DRAG, echoed and direct cross-resonance schemes with
//! Nelder-Mead calibration.

mod calibrate;
mod schemes;

pub use calibrate::{
    calibrate, calibrate_restarts, calibrate_with, calibrated_pulse_file, duration_sweep, threshold_crossing,
    CalibrationReport, CalibrationResult, SweepOptions, SweepRow,
};
pub use schemes::{BaselineConfig, CalibrationProblem, Evaluation, Scheme, SchemeEvaluator};
