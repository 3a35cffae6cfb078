//! Piecewise-constant pulse representation, analytic waveforms and the
//! on-disk pulse format.

mod grid;
mod io;
mod pwc;
mod waveform;

pub use grid::{duration_to_ticks, ticks_to_ns, PulseGrid, DT_DEN, DT_NS, DT_NUM};
pub use io::{load_pulse, pulse_from_json, pulse_to_json, save_pulse, ChannelRecord, PulseFile, RationalDt, PULSE_SCHEMA};
pub use pwc::{clip_amplitude, Channel, DriveAmplitudes, DriveSet, PwcPulse};
pub use waveform::{assemble_echoed, AnalyticWaveform, EchoLayout, FLANK_SIGMAS};
