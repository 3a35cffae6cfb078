//! Versioned JSON pulse files.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{PulseGrid, DT_DEN, DT_NUM};
use super::pwc::{Channel, PwcPulse};
use crate::error::{Error, Result};

pub const PULSE_SCHEMA: &str = "pulseforge/pulse/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalDt {
    pub num: u64,
    pub den: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub channel: Channel,
    pub samples: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseFile {
    pub schema: String,
    pub dt_ns: RationalDt,
    pub segments: usize,
    pub ticks_per_segment: usize,
    pub channels: Vec<ChannelRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl PulseFile {
    pub fn from_pulse(pulse: &PwcPulse) -> Self {
        let grid = pulse.grid();
        Self {
            schema: PULSE_SCHEMA.to_string(),
            dt_ns: RationalDt { num: DT_NUM, den: DT_DEN },
            segments: grid.segments(),
            ticks_per_segment: grid.ticks_per_segment(),
            channels: pulse
                .channels()
                .iter()
                .map(|(ch, s)| ChannelRecord { channel: *ch, samples: s.iter().map(|a| [a.re, a.im]).collect() })
                .collect(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_metadata(mut self, key: &str, value: serde_json::Value) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn to_pulse(&self) -> Result<PwcPulse> {
        if self.schema != PULSE_SCHEMA {
            return Err(Error::Format(format!("unsupported pulse schema '{}', expected '{PULSE_SCHEMA}'", self.schema)));
        }
        if self.dt_ns != (RationalDt { num: DT_NUM, den: DT_DEN }) {
            return Err(Error::Format(format!(
                "pulse sampled at dt = {}/{} ns, this build uses {DT_NUM}/{DT_DEN} ns",
                self.dt_ns.num, self.dt_ns.den
            )));
        }
        let grid = PulseGrid::new(self.segments, self.ticks_per_segment)?;
        let channels = self
            .channels
            .iter()
            .map(|r| (r.channel, r.samples.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()))
            .collect();
        PwcPulse::new(grid, channels)
    }

    pub fn to_json(&self) -> Result<String> {
        for r in &self.channels {
            if r.samples.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::Format(format!("channel {} has non-finite samples", r.channel)));
            }
        }
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn pulse_to_json(pulse: &PwcPulse) -> Result<String> {
    PulseFile::from_pulse(pulse).to_json()
}

pub fn pulse_from_json(text: &str) -> Result<PwcPulse> {
    PulseFile::from_json(text)?.to_pulse()
}

pub fn save_pulse(pulse: &PwcPulse, path: &Path) -> Result<()> {
    std::fs::write(path, pulse_to_json(pulse)?)?;
    Ok(())
}

pub fn load_pulse(path: &Path) -> Result<PwcPulse> {
    pulse_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_zero_segment_roundtrips() {
        let p = PwcPulse::zeros(PulseGrid::new(1, 1).unwrap(), &super::super::DriveSet::two_drive());
        assert_eq!(pulse_from_json(&pulse_to_json(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn wrong_version_rejected() {
        let p = PwcPulse::zeros(PulseGrid::new(1, 1).unwrap(), &super::super::DriveSet::two_drive());
        let text = pulse_to_json(&p).unwrap().replace("pulse/v1", "pulse/v0");
        assert!(matches!(pulse_from_json(&text), Err(Error::Format(_))));
    }

    #[test]
    fn null_sample_rejected() {
        let p = PwcPulse::zeros(PulseGrid::new(1, 1).unwrap(), &super::super::DriveSet::single(Channel::D1));
        let text = pulse_to_json(&p).unwrap().replacen("0.0", "null", 1);
        assert!(pulse_from_json(&text).is_err());
    }

    proptest! {
        #[test]
        fn random_pulses_roundtrip_bit_exactly(
            samples in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
            tps in 1usize..8,
        ) {
            let n = samples.len();
            let s: Vec<Complex64> = samples.iter().map(|(a, b)| Complex64::new(*a, *b)).collect();
            let rev: Vec<Complex64> = s.iter().rev().copied().collect();
            let p = PwcPulse::new(PulseGrid::new(n, tps).unwrap(), vec![(Channel::U01, s), (Channel::D1, rev)]).unwrap();
            let back = pulse_from_json(&pulse_to_json(&p).unwrap()).unwrap();
            for ((_, a), (_, b)) in p.channels().iter().zip(back.channels()) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                    prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
            }
        }
    }
}
