use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::PulseGrid;
use crate::error::{ensure, Error, Result};

/// Drive channels of the two-transmon device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// On-resonance drive of transmon 0.
    D0,
    /// Cross-resonance drive on transmon 0 at transmon 1's frequency.
    U01,
    /// On-resonance drive of transmon 1.
    D1,
    /// Cross-resonance drive on transmon 1 at transmon 0's frequency.
    U10,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::D0, Channel::U01, Channel::D1, Channel::U10];

    pub fn index(self) -> usize {
        match self {
            Channel::D0 => 0,
            Channel::U01 => 1,
            Channel::D1 => 2,
            Channel::U10 => 3,
        }
    }

    /// Drives that carry a detuning phase in the target-transmon frame.
    pub fn needs_frame_phase(self) -> bool {
        matches!(self, Channel::D0 | Channel::U10)
    }

    /// Cross-resonance drives get the `w_u` action window, on-resonance
    /// drives the `w_d` window.
    pub fn is_cross_resonance(self) -> bool {
        matches!(self, Channel::U01 | Channel::U10)
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::D0 => "d0",
            Channel::U01 => "u01",
            Channel::D1 => "d1",
            Channel::U10 => "u10",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d0" => Ok(Channel::D0),
            "u01" => Ok(Channel::U01),
            "d1" => Ok(Channel::D1),
            "u10" => Ok(Channel::U10),
            other => Err(Error::Validation(format!("unknown channel '{other}'"))),
        }
    }
}

/// Ordered set of active drive channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Channel>", into = "Vec<Channel>")]
pub struct DriveSet(Vec<Channel>);

impl DriveSet {
    pub fn new(channels: Vec<Channel>) -> Result<Self> {
        ensure!(!channels.is_empty(), Validation, "a drive set needs at least one channel");
        for (k, ch) in channels.iter().enumerate() {
            ensure!(!channels[..k].contains(ch), Validation, "duplicate channel {ch}");
        }
        Ok(Self(channels))
    }

    /// `(u01, d1)`.
    pub fn two_drive() -> Self {
        Self(vec![Channel::U01, Channel::D1])
    }

    /// `(d0, u01, d1)`.
    pub fn three_drive() -> Self {
        Self(vec![Channel::D0, Channel::U01, Channel::D1])
    }

    pub fn single(channel: Channel) -> Self {
        Self(vec![channel])
    }

    pub fn channels(&self) -> &[Channel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, ch: Channel) -> bool {
        self.0.contains(&ch)
    }

    pub fn needs_frame_phases(&self) -> bool {
        self.0.iter().any(|c| c.needs_frame_phase())
    }
}

impl TryFrom<Vec<Channel>> for DriveSet {
    type Error = Error;
    fn try_from(v: Vec<Channel>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DriveSet> for Vec<Channel> {
    fn from(d: DriveSet) -> Self {
        d.0
    }
}

/// Snapshot of all four drive amplitudes at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DriveAmplitudes(pub [Complex64; 4]);

impl DriveAmplitudes {
    pub fn get(&self, ch: Channel) -> Complex64 {
        self.0[ch.index()]
    }

    pub fn set(&mut self, ch: Channel, value: Complex64) {
        self.0[ch.index()] = value;
    }

    pub fn with(mut self, ch: Channel, value: Complex64) -> Self {
        self.set(ch, value);
        self
    }

    pub fn in_unit_box(&self) -> bool {
        self.0.iter().all(|a| a.re.abs() <= 1.0 && a.im.abs() <= 1.0)
    }

    /// Whether a channel with a detuning phase is driven.
    pub fn needs_frame_phases(&self) -> bool {
        Channel::ALL
            .iter()
            .any(|&ch| ch.needs_frame_phase() && self.get(ch) != Complex64::new(0.0, 0.0))
    }
}

/// Clips each quadrature to `[-1, 1]`.
pub fn clip_amplitude(a: Complex64) -> Complex64 {
    Complex64::new(a.re.clamp(-1.0, 1.0), a.im.clamp(-1.0, 1.0))
}

/// Piecewise-constant complex envelopes on a segment grid. Amplitudes are
/// held constant over each segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PwcPulse {
    grid: PulseGrid,
    channels: Vec<(Channel, Vec<Complex64>)>,
}

impl PwcPulse {
    /// Builds a pulse, clipping every quadrature into `[-1, 1]`.
    pub fn new(grid: PulseGrid, channels: Vec<(Channel, Vec<Complex64>)>) -> Result<Self> {
        for (k, (ch, samples)) in channels.iter().enumerate() {
            ensure!(
                !channels[..k].iter().any(|(c, _)| c == ch),
                Validation,
                "duplicate channel {ch}"
            );
            ensure!(
                samples.len() == grid.segments(),
                Validation,
                "channel {ch} has {} samples for {} segments",
                samples.len(),
                grid.segments()
            );
            if let Some(i) = samples.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
                return Err(Error::Validation(format!("channel {ch} has a non-finite sample at segment {i}")));
            }
        }
        let channels = channels
            .into_iter()
            .map(|(ch, s)| (ch, s.into_iter().map(clip_amplitude).collect()))
            .collect();
        Ok(Self { grid, channels })
    }

    pub fn zeros(grid: PulseGrid, drives: &DriveSet) -> Self {
        let channels = drives
            .channels()
            .iter()
            .map(|&ch| (ch, vec![Complex64::new(0.0, 0.0); grid.segments()]))
            .collect();
        Self { grid, channels }
    }

    pub fn grid(&self) -> &PulseGrid {
        &self.grid
    }

    pub fn channels(&self) -> &[(Channel, Vec<Complex64>)] {
        &self.channels
    }

    pub fn drive_set(&self) -> DriveSet {
        DriveSet(self.channels.iter().map(|(c, _)| *c).collect())
    }

    pub fn samples(&self, ch: Channel) -> Option<&[Complex64]> {
        self.channels.iter().find(|(c, _)| *c == ch).map(|(_, s)| s.as_slice())
    }

    /// Overwrites one sample, clipped into the unit box.
    pub fn set_sample(&mut self, ch: Channel, segment: usize, value: Complex64) -> Result<()> {
        ensure!(segment < self.grid.segments(), Validation, "segment {segment} out of range");
        ensure!(value.re.is_finite() && value.im.is_finite(), Validation, "non-finite sample for channel {ch}");
        let samples = self
            .channels
            .iter_mut()
            .find(|(c, _)| *c == ch)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::Validation(format!("channel {ch} is not part of this pulse")))?;
        samples[segment] = clip_amplitude(value);
        Ok(())
    }

    /// Amplitudes on segment `i`; absent channels read as zero.
    pub fn amplitudes(&self, segment: usize) -> DriveAmplitudes {
        let mut a = DriveAmplitudes::default();
        for (ch, s) in &self.channels {
            a.set(*ch, s[segment]);
        }
        a
    }

    /// Whether any sample of a phase-carrying channel is nonzero.
    pub fn needs_frame_phases(&self) -> bool {
        self.channels.iter().any(|(ch, s)| {
            ch.needs_frame_phase() && s.iter().any(|a| *a != Complex64::new(0.0, 0.0))
        })
    }

    /// Copy with one channel zeroed. Idempotent.
    pub fn without_channel(&self, ch: Channel) -> Self {
        let channels = self
            .channels
            .iter()
            .map(|(c, s)| {
                if *c == ch {
                    (*c, vec![Complex64::new(0.0, 0.0); s.len()])
                } else {
                    (*c, s.clone())
                }
            })
            .collect();
        Self { grid: self.grid, channels }
    }

    /// Sum of amplitudes times segment duration, in ns.
    pub fn area(&self, ch: Channel) -> Complex64 {
        let dt = self.grid.segment_duration();
        self.samples(ch).map(|s| s.iter().sum::<Complex64>() * dt).unwrap_or_default()
    }

    /// Number of real degrees of freedom (two quadratures per sample).
    pub fn degrees_of_freedom(&self) -> usize {
        2 * self.channels.len() * self.grid.segments()
    }

    /// Largest modulus over every sample of every channel.
    pub fn max_amplitude(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|(_, s)| s.iter().map(|a| a.norm()))
            .fold(0.0, f64::max)
    }

    /// Mean modulus of one channel over the full duration.
    pub fn mean_amplitude(&self, ch: Channel) -> f64 {
        self.samples(ch)
            .map(|s| s.iter().map(|a| a.norm()).sum::<f64>() / s.len() as f64)
            .unwrap_or(0.0)
    }

    /// Resamples onto a grid with one segment per `dt` tick.
    pub fn to_tick_grid(&self) -> Self {
        let tps = self.grid.ticks_per_segment();
        let grid = PulseGrid::per_tick(self.grid.total_ticks()).expect("nonempty grid");
        let channels = self
            .channels
            .iter()
            .map(|(c, s)| (*c, s.iter().flat_map(|a| std::iter::repeat_n(*a, tps)).collect()))
            .collect();
        Self { grid, channels }
    }
}
