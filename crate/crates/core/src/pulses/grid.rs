use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Device sampling interval `dt = 2/9 ns` as an exact rational.
pub const DT_NUM: u64 = 2;
pub const DT_DEN: u64 = 9;
pub const DT_NS: f64 = DT_NUM as f64 / DT_DEN as f64;


/// Uniform segment grid on top of the `dt` sampling grid. All time
/// arithmetic is done on integer tick counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PulseGrid {
    segments: usize,
    ticks_per_segment: usize,
}

impl PulseGrid {
    pub fn new(segments: usize, ticks_per_segment: usize) -> Result<Self> {
        ensure!(segments >= 1, Validation, "a pulse needs at least one segment");
        ensure!(ticks_per_segment >= 1, Validation, "a segment needs at least one dt tick");
        Ok(Self { segments, ticks_per_segment })
    }

    /// One segment per `dt` tick.
    pub fn per_tick(ticks: usize) -> Result<Self> {
        Self::new(ticks, 1)
    }

    /// Splits `total_ticks` into `segments` equal segments.
    pub fn from_ticks(total_ticks: usize, segments: usize) -> Result<Self> {
        ensure!(segments >= 1, Validation, "a pulse needs at least one segment");
        ensure!(
            total_ticks % segments == 0,
            Validation,
            "{total_ticks} ticks do not split into {segments} equal segments"
        );
        Self::new(segments, total_ticks / segments)
    }

    /// Grid for a duration quoted in ns, split into `segments` segments.
    pub fn from_duration(duration_ns: f64, segments: usize) -> Result<Self> {
        Self::from_ticks(duration_to_ticks(duration_ns)?, segments)
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn ticks_per_segment(&self) -> usize {
        self.ticks_per_segment
    }

    pub fn total_ticks(&self) -> usize {
        self.segments * self.ticks_per_segment
    }

    pub fn dt(&self) -> f64 {
        DT_NS
    }

    pub fn segment_duration(&self) -> f64 {
        ticks_to_ns(self.ticks_per_segment)
    }

    pub fn duration(&self) -> f64 {
        ticks_to_ns(self.total_ticks())
    }

    pub fn segment_start(&self, segment: usize) -> f64 {
        ticks_to_ns(segment * self.ticks_per_segment)
    }

    /// Segment index covering a given tick.
    pub fn segment_of_tick(&self, tick: usize) -> usize {
        tick / self.ticks_per_segment
    }
}

pub fn ticks_to_ns(ticks: usize) -> f64 {
    (ticks as u64 * DT_NUM) as f64 / DT_DEN as f64
}

/// Converts a duration quoted in ns to whole ticks, rejecting off-grid values.
pub fn duration_to_ticks(duration_ns: f64) -> Result<usize> {
    ensure!(
        duration_ns.is_finite() && duration_ns > 0.0,
        Validation,
        "duration must be positive, got {duration_ns}"
    );
    let ticks = (duration_ns / DT_NS).round();
    // Exact, or the tick duration quoted to 0.1 ns by rounding or
    // truncation (800 ticks appear as both 177.8 and 177.7 ns).
    let t = ticks * DT_NS;
    let quoted = [t, (t * 10.0).round() / 10.0, (t * 10.0).floor() / 10.0];
    ensure!(
        ticks >= 1.0 && quoted.iter().any(|q| (q - duration_ns).abs() < 1e-9),
        Validation,
        "duration {duration_ns} ns is not an integer multiple of dt = 2/9 ns"
    );
    Ok(ticks as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_durations_land_on_grid() {
        assert_eq!(duration_to_ticks(248.9).unwrap(), 1120);
        assert_eq!(duration_to_ticks(177.8).unwrap(), 800);
        assert_eq!(duration_to_ticks(35.6).unwrap(), 160);
        assert_eq!(duration_to_ticks(10.0).unwrap(), 45);
        assert_eq!(duration_to_ticks(213.3).unwrap(), 960);
        assert_eq!(duration_to_ticks(320.0).unwrap(), 1440);
        assert_eq!(duration_to_ticks(177.7).unwrap(), 800);
        assert_eq!(duration_to_ticks(ticks_to_ns(1237)).unwrap(), 1237);
    }

    #[test]
    fn off_grid_duration_rejected() {
        assert!(duration_to_ticks(0.1).is_err());
        assert!(duration_to_ticks(248.75).is_err());
        assert!(PulseGrid::from_duration(10.0, 7).is_err());
    }

    #[test]
    fn grid_arithmetic_is_exact() {
        let g = PulseGrid::from_duration(248.9, 20).unwrap();
        assert_eq!(g.ticks_per_segment(), 56);
        assert_eq!(g.total_ticks(), 1120);
        assert_eq!(g.duration(), 2240.0 / 9.0);
        assert_eq!(g.segment_start(20), g.duration());
    }
}
