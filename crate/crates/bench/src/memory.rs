//! Deterministic accounting of the buffers each event path allocates.

use bandsim_core::event::{Event, SCAN_STATE_BYTES_PER_PIXEL};

/// Running total of live buffers, sampled at stage boundaries.
#[derive(Debug, Default, Clone)]
pub struct MemoryLedger {
    live: u64,
    peak: u64,
    samples: Vec<u64>,
}

impl MemoryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, bytes: u64) {
        self.live += bytes;
        self.peak = self.peak.max(self.live);
    }

    pub fn free(&mut self, bytes: u64) {
        assert!(bytes <= self.live, "freeing {bytes} bytes with {} live", self.live);
        self.live -= bytes;
    }

    /// Close a stage, recording the bytes live at its end.
    pub fn stage(&mut self) {
        self.samples.push(self.live);
    }

    pub fn live(&self) -> u64 {
        self.live
    }

    pub fn peak(&self) -> u64 {
        self.peak
    }

    /// Mean of the stage samples, rounded down.
    pub fn mean(&self) -> u64 {
        if self.samples.is_empty() {
            return 0;
        }
        (self.samples.iter().map(|&s| s as u128).sum::<u128>() / self.samples.len() as u128) as u64
    }
}

/// Shape of a batch of environments run together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchShape {
    pub envs: u64,
    pub frames: u64,
    pub height: u64,
    pub width: u64,
    pub bins: u64,
}

impl BatchShape {
    fn pixels(&self) -> u64 {
        self.envs * self.height * self.width
    }

    fn input_bytes(&self) -> u64 {
        self.pixels() * self.frames * 4
    }

    fn output_bytes(&self) -> u64 {
        self.pixels() * 2 * self.bins * 4
    }
}

/// Input frames, per-pixel scan state and the dense output.
pub fn vectorized_ledger(shape: &BatchShape) -> MemoryLedger {
    let mut m = MemoryLedger::new();
    let input = shape.input_bytes();
    let state = shape.pixels() * SCAN_STATE_BYTES_PER_PIXEL as u64;
    let output = shape.output_bytes();
    m.alloc(input);
    m.stage();
    m.alloc(state);
    m.alloc(output);
    m.stage();
    m.free(state);
    m.free(input);
    m.stage();
    m
}

/// Input frames, a per-pixel reference, the sorted event list and the dense
/// output built from it.
pub fn oracle_ledger(shape: &BatchShape, event_count: u64) -> MemoryLedger {
    let mut m = MemoryLedger::new();
    let input = shape.input_bytes();
    let reference = shape.pixels() * 8;
    let events = event_count * std::mem::size_of::<Event>() as u64;
    let output = shape.output_bytes();
    m.alloc(input);
    m.stage();
    m.alloc(reference);
    m.alloc(events);
    m.stage();
    m.free(reference);
    m.alloc(output);
    m.stage();
    m.free(events);
    m.free(input);
    m.stage();
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(envs: u64) -> BatchShape {
        BatchShape {
            envs,
            frames: 10,
            height: 4,
            width: 5,
            bins: 2,
        }
    }

    #[test]
    fn ledger_tracks_peak_and_mean() {
        let mut m = MemoryLedger::new();
        m.alloc(10);
        m.stage();
        m.alloc(30);
        m.free(10);
        m.stage();
        m.free(30);
        m.stage();
        assert_eq!(m.peak(), 40);
        assert_eq!(m.mean(), (10 + 30) / 3);
        assert_eq!(m.live(), 0);
    }

    #[test]
    fn vectorized_peak_is_sum_of_concurrent_buffers() {
        let s = shape(1);
        let m = vectorized_ledger(&s);
        assert_eq!(m.peak(), 20 * 10 * 4 + 20 * 5 + 20 * 16);
        assert_eq!(m.live(), 20 * 16);
    }

    #[test]
    fn oracle_peak_exceeds_scan_once_events_appear() {
        let s = shape(3);
        let pixels = 3 * 20;
        assert!(oracle_ledger(&s, 0).peak() < vectorized_ledger(&s).peak());
        assert!(oracle_ledger(&s, pixels).peak() > vectorized_ledger(&s).peak());
    }

    #[test]
    fn linear_in_batch_size() {
        let a = vectorized_ledger(&shape(2));
        let b = vectorized_ledger(&shape(4));
        assert_eq!(b.peak(), 2 * a.peak());
        assert_eq!(b.mean(), 2 * a.mean());
    }
}
