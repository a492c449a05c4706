//! Sequential per-pixel event generation with an explicit reference level.
//!
//! Each pixel keeps the log intensity at which it last fired. Whenever the
//! current value moves at least one contrast step away from that reference,
//! an event of the matching sign is emitted and the reference advances by
//! one step; several events may fire on one transition.
//!
//! Values and the reference are compared in units of the contrast, using the
//! same quotient as the band quantizer. A value exactly on a threshold counts
//! as above it: it fires a positive event but not a negative one, matching
//! the rule that a band edge belongs to the upper band.

use crate::error::{Error, Result};

use super::frames::{band_index, normalized};
use super::{ContrastConfig, Event, LogFrameStack, Polarity, SparseEventStream};

pub fn oracle_event_stream(stack: &LogFrameStack, cfg: &ContrastConfig) -> Result<SparseEventStream> {
    let (t, h, w) = stack.dim();
    if t < 2 {
        return Err(Error::invalid(
            "frames",
            format!("need at least 2 frames, got {t}"),
        ));
    }
    cfg.validate_for(stack)?;
    if h > u16::MAX as usize + 1 || w > u16::MAX as usize + 1 || t > u32::MAX as usize {
        return Err(Error::invalid("frames", "dimensions exceed the event record range"));
    }

    let data = stack.as_slice();
    let plane = h * w;
    let c = cfg.contrast;
    let offset = cfg.reference_offset;
    let mut events = Vec::new();

    for y in 0..h {
        for x in 0..w {
            let px = y * w + x;
            let first = data[px];
            let s0 = normalized(first, first, offset);
            // The reference is kept as an integer number of contrast steps so
            // that it does not drift through repeated addition.
            let mut level = band_index(s0, c) as i64;
            if cfg.initial_direction == Polarity::Negative {
                level += 1;
            }
            for ti in 1..t {
                let q = normalized(data[ti * plane + px], first, offset) / c;
                while q >= (level + 1) as f64 {
                    events.push(Event {
                        step: ti as u32,
                        y: y as u16,
                        x: x as u16,
                        polarity: Polarity::Positive,
                    });
                    level += 1;
                }
                while q < (level - 1) as f64 {
                    events.push(Event {
                        step: ti as u32,
                        y: y as u16,
                        x: x as u16,
                        polarity: Polarity::Negative,
                    });
                    level -= 1;
                }
            }
        }
    }
    SparseEventStream::new(w, h, events)
}
