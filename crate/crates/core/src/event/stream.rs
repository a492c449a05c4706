use crate::error::{Error, Result};

use super::Polarity;

/// A single event: the frame transition it fired on, its pixel, and its sign.
///
/// `step` is the index of the later frame of the transition, so it lies in
/// `1..T`. Field order matches the stream sort key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub step: u32,
    pub y: u16,
    pub x: u16,
    pub polarity: Polarity,
}

/// Events of a `width x height` sensor sorted by `(step, y, x, polarity)`.
/// Duplicates are kept: one pixel may fire several times on one step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseEventStream {
    pub width: usize,
    pub height: usize,
    pub events: Vec<Event>,
}

impl SparseEventStream {
    /// Build a stream, validating coordinates and sorting the events.
    pub fn new(width: usize, height: usize, mut events: Vec<Event>) -> Result<Self> {
        if width == 0 || height == 0 || width > u16::MAX as usize + 1 || height > u16::MAX as usize + 1 {
            return Err(Error::invalid(
                "stream dimensions",
                format!("{width}x{height} outside 1..=65536"),
            ));
        }
        if let Some(e) = events
            .iter()
            .find(|e| e.x as usize >= width || e.y as usize >= height || e.step == 0)
        {
            return Err(Error::invalid(
                "event",
                format!(
                    "({}, {}) at step {} outside a {width}x{height} sensor or before step 1",
                    e.x, e.y, e.step
                ),
            ));
        }
        events.sort_unstable();
        Ok(Self {
            width,
            height,
            events,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }
}

/// Integer-divide event coordinates onto a coarser grid, clamping to the
/// last row/column of the target.
pub fn downsample_stream(
    stream: &SparseEventStream,
    divisor: u32,
    out_width: usize,
    out_height: usize,
) -> Result<SparseEventStream> {
    if divisor == 0 {
        return Err(Error::invalid("divisor", "must be >= 1"));
    }
    if out_width == 0 || out_height == 0 {
        return Err(Error::invalid(
            "output dimensions",
            format!("must be positive, got {out_width}x{out_height}"),
        ));
    }
    let max_x = (out_width - 1) as u32;
    let max_y = (out_height - 1) as u32;
    let events = stream
        .events
        .iter()
        .map(|e| Event {
            x: (e.x as u32 / divisor).min(max_x) as u16,
            y: (e.y as u32 / divisor).min(max_y) as u16,
            ..*e
        })
        .collect();
    SparseEventStream::new(out_width, out_height, events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(step: u32, x: u16, y: u16, p: Polarity) -> Event {
        Event {
            step,
            y,
            x,
            polarity: p,
        }
    }

    #[test]
    fn sorted_on_construction() {
        let s = SparseEventStream::new(
            4,
            4,
            vec![
                ev(2, 0, 0, Polarity::Positive),
                ev(1, 3, 1, Polarity::Positive),
                ev(1, 2, 1, Polarity::Negative),
                ev(1, 0, 2, Polarity::Negative),
            ],
        )
        .unwrap();
        let keys: Vec<_> = s.iter().map(|e| (e.step, e.y, e.x)).collect();
        assert_eq!(keys, vec![(1, 1, 2), (1, 1, 3), (1, 2, 0), (2, 0, 0)]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SparseEventStream::new(4, 4, vec![ev(1, 4, 0, Polarity::Positive)]).is_err());
        assert!(SparseEventStream::new(4, 4, vec![ev(0, 0, 0, Polarity::Positive)]).is_err());
    }

    #[test]
    fn downsample_to_input_resolution() {
        let s = SparseEventStream::new(
            640,
            480,
            vec![
                ev(1, 0, 0, Polarity::Positive),
                ev(1, 639, 479, Polarity::Negative),
                ev(1, 5, 7, Polarity::Positive),
            ],
        )
        .unwrap();
        let d = downsample_stream(&s, 3, 213, 160).unwrap();
        assert_eq!((d.width, d.height), (213, 160));
        let coords: Vec<_> = d.iter().map(|e| (e.x, e.y)).collect();
        assert_eq!(coords, vec![(0, 0), (1, 2), (212, 159)]);
        assert!(d.iter().zip([1, 1, 1]).all(|(e, s)| e.step == s));
    }

    #[test]
    fn downsample_rejects_bad_target() {
        let s = SparseEventStream::new(4, 4, vec![]).unwrap();
        assert!(downsample_stream(&s, 2, 0, 2).is_err());
        assert!(downsample_stream(&s, 0, 2, 2).is_err());
    }
}
