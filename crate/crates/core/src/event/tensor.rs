use ndarray::{Array4, ArrayView3};

use crate::error::{Error, Result};

use super::{Polarity, SparseEventStream};

/// Number of temporal bins of an event tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinningConfig {
    pub num_bins: usize,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self { num_bins: 5 }
    }
}

impl BinningConfig {
    pub fn new(num_bins: usize) -> Self {
        Self { num_bins }
    }

    /// Requires `1 <= B <= T - 1`.
    pub fn validate(&self, frame_count: usize) -> Result<()> {
        if frame_count < 2 {
            return Err(Error::invalid(
                "frame count",
                format!("need at least 2 frames, got {frame_count}"),
            ));
        }
        if self.num_bins == 0 || self.num_bins > frame_count - 1 {
            return Err(Error::invalid(
                "num_bins",
                format!(
                    "must lie in 1..={} for {frame_count} frames, got {}",
                    frame_count - 1,
                    self.num_bins
                ),
            ));
        }
        Ok(())
    }

    /// `B + 1` transition indices `ceil(b (T-1) / B)`; bin `b` holds steps
    /// `boundaries[b] < step <= boundaries[b + 1]`.
    pub fn boundaries(&self, frame_count: usize) -> Vec<u32> {
        let n = (frame_count - 1) as u64;
        let b = self.num_bins as u64;
        (0..=b).map(|i| (i * n).div_ceil(b) as u32).collect()
    }

    /// Bin of a 1-based transition step, `floor((step - 1) B / (T - 1))`.
    #[inline]
    pub fn bin_of(&self, step: usize, frame_count: usize) -> usize {
        (step - 1) * self.num_bins / (frame_count - 1)
    }
}

/// Dense `2 x B x H x W` event counts, positive polarity first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTensor {
    pub counts: Array4<u32>,
    pub bin_boundaries: Vec<u32>,
}

impl EventTensor {
    pub fn zeros(bins: BinningConfig, frame_count: usize, height: usize, width: usize) -> Self {
        Self {
            counts: Array4::zeros((2, bins.num_bins, height, width)),
            bin_boundaries: bins.boundaries(frame_count),
        }
    }

    /// Validating constructor used by the container reader.
    pub fn from_parts(counts: Array4<u32>, bin_boundaries: Vec<u32>) -> Result<Self> {
        let (p, b, _, _) = counts.dim();
        if p != 2 {
            return Err(Error::invalid("counts", format!("expected 2 polarities, got {p}")));
        }
        if bin_boundaries.len() != b + 1 {
            return Err(Error::invalid(
                "bin_boundaries",
                format!("expected {} entries, got {}", b + 1, bin_boundaries.len()),
            ));
        }
        if bin_boundaries[0] != 0 || bin_boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "bin_boundaries",
                "must start at 0 and increase strictly",
            ));
        }
        Ok(Self {
            counts,
            bin_boundaries,
        })
    }

    pub fn num_bins(&self) -> usize {
        self.counts.dim().1
    }

    pub fn height(&self) -> usize {
        self.counts.dim().2
    }

    pub fn width(&self) -> usize {
        self.counts.dim().3
    }

    /// Frame count `T` implied by the last bin boundary.
    pub fn frame_count(&self) -> usize {
        *self.bin_boundaries.last().expect("B + 1 >= 2 boundaries") as usize + 1
    }

    pub fn polarity(&self, p: Polarity) -> ArrayView3<'_, u32> {
        self.counts.index_axis(ndarray::Axis(0), p.channel())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Sum a sparse stream into a dense tensor.
pub fn accumulate_tensor(
    stream: &SparseEventStream,
    frame_count: usize,
    bins: BinningConfig,
) -> Result<EventTensor> {
    bins.validate(frame_count)?;
    let mut out = EventTensor::zeros(bins, frame_count, stream.height, stream.width);
    for e in stream.iter() {
        let step = e.step as usize;
        if step == 0 || step >= frame_count {
            return Err(Error::invalid(
                "event step",
                format!("step {step} outside 1..{frame_count}"),
            ));
        }
        let bin = bins.bin_of(step, frame_count);
        out.counts[[e.polarity.channel(), bin, e.y as usize, e.x as usize]] += 1;
    }
    Ok(out)
}

/// Location and values of a differing cell: `(polarity, bin, y, x, lhs, rhs)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Mismatch {
    pub polarity: Polarity,
    pub bin: usize,
    pub y: usize,
    pub x: usize,
    pub lhs: u32,
    pub rhs: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct DiffReport {
    pub total_abs_difference: u64,
    pub num_mismatched_cells: u64,
    pub first_mismatch: Option<Mismatch>,
}

impl DiffReport {
    pub fn is_equal(&self) -> bool {
        self.num_mismatched_cells == 0
    }
}

/// Cell-by-cell comparison of two tensors of identical shape.
pub fn diff_tensors(lhs: &EventTensor, rhs: &EventTensor) -> Result<DiffReport> {
    if lhs.counts.dim() != rhs.counts.dim() {
        return Err(Error::invalid(
            "tensor shape",
            format!("{:?} vs {:?}", lhs.counts.dim(), rhs.counts.dim()),
        ));
    }
    if lhs.bin_boundaries != rhs.bin_boundaries {
        return Err(Error::invalid(
            "bin boundaries",
            format!("{:?} vs {:?}", lhs.bin_boundaries, rhs.bin_boundaries),
        ));
    }
    let mut report = DiffReport::default();
    for (((p, b, y, x), &l), &r) in lhs.counts.indexed_iter().zip(rhs.counts.iter()) {
        if l != r {
            report.total_abs_difference += l.abs_diff(r) as u64;
            report.num_mismatched_cells += 1;
            if report.first_mismatch.is_none() {
                report.first_mismatch = Some(Mismatch {
                    polarity: if p == 0 {
                        Polarity::Positive
                    } else {
                        Polarity::Negative
                    },
                    bin: b,
                    y,
                    x,
                    lhs: l,
                    rhs: r,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Event;

    #[test]
    fn bin_mapping_ten_transitions_two_bins() {
        let b = BinningConfig::new(2);
        let bins: Vec<_> = (1..=10).map(|s| b.bin_of(s, 11)).collect();
        assert_eq!(bins, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(b.boundaries(11), vec![0, 5, 10]);
    }

    #[test]
    fn boundaries_strictly_increase() {
        for t in 2..40 {
            for nb in 1..t {
                let bounds = BinningConfig::new(nb).boundaries(t);
                assert_eq!(bounds[0], 0);
                assert_eq!(*bounds.last().unwrap() as usize, t - 1);
                assert!(bounds.windows(2).all(|w| w[0] < w[1]));
                // Every step lands in the bin whose boundaries enclose it.
                for s in 1..t {
                    let bin = BinningConfig::new(nb).bin_of(s, t);
                    assert!(bounds[bin] < s as u32 && s as u32 <= bounds[bin + 1]);
                }
            }
        }
    }

    #[test]
    fn binning_validation() {
        assert!(BinningConfig::new(0).validate(5).is_err());
        assert!(BinningConfig::new(5).validate(5).is_err());
        assert!(BinningConfig::new(4).validate(5).is_ok());
        assert!(BinningConfig::new(1).validate(1).is_err());
    }

    #[test]
    fn empty_stream_gives_zero_tensor() {
        let s = SparseEventStream::new(3, 2, vec![]).unwrap();
        let t = accumulate_tensor(&s, 4, BinningConfig::new(3)).unwrap();
        assert_eq!(t.counts.dim(), (2, 3, 2, 3));
        assert_eq!(t.total(), 0);
    }

    #[test]
    fn step_out_of_range_is_rejected() {
        let s = SparseEventStream::new(
            1,
            1,
            vec![Event {
                step: 4,
                y: 0,
                x: 0,
                polarity: Polarity::Positive,
            }],
        )
        .unwrap();
        assert!(accumulate_tensor(&s, 4, BinningConfig::new(1)).is_err());
    }

    #[test]
    fn diff_examples() {
        let z = EventTensor::zeros(BinningConfig::new(1), 2, 1, 1);
        assert_eq!(diff_tensors(&z, &z).unwrap().total_abs_difference, 0);

        let mut one = z.clone();
        one.counts[[0, 0, 0, 0]] = 1;
        let r = diff_tensors(&z, &one).unwrap();
        assert_eq!(r.total_abs_difference, 1);
        assert_eq!(r.num_mismatched_cells, 1);
        let m = r.first_mismatch.unwrap();
        assert_eq!((m.polarity, m.bin, m.y, m.x, m.lhs, m.rhs), (Polarity::Positive, 0, 0, 0, 0, 1));

        let other = EventTensor::zeros(BinningConfig::new(1), 2, 2, 1);
        assert!(diff_tensors(&z, &other).is_err());
    }
}
