//! Dense event tensors straight from band indices.
//!
//! Per pixel the log intensity is normalized against the first frame and
//! floor-divided by the contrast into bands. The first difference of the
//! band sequence marks threshold crossings; a jump of `k` bands is `k` unit
//! crossings of one sign. Among the non-zero crossings, a second difference
//! of zero (two consecutive crossings with the same sign) fires one event
//! at the later crossing. A virtual crossing with the configured initial
//! direction precedes the first frame.
//!
//! The kernel walks frames in time order over blocks of pixels and carries
//! only the previous band and the last crossing sign per pixel, so no
//! `T x H x W` intermediate is materialized. Blocks are independent and are processed in
//! parallel; the result does not depend on how they are partitioned.

use ndarray::Array4;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::frames::{band_index, band_index_unchecked, normalized};
use super::{BinningConfig, ContrastConfig, EventTensor, LogFrameStack, Polarity};

/// Bytes of per-pixel scan state carried by the kernel: previous band (i32)
/// and last crossing sign (i8).
pub const SCAN_STATE_BYTES_PER_PIXEL: usize = 5;

/// Pixels per independently scanned block; small enough that a block's
/// state and counters stay in cache across frames.
const BLOCK_PIXELS: usize = 4096;

pub fn vectorized_event_tensor(
    stack: &LogFrameStack,
    cfg: &ContrastConfig,
    bins: BinningConfig,
) -> Result<EventTensor> {
    let (t, h, w) = stack.dim();
    if t < 2 {
        return Err(Error::invalid(
            "frames",
            format!("need at least 2 frames, got {t}"),
        ));
    }
    cfg.validate_for(stack)?;
    bins.validate(t)?;

    let plane = h * w;
    let blocks: Vec<(usize, Vec<u32>)> = (0..plane)
        .step_by(BLOCK_PIXELS)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let len = BLOCK_PIXELS.min(plane - start);
            (start, scan_block(stack, cfg, bins, start, len))
        })
        .collect();

    let nb = bins.num_bins;
    let mut counts = Array4::<u32>::zeros((2, nb, h, w));
    let dst = counts.as_slice_mut().expect("fresh array is contiguous");
    for (start, block) in &blocks {
        let len = block.len() / (2 * nb);
        for (pb, chunk) in block.chunks_exact(len).enumerate() {
            let at = pb * plane + start;
            dst[at..at + len].copy_from_slice(chunk);
        }
    }
    Ok(EventTensor {
        counts,
        bin_boundaries: bins.boundaries(t),
    })
}

/// Runs [`vectorized_event_tensor`] over a batch of environments.
pub fn vectorized_event_tensor_batch(
    stacks: &[LogFrameStack],
    cfg: &ContrastConfig,
    bins: BinningConfig,
) -> Result<Vec<EventTensor>> {
    stacks
        .par_iter()
        .map(|s| vectorized_event_tensor(s, cfg, bins))
        .collect()
}

/// Counts for `len` consecutive pixels starting at `start`, laid out
/// `[polarity][bin][pixel]`.
fn scan_block(stack: &LogFrameStack, cfg: &ContrastConfig, bins: BinningConfig, start: usize, len: usize) -> Vec<u32> {
    #[cfg(target_arch = "x86_64")]
    {
        if is_x86_feature_detected!("avx2") {
            // SAFETY: the required CPU feature was detected at runtime.
            return unsafe { scan_block_avx2(stack, cfg, bins, start, len) };
        }
    }
    scan_block_generic(stack, cfg, bins, start, len)
}

/// Same kernel compiled for wider vectors. IEEE division and the integer
/// conversions round identically on every instruction set, so the counts are
/// bit-for-bit those of the generic build.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn scan_block_avx2(
    stack: &LogFrameStack,
    cfg: &ContrastConfig,
    bins: BinningConfig,
    start: usize,
    len: usize,
) -> Vec<u32> {
    scan_block_generic(stack, cfg, bins, start, len)
}

#[inline(always)]
fn scan_block_generic(
    stack: &LogFrameStack,
    cfg: &ContrastConfig,
    bins: BinningConfig,
    start: usize,
    len: usize,
) -> Vec<u32> {
    let (t, h, w) = stack.dim();
    let nb = bins.num_bins;
    let data = stack.as_slice();
    let plane = h * w;
    let row_at = |ti: usize| &data[ti * plane + start..ti * plane + start + len];

    let first = row_at(0);
    let c = cfg.contrast;
    let offset = cfg.reference_offset;

    let mut prev_band: Vec<i32> = first
        .iter()
        .map(|&f| band_index(normalized(f, f, offset), c))
        .collect();
    let mut last_sign: Vec<i8> = vec![cfg.initial_direction.sign(); len];
    let mut out = vec![0u32; 2 * nb * len];

    for ti in 1..t {
        let bin = bins.bin_of(ti, t);
        let (pos, neg) = out.split_at_mut(nb * len);
        let pos = &mut pos[bin * len..(bin + 1) * len];
        let neg = &mut neg[bin * len..(bin + 1) * len];
        let row = row_at(ti);
        let prev = &mut prev_band[..len];
        let last = &mut last_sign[..len];
        for x in 0..len {
            // SAFETY: `validate_for` bounds every quotient by 2^30 in
            // magnitude and the stack holds only finite values.
            let band = unsafe { band_index_unchecked(normalized(row[x], first[x], offset), c) };
            let delta = band - prev[x];
            prev[x] = band;
            let sign = delta.signum() as i8;
            // k unit crossings: the first pairs with the previous crossing,
            // the remaining k - 1 follow a same-sign crossing and all fire.
            // With no crossing the expression is -1 and clamps to zero.
            let fired = (delta.abs() - 1 + (sign == last[x]) as i32).max(0) as u32;
            last[x] = if sign != 0 { sign } else { last[x] };
            pos[x] += fired * (sign > 0) as u32;
            neg[x] += fired * (sign < 0) as u32;
        }
    }
    out
}

/// Number of events per pixel implied by a band sequence: the literal
/// expand-then-second-difference formulation, used for cross-checking the
/// streaming kernel.
pub fn events_from_bands(bands: &[i32], initial: Polarity) -> (u32, u32) {
    let mut crossings: Vec<i8> = vec![initial.sign()];
    for w in bands.windows(2) {
        let d = w[1] - w[0];
        let s = d.signum() as i8;
        crossings.extend(std::iter::repeat(s).take(d.unsigned_abs() as usize));
    }
    let mut pos = 0;
    let mut neg = 0;
    for pair in crossings.windows(2) {
        if pair[1] - pair[0] == 0 {
            if pair[1] > 0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
    }
    (pos, neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn stack_1px(values: &[f32]) -> LogFrameStack {
        LogFrameStack::new(
            Array3::from_shape_vec((values.len(), 1, 1), values.to_vec()).unwrap(),
            0.01,
            0.0,
        )
        .unwrap()
    }

    fn counts_1px(values: &[f32], cfg: ContrastConfig) -> (u32, u32) {
        let t = vectorized_event_tensor(&stack_1px(values), &cfg, BinningConfig::new(1)).unwrap();
        (t.counts[[0, 0, 0, 0]], t.counts[[1, 0, 0, 0]])
    }

    #[test]
    fn constant_frames_give_nothing() {
        let s = LogFrameStack::new(Array3::from_elem((6, 3, 4), -1.3), 0.01, 0.0).unwrap();
        let t = vectorized_event_tensor(&s, &ContrastConfig::new(0.1), BinningConfig::new(5)).unwrap();
        assert_eq!(t.total(), 0);
        assert_eq!(t.counts.dim(), (2, 5, 3, 4));
    }

    #[test]
    fn hysteresis_trace() {
        assert_eq!(counts_1px(&[0.0, 1.2, 0.3, -1.1], ContrastConfig::new(1.0)), (1, 2));
    }

    #[test]
    fn multi_crossing_jump() {
        assert_eq!(counts_1px(&[0.0, 3.5], ContrastConfig::new(1.0)), (3, 0));
        assert_eq!(counts_1px(&[0.0, -3.5], ContrastConfig::new(1.0)), (0, 3));
    }

    #[test]
    fn initial_direction_decides_the_first_crossing() {
        let neg = ContrastConfig::new(1.0).with_initial_direction(Polarity::Negative);
        // Reference at the upper edge (1.0): reaching 1.5 is not yet a crossing.
        assert_eq!(counts_1px(&[0.0, 1.5], neg), (0, 0));
        assert_eq!(counts_1px(&[0.0, 2.5], neg), (1, 0));
        // Falling below zero is already a full step under the reference.
        assert_eq!(counts_1px(&[0.0, -0.5], neg), (0, 1));
        assert_eq!(counts_1px(&[0.0, -1.5], neg), (0, 2));
    }

    #[test]
    fn needs_two_frames() {
        assert!(vectorized_event_tensor(&stack_1px(&[0.0]), &ContrastConfig::new(1.0), BinningConfig::new(1)).is_err());
    }

    #[test]
    fn literal_formulation_matches_worked_example() {
        assert_eq!(events_from_bands(&[0, 1, 0, -2], Polarity::Positive), (1, 2));
        assert_eq!(events_from_bands(&[0, 3], Polarity::Positive), (3, 0));
        assert_eq!(events_from_bands(&[0, 3], Polarity::Negative), (2, 0));
    }

    #[test]
    fn bins_split_events_in_time() {
        // 4 transitions into 2 bins: steps 1-2 -> bin 0, 3-4 -> bin 1.
        let s = stack_1px(&[0.0, 1.1, 2.1, 3.1, 4.1]);
        let t = vectorized_event_tensor(&s, &ContrastConfig::new(1.0), BinningConfig::new(2)).unwrap();
        assert_eq!(t.counts[[0, 0, 0, 0]], 2);
        assert_eq!(t.counts[[0, 1, 0, 0]], 2);
        assert_eq!(t.bin_boundaries, vec![0, 2, 4]);
    }
}
