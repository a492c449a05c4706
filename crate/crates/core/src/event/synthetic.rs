//! Seeded synthetic log-intensity stacks.

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;

use super::frames::normalized;
use super::{ContrastConfig, LogFrameStack};

/// Per-pixel mean-reverting random walk in log intensity with occasional
/// jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    /// Standard deviation of the per-frame increment.
    pub sigma: f64,
    /// Fraction of the distance to the pixel's mean recovered per frame.
    pub reversion: f64,
    pub jump_probability: f64,
    /// Standard deviation of a jump.
    pub jump_sigma: f64,
    /// Pixel means are uniform in this range.
    pub mean_range: (f64, f64),
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            sigma: 0.05,
            reversion: 0.02,
            jump_probability: 0.0,
            jump_sigma: 0.0,
            mean_range: (-3.0, 0.0),
        }
    }
}

pub fn random_walk_stack(
    seed: u64,
    (t, h, w): (usize, usize, usize),
    params: &WalkParams,
    frame_period: f64,
) -> Result<LogFrameStack> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plane = h * w;
    let means: Vec<f64> = (0..plane)
        .map(|_| rng.gen_range(params.mean_range.0..=params.mean_range.1))
        .collect();
    let mut state = means.clone();
    let mut data = Vec::with_capacity(t * plane);
    data.extend(state.iter().map(|&v| v as f32));
    for _ in 1..t {
        for (x, &m) in state.iter_mut().zip(&means) {
            let noise: f64 = rng.sample(StandardNormal);
            *x += params.reversion * (m - *x) + params.sigma * noise;
            if params.jump_probability > 0.0 && rng.gen_bool(params.jump_probability) {
                let jump: f64 = rng.sample(StandardNormal);
                *x += params.jump_sigma * jump;
            }
        }
        data.extend(state.iter().map(|&v| v as f32));
    }
    LogFrameStack::new(
        Array3::from_shape_vec((t, h, w), data).expect("sizes match"),
        frame_period,
        0.0,
    )
}

/// Nudge values so that every normalized value after the first frame is at
/// least `margin * contrast` away from a band edge.
pub fn clear_band_edges(stack: &LogFrameStack, cfg: &ContrastConfig, margin: f64) -> Result<LogFrameStack> {
    let (t, h, w) = stack.dim();
    let plane = h * w;
    let mut data = stack.as_slice().to_vec();
    let c = cfg.contrast;
    let nudge = (4.0 * margin * c).max(1e-6);
    for ti in 1..t {
        for px in 0..plane {
            let first = data[px];
            let idx = ti * plane + px;
            loop {
                let q = normalized(data[idx], first, cfg.reference_offset) / c;
                if (q - q.round()).abs() >= margin {
                    break;
                }
                let v = data[idx] as f64 + nudge * (1.0 + (data[idx] as f64).abs());
                data[idx] = v as f32;
            }
        }
    }
    LogFrameStack::new(
        Array3::from_shape_vec((t, h, w), data).expect("sizes match"),
        stack.frame_period(),
        stack.t0(),
    )
}

/// Smallest distance of any normalized value (after the first frame) to a
/// band edge, in units of the contrast.
pub fn band_edge_margin(stack: &LogFrameStack, cfg: &ContrastConfig) -> f64 {
    let (t, h, w) = stack.dim();
    let plane = h * w;
    let data = stack.as_slice();
    let mut best = f64::INFINITY;
    for ti in 1..t {
        for px in 0..plane {
            let q = normalized(data[ti * plane + px], data[px], cfg.reference_offset) / cfg.contrast;
            best = best.min((q - q.round()).abs());
        }
    }
    best
}
