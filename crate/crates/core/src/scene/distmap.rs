//! Angular obstacle-distance maps.
//!
//! Bins are ordered left to right as seen from the camera, so bin 0 covers
//! the most counter-clockwise bearings.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

use super::{min_obstacle_distance, BearingInterval, CameraPose, ForestScene, RenderConfig};

pub const DEFAULT_NUM_BINS: usize = 10;
pub const DEFAULT_BIN_SPAN_DEG: f64 = 11.25;

pub fn default_bin_span() -> f64 {
    DEFAULT_BIN_SPAN_DEG.to_radians()
}

/// Per-bin minimum obstacle distance around the heading.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    pub bins: Vec<f64>,
    pub bin_span: f64,
    pub gravity_aligned: bool,
}

/// Three horizontal image bands of `N` bins each, top band first.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedDistanceMap {
    pub bands: Vec<f64>,
    pub bins_per_band: usize,
    pub bin_span: f64,
}

impl BandedDistanceMap {
    pub fn band(&self, i: usize) -> &[f64] {
        &self.bands[i * self.bins_per_band..(i + 1) * self.bins_per_band]
    }
}

fn check_bins(n: usize, span: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("bins", "need at least one bin"));
    }
    if !(span.is_finite() && span > 0.0 && n as f64 * span < 2.0 * std::f64::consts::PI) {
        return Err(Error::invalid(
            "bin span",
            format!("{n} bins of {span} rad must cover less than a full turn"),
        ));
    }
    Ok(())
}

/// Bearing interval of teacher bin `i` for a heading `yaw`.
pub fn teacher_bin_interval(yaw: f64, i: usize, n: usize, span: f64) -> BearingInterval {
    let left = yaw + (0.5 * n as f64 - i as f64) * span;
    BearingInterval::new(left - span, left)
}

/// Gravity-aligned map in the horizontal plane: only the pose's position and
/// yaw matter.
pub fn teacher_distance_map(
    scene: &ForestScene,
    pose: &CameraPose,
    n: usize,
    span: f64,
    max_range: f64,
) -> Result<DistanceMap> {
    check_bins(n, span)?;
    pose.validate()?;
    if !(max_range > 0.0) {
        return Err(Error::invalid("max_range", "must be > 0"));
    }
    let pos = [pose.position[0], pose.position[1]];
    let bins = (0..n)
        .map(|i| min_obstacle_distance(scene, pos, teacher_bin_interval(pose.yaw, i, n, span), max_range))
        .collect();
    Ok(DistanceMap {
        bins,
        bin_span: span,
        gravity_aligned: true,
    })
}

/// Minimum depth per image band and horizontal angular interval. Rows split
/// into three equal bands, the remainder going to the bottom band; intervals
/// that no pixel column falls into stay at `max_range`.
pub fn student_distance_map(
    depth: ArrayView2<'_, f64>,
    cfg: &RenderConfig,
    n: usize,
    span: f64,
) -> Result<BandedDistanceMap> {
    check_bins(n, span)?;
    let (h, w) = depth.dim();
    if h != cfg.height || w != cfg.width {
        return Err(Error::invalid(
            "depth image",
            format!("{w}x{h} does not match the {}x{} camera", cfg.width, cfg.height),
        ));
    }
    let band_rows = h / 3;
    let band_of_row = |v: usize| (v / band_rows.max(1)).min(2);
    let column_bin: Vec<Option<usize>> = (0..w)
        .map(|u| {
            let (xr, _) = cfg.normalized_coords(u, 0);
            let pos = xr.atan() / span + 0.5 * n as f64;
            (pos >= 0.0 && pos < n as f64).then(|| pos as usize)
        })
        .collect();

    let mut bands = vec![cfg.max_range; 3 * n];
    for ((v, u), &d) in depth.indexed_iter() {
        let band = if band_rows == 0 { 2 } else { band_of_row(v) };
        if let Some(bin) = column_bin[u] {
            let slot = &mut bands[band * n + bin];
            *slot = slot.min(d.min(cfg.max_range));
        }
    }
    Ok(BandedDistanceMap {
        bands,
        bins_per_band: n,
        bin_span: span,
    })
}
