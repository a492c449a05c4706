use ndarray::{Array3, ArrayView2};

use crate::error::{Error, Result};

/// Default additive guard applied before taking the logarithm of a linear
/// intensity in `[0, 1]`.
pub const DEFAULT_LOG_EPSILON: f64 = 1e-3;

/// A `T x H x W` stack of natural-log intensity frames sampled at a fixed
/// frame period.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFrameStack {
    frames: Array3<f32>,
    frame_period: f64,
    t0: f64,
    min: f32,
    max: f32,
}

impl LogFrameStack {
    pub fn new(frames: Array3<f32>, frame_period: f64, t0: f64) -> Result<Self> {
        let (t, h, w) = frames.dim();
        if t == 0 || h == 0 || w == 0 {
            return Err(Error::invalid(
                "frames",
                format!("every dimension must be >= 1, got {t}x{h}x{w}"),
            ));
        }
        if !(frame_period.is_finite() && frame_period > 0.0) {
            return Err(Error::invalid(
                "frame_period",
                format!("must be finite and > 0, got {frame_period}"),
            ));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        let frames = if frames.is_standard_layout() {
            frames
        } else {
            frames.as_standard_layout().into_owned()
        };
        let mut min = f32::INFINITY;
        let mut max = f32::NEG_INFINITY;
        for (i, &v) in frames.iter().enumerate() {
            if !v.is_finite() {
                let (ty, rest) = (i / (h * w), i % (h * w));
                return Err(Error::invalid(
                    "frames",
                    format!("non-finite value {v} at t={ty} y={} x={}", rest / w, rest % w),
                ));
            }
            min = min.min(v);
            max = max.max(v);
        }
        Ok(Self {
            frames,
            frame_period,
            t0,
            min,
            max,
        })
    }

    pub fn frames(&self) -> &Array3<f32> {
        &self.frames
    }

    /// Row-major `[t][y][x]` view of the frame data.
    pub fn as_slice(&self) -> &[f32] {
        self.frames
            .as_slice()
            .expect("frames are kept in standard layout")
    }

    pub fn frame(&self, t: usize) -> ArrayView2<'_, f32> {
        self.frames.index_axis(ndarray::Axis(0), t)
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.frames.dim().0
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn height(&self) -> usize {
        self.frames.dim().1
    }

    pub fn width(&self) -> usize {
        self.frames.dim().2
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.frames.dim()
    }

    /// Smallest and largest log intensity in the stack.
    pub fn value_range(&self) -> (f32, f32) {
        (self.min, self.max)
    }
}

/// Map linear intensities to log intensities, `ln(I + epsilon)`.
pub fn log_transform(
    intensities: &Array3<f32>,
    epsilon: f64,
    frame_period: f64,
    t0: f64,
) -> Result<LogFrameStack> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("must be finite and > 0, got {epsilon}"),
        ));
    }
    if let Some(bad) = intensities.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::invalid(
            "intensities",
            format!("values must be finite and >= 0, found {bad}"),
        ));
    }
    let frames = intensities.mapv(|v| (v as f64 + epsilon).ln() as f32);
    LogFrameStack::new(frames, frame_period, t0)
}

/// Sign of a threshold crossing or event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    /// Channel index in an [`EventTensor`](super::EventTensor): positive first.
    pub fn channel(self) -> usize {
        match self {
            Polarity::Positive => 0,
            Polarity::Negative => 1,
        }
    }
}

impl serde::Serialize for Polarity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign())
    }
}

impl TryFrom<i8> for Polarity {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Polarity::Positive),
            -1 => Ok(Polarity::Negative),
            other => Err(Error::invalid(
                "polarity",
                format!("must be +1 or -1, got {other}"),
            )),
        }
    }
}

/// Contrast threshold together with the initial reference state of every
/// pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastConfig {
    pub contrast: f64,
    /// Subtracted from the normalized log intensity; shifts the band grid.
    pub reference_offset: f64,
    /// Sign of the virtual crossing that precedes the first frame. `Positive`
    /// places the reference on the lower edge of the initial band,
    /// `Negative` on its upper edge.
    pub initial_direction: Polarity,
}

impl ContrastConfig {
    pub fn new(contrast: f64) -> Self {
        Self {
            contrast,
            reference_offset: 0.0,
            initial_direction: Polarity::Positive,
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.reference_offset = offset;
        self
    }

    pub fn with_initial_direction(mut self, dir: Polarity) -> Self {
        self.initial_direction = dir;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contrast.is_finite() && self.contrast > 0.0) {
            return Err(Error::invalid(
                "contrast",
                format!("must be finite and > 0, got {}", self.contrast),
            ));
        }
        if !self.reference_offset.is_finite() {
            return Err(Error::invalid("reference_offset", "must be finite"));
        }
        Ok(())
    }

    /// Checks that every band index of `stack` fits comfortably in an `i32`.
    pub(crate) fn validate_for(&self, stack: &LogFrameStack) -> Result<()> {
        self.validate()?;
        let (lo, hi) = stack.value_range();
        let span = (hi as f64 - lo as f64) + self.reference_offset.abs();
        if span / self.contrast > (1u64 << 30) as f64 {
            return Err(Error::invalid(
                "contrast",
                format!(
                    "contrast {} is too small for a log-intensity span of {span}",
                    self.contrast
                ),
            ));
        }
        Ok(())
    }
}

/// Log intensity relative to the first frame, minus the reference offset.
///
/// Every path (bands, vectorized kernel, oracle) goes through this one
/// expression so that they see bit-identical inputs.
#[inline(always)]
pub(crate) fn normalized(value: f32, first: f32, offset: f64) -> f64 {
    (value as f64 - first as f64) - offset
}

/// Band index of a normalized value. A value exactly on an edge belongs to
/// the upper band. Exact for quotients within `i32` range, which
/// `ContrastConfig::validate_for` guarantees.
#[inline(always)]
pub(crate) fn band_index(normalized: f64, contrast: f64) -> i32 {
    let q = normalized / contrast;
    let t = q as i32;
    t - ((t as f64) > q) as i32
}

/// [`band_index`] without the saturating conversion.
///
/// # Safety
/// `normalized / contrast` must be finite and within `i32` range, as it is
/// for any stack accepted by `ContrastConfig::validate_for`.
#[inline(always)]
pub(crate) unsafe fn band_index_unchecked(normalized: f64, contrast: f64) -> i32 {
    let q = normalized / contrast;
    debug_assert!(q.is_finite() && q.abs() < i32::MAX as f64);
    let t: i32 = q.to_int_unchecked();
    t - ((t as f64) > q) as i32
}

/// Per-pixel contrast band indices for every frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandStack {
    pub band_ids: Array3<i32>,
}

/// Quantize every normalized log intensity into its contrast band.
pub fn band_quantize(stack: &LogFrameStack, cfg: &ContrastConfig) -> Result<BandStack> {
    cfg.validate_for(stack)?;
    let (t, h, w) = stack.dim();
    let data = stack.as_slice();
    let plane = h * w;
    let first = &data[..plane];
    let mut out = Vec::with_capacity(t * plane);
    for frame in data.chunks_exact(plane) {
        out.extend(
            frame
                .iter()
                .zip(first)
                .map(|(&v, &f)| band_index(normalized(v, f, cfg.reference_offset), cfg.contrast)),
        );
    }
    Ok(BandStack {
        band_ids: Array3::from_shape_vec((t, h, w), out).expect("shape matches data"),
    })
}
