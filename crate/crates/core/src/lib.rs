//! Band-quantized event-camera simulation for quadrotor navigation data.
//!
//! * [`event`]: log-intensity frame stacks to dense event tensors, with a
//!   sequential per-pixel reference generator and binary containers.
//! * [`scene`]: Poisson forests of cylinders, a pinhole raycaster, angular
//!   distance maps and camera trajectories.
//! * [`reward`]: the shaped navigation reward and episode metrics.

pub mod error;
pub mod event;
pub mod fmt;
pub mod scene;
pub mod reward;

pub use error::{Error, Result};
pub use event::{
    accumulate_tensor, band_quantize, diff_tensors, downsample_stream, log_transform,
    oracle_event_stream, vectorized_event_tensor, BinningConfig, ContrastConfig, DiffReport,
    EventTensor, LogFrameStack, Polarity, SparseEventStream,
};
