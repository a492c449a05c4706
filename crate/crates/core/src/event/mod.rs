//! Event generation from log-intensity frame stacks.

pub mod container;
mod frames;
mod oracle;
mod stream;
pub mod synthetic;
mod tensor;
mod vectorized;

pub use frames::{
    band_quantize, log_transform, BandStack, ContrastConfig, LogFrameStack, Polarity,
    DEFAULT_LOG_EPSILON,
};
pub use oracle::oracle_event_stream;
pub use stream::{downsample_stream, Event, SparseEventStream};
pub use tensor::{accumulate_tensor, diff_tensors, BinningConfig, DiffReport, EventTensor, Mismatch};
pub use vectorized::{
    events_from_bands, vectorized_event_tensor, vectorized_event_tensor_batch,
    SCAN_STATE_BYTES_PER_PIXEL,
};
