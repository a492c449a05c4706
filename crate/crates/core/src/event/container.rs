//! Little-endian binary containers for frame stacks (`EVF1`), dense event
//! tensors (`EVT1`) and sparse event streams (`EVS1`).
//!
//! ```text
//! EVF1: "EVF1" version:u32=1 T:u32 H:u32 W:u32 dtype:u8 frame_period:f64 data[T*H*W]
//!       dtype 0 = u8 linear intensity, 1 = f32 log intensity, 2 = f32 depth (m)
//! EVT1: "EVT1" version:u32=1 B:u32 H:u32 W:u32 counts:u32[2*B*H*W] boundaries:u32[B+1]
//! EVS1: "EVS1" version:u32=1 count:u64 {step:u32 x:u16 y:u16 polarity:i8 pad:u8*3}[count]
//! ```

use std::path::Path;

use ndarray::{Array3, Array4};

use crate::error::{Error, Result};

use super::{log_transform, Event, EventTensor, LogFrameStack, Polarity, SparseEventStream};

pub const VERSION: u32 = 1;
const EVF_MAGIC: &[u8; 4] = b"EVF1";
const EVT_MAGIC: &[u8; 4] = b"EVT1";
const EVS_MAGIC: &[u8; 4] = b"EVS1";
const EVF_HEADER: usize = 4 + 4 * 4 + 1 + 8;
const EVS_RECORD: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    LinearIntensityU8 = 0,
    LogIntensityF32 = 1,
    DepthF32 = 2,
}

impl FrameKind {
    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(FrameKind::LinearIntensityU8),
            1 => Ok(FrameKind::LogIntensityF32),
            2 => Ok(FrameKind::DepthF32),
            other => Err(Error::format("EVF1", format!("unknown dtype {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FramePayload {
    U8(Array3<u8>),
    F32(Array3<f32>),
}

/// Decoded contents of an `EVF1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile {
    pub kind: FrameKind,
    pub frame_period: f64,
    pub payload: FramePayload,
}

impl FrameFile {
    pub fn from_log_stack(stack: &LogFrameStack) -> Self {
        Self {
            kind: FrameKind::LogIntensityF32,
            frame_period: stack.frame_period(),
            payload: FramePayload::F32(stack.frames().clone()),
        }
    }

    pub fn depth(depths: Array3<f32>, frame_period: f64) -> Self {
        Self {
            kind: FrameKind::DepthF32,
            frame_period,
            payload: FramePayload::F32(depths),
        }
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        match &self.payload {
            FramePayload::U8(a) => a.dim(),
            FramePayload::F32(a) => a.dim(),
        }
    }

    /// Interpret the file as log intensities. 8-bit frames are scaled to
    /// `[0, 1]` and log-transformed with `epsilon`.
    pub fn to_log_stack(&self, epsilon: f64) -> Result<LogFrameStack> {
        match (&self.kind, &self.payload) {
            (FrameKind::LinearIntensityU8, FramePayload::U8(a)) => {
                log_transform(&a.mapv(|v| v as f32 / 255.0), epsilon, self.frame_period, 0.0)
            }
            (FrameKind::LogIntensityF32, FramePayload::F32(a)) => {
                LogFrameStack::new(a.clone(), self.frame_period, 0.0)
            }
            (FrameKind::DepthF32, _) => Err(Error::invalid(
                "dtype",
                "file holds depth maps, not intensities",
            )),
            _ => Err(Error::format("EVF1", "payload does not match dtype")),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let (t, h, w) = self.dim();
        let elem = match self.payload {
            FramePayload::U8(_) => 1,
            FramePayload::F32(_) => 4,
        };
        let mut out = Vec::with_capacity(EVF_HEADER + t * h * w * elem);
        out.extend_from_slice(EVF_MAGIC);
        for v in [VERSION, t as u32, h as u32, w as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.kind as u8);
        out.extend_from_slice(&self.frame_period.to_le_bytes());
        match &self.payload {
            FramePayload::U8(a) => out.extend(a.iter().copied()),
            FramePayload::F32(a) => a.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "EVF1");
        r.magic(EVF_MAGIC)?;
        r.version()?;
        let t = r.u32()? as usize;
        let h = r.u32()? as usize;
        let w = r.u32()? as usize;
        let kind = FrameKind::from_code(r.u8()?)?;
        let frame_period = r.f64()?;
        let n = t
            .checked_mul(h)
            .and_then(|v| v.checked_mul(w))
            .ok_or_else(|| Error::format("EVF1", "dimensions overflow"))?;
        let payload = match kind {
            FrameKind::LinearIntensityU8 => {
                let data = r.take(n)?.to_vec();
                FramePayload::U8(Array3::from_shape_vec((t, h, w), data).expect("length checked"))
            }
            _ => {
                let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::format("EVF1", "dimensions overflow"))?)?;
                let data = raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                FramePayload::F32(Array3::from_shape_vec((t, h, w), data).expect("length checked"))
            }
        };
        r.finish()?;
        Ok(Self {
            kind,
            frame_period,
            payload,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes).map_err(|e| e.in_file(path))
    }
}

pub fn encode_tensor(t: &EventTensor) -> Vec<u8> {
    let (_, b, h, w) = t.counts.dim();
    let mut out = Vec::with_capacity(20 + 4 * (t.counts.len() + b + 1));
    out.extend_from_slice(EVT_MAGIC);
    for v in [VERSION, b as u32, h as u32, w as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    t.counts
        .iter()
        .chain(t.bin_boundaries.iter())
        .for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<EventTensor> {
    let mut r = Reader::new(bytes, "EVT1");
    r.magic(EVT_MAGIC)?;
    r.version()?;
    let b = r.u32()? as usize;
    let h = r.u32()? as usize;
    let w = r.u32()? as usize;
    if b == 0 {
        return Err(Error::format("EVT1", "zero bins"));
    }
    let n = 2usize
        .checked_mul(b)
        .and_then(|v| v.checked_mul(h))
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::format("EVT1", "dimensions overflow"))?;
    let counts: Vec<u32> = (0..n).map(|_| r.u32()).collect::<Result<_>>()?;
    let bounds: Vec<u32> = (0..=b).map(|_| r.u32()).collect::<Result<_>>()?;
    r.finish()?;
    let counts = Array4::from_shape_vec((2, b, h, w), counts).expect("length checked");
    EventTensor::from_parts(counts, bounds).map_err(|e| Error::format("EVT1", e.to_string()))
}

pub fn write_tensor(t: &EventTensor, path: &Path) -> Result<()> {
    std::fs::write(path, encode_tensor(t)).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: &Path) -> Result<EventTensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes).map_err(|e| e.in_file(path))
}

pub fn encode_stream(s: &SparseEventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + EVS_RECORD * s.len());
    out.extend_from_slice(EVS_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(s.len() as u64).to_le_bytes());
    for e in s.iter() {
        out.extend_from_slice(&e.step.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.polarity.sign() as u8);
        out.extend_from_slice(&[0u8; 3]);
    }
    out
}

/// The container carries no sensor size, so the caller supplies it.
pub fn decode_stream(bytes: &[u8], width: usize, height: usize) -> Result<SparseEventStream> {
    let mut r = Reader::new(bytes, "EVS1");
    r.magic(EVS_MAGIC)?;
    r.version()?;
    let count = r.u64()? as usize;
    if r.remaining() != count.saturating_mul(EVS_RECORD) {
        return Err(Error::format(
            "EVS1",
            format!("expected {count} records, found {} bytes", r.remaining()),
        ));
    }
    let mut events = Vec::with_capacity(count);
    for _ in 0..count {
        let step = r.u32()?;
        let x = r.u16()?;
        let y = r.u16()?;
        let polarity = Polarity::try_from(r.u8()? as i8).map_err(|e| Error::format("EVS1", e.to_string()))?;
        r.take(3)?;
        events.push(Event { step, y, x, polarity });
    }
    SparseEventStream::new(width, height, events)
}

pub fn write_stream(s: &SparseEventStream, path: &Path) -> Result<()> {
    std::fs::write(path, encode_stream(s)).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    kind: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], kind: &'static str) -> Self {
        Self { bytes, pos: 0, kind }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::format(
                self.kind,
                format!("truncated: needed {n} bytes at offset {}, {} left", self.pos, self.remaining()),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        self.array().map(u16::from_le_bytes)
    }

    fn u32(&mut self) -> Result<u32> {
        self.array().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.array().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.array().map(f64::from_le_bytes)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != expected {
            return Err(Error::format(self.kind, format!("bad magic {got:?}")));
        }
        Ok(())
    }

    fn version(&mut self) -> Result<()> {
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::format(self.kind, format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::format(
                self.kind,
                format!("{} trailing bytes", self.remaining()),
            ));
        }
        Ok(())
    }
}
