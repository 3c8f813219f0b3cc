//! Inner codecs: the frame-level compressors behind the packed frames.
//!
//! Two reference codecs ship with the crate. `RAW` (id 0) stores every
//! sample as a little-endian u16 and is lossless. `QRLE` (id 1) snaps each
//! sample to a multiple of a step `q`, then run-length codes the result as
//! `(value u16, run u16)` pairs.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::packing::SAMPLE_MAX;

/// Failure inside an inner-codec payload. `offset` is relative to the first
/// payload byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecError {
    OutOfRange { offset: usize },
    Malformed { offset: usize, reason: String },
}

impl CodecError {
    /// Rebases onto the absolute stream offset of the payload.
    pub fn at(self, base: usize) -> Error {
        match self {
            CodecError::OutOfRange { offset } => Error::SampleOutOfRange {
                offset: base + offset,
            },
            CodecError::Malformed { offset, reason } => Error::Payload {
                offset: base + offset,
                reason,
            },
        }
    }
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::OutOfRange { offset } => write!(f, "sample out of range at {offset}"),
            CodecError::Malformed { offset, reason } => write!(f, "{reason} at {offset}"),
        }
    }
}

pub trait InnerCodec: Send + Sync {
    fn id(&self) -> u8;

    fn name(&self) -> &'static str;

    /// `samples` are 10-bit values in raster order.
    fn encode(&self, samples: &[u16]) -> Vec<u8>;

    /// Must yield exactly `sample_count` samples.
    fn decode(&self, bytes: &[u8], sample_count: usize) -> Result<Vec<u16>, CodecError>;
}

pub const RAW_ID: u8 = 0;
pub const QRLE_ID: u8 = 1;

/// The QRLE rate ladder.
pub const QRLE_STEPS: [u16; 6] = [1, 2, 4, 8, 16, 32];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Raw;

impl InnerCodec for Raw {
    fn id(&self) -> u8 {
        RAW_ID
    }

    fn name(&self) -> &'static str {
        "raw"
    }

    fn encode(&self, samples: &[u16]) -> Vec<u8> {
        samples.iter().flat_map(|s| s.to_le_bytes()).collect()
    }

    fn decode(&self, bytes: &[u8], sample_count: usize) -> Result<Vec<u16>, CodecError> {
        if bytes.len() != 2 * sample_count {
            return Err(CodecError::Malformed {
                offset: 0,
                reason: format!("expected {} bytes, got {}", 2 * sample_count, bytes.len()),
            });
        }
        bytes
            .chunks_exact(2)
            .enumerate()
            .map(|(i, b)| match u16::from_le_bytes([b[0], b[1]]) {
                s if s <= SAMPLE_MAX => Ok(s),
                _ => Err(CodecError::OutOfRange { offset: 2 * i }),
            })
            .collect()
    }
}

/// Uniform requantization with step `q` followed by run-length coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Qrle {
    step: u16,
}

impl Qrle {
    pub fn new(step: u16) -> Result<Self> {
        if !QRLE_STEPS.contains(&step) {
            return Err(Error::InvalidParameter(format!(
                "qrle step must be one of {QRLE_STEPS:?}, got {step}"
            )));
        }
        Ok(Qrle { step })
    }

    #[inline]
    pub fn step(&self) -> u16 {
        self.step
    }

    /// `round(s / q) · q` clamped to 1023, rounding halves up.
    #[inline]
    pub fn requantize(&self, s: u16) -> u16 {
        let q = self.step as u32;
        let snapped = (2 * s as u32 + q) / (2 * q) * q;
        snapped.min(SAMPLE_MAX as u32) as u16
    }
}

impl Default for Qrle {
    fn default() -> Self {
        Qrle { step: 1 }
    }
}

impl InnerCodec for Qrle {
    fn id(&self) -> u8 {
        QRLE_ID
    }

    fn name(&self) -> &'static str {
        "qrle"
    }

    fn encode(&self, samples: &[u16]) -> Vec<u8> {
        qrle_encode(samples, self.step)
    }

    fn decode(&self, bytes: &[u8], sample_count: usize) -> Result<Vec<u16>, CodecError> {
        qrle_decode(bytes, sample_count, self.step)
    }
}

pub fn qrle_encode(samples: &[u16], q: u16) -> Vec<u8> {
    let codec = Qrle { step: q.max(1) };
    let mut out = Vec::new();
    let mut emit = |value: u16, run: u16| {
        out.extend_from_slice(&value.to_le_bytes());
        out.extend_from_slice(&run.to_le_bytes());
    };
    let mut iter = samples.iter().map(|&s| codec.requantize(s));
    let Some(mut current) = iter.next() else {
        return Vec::new();
    };
    let mut run: u16 = 1;
    for v in iter {
        if v == current && run < u16::MAX {
            run += 1;
        } else {
            emit(current, run);
            current = v;
            run = 1;
        }
    }
    emit(current, run);
    out
}

/// Expands `(value, run)` pairs. Every value must lie on the step-`q`
/// lattice (or be the clamped maximum 1023); a decoder that does not know
/// the encoder's step passes `q = 1`.
pub fn qrle_decode(bytes: &[u8], sample_count: usize, q: u16) -> Result<Vec<u16>, CodecError> {
    if !bytes.len().is_multiple_of(4) {
        return Err(CodecError::Malformed {
            offset: bytes.len() - bytes.len() % 4,
            reason: "dangling partial run pair".into(),
        });
    }
    let q = q.max(1);
    let mut out = Vec::with_capacity(sample_count);
    for (i, pair) in bytes.chunks_exact(4).enumerate() {
        let offset = 4 * i;
        let value = u16::from_le_bytes([pair[0], pair[1]]);
        let run = u16::from_le_bytes([pair[2], pair[3]]) as usize;
        if value > SAMPLE_MAX {
            return Err(CodecError::OutOfRange { offset });
        }
        if value % q != 0 && value != SAMPLE_MAX {
            return Err(CodecError::Malformed {
                offset,
                reason: format!("value {value} is off the step-{q} lattice"),
            });
        }
        if run == 0 {
            return Err(CodecError::Malformed {
                offset: offset + 2,
                reason: "zero-length run".into(),
            });
        }
        if out.len() + run > sample_count {
            return Err(CodecError::Malformed {
                offset: offset + 2,
                reason: format!("runs exceed {sample_count} samples"),
            });
        }
        out.resize(out.len() + run, value);
    }
    if out.len() != sample_count {
        return Err(CodecError::Malformed {
            offset: bytes.len(),
            reason: format!("decoded {} of {sample_count} samples", out.len()),
        });
    }
    Ok(out)
}

/// Codec selection on the command line and in configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecChoice {
    Raw,
    Qrle(Qrle),
}

impl CodecChoice {
    pub fn id(&self) -> u8 {
        self.codec().id()
    }

    pub fn codec(&self) -> &dyn InnerCodec {
        match self {
            CodecChoice::Raw => &Raw,
            CodecChoice::Qrle(q) => q,
        }
    }

    /// The QRLE step, or 1 for the lossless codec.
    pub fn step(&self) -> u16 {
        match self {
            CodecChoice::Raw => 1,
            CodecChoice::Qrle(q) => q.step(),
        }
    }
}

/// Codecs available to a stream reader, keyed by header id.
pub struct CodecRegistry {
    codecs: BTreeMap<u8, Box<dyn InnerCodec>>,
}

impl CodecRegistry {
    pub fn empty() -> Self {
        CodecRegistry {
            codecs: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, codec: Box<dyn InnerCodec>) {
        self.codecs.insert(codec.id(), codec);
    }

    pub fn get(&self, id: u8) -> Option<&dyn InnerCodec> {
        self.codecs.get(&id).map(|c| c.as_ref())
    }

    pub fn contains(&self, id: u8) -> bool {
        self.codecs.contains_key(&id)
    }
}

impl Default for CodecRegistry {
    /// Both reference codecs; QRLE decodes with step 1 since the step is not
    /// signalled.
    fn default() -> Self {
        let mut r = CodecRegistry::empty();
        r.register(Box::new(Raw));
        r.register(Box::new(Qrle::default()));
        r
    }
}
