//! `.fcmt` tensor sequence files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic "FCMT" | version u8 = 1 | frame_count u32 | C u16 | H u16 | W u16
//! frame_count × (C·H·W f32, channel-major then row-major)
//! ```

use crate::bytes::Reader;
use crate::error::{Error, Result};
use crate::tensor::{FeatureTensor, FeatureTensorSequence, Shape};

pub const MAGIC: &[u8; 4] = b"FCMT";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 15;

pub fn write_tensor_sequence(seq: &FeatureTensorSequence<f32>) -> Result<Vec<u8>> {
    let shape = seq.shape();
    let frame_count = u32::try_from(seq.len())
        .map_err(|_| Error::InvalidParameter("frame count exceeds u32".into()))?;
    let dim = |v: usize, name: &str| {
        u16::try_from(v).map_err(|_| Error::InvalidParameter(format!("{name} = {v} exceeds u16")))
    };
    let (c, h, w) = (
        dim(shape.channels, "channels")?,
        dim(shape.height, "height")?,
        dim(shape.width, "width")?,
    );

    let mut out = Vec::with_capacity(HEADER_LEN + 4 * shape.len() * seq.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&frame_count.to_le_bytes());
    out.extend_from_slice(&c.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.extend_from_slice(&w.to_le_bytes());
    for frame in seq.frames() {
        for v in frame.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_tensor_sequence(bytes: &[u8]) -> Result<FeatureTensorSequence<f32>> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::BadMagic {
            offset: 0,
            expected: "FCMT",
        });
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion { offset: 4, version });
    }
    let frame_count = r.u32()? as usize;
    if frame_count == 0 {
        return Err(Error::EmptySequence);
    }
    let dims_offset = r.offset();
    let (c, h, w) = (r.u16()? as usize, r.u16()? as usize, r.u16()? as usize);
    let shape = Shape::new(c, h, w).map_err(|e| Error::InvalidHeader {
        offset: dims_offset,
        reason: e.to_string(),
    })?;

    let frame_bytes = 4 * shape.len();
    let total = frame_bytes as u64 * frame_count as u64;
    if total > r.remaining() as u64 {
        return Err(Error::Truncated {
            offset: r.offset(),
            needed: (total - r.remaining() as u64) as usize,
        });
    }

    let mut frames = Vec::with_capacity(frame_count);
    for _ in 0..frame_count {
        let mut data = Vec::with_capacity(shape.len());
        for _ in 0..shape.len() {
            data.push(r.f32()?);
        }
        frames.push(FeatureTensor::new(shape, data)?);
    }
    r.finish()?;
    FeatureTensorSequence::new(frames)
}
