//! The `.fctb` truncation bitstream.
//!
//! All fields little-endian, in this order:
//!
//! ```text
//! StreamHeader   "FCTB" | version u8 | C u16 | H u16 | W u16 | refresh_period u16
//!                | frame_count u32 | alpha_num u16 | alpha_den u16 | inner_codec_id u8
//! per period:
//!   PeriodHeader truncation_enabled u8 | bitmask ⌈C/8⌉ bytes (LSB-first)
//!                | layout_rows u16 | layout_cols u16
//!   per frame:
//!     FramePayload scale_min f32 | scale_max f32 | payload_len u32 | payload
//! ```
//!
//! The number of periods and the frames in each follow from `frame_count`
//! and `refresh_period`, so the stream is self-delimiting.

pub mod codec;

use crate::bytes::Reader;
use crate::error::{Error, Result};
use crate::packing::{FrameLayout, PackedFrame, ScaleParams};
use crate::truncation::{period_boundaries, ActiveChannelMask, Alpha, PeriodPlan};

pub use codec::{CodecChoice, CodecError, CodecRegistry, InnerCodec, Qrle, Raw};

pub const MAGIC: &[u8; 4] = b"FCTB";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub channels: u16,
    pub tile_height: u16,
    pub tile_width: u16,
    pub refresh_period: u16,
    pub frame_count: u32,
    pub alpha: Alpha,
    pub inner_codec_id: u8,
}

impl StreamHeader {
    pub const LEN: usize = 22;

    pub fn period_count(&self) -> usize {
        (self.frame_count as usize).div_ceil(self.refresh_period as usize)
    }

    pub fn period_bounds(&self) -> Vec<(usize, usize)> {
        period_boundaries(self.frame_count as usize, self.refresh_period as usize)
    }

    fn validate(&self, offset: usize) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidHeader {
                offset,
                reason: reason.into(),
            })
        };
        if self.channels == 0 || self.tile_height == 0 || self.tile_width == 0 {
            return bad("channel and tile dimensions must be ≥ 1");
        }
        if self.refresh_period == 0 {
            return bad("refresh period must be ≥ 1");
        }
        if self.frame_count == 0 {
            return bad("frame count must be ≥ 1");
        }
        Ok(())
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.channels.to_le_bytes());
        out.extend_from_slice(&self.tile_height.to_le_bytes());
        out.extend_from_slice(&self.tile_width.to_le_bytes());
        out.extend_from_slice(&self.refresh_period.to_le_bytes());
        out.extend_from_slice(&self.frame_count.to_le_bytes());
        out.extend_from_slice(&self.alpha.numer().to_le_bytes());
        out.extend_from_slice(&self.alpha.denom().to_le_bytes());
        out.push(self.inner_codec_id);
    }

    fn read(r: &mut Reader<'_>, registry: &CodecRegistry) -> Result<Self> {
        if r.take(4)? != MAGIC {
            return Err(Error::BadMagic {
                offset: 0,
                expected: "FCTB",
            });
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion { offset: 4, version });
        }
        let (channels, tile_height, tile_width) = (r.u16()?, r.u16()?, r.u16()?);
        let refresh_period = r.u16()?;
        let frame_count = r.u32()?;
        let alpha_offset = r.offset();
        let (numer, denom) = (r.u16()?, r.u16()?);
        let alpha = Alpha::new(numer, denom).map_err(|e| Error::InvalidHeader {
            offset: alpha_offset,
            reason: e.to_string(),
        })?;
        let codec_offset = r.offset();
        let inner_codec_id = r.u8()?;
        if !registry.contains(inner_codec_id) {
            return Err(Error::UnknownCodec {
                offset: codec_offset,
                id: inner_codec_id,
            });
        }
        let h = StreamHeader {
            channels,
            tile_height,
            tile_width,
            refresh_period,
            frame_count,
            alpha,
            inner_codec_id,
        };
        h.validate(5)?;
        Ok(h)
    }
}

/// Per-period high-level syntax: the activation bitmask and the tile grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodHeader {
    pub truncation_enabled: bool,
    pub mask: ActiveChannelMask,
    pub layout_rows: u16,
    pub layout_cols: u16,
}

impl PeriodHeader {
    /// `1 + ⌈C/8⌉ + 4`, independent of content.
    pub fn encoded_len(channels: usize) -> usize {
        1 + channels.div_ceil(8) + 4
    }

    pub fn layout(&self, tile_height: usize, tile_width: usize) -> FrameLayout {
        FrameLayout {
            rows: self.layout_rows as usize,
            cols: self.layout_cols as usize,
            tile_height,
            tile_width,
        }
    }

    fn check(&self, capacity: Option<usize>) -> std::result::Result<(), String> {
        if !self.truncation_enabled && !self.mask.is_full() {
            return Err("truncation disabled but bitmask is not all-active".into());
        }
        if self.truncation_enabled && self.mask.is_full() {
            return Err("truncation enabled but bitmask keeps every channel".into());
        }
        if self.layout_rows == 0 || self.layout_cols == 0 {
            return Err("layout dimensions must be ≥ 1".into());
        }
        let tiles = self.layout_rows as usize * self.layout_cols as usize;
        if tiles < self.mask.active_count() {
            return Err(format!(
                "{}×{} layout cannot hold {} active channels",
                self.layout_rows,
                self.layout_cols,
                self.mask.active_count()
            ));
        }
        if let Some(cap) = capacity {
            if self.mask.active_count() > cap {
                return Err(format!(
                    "{} active channels exceed the first period's {cap}",
                    self.mask.active_count()
                ));
            }
        }
        Ok(())
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.push(self.truncation_enabled as u8);
        out.extend_from_slice(&self.mask.to_bytes());
        out.extend_from_slice(&self.layout_rows.to_le_bytes());
        out.extend_from_slice(&self.layout_cols.to_le_bytes());
    }

    fn read(r: &mut Reader<'_>, channels: usize, capacity: Option<usize>) -> Result<Self> {
        let start = r.offset();
        let truncation_enabled = match r.u8()? {
            0 => false,
            1 => true,
            v => {
                return Err(Error::InvalidHeader {
                    offset: start,
                    reason: format!("truncation_enabled must be 0 or 1, got {v}"),
                })
            }
        };
        let mask_offset = r.offset();
        let mask = ActiveChannelMask::from_bytes(r.take(channels.div_ceil(8))?, channels).map_err(
            |e| Error::MaskLayoutMismatch {
                offset: mask_offset,
                reason: e.to_string(),
            },
        )?;
        let (layout_rows, layout_cols) = (r.u16()?, r.u16()?);
        let h = PeriodHeader {
            truncation_enabled,
            mask,
            layout_rows,
            layout_cols,
        };
        h.check(capacity)
            .map_err(|reason| Error::MaskLayoutMismatch {
                offset: start,
                reason,
            })?;
        Ok(h)
    }
}

/// One frame's scale and inner-codec bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePayload {
    pub scale: ScaleParams<f32>,
    pub payload: Vec<u8>,
}

impl FramePayload {
    pub const OVERHEAD: usize = 12;

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.scale.global_min.to_le_bytes());
        out.extend_from_slice(&self.scale.global_max.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
    }

    fn read(r: &mut Reader<'_>) -> Result<(Self, usize)> {
        let offset = r.offset();
        let scale = ScaleParams::new(r.f32()?, r.f32()?).map_err(|e| Error::InvalidHeader {
            offset,
            reason: e.to_string(),
        })?;
        let len = r.u32()? as usize;
        let payload_offset = r.offset();
        let payload = r.take(len)?.to_vec();
        Ok((FramePayload { scale, payload }, payload_offset))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Period {
    pub header: PeriodHeader,
    pub frames: Vec<FramePayload>,
}

/// A parsed stream, kept at the syntax level so it re-serializes
/// byte-for-byte.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub header: StreamHeader,
    pub periods: Vec<Period>,
}

impl Stream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.header.write(&mut out);
        for p in &self.periods {
            p.header.write(&mut out);
            for f in &p.frames {
                f.write(&mut out);
            }
        }
        out
    }

    pub fn encoded_len(&self) -> usize {
        StreamHeader::LEN
            + self.hls_bytes()
            + self
                .periods
                .iter()
                .flat_map(|p| &p.frames)
                .map(|f| FramePayload::OVERHEAD + f.payload.len())
                .sum::<usize>()
    }

    /// Bytes spent on period headers.
    pub fn hls_bytes(&self) -> usize {
        self.periods.len() * PeriodHeader::encoded_len(self.header.channels as usize)
    }

    /// Structural parse. Payloads are kept opaque; see [`read_stream`] for
    /// decoding them.
    pub fn parse(bytes: &[u8], registry: &CodecRegistry) -> Result<Self> {
        Ok(parse_with_offsets(bytes, registry)?.0)
    }

    pub fn frame_payloads(&self) -> impl Iterator<Item = (&PeriodHeader, &FramePayload)> {
        self.periods
            .iter()
            .flat_map(|p| p.frames.iter().map(move |f| (&p.header, f)))
    }
}

fn parse_with_offsets(bytes: &[u8], registry: &CodecRegistry) -> Result<(Stream, Vec<usize>)> {
    let mut r = Reader::new(bytes);
    let header = StreamHeader::read(&mut r, registry)?;
    let channels = header.channels as usize;
    let mut periods: Vec<Period> = Vec::with_capacity(header.period_count());
    let mut offsets = Vec::with_capacity(header.frame_count as usize);
    for (_, length) in header.period_bounds() {
        let capacity = periods.first().map(|p| p.header.mask.active_count());
        let ph = PeriodHeader::read(&mut r, channels, capacity)?;
        let mut frames = Vec::with_capacity(length);
        for _ in 0..length {
            let (f, at) = FramePayload::read(&mut r)?;
            frames.push(f);
            offsets.push(at);
        }
        periods.push(Period { header: ph, frames });
    }
    r.finish()?;
    Ok((Stream { header, periods }, offsets))
}

/// A stream together with its decoded packed frames, in display order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedStream {
    pub stream: Stream,
    pub frames: Vec<PackedFrame<f32>>,
}

impl DecodedStream {
    /// `(period header, packed frame)` for every frame in display order.
    pub fn iter(&self) -> impl Iterator<Item = (&PeriodHeader, &PackedFrame<f32>)> {
        self.stream
            .periods
            .iter()
            .flat_map(|p| std::iter::repeat_n(&p.header, p.frames.len()))
            .zip(&self.frames)
    }
}

/// Parses `bytes` and runs every payload through its inner codec.
pub fn read_stream(bytes: &[u8], registry: &CodecRegistry) -> Result<DecodedStream> {
    let (stream, offsets) = parse_with_offsets(bytes, registry)?;
    let codec = registry
        .get(stream.header.inner_codec_id)
        .expect("codec id checked during header parse");
    let (th, tw) = (
        stream.header.tile_height as usize,
        stream.header.tile_width as usize,
    );
    let mut frames = Vec::with_capacity(offsets.len());
    for ((ph, fp), &at) in stream.frame_payloads().zip(&offsets) {
        let layout = ph.layout(th, tw);
        let samples = codec
            .decode(&fp.payload, layout.area())
            .map_err(|e| e.at(at))?;
        frames.push(PackedFrame::new(layout, samples, fp.scale)?);
    }
    Ok(DecodedStream { stream, frames })
}

/// Serializes a packed sequence. `frames` are in display order and each was
/// packed under the mask of the plan covering it.
pub fn write_stream(
    header: StreamHeader,
    plans: &[PeriodPlan],
    frames: &[PackedFrame<f32>],
    codec: &dyn InnerCodec,
) -> Result<Vec<u8>> {
    let bounds = header.period_bounds();
    if header.inner_codec_id != codec.id() {
        return Err(Error::InvalidParameter(
            "header codec id does not match codec".into(),
        ));
    }
    if plans.len() != bounds.len() || frames.len() != header.frame_count as usize {
        return Err(Error::InvalidParameter(format!(
            "{} plans / {} frames do not cover {} periods / {} frames",
            plans.len(),
            frames.len(),
            bounds.len(),
            header.frame_count
        )));
    }
    header.validate(5)?;

    let mut periods: Vec<Period> = Vec::with_capacity(plans.len());
    for (plan, &(start, length)) in plans.iter().zip(&bounds) {
        if (plan.start, plan.length) != (start, length) {
            return Err(Error::InvalidParameter(format!(
                "plan {} covers ({}, {}), expected ({start}, {length})",
                plan.period_index, plan.start, plan.length
            )));
        }
        if plan.mask.len() != header.channels as usize {
            return Err(Error::Shape(
                "plan mask does not match channel count".into(),
            ));
        }
        let layout = frames[start].layout;
        let dim = |v: usize| {
            u16::try_from(v).map_err(|_| Error::InvalidParameter("layout exceeds u16".into()))
        };
        let ph = PeriodHeader {
            truncation_enabled: plan.truncation_enabled,
            mask: plan.mask.clone(),
            layout_rows: dim(layout.rows)?,
            layout_cols: dim(layout.cols)?,
        };
        let capacity = periods.first().map(|p| p.header.mask.active_count());
        ph.check(capacity).map_err(Error::InvalidParameter)?;

        let mut payloads = Vec::with_capacity(length);
        for f in &frames[start..start + length] {
            if f.layout != layout
                || layout.tile_height != header.tile_height as usize
                || layout.tile_width != header.tile_width as usize
            {
                return Err(Error::Shape("frame layout changes within a period".into()));
            }
            payloads.push(FramePayload {
                scale: f.scale,
                payload: codec.encode(&f.samples),
            });
        }
        periods.push(Period {
            header: ph,
            frames: payloads,
        });
    }
    Ok(Stream { header, periods }.to_bytes())
}
