//! End-to-end encode and decode of `f32` tensor sequences.

use crate::bitstream::{
    read_stream, write_stream, CodecChoice, CodecRegistry, PeriodHeader, StreamHeader,
};
use crate::error::{Error, Result};
use crate::packing::{compute_layout, pack_into, unpack, FrameLayout};
use crate::tensor::{FeatureTensorSequence, Shape};
use crate::truncation::{plan_sequence, CutoffConfig, PeriodPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub cutoff: CutoffConfig,
    /// When false every period is sent whole, exactly as a codec without
    /// channel truncation would.
    pub truncation: bool,
    pub codec: CodecChoice,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            cutoff: CutoffConfig::default(),
            truncation: true,
            codec: CodecChoice::Raw,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub plans: Vec<PeriodPlan>,
    /// Packed frame geometry, fixed for the whole stream.
    pub layout: FrameLayout,
}

impl Encoded {
    pub fn total_bits(&self) -> u64 {
        8 * self.bytes.len() as u64
    }

    /// Bits spent on period headers.
    pub fn hls_bits(&self) -> u64 {
        let c = self.plans.first().map_or(0, |p| p.mask.len());
        8 * (self.plans.len() * PeriodHeader::encoded_len(c)) as u64
    }
}

/// Plans the refresh periods, packs every frame and writes the stream.
///
/// The tile grid is sized for period 0's active count and kept for the rest
/// of the stream; later periods never keep more channels than that.
pub fn encode_sequence(
    seq: &FeatureTensorSequence<f32>,
    config: &EncoderConfig,
) -> Result<Encoded> {
    let shape = seq.shape();
    let header = stream_header(seq, config)?;
    let plans = plan_sequence(seq, &config.cutoff, config.truncation)?;
    let layout = compute_layout(plans[0].mask.active_count(), shape.height, shape.width);

    let mut frames = Vec::with_capacity(seq.len());
    for plan in &plans {
        for frame in &seq.frames()[plan.frames()] {
            frames.push(pack_into(frame, &plan.mask, layout)?);
        }
    }
    let bytes = write_stream(header, &plans, &frames, config.codec.codec())?;
    Ok(Encoded {
        bytes,
        plans,
        layout,
    })
}

fn stream_header(seq: &FeatureTensorSequence<f32>, config: &EncoderConfig) -> Result<StreamHeader> {
    let shape = seq.shape();
    let u16_field = |v: usize, name: &str| {
        u16::try_from(v).map_err(|_| Error::InvalidParameter(format!("{name} = {v} exceeds u16")))
    };
    Ok(StreamHeader {
        channels: u16_field(shape.channels, "channels")?,
        tile_height: u16_field(shape.height, "height")?,
        tile_width: u16_field(shape.width, "width")?,
        refresh_period: u16_field(config.cutoff.refresh_period, "refresh period")?,
        frame_count: u32::try_from(seq.len())
            .map_err(|_| Error::InvalidParameter("frame count exceeds u32".into()))?,
        alpha: config.cutoff.alpha,
        inner_codec_id: config.codec.id(),
    })
}

/// Decodes a stream back to full-shape tensors; truncated channels come back
/// flat at the mean of the decoded active channels.
pub fn decode_stream(bytes: &[u8], registry: &CodecRegistry) -> Result<FeatureTensorSequence<f32>> {
    let decoded = read_stream(bytes, registry)?;
    let h = &decoded.stream.header;
    let shape = Shape::new(
        h.channels as usize,
        h.tile_height as usize,
        h.tile_width as usize,
    )?;
    let frames = decoded
        .iter()
        .map(|(ph, frame)| unpack(frame, &ph.mask, shape))
        .collect::<Result<Vec<_>>>()?;
    FeatureTensorSequence::new(frames)
}
