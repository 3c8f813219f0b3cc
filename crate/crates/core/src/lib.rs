//! Range-based channel truncation and frame packing for multi-channel
//! feature tensors.
//!
//! The encoder drops channels whose value range falls below a fraction of
//! the mean channel range, tiles the surviving channels into 10-bit
//! monochrome frames for an inner codec, and signals the per-period channel
//! mask in the `.fctb` bitstream. The decoder restores the original channel
//! count, filling truncated channels with the mean of the transmitted ones.
//!
//! Numeric code is generic over [`FeatureScalar`] (`f32` or `f64`); the file
//! formats and the stream pipeline work in `f32`. The aliases below name the
//! common instantiations.

mod bytes;

pub mod bitstream;
pub mod error;
pub mod fcmt;
pub mod metrics;
pub mod packing;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod tensor;
pub mod truncation;

pub use error::{Error, Result};
pub use scalar::FeatureScalar;
pub use tensor::{channel_stats, ChannelStats, FeatureTensor, FeatureTensorSequence, Shape};
pub use truncation::{ActiveChannelMask, Alpha, CutoffConfig, PeriodPlan};

pub type FeatureTensorF32 = tensor::FeatureTensor<f32>;
pub type FeatureTensorF64 = tensor::FeatureTensor<f64>;
pub type SequenceF32 = tensor::FeatureTensorSequence<f32>;
pub type SequenceF64 = tensor::FeatureTensorSequence<f64>;
pub type PackedFrameF32 = packing::PackedFrame<f32>;
pub type PackedFrameF64 = packing::PackedFrame<f64>;
pub type ScaleParamsF32 = packing::ScaleParams<f32>;
pub type CurveF64 = metrics::RateAccuracyCurve<f64>;
pub type CurveF32 = metrics::RateAccuracyCurve<f32>;
pub type ChannelStatsF32 = tensor::ChannelStats<f32>;
