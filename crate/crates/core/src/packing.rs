//! 10-bit quantization and tiling of active channels into a monochrome
//! frame, plus the inverse with mean-fill of truncated channels.

use crate::error::{Error, Result};
use crate::scalar::FeatureScalar;
use crate::tensor::{FeatureTensor, Shape};
use crate::truncation::ActiveChannelMask;

pub const SAMPLE_MAX: u16 = 1023;
/// Fill value of unused tiles and of every sample of a zero-range frame.
pub const MID_SAMPLE: u16 = 512;

/// Near-square grid of `tile_height × tile_width` tiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameLayout {
    pub rows: usize,
    pub cols: usize,
    pub tile_height: usize,
    pub tile_width: usize,
}

impl FrameLayout {
    #[inline]
    pub fn tiles(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn frame_height(&self) -> usize {
        self.rows * self.tile_height
    }

    #[inline]
    pub fn frame_width(&self) -> usize {
        self.cols * self.tile_width
    }

    #[inline]
    pub fn area(&self) -> usize {
        self.frame_height() * self.frame_width()
    }

    /// Frame-raster index of sample `(y, x)` inside tile `tile`.
    #[inline]
    fn sample_index(&self, tile: usize, y: usize, x: usize) -> usize {
        let (r, c) = (tile / self.cols, tile % self.cols);
        (r * self.tile_height + y) * self.frame_width() + c * self.tile_width + x
    }
}

/// `cols = ⌈√n⌉`, `rows = ⌈n / cols⌉`.
pub fn compute_layout(n_tiles: usize, tile_height: usize, tile_width: usize) -> FrameLayout {
    assert!(n_tiles >= 1, "layout needs at least one tile");
    let mut cols = (n_tiles as f64).sqrt() as usize;
    while cols * cols < n_tiles {
        cols += 1;
    }
    while cols > 1 && (cols - 1) * (cols - 1) >= n_tiles {
        cols -= 1;
    }
    FrameLayout {
        rows: n_tiles.div_ceil(cols),
        cols,
        tile_height,
        tile_width,
    }
}

/// Per-frame linear mapping between feature values and 10-bit samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams<T = f32> {
    pub global_min: T,
    pub global_max: T,
}

impl<T: FeatureScalar> ScaleParams<T> {
    pub fn new(global_min: T, global_max: T) -> Result<Self> {
        if !(global_min.is_finite() && global_max.is_finite() && global_min <= global_max) {
            return Err(Error::InvalidParameter(format!(
                "scale requires finite min ≤ max, got [{global_min}, {global_max}]"
            )));
        }
        Ok(ScaleParams {
            global_min,
            global_max,
        })
    }

    /// Largest reconstruction error of an in-range value: half a step.
    pub fn error_bound(&self) -> T {
        T::from_f64_rounded(
            (self.global_max.to_f64_exact() - self.global_min.to_f64_exact()) / 2046.0,
        )
    }
}

/// `round((v − min) / (max − min) · 1023)` clamped to `[0, 1023]`, rounding
/// half away from zero. A degenerate scale maps everything to 512.
pub fn quantize<T: FeatureScalar>(value: T, scale: ScaleParams<T>) -> u16 {
    let (lo, hi) = (
        scale.global_min.to_f64_exact(),
        scale.global_max.to_f64_exact(),
    );
    if hi == lo {
        return MID_SAMPLE;
    }
    let q = ((value.to_f64_exact() - lo) / (hi - lo) * SAMPLE_MAX as f64).round();
    q.clamp(0.0, SAMPLE_MAX as f64) as u16
}

/// `min + sample / 1023 · (max − min)`.
pub fn dequantize<T: FeatureScalar>(sample: u16, scale: ScaleParams<T>) -> T {
    let (lo, hi) = (
        scale.global_min.to_f64_exact(),
        scale.global_max.to_f64_exact(),
    );
    T::from_f64_rounded(lo + sample as f64 / SAMPLE_MAX as f64 * (hi - lo))
}

/// A tiled 10-bit monochrome frame together with its scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedFrame<T = f32> {
    pub layout: FrameLayout,
    pub samples: Vec<u16>,
    pub scale: ScaleParams<T>,
}

impl<T: FeatureScalar> PackedFrame<T> {
    pub fn new(layout: FrameLayout, samples: Vec<u16>, scale: ScaleParams<T>) -> Result<Self> {
        if samples.len() != layout.area() {
            return Err(Error::Shape(format!(
                "{} samples do not fill a {}×{} frame",
                samples.len(),
                layout.frame_height(),
                layout.frame_width()
            )));
        }
        if samples.iter().any(|&s| s > SAMPLE_MAX) {
            return Err(Error::InvalidParameter("sample exceeds 10 bits".into()));
        }
        Ok(PackedFrame {
            layout,
            samples,
            scale,
        })
    }

    /// The H·W samples of tile `tile`, row-major.
    pub fn tile(&self, tile: usize) -> Vec<u16> {
        let l = &self.layout;
        let mut out = Vec::with_capacity(l.tile_height * l.tile_width);
        for y in 0..l.tile_height {
            let start = l.sample_index(tile, y, 0);
            out.extend_from_slice(&self.samples[start..start + l.tile_width]);
        }
        out
    }
}

/// Packs with the tightest layout for `mask`.
pub fn pack<T: FeatureScalar>(
    tensor: &FeatureTensor<T>,
    mask: &ActiveChannelMask,
) -> Result<PackedFrame<T>> {
    let layout = compute_layout(mask.active_count(), tensor.height(), tensor.width());
    pack_into(tensor, mask, layout)
}

/// Places the active channels of `tensor` in ascending index order,
/// row-major over the tile grid of `layout`. The scale spans the active
/// channels only and unused tiles hold [`MID_SAMPLE`].
pub fn pack_into<T: FeatureScalar>(
    tensor: &FeatureTensor<T>,
    mask: &ActiveChannelMask,
    layout: FrameLayout,
) -> Result<PackedFrame<T>> {
    check_geometry(tensor.shape(), mask, &layout)?;

    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for c in mask.active_indices() {
        for &v in tensor.channel(c) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let scale = ScaleParams::new(lo, hi)?;

    let mut samples = vec![MID_SAMPLE; layout.area()];
    for (tile, c) in mask.active_indices().enumerate() {
        let plane = tensor.channel(c);
        for y in 0..layout.tile_height {
            let dst = layout.sample_index(tile, y, 0);
            let row = &plane[y * layout.tile_width..(y + 1) * layout.tile_width];
            for (d, &v) in samples[dst..dst + layout.tile_width].iter_mut().zip(row) {
                *d = quantize(v, scale);
            }
        }
    }
    Ok(PackedFrame {
        layout,
        samples,
        scale,
    })
}

fn check_geometry(shape: Shape, mask: &ActiveChannelMask, layout: &FrameLayout) -> Result<()> {
    if mask.len() != shape.channels {
        return Err(Error::Shape(format!(
            "mask covers {} channels, tensor has {}",
            mask.len(),
            shape.channels
        )));
    }
    if layout.tile_height != shape.height || layout.tile_width != shape.width {
        return Err(Error::Shape(format!(
            "tile {}×{} does not match channel {}×{}",
            layout.tile_height, layout.tile_width, shape.height, shape.width
        )));
    }
    if layout.tiles() < mask.active_count() {
        return Err(Error::Shape(format!(
            "{}×{} grid cannot hold {} active channels",
            layout.rows,
            layout.cols,
            mask.active_count()
        )));
    }
    Ok(())
}

/// Restores the full C×H×W tensor. Active channels are dequantized back to
/// their original indices; every inactive channel becomes a flat plane at the
/// mean of all decoded active samples.
pub fn unpack<T: FeatureScalar>(
    frame: &PackedFrame<T>,
    mask: &ActiveChannelMask,
    shape: Shape,
) -> Result<FeatureTensor<T>> {
    check_geometry(shape, mask, &frame.layout)?;
    if frame.samples.len() != frame.layout.area() {
        return Err(Error::Shape("sample count does not match layout".into()));
    }
    let layout = &frame.layout;
    let plane = shape.plane();
    let mut data = vec![T::zero(); shape.len()];

    let mut sum = 0.0f64;
    for (tile, c) in mask.active_indices().enumerate() {
        let out = &mut data[c * plane..(c + 1) * plane];
        for y in 0..layout.tile_height {
            let src = layout.sample_index(tile, y, 0);
            for x in 0..layout.tile_width {
                let v = dequantize(frame.samples[src + x], frame.scale);
                sum += v.to_f64_exact();
                out[y * layout.tile_width + x] = v;
            }
        }
    }

    if !mask.is_full() {
        // active_count ≥ 1, so the mean is always defined
        let mean = T::from_f64_rounded(sum / (mask.active_count() * plane) as f64);
        for c in (0..shape.channels).filter(|&c| !mask.is_active(c)) {
            data[c * plane..(c + 1) * plane].fill(mean);
        }
    }
    FeatureTensor::new(shape, data)
}
