//! Feature tensors, tensor sequences and per-channel statistics.

use crate::error::{Error, Result};
use crate::scalar::FeatureScalar;

/// Dimensions of a C×H×W tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn new(channels: usize, height: usize, width: usize) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "dimensions must be ≥ 1, got {channels}×{height}×{width}"
            )));
        }
        Ok(Shape {
            channels,
            height,
            width,
        })
    }

    /// Samples in one channel plane.
    #[inline]
    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.channels * self.plane()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A C×H×W feature tensor stored channel-major then row-major.
///
/// All values are finite; this is checked on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor<T = f32> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: FeatureScalar> FeatureTensor<T> {
    pub fn new(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Shape(format!(
                "data length {} does not match {}×{}×{} = {}",
                data.len(),
                shape.channels,
                shape.height,
                shape.width,
                shape.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at element {i}"
            )));
        }
        Ok(FeatureTensor { shape, data })
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.len());
        for c in 0..shape.channels {
            for y in 0..shape.height {
                for x in 0..shape.width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(shape, data)
    }

    pub fn filled(shape: Shape, value: T) -> Result<Self> {
        Self::new(shape, vec![value; shape.len()])
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.shape.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.shape.width
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// The H·W samples of channel `c`.
    #[inline]
    pub fn channel(&self, c: usize) -> &[T] {
        let plane = self.shape.plane();
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn channel_iter(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.shape.plane())
    }

    /// Applies `f` to every value; the result must stay finite.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.shape, self.data.iter().map(|&v| f(v)).collect())
    }
}

/// Per-channel extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats<T = f32> {
    pub channel_index: usize,
    pub min: T,
    pub max: T,
    pub range: T,
}

/// Exact min, max and `max - min` of every channel, in channel order.
///
/// The subtraction is performed in `T` arithmetic so results do not depend
/// on the platform's extended precision.
pub fn channel_stats<T: FeatureScalar>(tensor: &FeatureTensor<T>) -> Vec<ChannelStats<T>> {
    tensor
        .channel_iter()
        .enumerate()
        .map(|(channel_index, plane)| {
            let (min, max) = plane.iter().fold((plane[0], plane[0]), |(lo, hi), &v| {
                (if v < lo { v } else { lo }, if v > hi { v } else { hi })
            });
            ChannelStats {
                channel_index,
                min,
                max,
                range: max - min,
            }
        })
        .collect()
}

/// Convenience: the `range` column of [`channel_stats`].
pub fn channel_ranges<T: FeatureScalar>(tensor: &FeatureTensor<T>) -> Vec<T> {
    channel_stats(tensor).into_iter().map(|s| s.range).collect()
}

/// A non-empty ordered run of dimension-identical tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensorSequence<T = f32> {
    frames: Vec<FeatureTensor<T>>,
}

impl<T: FeatureScalar> FeatureTensorSequence<T> {
    pub fn new(frames: Vec<FeatureTensor<T>>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySequence)?.shape();
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.shape() != first) {
            return Err(Error::Shape(format!(
                "frame {i} has shape {:?}, expected {:?}",
                f.shape(),
                first
            )));
        }
        Ok(FeatureTensorSequence { frames })
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.frames[0].shape()
    }

    #[inline]
    pub fn frames(&self) -> &[FeatureTensor<T>] {
        &self.frames
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; kept for API symmetry with `len`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<FeatureTensor<T>> {
        self.frames
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(c: usize, h: usize, w: usize, data: Vec<f32>) -> FeatureTensor<f32> {
        FeatureTensor::new(Shape::new(c, h, w).unwrap(), data).unwrap()
    }

    #[test]
    fn constant_channel_has_zero_range() {
        let s = channel_stats(&t(1, 2, 2, vec![5.0; 4]));
        assert_eq!(s[0].range, 0.0);
        assert_eq!(s[0].min, 5.0);
    }

    #[test]
    fn direct_definition() {
        let s = channel_stats(&t(2, 1, 3, vec![-1.0, 0.0, 3.0, 2.0, 2.0, 2.5]));
        assert_eq!((s[0].min, s[0].max, s[0].range), (-1.0, 3.0, 4.0));
        assert_eq!((s[1].min, s[1].max, s[1].range), (2.0, 2.5, 0.5));
        assert_eq!(s[1].channel_index, 1);
    }

    #[test]
    fn rejects_bad_construction() {
        let shape = Shape::new(1, 1, 2).unwrap();
        assert!(FeatureTensor::new(shape, vec![0.0f32]).is_err());
        assert!(FeatureTensor::new(shape, vec![0.0f32, f32::NAN]).is_err());
        assert!(FeatureTensor::new(shape, vec![f64::INFINITY, 0.0]).is_err());
        assert!(Shape::new(0, 1, 1).is_err());
        assert_eq!(
            FeatureTensorSequence::<f32>::new(vec![]).unwrap_err(),
            Error::EmptySequence
        );
    }

    #[test]
    fn sequence_requires_identical_shapes() {
        let a = t(1, 1, 1, vec![0.0]);
        let b = t(1, 1, 2, vec![0.0, 1.0]);
        assert!(FeatureTensorSequence::new(vec![a.clone(), b]).is_err());
        assert_eq!(
            FeatureTensorSequence::new(vec![a.clone(), a])
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn works_for_f64() {
        let x = FeatureTensor::new(Shape::new(1, 1, 2).unwrap(), vec![0.25f64, -0.5]).unwrap();
        assert_eq!(channel_ranges(&x), vec![0.75]);
    }
}
