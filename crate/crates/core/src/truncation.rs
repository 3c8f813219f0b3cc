//! Cutoff threshold, active/inactive channel classification and the
//! refresh-period lifecycle.
//!
//! A channel is inactive when its range (max − min) falls strictly below
//! `alpha · mean(range)`. The decision is taken on the first frame of each
//! refresh period and held for the rest of it. Later periods may never keep
//! more channels than period 0 did, since the packed frame size is fixed for
//! the lifetime of a stream.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::scalar::FeatureScalar;
use crate::tensor::{channel_ranges, FeatureTensor, FeatureTensorSequence};

pub const DEFAULT_REFRESH_PERIOD: usize = 128;

/// The cutoff factor, an exact rational strictly between 0 and 1.
///
/// The fraction is kept as written (not reduced) so that it round-trips
/// through the stream header unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alpha(Ratio<u16>);

impl Alpha {
    pub const DEFAULT: Alpha = Alpha(Ratio::new_raw(2, 3));

    pub fn new(numer: u16, denom: u16) -> Result<Self> {
        if numer == 0 || denom == 0 || numer >= denom {
            return Err(Error::InvalidParameter(format!(
                "alpha must satisfy 0 < alpha < 1, got {numer}/{denom}"
            )));
        }
        Ok(Alpha(Ratio::new_raw(numer, denom)))
    }

    #[inline]
    pub fn numer(&self) -> u16 {
        *self.0.numer()
    }

    #[inline]
    pub fn denom(&self) -> u16 {
        *self.0.denom()
    }

    pub fn as_ratio(&self) -> Ratio<u16> {
        self.0
    }
}

impl Default for Alpha {
    fn default() -> Self {
        Alpha::DEFAULT
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("alpha must be written N/D, got {s:?}"));
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        let n = n.trim().parse().map_err(|_| bad())?;
        let d = d.trim().parse().map_err(|_| bad())?;
        Alpha::new(n, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutoffConfig {
    pub alpha: Alpha,
    pub refresh_period: usize,
}

impl CutoffConfig {
    pub fn new(alpha: Alpha, refresh_period: usize) -> Result<Self> {
        if refresh_period == 0 {
            return Err(Error::InvalidParameter("refresh period must be ≥ 1".into()));
        }
        Ok(CutoffConfig {
            alpha,
            refresh_period,
        })
    }
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig {
            alpha: Alpha::DEFAULT,
            refresh_period: DEFAULT_REFRESH_PERIOD,
        }
    }
}

/// Which channels are transmitted. At least one channel is always active.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveChannelMask {
    bits: Vec<bool>,
    active_count: usize,
}

impl ActiveChannelMask {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        let active_count = bits.iter().filter(|&&b| b).count();
        if active_count == 0 {
            return Err(Error::InvalidParameter(
                "mask must keep at least one channel".into(),
            ));
        }
        Ok(ActiveChannelMask { bits, active_count })
    }

    pub fn all_active(channels: usize) -> Self {
        assert!(channels > 0);
        ActiveChannelMask {
            bits: vec![true; channels],
            active_count: channels,
        }
    }

    /// Decodes the LSB-first wire form: channel `i` lives at byte `i / 8`,
    /// bit `i % 8`. Padding bits past `channels` must be zero.
    pub fn from_bytes(bytes: &[u8], channels: usize) -> Result<Self> {
        if bytes.len() != channels.div_ceil(8) {
            return Err(Error::InvalidParameter(format!(
                "bitmask of {channels} channels needs {} bytes, got {}",
                channels.div_ceil(8),
                bytes.len()
            )));
        }
        let bits: Vec<bool> = (0..channels)
            .map(|i| bytes[i / 8] >> (i % 8) & 1 == 1)
            .collect();
        let used = channels % 8;
        if used != 0 && bytes[bytes.len() - 1] >> used != 0 {
            return Err(Error::InvalidParameter(
                "non-zero bitmask padding bits".into(),
            ));
        }
        Self::from_bits(bits)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            out[i / 8] |= 1 << (i % 8);
        }
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn active_count(&self) -> usize {
        self.active_count
    }

    #[inline]
    pub fn is_active(&self, channel: usize) -> bool {
        self.bits[channel]
    }

    pub fn is_full(&self) -> bool {
        self.active_count == self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Active channel indices in ascending order.
    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }
}

/// `alpha · mean(ranges)`, accumulated in 64 bits and rounded once to `T`.
pub fn compute_threshold<T: FeatureScalar>(ranges: &[T], alpha: Alpha) -> Result<T> {
    if ranges.is_empty() {
        return Err(Error::Empty("range list"));
    }
    let mut sum = 0.0f64;
    for r in ranges {
        if !(r.is_finite() && *r >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "channel range {r} is not ≥ 0"
            )));
        }
        sum += r.to_f64_exact();
    }
    let t = (alpha.numer() as f64 * sum) / (alpha.denom() as f64 * ranges.len() as f64);
    Ok(T::from_f64_rounded(t))
}

/// Marks channel `i` active iff `ranges[i] >= threshold`.
///
/// Fails only when no channel reaches the threshold, which cannot happen
/// for a threshold produced by [`compute_threshold`].
pub fn classify_channels<T: FeatureScalar>(
    ranges: &[T],
    threshold: T,
) -> Result<ActiveChannelMask> {
    ActiveChannelMask::from_bits(ranges.iter().map(|&r| r >= threshold).collect())
}

/// Keeps the `capacity` largest-range channels of `mask`, lowest index first
/// on ties.
fn clamp_to_capacity<T: FeatureScalar>(
    mask: &ActiveChannelMask,
    ranges: &[T],
    capacity: usize,
) -> Result<ActiveChannelMask> {
    let mut order: Vec<usize> = mask.active_indices().collect();
    order.sort_by(|&a, &b| {
        ranges[b]
            .partial_cmp(&ranges[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut bits = vec![false; mask.len()];
    for &i in order.iter().take(capacity) {
        bits[i] = true;
    }
    ActiveChannelMask::from_bits(bits)
}

/// The channel selection held for one refresh period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodPlan {
    pub period_index: usize,
    pub start: usize,
    pub length: usize,
    pub mask: ActiveChannelMask,
    pub truncation_enabled: bool,
}

impl PeriodPlan {
    /// A plan that transmits every channel.
    pub fn pass_through(period_index: usize, start: usize, length: usize, channels: usize) -> Self {
        PeriodPlan {
            period_index,
            start,
            length,
            mask: ActiveChannelMask::all_active(channels),
            truncation_enabled: false,
        }
    }

    pub fn frames(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.length
    }
}

/// Decides the mask of one period from its first frame.
///
/// `capacity` must be `None` for period 0 and the period-0 active count for
/// every later period.
pub fn plan_period<T: FeatureScalar>(
    period_index: usize,
    (start, length): (usize, usize),
    first_frame: &FeatureTensor<T>,
    config: &CutoffConfig,
    capacity: Option<usize>,
) -> Result<PeriodPlan> {
    let ranges = channel_ranges(first_frame);
    let threshold = compute_threshold(&ranges, config.alpha)?;
    let mut mask = classify_channels(&ranges, threshold)?;
    if let Some(cap) = capacity {
        if cap == 0 {
            return Err(Error::InvalidParameter("capacity must be ≥ 1".into()));
        }
        if mask.active_count() > cap {
            mask = clamp_to_capacity(&mask, &ranges, cap)?;
        }
    }
    let truncation_enabled = !mask.is_full();
    Ok(PeriodPlan {
        period_index,
        start,
        length,
        mask,
        truncation_enabled,
    })
}

/// Consecutive `(start, length)` intervals of `refresh_period` frames; the
/// last one may be shorter.
pub fn period_boundaries(frame_count: usize, refresh_period: usize) -> Vec<(usize, usize)> {
    assert!(refresh_period > 0, "refresh period must be ≥ 1");
    (0..frame_count)
        .step_by(refresh_period)
        .map(|start| (start, refresh_period.min(frame_count - start)))
        .collect()
}

/// Plans every period of a sequence. With `truncation` off every period is
/// a pass-through plan.
pub fn plan_sequence<T: FeatureScalar>(
    seq: &FeatureTensorSequence<T>,
    config: &CutoffConfig,
    truncation: bool,
) -> Result<Vec<PeriodPlan>> {
    let channels = seq.shape().channels;
    let mut plans: Vec<PeriodPlan> = Vec::new();
    for (i, bounds) in period_boundaries(seq.len(), config.refresh_period)
        .into_iter()
        .enumerate()
    {
        let plan = if truncation {
            let capacity = plans.first().map(|p| p.mask.active_count());
            plan_period(i, bounds, &seq.frames()[bounds.0], config, capacity)?
        } else {
            PeriodPlan::pass_through(i, bounds.0, bounds.1, channels)
        };
        plans.push(plan);
    }
    Ok(plans)
}
