//! Deterministic synthetic feature corpora.
//!
//! Active channels carry smooth structure (a linear gradient plus a drifting
//! sinusoid, floored at a per-channel level the way a rectifier would leave
//! it) spanning exactly `signal_amplitude`; inactive channels carry
//! uniform noise spanning exactly `noise_amplitude`. Every channel sits on a
//! per-channel offset chosen so inactive channels stay inside the value span
//! of the active ones.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::FeatureScalar;
use crate::tensor::{FeatureTensor, FeatureTensorSequence, Shape};
use crate::truncation::Alpha;

/// A change of active channel set every `length` frames. Regime `i` covers
/// frames `[i·length, (i+1)·length)`; the last regime runs to the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Regimes {
    pub length: usize,
    pub active_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub channels: usize,
    pub active_count: usize,
    pub height: usize,
    pub width: usize,
    pub frame_count: usize,
    pub signal_amplitude: f64,
    pub noise_amplitude: f64,
    pub seed: u64,
    /// When set, replaces `active_count` frame range by frame range.
    pub regimes: Option<Regimes>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            channels: 320,
            active_count: 200,
            height: 32,
            width: 32,
            frame_count: 128,
            signal_amplitude: 4.0,
            noise_amplitude: 0.2,
            seed: 0,
            regimes: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ChannelParams {
    offset: f64,
    noise_offset: f64,
    grad_x: f64,
    grad_y: f64,
    freq_x: f64,
    freq_y: f64,
    phase: f64,
    drift: f64,
    /// Fraction of the pattern span clipped to a flat floor.
    floor: f64,
}

impl SynthSpec {
    /// Checks shape and that every regime's inactive channels fall strictly
    /// below the cutoff for `alpha`:
    /// `noise < alpha · (A·signal + (C−A)·noise) / C`.
    pub fn validate(&self, alpha: Alpha) -> Result<()> {
        Shape::new(self.channels, self.height, self.width)?;
        if self.frame_count == 0 {
            return Err(Error::EmptySequence);
        }
        let (s, n) = (self.signal_amplitude, self.noise_amplitude);
        if !(s.is_finite() && n.is_finite() && n >= 0.0 && s > n) {
            return Err(Error::InvalidParameter(format!(
                "need signal amplitude > noise amplitude ≥ 0, got {s} and {n}"
            )));
        }
        if let Some(r) = &self.regimes {
            if r.length == 0 || r.active_counts.is_empty() {
                return Err(Error::InvalidParameter(
                    "regimes need length ≥ 1 and ≥ 1 count".into(),
                ));
            }
        }
        let c = self.channels as f64;
        let (num, den) = (alpha.numer() as f64, alpha.denom() as f64);
        for &a in self.active_counts() {
            if a == 0 || a > self.channels {
                return Err(Error::InvalidParameter(format!(
                    "active count {a} outside 1..={}",
                    self.channels
                )));
            }
            let mean = (a as f64 * s + (self.channels - a) as f64 * n) / c;
            if a < self.channels
                && (n * den).partial_cmp(&(num * mean)) != Some(std::cmp::Ordering::Less)
            {
                return Err(Error::InvalidParameter(format!(
                    "noise amplitude {n} is not below the cutoff {} for {a} active channels",
                    num * mean / den
                )));
            }
        }
        Ok(())
    }

    fn active_counts(&self) -> &[usize] {
        match &self.regimes {
            Some(r) => &r.active_counts,
            None => std::slice::from_ref(&self.active_count),
        }
    }

    pub fn regime_of(&self, frame: usize) -> usize {
        match &self.regimes {
            Some(r) => (frame / r.length).min(r.active_counts.len() - 1),
            None => 0,
        }
    }

    /// Active flags of `frame`.
    pub fn active_set(&self, frame: usize) -> Vec<bool> {
        let regime = self.regime_of(frame);
        let count = self.active_counts()[regime];
        let mut idx: Vec<usize> = (0..self.channels).collect();
        idx.shuffle(&mut rng(self.seed, 1, regime as u64));
        let mut bits = vec![false; self.channels];
        for &i in &idx[..count] {
            bits[i] = true;
        }
        bits
    }

    /// The intended per-channel range of `frame`.
    pub fn amplitude_table(&self, frame: usize) -> Vec<f64> {
        self.active_set(frame)
            .into_iter()
            .map(|a| {
                if a {
                    self.signal_amplitude
                } else {
                    self.noise_amplitude
                }
            })
            .collect()
    }

    fn channel_params(&self) -> Vec<ChannelParams> {
        let mut r = rng(self.seed, 2, 0);
        let s = self.signal_amplitude;
        (0..self.channels)
            .map(|_| ChannelParams {
                offset: r.random_range(-0.25..0.25) * s,
                noise_offset: r.random_range(-0.1..0.1) * s,
                grad_x: r.random_range(-1.0..1.0),
                grad_y: r.random_range(-1.0..1.0),
                freq_x: r.random_range(0.25..1.5),
                freq_y: r.random_range(0.25..1.5),
                phase: r.random_range(0.0..TAU),
                drift: r.random_range(-0.05..0.05),
                floor: r.random_range(0.4..0.85),
            })
            .collect()
    }

    pub fn generate<T: FeatureScalar>(&self) -> Result<FeatureTensorSequence<T>> {
        self.validate(Alpha::DEFAULT)?;
        self.generate_unchecked()
    }

    /// Generates without the cutoff check, for corpora meant to straddle it.
    pub fn generate_unchecked<T: FeatureScalar>(&self) -> Result<FeatureTensorSequence<T>> {
        let shape = Shape::new(self.channels, self.height, self.width)?;
        let params = self.channel_params();
        let mut active = self.active_set(0);
        let mut regime = 0;
        let mut frames = Vec::with_capacity(self.frame_count);
        let mut pattern = vec![0.0f64; shape.plane()];
        for f in 0..self.frame_count {
            if self.regime_of(f) != regime {
                regime = self.regime_of(f);
                active = self.active_set(f);
            }
            let mut noise = rng(self.seed, 3, f as u64);
            let mut data = Vec::with_capacity(shape.len());
            for (c, p) in params.iter().enumerate() {
                let (center, amp) = if active[c] {
                    for y in 0..self.height {
                        for x in 0..self.width {
                            let (u, v) =
                                (x as f64 / self.width as f64, y as f64 / self.height as f64);
                            let wave = (TAU * (p.freq_x * u + p.freq_y * v)
                                + p.phase
                                + TAU * p.drift * f as f64)
                                .sin();
                            pattern[y * self.width + x] = p.grad_x * u + p.grad_y * v + wave;
                        }
                    }
                    // floor a fraction of the span so the channel keeps its range
                    let (lo, hi) = min_max(&pattern);
                    let floor = lo + p.floor * (hi - lo);
                    pattern.iter_mut().for_each(|v| *v = v.max(floor));
                    (p.offset, self.signal_amplitude)
                } else {
                    for v in pattern.iter_mut() {
                        *v = noise.random::<f64>();
                    }
                    (p.noise_offset, self.noise_amplitude)
                };
                push_rescaled(&mut data, &pattern, center, amp);
            }
            frames.push(FeatureTensor::new(shape, data)?);
        }
        FeatureTensorSequence::new(frames)
    }
}

/// Affinely maps `pattern` onto `[center − amp/2, center + amp/2]`.
fn push_rescaled<T: FeatureScalar>(out: &mut Vec<T>, pattern: &[f64], center: f64, amp: f64) {
    let (lo, hi) = min_max(pattern);
    let base = center - amp / 2.0;
    if hi > lo {
        let k = amp / (hi - lo);
        out.extend(
            pattern
                .iter()
                .map(|&v| T::from_f64_rounded(base + (v - lo) * k)),
        );
    } else {
        out.extend(pattern.iter().map(|_| T::from_f64_rounded(center)));
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        })
}

fn rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag << 48 | index);
    r
}
