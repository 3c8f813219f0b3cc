//! Rate accounting, distortion and Bjøntegaard-Delta rate.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::FeatureScalar;
use crate::tensor::FeatureTensorSequence;
use crate::truncation::PeriodPlan;

/// One operating point: bits spent and the task score reached with them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint<T = f64> {
    pub rate: T,
    pub accuracy: T,
}

/// At least four points with strictly increasing positive rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAccuracyCurve<T = f64> {
    points: Vec<RatePoint<T>>,
}

impl<T: Float> RateAccuracyCurve<T> {
    pub const MIN_POINTS: usize = 4;

    pub fn new(points: Vec<RatePoint<T>>) -> Result<Self> {
        if points.len() < Self::MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "a rate-accuracy curve needs at least {} points, got {}",
                Self::MIN_POINTS,
                points.len()
            )));
        }
        if points
            .iter()
            .any(|p| !p.rate.is_finite() || !p.accuracy.is_finite())
        {
            return Err(Error::InvalidParameter(
                "curve values must be finite".into(),
            ));
        }
        if points[0].rate <= T::zero() || points.windows(2).any(|w| w[1].rate <= w[0].rate) {
            return Err(Error::NonMonotoneRates);
        }
        Ok(RateAccuracyCurve { points })
    }

    pub fn from_pairs(pairs: &[(T, T)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(rate, accuracy)| RatePoint { rate, accuracy })
                .collect(),
        )
    }

    pub fn points(&self) -> &[RatePoint<T>] {
        &self.points
    }

    fn accuracy_span(&self) -> (T, T) {
        self.points
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
                (lo.min(p.accuracy), hi.max(p.accuracy))
            })
    }

    /// `rate,accuracy` header followed by one point per line.
    pub fn to_csv(&self) -> String
    where
        T: std::fmt::Display,
    {
        let mut s = String::from("rate,accuracy\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{}", p.rate, p.accuracy);
        }
        s
    }
}

impl<T: Float + std::str::FromStr> RateAccuracyCurve<T> {
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim().replace(' ', "") == "rate,accuracy" => {}
            Some((i, _)) => {
                return Err(Error::CurveSyntax {
                    line: i + 1,
                    reason: "expected header \"rate,accuracy\"".into(),
                })
            }
            None => {
                return Err(Error::CurveSyntax {
                    line: 1,
                    reason: "empty curve".into(),
                })
            }
        }
        let mut points = Vec::new();
        for (i, line) in lines {
            let bad = |reason: &str| Error::CurveSyntax {
                line: i + 1,
                reason: reason.into(),
            };
            let (r, a) = line
                .split_once(',')
                .ok_or_else(|| bad("expected two columns"))?;
            let rate = r.trim().parse().map_err(|_| bad("rate is not a number"))?;
            let accuracy = a
                .trim()
                .parse()
                .map_err(|_| bad("accuracy is not a number"))?;
            points.push(RatePoint { rate, accuracy });
        }
        Self::new(points)
    }
}

/// Least-squares cubic `c0 + c1·x + c2·x² + c3·x³` through `(x, y)`.
fn fit_cubic<T: Float>(xs: &[T], ys: &[T]) -> Result<[T; 4]> {
    // normal equations, solved by Gaussian elimination with partial pivoting
    let mut m = [[T::zero(); 5]; 4];
    for (&x, &y) in xs.iter().zip(ys) {
        let pw = [T::one(), x, x * x, x * x * x];
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] = m[r][c] + pw[r] * pw[c];
            }
            m[r][4] = m[r][4] + pw[r] * y;
        }
    }
    let scale = m
        .iter()
        .flat_map(|r| r[..4].iter())
        .fold(T::zero(), |a, &v| a.max(v.abs()));
    let tiny = scale * T::epsilon() * T::from(64.0).unwrap();
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs().partial_cmp(&tiny) != Some(Ordering::Greater) {
            return Err(Error::InvalidParameter(
                "cubic fit is singular (need four distinct accuracies)".into(),
            ));
        }
        m.swap(col, pivot);
        for r in col + 1..4 {
            let f = m[r][col] / m[col][col];
            let (top, bottom) = m.split_at_mut(r);
            for (x, &p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *x = *x - f * p;
            }
        }
    }
    let mut coef = [T::zero(); 4];
    for r in (0..4).rev() {
        let mut acc = m[r][4];
        for c in r + 1..4 {
            acc = acc - m[r][c] * coef[c];
        }
        coef[r] = acc / m[r][r];
    }
    Ok(coef)
}

/// Bjøntegaard-Delta rate of `test` against `anchor`, in percent.
///
/// Each curve's `log10(rate)` is fitted as a cubic in accuracy, the fits are
/// integrated exactly over the shared accuracy interval, and the mean log
/// difference is returned as `(10^avg − 1) · 100`. Negative means `test`
/// needs fewer bits for the same accuracy.
pub fn bd_rate<T: Float>(anchor: &RateAccuracyCurve<T>, test: &RateAccuracyCurve<T>) -> Result<T> {
    let (a_lo, a_hi) = anchor.accuracy_span();
    let (t_lo, t_hi) = test.accuracy_span();
    let (lo, hi) = (a_lo.max(t_lo), a_hi.min(t_hi));
    if hi.partial_cmp(&lo) != Some(Ordering::Greater) {
        return Err(Error::NoAccuracyOverlap);
    }
    // map the overlap onto [-1, 1] to keep the fit well conditioned
    let two = T::one() + T::one();
    let center = (lo + hi) / two;
    let half = (hi - lo) / two;
    let integral = |curve: &RateAccuracyCurve<T>| -> Result<T> {
        let xs: Vec<T> = curve
            .points
            .iter()
            .map(|p| (p.accuracy - center) / half)
            .collect();
        let ys: Vec<T> = curve.points.iter().map(|p| p.rate.log10()).collect();
        let c = fit_cubic(&xs, &ys)?;
        // ∫_{-1}^{1} c0 + c1 x + c2 x² + c3 x³ dx
        let three = two + T::one();
        Ok(two * c[0] + two * c[2] / three)
    };
    let avg = (integral(test)? - integral(anchor)?) / two;
    let hundred = T::from(100.0).unwrap();
    Ok((T::from(10.0).unwrap().powf(avg) - T::one()) * hundred)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bitrate {
    pub total_bits: u64,
    pub bits_per_frame: f64,
    pub bits_per_second: Option<f64>,
}

pub fn bitrate_of_stream(byte_len: usize, frame_count: usize, fps: Option<f64>) -> Result<Bitrate> {
    if frame_count == 0 {
        return Err(Error::EmptySequence);
    }
    if let Some(f) = fps {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "frames per second must be > 0, got {f}"
            )));
        }
    }
    let total_bits = 8 * byte_len as u64;
    let bits_per_frame = total_bits as f64 / frame_count as f64;
    Ok(Bitrate {
        total_bits,
        bits_per_frame,
        bits_per_second: fps.map(|f| bits_per_frame * f),
    })
}

/// Reconstruction error of a sequence, accumulated over all frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub per_channel_mse: Vec<f64>,
    pub overall_mse: f64,
    pub max_abs_error: f64,
    /// Channel `c` is flat when its reconstruction has zero range in every
    /// frame.
    pub flat: Vec<bool>,
}

pub fn distortion<T: FeatureScalar>(
    original: &FeatureTensorSequence<T>,
    reconstructed: &FeatureTensorSequence<T>,
) -> Result<DistortionReport> {
    if original.shape() != reconstructed.shape() || original.len() != reconstructed.len() {
        return Err(Error::Shape(
            "original and reconstruction differ in shape".into(),
        ));
    }
    let shape = original.shape();
    let mut sq = vec![0.0f64; shape.channels];
    let mut flat = vec![true; shape.channels];
    let mut max_abs_error = 0.0f64;
    for (o, r) in original.frames().iter().zip(reconstructed.frames()) {
        for c in 0..shape.channels {
            let rc = r.channel(c);
            for (&a, &b) in o.channel(c).iter().zip(rc) {
                let e = (a.to_f64_exact() - b.to_f64_exact()).abs();
                sq[c] += e * e;
                max_abs_error = max_abs_error.max(e);
            }
            flat[c] &= rc.iter().all(|&v| v == rc[0]);
        }
    }
    let per_channel_n = (shape.plane() * original.len()) as f64;
    let overall_mse = sq.iter().sum::<f64>() / (per_channel_n * shape.channels as f64);
    Ok(DistortionReport {
        per_channel_mse: sq.into_iter().map(|s| s / per_channel_n).collect(),
        overall_mse,
        max_abs_error,
        flat,
    })
}

/// MSE restricted to the channels each frame's period plan marks active.
pub fn masked_mse<T: FeatureScalar>(
    original: &FeatureTensorSequence<T>,
    reconstructed: &FeatureTensorSequence<T>,
    plans: &[PeriodPlan],
) -> Result<f64> {
    if original.shape() != reconstructed.shape() || original.len() != reconstructed.len() {
        return Err(Error::Shape(
            "original and reconstruction differ in shape".into(),
        ));
    }
    let (mut sum, mut n) = (0.0f64, 0usize);
    for plan in plans {
        if plan.start + plan.length > original.len() || plan.mask.len() != original.shape().channels
        {
            return Err(Error::Shape("plans do not match the sequence".into()));
        }
        for f in plan.frames() {
            let (o, r) = (&original.frames()[f], &reconstructed.frames()[f]);
            for c in plan.mask.active_indices() {
                for (&a, &b) in o.channel(c).iter().zip(r.channel(c)) {
                    let e = a.to_f64_exact() - b.to_f64_exact();
                    sum += e * e;
                    n += 1;
                }
            }
        }
    }
    if n == 0 {
        return Err(Error::Empty("no active samples covered by the plans"));
    }
    Ok(sum / n as f64)
}
