//! Recursive statistic kernels: the reflected CuSum recursion, its batch
//! definition, first-passage times, and the Shiryaev-Roberts companion.
//!
//! Statistics accumulate in plain `f64`. Horizons up to about 10^7 steps
//! are fine; beyond that no compensated summation is attempted.

use serde::{Deserialize, Serialize};

use crate::distributions::{kl_divergence, DensityModel, LogRatio};
use crate::error::{QcdError, Result};

/// Sample count used by [`drift`] when a KL term has no closed form.
pub const DRIFT_MONTE_CARLO_SAMPLES: usize = 100_000;

/// Outcome of running a statistic or detector up to a horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Passage {
    /// First time the stopping condition held (1-based).
    Stopped(u64),
    /// The horizon was reached without stopping.
    Censored,
}

impl Passage {
    pub fn time(self) -> Option<u64> {
        match self {
            Passage::Stopped(t) => Some(t),
            Passage::Censored => None,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, Passage::Censored)
    }
}

/// CuSum statistic reflected at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CusumStat {
    value: f64,
}

impl CusumStat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// `value <- max(0, value + increment)`.
    #[inline]
    pub fn update(&mut self, increment: f64) -> Result<f64> {
        if !increment.is_finite() {
            return Err(QcdError::NonFiniteIncrement(increment));
        }
        self.value = (self.value + increment).max(0.0);
        Ok(self.value)
    }

    pub fn reset(&mut self) {
        self.value = 0.0;
    }
}

/// Batch CuSum: the maximum over start indices `k` of the suffix sum
/// `increments[k..]`. Unlike the recursion this is not floored at zero: an
/// all-negative sequence returns its largest suffix sum, which is the last
/// element.
pub fn cusum_batch(increments: &[f64]) -> Result<f64> {
    if increments.is_empty() {
        return Err(QcdError::EmptySequence);
    }
    let mut suffix = 0.0;
    let mut best = f64::NEG_INFINITY;
    for &inc in increments.iter().rev() {
        if !inc.is_finite() {
            return Err(QcdError::NonFiniteIncrement(inc));
        }
        suffix += inc;
        best = f64::max(best, suffix);
    }
    Ok(best)
}

/// First `t <= horizon` at which the reflected CuSum of `increments`
/// reaches `threshold` (inclusive).
pub fn first_passage_increments<I>(increments: I, threshold: f64, horizon: u64) -> Result<Passage>
where
    I: IntoIterator<Item = f64>,
{
    check_threshold(threshold)?;
    if horizon == 0 {
        return Err(QcdError::ZeroHorizon);
    }
    let mut stat = CusumStat::new();
    for (t, inc) in (1..=horizon).zip(increments) {
        if stat.update(inc)? >= threshold {
            return Ok(Passage::Stopped(t));
        }
    }
    Ok(Passage::Censored)
}

/// First passage of `CuSum_{numerator, denominator}` over `threshold`
/// on an observation stream.
pub fn first_passage<I>(
    numerator: &DensityModel,
    denominator: &DensityModel,
    threshold: f64,
    stream: I,
    horizon: u64,
) -> Result<Passage>
where
    I: IntoIterator<Item = f64>,
{
    let ratio = LogRatio::new(numerator, denominator);
    check_threshold(threshold)?;
    if horizon == 0 {
        return Err(QcdError::ZeroHorizon);
    }
    let mut stat = CusumStat::new();
    for (t, x) in (1..=horizon).zip(stream) {
        if stat.update(ratio.eval(x)?)? >= threshold {
            return Ok(Passage::Stopped(t));
        }
    }
    Ok(Passage::Censored)
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if threshold.is_finite() && threshold > 0.0 {
        Ok(())
    } else {
        Err(QcdError::InvalidThreshold(threshold))
    }
}

/// Shiryaev-Roberts statistic `R[t] = (1 + R[t-1]) L[t]`, `R[0] = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SrStat {
    value: f64,
    t: u64,
}

impl SrStat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    #[inline]
    pub fn update(&mut self, likelihood_ratio: f64) -> Result<f64> {
        if !(likelihood_ratio.is_finite() && likelihood_ratio >= 0.0) {
            return Err(QcdError::InvalidRatio(likelihood_ratio));
        }
        self.value = (1.0 + self.value) * likelihood_ratio;
        self.t += 1;
        Ok(self.value)
    }
}

/// Expected log-likelihood ratio `E_under[log(numerator / denominator)]`,
/// computed as `-D(under || numerator) + D(under || denominator)`.
pub fn drift(numerator: &DensityModel, denominator: &DensityModel, under: &DensityModel) -> Result<f64> {
    let to_num = kl_divergence(under, numerator, Some(DRIFT_MONTE_CARLO_SAMPLES))?;
    let to_den = kl_divergence(under, denominator, Some(DRIFT_MONTE_CARLO_SAMPLES))?;
    Ok(to_den.value - to_num.value)
}
