//! Univariate density models for the pre-change (`f0`), confusing (`fC`)
//! and bad (`fB`) distributions.
//!
//! All logarithms are natural logs, so log-densities, log-likelihood
//! ratios and KL divergences are in nats.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{QcdError, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Maximum allowed deviation of a tabulated density's trapezoidal mass from 1.
pub const TABULATED_MASS_TOLERANCE: f64 = 1e-6;

/// Seed used when [`kl_divergence`] falls back to Monte Carlo.
const KL_MONTE_CARLO_SEED: u64 = 0x6b6c_6469_7665_7267;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensityKind {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// Piecewise-linear log-density on a strictly increasing grid.
    Tabulated {
        points: Vec<f64>,
        log_densities: Vec<f64>,
    },
}

/// A named univariate density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    kind: DensityKind,
    label: String,
}

impl DensityModel {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(QcdError::InvalidModel(format!(
                "gaussian mean {mean} is not finite"
            )));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(QcdError::InvalidModel(format!(
                "gaussian variance {variance} must be finite and positive"
            )));
        }
        Ok(Self {
            kind: DensityKind::Gaussian { mean, variance },
            label: format!("gaussian:{mean}:{variance}"),
        })
    }

    /// Builds a tabulated model from `(point, log-density)` pairs.
    ///
    /// The grid must be strictly increasing, every log-density finite, and
    /// the trapezoidal mass of `exp(log-density)` within
    /// [`TABULATED_MASS_TOLERANCE`] of one.
    pub fn tabulated(label: impl Into<String>, grid: &[(f64, f64)]) -> Result<Self> {
        let label = label.into();
        if grid.len() < 2 {
            return Err(QcdError::InvalidModel(format!(
                "tabulated model `{label}` needs at least two grid points"
            )));
        }
        let (points, log_densities): (Vec<f64>, Vec<f64>) = grid.iter().copied().unzip();
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QcdError::InvalidModel(format!(
                "tabulated model `{label}` grid must be finite and strictly increasing"
            )));
        }
        if log_densities.iter().any(|v| !v.is_finite()) {
            return Err(QcdError::InvalidModel(format!(
                "tabulated model `{label}` has non-finite log-densities"
            )));
        }
        let mass = trapezoid(&points, log_densities.iter().map(|l| l.exp()));
        if (mass - 1.0).abs() > TABULATED_MASS_TOLERANCE {
            return Err(QcdError::InvalidModel(format!(
                "tabulated model `{label}` integrates to {mass}, not 1"
            )));
        }
        Ok(Self {
            kind: DensityKind::Tabulated {
                points,
                log_densities,
            },
            label,
        })
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when both models describe the same density, regardless of label.
    pub fn same_density(&self, other: &DensityModel) -> bool {
        self.kind == other.kind
    }

    pub fn log_density(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(QcdError::NonFiniteObservation(x));
        }
        match &self.kind {
            DensityKind::Gaussian { mean, variance } => {
                let z = x - mean;
                Ok(-0.5 * (LN_2PI + variance.ln()) - z * z / (2.0 * variance))
            }
            DensityKind::Tabulated {
                points,
                log_densities,
            } => interpolate(points, log_densities, x),
        }
    }

    /// Draws one observation. Only Gaussian models can be sampled.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.kind {
            DensityKind::Gaussian { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                Ok(mean + variance.sqrt() * z)
            }
            DensityKind::Tabulated { .. } => Err(QcdError::SamplingUnsupported(self.label.clone())),
        }
    }
}

impl fmt::Display for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Parses `gaussian:<mean>:<variance>`.
impl FromStr for DensityModel {
    type Err = QcdError;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |reason: &str| QcdError::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let mut parts = s.trim().split(':');
        match parts.next().map(str::to_ascii_lowercase).as_deref() {
            Some("gaussian") => {}
            _ => return Err(parse_err("expected `gaussian:<mean>:<variance>`")),
        }
        let mean: f64 = parts
            .next()
            .ok_or_else(|| parse_err("missing mean"))?
            .trim()
            .parse()
            .map_err(|_| parse_err("mean is not a number"))?;
        let variance: f64 = parts
            .next()
            .ok_or_else(|| parse_err("missing variance"))?
            .trim()
            .parse()
            .map_err(|_| parse_err("variance is not a number"))?;
        if parts.next().is_some() {
            return Err(parse_err("too many fields"));
        }
        DensityModel::gaussian(mean, variance).map_err(|e| parse_err(&e.to_string()))
    }
}

fn interpolate(points: &[f64], values: &[f64], x: f64) -> Result<f64> {
    let (lo, hi) = (points[0], points[points.len() - 1]);
    if x < lo || x > hi {
        return Err(QcdError::OutOfRange { x, lo, hi });
    }
    let idx = points.partition_point(|&p| p <= x);
    if idx == points.len() {
        return Ok(values[values.len() - 1]);
    }
    let (x0, x1) = (points[idx - 1], points[idx]);
    let w = (x - x0) / (x1 - x0);
    Ok(values[idx - 1] * (1.0 - w) + values[idx] * w)
}

fn trapezoid(points: &[f64], values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    points
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `log num(x) - log den(x)`.
pub fn log_likelihood_ratio(num: &DensityModel, den: &DensityModel, x: f64) -> Result<f64> {
    Ok(num.log_density(x)? - den.log_density(x)?)
}

/// A log-likelihood ratio prepared for repeated evaluation.
///
/// Gaussian pairs collapse to a quadratic `a x^2 + b x + c`; any other pair
/// evaluates both log-densities per call.
#[derive(Debug, Clone)]
pub enum LogRatio {
    Quadratic { a: f64, b: f64, c: f64 },
    Generic { num: DensityModel, den: DensityModel },
}

impl LogRatio {
    pub fn new(num: &DensityModel, den: &DensityModel) -> Self {
        match (&num.kind, &den.kind) {
            (
                DensityKind::Gaussian {
                    mean: m1,
                    variance: v1,
                },
                DensityKind::Gaussian {
                    mean: m2,
                    variance: v2,
                },
            ) => LogRatio::Quadratic {
                a: 0.5 / v2 - 0.5 / v1,
                b: m1 / v1 - m2 / v2,
                c: -0.5 * (v1 / v2).ln() - m1 * m1 / (2.0 * v1) + m2 * m2 / (2.0 * v2),
            },
            _ => LogRatio::Generic {
                num: num.clone(),
                den: den.clone(),
            },
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            LogRatio::Quadratic { a, b, c } => {
                if !x.is_finite() {
                    return Err(QcdError::NonFiniteObservation(x));
                }
                Ok((a * x + b) * x + c)
            }
            LogRatio::Generic { num, den } => log_likelihood_ratio(num, den, x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlMethod {
    ClosedForm,
    MonteCarlo { samples: usize },
    Quadrature { points: usize },
}

/// A KL divergence in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    pub value: f64,
    /// Zero for closed-form values.
    pub std_error: f64,
    pub method: KlMethod,
}

/// `D(p || q)`.
///
/// Gaussian pairs use the closed form. A tabulated `p` is integrated by the
/// trapezoidal rule on its own grid. A Gaussian `p` against a tabulated `q`
/// needs `samples` and is estimated by Monte Carlo with a fixed seed.
pub fn kl_divergence(p: &DensityModel, q: &DensityModel, samples: Option<usize>) -> Result<KlEstimate> {
    if p.same_density(q) {
        return Ok(KlEstimate {
            value: 0.0,
            std_error: 0.0,
            method: KlMethod::ClosedForm,
        });
    }
    match (&p.kind, &q.kind) {
        (
            DensityKind::Gaussian {
                mean: mp,
                variance: vp,
            },
            DensityKind::Gaussian {
                mean: mq,
                variance: vq,
            },
        ) => {
            let d = mp - mq;
            let value = if vp == vq {
                d * d / (2.0 * vp)
            } else {
                0.5 * ((vq / vp).ln() + (vp + d * d) / vq - 1.0)
            };
            Ok(KlEstimate {
                value: value.max(0.0),
                std_error: 0.0,
                method: KlMethod::ClosedForm,
            })
        }
        (
            DensityKind::Tabulated {
                points,
                log_densities,
            },
            _,
        ) => {
            let mut integrand = Vec::with_capacity(points.len());
            for (&x, &lp) in points.iter().zip(log_densities) {
                integrand.push(lp.exp() * (lp - q.log_density(x)?));
            }
            Ok(KlEstimate {
                value: trapezoid(points, integrand).max(0.0),
                std_error: 0.0,
                method: KlMethod::Quadrature { points: points.len() },
            })
        }
        _ => {
            let n = samples.ok_or_else(|| QcdError::SamplesRequired {
                p: p.label.clone(),
                q: q.label.clone(),
            })?;
            let mut rng = ChaCha8Rng::seed_from_u64(KL_MONTE_CARLO_SEED);
            kl_monte_carlo(p, q, n, &mut rng)
        }
    }
}

/// Monte Carlo estimate of `D(p || q)` from `samples` draws of `p`.
pub fn kl_monte_carlo<R: Rng + ?Sized>(
    p: &DensityModel,
    q: &DensityModel,
    samples: usize,
    rng: &mut R,
) -> Result<KlEstimate> {
    if samples < 2 {
        return Err(QcdError::InvalidModel(
            "Monte Carlo KL needs at least two samples".into(),
        ));
    }
    let ratio = LogRatio::new(p, q);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..samples {
        let x = p.sample(rng)?;
        let v = ratio.eval(x)?;
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(KlEstimate {
        value: mean.max(0.0),
        std_error: (var / samples as f64).sqrt(),
        method: KlMethod::MonteCarlo { samples },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(m: f64, v: f64) -> DensityModel {
        DensityModel::gaussian(m, v).unwrap()
    }

    /// Composite Simpson rule on [lo, hi] with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn standard_normal_log_density_at_zero() {
        let m = g(0.0, 1.0);
        let v = m.log_density(0.0).unwrap();
        assert!((v - (-0.918_938_5)).abs() < 1e-7);
        let mass = simpson(|x| m.log_density(x).unwrap().exp(), -12.0, 12.0, 4000);
        assert!((mass - 1.0).abs() < 1e-9);
        assert_eq!(v, m.log_density(0.0).unwrap());
        assert_eq!(g(0.5, 1.0).log_density(0.5).unwrap(), v);
    }

    #[test]
    fn llr_examples() {
        let fb = g(0.5, 1.0);
        let f0 = g(0.0, 1.0);
        let fc = g(1.0, 1.0);
        let direct = fb.log_density(1.0).unwrap() - f0.log_density(1.0).unwrap();
        assert!((log_likelihood_ratio(&fb, &f0, 1.0).unwrap() - 0.375).abs() < 1e-12);
        assert!((direct - (0.5 * 1.0 - 0.125)).abs() < 1e-12);
        assert!((log_likelihood_ratio(&fb, &fc, 0.0).unwrap() - 0.375).abs() < 1e-12);
        assert_eq!(log_likelihood_ratio(&fb, &fb, 3.3).unwrap(), 0.0);
    }

    #[test]
    fn log_ratio_quadratic_matches_direct_subtraction() {
        let pairs = [
            (g(0.5, 1.0), g(0.0, 1.0)),
            (g(-1.0, 2.0), g(0.3, 0.5)),
            (g(2.0, 0.25), g(2.0, 4.0)),
        ];
        for (num, den) in &pairs {
            let r = LogRatio::new(num, den);
            assert!(matches!(r, LogRatio::Quadratic { .. }));
            for i in -40..=40 {
                let x = i as f64 * 0.17;
                let direct = num.log_density(x).unwrap() - den.log_density(x).unwrap();
                assert!((r.eval(x).unwrap() - direct).abs() < 1e-10, "x = {x}");
            }
        }
    }

    #[test]
    fn closed_form_kl_matches_quadrature() {
        let cases = [
            (g(0.0, 1.0), g(1.0, 1.0), Some(0.5)),
            (g(0.5, 1.0), g(0.0, 1.0), Some(0.125)),
            (g(0.3, 2.0), g(-0.4, 0.7), None),
        ];
        for (p, q, expected) in &cases {
            let kl = kl_divergence(p, q, None).unwrap();
            assert_eq!(kl.method, KlMethod::ClosedForm);
            let quad = simpson(
                |x| {
                    let lp = p.log_density(x).unwrap();
                    lp.exp() * (lp - q.log_density(x).unwrap())
                },
                -20.0,
                20.0,
                20_000,
            );
            assert!((kl.value - quad).abs() < 1e-8, "{p} {q}: {} vs {quad}", kl.value);
            if let Some(e) = expected {
                assert!((kl.value - e).abs() < 1e-12);
            }
        }
        assert_eq!(
            kl_divergence(&g(0.2, 1.0), &g(0.2, 1.0), None).unwrap().value,
            0.0
        );
    }

    #[test]
    fn kl_zero_iff_equal_on_mean_grid() {
        let means: Vec<f64> = (0..=8).map(|i| -2.0 + 0.5 * i as f64).collect();
        for &a in &means {
            for &b in &means {
                let kl = kl_divergence(&g(a, 1.0), &g(b, 1.0), None).unwrap().value;
                assert!(kl >= 0.0);
                assert_eq!(kl == 0.0, a == b);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_location_shifted() {
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = g(0.0, 1.0).sample(&mut r1).unwrap();
        let b = g(5.0, 1.0).sample(&mut r2).unwrap();
        assert_eq!(b, 5.0 + a);
        let mut r3 = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(g(0.0, 1.0).sample(&mut r3).unwrap(), a);
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let m = g(0.0, 1.0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| m.sample(&mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "{mean}");
    }

    fn tabulated_standard_normal() -> DensityModel {
        let grid: Vec<(f64, f64)> = (0..=16_000)
            .map(|i| {
                let x = -8.0 + i as f64 * 0.001;
                (x, -0.5 * LN_2PI - 0.5 * x * x)
            })
            .collect();
        DensityModel::tabulated("tab-normal", &grid).unwrap()
    }

    #[test]
    fn tabulated_model_behaviour() {
        let tab = tabulated_standard_normal();
        assert!((tab.log_density(0.0).unwrap() + 0.918_938_5).abs() < 1e-7);
        assert!((tab.log_density(8.0).unwrap() - (-0.5 * LN_2PI - 32.0)).abs() < 1e-9);
        assert!(matches!(tab.log_density(9.0), Err(QcdError::OutOfRange { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            tab.sample(&mut rng),
            Err(QcdError::SamplingUnsupported(_))
        ));

        let kl = kl_divergence(&tab, &g(1.0, 1.0), None).unwrap();
        assert!(matches!(kl.method, KlMethod::Quadrature { .. }));
        assert!((kl.value - 0.5).abs() < 1e-5, "{}", kl.value);

        assert!(matches!(
            kl_divergence(&g(0.0, 1.0), &tab, None),
            Err(QcdError::SamplesRequired { .. })
        ));
    }

    #[test]
    fn tabulated_rejects_bad_grids() {
        assert!(DensityModel::tabulated("x", &[(0.0, 0.0)]).is_err());
        assert!(DensityModel::tabulated("x", &[(0.0, 0.0), (1.0, 0.0)]).is_ok());
        assert!(DensityModel::tabulated("x", &[(0.0, 0.0), (2.0, 0.0)]).is_err());
        assert!(DensityModel::tabulated("x", &[(1.0, 0.0), (0.0, 0.0)]).is_err());
        assert!(DensityModel::tabulated("x", &[(0.0, f64::NAN), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn parse_spec_strings() {
        let m: DensityModel = "gaussian:0.5:1".parse().unwrap();
        assert!(m.same_density(&g(0.5, 1.0)));
        assert_eq!(m.to_string(), "gaussian:0.5:1");
        for bad in [
            "gaussian:0",
            "normal:0:1",
            "gaussian:a:1",
            "gaussian:0:0",
            "gaussian:0:1:2",
        ] {
            assert!(bad.parse::<DensityModel>().is_err(), "{bad}");
        }
        assert!(DensityModel::gaussian(0.0, -1.0).is_err());
    }
}
