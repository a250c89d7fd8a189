//! Scenario classification, threshold calibration, and the asymptotic
//! delay bounds used for overlays and sanity checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detectors::ensure_distinct;
use crate::distributions::{kl_divergence, DensityModel, KlEstimate};
use crate::error::{QcdError, Result};
use crate::statistics::DRIFT_MONTE_CARLO_SAMPLES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// `CuSum_{fB,f0}` does not drift upward under `fC`.
    #[serde(rename = "1")]
    S1,
    /// `CuSum_{fB,f0}` drifts up under `fC`, but `CuSum_{fB,fC}` does not under `f0`.
    #[serde(rename = "2")]
    S2,
    /// Both single CuSums drift up under a distribution they must ignore.
    #[serde(rename = "3")]
    S3,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::S1, Scenario::S2, Scenario::S3];

    pub fn number(self) -> u8 {
        match self {
            Scenario::S1 => 1,
            Scenario::S2 => 2,
            Scenario::S3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.number() == n)
    }

    /// The Gaussian preset for this scenario.
    pub fn preset(self) -> ModelTriple {
        let (c, b) = match self {
            Scenario::S1 => (-0.5, 0.5),
            Scenario::S2 => (0.7, 1.2),
            Scenario::S3 => (1.0, 0.5),
        };
        ModelTriple::new(gaussian(0.0), gaussian(c), gaussian(b)).expect("presets are distinct")
    }
}

fn gaussian(mean: f64) -> DensityModel {
    DensityModel::gaussian(mean, 1.0).expect("unit variance")
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for Scenario {
    type Err = QcdError;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<u8>()
            .ok()
            .and_then(Scenario::from_number)
            .ok_or_else(|| QcdError::Parse {
                input: s.to_string(),
                reason: "scenario must be 1, 2 or 3".into(),
            })
    }
}

/// Pre-change, confusing and bad densities, checked pairwise distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTriple {
    pub f0: DensityModel,
    pub fc: DensityModel,
    pub fb: DensityModel,
}

impl ModelTriple {
    pub fn new(f0: DensityModel, fc: DensityModel, fb: DensityModel) -> Result<Self> {
        ensure_distinct(&f0, &fc, &fb)?;
        Ok(Self { f0, fc, fb })
    }

    /// `min{D(fB||f0), D(fB||fC)}`.
    pub fn min_bad_kl(&self) -> Result<f64> {
        let d0 = kl(&self.fb, &self.f0)?.value;
        let dc = kl(&self.fb, &self.fc)?.value;
        Ok(d0.min(dc))
    }
}

fn kl(p: &DensityModel, q: &DensityModel) -> Result<KlEstimate> {
    kl_divergence(p, q, Some(DRIFT_MONTE_CARLO_SAMPLES))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub d_f0_fc: KlEstimate,
    pub d_f0_fb: KlEstimate,
    pub d_fc_f0: KlEstimate,
    pub d_fc_fb: KlEstimate,
    pub d_fb_f0: KlEstimate,
    pub d_fb_fc: KlEstimate,
    /// `E_fC[log(fB/f0)] = -D(fC||fB) + D(fC||f0)`.
    pub drift_w_under_fc: f64,
    /// `E_f0[log(fB/fC)] = -D(f0||fB) + D(f0||fC)`.
    pub drift_lam_under_f0: f64,
    pub scenario: Scenario,
}

/// Assigns a model triple to one of the three scenarios. A drift of exactly
/// zero counts as non-positive.
pub fn classify(f0: &DensityModel, fc: &DensityModel, fb: &DensityModel) -> Result<ScenarioReport> {
    ensure_distinct(f0, fc, fb)?;
    let d_f0_fc = kl(f0, fc)?;
    let d_f0_fb = kl(f0, fb)?;
    let d_fc_f0 = kl(fc, f0)?;
    let d_fc_fb = kl(fc, fb)?;
    let d_fb_f0 = kl(fb, f0)?;
    let d_fb_fc = kl(fb, fc)?;
    let drift_w_under_fc = d_fc_f0.value - d_fc_fb.value;
    let drift_lam_under_f0 = d_f0_fc.value - d_f0_fb.value;
    let scenario = if drift_w_under_fc <= 0.0 {
        Scenario::S1
    } else if drift_lam_under_f0 <= 0.0 {
        Scenario::S2
    } else {
        Scenario::S3
    };
    Ok(ScenarioReport {
        d_f0_fc,
        d_f0_fb,
        d_fc_f0,
        d_fc_fb,
        d_fb_f0,
        d_fb_fc,
        drift_w_under_fc,
        drift_lam_under_f0,
        scenario,
    })
}

/// Threshold pair `(b0, bC)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub b0: f64,
    pub bc: f64,
}

fn check_gamma(gamma: f64) -> Result<f64> {
    if gamma.is_finite() && gamma > 1.0 {
        Ok(gamma.ln())
    } else {
        Err(QcdError::InvalidGamma(gamma))
    }
}

/// `b0 = bC = ln(gamma)`, which places `s-cusum` and `j-cusum` in the
/// family with both run lengths to false alarm at least `gamma`.
pub fn calibrate_thresholds(gamma: f64) -> Result<Thresholds> {
    let b = check_gamma(gamma)?;
    Ok(Thresholds { b0: b, bc: b })
}

/// KL-proportional thresholds:
/// `b0 = ln(gamma) D(fB||f0) / m`, `bC = ln(gamma) D(fB||fC) / m` with
/// `m = min{D(fB||f0), D(fB||fC)}`. Equal KLs reduce to [`calibrate_thresholds`].
pub fn calibrate_thresholds_kl_proportional(gamma: f64, models: &ModelTriple) -> Result<Thresholds> {
    let b = check_gamma(gamma)?;
    let d0 = kl(&models.fb, &models.f0)?.value;
    let dc = kl(&models.fb, &models.fc)?.value;
    let m = d0.min(dc);
    Ok(Thresholds {
        b0: b * d0 / m,
        bc: b * dc / m,
    })
}

/// Leading-order (asymptotic) delay bounds; the `1 ± o(1)` factors are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub gamma: f64,
    /// Any procedure meeting both false-alarm constraints:
    /// `ln(gamma) / min{D(fB||f0), D(fB||fC)}`.
    pub universal_lower: f64,
    /// `ln(gamma)/D(fB||f0) + ln(gamma)/D(fB||fC)`.
    pub s_upper: f64,
    /// Same leading term as `s_upper`.
    pub j_upper: f64,
}

pub fn bounds(gamma: f64, models: &ModelTriple) -> Result<BoundSet> {
    let b = check_gamma(gamma)?;
    let d0 = kl(&models.fb, &models.f0)?.value;
    let dc = kl(&models.fb, &models.fc)?.value;
    let upper = b / d0 + b / dc;
    Ok(BoundSet {
        gamma,
        universal_lower: b / d0.min(dc),
        s_upper: upper,
        j_upper: upper,
    })
}
