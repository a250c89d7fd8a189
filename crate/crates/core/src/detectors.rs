//! Streaming detectors. Each consumes one observation per step and reports
//! the alarm time once its stopping condition holds.
//!
//! * `cusum-w`: plain CuSum of `W[t] = log(fB/f0)` against `b0`.
//! * `cusum-lambda`: plain CuSum of `Λ[t] = log(fB/fC)` against `bC`.
//! * `s-cusum`: runs `CuSum_W` until it reaches `b0`, freezes it, then runs
//!   a CuSum of `Λ` from zero on the following observations and alarms once
//!   that reaches `bC`.
//! * `j-cusum`: runs both statistics at once, each frozen at its threshold.
//!   The `Λ` statistic is reset to zero whenever `CuSum_W` returns to zero,
//!   and the alarm fires at the first step where both are at or above their
//!   thresholds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{DensityModel, LogRatio};
use crate::error::{QcdError, Result};
use crate::statistics::{check_threshold, CusumStat, Passage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "cusum-w")]
    BaselineW,
    #[serde(rename = "cusum-lambda")]
    BaselineLambda,
    #[serde(rename = "s-cusum")]
    SCusum,
    #[serde(rename = "j-cusum")]
    JCusum,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::BaselineW,
        DetectorKind::BaselineLambda,
        DetectorKind::SCusum,
        DetectorKind::JCusum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::BaselineW => "cusum-w",
            DetectorKind::BaselineLambda => "cusum-lambda",
            DetectorKind::SCusum => "s-cusum",
            DetectorKind::JCusum => "j-cusum",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = QcdError;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| QcdError::Parse {
                input: s.to_string(),
                reason: "expected one of cusum-w, cusum-lambda, s-cusum, j-cusum".into(),
            })
    }
}

/// Models and thresholds of one detector. Baselines only consult the
/// threshold of their own statistic (`b0` for `cusum-w`, `bC` for
/// `cusum-lambda`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    kind: DetectorKind,
    f0: DensityModel,
    fc: DensityModel,
    fb: DensityModel,
    b0: f64,
    bc: f64,
}

impl DetectorConfig {
    pub fn new(
        kind: DetectorKind,
        f0: DensityModel,
        fc: DensityModel,
        fb: DensityModel,
        b0: f64,
        bc: f64,
    ) -> Result<Self> {
        ensure_distinct(&f0, &fc, &fb)?;
        check_threshold(b0)?;
        check_threshold(bc)?;
        Ok(Self {
            kind,
            f0,
            fc,
            fb,
            b0,
            bc,
        })
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn f0(&self) -> &DensityModel {
        &self.f0
    }

    pub fn fc(&self) -> &DensityModel {
        &self.fc
    }

    pub fn fb(&self) -> &DensityModel {
        &self.fb
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn bc(&self) -> f64 {
        self.bc
    }
}

pub(crate) fn ensure_distinct(f0: &DensityModel, fc: &DensityModel, fb: &DensityModel) -> Result<()> {
    for (a, b) in [(f0, fc), (f0, fb), (fc, fb)] {
        if a.same_density(b) {
            return Err(QcdError::IdenticalModels(a.to_string(), b.to_string()));
        }
    }
    Ok(())
}

/// Running statistics of a detector.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DetectorState {
    t: u64,
    w_stat: CusumStat,
    lam_stat: CusumStat,
    w_frozen: bool,
    lam_frozen: bool,
    alarm_time: Option<u64>,
}

impl DetectorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// `CuSum_W`, or the single statistic of `cusum-w`.
    pub fn w_stat(&self) -> f64 {
        self.w_stat.value()
    }

    /// The `Λ` statistic of `s-cusum`/`j-cusum`, or the single statistic of
    /// `cusum-lambda`.
    pub fn lam_stat(&self) -> f64 {
        self.lam_stat.value()
    }

    pub fn w_frozen(&self) -> bool {
        self.w_frozen
    }

    pub fn lam_frozen(&self) -> bool {
        self.lam_frozen
    }

    pub fn alarm_time(&self) -> Option<u64> {
        self.alarm_time
    }

    /// Advances one step with increments supplied lazily: `w` yields `W[t]`
    /// and `lam` yields `Λ[t]`, and each is only called if the detector
    /// updates that statistic on this step. Returns the alarm time when the
    /// stopping condition holds after this step.
    pub fn advance<FW, FL>(
        &mut self,
        kind: DetectorKind,
        b0: f64,
        bc: f64,
        w: FW,
        lam: FL,
    ) -> Result<Option<u64>>
    where
        FW: FnOnce() -> Result<f64>,
        FL: FnOnce() -> Result<f64>,
    {
        if let Some(t) = self.alarm_time {
            return Err(QcdError::DetectorStopped(t));
        }
        let t = self.t + 1;
        let alarm = match kind {
            DetectorKind::BaselineW => self.w_stat.update(w()?)? >= b0,
            DetectorKind::BaselineLambda => self.lam_stat.update(lam()?)? >= bc,
            DetectorKind::SCusum => {
                if !self.w_frozen {
                    if self.w_stat.update(w()?)? >= b0 {
                        self.w_frozen = true;
                    }
                    false
                } else {
                    self.lam_stat.update(lam()?)? >= bc
                }
            }
            DetectorKind::JCusum => {
                if !self.w_frozen && self.w_stat.update(w()?)? >= b0 {
                    self.w_frozen = true;
                }
                if !self.lam_frozen && self.lam_stat.update(lam()?)? >= bc {
                    self.lam_frozen = true;
                }
                if self.w_stat.value() >= b0 && self.lam_stat.value() >= bc {
                    true
                } else {
                    if self.w_stat.value() <= 0.0 {
                        self.lam_stat.reset();
                        self.lam_frozen = false;
                    }
                    false
                }
            }
        };
        self.t = t;
        if alarm {
            self.alarm_time = Some(t);
        }
        Ok(self.alarm_time)
    }

    /// [`advance`](Self::advance) with both increments known up front.
    pub fn advance_increments(
        &mut self,
        kind: DetectorKind,
        b0: f64,
        bc: f64,
        w: f64,
        lam: f64,
    ) -> Result<Option<u64>> {
        self.advance(kind, b0, bc, || Ok(w), || Ok(lam))
    }
}

/// A configured detector together with its running state.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    w_ratio: LogRatio,
    lam_ratio: LogRatio,
    state: DetectorState,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Self {
        let w_ratio = LogRatio::new(&config.fb, &config.f0);
        let lam_ratio = LogRatio::new(&config.fb, &config.fc);
        Self {
            config,
            w_ratio,
            lam_ratio,
            state: DetectorState::new(),
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn state(&self) -> &DetectorState {
        &self.state
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> Result<Option<u64>> {
        let (w_ratio, lam_ratio) = (&self.w_ratio, &self.lam_ratio);
        self.state.advance(
            self.config.kind,
            self.config.b0,
            self.config.bc,
            || w_ratio.eval(x),
            || lam_ratio.eval(x),
        )
    }

    /// Steps through `stream` until the alarm or until `horizon` observations
    /// have been consumed.
    pub fn run<I>(&mut self, stream: I, horizon: u64) -> Result<Passage>
    where
        I: IntoIterator<Item = f64>,
    {
        if horizon == 0 {
            return Err(QcdError::ZeroHorizon);
        }
        for x in stream.into_iter().take(horizon as usize) {
            if let Some(t) = self.step(x)? {
                return Ok(Passage::Stopped(t));
            }
        }
        Ok(Passage::Censored)
    }
}

/// Runs a fresh detector on `stream` for at most `horizon` steps.
pub fn run_to_alarm<I>(config: &DetectorConfig, stream: I, horizon: u64) -> Result<(Passage, DetectorState)>
where
    I: IntoIterator<Item = f64>,
{
    let mut detector = Detector::new(config.clone());
    let passage = detector.run(stream, horizon)?;
    Ok((passage, detector.state))
}
