//! Monte Carlo experiment engine.
//!
//! An experiment runs every (detector, threshold, regime) cell for a fixed
//! number of trials. Trials run in parallel on rayon; each owns a random
//! stream keyed by `(seed, regime, trial)`, so detectors and thresholds see
//! the same observations for the same trial index, and results do not
//! depend on scheduling.

use std::collections::BTreeMap;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::{run_to_alarm, DetectorConfig, DetectorKind};
use crate::distributions::{DensityKind, DensityModel};
use crate::error::{QcdError, Result};
use crate::rng::StreamKey;
use crate::statistics::Passage;
use crate::theory::ModelTriple;

/// Change points probed for the confusing-change run length when the
/// ν-grid is enabled. A heuristic probe, not the exact infimum over ν.
pub const CONFUSING_NU_GRID: [u64; 5] = [1, 5, 10, 25, 50];

/// Which measure the observations are drawn under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regime {
    /// No change ever occurs.
    PreChange,
    /// `fB` from time `nu` onward.
    BadChangeAt(u64),
    /// `fC` from time `nu` onward.
    ConfusingChangeAt(u64),
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::PreChange => "pre-change",
            Regime::BadChangeAt(_) => "bad",
            Regime::ConfusingChangeAt(_) => "confusing",
        }
    }

    pub fn nu(self) -> Option<u64> {
        match self {
            Regime::PreChange => None,
            Regime::BadChangeAt(nu) | Regime::ConfusingChangeAt(nu) => Some(nu),
        }
    }

    fn validate(self) -> Result<Self> {
        match self.nu() {
            Some(0) => Err(QcdError::Parse {
                input: format!("{self}"),
                reason: "change point must be at least 1".into(),
            }),
            _ => Ok(self),
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Regime::PreChange => 0,
            Regime::BadChangeAt(nu) => (1 << 48) | nu,
            Regime::ConfusingChangeAt(nu) => (2 << 48) | nu,
        }
    }

    pub fn is_run_length(self) -> bool {
        !matches!(self, Regime::BadChangeAt(_))
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.nu() {
            Some(nu) => write!(f, "{}@{nu}", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Observations `X_1, X_2, ...`: `f0` before the change point, `post` from
/// it onward. Models that cannot be sampled yield NaN, which detectors
/// reject as a non-finite observation.
#[derive(Debug, Clone)]
pub struct ObservationStream<'a> {
    rng: ChaCha8Rng,
    f0: &'a DensityModel,
    post: &'a DensityModel,
    change_point: Option<u64>,
    t: u64,
}

impl Iterator for ObservationStream<'_> {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        self.t += 1;
        let model = match self.change_point {
            Some(nu) if self.t >= nu => self.post,
            _ => self.f0,
        };
        Some(model.sample(&mut self.rng).unwrap_or(f64::NAN))
    }
}

/// Builds the stream for change point `change_point` (`None`: never).
pub fn make_stream<'a>(
    f0: &'a DensityModel,
    post: &'a DensityModel,
    change_point: Option<u64>,
    rng: ChaCha8Rng,
) -> Result<ObservationStream<'a>> {
    for m in [f0, post] {
        if matches!(m.kind(), DensityKind::Tabulated { .. }) {
            return Err(QcdError::SamplingUnsupported(m.label().to_string()));
        }
    }
    Ok(ObservationStream {
        rng,
        f0,
        post,
        change_point,
        t: 0,
    })
}

/// One Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub detector: DetectorKind,
    pub b0: f64,
    pub bc: f64,
    pub regime: Regime,
    pub trial: u64,
    pub stopping_time: Option<u64>,
    pub censored: bool,
    pub horizon: u64,
    pub seed: u64,
}

pub fn run_trial(
    scenario: &str,
    config: &DetectorConfig,
    regime: Regime,
    horizon: u64,
    seed: u64,
    trial: u64,
) -> Result<TrialRecord> {
    let regime = regime.validate()?;
    let post = match regime {
        Regime::PreChange | Regime::BadChangeAt(_) => config.fb(),
        Regime::ConfusingChangeAt(_) => config.fc(),
    };
    let rng = StreamKey::new(seed, regime.stream_tag(), trial).rng();
    let stream = make_stream(config.f0(), post, regime.nu(), rng)?;
    let (passage, _) = run_to_alarm(config, stream, horizon)?;
    Ok(TrialRecord {
        scenario: scenario.to_string(),
        detector: config.kind(),
        b0: config.b0(),
        bc: config.bc(),
        regime,
        trial,
        stopping_time: passage.time(),
        censored: passage.is_censored(),
        horizon,
        seed,
    })
}

/// Per-regime horizons. Defaults: `ceil(50 e^b)` for run-length regimes and
/// `ceil(200 b / min{D(fB||f0), D(fB||fC)})` for the delay regime, with
/// `b = max(b0, bC)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HorizonPolicy {
    pub run_length: Option<u64>,
    pub delay: Option<u64>,
}

impl HorizonPolicy {
    pub fn horizon(&self, regime: Regime, b0: f64, bc: f64, min_bad_kl: f64) -> u64 {
        let b = b0.max(bc);
        let default = if regime.is_run_length() {
            (50.0 * b.exp()).ceil()
        } else {
            (200.0 * b / min_bad_kl).ceil()
        };
        let fixed = if regime.is_run_length() {
            self.run_length
        } else {
            self.delay
        };
        fixed.unwrap_or(default.min(u64::MAX as f64) as u64).max(1)
    }
}

/// Everything needed to run a grid of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Label written to the `scenario` column.
    pub label: String,
    pub models: ModelTriple,
    pub detectors: Vec<DetectorKind>,
    /// Threshold grid; every cell uses `b0 = bC = b`.
    pub thresholds: Vec<f64>,
    pub trials: u64,
    pub horizon: HorizonPolicy,
    pub seed: u64,
    /// Probe the confusing regime at every ν in [`CONFUSING_NU_GRID`]
    /// instead of only ν = 1.
    pub nu_grid: bool,
}

impl ExperimentPlan {
    pub fn regimes(&self) -> Vec<Regime> {
        let mut regimes = vec![Regime::BadChangeAt(1), Regime::PreChange];
        if self.nu_grid {
            regimes.extend(CONFUSING_NU_GRID.iter().map(|&nu| Regime::ConfusingChangeAt(nu)));
        } else {
            regimes.push(Regime::ConfusingChangeAt(1));
        }
        regimes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<Experiment> {
    if plan.detectors.is_empty() {
        return Err(QcdError::EmptyList("detector"));
    }
    if plan.thresholds.is_empty() {
        return Err(QcdError::EmptyList("threshold"));
    }
    if plan.trials == 0 {
        return Err(QcdError::EmptyList("trial"));
    }
    let min_kl = plan.models.min_bad_kl()?;
    let regimes = plan.regimes();

    let mut cells = Vec::new();
    for &kind in &plan.detectors {
        for &b in &plan.thresholds {
            let config = DetectorConfig::new(
                kind,
                plan.models.f0.clone(),
                plan.models.fc.clone(),
                plan.models.fb.clone(),
                b,
                b,
            )?;
            for &regime in &regimes {
                let horizon = plan.horizon.horizon(regime, b, b, min_kl);
                cells.push((config.clone(), regime, horizon));
            }
        }
    }

    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..plan.trials).map(move |t| (c, t)))
        .collect();
    let records = jobs
        .into_par_iter()
        .map(|(c, trial)| {
            let (config, regime, horizon) = &cells[c];
            run_trial(&plan.label, config, *regime, *horizon, plan.seed, trial)
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records)?;
    Ok(Experiment { records, summary })
}

/// Aggregates for one (scenario, detector, thresholds) cell.
///
/// Delay means exclude censored trials. Run-length means substitute the
/// horizon for censored trials, which makes them lower-bound estimates
/// whenever the matching censored count is non-zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub detector: DetectorKind,
    pub b0: f64,
    pub bc: f64,
    /// Mean of `T - ν + 1` under the bad change; `None` when every trial
    /// was censored or the regime was not run.
    pub mean_delay: Option<f64>,
    pub se_delay: Option<f64>,
    pub mean_rl_pre: Option<f64>,
    pub se_rl_pre: Option<f64>,
    /// Minimum over probed ν of the confusing-change mean run length.
    pub mean_rl_confusing: Option<f64>,
    pub se_rl_confusing: Option<f64>,
    /// The ν achieving `mean_rl_confusing`.
    pub confusing_nu: Option<u64>,
    /// `min(mean_rl_pre, mean_rl_confusing)`, the x-coordinate of the
    /// delay versus run-length curve.
    pub min_rl: Option<f64>,
    pub censored_delay: u64,
    pub censored_pre: u64,
    pub censored_confusing: u64,
    /// Distinct trial indices in the cell.
    pub trials: u64,
}

impl SummaryRow {
    pub fn rl_pre_is_lower_bound(&self) -> bool {
        self.censored_pre > 0
    }

    pub fn rl_confusing_is_lower_bound(&self) -> bool {
        self.censored_confusing > 0
    }
}

/// Mean and standard error (sample std / sqrt(n)) from exact integer sums,
/// so the result does not depend on record order.
fn mean_se(values: &[u64]) -> Option<(f64, f64)> {
    let n = values.len() as u128;
    if n == 0 {
        return None;
    }
    let sum: u128 = values.iter().map(|&v| v as u128).sum();
    let sum_sq: u128 = values.iter().map(|&v| (v as u128) * (v as u128)).sum();
    let mean = sum as f64 / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let num = n * sum_sq - sum * sum;
    let var = num as f64 / (n * (n - 1)) as f64;
    Some((mean, (var / n as f64).sqrt()))
}

/// Summarizes records that all belong to one cell.
pub fn summarize_cell(records: &[TrialRecord]) -> Result<SummaryRow> {
    let first = records.first().ok_or(QcdError::EmptyRecords)?;
    for r in records {
        if r.scenario != first.scenario
            || r.detector != first.detector
            || r.b0.to_bits() != first.b0.to_bits()
            || r.bc.to_bits() != first.bc.to_bits()
        {
            return Err(QcdError::MixedRecords(format!(
                "({}, {}, {}, {}) vs ({}, {}, {}, {})",
                first.scenario, first.detector, first.b0, first.bc, r.scenario, r.detector, r.b0, r.bc
            )));
        }
        if r.censored == r.stopping_time.is_some() {
            return Err(QcdError::MixedRecords(format!(
                "trial {} has inconsistent censoring",
                r.trial
            )));
        }
    }

    let mut delays = Vec::new();
    let mut censored_delay = 0;
    let mut pre = Vec::new();
    let mut censored_pre = 0;
    let mut confusing: BTreeMap<u64, (Vec<u64>, u64)> = BTreeMap::new();
    let mut trial_ids: Vec<u64> = records.iter().map(|r| r.trial).collect();
    trial_ids.sort_unstable();
    trial_ids.dedup();

    for r in records {
        match r.regime {
            Regime::BadChangeAt(nu) => match r.stopping_time {
                Some(t) if t >= nu => delays.push(t - nu + 1),
                Some(_) => {}
                None => censored_delay += 1,
            },
            Regime::PreChange => {
                pre.push(r.stopping_time.unwrap_or(r.horizon));
                censored_pre += r.censored as u64;
            }
            Regime::ConfusingChangeAt(nu) => {
                let entry = confusing.entry(nu).or_default();
                entry.0.push(r.stopping_time.unwrap_or(r.horizon));
                entry.1 += r.censored as u64;
            }
        }
    }

    let delay = mean_se(&delays);
    let rl_pre = mean_se(&pre);
    let rl_conf = confusing
        .iter()
        .filter_map(|(&nu, (vals, cens))| mean_se(vals).map(|(m, se)| (nu, m, se, *cens)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let min_rl = match (rl_pre, rl_conf) {
        (Some((a, _)), Some((_, b, _, _))) => Some(a.min(b)),
        (Some((a, _)), None) => Some(a),
        (None, Some((_, b, _, _))) => Some(b),
        (None, None) => None,
    };

    Ok(SummaryRow {
        scenario: first.scenario.clone(),
        detector: first.detector,
        b0: first.b0,
        bc: first.bc,
        mean_delay: delay.map(|d| d.0),
        se_delay: delay.map(|d| d.1),
        mean_rl_pre: rl_pre.map(|d| d.0),
        se_rl_pre: rl_pre.map(|d| d.1),
        mean_rl_confusing: rl_conf.map(|d| d.1),
        se_rl_confusing: rl_conf.map(|d| d.2),
        confusing_nu: rl_conf.map(|d| d.0),
        min_rl,
        censored_delay,
        censored_pre,
        censored_confusing: rl_conf.map_or(0, |d| d.3),
        trials: trial_ids.len() as u64,
    })
}

/// Groups records by (scenario, detector, b0, bC) and summarizes each
/// group. Rows come out sorted by that key.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(QcdError::EmptyRecords);
    }
    let mut groups: BTreeMap<(String, DetectorKind, OrdF64, OrdF64), Vec<TrialRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.scenario.clone(), r.detector, OrdF64(r.b0), OrdF64(r.bc)))
            .or_default()
            .push(r.clone());
    }
    groups.values().map(|g| summarize_cell(g)).collect()
}

#[derive(Debug, Clone, Copy)]
struct OrdF64(f64);

impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Convenience for tests and benches: the stopping time of one detector on
/// a regime stream, without building a record.
pub fn stopping_time(
    config: &DetectorConfig,
    regime: Regime,
    horizon: u64,
    seed: u64,
    trial: u64,
) -> Result<Passage> {
    let record = run_trial("", config, regime, horizon, seed, trial)?;
    Ok(record.stopping_time.map_or(Passage::Censored, Passage::Stopped))
}
