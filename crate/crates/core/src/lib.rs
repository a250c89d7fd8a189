//! Quickest detection of a bad change while ignoring a confusing change.
//!
//! Observations follow `f0` until an unknown change point, after which they
//! follow either a bad-change density `fB` (which must be detected quickly)
//! or a confusing-change density `fC` (which must not raise an alarm). The
//! crate provides the two-statistic `s-cusum` and `j-cusum` procedures, the
//! single-CuSum baselines, scenario classification by KL divergences, the
//! asymptotic delay bounds, and a reproducible Monte Carlo harness.

pub mod detectors;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod output;
pub mod rng;
pub mod statistics;
pub mod theory;

pub use detectors::{run_to_alarm, Detector, DetectorConfig, DetectorKind, DetectorState};
pub use distributions::{kl_divergence, log_likelihood_ratio, DensityModel, KlEstimate, KlMethod, LogRatio};
pub use error::{QcdError, Result};
pub use harness::{
    run_experiment, run_trial, summarize, Experiment, ExperimentPlan, HorizonPolicy, Regime, SummaryRow,
    TrialRecord,
};
pub use statistics::{cusum_batch, drift, first_passage, CusumStat, Passage, SrStat};
pub use theory::{
    bounds, calibrate_thresholds, classify, BoundSet, ModelTriple, Scenario, ScenarioReport, Thresholds,
};
