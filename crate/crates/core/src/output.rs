//! CSV persistence for trial records and summaries.
//!
//! Floats are rendered with 6 significant digits in `%g` style; censored
//! stopping times and unavailable aggregates are written as empty fields.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::harness::{SummaryRow, TrialRecord};

pub const RECORD_COLUMNS: [&str; 11] = [
    "scenario",
    "detector",
    "b0",
    "bC",
    "regime",
    "nu",
    "trial",
    "stopping_time",
    "censored",
    "horizon",
    "seed",
];

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "scenario",
    "detector",
    "b",
    "mean_delay",
    "se_delay",
    "mean_rl_pre",
    "se_rl_pre",
    "mean_rl_confusing",
    "se_rl_confusing",
    "min_rl",
    "censored_pre",
    "censored_confusing",
    "trials",
];

/// Formats `x` like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    format_sig(x, 6)
}

pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(format_sig6).unwrap_or_default()
}

pub fn write_records<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record([
            r.scenario.clone(),
            r.detector.to_string(),
            format_sig6(r.b0),
            format_sig6(r.bc),
            r.regime.name().to_string(),
            r.regime.nu().map(|n| n.to_string()).unwrap_or_default(),
            r.trial.to_string(),
            r.stopping_time.map(|t| t.to_string()).unwrap_or_default(),
            r.censored.to_string(),
            r.horizon.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.detector.to_string(),
            format_sig6(r.b0),
            opt_f64(r.mean_delay),
            opt_f64(r.se_delay),
            opt_f64(r.mean_rl_pre),
            opt_f64(r.se_rl_pre),
            opt_f64(r.mean_rl_confusing),
            opt_f64(r.se_rl_confusing),
            opt_f64(r.min_rl),
            r.censored_pre.to_string(),
            r.censored_confusing.to_string(),
            r.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_file(path: &Path, records: &[TrialRecord]) -> Result<()> {
    write_records(File::create(path)?, records)
}

pub fn write_summary_file(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_summary(File::create(path)?, rows)
}
