use std::path::{Path, PathBuf};

use serde::Deserialize;

use qcd_core::{DetectorKind, HorizonPolicy};

use crate::args::RunArgs;
use crate::CliError;

pub const DEFAULT_TRIALS: u64 = 60;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_THRESHOLDS: [f64; 6] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
pub const SEED_ENV: &str = "QCD_SEED";

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub f0: Option<String>,
    pub fc: Option<String>,
    pub fb: Option<String>,
    pub label: Option<String>,
    pub detectors: Option<Vec<String>>,
    pub b: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub nu_grid: Option<bool>,
    pub horizon_rl: Option<u64>,
    pub horizon_delay: Option<u64>,
    pub records: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub detectors: Vec<DetectorKind>,
    pub thresholds: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub nu_grid: bool,
    pub horizon: HorizonPolicy,
    pub records: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl RunConfig {
    /// Flags win over the config file, which wins over the environment and
    /// built-in defaults.
    pub fn resolve(args: &RunArgs, file: &FileConfig) -> Result<Self, CliError> {
        let detectors = match args.detectors.as_ref().or(file.detectors.as_ref()) {
            Some(names) => names
                .iter()
                .map(|n| n.parse::<DetectorKind>().map_err(CliError::from))
                .collect::<Result<Vec<_>, _>>()?,
            None => DetectorKind::ALL.to_vec(),
        };
        if detectors.is_empty() {
            return Err(CliError::Usage("detector list is empty".into()));
        }
        let thresholds = args
            .b
            .clone()
            .or_else(|| file.b.clone())
            .unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec());
        if thresholds.is_empty() {
            return Err(CliError::Usage("threshold list is empty".into()));
        }
        if let Some(b) = thresholds.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(CliError::Usage(format!("threshold {b} must be positive")));
        }
        let trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        let seed = match args.seed.or(file.seed) {
            Some(s) => s,
            None => env_seed()?.unwrap_or(DEFAULT_SEED),
        };
        let horizon = HorizonPolicy {
            run_length: args.horizon_rl.or(file.horizon_rl),
            delay: args.horizon_delay.or(file.horizon_delay),
        };
        if horizon.run_length == Some(0) || horizon.delay == Some(0) {
            return Err(CliError::Usage("horizons must be at least 1".into()));
        }
        Ok(Self {
            detectors,
            thresholds,
            trials,
            seed,
            nu_grid: args.nu_grid || file.nu_grid.unwrap_or(false),
            horizon,
            records: args.records.clone().or_else(|| file.records.clone()),
            summary: args.summary.clone().or_else(|| file.summary.clone()),
        })
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// `out.csv` + 3 -> `out_s3.csv`.
pub fn with_scenario_suffix(path: &Path, scenario: u8) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_s{scenario}.{}", ext.to_string_lossy()),
        None => format!("{stem}_s{scenario}"),
    };
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: FileConfig =
            serde_json::from_str(r#"{"trials": 10, "seed": 3, "b": [2.0], "nu_grid": true}"#).unwrap();
        let args = RunArgs {
            trials: Some(7),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&args, &file).unwrap();
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.thresholds, vec![2.0]);
        assert!(cfg.nu_grid);
        assert_eq!(cfg.detectors, DetectorKind::ALL.to_vec());
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"trails": 10}"#).is_err());
    }

    #[test]
    fn validation() {
        let file = FileConfig::default();
        let bad = RunArgs {
            detectors: Some(vec!["cusum".into()]),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&bad, &file).is_err());
        let bad = RunArgs {
            b: Some(vec![-1.0]),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&bad, &file).is_err());
        let bad = RunArgs {
            trials: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&bad, &file).is_err());
    }

    #[test]
    fn suffix() {
        assert_eq!(
            with_scenario_suffix(Path::new("out/summary.csv"), 2),
            PathBuf::from("out/summary_s2.csv")
        );
        assert_eq!(
            with_scenario_suffix(Path::new("summary"), 1),
            PathBuf::from("summary_s1")
        );
    }
}
