mod args;
mod config;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qcd_core::output::{format_sig6, write_records_file, write_summary_file};
use qcd_core::{
    bounds, classify, run_experiment, DensityModel, ExperimentPlan, ModelTriple, QcdError, Scenario,
};

use args::{BoundsArgs, Cli, Command, ModelArgs, ReplicateArgs, RunArgs, SimulateArgs};
use config::{with_scenario_suffix, FileConfig, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<QcdError> for CliError {
    fn from(err: QcdError) -> Self {
        match err {
            QcdError::Io(m) => CliError::Io(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::Classify(a) => cmd_classify(&a),
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Replicate(a) => cmd_replicate(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn parse_model(spec: &str) -> Result<DensityModel, CliError> {
    spec.parse().map_err(CliError::from)
}

fn parse_triple(f0: &str, fc: &str, fb: &str) -> Result<ModelTriple, CliError> {
    Ok(ModelTriple::new(
        parse_model(f0)?,
        parse_model(fc)?,
        parse_model(fb)?,
    )?)
}

fn cmd_classify(args: &ModelArgs) -> Result<(), CliError> {
    let m = parse_triple(&args.f0, &args.fc, &args.fb)?;
    let report = classify(&m.f0, &m.fc, &m.fb)?;
    let json = serde_json::json!({
        "f0": m.f0.label(),
        "fc": m.fc.label(),
        "fb": m.fb.label(),
        "scenario": report.scenario.number(),
        "drift_w_under_fc": report.drift_w_under_fc,
        "drift_lam_under_f0": report.drift_lam_under_f0,
        "kl": {
            "f0_fc": report.d_f0_fc,
            "f0_fb": report.d_f0_fb,
            "fc_f0": report.d_fc_f0,
            "fc_fb": report.d_fc_fb,
            "fb_f0": report.d_fb_f0,
            "fb_fc": report.d_fb_fc,
        },
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json).expect("report serializes")
    );
    Ok(())
}

/// Parses `12.5` or `e^4`.
fn parse_gamma(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let value = match s.strip_prefix("e^") {
        Some(exp) => exp.parse::<f64>().map(f64::exp),
        None => s.parse::<f64>(),
    };
    value.map_err(|_| CliError::Usage(format!("gamma `{s}` is not a number or e^<x>")))
}

fn cmd_bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let m = parse_triple(&args.models.f0, &args.models.fc, &args.models.fb)?;
    let gammas = args
        .gamma
        .iter()
        .map(|g| parse_gamma(g))
        .collect::<Result<Vec<_>, _>>()?;
    if gammas.is_empty() {
        return Err(CliError::Usage("gamma list is empty".into()));
    }
    let mut out = String::from("gamma,log_gamma,universal_lower,s_upper,j_upper\n");
    for gamma in gammas {
        let b = bounds(gamma, &m)?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_sig6(b.gamma),
            format_sig6(b.gamma.ln()),
            format_sig6(b.universal_lower),
            format_sig6(b.s_upper),
            format_sig6(b.j_upper)
        ));
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(out.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(())
}

fn load_file_config(run: &RunArgs) -> Result<FileConfig, CliError> {
    match &run.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    }
}

fn execute(
    label: String,
    models: ModelTriple,
    cfg: &RunConfig,
    records: PathBuf,
    summary: PathBuf,
) -> Result<(), CliError> {
    let plan = ExperimentPlan {
        label,
        models,
        detectors: cfg.detectors.clone(),
        thresholds: cfg.thresholds.clone(),
        trials: cfg.trials,
        horizon: cfg.horizon,
        seed: cfg.seed,
        nu_grid: cfg.nu_grid,
    };
    let exp = run_experiment(&plan)?;
    write_records_file(&records, &exp.records)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", records.display())))?;
    write_summary_file(&summary, &exp.summary)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", summary.display())))?;
    eprintln!(
        "scenario {}: {} records -> {}, {} summary rows -> {}",
        plan.label,
        exp.records.len(),
        records.display(),
        exp.summary.len(),
        summary.display()
    );
    Ok(())
}

fn cmd_replicate(args: &ReplicateArgs) -> Result<(), CliError> {
    let scenarios = match args.scenario.trim() {
        "all" => Scenario::ALL.to_vec(),
        s => vec![s.parse::<Scenario>()?],
    };
    let file = load_file_config(&args.run)?;
    let cfg = RunConfig::resolve(&args.run, &file)?;
    let multi = scenarios.len() > 1;
    for s in scenarios {
        let n = s.number();
        let path = |given: &Option<PathBuf>, default: &str| match given {
            Some(p) if multi => with_scenario_suffix(p, n),
            Some(p) => p.clone(),
            None => PathBuf::from(format!("{default}_s{n}.csv")),
        };
        let records = path(&cfg.records, "records");
        let summary = path(&cfg.summary, "summary");
        execute(s.to_string(), s.preset(), &cfg, records, summary)?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let file = load_file_config(&args.run)?;
    let cfg = RunConfig::resolve(&args.run, &file)?;
    let spec = |flag: &Option<String>, key: &Option<String>, name: &str| {
        flag.clone()
            .or_else(|| key.clone())
            .ok_or_else(|| CliError::Usage(format!("missing --{name} (or `{name}` in the config file)")))
    };
    let models = parse_triple(
        &spec(&args.f0, &file.f0, "f0")?,
        &spec(&args.fc, &file.fc, "fc")?,
        &spec(&args.fb, &file.fb, "fb")?,
    )?;
    let label = args
        .label
        .clone()
        .or_else(|| file.label.clone())
        .unwrap_or_else(|| "custom".into());
    let records = cfg
        .records
        .clone()
        .unwrap_or_else(|| PathBuf::from("records.csv"));
    let summary = cfg
        .summary
        .clone()
        .unwrap_or_else(|| PathBuf::from("summary.csv"));
    execute(label, models, &cfg, records, summary)
}
