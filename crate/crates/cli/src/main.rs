//! `recovery`: simulate scenario sets, calibrate recovery models and run
//! tail-risk sweeps, persisting every artifact as CSV.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use recovery_core::calibration::calibrate;
use recovery_core::config::parse_config;
use recovery_core::csvio;
use recovery_core::figures::figure_data;
use recovery_core::portfolio::{run_simulation_with, SimulationOptions};
use recovery_core::risk::risk_sweep;
use recovery_core::{Error, ModelKind, RunConfig, ScenarioRecord, StructuralFitMode};

#[derive(Parser)]
#[command(
    name = "recovery",
    version,
    about = "Credit portfolio recovery-rate simulation and calibration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo simulation and write scenarios.csv.
    Simulate(SimulateArgs),
    /// Fit recovery models on one calibration window.
    Calibrate(CalibrateArgs),
    /// VaR and ETL of calibrated models on one window, normalised to the empirical values.
    Risk(RiskArgs),
    /// Risk over a grid of lower thresholds.
    Sweep(RiskArgs),
    /// Write the plot tables fig1..fig4.
    Figdata(FigdataArgs),
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Output file; defaults to `<output_dir>/scenarios.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of scenarios.
    #[arg(long)]
    scenarios: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; the output does not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<f64>,
    #[arg(long)]
    bin_width: Option<f64>,
    /// Structural residual space: loss_space or recovery_space.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scenarios: PathBuf,
    /// constant, probit, structural or all.
    #[arg(long, default_value = "all")]
    model: String,
    #[command(flatten)]
    window: WindowArgs,
    /// Output file; model.csv is written next to it.
    #[arg(long, default_value = "calibration.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct RiskArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scenarios: PathBuf,
    /// Comma-separated models, or all.
    #[arg(long, default_value = "all")]
    model: String,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated lower thresholds (sweep only).
    #[arg(long, allow_hyphen_values = true)]
    thresholds: Option<String>,
    #[arg(long, default_value = "risk.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct FigdataArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scenarios: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    thresholds: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Failure with its exit code: 1 for usage and configuration, 2 for data and runtime.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Constraint { .. } => Failure::usage(e.to_string()),
            Error::Calibration(msg) => Failure::runtime(msg),
            other => Failure::runtime(other.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    match &common.config {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
        }
    }
}

fn apply_window(config: &mut RunConfig, args: &WindowArgs) -> CmdResult {
    if let Some(v) = args.lower {
        config.window.lower = v;
    }
    if let Some(v) = args.upper {
        config.window.upper = v;
    }
    if let Some(v) = args.bin_width {
        config.window.bin_width = v;
    }
    if let Some(mode) = &args.mode {
        config.structural_mode = mode.parse::<StructuralFitMode>()?;
    }
    config.window.validate()?;
    Ok(())
}

fn parse_thresholds(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("invalid threshold `{t}`")))
        })
        .collect()
}

fn parse_models(text: &str) -> Result<Vec<ModelKind>, Failure> {
    if text == "all" {
        return Ok(ModelKind::ALL.to_vec());
    }
    text.split(',')
        .map(|m| m.trim().parse::<ModelKind>().map_err(Failure::from))
        .collect()
}

fn read_scenarios(path: &Path) -> Result<Vec<ScenarioRecord>, Failure> {
    let file = File::open(path)
        .map_err(|e| Failure::runtime(format!("cannot open {}: {e}", path.display())))?;
    let records = csvio::read_scenarios(file)
        .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    if records.is_empty() {
        return Err(Failure::runtime(format!(
            "{}: no scenarios",
            path.display()
        )));
    }
    Ok(records)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| Failure::runtime(format!("{}: {e}", parent.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", path.display())))
}

fn simulate(args: SimulateArgs) -> CmdResult {
    let mut config = load_config(&args.common)?;
    if let Some(m) = args.scenarios {
        config.params.scenarios = m;
    }
    if let Some(seed) = args.seed {
        config.params.seed = seed;
    }
    config.params.validate()?;
    if args.threads == Some(0) {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    let out = args
        .out
        .unwrap_or_else(|| config.output_dir.join("scenarios.csv"));
    let options = SimulationOptions {
        workers: args.threads,
        ..SimulationOptions::default()
    };
    let start = Instant::now();
    let set = run_simulation_with(&config.params, &options)?;
    let elapsed = start.elapsed();
    csvio::write_scenarios(create(&out)?, &set.records)?;
    let mean_pd = set.records.iter().map(|r| r.p_d).sum::<f64>() / set.records.len() as f64;
    println!(
        "scenarios={} process={} runtime={:.2}s mean_p_d={:.6} -> {}",
        set.records.len(),
        config.params.process_kind.as_str(),
        elapsed.as_secs_f64(),
        mean_pd,
        out.display()
    );
    Ok(())
}

fn calibrate_cmd(args: CalibrateArgs) -> CmdResult {
    let mut config = load_config(&args.common)?;
    apply_window(&mut config, &args.window)?;
    let models = parse_models(&args.model)?;
    let records = read_scenarios(&args.scenarios)?;
    let fitted = models
        .iter()
        .map(|&kind| calibrate(&records, &config.window, kind, config.structural_mode))
        .collect::<Result<Vec<_>, _>>()?;
    csvio::write_calibrations(create(&args.out)?, &fitted)?;
    let model_path = args
        .out
        .parent()
        .map_or_else(|| PathBuf::from("model.csv"), |dir| dir.join("model.csv"));
    let models: Vec<_> = fitted.iter().map(|c| c.model).collect();
    csvio::write_models(create(&model_path)?, &models)?;
    for cal in &fitted {
        let (p1, p2) = cal.model.params();
        match p2 {
            Some(p2) => println!(
                "{}: param1={p1:.6} param2={p2:.6} n_records={}",
                cal.model.kind(),
                cal.n_records
            ),
            None => println!(
                "{}: param1={p1:.6} n_records={}",
                cal.model.kind(),
                cal.n_records
            ),
        }
    }
    Ok(())
}

fn risk_cmd(args: RiskArgs, sweep: bool) -> CmdResult {
    let mut config = load_config(&args.common)?;
    apply_window(&mut config, &args.window)?;
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Failure::usage("--alpha must lie in (0, 1)"));
    }
    let thresholds = match (&args.thresholds, sweep) {
        (Some(_), false) => {
            return Err(Failure::usage(
                "--thresholds is only valid for sweep; use --lower",
            ))
        }
        (Some(text), true) => parse_thresholds(text)?,
        (None, true) => config.lower_thresholds.clone(),
        (None, false) => vec![config.window.lower],
    };
    if let Some(bad) = thresholds
        .iter()
        .find(|&&t| t.is_nan() || t >= config.window.upper)
    {
        return Err(Failure::usage(format!(
            "threshold {bad} is not below the upper bound {}",
            config.window.upper
        )));
    }
    let mut sweep_config = config.sweep_config();
    sweep_config.lower_thresholds = thresholds;
    sweep_config.models = parse_models(&args.model)?;
    let records = read_scenarios(&args.scenarios)?;
    let rows = risk_sweep(&records, &sweep_config)?;
    csvio::write_risk(create(&args.out)?, &rows)?;
    let failed = rows.iter().filter(|r| r.status.as_str() != "ok").count();
    println!(
        "rows={} failed_cells={} -> {}",
        rows.len(),
        failed,
        args.out.display()
    );
    Ok(())
}

fn figdata(args: FigdataArgs) -> CmdResult {
    let mut config = load_config(&args.common)?;
    apply_window(&mut config, &args.window)?;
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(text) = &args.thresholds {
        config.lower_thresholds = parse_thresholds(text)?;
    }
    config.validate()?;
    let records = read_scenarios(&args.scenarios)?;
    let data = figure_data(&records, &config.sweep_config())?;
    csvio::write_figures(&args.out, &data)?;
    println!(
        "wrote {} -> {}",
        csvio::FIGURE_FILES.join(", "),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Calibrate(args) => calibrate_cmd(args),
        Command::Risk(args) => risk_cmd(args, false),
        Command::Sweep(args) => risk_cmd(args, true),
        Command::Figdata(args) => figdata(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
