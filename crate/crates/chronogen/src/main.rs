use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chronogen::cli::{self, Mode, ReportFormat, RunConfig, RunOptions};

/// Relational-time laboratory: conditional dynamics of bipartite
/// eigenstates, emergent time-dependent potentials, and solvable TDSE
/// benchmark exports.
#[derive(Parser)]
#[command(name = "chronogen", version, about)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured pipeline and export trajectory data.
    Example(CommonArgs),
    /// Run the pipeline and check residuals against tolerances.
    Verify(CommonArgs),
    /// Export a verified solvable potential/solution pair.
    Generate(CommonArgs),
    /// Clock readout curve, inversion, and resolution diagnostics.
    Readout(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file (strict schema; unknown keys rejected).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override the lambda grid: START STOP POINTS.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "POINTS"])]
    grid: Option<Vec<String>>,

    /// Worker threads for grid sampling (default 1).
    #[arg(long)]
    threads: Option<usize>,

    /// Report format printed to stdout.
    #[arg(long, value_enum, default_value_t = ReportArg::Text)]
    report: ReportArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportArg {
    Text,
    Json,
}

fn main() -> ExitCode {
    let args = CliArgs::parse();
    let (mode, common) = match args.command {
        Command::Example(c) => (Mode::Example, c),
        Command::Verify(c) => (Mode::Verify, c),
        Command::Generate(c) => (Mode::Generate, c),
        Command::Readout(c) => (Mode::Readout, c),
    };

    let mut config = match load_config(&common) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(4);
        }
    };
    config.mode = mode;
    if let Some(out) = &common.out {
        config.output.dir = Some(out.clone());
    }
    if let Some(grid) = &common.grid {
        match parse_grid_args(grid) {
            Ok((start, stop, points)) => {
                config.grid.start = start;
                config.grid.stop = stop;
                config.grid.points = points;
            }
            Err(message) => {
                eprintln!("error: config validation error: {message}");
                return ExitCode::from(4);
            }
        }
    }

    let opts = RunOptions {
        report: match common.report {
            ReportArg::Text => ReportFormat::Text,
            ReportArg::Json => ReportFormat::Json,
        },
        threads: common.threads,
    };
    let code = cli::run(&config, &opts);
    ExitCode::from(code.clamp(0, u8::MAX as i32) as u8)
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, String> {
    match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("config parse error: cannot read {}: {e}", path.display()))?;
            cli::parse_config(&text).map_err(|e| e.to_string())
        }
        None => Ok(RunConfig::default()),
    }
}

fn parse_grid_args(values: &[String]) -> Result<(f64, f64, usize), String> {
    if values.len() != 3 {
        return Err("--grid expects START STOP POINTS".into());
    }
    let start: f64 = values[0]
        .parse()
        .map_err(|_| format!("--grid START must be a number, got {:?}", values[0]))?;
    let stop: f64 = values[1]
        .parse()
        .map_err(|_| format!("--grid STOP must be a number, got {:?}", values[1]))?;
    let points: usize = values[2]
        .parse()
        .map_err(|_| format!("--grid POINTS must be an integer, got {:?}", values[2]))?;
    Ok((start, stop, points))
}
