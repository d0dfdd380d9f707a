use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use causentropy::scenario::{self, Format, Report, ScenarioConfig};

/// Entropy-transfer scenarios: state search, transfer bookkeeping, area laws
/// and horizon integrals.
#[derive(Parser)]
#[command(name = "causentropy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run(RunArgs),
    /// Run every point of the config's sweep grid.
    Sweep(RunArgs),
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the version.
    Version,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn load(args: &RunArgs) -> causentropy::Result<ScenarioConfig> {
    let mut config = ScenarioConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(tol) = args.tolerance {
        config.tolerance = tol;
    }
    if let Some(out) = &args.output {
        config.output.path = Some(out.clone());
    }
    if let Some(f) = args.format {
        config.output.format = f;
    }
    config.validate()?;
    Ok(config)
}

fn write_output(path: Option<&Path>, text: &str) -> causentropy::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn curve_path(path: &Path) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(".curve.csv");
    path.with_file_name(name)
}

fn report_failures(reports: &[Report]) -> ExitCode {
    let mut failed = false;
    for (i, r) in reports.iter().enumerate() {
        let tag = if reports.len() > 1 { format!("[{i}] ") } else { String::new() };
        if let Some(e) = &r.error {
            eprintln!("{tag}error: {e}");
            failed = true;
        }
        for c in r.failures() {
            let op = if c.strict { "<" } else { "<=" };
            eprintln!("{tag}FAILED {}: residual {:e} (need {op} {:e})", c.name, c.residual, c.tolerance);
            failed = true;
        }
    }
    if failed {
        ExitCode::from(EXIT_CHECKS_FAILED)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(args: &RunArgs) -> causentropy::Result<ExitCode> {
    let config = load(args)?;
    if config.sweep.is_some() {
        return Err(causentropy::Error::ConfigInvalid {
            field: "sweep".into(),
            message: "config has a sweep section; use `sweep`".into(),
        });
    }
    let report = scenario::run_scenario(&config)?;
    let path = config.output.path.as_deref();
    write_output(path, &scenario::emit_report(&report, config.output.format)?)?;
    if let (Format::Csv, Some(p), Some(curve)) = (config.output.format, path, &report.curve) {
        std::fs::write(curve_path(p), scenario::curve_to_csv(curve)?)?;
    }
    if let Some(t) = report.wall_time_s {
        eprintln!("wall time {t:.3} s");
    }
    Ok(report_failures(std::slice::from_ref(&report)))
}

fn sweep(args: &RunArgs) -> causentropy::Result<ExitCode> {
    let mut config = load(args)?;
    if config.sweep.is_none() {
        config.sweep = Some(Vec::new());
    }
    let reports = scenario::run_sweep(&config)?;
    write_output(
        config.output.path.as_deref(),
        &scenario::emit_sweep(&reports, config.output.format)?,
    )?;
    Ok(report_failures(&reports))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Validate { config } => ScenarioConfig::from_path(config)
            .and_then(|c| c.expand_sweep().map(|points| (c, points.len())))
            .map(|(c, n)| {
                println!("ok: {} scenario, {n} point(s)", serde_json::to_string(&c.kind()).unwrap_or_default());
                ExitCode::SUCCESS
            }),
        Command::Version => {
            println!("causentropy {}", scenario::VERSION);
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_ERROR)
    })
}
