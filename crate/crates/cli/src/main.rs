use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hessflow_cli::config::{parse_override, Suite};
use hessflow_cli::error::exit_code;
use hessflow_cli::{check, presets, scan, simulate, CliError, Source, Status};

#[derive(Parser)]
#[command(name = "hessflow", version, about = "Rigid-body and geodesic flows on SO(n): simulation and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectory.csv and run.json.
    Simulate(Common),
    /// Run diagnostic suites and write report.txt, report.json and run.json.
    Check {
        #[command(flatten)]
        common: Common,
        /// Suite to run (repeatable or comma separated); overrides scenario.suite.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
    },
    /// Run the suites once per parameter value and write scan.csv.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Dotted configuration key, e.g. params.b1 or integrator.step.
        #[arg(long)]
        param: String,
        /// Comma-separated values; an empty list gives a header-only table.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Suites to run for every value; defaults as for check.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
    },
    /// Print a preset configuration, or list the presets.
    Preset {
        name: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file (a run.json record is accepted too).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario instead of --config.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; defaults to output.dir of the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a configuration entry, e.g. --set integrator.t_end=5.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for --set params.b1=VALUE.
    #[arg(long, allow_hyphen_values = true)]
    b1: Option<f64>,
    /// Shorthand for --set params.b2=VALUE.
    #[arg(long, allow_hyphen_values = true)]
    b2: Option<f64>,
    /// Shorthand for --set params.b3=VALUE.
    #[arg(long, allow_hyphen_values = true)]
    b3: Option<f64>,
}

impl Common {
    fn source(&self) -> Result<Source, CliError> {
        let mut overrides = self.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
        for (key, v) in [("params.b1", self.b1), ("params.b2", self.b2), ("params.b3", self.b3)] {
            if let Some(v) = v {
                overrides.push((key.to_string(), serde_json::json!(v)));
            }
        }
        Ok(Source {
            config: self.config.clone(),
            preset: self.preset.clone(),
            overrides,
        })
    }
}

fn suites(names: &[String]) -> Result<Vec<Suite>, CliError> {
    names.iter().filter(|s| !s.is_empty()).map(|s| Suite::parse(s.trim())).collect()
}

fn scan_values(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::config(format!("--values: '{s}' is not a number"))))
        .collect()
}

fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Simulate(common) => {
            let out = simulate(&common.source()?, common.out.as_deref())?;
            println!("wrote {} rows to {}", out.rows, out.dir.join("trajectory.csv").display());
            Ok(Status::Pass)
        }
        Command::Check { common, suite } => {
            let out = check(&common.source()?, common.out.as_deref(), &suites(&suite)?)?;
            print!("{}", out.report.to_text());
            println!("reports written to {}", out.dir.display());
            Ok(out.report.status())
        }
        Command::Scan { common, param, values, suite } => {
            let out = scan(&common.source()?, common.out.as_deref(), &param, &scan_values(&values)?, &suites(&suite)?)?;
            println!("wrote {} rows to {}", out.rows.len(), out.dir.join("scan.csv").display());
            Ok(Status::Pass)
        }
        Command::Preset { name: None } => {
            for name in presets::names() {
                println!("{name}");
            }
            Ok(Status::Pass)
        }
        Command::Preset { name: Some(name) } => {
            let doc = presets::preset(&name)
                .ok_or_else(|| CliError::config(format!("unknown preset '{name}' (known: {})", presets::names().join(", "))))?;
            println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?);
            Ok(Status::Pass)
        }
    }
}

fn main() -> ExitCode {
    let result = run(Cli::parse());
    if let Err(e) = &result {
        eprintln!("hessflow: {e}");
    }
    exit_code(&result)
}
