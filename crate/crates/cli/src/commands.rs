//! The `simulate`, `check` and `scan` commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use hessflow_core::integrate::integrate;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{self, Config, Suite};
use crate::error::{numeric, CliError, Status};
use crate::presets;
use crate::scenario::{self, Scenario};
use crate::suites::{self, SuiteReport};

/// Where the configuration comes from, plus `--set` overrides applied in order.
#[derive(Clone, Debug, Default)]
pub struct Source {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub overrides: Vec<(String, Value)>,
}

impl Source {
    /// The raw configuration document with overrides applied.
    pub fn resolve(&self) -> Result<Value, CliError> {
        let mut value = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => return Err(CliError::config("give either --config or --preset, not both")),
            (Some(path), None) => config::read_value(path)?,
            (None, Some(name)) => presets::preset(name).ok_or_else(|| {
                CliError::config(format!("unknown preset '{name}' (known: {})", presets::names().join(", ")))
            })?,
            (None, None) => return Err(CliError::config("no configuration: give --config <path> or --preset <name>")),
        };
        // a run record replays its embedded configuration
        if value.get("version").is_some() {
            if let Some(inner) = value.get("config").cloned() {
                value = inner;
            }
        }
        for (key, v) in &self.overrides {
            config::set_path(&mut value, key, v.clone())?;
        }
        Ok(value)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn write_output(dir: &Path, file: &str, bytes: &[u8], listing: &mut Vec<OutputFile>) -> Result<(), CliError> {
    let path = dir.join(file);
    std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    listing.push(OutputFile {
        file: file.to_string(),
        bytes: bytes.len(),
        sha256: sha256_hex(bytes),
    });
    Ok(())
}

fn out_dir(cfg: &Config, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = out.map_or_else(|| PathBuf::from(&cfg.output.dir), Path::to_path_buf);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn run_record(command: &str, cfg: &Config, started: Instant, outputs: &[OutputFile], extra: Value) -> Result<Vec<u8>, CliError> {
    let mut rec = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg,
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
        "outputs": outputs,
    });
    if let (Some(obj), Value::Object(more)) = (rec.as_object_mut(), extra) {
        obj.extend(more);
    }
    let mut bytes = serde_json::to_vec_pretty(&rec).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parses and validates a raw document into a runnable scenario.
pub fn prepare(value: Value) -> Result<Scenario, CliError> {
    let cfg = config::from_value(value)?;
    scenario::build(&cfg)
}

/// Header and rows of the trajectory CSV.
pub fn trajectory_table(scn: &Scenario) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let out = integrate(&*scn.flow, &scn.state0, &scn.config.integrator, &scn.observers).map_err(numeric)?;
    let mut header = vec!["t".to_string()];
    header.extend(scn.columns.iter().cloned());
    header.extend(scn.observers.iter().map(|o| o.name.clone()));
    let rows = out
        .trajectory
        .times
        .iter()
        .zip(&out.trajectory.states)
        .enumerate()
        .map(|(k, (t, s))| {
            let mut row = vec![format_float(*t)];
            row.extend(s.coordinates().into_iter().map(format_float));
            row.extend(out.series.iter().map(|o| format_float(o.values[k])));
            row
        })
        .collect();
    Ok((header, rows))
}

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub dir: PathBuf,
    pub rows: usize,
    pub outputs: Vec<OutputFile>,
}

pub fn simulate(source: &Source, out: Option<&Path>) -> Result<SimulateOutcome, CliError> {
    let started = Instant::now();
    let scn = prepare(source.resolve()?)?;
    let (header, rows) = trajectory_table(&scn)?;
    let dir = out_dir(&scn.config, out)?;
    let mut outputs = Vec::new();
    write_output(&dir, "trajectory.csv", &csv_bytes(&header, &rows)?, &mut outputs)?;
    let record = run_record("simulate", &scn.config, started, &outputs, json!({}))?;
    std::fs::write(dir.join("run.json"), record)?;
    Ok(SimulateOutcome {
        dir,
        rows: rows.len(),
        outputs,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub system: String,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

impl CheckReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "scenario {} (system {}): {}\n",
            self.scenario,
            self.system,
            if self.pass { "PASS" } else { "FAIL" }
        );
        for s in &self.suites {
            out.push('\n');
            out.push_str(&s.to_text());
        }
        out
    }

    pub fn status(&self) -> Status {
        if self.pass {
            Status::Pass
        } else {
            Status::DiagnosticFailure
        }
    }
}

fn selected_suites(scn: &Scenario, cli: &[Suite]) -> Result<Vec<Suite>, CliError> {
    let suites = if !cli.is_empty() {
        cli.to_vec()
    } else if !scn.config.scenario.suite.is_empty() {
        scn.config.scenario.suite.clone()
    } else {
        suites::default_suites(scn.system)
    };
    for &s in &suites {
        suites::plan(scn, s)?;
    }
    Ok(suites)
}

/// Runs the selected suites on one scenario.
pub fn evaluate(scn: &Scenario, suites: &[Suite]) -> Result<CheckReport, CliError> {
    let reports = suites.iter().map(|&s| suites::run(scn, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(CheckReport {
        scenario: scn.config.scenario.name.clone(),
        system: scn.system.name().to_string(),
        pass: reports.iter().all(|r| r.pass),
        suites: reports,
    })
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub dir: PathBuf,
    pub report: CheckReport,
    pub outputs: Vec<OutputFile>,
}

pub fn check(source: &Source, out: Option<&Path>, suites: &[Suite]) -> Result<CheckOutcome, CliError> {
    let started = Instant::now();
    let scn = prepare(source.resolve()?)?;
    let selected = selected_suites(&scn, suites)?;
    let report = evaluate(&scn, &selected)?;
    let dir = out_dir(&scn.config, out)?;
    let mut outputs = Vec::new();
    write_output(&dir, "report.txt", report.to_text().as_bytes(), &mut outputs)?;
    let mut json = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    json.push(b'\n');
    write_output(&dir, "report.json", &json, &mut outputs)?;
    let names: Vec<&str> = selected.iter().map(|s| s.name()).collect();
    let record = run_record("check", &scn.config, started, &outputs, json!({ "suites": names, "pass": report.pass }))?;
    std::fs::write(dir.join("run.json"), record)?;
    Ok(CheckOutcome { dir, report, outputs })
}

#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub dir: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub outputs: Vec<OutputFile>,
}

/// One scan row: the metrics of every suite, matched to the header by name.
fn scan_row(base: &Value, param: &str, value: f64, columns: &[(Suite, String)], suites: &[Suite]) -> Vec<String> {
    let nan_row = |status: &str, message: String| {
        let mut row = vec![format_float(value)];
        row.extend(columns.iter().map(|_| format_float(f64::NAN)));
        row.extend(["false".to_string(), status.to_string(), message]);
        row
    };
    let mut doc = base.clone();
    let report = config::set_path(&mut doc, param, json!(value))
        .and_then(|_| prepare(doc))
        .and_then(|scn| evaluate(&scn, suites));
    match report {
        Ok(rep) => {
            let mut row = vec![format_float(value)];
            for (suite, name) in columns {
                let v = rep
                    .suites
                    .iter()
                    .filter(|r| r.suite == *suite)
                    .flat_map(|r| &r.metrics)
                    .find(|m| &m.name == name)
                    .map_or(f64::NAN, |m| m.value);
                row.push(format_float(v));
            }
            let errors: Vec<String> = rep.suites.iter().filter_map(|s| s.error.clone()).collect();
            row.extend([rep.pass.to_string(), "ok".to_string(), errors.join("; ")]);
            row
        }
        Err(e @ CliError::Numeric(_)) => nan_row("blow-up", e.to_string()),
        Err(e) => nan_row("error", e.to_string()),
    }
}

/// Runs the suites once per value of `param`, in parallel; rows are written
/// in input order. Verdicts go into the table, so the command itself passes
/// whenever the table could be produced.
pub fn scan(source: &Source, out: Option<&Path>, param: &str, values: &[f64], suites: &[Suite]) -> Result<ScanOutcome, CliError> {
    let started = Instant::now();
    let raw = source.resolve()?;
    let scn = prepare(raw.clone())?;
    let resolved = serde_json::to_value(&scn.config).map_err(|e| CliError::Io(e.to_string()))?;
    if !config::path_exists(&resolved, param) {
        return Err(CliError::config(format!("--param {param}: parameter not found in the scenario")));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::config(format!("--values: {bad} is not finite")));
    }
    let selected = selected_suites(&scn, suites)?;
    let mut columns = Vec::new();
    for &s in &selected {
        columns.extend(suites::plan(&scn, s)?.into_iter().map(|m| (s, m)));
    }
    let mut header = vec![param.to_string()];
    header.extend(columns.iter().map(|(s, m)| format!("{}:{m}", s.name())));
    header.extend(["pass".to_string(), "status".to_string(), "message".to_string()]);

    let rows: Vec<Vec<String>> = values
        .par_iter()
        .map(|&v| scan_row(&raw, param, v, &columns, &selected))
        .collect();

    let dir = out_dir(&scn.config, out)?;
    let mut outputs = Vec::new();
    write_output(&dir, "scan.csv", &csv_bytes(&header, &rows)?, &mut outputs)?;
    let names: Vec<&str> = selected.iter().map(|s| s.name()).collect();
    let record = run_record(
        "scan",
        &scn.config,
        started,
        &outputs,
        json!({ "param": param, "values": values, "suites": names }),
    )?;
    std::fs::write(dir.join("run.json"), record)?;
    Ok(ScanOutcome {
        dir,
        header,
        rows,
        outputs,
    })
}
