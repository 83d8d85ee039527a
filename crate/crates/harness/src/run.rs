//! Single runs and parameter sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dobac_core::{simulate, DobacError, Result, RunLog, Scenario};
use rayon::prelude::*;
use toml::Table;

use crate::config::{self, ScenarioFile};
use crate::report::Report;

#[derive(Debug)]
pub struct RunOutput {
    pub log: RunLog,
    pub report: Report,
    pub csv: PathBuf,
    pub report_path: PathBuf,
}

fn io(path: &Path, e: std::io::Error) -> DobacError {
    DobacError::Io(format!("{}: {e}", path.display()))
}

/// Simulates one scenario and writes `<stem>.csv` and `<stem>.report.txt` to `out`.
pub fn run_to_dir(file: &ScenarioFile, sc: &Scenario, out: &Path, stem: &str) -> Result<RunOutput> {
    let log = simulate(sc)?;
    let report = Report::build(&log, sc, file.window()?)?;
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let csv = out.join(format!("{stem}.csv"));
    let report_path = out.join(format!("{stem}.report.txt"));
    log.save(&csv)?;
    fs::write(&report_path, report.render(sc)).map_err(|e| io(&report_path, e))?;
    Ok(RunOutput { log, report, csv, report_path })
}

#[derive(Debug)]
pub struct SweepEntry {
    pub value: String,
    pub outcome: Result<RunOutput>,
}

#[derive(Debug)]
pub struct Sweep {
    pub param: String,
    pub entries: Vec<SweepEntry>,
    pub table_path: PathBuf,
}

impl Sweep {
    pub fn failures(&self) -> impl Iterator<Item = (&str, &DobacError)> {
        self.entries.iter().filter_map(|e| e.outcome.as_ref().err().map(|err| (e.value.as_str(), err)))
    }
}

fn file_stem(name: &str, param: &str, value: &str) -> String {
    let clean: String = format!("{param}={value}")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "=.-_".contains(c) { c } else { '_' })
        .collect();
    format!("{name}__{clean}")
}

/// Splits a `--values` list.
pub fn split_values(list: &str) -> Result<Vec<String>> {
    let values: Vec<String> = list.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
    if values.is_empty() {
        return Err(DobacError::config("--values", "empty value list"));
    }
    Ok(values)
}

/// Runs `base` once per value of `param`, in parallel, and writes a comparison table.
///
/// A failing value is reported in its entry and in the table; the others still run.
pub fn sweep(base: &Table, param: &str, values: &[String], out: &Path) -> Result<Sweep> {
    if values.is_empty() {
        return Err(DobacError::config("--values", "empty value list"));
    }
    // the key must name a schema field, whatever value it takes
    let mut probe = base.clone();
    config::apply_override(&mut probe, &format!("{param}={}", values[0]))?;
    if let Err(DobacError::Config { message, .. }) = config::file_from_table(probe) {
        if message.contains("unknown") {
            return Err(DobacError::config(param, message));
        }
    }
    let name = base.get("name").and_then(|v| v.as_str()).unwrap_or("scenario").to_string();
    let entries: Vec<SweepEntry> = values
        .par_iter()
        .map(|value| {
            let outcome = (|| {
                let mut table = base.clone();
                config::apply_override(&mut table, &format!("{param}={value}"))?;
                let file = config::file_from_table(table)?;
                let sc = file.to_scenario()?;
                run_to_dir(&file, &sc, out, &file_stem(&name, param, value))
            })();
            SweepEntry { value: value.clone(), outcome }
        })
        .collect();

    let mut table = String::new();
    let _ = writeln!(table, "# sweep over {param}");
    let _ = writeln!(
        table,
        "{:<14} {:>14} {:>14} {:>14} {:>14}  status",
        param, "rms_e", "sup_u_drj", "sup_rate", "sup_eta"
    );
    for e in &entries {
        match &e.outcome {
            Ok(o) => {
                let m = &o.report.metrics;
                let _ = writeln!(
                    table,
                    "{:<14} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}  ok",
                    e.value, m.rms_e, m.sup_u_drj, m.sup_u_drj_rate, m.sup_eta
                );
            }
            Err(err) => {
                let _ = writeln!(table, "{:<14} {:>14} {:>14} {:>14} {:>14}  failed: {err}", e.value, "-", "-", "-", "-");
            }
        }
    }
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let table_path = out.join(format!("{}.txt", file_stem(&name, "sweep", param)));
    fs::write(&table_path, &table).map_err(|e| io(&table_path, e))?;
    Ok(Sweep { param: param.to_string(), entries, table_path })
}
