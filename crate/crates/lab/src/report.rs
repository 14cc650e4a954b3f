//! Report files for scenario runs.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::emit::{csv_field, write_json, write_text};
use crate::error::CliResult;
use crate::run::ScenarioRun;

pub const REPORT_SCHEMA: &str = "radial-lab/report/v1";

pub fn report_json(run: &ScenarioRun) -> Value {
    json!({
        "schema": REPORT_SCHEMA,
        "scenario": run.name,
        "operation": run.operation,
        "grid": run.grid,
        "seed": run.seed,
        "pass": run.pass,
        "error": run.error,
        "error_kind": run.error_kind,
        "quantities": run.outcome.quantities,
        "assertions": run.checks,
    })
}

/// Write `report.json`, the tables and the plot under `dir/<name>/`.
pub fn write_run(run: &ScenarioRun, dir: &Path) -> CliResult<PathBuf> {
    let root = dir.join(&run.name);
    write_json(&root.join("report.json"), &report_json(run))?;
    for (stem, csv) in &run.outcome.tables {
        write_text(&root.join(format!("{stem}.csv")), csv)?;
    }
    if let Some(svg) = &run.outcome.plot {
        write_text(&root.join("plot.svg"), svg)?;
    }
    Ok(root)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One line per scenario: name, operation, verdict, tightest margin, error.
pub fn summary_csv(runs: &[ScenarioRun]) -> String {
    let mut out = String::from("scenario,operation,pass,worst_margin,error\n");
    for run in runs {
        let worst = run
            .checks
            .iter()
            .filter_map(|c| c.margin.as_ref().and_then(Value::as_f64))
            .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))));
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(&run.name),
            run.operation,
            run.pass,
            worst.map(|m| format!("{m:.6e}")).unwrap_or_default(),
            csv_field(run.error.as_deref().unwrap_or(""))
        ));
    }
    out
}

/// Human-readable table of failed checks.
pub fn failure_table(run: &ScenarioRun) -> String {
    let mut out = format!("FAIL {} ({})\n", run.name, run.operation);
    if let Some(e) = &run.error {
        out.push_str(&format!("  error [{}]: {e}\n", run.error_kind.unwrap_or("?")));
    }
    for c in run.checks.iter().filter(|c| !c.pass) {
        out.push_str(&format!(
            "  {:<24} value={:<20} min={:<12} max={:<12} equals={:<8} margin={}\n",
            c.quantity,
            cell(&c.value),
            c.min.map(|x| x.to_string()).unwrap_or_else(|| "-".into()),
            c.max.map(|x| x.to_string()).unwrap_or_else(|| "-".into()),
            c.equals.as_ref().map(cell).unwrap_or_else(|| "-".into()),
            c.margin.as_ref().map(cell).unwrap_or_else(|| "-".into()),
        ));
    }
    out
}
