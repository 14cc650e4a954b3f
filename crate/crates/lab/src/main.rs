use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use radial_lab::ModelConfig;
use radial_lab_cli::emit::{write_json, write_text};
use radial_lab_cli::error::{CliError, CliResult};
use radial_lab_cli::grid::GridSpec;
use radial_lab_cli::report::{failure_table, report_json, summary_csv, write_run};
use radial_lab_cli::run::{run_scenario, ScenarioRun, Settings};
use radial_lab_cli::scenario::{FixtureSpec, Operation, Scenario, SCENARIO_SCHEMA};
use radial_lab_cli::verify::{run_suite, Suite};
use serde_json::Value;

/// Circle-invariant potentials on the projective line: envelopes,
/// geodesics, energies, distances and capacities on a grid.
#[derive(Debug, Parser)]
#[command(name = "radial-lab", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON file with grid settings (half_width, primal_points, dual_points, convexity_tol).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Grid override such as `M=1024,N=2048,S=30`; beats --config.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Seed for random fixtures without their own seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for reports, tables and plots.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for `report`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

/// Fixtures are inline JSON, `@file.json`, or a bare kind such as `green_normalized`.
#[derive(Debug, Subcommand)]
enum Command {
    /// Rooftop envelope of two potentials.
    Envelope {
        #[arg(long)]
        u0: String,
        #[arg(long)]
        u1: String,
        /// Envelope of u0 with the singularity type of u1 instead.
        #[arg(long)]
        singularity: bool,
    },
    /// Geodesic profiles, written as CSV and SVG under --out.
    Geodesic {
        #[arg(long)]
        u0: String,
        #[arg(long)]
        u1: String,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
        ts: Vec<f64>,
    },
    /// Distance with the velocity cross-check when both duals are smooth.
    Distance {
        #[arg(long)]
        u0: String,
        #[arg(long)]
        u1: String,
    },
    /// Weighted energies of one potential.
    Energy {
        #[arg(long)]
        u: String,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        weights: Vec<f64>,
        /// Integrate the closed-form profile instead of the grid potential.
        #[arg(long)]
        exact: bool,
    },
    /// Capacity of a union of s-intervals given as `a:b`; `-inf`/`inf` reach the poles.
    Capacity {
        #[arg(long = "interval", required = true, allow_hyphen_values = true)]
        intervals: Vec<String>,
    },
    /// Randomised property suites; writes verify-<suite>.json.
    Verify {
        #[arg(long = "suite")]
        suites: Vec<Suite>,
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Run scenario files (or directories of them) and write reports.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

fn load_config(path: &Path) -> CliResult<ModelConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let given: Value = serde_json::from_str(&text).map_err(|e| CliError::schema("", e))?;
    let Value::Object(given) = given else {
        return Err(CliError::schema("", "config must be a JSON object"));
    };
    let mut merged = serde_json::to_value(ModelConfig::default()).map_err(|e| CliError::Usage(e.to_string()))?;
    for (key, value) in given {
        match merged.get_mut(&key) {
            Some(slot) => *slot = value,
            None => return Err(CliError::schema(format!("/{key}"), "unknown field")),
        }
    }
    let cfg: ModelConfig = serde_json::from_value(merged).map_err(|e| CliError::schema("", e))?;
    cfg.validate()?;
    Ok(cfg)
}

fn settings(g: &Global) -> CliResult<Settings> {
    let base = match &g.config {
        Some(path) => load_config(path).map_err(|e| match e {
            CliError::Schema { pointer, message } => CliError::Usage(format!(
                "{}: {}: {message}",
                path.display(),
                if pointer.is_empty() { "/" } else { &pointer }
            )),
            other => other,
        })?,
        None => ModelConfig::default(),
    };
    let grid = match &g.grid {
        Some(text) => GridSpec::parse(text)?,
        None => GridSpec::default(),
    };
    let s = Settings {
        base,
        grid,
        seed: g.seed,
    };
    s.config()?;
    Ok(s)
}

fn parse_interval(text: &str) -> CliResult<[Option<f64>; 2]> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("--interval: expected a:b, got {text:?}")))?;
    let end = |t: &str| -> CliResult<Option<f64>> {
        let x: f64 = t
            .trim()
            .parse()
            .map_err(|e| CliError::Usage(format!("--interval {text:?}: {e}")))?;
        Ok(x.is_finite().then_some(x))
    };
    Ok([end(a)?, end(b)?])
}

/// Wrap a one-off command as a scenario without assertions.
fn adhoc(name: &str, fixtures: &[(&str, &str)], operation: Operation) -> CliResult<Scenario> {
    let mut map = BTreeMap::new();
    for (id, arg) in fixtures {
        let spec = FixtureSpec::parse_arg(arg)?;
        if let FixtureSpec::Explicit(f) = &spec {
            f.validate().map_err(|e| CliError::Usage(format!("--{id}: {e}")))?;
        }
        map.insert(id.to_string(), spec);
    }
    let doc = serde_json::json!({
        "schema": SCENARIO_SCHEMA,
        "name": name,
        "fixtures": map,
        "operation": operation,
    });
    Scenario::from_json(&doc.to_string()).map_err(|e| CliError::Usage(e.to_string()))
}

fn single(cli: &Cli, sc: Scenario) -> CliResult<bool> {
    let run = run_scenario(&sc, &settings(&cli.global)?)?;
    if let Some(dir) = &cli.global.out {
        write_run(&run, dir)?;
    }
    let text = serde_json::to_string_pretty(&report_json(&run)).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("{text}");
    if !run.pass {
        eprint!("{}", failure_table(&run));
    }
    Ok(run.pass)
}

fn scenario_files(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let entries = std::fs::read_dir(path).map_err(|e| CliError::io(path, e))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    Ok(files)
}

fn run_parallel(scenarios: &[Scenario], settings: &Settings, jobs: usize) -> CliResult<Vec<ScenarioRun>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CliResult<ScenarioRun>>>> = Mutex::new((0..scenarios.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, scenarios.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(sc) = scenarios.get(k) else { break };
                let result = run_scenario(sc, settings);
                slots.lock().unwrap_or_else(|p| p.into_inner())[k] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|p| p.into_inner())
        .into_iter()
        .map(|r| r.unwrap_or_else(|| Err(CliError::Usage("worker exited early".into()))))
        .collect()
}

fn report(cli: &Cli, paths: &[PathBuf]) -> CliResult<bool> {
    let settings = settings(&cli.global)?;
    let mut scenarios = Vec::new();
    let mut names = BTreeSet::new();
    for file in scenario_files(paths)? {
        let sc = Scenario::load(&file).map_err(|e| match e {
            CliError::Schema { .. } => CliError::Usage(format!("{}: {e}", file.display())),
            other => other,
        })?;
        if !names.insert(sc.name.clone()) {
            return Err(CliError::Usage(format!("{}: duplicate scenario name {:?}", file.display(), sc.name)));
        }
        scenarios.push(sc);
    }
    let runs = run_parallel(&scenarios, &settings, cli.global.jobs)?;
    let out = cli.global.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    for run in &runs {
        write_run(run, &out)?;
        if run.pass {
            println!("PASS {}", run.name);
        } else {
            println!("FAIL {}", run.name);
            eprint!("{}", failure_table(run));
        }
    }
    write_text(&out.join("summary.csv"), &summary_csv(&runs))?;
    let failed = runs.iter().filter(|r| !r.pass).count();
    println!("{} scenarios, {} passed, {failed} failed", runs.len(), runs.len() - failed);
    Ok(failed == 0)
}

fn verify(cli: &Cli, suites: &[Suite], count: usize) -> CliResult<bool> {
    let cfg = settings(&cli.global)?.config()?;
    let suites = if suites.is_empty() { Suite::ALL.to_vec() } else { suites.to_vec() };
    let out = cli.global.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut all = true;
    for suite in suites {
        let r = run_suite(suite, count, cli.global.seed, cfg)?;
        write_json(&out.join(format!("verify-{suite}.json")), &r)?;
        println!(
            "{} {suite}: {count} draws, worst margin {:.3e} (tolerance {:.0e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.worst_margin,
            r.tolerance
        );
        all &= r.pass;
    }
    Ok(all)
}

fn dispatch(cli: &Cli) -> CliResult<bool> {
    match &cli.command {
        Command::Envelope { u0, u1, singularity } => {
            let (a, b) = ("u0".to_string(), "u1".to_string());
            let op = if *singularity {
                Operation::SingularityRooftop { u0: a, u1: b }
            } else {
                Operation::Rooftop { u0: a, u1: b }
            };
            single(cli, adhoc("envelope", &[("u0", u0), ("u1", u1)], op)?)
        }
        Command::Geodesic { u0, u1, ts } => {
            let op = Operation::Geodesic {
                u0: "u0".into(),
                u1: "u1".into(),
                ts: ts.clone(),
            };
            single(cli, adhoc("geodesic", &[("u0", u0), ("u1", u1)], op)?)
        }
        Command::Distance { u0, u1 } => {
            let op = Operation::Distance {
                u0: "u0".into(),
                u1: "u1".into(),
            };
            single(cli, adhoc("distance", &[("u0", u0), ("u1", u1)], op)?)
        }
        Command::Energy { u, weights, exact } => {
            let op = Operation::Energy {
                u: "u".into(),
                weights: weights.clone(),
                exact: *exact,
            };
            single(cli, adhoc("energy", &[("u", u)], op)?)
        }
        Command::Capacity { intervals } => {
            let intervals = intervals.iter().map(|t| parse_interval(t)).collect::<CliResult<_>>()?;
            single(cli, adhoc("capacity", &[], Operation::Capacity { intervals })?)
        }
        Command::Verify { suites, count } => verify(cli, suites, *count),
        Command::Report { paths } => report(cli, paths),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("radial-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
