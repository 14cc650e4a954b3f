//! Execute one scenario and check its assertions.

use std::collections::BTreeMap;

use radial_lab::capacity::{capacity, interval_capacity, RadialSet};
use radial_lab::energy::{
    aubin_mabuchi, class_membership, energy_of_rooftop_check, energy_report, h_schedule, profile_class_membership,
    profile_energy, EnergyValue, Weight,
};
use radial_lab::envelope::{
    partition_residual_shifted, rooftop, rooftop_by_projection, rooftop_singularity, singularity_rooftop_exact,
};
use radial_lab::geodesic::{build_geodesic, endpoint_limit, End, GeodesicStatus};
use radial_lab::metric::{
    chen_integral, complete_cauchy, contraction_check, distance, dual_l2, has_smooth_dual, monotone_limit_distance,
    npc_check, pythagoras_check, sandwich_check,
};
use radial_lab::{Fixture, LabError, ModelConfig, RadialPotential};
use serde::Serialize;
use serde_json::Value;

use crate::emit::{as_f64, number, svg_plot, Table};
use crate::error::{CliError, CliResult};
use crate::grid::GridSpec;
use crate::scenario::{energy_key, finite_key, margin_key, Assertion, Endpoint, Operation, Scenario};

/// Everything an operation produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub quantities: BTreeMap<String, Value>,
    /// File stem and CSV text.
    pub tables: Vec<(String, String)>,
    pub plot: Option<String>,
}

impl Outcome {
    fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.quantities.insert(key.to_string(), value.into());
    }

    fn num(&mut self, key: &str, x: f64) {
        self.quantities.insert(key.to_string(), number(x));
    }

    fn maybe(&mut self, key: &str, x: Option<f64>) {
        self.quantities.insert(key.to_string(), x.map_or(Value::Null, number));
    }

    fn table(&mut self, stem: &str, table: &Table) {
        self.tables.push((stem.to_string(), table.to_csv()));
    }
}

fn energy_value(v: EnergyValue) -> Value {
    match v {
        EnergyValue::Finite(x) => number(x),
        EnergyValue::MinusInfinity => Value::from("-inf"),
    }
}

fn weights(ps: &[f64]) -> radial_lab::Result<Vec<Weight>> {
    ps.iter().map(|&p| Weight::new(p)).collect()
}

/// Short name of an error variant, as used by `expect_error`.
pub fn error_kind(e: &LabError) -> &'static str {
    match e {
        LabError::InvalidConfig(_) => "invalid_config",
        LabError::InvariantViolation(_) => "invariant",
        LabError::Argument(_) => "argument",
        LabError::GridMismatch => "grid_mismatch",
        LabError::MinusInfinity => "minus_infinity",
        LabError::State(_) => "state",
        LabError::Class(_) => "class",
        LabError::Consistency(_) => "consistency",
        LabError::NotCauchy { .. } => "not_cauchy",
    }
}

fn profile_table(cfg: &ModelConfig, named: &[(String, &RadialPotential)]) -> Table {
    let s = cfg.primal_grid();
    let mut header = vec!["s".to_string()];
    header.extend(named.iter().map(|(n, _)| n.clone()));
    let us: Vec<Vec<f64>> = named.iter().map(|(_, u)| u.u()).collect();
    let mut columns: Vec<&[f64]> = vec![&s];
    columns.extend(us.iter().map(Vec::as_slice));
    Table::from_columns(header, &columns)
}

/// Run `op` with fixtures already built on one grid.
pub fn execute(
    op: &Operation,
    fixtures: &BTreeMap<String, Fixture>,
    built: &BTreeMap<String, RadialPotential>,
    cfg: ModelConfig,
) -> radial_lab::Result<Outcome> {
    let get = |id: &str| &built[id];
    let mut out = Outcome::default();
    match op {
        Operation::Rooftop { u0, u1 } => {
            let (a, b) = (get(u0), get(u1));
            let p = rooftop(a, b)?;
            let (neg, pos) = p.lelong();
            out.set("full_mass", p.is_full_mass());
            out.num("lelong_neg", neg);
            out.num("lelong_pos", pos);
            let gap = rooftop_by_projection(a, b).and_then(|q| p.sup_distance(&q)).ok();
            out.maybe("projection_gap", gap);
            let named = [("u0".to_string(), a), ("u1".to_string(), b), ("rooftop".to_string(), &p)];
            out.table("rooftop", &profile_table(a.config(), &named));
        }
        Operation::SingularityRooftop { u0, u1 } => {
            let (a, b) = (get(u0), get(u1));
            let r = rooftop_singularity(a, b)?;
            let exact = singularity_rooftop_exact(a, b)?;
            out.set("converged", r.converged);
            out.num("shift", r.shift);
            out.set("steps", r.steps);
            out.num("last_change", r.last_change);
            out.set(
                "equals_u0",
                r.potential.sup_distance(a)? <= 1e-6 * (1.0 + a.sup_abs_phi()),
            );
            out.num("exact_gap", r.potential.sup_distance(&exact)?);
            out.set("u1_full_mass", b.is_full_mass());
            let named = [("u0".to_string(), a), ("envelope".to_string(), &r.potential)];
            out.table("envelope", &profile_table(a.config(), &named));
        }
        Operation::Partition { u0, u1, tau } => {
            let r = partition_residual_shifted(get(u0), get(u1), *tau)?;
            let m = get(u0).config().dual_points as f64;
            out.num("lhs_mass", r.lhs_mass);
            out.num("mass_on_lambda0", r.mass_on_lambda0);
            out.num("mass_on_lambda1", r.mass_on_lambda1);
            out.num("overlap_mass", r.overlap_mass);
            out.num("mass_excess", r.mass_excess);
            out.num("residual", r.residual);
            out.set("contact_boundaries", r.contact_boundaries);
            out.num("residual_bound", 2.0 / m * r.contact_boundaries.max(1) as f64);
            out.tables.push(("partition".into(), r.to_csv()));
        }
        Operation::Geodesic { u0, u1, ts } => {
            let (a, b) = (get(u0), get(u1));
            let g = build_geodesic(a, b)?;
            out.set(
                "status",
                serde_json::to_value(g.status()).unwrap_or(Value::Null),
            );
            out.maybe("distance", dual_l2(a, b).ok());
            let finite = g.status() == GeodesicStatus::Finite;
            out.maybe("velocity_energy_t0", finite.then(|| g.velocity_energy(0.0).ok()).flatten());
            out.maybe("velocity_energy_t1", finite.then(|| g.velocity_energy(1.0).ok()).flatten());
            let path = ts
                .iter()
                .map(|&t| g.eval(t).map(|u| (format!("t={t}"), u)))
                .collect::<radial_lab::Result<Vec<_>>>();
            if let Ok(path) = path {
                let named: Vec<(String, &RadialPotential)> = path.iter().map(|(n, u)| (n.clone(), u)).collect();
                let table = profile_table(a.config(), &named);
                let xs: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
                let series: Vec<(String, Vec<f64>)> = path.iter().map(|(n, u)| (n.clone(), u.u())).collect();
                out.plot = Some(svg_plot("geodesic profiles u_t(s)", &xs, &series));
                out.table("geodesic", &table);
            }
        }
        Operation::Endpoint { u0, u1, end, epsilons } => {
            let g = build_geodesic(get(u0), get(u1))?;
            let end = match end {
                Endpoint::Start => End::Start,
                Endpoint::Finish => End::Finish,
            };
            let r = endpoint_limit(&g, end, epsilons)?;
            out.set("attained_by_capacity", r.attained_by_capacity);
            out.set("attained_by_envelope", r.attained_by_envelope);
            out.set("agree", r.agree);
            out.num("envelope_gap", r.envelope_gap);
            let last = r.capacities.iter().filter_map(|c| c.last().copied()).fold(0.0, f64::max);
            out.num("final_capacity", last);
            let mut header = vec!["distance_to_end".to_string()];
            header.extend(r.epsilons.iter().map(|e| format!("cap_eps={e}")));
            let mut columns: Vec<&[f64]> = vec![&r.schedule];
            columns.extend(r.capacities.iter().map(Vec::as_slice));
            out.table("endpoint", &Table::from_columns(header, &columns));
        }
        Operation::Distance { u0, u1 } => {
            let (a, b) = (get(u0), get(u1));
            let d = distance(a, b)?;
            out.num("dual_l2", dual_l2(a, b)?);
            out.set("smooth", has_smooth_dual(a) && has_smooth_dual(b));
            out.maybe("cross_check_delta", d.cross_check_delta);
            let g = build_geodesic(a, b)?;
            for (key, t) in [("chen_t0", 0.0), ("chen_half", 0.5), ("chen_t1", 1.0)] {
                out.maybe(key, chen_integral(&g, t).ok());
            }
        }
        Operation::Energy { u, weights: ps, exact } => {
            let v = get(u);
            out.set("aubin_mabuchi", energy_value(aubin_mabuchi(v)));
            let ws = weights(ps)?;
            if *exact {
                let profile = fixtures[u.as_str()]
                    .profile()
                    .ok_or_else(|| LabError::Argument(format!("fixture {u:?} has no closed-form profile")))?;
                let mut table = Table::new(std::iter::once("h".to_string()).chain(ws.iter().map(|w| w.to_string())));
                let mut schedules = Vec::new();
                for w in &ws {
                    let e = profile_energy(profile.as_ref(), *w);
                    out.set(&energy_key(w.p()), energy_value(e.value));
                    schedules.push(e.schedule);
                }
                for (k, h) in h_schedule().into_iter().enumerate() {
                    let mut row = vec![h];
                    row.extend(schedules.iter().map(|s| s.get(k).copied().unwrap_or(f64::NAN)));
                    table.push(row);
                }
                out.table("energy_schedule", &table);
            } else {
                let mut table = Table::new(std::iter::once("h".to_string()).chain(ws.iter().map(|w| w.to_string())));
                let mut schedules = Vec::new();
                for w in &ws {
                    let r = energy_report(v, *w)?;
                    out.set(&energy_key(w.p()), energy_value(r.value));
                    schedules.push(r.cutoff_path);
                }
                for (k, h) in h_schedule().into_iter().enumerate() {
                    let mut row = vec![h];
                    row.extend(schedules.iter().map(|s| s.get(k).copied().unwrap_or(f64::NAN)));
                    table.push(row);
                }
                out.table("energy_schedule", &table);
            }
        }
        Operation::Class { u, weights: ps, exact } => {
            let ws = weights(ps)?;
            let record = if *exact {
                let profile = fixtures[u.as_str()]
                    .profile()
                    .ok_or_else(|| LabError::Argument(format!("fixture {u:?} has no closed-form profile")))?;
                profile_class_membership(profile.as_ref(), &ws)
            } else {
                class_membership(get(u), &ws)?
            };
            out.set("in_e", record.in_e);
            out.num("lelong_neg", record.lelong.0);
            out.num("lelong_pos", record.lelong.1);
            for (p, finite) in record.finite {
                out.set(&finite_key(p), finite);
            }
        }
        Operation::Capacity { intervals } => {
            let spans: Vec<(f64, f64)> = intervals
                .iter()
                .map(|[a, b]| (a.unwrap_or(f64::NEG_INFINITY), b.unwrap_or(f64::INFINITY)))
                .collect();
            let set = RadialSet::new(spans.clone())?;
            out.num("capacity", capacity(&set, cfg)?);
            out.maybe(
                "closed_form",
                match spans.as_slice() {
                    [(a, b)] => Some(interval_capacity(*a, *b)),
                    _ => None,
                },
            );
        }
        Operation::Pythagoras { u0, u1 } => {
            let p = pythagoras_check(get(u0), get(u1))?;
            out.num("d_sq", p.d_sq);
            out.num("d0_sq", p.d0_sq);
            out.num("d1_sq", p.d1_sq);
            out.num("residual", p.residual);
            out.num("scaled_residual", p.residual / (1.0 + p.d_sq));
        }
        Operation::Contraction { u, v, w } => {
            out.num("margin", contraction_check(get(u), get(v), get(w))?);
        }
        Operation::Npc { p, q, r, lambda } => {
            let n = npc_check(get(p), get(q), get(r), *lambda)?;
            out.num("lhs", n.lhs);
            out.num("rhs", n.rhs);
            out.num("margin", n.margin);
            out.num("scaled_margin", n.margin / n.scale);
        }
        Operation::Sandwich { u, v } => {
            let s = sandwich_check(get(u), get(v))?;
            out.num("lower", s.lower);
            out.num("distance_sq", s.distance_sq);
            out.num("upper", s.upper);
            out.num("lower_margin", s.lower_margin);
            out.num("upper_margin", s.upper_margin);
        }
        Operation::Completeness { limit, toward, terms } => {
            let target = get(limit);
            let g = build_geodesic(target, get(toward))?;
            let seq = (0..*terms)
                .map(|k| g.eval(2f64.powi(-(k as i32))))
                .collect::<radial_lab::Result<Vec<_>>>()?;
            let c = complete_cauchy(&seq)?;
            out.num("limit_distance", dual_l2(&c.limit, target)?);
            out.num("fitted_constant", c.fitted_constant);
            out.set("tail_start", c.tail_start);
            out.num("halving_margin", c.halving_margin);
            let ks: Vec<f64> = (0..c.distances.len()).map(|k| k as f64).collect();
            out.table(
                "completeness",
                &Table::from_columns(vec!["k".into(), "distance_to_limit".into()], &[&ks, &c.distances]),
            );
        }
        Operation::MonotoneCutoffs { u, levels } => {
            let v = get(u);
            let seq = levels
                .iter()
                .map(|&h| v.cutoff(h))
                .collect::<radial_lab::Result<Vec<_>>>()?;
            let m = monotone_limit_distance(&seq, v)?;
            out.set("direction", serde_json::to_value(m.direction).unwrap_or(Value::Null));
            out.set("nonincreasing", m.nonincreasing);
            out.num("last", m.last);
            out.table(
                "cutoff_distances",
                &Table::from_columns(vec!["level".into(), "distance".into()], &[levels, &m.distances]),
            );
        }
        Operation::EnergyRooftop { u0, u1, weights: ps } => {
            let mut worst = f64::INFINITY;
            for w in weights(ps)? {
                let m = energy_of_rooftop_check(get(u0), get(u1), w)?;
                out.num(&margin_key(w.p()), m.margin);
                worst = worst.min(m.margin);
            }
            out.num("min_margin", worst);
        }
    }
    Ok(out)
}

/// One assertion evaluated against the outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub quantity: String,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equals: Option<Value>,
    /// Distance to the nearest violated or active bound; negative on failure.
    pub margin: Option<Value>,
    pub pass: bool,
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (as_f64(a), as_f64(b), a, b) {
        (Some(x), Some(y), Value::Number(_), Value::Number(_)) => {
            x == y || (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
        }
        _ => a == b,
    }
}

pub fn check(a: &Assertion, quantities: &BTreeMap<String, Value>) -> Check {
    let value = quantities.get(&a.quantity).cloned().unwrap_or(Value::Null);
    let x = as_f64(&value);
    let mut pass = true;
    let mut margin: Option<f64> = None;
    let mut tighten = |m: f64| margin = Some(margin.map_or(m, |old: f64| old.min(m)));
    if let Some(lo) = a.min {
        match x {
            Some(x) => {
                tighten(if x == lo { 0.0 } else { x - lo });
                pass &= x >= lo;
            }
            None => pass = false,
        }
    }
    if let Some(hi) = a.max {
        match x {
            Some(x) => {
                tighten(if x == hi { 0.0 } else { hi - x });
                pass &= x <= hi;
            }
            None => pass = false,
        }
    }
    if let Some(want) = &a.equals {
        pass &= values_equal(&value, want);
    }
    Check {
        quantity: a.quantity.clone(),
        value,
        min: a.min,
        max: a.max,
        equals: a.equals.clone(),
        margin: margin.map(number),
        pass,
    }
}

/// Result of a scenario run, ready to emit.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub name: String,
    pub operation: &'static str,
    pub grid: GridSpec,
    pub seed: u64,
    pub error: Option<String>,
    pub error_kind: Option<&'static str>,
    pub outcome: Outcome,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Grid sources, weakest first: defaults, `--config`, `--grid`, then the
/// scenario's own `grid` block.
#[derive(Debug, Clone, Copy, Default)]
pub struct Settings {
    pub base: ModelConfig,
    pub grid: GridSpec,
    pub seed: u64,
}

impl Settings {
    pub fn config(&self) -> CliResult<ModelConfig> {
        self.grid.over(self.base)
    }
}

pub fn run_scenario(sc: &Scenario, settings: &Settings) -> CliResult<ScenarioRun> {
    let cfg = settings.config()?;
    let cfg = match &sc.grid {
        Some(g) => g.over(cfg).map_err(|e| CliError::schema("/grid", e))?,
        None => cfg,
    };
    let seed = sc.seed.unwrap_or(settings.seed);
    let fixtures: BTreeMap<String, Fixture> = sc
        .fixtures
        .iter()
        .map(|(id, spec)| (id.clone(), spec.resolve(id, seed)))
        .collect();
    let result = fixtures
        .iter()
        .map(|(id, f)| f.build(cfg).map(|u| (id.clone(), u)))
        .collect::<radial_lab::Result<BTreeMap<_, _>>>()
        .and_then(|built| execute(&sc.operation, &fixtures, &built, cfg));
    let (outcome, error, error_kind) = match result {
        Ok(o) => (o, None, None),
        Err(e) => (Outcome::default(), Some(e.to_string()), Some(error_kind(&e))),
    };
    let checks: Vec<Check> = sc.assertions.iter().map(|a| check(a, &outcome.quantities)).collect();
    let pass = match (&sc.expect_error, error_kind) {
        (Some(want), got) => got == Some(want.as_str()),
        (None, Some(_)) => false,
        (None, None) => checks.iter().all(|c| c.pass),
    };
    Ok(ScenarioRun {
        name: sc.name.clone(),
        operation: sc.operation.name(),
        grid: GridSpec::of(&cfg),
        seed,
        error,
        error_kind,
        outcome,
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assertion(min: Option<f64>, max: Option<f64>) -> Assertion {
        Assertion {
            quantity: "q".into(),
            min,
            max,
            equals: None,
        }
    }

    #[test]
    fn margins_are_signed() {
        let q = BTreeMap::from([("q".to_string(), number(0.5))]);
        let c = check(&assertion(Some(0.0), Some(0.6)), &q);
        assert!(c.pass);
        assert_eq!(c.margin, Some(number(0.1)));
        let c = check(&assertion(Some(0.75), None), &q);
        assert!(!c.pass);
        assert_eq!(c.margin, Some(number(-0.25)));
    }

    #[test]
    fn infinite_values_compare_as_numbers() {
        let q = BTreeMap::from([("q".to_string(), Value::from("-inf"))]);
        assert!(check(&assertion(None, Some(-1e12)), &q).pass);
        assert!(!check(&assertion(Some(0.0), None), &q).pass);
        let missing = BTreeMap::new();
        assert!(!check(&assertion(Some(0.0), None), &missing).pass);
    }

    #[test]
    fn equality_on_booleans_and_strings() {
        let q = BTreeMap::from([("q".to_string(), Value::from(true))]);
        let a = Assertion {
            quantity: "q".into(),
            min: None,
            max: None,
            equals: Some(Value::from(true)),
        };
        assert!(check(&a, &q).pass);
        assert!(!check(&Assertion { equals: Some(Value::from(false)), ..a }, &q).pass);
    }
}
