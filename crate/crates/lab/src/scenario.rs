//! Scenario files: fixtures, one operation, and assertions on its output.

use std::collections::BTreeMap;
use std::path::Path;

use radial_lab::{seeded_rng, Fixture};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::grid::GridSpec;

pub const SCENARIO_SCHEMA: &str = "radial-lab/scenario/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomFamily {
    Tent,
    SmoothDual,
    Bounded,
}

/// A fixture given explicitly or drawn from a seeded family.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FixtureSpec {
    Random {
        random: RandomFamily,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit(Fixture),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomSpec {
    random: RandomFamily,
    #[serde(default)]
    seed: Option<u64>,
}

// Dispatch on the `random` key so errors name the fields of the intended form.
impl<'de> Deserialize<'de> for FixtureSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = Value::deserialize(d)?;
        if value.get("random").is_some() {
            let r = RandomSpec::deserialize(value).map_err(D::Error::custom)?;
            Ok(FixtureSpec::Random {
                random: r.random,
                seed: r.seed,
            })
        } else {
            Fixture::deserialize(value).map(FixtureSpec::Explicit).map_err(D::Error::custom)
        }
    }
}

impl FixtureSpec {
    /// Command-line form: inline JSON, `@path` to a JSON file, or a bare
    /// kind name such as `fubini_study`.
    pub fn parse_arg(text: &str) -> CliResult<Self> {
        let json = if let Some(path) = text.strip_prefix('@') {
            std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?
        } else if text.trim_start().starts_with('{') {
            text.to_string()
        } else {
            serde_json::json!({ "kind": text }).to_string()
        };
        serde_json::from_str(&json).map_err(|e| CliError::Usage(format!("fixture {text:?}: {e}")))
    }

    /// Resolve to a concrete fixture; unseeded draws use `default_seed`
    /// mixed with the fixture id.
    pub fn resolve(&self, id: &str, default_seed: u64) -> Fixture {
        match self {
            FixtureSpec::Explicit(f) => f.clone(),
            FixtureSpec::Random { random, seed } => {
                let seed = seed.unwrap_or_else(|| default_seed ^ fnv1a(id));
                let mut rng = seeded_rng(seed);
                match random {
                    RandomFamily::Tent => Fixture::random_tent(&mut rng),
                    RandomFamily::SmoothDual => Fixture::random_smooth_dual(&mut rng),
                    RandomFamily::Bounded => Fixture::random_bounded(&mut rng),
                }
            }
        }
    }
}

fn fnv1a(text: &str) -> u64 {
    text.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Start,
    Finish,
}

fn default_ts() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn default_epsilons() -> Vec<f64> {
    vec![0.5, 0.1]
}

fn default_weights() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

/// Interval endpoints; `null` stands for an infinite end.
pub type IntervalSpec = [Option<f64>; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    Rooftop {
        u0: String,
        u1: String,
    },
    SingularityRooftop {
        u0: String,
        u1: String,
    },
    Partition {
        u0: String,
        u1: String,
        #[serde(default)]
        tau: f64,
    },
    Geodesic {
        u0: String,
        u1: String,
        #[serde(default = "default_ts")]
        ts: Vec<f64>,
    },
    Endpoint {
        u0: String,
        u1: String,
        end: Endpoint,
        #[serde(default = "default_epsilons")]
        epsilons: Vec<f64>,
    },
    Distance {
        u0: String,
        u1: String,
    },
    Energy {
        u: String,
        #[serde(default = "default_weights")]
        weights: Vec<f64>,
        /// Integrate the closed-form profile instead of the grid potential.
        #[serde(default)]
        exact: bool,
    },
    Class {
        u: String,
        #[serde(default = "default_weights")]
        weights: Vec<f64>,
        #[serde(default)]
        exact: bool,
    },
    Capacity {
        intervals: Vec<IntervalSpec>,
    },
    Pythagoras {
        u0: String,
        u1: String,
    },
    Contraction {
        u: String,
        v: String,
        w: String,
    },
    Npc {
        p: String,
        q: String,
        r: String,
        lambda: f64,
    },
    Sandwich {
        u: String,
        v: String,
    },
    /// Cauchy sequence `u_k` on the geodesic from `limit` to `toward` at
    /// `t = 2^-k`, passed through the iterated-rooftop construction.
    Completeness {
        limit: String,
        toward: String,
        #[serde(default = "default_terms")]
        terms: usize,
    },
    MonotoneCutoffs {
        u: String,
        levels: Vec<f64>,
    },
    EnergyRooftop {
        u0: String,
        u1: String,
        #[serde(default = "default_weights")]
        weights: Vec<f64>,
    },
}

fn default_terms() -> usize {
    20
}

fn weight_label(p: f64) -> String {
    format!("{p}")
}

pub fn energy_key(p: f64) -> String {
    format!("energy_p{}", weight_label(p))
}

pub fn finite_key(p: f64) -> String {
    format!("finite_p{}", weight_label(p))
}

pub fn margin_key(p: f64) -> String {
    format!("margin_p{}", weight_label(p))
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Rooftop { .. } => "rooftop",
            Operation::SingularityRooftop { .. } => "singularity_rooftop",
            Operation::Partition { .. } => "partition",
            Operation::Geodesic { .. } => "geodesic",
            Operation::Endpoint { .. } => "endpoint",
            Operation::Distance { .. } => "distance",
            Operation::Energy { .. } => "energy",
            Operation::Class { .. } => "class",
            Operation::Capacity { .. } => "capacity",
            Operation::Pythagoras { .. } => "pythagoras",
            Operation::Contraction { .. } => "contraction",
            Operation::Npc { .. } => "npc",
            Operation::Sandwich { .. } => "sandwich",
            Operation::Completeness { .. } => "completeness",
            Operation::MonotoneCutoffs { .. } => "monotone_cutoffs",
            Operation::EnergyRooftop { .. } => "energy_rooftop",
        }
    }

    /// Fixture references with their field names.
    pub fn references(&self) -> Vec<(&'static str, &str)> {
        match self {
            Operation::Rooftop { u0, u1 }
            | Operation::SingularityRooftop { u0, u1 }
            | Operation::Partition { u0, u1, .. }
            | Operation::Geodesic { u0, u1, .. }
            | Operation::Endpoint { u0, u1, .. }
            | Operation::Distance { u0, u1 }
            | Operation::Pythagoras { u0, u1 }
            | Operation::EnergyRooftop { u0, u1, .. } => vec![("u0", u0), ("u1", u1)],
            Operation::Energy { u, .. } | Operation::Class { u, .. } | Operation::MonotoneCutoffs { u, .. } => {
                vec![("u", u)]
            }
            Operation::Capacity { .. } => vec![],
            Operation::Contraction { u, v, w } => vec![("u", u), ("v", v), ("w", w)],
            Operation::Npc { p, q, r, .. } => vec![("p", p), ("q", q), ("r", r)],
            Operation::Sandwich { u, v } => vec![("u", u), ("v", v)],
            Operation::Completeness { limit, toward, .. } => vec![("limit", limit), ("toward", toward)],
        }
    }

    /// Names of the quantities the operation reports.
    pub fn quantities(&self) -> Vec<String> {
        let fixed: &[&str] = match self {
            Operation::Rooftop { .. } => &["full_mass", "lelong_neg", "lelong_pos", "projection_gap"],
            Operation::SingularityRooftop { .. } => {
                &["converged", "shift", "steps", "last_change", "equals_u0", "exact_gap", "u1_full_mass"]
            }
            Operation::Partition { .. } => &[
                "lhs_mass",
                "mass_on_lambda0",
                "mass_on_lambda1",
                "overlap_mass",
                "mass_excess",
                "residual",
                "contact_boundaries",
                "residual_bound",
            ],
            Operation::Geodesic { .. } => &["status", "distance", "velocity_energy_t0", "velocity_energy_t1"],
            Operation::Endpoint { .. } => {
                &["attained_by_capacity", "attained_by_envelope", "agree", "envelope_gap", "final_capacity"]
            }
            Operation::Distance { .. } => {
                &["dual_l2", "smooth", "cross_check_delta", "chen_t0", "chen_half", "chen_t1"]
            }
            Operation::Energy { .. } => &["aubin_mabuchi"],
            Operation::Class { .. } => &["in_e", "lelong_neg", "lelong_pos"],
            Operation::Capacity { .. } => &["capacity", "closed_form"],
            Operation::Pythagoras { .. } => &["d_sq", "d0_sq", "d1_sq", "residual", "scaled_residual"],
            Operation::Contraction { .. } => &["margin"],
            Operation::Npc { .. } => &["lhs", "rhs", "margin", "scaled_margin"],
            Operation::Sandwich { .. } => &["lower", "distance_sq", "upper", "lower_margin", "upper_margin"],
            Operation::Completeness { .. } => &["limit_distance", "fitted_constant", "tail_start", "halving_margin"],
            Operation::MonotoneCutoffs { .. } => &["direction", "nonincreasing", "last"],
            Operation::EnergyRooftop { .. } => &["min_margin"],
        };
        let mut names: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
        match self {
            Operation::Energy { weights, .. } => names.extend(weights.iter().map(|&p| energy_key(p))),
            Operation::Class { weights, .. } => names.extend(weights.iter().map(|&p| finite_key(p))),
            Operation::EnergyRooftop { weights, .. } => names.extend(weights.iter().map(|&p| margin_key(p))),
            _ => {}
        }
        names
    }

    fn check(&self) -> CliResult<()> {
        let bad = |field: &str, msg: &str| Err(CliError::schema(format!("/operation/{field}"), msg));
        let weights_ok = |w: &[f64]| w.iter().all(|p| *p > 0.0 && p.is_finite());
        match self {
            Operation::Geodesic { ts, .. } if ts.is_empty() || ts.iter().any(|t| !(0.0..=1.0).contains(t)) => {
                return bad("ts", "times must lie in [0, 1]");
            }
            Operation::Endpoint { epsilons, .. } if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) => {
                return bad("epsilons", "need positive epsilons");
            }
            Operation::Energy { weights, .. }
            | Operation::Class { weights, .. }
            | Operation::EnergyRooftop { weights, .. }
                if !weights_ok(weights) =>
            {
                return bad("weights", "weight exponents must be positive");
            }
            Operation::Npc { lambda, .. } if !(0.0..=1.0).contains(lambda) => {
                return bad("lambda", "lambda must lie in [0, 1]");
            }
            Operation::Completeness { terms, .. } if *terms < 4 => {
                return bad("terms", "need at least 4 terms");
            }
            Operation::MonotoneCutoffs { levels, .. } if levels.is_empty() || levels.iter().any(|h| !(*h >= 0.0)) => {
                return bad("levels", "cutoff levels must be nonnegative");
            }
            Operation::Capacity { intervals } => {
                for (k, [a, b]) in intervals.iter().enumerate() {
                    let lo = a.unwrap_or(f64::NEG_INFINITY);
                    let hi = b.unwrap_or(f64::INFINITY);
                    if !(lo < hi) {
                        return bad(&format!("intervals/{k}"), "interval must have lo < hi");
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Bound on one reported quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub quantity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    pub description: Option<String>,
    pub grid: Option<GridSpec>,
    pub seed: Option<u64>,
    pub fixtures: BTreeMap<String, FixtureSpec>,
    pub operation: Operation,
    /// Error kind the operation must fail with, e.g. `class`.
    pub expect_error: Option<String>,
    pub assertions: Vec<Assertion>,
}

fn field<T: DeserializeOwned>(doc: &Value, pointer: &str) -> CliResult<Option<T>> {
    match doc.pointer(pointer) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => T::deserialize(v).map(Some).map_err(|e| CliError::schema(pointer, e)),
    }
}

fn required<T: DeserializeOwned>(doc: &Value, pointer: &str) -> CliResult<T> {
    field(doc, pointer)?.ok_or_else(|| CliError::schema(pointer, "missing field"))
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

const KNOWN_KEYS: [&str; 9] = [
    "schema",
    "name",
    "description",
    "grid",
    "seed",
    "fixtures",
    "operation",
    "expect_error",
    "assert",
];

pub const ERROR_KINDS: [&str; 9] = [
    "invalid_config",
    "invariant",
    "argument",
    "grid_mismatch",
    "minus_infinity",
    "state",
    "class",
    "consistency",
    "not_cauchy",
];

impl Scenario {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| CliError::schema("", e))?;
        let Value::Object(map) = &doc else {
            return Err(CliError::schema("", "scenario must be a JSON object"));
        };
        if let Some(key) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::schema(format!("/{}", escape(key)), "unknown field"));
        }
        let schema: String = required(&doc, "/schema")?;
        if schema != SCENARIO_SCHEMA {
            return Err(CliError::schema(
                "/schema",
                format!("unsupported schema {schema:?}, expected {SCENARIO_SCHEMA:?}"),
            ));
        }
        let name: String = required(&doc, "/name")?;
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(CliError::schema("/name", "name must be nonempty and free of path separators"));
        }
        let raw: BTreeMap<String, Value> = required(&doc, "/fixtures")?;
        let mut fixtures = BTreeMap::new();
        for (id, value) in raw {
            let pointer = format!("/fixtures/{}", escape(&id));
            let spec = FixtureSpec::deserialize(&value).map_err(|e| CliError::schema(&pointer, e))?;
            if let FixtureSpec::Explicit(f) = &spec {
                f.validate().map_err(|e| CliError::schema(&pointer, e))?;
            }
            fixtures.insert(id, spec);
        }
        let operation: Operation = required(&doc, "/operation")?;
        operation.check()?;
        for (fieldname, id) in operation.references() {
            if !fixtures.contains_key(id) {
                return Err(CliError::schema(
                    format!("/operation/{fieldname}"),
                    format!("unknown fixture {id:?}"),
                ));
            }
        }
        let expect_error: Option<String> = field(&doc, "/expect_error")?;
        if let Some(kind) = &expect_error {
            if !ERROR_KINDS.contains(&kind.as_str()) {
                return Err(CliError::schema("/expect_error", format!("unknown error kind {kind:?}")));
            }
        }
        let raw: Vec<Value> = field(&doc, "/assert")?.unwrap_or_default();
        if expect_error.is_some() && !raw.is_empty() {
            return Err(CliError::schema("/assert", "a scenario that expects an error has no quantities to assert"));
        }
        let known = operation.quantities();
        let mut assertions = Vec::with_capacity(raw.len());
        for (k, value) in raw.iter().enumerate() {
            let pointer = format!("/assert/{k}");
            let a = Assertion::deserialize(value).map_err(|e| CliError::schema(&pointer, e))?;
            if !known.contains(&a.quantity) {
                return Err(CliError::schema(
                    format!("{pointer}/quantity"),
                    format!("{} does not report {:?}; known: {}", operation.name(), a.quantity, known.join(", ")),
                ));
            }
            if a.min.is_none() && a.max.is_none() && a.equals.is_none() {
                return Err(CliError::schema(&pointer, "need at least one of min, max, equals"));
            }
            for (key, bound) in [("min", a.min), ("max", a.max)] {
                if bound.is_some_and(|b| b.is_nan()) {
                    return Err(CliError::schema(format!("{pointer}/{key}"), "bound is not a number"));
                }
            }
            if let (Some(lo), Some(hi)) = (a.min, a.max) {
                if lo > hi {
                    return Err(CliError::schema(&pointer, "min exceeds max"));
                }
            }
            assertions.push(a);
        }
        Ok(Scenario {
            schema,
            name,
            description: field(&doc, "/description")?,
            grid: field(&doc, "/grid")?,
            seed: field(&doc, "/seed")?,
            fixtures,
            operation,
            expect_error,
            assertions,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Value {
        serde_json::json!({
            "schema": SCENARIO_SCHEMA,
            "name": "t",
            "fixtures": { "a": { "kind": "fubini_study" }, "b": { "random": "tent", "seed": 3 } },
            "operation": { "op": "distance", "u0": "a", "u1": "b" },
            "assert": [ { "quantity": "dual_l2", "min": 0.0 } ]
        })
    }

    fn pointer_of(doc: Value) -> String {
        match Scenario::from_json(&doc.to_string()) {
            Err(CliError::Schema { pointer, .. }) => pointer,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn parses_a_valid_scenario() {
        let s = Scenario::from_json(&base().to_string()).unwrap();
        assert_eq!(s.operation.name(), "distance");
        assert_eq!(s.fixtures.len(), 2);
        assert_eq!(
            s.fixtures["b"].resolve("b", 0),
            s.fixtures["b"].resolve("other", 99),
            "explicit seeds ignore the id"
        );
    }

    #[test]
    fn errors_point_at_the_offending_field() {
        let mut d = base();
        d["schema"] = "v0".into();
        assert_eq!(pointer_of(d), "/schema");
        let mut d = base();
        d["operation"]["u1"] = "missing".into();
        assert_eq!(pointer_of(d), "/operation/u1");
        let mut d = base();
        d["fixtures"]["a"] = serde_json::json!({ "kind": "alpha_tail", "alpha": 2.0, "c": 1.0 });
        assert_eq!(pointer_of(d), "/fixtures/a");
        let mut d = base();
        d["assert"][0]["quantity"] = "nope".into();
        assert_eq!(pointer_of(d), "/assert/0/quantity");
        let mut d = base();
        d["extra"] = 1.into();
        assert_eq!(pointer_of(d), "/extra");
        assert_eq!(pointer_of(serde_json::json!([1, 2])), "");
    }

    #[test]
    fn unseeded_draws_depend_on_id() {
        let spec = FixtureSpec::Random {
            random: RandomFamily::Bounded,
            seed: None,
        };
        assert_eq!(spec.resolve("a", 5), spec.resolve("a", 5));
        assert_ne!(spec.resolve("a", 5), spec.resolve("b", 5));
    }

    #[test]
    fn command_line_fixtures() {
        assert_eq!(
            FixtureSpec::parse_arg("green_normalized").unwrap(),
            FixtureSpec::Explicit(Fixture::GreenNormalized)
        );
        assert!(matches!(
            FixtureSpec::parse_arg(r#"{"random":"smooth_dual"}"#).unwrap(),
            FixtureSpec::Random { .. }
        ));
        assert!(FixtureSpec::parse_arg("no_such_kind").is_err());
    }
}
