//! Randomised property suites with a worst-case margin each.

use std::fmt;
use std::str::FromStr;

use radial_lab::geodesic::build_geodesic;
use radial_lab::metric::{complete_cauchy, contraction_check, dual_l2, npc_check, pythagoras_check};
use radial_lab::{seeded_rng, Fixture, ModelConfig, RadialPotential, Result};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Pythagoras,
    Contraction,
    Npc,
    Completeness,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Pythagoras, Suite::Contraction, Suite::Npc, Suite::Completeness];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pythagoras => "pythagoras",
            Suite::Contraction => "contraction",
            Suite::Npc => "npc",
            Suite::Completeness => "completeness",
        }
    }

    /// Largest allowed violation of the property.
    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Completeness => 1e-3,
            _ => 1e-6,
        }
    }

    fn margin(self, rng: &mut ChaCha8Rng, cfg: ModelConfig) -> Result<f64> {
        let mut draw = || Fixture::random_bounded(rng).build(cfg);
        let tol = self.tolerance();
        Ok(match self {
            Suite::Pythagoras => {
                let p = pythagoras_check(&draw()?, &draw()?)?;
                tol - p.residual / (1.0 + p.d_sq)
            }
            Suite::Contraction => tol + contraction_check(&draw()?, &draw()?, &draw()?)?,
            Suite::Npc => {
                let n = npc_check(&draw()?, &draw()?, &draw()?, 0.5)?;
                tol + n.margin / n.scale
            }
            Suite::Completeness => {
                let (limit, toward) = (draw()?, draw()?);
                let g = build_geodesic(&limit, &toward)?;
                let seq = (0..20)
                    .map(|k| g.eval(2f64.powi(-k)))
                    .collect::<Result<Vec<RadialPotential>>>()?;
                tol - dual_l2(&complete_cauchy(&seq)?.limit, &limit)?
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}; expected one of pythagoras, contraction, npc, completeness"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub property: Suite,
    pub count: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Smallest `tolerance - violation` over all draws.
    pub worst_margin: f64,
    pub pass: bool,
}

pub fn run_suite(suite: Suite, count: usize, seed: u64, cfg: ModelConfig) -> Result<SuiteResult> {
    let mut rng = seeded_rng(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        worst = worst.min(suite.margin(&mut rng, cfg)?);
    }
    Ok(SuiteResult {
        property: suite,
        count,
        seed,
        tolerance: suite.tolerance(),
        worst_margin: worst,
        pass: worst >= 0.0,
    })
}
