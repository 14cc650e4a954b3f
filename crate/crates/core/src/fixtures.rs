//! Named, reproducible test potentials.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{fs_dual, fs_profile, ModelConfig};
use crate::dual::DualPotential;
use crate::error::{LabError, Result};
use crate::potential::RadialPotential;
use crate::profile::{
    sample_profile, AlphaTailProfile, ConstantProfile, CutoffProfile, GreenPositivePart,
    GreenProfile, MixProfile, Profile, ShiftProfile, TentProfile,
};

/// Largest total coefficient of a smooth dual perturbation; keeps the dual
/// curvature at least `4 - 3 = 1`.
pub const SMOOTH_COEFF_BUDGET: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fixture {
    /// `u = c`.
    Constant { c: f64 },
    /// `u = 0`.
    FubiniStudy,
    /// `phi = s + 1`, full Lelong number at the pole `s = -inf`.
    GreenNormalized,
    /// `phi = max(s + 1, phi_FS)`.
    GreenPositivePart,
    /// `max(phi_FS + lo, a_k s + b_k)`.
    Tent { lo: f64, lines: Vec<(f64, f64)> },
    /// `u = -c (1 + log(1 + e^{-s}))^alpha`.
    AlphaTail { alpha: f64, c: f64 },
    /// Dual `psi_FS - shift + sum_k a_k sin(k pi x) / (k pi)^2`.
    SmoothDual { shift: f64, coeffs: Vec<f64> },
    /// `max(u, -h)`.
    CutoffOf { of: Box<Fixture>, h: f64 },
    /// `(1 - t) a + t b` on the primal side.
    AffineMixOf { a: Box<Fixture>, b: Box<Fixture>, t: f64 },
    /// `u + c`.
    Shift { of: Box<Fixture>, c: f64 },
}

impl Fixture {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Argument(m));
        match self {
            Fixture::Constant { c } if !c.is_finite() => bad("constant must be finite".into()),
            Fixture::Tent { lo, lines } => {
                if !lo.is_finite() {
                    return bad("tent floor must be finite".into());
                }
                for (a, b) in lines {
                    if !(*a > 0.0 && *a < 1.0) || !b.is_finite() {
                        return bad(format!("tent line ({a}, {b}) needs slope in (0, 1)"));
                    }
                }
                Ok(())
            }
            Fixture::AlphaTail { alpha, c } => {
                if !(*alpha > 0.0 && *alpha < 1.0) || !(*c > 0.0) || c * alpha > 1.0 {
                    return bad(format!(
                        "alpha tail needs 0 < alpha < 1, c > 0, c alpha <= 1; got alpha={alpha}, c={c}"
                    ));
                }
                Ok(())
            }
            Fixture::SmoothDual { shift, coeffs } => {
                let total: f64 = coeffs.iter().map(|a| a.abs()).sum();
                if !shift.is_finite() || !(total <= SMOOTH_COEFF_BUDGET) {
                    return bad(format!(
                        "smooth dual coefficients sum to {total}, limit {SMOOTH_COEFF_BUDGET}"
                    ));
                }
                Ok(())
            }
            Fixture::CutoffOf { of, h } => {
                if !(*h >= 0.0) || !h.is_finite() {
                    return bad(format!("cutoff level must be nonnegative, got {h}"));
                }
                of.validate()
            }
            Fixture::AffineMixOf { a, b, t } => {
                if !(0.0..=1.0).contains(t) {
                    return bad(format!("mix weight must lie in [0, 1], got {t}"));
                }
                a.validate()?;
                b.validate()
            }
            Fixture::Shift { of, c } => {
                if !c.is_finite() {
                    return bad("shift must be finite".into());
                }
                of.validate()
            }
            _ => Ok(()),
        }
    }

    /// Closed-form profile, when one exists.
    pub fn profile(&self) -> Option<Box<dyn Profile>> {
        Some(match self {
            Fixture::Constant { c } => Box::new(ConstantProfile { c: *c }),
            Fixture::FubiniStudy => Box::new(ConstantProfile { c: 0.0 }),
            Fixture::GreenNormalized => Box::new(GreenProfile),
            Fixture::GreenPositivePart => Box::new(GreenPositivePart),
            Fixture::Tent { lo, lines } => Box::new(TentProfile {
                lo: *lo,
                lines: lines.clone(),
            }),
            Fixture::AlphaTail { alpha, c } => Box::new(AlphaTailProfile {
                alpha: *alpha,
                c: *c,
            }),
            Fixture::SmoothDual { .. } => return None,
            Fixture::CutoffOf { of, h } => Box::new(CutoffProfile {
                inner: of.profile()?,
                h: *h,
            }),
            Fixture::AffineMixOf { a, b, t } => Box::new(MixProfile {
                a: a.profile()?,
                b: b.profile()?,
                t: *t,
            }),
            Fixture::Shift { of, c } => Box::new(ShiftProfile {
                inner: of.profile()?,
                c: *c,
            }),
        })
    }

    /// Grid potential on `cfg`.
    pub fn build(&self, cfg: ModelConfig) -> Result<RadialPotential> {
        self.validate()?;
        match self {
            Fixture::Constant { c } => RadialPotential::constant(cfg, *c),
            Fixture::FubiniStudy => RadialPotential::constant(cfg, 0.0),
            Fixture::SmoothDual { shift, coeffs } => {
                let dual = DualPotential::from_fn(cfg.dual_points, |x| {
                    let pert: f64 = coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, a)| {
                            let w = (k + 1) as f64 * std::f64::consts::PI;
                            a * (w * x).sin() / (w * w)
                        })
                        .sum();
                    fs_dual(x) - shift + pert
                })?;
                RadialPotential::primal_of(cfg, dual)
            }
            Fixture::CutoffOf { .. } | Fixture::AffineMixOf { .. } if self.profile().is_some() => {
                sample_profile(self.profile().unwrap().as_ref(), cfg)
            }
            Fixture::CutoffOf { of, h } => of.build(cfg)?.cutoff(*h),
            Fixture::AffineMixOf { a, b, t } => {
                let (ua, ub) = (a.build(cfg)?, b.build(cfg)?);
                let phi = ua
                    .phi()
                    .iter()
                    .zip(ub.phi())
                    .map(|(p, q)| (1.0 - t) * p + t * q)
                    .collect();
                RadialPotential::from_samples(
                    cfg,
                    phi,
                    (1.0 - t) * ua.slope_left() + t * ub.slope_left(),
                    (1.0 - t) * ua.slope_right() + t * ub.slope_right(),
                )
            }
            Fixture::Shift { of, c } => Ok(of.build(cfg)?.shift(*c)),
            _ => sample_profile(self.profile().unwrap().as_ref(), cfg),
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            Fixture::Constant { c } => format!("const({c})"),
            Fixture::FubiniStudy => "fs".into(),
            Fixture::GreenNormalized => "green".into(),
            Fixture::GreenPositivePart => "green+".into(),
            Fixture::Tent { lo, lines } => format!("tent({lo},{}lines)", lines.len()),
            Fixture::AlphaTail { alpha, c } => format!("alpha({alpha},{c})"),
            Fixture::SmoothDual { shift, .. } => format!("smooth({shift})"),
            Fixture::CutoffOf { of, h } => format!("cutoff({},{h})", of.label()),
            Fixture::AffineMixOf { a, b, t } => format!("mix({},{},{t})", a.label(), b.label()),
            Fixture::Shift { of, c } => format!("{}+{c}", of.label()),
        }
    }

    /// Bounded tent with one to three lines.
    pub fn random_tent<R: Rng>(rng: &mut R) -> Self {
        let lo = rng.gen_range(-1.0..0.0);
        let k = rng.gen_range(1..=3);
        let lines = (0..k)
            .map(|_| {
                let a: f64 = rng.gen_range(0.1..0.9);
                let tangent = (a / (1.0 - a)).ln();
                let b = fs_profile(tangent) - a * tangent + lo + rng.gen_range(0.05..1.0);
                (a, b)
            })
            .collect();
        Fixture::Tent { lo, lines }
    }

    /// Smooth dual with three random modes.
    pub fn random_smooth_dual<R: Rng>(rng: &mut R) -> Self {
        let shift = rng.gen_range(-1.0..1.0);
        let coeffs = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Fixture::SmoothDual { shift, coeffs }
    }

    /// Bounded full-mass potential: tent, smooth dual, or a cutoff tail.
    pub fn random_bounded<R: Rng>(rng: &mut R) -> Self {
        match rng.gen_range(0..3) {
            0 => Self::random_tent(rng),
            1 => Self::random_smooth_dual(rng),
            _ => Fixture::CutoffOf {
                of: Box::new(Fixture::AlphaTail {
                    alpha: rng.gen_range(0.1..0.3),
                    c: 1.0,
                }),
                h: rng.gen_range(1.0..4.0),
            },
        }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
