//! Weighted energies `E_chi(u) = int chi(u) MA(u)` and the Aubin-Mabuchi
//! functional.
//!
//! With `x = phi'(s)` the measure `MA(u)` becomes Lebesgue measure on the
//! dual domain, so `E_chi(u) = int chi(U(x)) dx` with
//! `U(x) = x psi'(x) - psi(x) - phi_FS(psi'(x))`.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::config::fs_dual;
use crate::error::{LabError, Result};
use crate::potential::RadialPotential;
use crate::profile::{slope_inverse, Profile};

/// Power weight `chi_p(t) = -(-t)^p` for `t <= 0`, `t` for `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Weight(f64);

impl Weight {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(LabError::Argument(format!("weight exponent must be positive, got {p}")));
        }
        Ok(Self(p))
    }

    pub fn p(&self) -> f64 {
        self.0
    }

    #[inline]
    pub fn chi(&self, t: f64) -> f64 {
        if t <= 0.0 {
            -(-t).powf(self.0)
        } else {
            t
        }
    }

    /// Belongs to `W^-` (concave weights).
    pub fn is_w_minus(&self) -> bool {
        self.0 <= 1.0
    }

    /// The constant `M` with `chi in W^+_M`, if any.
    pub fn w_plus_constant(&self) -> Option<f64> {
        (self.0 >= 1.0).then_some(self.0)
    }
}

impl TryFrom<f64> for Weight {
    type Error = LabError;
    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<Weight> for f64 {
    fn from(w: Weight) -> f64 {
        w.0
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi_{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyValue {
    Finite(f64),
    MinusInfinity,
}

impl EnergyValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, EnergyValue::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            EnergyValue::Finite(v) => Some(*v),
            EnergyValue::MinusInfinity => None,
        }
    }
}

impl fmt::Display for EnergyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyValue::Finite(v) => write!(f, "{v:.11e}"),
            EnergyValue::MinusInfinity => f.write_str("-inf"),
        }
    }
}

impl Serialize for EnergyValue {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EnergyValue::Finite(v) => ser.serialize_f64(*v),
            EnergyValue::MinusInfinity => ser.serialize_str("-inf"),
        }
    }
}

/// Cutoff levels `h = 2^0, ..., 2^16`.
pub fn h_schedule() -> Vec<f64> {
    (0..=16).map(|k| 2f64.powi(k)).collect()
}

/// Values below this are treated as divergence.
pub const ENERGY_FLOOR: f64 = -1e12;

/// Decide finiteness from `E(max(u, -h))` along [`h_schedule`].
///
/// Finite when the decrements shrink geometrically (the limit is then
/// extrapolated) or vanish; `-inf` when they do not shrink or the values
/// fall below [`ENERGY_FLOOR`].
pub fn classify_schedule(values: &[f64]) -> EnergyValue {
    if values.iter().any(|v| !v.is_finite() || *v < ENERGY_FLOOR) {
        return EnergyValue::MinusInfinity;
    }
    let n = values.len();
    let last = values[n - 1];
    if n < 5 {
        return EnergyValue::Finite(last);
    }
    let d: Vec<f64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    let tail = &d[d.len() - 4..];
    let negligible = 1e-12 * (1.0 + last.abs());
    if tail.iter().all(|x| x.abs() <= negligible) {
        return EnergyValue::Finite(last);
    }
    if tail.iter().any(|x| *x <= negligible) {
        // not yet geometric: trust the last value
        return EnergyValue::Finite(last);
    }
    let ratio = (tail[3] / tail[0]).powf(1.0 / 3.0);
    if ratio >= 1.0 {
        EnergyValue::MinusInfinity
    } else {
        EnergyValue::Finite(last - tail[3] * ratio / (1.0 - ratio))
    }
}

/// Energy from the atomic form of `MA(u)` on the dual grid; `None` when the
/// dual is not finite on all of `[0, 1]`.
pub fn dual_energy(u: &RadialPotential, w: Weight) -> Option<f64> {
    if !u.dual().is_full() {
        return None;
    }
    Some(
        u.moment_atoms()
            .iter()
            .map(|&(s, m)| m * w.chi(u.eval_u(s)))
            .sum(),
    )
}

/// `E_chi(max(u, -h))`, with the cutoff realized on the grid.
///
/// Mass that `u` puts at a pole lands on the boundary node of the cutoff;
/// it is charged at `-h` instead, since `u -> -inf` past the grid there.
pub fn cutoff_energy(u: &RadialPotential, w: Weight, h: f64) -> Result<f64> {
    let v = u.cutoff(h)?;
    let grid = dual_energy(&v, w)
        .ok_or_else(|| LabError::InvariantViolation("cutoff without full mass".into()))?;
    let (lo, hi) = u.lelong();
    let last = v.phi().len() - 1;
    let fix = |mass: f64, node: usize| mass * (w.chi(-h) - w.chi(v.u_at(node)));
    Ok(grid + fix(lo, 0) + fix(hi, last))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub value: EnergyValue,
    pub dual_path: Option<f64>,
    pub cutoff_path: Vec<f64>,
}

/// `E_chi(u)` computed along the dual and along the cutoff schedule, and
/// reconciled.
pub fn energy_report(u: &RadialPotential, w: Weight) -> Result<EnergyReport> {
    let schedule = h_schedule()
        .into_iter()
        .map(|h| cutoff_energy(u, w, h))
        .collect::<Result<Vec<f64>>>()?;
    let by_cutoff = classify_schedule(&schedule);
    let by_dual = dual_energy(u, w);
    let value = match (by_dual, by_cutoff) {
        (Some(a), EnergyValue::Finite(b)) => {
            if (a - b).abs() > 1e-3 * a.abs().max(b.abs()).max(1.0) {
                return Err(LabError::Consistency(format!(
                    "dual energy {a:.9e} and cutoff limit {b:.9e} disagree"
                )));
            }
            EnergyValue::Finite(a)
        }
        (None, EnergyValue::MinusInfinity) => EnergyValue::MinusInfinity,
        (Some(a), EnergyValue::MinusInfinity) => {
            return Err(LabError::Consistency(format!(
                "dual energy {a:.9e} is finite but the cutoff schedule diverges"
            )))
        }
        (None, EnergyValue::Finite(b)) => {
            return Err(LabError::Consistency(format!(
                "cutoff schedule converges to {b:.9e} for a potential without full mass"
            )))
        }
    };
    Ok(EnergyReport {
        value,
        dual_path: by_dual,
        cutoff_path: schedule,
    })
}

pub fn energy(u: &RadialPotential, w: Weight) -> Result<EnergyValue> {
    Ok(energy_report(u, w)?.value)
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// One side of the dual domain, parametrized by `x = base + sign * len * e^{-y}`.
struct Side<'a> {
    p: &'a dyn Profile,
    base: f64,
    sign: f64,
    len: f64,
}

impl Side<'_> {
    fn x(&self, y: f64) -> f64 {
        self.base + self.sign * self.len * (-y).exp()
    }
    fn jac(&self, y: f64) -> f64 {
        self.len * (-y).exp()
    }
    fn big_u(&self, y: f64) -> f64 {
        self.p.u(slope_inverse(self.p, self.x(y)))
    }
}

struct Panel {
    a: f64,
    b: f64,
    ua: f64,
    ub: f64,
    nodes: [(f64, f64, f64); 8], // (weight * jacobian, U, y)
}

fn make_panels(side: &Side, y_max: f64, width: f64) -> Vec<Panel> {
    let count = (y_max / width).ceil() as usize;
    let mut ua = side.big_u(0.0);
    (0..count)
        .map(|k| {
            let a = k as f64 * width;
            let b = ((k + 1) as f64 * width).min(y_max);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut nodes = [(0.0, 0.0, 0.0); 8];
            for (slot, (z, wt)) in nodes.iter_mut().zip(GL_NODES.iter().zip(GL_WEIGHTS)) {
                let y = mid + half * z;
                *slot = (wt * half * side.jac(y), side.big_u(y), y);
            }
            let ub = side.big_u(b);
            let panel = Panel { a, b, ua, ub, nodes };
            ua = ub;
            panel
        })
        .collect()
}

fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(z, w)| w * half * f(mid + half * z))
        .sum()
}

fn side_energy(side: &Side, panels: &[Panel], w: Weight, h: f64) -> f64 {
    let mut total = 0.0;
    for p in panels {
        let lo = p.nodes.iter().map(|n| n.1).fold(p.ua.min(p.ub), f64::min);
        let hi = p.nodes.iter().map(|n| n.1).fold(p.ua.max(p.ub), f64::max);
        if lo >= -h {
            total += p.nodes.iter().map(|n| n.0 * w.chi(n.1)).sum::<f64>();
        } else if hi <= -h {
            total += w.chi(-h) * (side.jac(p.a) - side.jac(p.b));
        } else {
            // split at the crossing U = -h (U is monotone inside a panel)
            let (mut a, mut b) = (p.a, p.b);
            let above_at_a = p.ua > -h;
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if (side.big_u(m) > -h) == above_at_a {
                    a = m;
                } else {
                    b = m;
                }
            }
            let c = 0.5 * (a + b);
            let f = |y: f64| side.jac(y) * w.chi(side.big_u(y).max(-h));
            total += gauss(&f, p.a, c) + gauss(&f, c, p.b);
        }
    }
    // the sliver beyond the last panel, where U is essentially constant
    let y_end = panels.last().map_or(0.0, |p| p.b);
    total + side.jac(y_end) * w.chi(side.big_u(y_end).max(-h))
}

/// Energy of an analytic profile, without grid truncation.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileEnergy {
    pub value: EnergyValue,
    pub schedule: Vec<f64>,
}

/// `E_chi` of a closed-form profile: quadrature in `x` of
/// `chi(max(U(x), -h))` plus the pole atoms, over [`h_schedule`], then
/// classified with [`classify_schedule`].
pub fn profile_energy(p: &dyn Profile, w: Weight) -> ProfileEnergy {
    let (a_lo, a_hi) = p.slope_limits();
    let atoms = 1.0 - (a_hi - a_lo);
    let hs = h_schedule();
    if a_hi - a_lo <= 0.0 {
        let schedule: Vec<f64> = hs.iter().map(|&h| w.chi(-h) * atoms).collect();
        return ProfileEnergy {
            value: classify_schedule(&schedule),
            schedule,
        };
    }
    let mid = 0.5 * (a_lo + a_hi);
    let left = Side {
        p,
        base: a_lo,
        sign: 1.0,
        len: mid - a_lo,
    };
    let right = Side {
        p,
        base: a_hi,
        sign: -1.0,
        len: a_hi - mid,
    };
    // near x = 0 tiny x are representable, near x = 1 they are not
    let y_left = if a_lo == 0.0 { 90.0 } else { 36.0 };
    let left_panels = make_panels(&left, y_left, 0.1);
    let right_panels = make_panels(&right, 36.0, 0.1);
    let schedule: Vec<f64> = hs
        .iter()
        .map(|&h| {
            side_energy(&left, &left_panels, w, h)
                + side_energy(&right, &right_panels, w, h)
                + w.chi(-h) * atoms
        })
        .collect();
    ProfileEnergy {
        value: classify_schedule(&schedule),
        schedule,
    }
}

/// `AM(u) = -int_0^1 (psi_u - psi_FS) dx` (trapezoid on the dual grid);
/// `-inf` without full mass.
pub fn aubin_mabuchi(u: &RadialPotential) -> EnergyValue {
    let d = u.dual();
    if !d.is_full() {
        return EnergyValue::MinusInfinity;
    }
    let m = d.cells();
    let total: f64 = (0..=m)
        .map(|j| {
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            w * (d.values()[j] - fs_dual(d.x(j)))
        })
        .sum();
    EnergyValue::Finite(-total / m as f64)
}

/// `(1/2)(int u dMA(0) + int u dMA(u))` on the primal grid, an independent
/// check of [`aubin_mabuchi`].
pub fn aubin_mabuchi_primal(u: &RadialPotential) -> f64 {
    let cfg = u.config();
    let n = cfg.primal_points;
    let ds = cfg.ds();
    let fs = crate::config::fs_slope;
    let mut with_fs = 0.0;
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { fs(cfg.s(i) - 0.5 * ds) };
        let right = if i == n - 1 { 1.0 } else { fs(cfg.s(i) + 0.5 * ds) };
        with_fs += (right - left) * u.u_at(i);
    }
    let mu = u.ma_measure();
    let with_u: f64 = mu.node_mass.iter().enumerate().map(|(i, m)| m * u.u_at(i)).sum();
    0.5 * (with_fs + with_u)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassRecord {
    /// Full Monge-Ampere mass.
    pub in_e: bool,
    /// Lelong numbers at `s = -inf` and `s = +inf`.
    pub lelong: (f64, f64),
    /// `(p, E_chi_p finite)` per weight.
    pub finite: Vec<(f64, bool)>,
}

pub fn class_membership(u: &RadialPotential, weights: &[Weight]) -> Result<ClassRecord> {
    let (lo, hi) = u.lelong();
    let finite = weights
        .iter()
        .map(|w| Ok((w.p(), energy(u, *w)?.is_finite())))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassRecord {
        in_e: lo.abs() <= 1e-9 && hi.abs() <= 1e-9,
        lelong: (lo, hi),
        finite,
    })
}

/// [`class_membership`] for a closed-form profile, with exact tails.
pub fn profile_class_membership(p: &dyn Profile, weights: &[Weight]) -> ClassRecord {
    let (a_lo, a_hi) = p.slope_limits();
    ClassRecord {
        in_e: a_lo.abs() <= 1e-9 && (1.0 - a_hi).abs() <= 1e-9,
        lelong: (a_lo, 1.0 - a_hi),
        finite: weights
            .iter()
            .map(|w| (w.p(), profile_energy(p, *w).value.is_finite()))
            .collect(),
    }
}

/// `E_chi(u) / E_chi(v)` for `u <= v <= 0`.
pub fn fundamental_ratio(u: &RadialPotential, v: &RadialPotential, w: Weight) -> Result<f64> {
    u.same_grid(v)?;
    let tol = 1e-9 * (1.0 + u.sup_abs_phi());
    for i in 0..u.phi().len() {
        if u.phi()[i] > v.phi()[i] + tol || v.u_at(i) > tol {
            return Err(LabError::Argument(format!(
                "need u <= v <= 0, violated at node {i}"
            )));
        }
    }
    let eu = energy(u, w)?
        .value()
        .ok_or_else(|| LabError::Argument("E(u) is -inf".into()))?;
    let ev = energy(v, w)?
        .value()
        .ok_or_else(|| LabError::Argument("E(v) is -inf".into()))?;
    if ev == 0.0 {
        return Ok(if eu == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(eu / ev)
}

#[derive(Debug, Clone, Serialize)]
pub struct RooftopEnergyMargin {
    pub margin: f64,
    pub rooftop: f64,
    pub e0: f64,
    pub e1: f64,
    /// `max(sup chi(u0), sup chi(u1))`.
    pub n: f64,
}

/// `E(P(u0, u1)) - E(u0) - E(u1) + N`, which should be nonnegative.
pub fn energy_of_rooftop_check(u0: &RadialPotential, u1: &RadialPotential, w: Weight) -> Result<RooftopEnergyMargin> {
    let p = crate::envelope::rooftop(u0, u1)?;
    let finite = |u: &RadialPotential, name: &str| -> Result<f64> {
        energy(u, w)?
            .value()
            .ok_or_else(|| LabError::Class(format!("E({name}) is -inf")))
    };
    let e0 = finite(u0, "u0")?;
    let e1 = finite(u1, "u1")?;
    let ep = finite(&p, "P(u0, u1)")?;
    let n = w.chi(u0.sup_u().max(u1.sup_u()));
    Ok(RooftopEnergyMargin {
        margin: ep - e0 - e1 + n,
        rooftop: ep,
        e0,
        e1,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::fixtures::{seeded_rng, Fixture};
    use crate::profile::AlphaTailProfile;

    fn cfg() -> ModelConfig {
        ModelConfig::new(30.0, 2048, 1024).unwrap()
    }

    #[test]
    fn weight_properties() {
        let w = Weight::new(2.0).unwrap();
        assert_eq!(w.chi(0.0), 0.0);
        assert_eq!(w.chi(-3.0), -9.0);
        assert_eq!(w.chi(2.0), 2.0);
        assert!(Weight::new(0.0).is_err());
        assert!(Weight::new(0.5).unwrap().is_w_minus());
        assert_eq!(Weight::new(1.0).unwrap().w_plus_constant(), Some(1.0));
        // |t chi'(t)| = p |chi(t)| for t < 0
        let t = -1.7f64;
        let d = 2.0 * (-t);
        assert!(((t * d).abs() - 2.0 * w.chi(t).abs()).abs() < 1e-12);
    }

    #[test]
    fn zero_and_constants() {
        let cfg = cfg();
        let w1 = Weight::new(1.0).unwrap();
        let e0 = energy(&Fixture::FubiniStudy.build(cfg).unwrap(), w1).unwrap().value().unwrap();
        assert!(e0.abs() < 1e-5, "{e0}");
        let c = energy(&RadialPotential::constant(cfg, -0.7).unwrap(), w1).unwrap();
        assert!((c.value().unwrap() + 0.7).abs() < 1e-5);
    }

    #[test]
    fn paths_agree_on_tents() {
        let cfg = cfg();
        let mut rng = seeded_rng(21);
        for _ in 0..5 {
            let u = Fixture::random_bounded(&mut rng).build(cfg).unwrap();
            for p in [0.5, 1.0, 2.0] {
                let r = energy_report(&u, Weight::new(p).unwrap()).unwrap();
                let a = r.dual_path.unwrap();
                let b = *r.cutoff_path.last().unwrap();
                assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn green_is_not_in_e() {
        let cfg = cfg();
        let g = Fixture::GreenNormalized.build(cfg).unwrap();
        assert_eq!(energy(&g, Weight::new(1.0).unwrap()).unwrap(), EnergyValue::MinusInfinity);
        let rec = class_membership(&g, &[Weight::new(0.5).unwrap()]).unwrap();
        assert!(!rec.in_e);
        assert_eq!(rec.lelong, (1.0, 0.0));
        assert!(aubin_mabuchi(&g) == EnergyValue::MinusInfinity);
    }

    #[test]
    fn alpha_tail_law_for_chi_two() {
        let w = Weight::new(2.0).unwrap();
        for (alpha, finite) in [(0.2, true), (0.3, true), (0.32, true), (0.35, false), (0.4, false)] {
            let e = profile_energy(&AlphaTailProfile { alpha, c: 1.0 }, w);
            assert_eq!(e.value.is_finite(), finite, "alpha = {alpha}: {:?}", e.schedule);
        }
    }

    #[test]
    fn profile_energy_of_constant() {
        let e = profile_energy(&crate::profile::ConstantProfile { c: -0.5 }, Weight::new(2.0).unwrap());
        assert!((e.value.value().unwrap() + 0.25).abs() < 1e-9);
    }

    #[test]
    fn profile_and_grid_agree_for_bounded_tails() {
        let cfg = cfg();
        let f = Fixture::CutoffOf {
            of: Box::new(Fixture::AlphaTail { alpha: 0.3, c: 1.0 }),
            h: 2.0,
        };
        let w = Weight::new(1.0).unwrap();
        let grid = energy(&f.build(cfg).unwrap(), w).unwrap().value().unwrap();
        let exact = profile_energy(f.profile().unwrap().as_ref(), w).value.value().unwrap();
        assert!((grid - exact).abs() < 2e-3, "{grid} vs {exact}");
    }

    #[test]
    fn aubin_mabuchi_of_constant_and_primal_check() {
        let cfg = cfg();
        let am = aubin_mabuchi(&RadialPotential::constant(cfg, 0.4).unwrap()).value().unwrap();
        assert!((am - 0.4).abs() < 1e-12);
        let u = Fixture::GreenPositivePart.build(cfg).unwrap();
        let a = aubin_mabuchi(&u).value().unwrap();
        let b = aubin_mabuchi_primal(&u);
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn ratio_and_rooftop_margin() {
        let cfg = cfg();
        let w = Weight::new(1.0).unwrap();
        let v = RadialPotential::constant(cfg, -0.5).unwrap();
        assert!((fundamental_ratio(&v, &v, w).unwrap() - 1.0).abs() < 1e-12);
        assert!(fundamental_ratio(&v.shift(1.0), &v, w).is_err());
        let r = energy_of_rooftop_check(&v, &v, w).unwrap();
        assert!(r.margin >= -1e-9);
    }
}
