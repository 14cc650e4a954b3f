//! The distance on finite-energy potentials: the `L^2` distance between
//! duals, with the velocity-energy integral along the geodesic as an
//! independent cross-check.

use serde::Serialize;

use crate::config::fs_profile;
use crate::dual::DualPotential;
use crate::envelope::rooftop;
use crate::error::{LabError, Result};
use crate::geodesic::{build_geodesic, Geodesic};
use crate::potential::RadialPotential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    DualL2,
    ChenIntegral,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceResult {
    pub value: f64,
    pub method: DistanceMethod,
    /// Largest relative gap to the velocity-energy integral at
    /// `t = 0, 1/2, 1`, when both potentials have smooth duals.
    pub cross_check_delta: Option<f64>,
}

/// Relative tolerance for the velocity-energy cross-check.
pub const CHEN_TOL: f64 = 1e-3;

fn require_full(u: &RadialPotential, name: &str) -> Result<()> {
    if u.is_full_mass() {
        Ok(())
    } else {
        let (lo, hi) = u.lelong();
        Err(LabError::Class(format!(
            "{name} has Lelong numbers ({lo}, {hi}) and no finite distance"
        )))
    }
}

/// Trapezoid `L^2` norm of `a - b` over `[0, 1]`; both duals full.
fn dual_gap_l2(a: &DualPotential, b: &DualPotential) -> f64 {
    let m = a.cells();
    let sq: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .enumerate()
        .map(|(j, (p, q))| {
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            w * (p - q) * (p - q)
        })
        .sum();
    (sq / m as f64).sqrt()
}

/// `L^2` distance between the duals, without the cross-check.
pub fn dual_l2(u0: &RadialPotential, u1: &RadialPotential) -> Result<f64> {
    u0.same_grid(u1)?;
    require_full(u0, "u0")?;
    require_full(u1, "u1")?;
    Ok(dual_gap_l2(u0.dual(), u1.dual()))
}

/// Dual second differences at most `10/M` and curvature at least `0.1`:
/// a potential with bounded, nondegenerate Laplacian.
pub fn has_smooth_dual(u: &RadialPotential) -> bool {
    let d = u.dual();
    if !d.is_full() {
        return false;
    }
    let m = d.cells() as f64;
    let v = d.values();
    let max_second = v
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(0.0, f64::max);
    max_second <= 10.0 / m && d.min_curvature().is_some_and(|c| c >= 0.1)
}

/// `sqrt(int (du_t/dt)^2 dMA(u_t))`.
pub fn chen_integral(g: &Geodesic, t: f64) -> Result<f64> {
    Ok(g.velocity_energy(t)?.sqrt())
}

pub fn distance(u0: &RadialPotential, u1: &RadialPotential) -> Result<DistanceResult> {
    let value = dual_l2(u0, u1)?;
    let cross_check_delta = if has_smooth_dual(u0) && has_smooth_dual(u1) {
        let g = build_geodesic(u0, u1)?;
        let mut worst = 0.0f64;
        for t in [0.0, 0.5, 1.0] {
            let c = chen_integral(&g, t)?;
            worst = worst.max((c - value).abs() / value.max(1e-12));
        }
        if worst > CHEN_TOL {
            return Err(LabError::Consistency(format!(
                "dual distance {value:.9e} and velocity energy differ by {worst:.3e} relative"
            )));
        }
        Some(worst)
    } else {
        None
    };
    Ok(DistanceResult {
        value,
        method: DistanceMethod::DualL2,
        cross_check_delta,
    })
}

fn check_order(u: &RadialPotential, v: &RadialPotential) -> Result<()> {
    u.same_grid(v)?;
    let tol = 1e-9 * (1.0 + u.sup_abs_phi().max(v.sup_abs_phi()));
    match u.phi().iter().zip(v.phi()).position(|(a, b)| a > &(b + tol)) {
        Some(i) => Err(LabError::Argument(format!("u > v at node {i}"))),
        None => Ok(()),
    }
}

/// `int (v - u)^2` against the atomic Monge-Ampere measure of `w`.
fn gap_against(w: &RadialPotential, u: &RadialPotential, v: &RadialPotential) -> f64 {
    w.moment_atoms()
        .iter()
        .map(|&(s, m)| {
            let g = v.eval_u(s) - u.eval_u(s);
            m * g * g
        })
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct Sandwich {
    /// `int (v - u)^2 dMA(v)`.
    pub lower: f64,
    pub distance_sq: f64,
    /// `int (v - u)^2 dMA(u)`.
    pub upper: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

/// Bounds on `d(u, v)^2` by the squared gap against either measure, for
/// `u <= v`.
pub fn sandwich_check(u: &RadialPotential, v: &RadialPotential) -> Result<Sandwich> {
    check_order(u, v)?;
    let d = dual_l2(u, v)?;
    let lower = gap_against(v, u, v);
    let upper = gap_against(u, u, v);
    let distance_sq = d * d;
    Ok(Sandwich {
        lower,
        distance_sq,
        upper,
        lower_margin: distance_sq - lower,
        upper_margin: upper - distance_sq,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Pythagoras {
    pub d_sq: f64,
    pub d0_sq: f64,
    pub d1_sq: f64,
    pub residual: f64,
}

/// `d(u0, u1)^2` against `d(u0, P)^2 + d(P, u1)^2` with `P` the rooftop.
pub fn pythagoras_check(u0: &RadialPotential, u1: &RadialPotential) -> Result<Pythagoras> {
    let p = rooftop(u0, u1)?;
    let d = dual_l2(u0, u1)?;
    let d0 = dual_l2(u0, &p)?;
    let d1 = dual_l2(&p, u1)?;
    let (d_sq, d0_sq, d1_sq) = (d * d, d0 * d0, d1 * d1);
    Ok(Pythagoras {
        d_sq,
        d0_sq,
        d1_sq,
        residual: (d_sq - d0_sq - d1_sq).abs(),
    })
}

/// `d(v, w) - d(P(u, v), P(u, w))`.
pub fn contraction_check(u: &RadialPotential, v: &RadialPotential, w: &RadialPotential) -> Result<f64> {
    let pv = rooftop(u, v)?;
    let pw = rooftop(u, w)?;
    Ok(dual_l2(v, w)? - dual_l2(&pv, &pw)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct NpcMargin {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub scale: f64,
}

/// Comparison inequality for the point at `lambda` on the geodesic from
/// `q` to `r`, seen from `p`.
pub fn npc_check(p: &RadialPotential, q: &RadialPotential, r: &RadialPotential, lambda: f64) -> Result<NpcMargin> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(LabError::Argument(format!("lambda = {lambda} is outside [0, 1]")));
    }
    for (u, name) in [(p, "p"), (q, "q"), (r, "r")] {
        require_full(u, name)?;
    }
    let s = if q.sup_distance(r)? == 0.0 {
        q.clone()
    } else {
        build_geodesic(q, r)?.eval(lambda)?
    };
    let (dpq, dpr, dqr) = (dual_l2(p, q)?, dual_l2(p, r)?, dual_l2(q, r)?);
    let lhs = dual_l2(p, &s)?.powi(2);
    let rhs = lambda * dpr * dpr + (1.0 - lambda) * dpq * dpq - lambda * (1.0 - lambda) * dqr * dqr;
    Ok(NpcMargin {
        lhs,
        rhs,
        margin: rhs - lhs,
        scale: 1.0 + dpq * dpq + dpr * dpr + dqr * dqr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Constant,
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneLimit {
    pub direction: Monotonicity,
    pub distances: Vec<f64>,
    pub nonincreasing: bool,
    pub last: f64,
}

fn monotonicity(seq: &[RadialPotential]) -> Result<Monotonicity> {
    let mut up = false;
    let mut down = false;
    for (k, w) in seq.windows(2).enumerate() {
        w[0].same_grid(&w[1])?;
        let tol = 1e-9 * (1.0 + w[0].sup_abs_phi().max(w[1].sup_abs_phi()));
        for (a, b) in w[0].phi().iter().zip(w[1].phi()) {
            up |= b > &(a + tol);
            down |= b < &(a - tol);
        }
        if up && down {
            return Err(LabError::Argument(format!(
                "sequence is not monotone at step {k}"
            )));
        }
    }
    Ok(match (up, down) {
        (true, _) => Monotonicity::Increasing,
        (_, true) => Monotonicity::Decreasing,
        _ => Monotonicity::Constant,
    })
}

/// `d(w_k, w)` along a pointwise monotone sequence.
pub fn monotone_limit_distance(seq: &[RadialPotential], limit: &RadialPotential) -> Result<MonotoneLimit> {
    if seq.is_empty() {
        return Err(LabError::Argument("empty sequence".into()));
    }
    let direction = monotonicity(seq)?;
    let distances = seq
        .iter()
        .map(|w| dual_l2(w, limit))
        .collect::<Result<Vec<_>>>()?;
    let nonincreasing = distances.windows(2).all(|d| d[1] <= d[0] + 1e-9 * (1.0 + d[0]));
    Ok(MonotoneLimit {
        direction,
        last: *distances.last().unwrap(),
        distances,
        nonincreasing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyLimit {
    #[serde(skip)]
    pub limit: RadialPotential,
    /// `C` in `d(u_l, u_{l+1}) <= C 2^-l`.
    pub fitted_constant: f64,
    /// Index `k` whose tail rooftop is returned.
    pub tail_start: usize,
    /// `d(u_k, v)` for every `k`.
    pub distances: Vec<f64>,
    /// `d(0, v')/2 - d(0, v'/2)` with `v' = v - sup v`.
    pub halving_margin: f64,
}

/// `(phi_FS + phi) / 2`.
fn half_of(u: &RadialPotential) -> Result<RadialPotential> {
    let cfg = *u.config();
    let phi = u
        .phi()
        .iter()
        .enumerate()
        .map(|(i, p)| 0.5 * (p + fs_profile(cfg.s(i))))
        .collect();
    RadialPotential::from_samples(cfg, phi, 0.5 * u.slope_left(), 0.5 * (1.0 + u.slope_right()))
}

/// Limit of a Cauchy sequence through iterated rooftops of its tails.
///
/// The tail rooftops `P(u_k, ..., u_K)` increase with `k`; with a finite
/// sequence the one started at `floor(2K/3)` stands in for their limit.
pub fn complete_cauchy(seq: &[RadialPotential]) -> Result<CauchyLimit> {
    if seq.is_empty() {
        return Err(LabError::Argument("empty sequence".into()));
    }
    for (k, u) in seq.iter().enumerate() {
        require_full(u, &format!("u_{k}"))?;
    }
    let gaps = seq
        .windows(2)
        .map(|w| dual_l2(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let fitted_constant = 2.0
        * gaps
            .iter()
            .take(3)
            .enumerate()
            .map(|(l, d)| d * 2f64.powi(l as i32))
            .fold(0.0, f64::max);
    for (l, &d) in gaps.iter().enumerate() {
        let bound = fitted_constant * 2f64.powi(-(l as i32));
        if d > bound * (1.0 + 1e-9) + 1e-12 {
            return Err(LabError::NotCauchy {
                gap: l,
                distance: d,
                bound,
            });
        }
    }
    let last = seq.len() - 1;
    let tail_start = 2 * last / 3;
    let mut dual = seq[last].dual().clone();
    for u in seq[tail_start..last].iter().rev() {
        dual = dual.max(u.dual())?;
    }
    let limit = RadialPotential::primal_of(*seq[0].config(), dual)?;
    let distances = seq
        .iter()
        .map(|u| dual_l2(u, &limit))
        .collect::<Result<Vec<_>>>()?;
    let top = limit.shift(-limit.sup_u());
    let zero = RadialPotential::constant(*top.config(), 0.0)?;
    let halving_margin = 0.5 * dual_l2(&zero, &top)? - dual_l2(&zero, &half_of(&top)?)?;
    Ok(CauchyLimit {
        limit,
        fitted_constant,
        tail_start,
        distances,
        halving_margin,
    })
}
