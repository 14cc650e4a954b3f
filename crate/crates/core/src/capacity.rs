//! Monge-Ampere capacity of circle-invariant sets,
//! `Cap(B) = sup { MA(h)(B) : phi_FS <= h <= phi_FS + 1 }`.
//!
//! The supremum is attained by the relative extremal function: the largest
//! psh function below `phi_FS` on `B` and below `phi_FS + 1` elsewhere. On the
//! grid that is one call to [`project_psh`].

use serde::{Deserialize, Serialize};

use crate::config::{fs_profile, fs_slope, ModelConfig};
use crate::envelope::project_psh;
use crate::error::{LabError, Result};
use crate::potential::RadialPotential;

/// Finite union of closed, disjoint, sorted `s`-intervals. Endpoints may be
/// `-inf` / `+inf` to reach the poles.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialSet {
    intervals: Vec<(f64, f64)>,
}

impl RadialSet {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &intervals {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(LabError::Argument(format!("bad interval [{a}, {b}]")));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in intervals.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(LabError::Argument(format!(
                    "intervals [{}, {}] and [{}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self {
            intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, s: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= s && s <= b)
    }

    /// Node membership on the primal grid.
    pub fn node_mask(&self, cfg: &ModelConfig) -> Vec<bool> {
        (0..cfg.primal_points).map(|i| self.contains(cfg.s(i))).collect()
    }

    /// Union of node runs; runs touching the ends of the grid extend to the
    /// corresponding pole.
    pub fn from_node_mask(cfg: &ModelConfig, mask: &[bool]) -> Self {
        let n = mask.len();
        let mut intervals = Vec::new();
        let mut i = 0;
        while i < n {
            if !mask[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < n && mask[i + 1] {
                i += 1;
            }
            let a = if start == 0 { f64::NEG_INFINITY } else { cfg.s(start) };
            let b = if i == n - 1 { f64::INFINITY } else { cfg.s(i) };
            intervals.push((a, b));
            i += 1;
        }
        Self { intervals }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all: Vec<(f64, f64)> = self.intervals.iter().chain(&other.intervals).copied().collect();
        all.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(all.len());
        for (a, b) in all {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Self { intervals: merged }
    }
}

/// Relative extremal function of a node set.
pub fn extremal_function(cfg: ModelConfig, mask: &[bool]) -> Result<RadialPotential> {
    if mask.len() != cfg.primal_points {
        return Err(LabError::Argument("node mask does not match the grid".into()));
    }
    let obstacle: Vec<f64> = (0..cfg.primal_points)
        .map(|i| fs_profile(cfg.s(i)) + if mask[i] { 0.0 } else { 1.0 })
        .collect();
    project_psh(cfg, &obstacle, 0.0, 1.0)
}

/// Capacity of the set of grid nodes flagged in `mask`.
pub fn capacity_of_nodes(cfg: ModelConfig, mask: &[bool]) -> Result<f64> {
    if !mask.iter().any(|&b| b) {
        return Ok(0.0);
    }
    let h = extremal_function(cfg, mask)?;
    let mu = h.ma_measure();
    Ok(mu
        .node_mass
        .iter()
        .zip(mask)
        .filter(|(_, &inside)| inside)
        .map(|(m, _)| m)
        .sum::<f64>()
        .min(1.0))
}

/// Capacity of `b` on the grid of `cfg`.
pub fn capacity(b: &RadialSet, cfg: ModelConfig) -> Result<f64> {
    capacity_of_nodes(cfg, &b.node_mask(&cfg))
}

/// Slope of the tangent from `(a, phi_FS(a))` to `phi_FS + 1` on its left,
/// or 0 when no such tangent exists.
pub fn left_tangent_slope(a: f64) -> f64 {
    if a == f64::NEG_INFINITY || fs_profile(a) <= 1.0 {
        return 0.0;
    }
    let target = fs_profile(a);
    // g(p) = phi_FS(p) + 1 + sigma(p)(a - p) - phi_FS(a) increases in p < a
    let g = |p: f64| fs_profile(p) + 1.0 + fs_slope(p) * (a - p) - target;
    let mut lo = a - 1.0;
    while g(lo) > 0.0 {
        lo = a - 2.0 * (a - lo);
    }
    let mut hi = a;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    fs_slope(0.5 * (lo + hi))
}

/// Capacity of a single interval `[a, b]`: `R(b) - L(a)`, with `L`, `R`
/// the slopes of the tangents from the interval ends up to `phi_FS + 1`.
pub fn interval_capacity(a: f64, b: f64) -> f64 {
    if a > b {
        return 0.0;
    }
    // phi_FS(-s) = phi_FS(s) - s, so the right tangent mirrors the left one
    let r = if b == f64::INFINITY { 1.0 } else { 1.0 - left_tangent_slope(-b) };
    r - left_tangent_slope(a)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapDivergence {
    pub epsilon: f64,
    pub capacities: Vec<f64>,
    /// `epsilon` is below what the grid can resolve in `|u_k - u|`.
    pub unresolvable: bool,
}

/// Smallest difference of grid potentials that is meaningful: the gap
/// between a potential and its dual-side reconstruction is of this order.
pub fn resolution(cfg: &ModelConfig) -> f64 {
    cfg.ds() * cfg.dx()
}

/// Grid set `{ |u - v| > eps }`.
pub fn exceedance_mask(u: &RadialPotential, v: &RadialPotential, eps: f64) -> Result<Vec<bool>> {
    u.same_grid(v)?;
    Ok(u.phi().iter().zip(v.phi()).map(|(a, b)| (a - b).abs() > eps).collect())
}

/// `Cap{ |u_k - u| > eps }` along a sequence.
pub fn cap_divergence(seq: &[RadialPotential], u: &RadialPotential, eps: f64) -> Result<CapDivergence> {
    if !(eps > 0.0) {
        return Err(LabError::Argument(format!("epsilon must be positive, got {eps}")));
    }
    let cfg = *u.config();
    let capacities = seq
        .iter()
        .map(|uk| capacity_of_nodes(cfg, &exceedance_mask(uk, u, eps)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(CapDivergence {
        epsilon: eps,
        capacities,
        unresolvable: eps < resolution(&cfg),
    })
}

/// `int |u - v| dMA(0)`, the L1 distance against the Fubini-Study measure.
pub fn grid_l1(u: &RadialPotential, v: &RadialPotential) -> Result<f64> {
    u.same_grid(v)?;
    let cfg = u.config();
    let n = cfg.primal_points;
    let ds = cfg.ds();
    // node masses of phi_FS via slope differences at cell midpoints
    let mut total = 0.0;
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { fs_slope(cfg.s(i) - 0.5 * ds) };
        let right = if i == n - 1 { 1.0 } else { fs_slope(cfg.s(i) + 0.5 * ds) };
        total += (right - left) * (u.phi()[i] - v.phi()[i]).abs();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig::new(30.0, 2049, 256).unwrap()
    }

    #[test]
    fn empty_and_full_sets() {
        let cfg = cfg();
        assert_eq!(capacity(&RadialSet::empty(), cfg).unwrap(), 0.0);
        assert!((capacity(&RadialSet::full(), cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_line_has_full_capacity() {
        assert!((interval_capacity(0.0, f64::INFINITY) - 1.0).abs() < 1e-15);
        let c = capacity(&RadialSet::interval(0.0, f64::INFINITY).unwrap(), cfg()).unwrap();
        assert!((c - 1.0).abs() < 1e-9, "{c}");
    }

    #[test]
    fn grid_matches_tangent_formula_at_nodes() {
        let cfg = cfg();
        for &(i, k) in &[(1100usize, 1400usize), (900, 1000), (1500, 1600), (200, 300)] {
            let (a, b) = (cfg.s(i), cfg.s(k));
            let c = capacity(&RadialSet::interval(a, b).unwrap(), cfg).unwrap();
            let exact = interval_capacity(a, b);
            assert!((c - exact).abs() < 1e-3, "[{a}, {b}]: {c} vs {exact}");
        }
    }

    #[test]
    fn tangent_slope_solves_the_tangency_condition() {
        let a = 2.0;
        let l = left_tangent_slope(a);
        let p = (l / (1.0 - l)).ln();
        let line_at_a = fs_profile(p) + 1.0 + l * (a - p);
        assert!((line_at_a - fs_profile(a)).abs() < 1e-12);
        assert_eq!(left_tangent_slope(0.0), 0.0);
    }

    #[test]
    fn set_construction_and_masks() {
        assert!(RadialSet::new(vec![(0.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(RadialSet::new(vec![(2.0, 1.0)]).is_err());
        let cfg = cfg();
        let set = RadialSet::new(vec![(f64::NEG_INFINITY, -5.0), (1.0, 2.0)]).unwrap();
        let mask = set.node_mask(&cfg);
        let back = RadialSet::from_node_mask(&cfg, &mask);
        assert_eq!(back.intervals().len(), 2);
        assert_eq!(back.intervals()[0].0, f64::NEG_INFINITY);
        assert_eq!(back.node_mask(&cfg), mask);
    }

    #[test]
    fn divergence_of_uniform_shift() {
        let cfg = cfg();
        let u = RadialPotential::constant(cfg, -0.2).unwrap();
        let seq: Vec<_> = (1..6).map(|k| u.shift(-1.0 / k as f64)).collect();
        let d = cap_divergence(&seq, &u, 0.5).unwrap();
        assert!(d.capacities[0] > 0.99);
        assert!(d.capacities[2..].iter().all(|c| *c == 0.0));
        assert!(!d.unresolvable);
        assert!(cap_divergence(&seq, &u, 1e-9).unwrap().unresolvable);
    }
}
