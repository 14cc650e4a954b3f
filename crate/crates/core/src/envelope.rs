//! Largest psh minorants: the projection `P(b)`, the rooftop `P(u0, u1)` and
//! the singularity-type rooftop `P_[u1](u0)`.

use serde::Serialize;

use crate::config::ModelConfig;
use crate::error::{LabError, Result};
use crate::hull::{lower_hull_vertices, sup_affine_sorted};
use crate::potential::RadialPotential;

/// Largest convex function with asymptotic slopes `a_lo`, `a_hi` lying below
/// the obstacle samples `b` (given at the `phi` level) on the primal grid.
pub fn project_psh(cfg: ModelConfig, b: &[f64], a_lo: f64, a_hi: f64) -> Result<RadialPotential> {
    cfg.validate()?;
    if b.len() != cfg.primal_points {
        return Err(LabError::Argument(format!(
            "obstacle has {} samples, grid has {}",
            b.len(),
            cfg.primal_points
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Argument("obstacle must be finite".into()));
    }
    if !(0.0..=1.0).contains(&a_lo) || !(0.0..=1.0).contains(&a_hi) || a_lo > a_hi {
        return Err(LabError::Argument(format!(
            "slope range [{a_lo}, {a_hi}] is not a subinterval of [0, 1]"
        )));
    }
    let s = cfg.primal_grid();
    let verts = lower_hull_vertices(&s, b);
    let vs: Vec<f64> = verts.iter().map(|&i| s[i]).collect();
    let vb: Vec<f64> = verts.iter().map(|&i| b[i]).collect();

    // Only the endpoint slopes and hull edge slopes strictly between them
    // can be active in the supremum of admissible affine minorants.
    let mut slopes = vec![a_lo];
    slopes.extend(
        vs.windows(2)
            .zip(vb.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .filter(|e| *e > a_lo && *e < a_hi),
    );
    if a_hi > a_lo {
        slopes.push(a_hi);
    }
    // near-equal slopes make the pointer walk stall on rounding noise
    slopes.dedup_by(|b, a| *b - *a <= 1e-12);
    let conj = sup_affine_sorted(&vs, &vb, &slopes);
    let phi = sup_affine_sorted(&slopes, &conj, &s);
    RadialPotential::from_samples(cfg, phi, a_lo, a_hi)
}

/// `P(u0, u1)`, the largest psh function below both; its dual is the
/// pointwise maximum of the duals.
pub fn rooftop(u0: &RadialPotential, u1: &RadialPotential) -> Result<RadialPotential> {
    u0.same_grid(u1)?;
    let dual = u0.dual().max(u1.dual())?;
    RadialPotential::primal_of(*u0.config(), dual)
}

/// `P(u0, u1)` computed on the primal side by projecting `min(u0, u1)`.
pub fn rooftop_by_projection(u0: &RadialPotential, u1: &RadialPotential) -> Result<RadialPotential> {
    u0.same_grid(u1)?;
    let a_lo = u0.slope_left().max(u1.slope_left());
    let a_hi = u0.slope_right().min(u1.slope_right());
    if a_lo > a_hi {
        return Err(LabError::MinusInfinity);
    }
    let b: Vec<f64> = u0.phi().iter().zip(u1.phi()).map(|(p, q)| p.min(*q)).collect();
    project_psh(*u0.config(), &b, a_lo, a_hi)
}

/// `P_[u1](u0)` in closed form: the dual of `u0` restricted to the domain of
/// the dual of `u1`.
pub fn singularity_rooftop_exact(u0: &RadialPotential, u1: &RadialPotential) -> Result<RadialPotential> {
    u0.same_grid(u1)?;
    RadialPotential::primal_of(*u0.config(), u0.dual().restrict_to(u1.dual())?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularityRooftop {
    #[serde(skip)]
    pub potential: RadialPotential,
    pub converged: bool,
    /// Last shift `c` used.
    pub shift: f64,
    pub steps: usize,
    /// Sup change between the last two iterates.
    pub last_change: f64,
}

/// `P_[u1](u0)` as the increasing limit of `P(u0, u1 + c)` over
/// `c = 1, 2, 4, ..., 2^16`, stopping once successive duals agree to 1e-9.
pub fn rooftop_singularity(u0: &RadialPotential, u1: &RadialPotential) -> Result<SingularityRooftop> {
    const MAX_LOG_SHIFT: i32 = 16;
    const TOL: f64 = 1e-9;
    let mut prev = rooftop(u0, &u1.shift(1.0))?;
    let mut last_change = f64::INFINITY;
    for k in 1..=MAX_LOG_SHIFT {
        let c = 2f64.powi(k);
        let next = rooftop(u0, &u1.shift(c))?;
        last_change = next
            .dual()
            .values()
            .iter()
            .zip(prev.dual().values())
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        prev = next;
        if last_change <= TOL {
            return Ok(SingularityRooftop {
                potential: prev,
                converged: true,
                shift: c,
                steps: k as usize,
                last_change,
            });
        }
    }
    Ok(SingularityRooftop {
        potential: prev,
        converged: false,
        shift: 2f64.powi(MAX_LOG_SHIFT),
        steps: MAX_LOG_SHIFT as usize,
        last_change,
    })
}

/// One bin of the partition report, aligned with a primal node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionCell {
    pub index: usize,
    pub lhs: f64,
    pub rhs0: f64,
    pub rhs1: f64,
    /// Some atom of `MA(u1)` in this bin lies in both contact sets.
    pub overlap: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    /// Total mass of `MA(P(u0, u1))`, pole atoms included.
    pub lhs_mass: f64,
    /// Mass of `MA(u0)` on `{P = u0}`.
    pub mass_on_lambda0: f64,
    /// Mass of `MA(u1)` on `{P = u1} \ {P = u0}`.
    pub mass_on_lambda1: f64,
    /// Mass of `MA(u1)` on `{P = u0} ∩ {P = u1}`.
    pub overlap_mass: f64,
    /// `rhs total - lhs total`.
    pub mass_excess: f64,
    /// Sup distance between the cumulative distributions of both sides.
    pub residual: f64,
    /// Sign changes of `psi0 - psi1`, the number of contact-set boundaries.
    pub contact_boundaries: usize,
    pub contact_tol: f64,
    pub cells: Vec<PartitionCell>,
}

impl PartitionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,lhs,rhs0,rhs1,overlap\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{:.11e},{:.11e},{:.11e},{}\n",
                c.index, c.lhs, c.rhs0, c.rhs1, c.overlap as u8
            ));
        }
        out
    }
}

/// `phi` of `u` at arbitrary locations (sorted internally).
fn eval_at(u: &RadialPotential, locs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..locs.len()).collect();
    order.sort_by(|&a, &b| locs[a].total_cmp(&locs[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| locs[k]).collect();
    let mut out = vec![0.0; locs.len()];
    for (&k, (v, _)) in order.iter().zip(u.dual().conjugate_sorted(&sorted)) {
        out[k] = v;
    }
    out
}

/// Compare `MA(P(u0, u1 - tau))` with `1_{Λ0} MA(u0) + 1_{Λ1 \ Λ0} MA(u1)`,
/// using the atomic form of each measure. Pole atoms count as contact when
/// the rooftop has the same Lelong number there.
pub fn partition_residual_shifted(
    u0: &RadialPotential,
    u1: &RadialPotential,
    tau: f64,
) -> Result<PartitionReport> {
    let u1 = u1.shift(-tau);
    let p = rooftop(u0, &u1)?;
    let cfg = *p.config();
    let scale = p.sup_abs_phi().max(u0.sup_abs_phi()).max(u1.sup_abs_phi());
    let tol = 1e-7 * (1.0 + scale);

    let contact = |atoms: &[(f64, f64)], u: &RadialPotential| -> Vec<bool> {
        let locs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let pv = eval_at(&p, &locs);
        let uv = eval_at(u, &locs);
        pv.iter().zip(&uv).map(|(a, b)| a >= &(b - tol)).collect()
    };

    let lhs_atoms = p.moment_atoms();
    let atoms0 = u0.moment_atoms();
    let atoms1 = u1.moment_atoms();
    let in0_of_0 = contact(&atoms0, u0);
    let in0_of_1 = contact(&atoms1, u0);
    let in1_of_1 = contact(&atoms1, &u1);

    let n = cfg.primal_points;
    let mut cells: Vec<PartitionCell> = (0..n)
        .map(|index| PartitionCell {
            index,
            lhs: 0.0,
            rhs0: 0.0,
            rhs1: 0.0,
            overlap: false,
        })
        .collect();
    // signed events for the CDF comparison: (location, lhs - rhs)
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(lhs_atoms.len() + atoms0.len() + atoms1.len());

    for &(s, m) in &lhs_atoms {
        cells[cfg.nearest_node(s)].lhs += m;
        events.push((s, m));
    }
    let mut mass0 = 0.0;
    for (&(s, m), &c) in atoms0.iter().zip(&in0_of_0) {
        if c {
            cells[cfg.nearest_node(s)].rhs0 += m;
            events.push((s, -m));
            mass0 += m;
        }
    }
    let mut mass1 = 0.0;
    let mut overlap = 0.0;
    for ((&(s, m), &c0), &c1) in atoms1.iter().zip(&in0_of_1).zip(&in1_of_1) {
        if c1 && !c0 {
            cells[cfg.nearest_node(s)].rhs1 += m;
            events.push((s, -m));
            mass1 += m;
        } else if c1 && c0 {
            cells[cfg.nearest_node(s)].overlap = true;
            overlap += m;
        }
    }

    // pole atoms
    let (p_neg, p_pos) = p.lelong();
    let mut lhs_mass = p_neg + p_pos + lhs_atoms.iter().map(|a| a.1).sum::<f64>();
    let pole_contact = |u: &RadialPotential| {
        let (n0, n1) = u.lelong();
        ((n0 - p_neg).abs() < 1e-12, (n1 - p_pos).abs() < 1e-12)
    };
    let (c0_neg, c0_pos) = pole_contact(u0);
    let (c1_neg, c1_pos) = pole_contact(&u1);
    let (u0_neg, u0_pos) = u0.lelong();
    let (u1_neg, u1_pos) = u1.lelong();
    let mut pole_rhs_neg = 0.0;
    let mut pole_rhs_pos = 0.0;
    if c0_neg {
        mass0 += u0_neg;
        pole_rhs_neg += u0_neg;
    } else if c1_neg {
        mass1 += u1_neg;
        pole_rhs_neg += u1_neg;
    }
    if c0_pos {
        mass0 += u0_pos;
        pole_rhs_pos += u0_pos;
    } else if c1_pos {
        mass1 += u1_pos;
        pole_rhs_pos += u1_pos;
    }
    events.push((f64::NEG_INFINITY, p_neg - pole_rhs_neg));
    events.push((f64::INFINITY, p_pos - pole_rhs_pos));
    if lhs_mass.is_nan() {
        lhs_mass = 0.0;
    }

    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cdf = 0.0f64;
    let mut residual = 0.0f64;
    let mut k = 0;
    while k < events.len() {
        // merge events at numerically identical locations
        let loc = events[k].0;
        while k < events.len() && (events[k].0 == loc || (events[k].0 - loc).abs() <= 1e-12 * (1.0 + loc.abs())) {
            cdf += events[k].1;
            k += 1;
        }
        residual = residual.max(cdf.abs());
    }

    // contact boundaries: sign changes of psi0 - psi1 on the common domain
    let (d0, d1) = (u0.dual(), u1.dual());
    let lo = d0.start().max(d1.start());
    let hi = d0.end().min(d1.end());
    let mut boundaries = 0usize;
    let mut last_sign = 0i8;
    for j in lo..=hi {
        let diff = d0.value(j).unwrap() - d1.value(j).unwrap();
        let sign = if diff > tol {
            1
        } else if diff < -tol {
            -1
        } else {
            0
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                boundaries += 1;
            }
            last_sign = sign;
        }
    }

    Ok(PartitionReport {
        lhs_mass,
        mass_on_lambda0: mass0,
        mass_on_lambda1: mass1,
        overlap_mass: overlap,
        mass_excess: mass0 + mass1 - lhs_mass,
        residual,
        contact_boundaries: boundaries,
        contact_tol: tol,
        cells,
    })
}

pub fn partition_residual(u0: &RadialPotential, u1: &RadialPotential) -> Result<PartitionReport> {
    partition_residual_shifted(u0, u1, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::fs_profile;
    use crate::fixtures::Fixture;

    fn cfg() -> ModelConfig {
        ModelConfig::new(30.0, 1025, 512).unwrap()
    }

    /// Quadratic-time oracle: sup over all admissible node-to-node chords.
    fn naive_projection(cfg: &ModelConfig, b: &[f64], a_lo: f64, a_hi: f64) -> Vec<f64> {
        let s = cfg.primal_grid();
        let n = s.len();
        let mut lines: Vec<(f64, f64)> = Vec::new();
        for &x in &[a_lo, a_hi] {
            let c = (0..n).map(|i| x * s[i] - b[i]).fold(f64::NEG_INFINITY, f64::max);
            lines.push((x, -c));
        }
        for i in 0..n {
            for k in i + 1..n {
                let x = (b[k] - b[i]) / (s[k] - s[i]);
                if x <= a_lo || x >= a_hi {
                    continue;
                }
                let icpt = b[i] - x * s[i];
                if (0..n).all(|m| x * s[m] + icpt <= b[m] + 1e-12) {
                    lines.push((x, icpt));
                }
            }
        }
        s.iter()
            .map(|&si| lines.iter().map(|(x, c)| x * si + c).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    #[test]
    fn projection_matches_quadratic_oracle() {
        let cfg = ModelConfig::new(8.0, 161, 64).unwrap();
        let b: Vec<f64> = cfg
            .primal_grid()
            .into_iter()
            .map(|s| (s.max(0.0) + 0.3).min(fs_profile(s)))
            .collect();
        let p = project_psh(cfg, &b, 0.0, 1.0).unwrap();
        let oracle = naive_projection(&cfg, &b, 0.0, 1.0);
        let mut strictly_below = 0;
        for i in 0..b.len() {
            assert!((p.phi()[i] - oracle[i]).abs() < 1e-12, "node {i}");
            assert!(p.phi()[i] <= b[i] + 1e-12);
            if p.phi()[i] < b[i] - 1e-6 {
                strictly_below += 1;
            }
        }
        assert!(strictly_below > 0);
    }

    #[test]
    fn projection_of_admissible_is_identity() {
        let cfg = cfg();
        let u = Fixture::random_tent(&mut crate::fixtures::seeded_rng(1)).build(cfg).unwrap();
        let p = project_psh(cfg, u.phi(), 0.0, 1.0).unwrap();
        assert!(p.sup_distance(&u).unwrap() < 1e-12);
    }

    #[test]
    fn rooftop_agrees_with_primal_projection() {
        let cfg = cfg();
        let mut rng = crate::fixtures::seeded_rng(5);
        for _ in 0..5 {
            let a = Fixture::random_bounded(&mut rng).build(cfg).unwrap();
            let b = Fixture::random_bounded(&mut rng).build(cfg).unwrap();
            let p = rooftop(&a, &b).unwrap();
            let q = rooftop_by_projection(&a, &b).unwrap();
            assert!(p.sup_distance(&q).unwrap() < 5e-3);
        }
    }

    #[test]
    fn rooftop_of_ordered_pair_is_smaller() {
        let cfg = cfg();
        let a = Fixture::Constant { c: -1.0 }.build(cfg).unwrap();
        let b = Fixture::Constant { c: 0.5 }.build(cfg).unwrap();
        assert!(rooftop(&a, &b).unwrap() == a);
    }

    #[test]
    fn disjoint_domains_give_minus_infinity() {
        let cfg = cfg();
        let g = Fixture::GreenNormalized.build(cfg).unwrap();
        let d = crate::dual::DualPotential::new(cfg.dual_points, 0, vec![0.0; 10]).unwrap();
        let h = RadialPotential::primal_of(cfg, d).unwrap();
        assert_eq!(rooftop(&g, &h).unwrap_err(), LabError::MinusInfinity);
    }

    #[test]
    fn singularity_rooftop_converges_to_restriction() {
        let cfg = cfg();
        let u0 = Fixture::FubiniStudy.build(cfg).unwrap();
        let u1 = Fixture::AffineMixOf {
            a: Box::new(Fixture::FubiniStudy),
            b: Box::new(Fixture::GreenNormalized),
            t: 0.25,
        }
        .build(cfg)
        .unwrap();
        let r = rooftop_singularity(&u0, &u1).unwrap();
        assert!(r.converged);
        let exact = singularity_rooftop_exact(&u0, &u1).unwrap();
        assert!(r.potential.sup_distance(&exact).unwrap() < 1e-9);
        assert_eq!(r.potential.lelong().0, 0.25);
        // same singularity type as u0 itself: no change
        let same = rooftop_singularity(&u0, &u0.shift(-3.0)).unwrap();
        assert!(same.potential.sup_distance(&u0).unwrap() < 1e-9);
    }

    #[test]
    fn partition_of_ordered_pair_is_exact() {
        let cfg = cfg();
        let u0 = Fixture::random_tent(&mut crate::fixtures::seeded_rng(2)).build(cfg).unwrap();
        let u1 = u0.shift(0.5);
        let r = partition_residual(&u0, &u1).unwrap();
        assert!(r.residual < 1e-12);
        assert!((r.mass_on_lambda0 - 1.0).abs() < 1e-9);
        assert_eq!(r.mass_on_lambda1, 0.0);
    }

    #[test]
    fn green_counterexample_has_excess_mass() {
        let cfg = cfg();
        let u0 = Fixture::GreenPositivePart.build(cfg).unwrap();
        let u1 = Fixture::FubiniStudy.build(cfg).unwrap();
        let p = rooftop(&u0, &u1).unwrap();
        assert!(p.sup_distance(&u1).unwrap() < 1e-12);
        let r = partition_residual(&u0, &u1).unwrap();
        assert!((r.lhs_mass - 1.0).abs() < 1e-9);
        let expect = 1.0 - (-1f64).exp();
        assert!((r.mass_excess - expect).abs() < 5e-3, "{}", r.mass_excess);
    }
}
