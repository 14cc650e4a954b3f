//! Weak geodesics. In dual variables the geodesic is the straight segment
//! `psi_t = (1 - t) psi_0 + t psi_1`.

use serde::Serialize;

use crate::capacity::{capacity_of_nodes, exceedance_mask};
use crate::dual::DualPotential;
use crate::envelope::{rooftop, rooftop_singularity};
use crate::error::{LabError, Result};
use crate::potential::RadialPotential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicStatus {
    Finite,
    /// The dual domains are disjoint, so `u_t` is `-inf` for `0 < t < 1`.
    IdenticallyMinusInfinity,
}

#[derive(Debug, Clone)]
pub struct Geodesic {
    u0: RadialPotential,
    u1: RadialPotential,
    status: GeodesicStatus,
}

/// Geodesic segment from `u0` to `u1`. Disjoint dual domains are reported
/// through the status rather than as an error.
pub fn build_geodesic(u0: &RadialPotential, u1: &RadialPotential) -> Result<Geodesic> {
    u0.same_grid(u1)?;
    let (d0, d1) = (u0.dual(), u1.dual());
    let status = if d0.start().max(d1.start()) <= d0.end().min(d1.end()) {
        GeodesicStatus::Finite
    } else {
        GeodesicStatus::IdenticallyMinusInfinity
    };
    Ok(Geodesic {
        u0: u0.clone(),
        u1: u1.clone(),
        status,
    })
}

/// Which end of the segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum End {
    Start,
    Finish,
}

impl Geodesic {
    pub fn status(&self) -> GeodesicStatus {
        self.status
    }

    pub fn u0(&self) -> &RadialPotential {
        &self.u0
    }

    pub fn u1(&self) -> &RadialPotential {
        &self.u1
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&t) {
            return Err(LabError::Argument(format!("t = {t} is outside [0, 1]")));
        }
        if self.status == GeodesicStatus::IdenticallyMinusInfinity {
            return Err(LabError::State("geodesic is identically -inf".into()));
        }
        Ok(())
    }

    /// Dual of `u_t` on the common domain, for any `t` in `[0, 1]`.
    pub fn dual_at(&self, t: f64) -> Result<DualPotential> {
        self.check(t)?;
        let (d0, d1) = (self.u0.dual(), self.u1.dual());
        // Keep the common domain even at the ends so that t -> 0 limits are
        // visible; eval() returns the stored endpoints instead.
        let a = d0.restrict_to(d1)?;
        let b = d1.restrict_to(d0)?;
        a.affine(&b, t)
    }

    /// `u_t`; the stored endpoints at `t = 0` and `t = 1`.
    pub fn eval(&self, t: f64) -> Result<RadialPotential> {
        self.check(t)?;
        if t == 0.0 {
            return Ok(self.u0.clone());
        }
        if t == 1.0 {
            return Ok(self.u1.clone());
        }
        RadialPotential::primal_of(*self.u0.config(), self.dual_at(t)?)
    }

    /// `psi_1 - psi_0` on the common dual domain, indexed from `start`.
    fn dual_gap(&self) -> Result<(usize, Vec<f64>)> {
        let a = self.u0.dual().restrict_to(self.u1.dual())?;
        let b = self.u1.dual().restrict_to(self.u0.dual())?;
        let gap = a.values().iter().zip(b.values()).map(|(p, q)| q - p).collect();
        Ok((a.start(), gap))
    }

    /// `du_t(s)/dt = -(psi_1 - psi_0)(x*)` with `x*` the smallest maximizer
    /// of `s x - psi_t(x)`; one-sided at `t = 0` and `t = 1`.
    pub fn velocity(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.velocity_at(t, &[s])?[0])
    }

    /// [`Geodesic::velocity`] at several points.
    pub fn velocity_at(&self, t: f64, points: &[f64]) -> Result<Vec<f64>> {
        let dual = self.dual_at(t)?;
        let (start, gap) = self.dual_gap()?;
        debug_assert_eq!(start, dual.start());
        let vals = dual.values();
        Ok(points
            .iter()
            .map(|&s| {
                let scores: Vec<f64> = vals
                    .iter()
                    .enumerate()
                    .map(|(k, v)| s * dual.x(start + k) - v)
                    .collect();
                let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let tol = 1e-12 * (1.0 + best.abs() + s.abs());
                let candidates = scores
                    .iter()
                    .zip(&gap)
                    .filter(|(v, _)| **v >= best - tol)
                    .map(|(_, d)| -d);
                pick_velocity(t, candidates)
            })
            .collect())
    }

    /// `int (du_t/dt)^2 dMA(u_t)` with the measure in atomic form: cells of
    /// the dual with a common secant slope form one atom, and the velocity
    /// there follows the same maximizer rule as [`Geodesic::velocity`].
    /// Atoms of a single cell use the velocity at the cell midpoint.
    pub fn velocity_energy(&self, t: f64) -> Result<f64> {
        let dual = self.dual_at(t)?;
        let (_, gap) = self.dual_gap()?;
        let w = 1.0 / dual.cells() as f64;
        let secants = dual.secant_slopes();
        let mut total = 0.0;
        let mut k = 0;
        while k < secants.len() {
            let mut end = k;
            while end + 1 < secants.len()
                && (secants[end + 1] - secants[k]).abs() <= 1e-9 * (1.0 + secants[k].abs())
            {
                end += 1;
            }
            // the atom sits at nodes k..=end+1 of the common domain; a
            // single cell is a sampled smooth stretch, so take its midpoint
            let vel = if end == k {
                -0.5 * (gap[k] + gap[k + 1])
            } else {
                pick_velocity(t, (k..=end + 1).map(|j| -gap[j]))
            };
            total += (end + 1 - k) as f64 * w * vel * vel;
            k = end + 1;
        }
        // pole atoms, reached through the extreme maximizers
        let (lo, hi) = (dual.x_lo(), 1.0 - dual.x_hi());
        total += lo * gap[0] * gap[0] + hi * gap[gap.len() - 1] * gap[gap.len() - 1];
        Ok(total)
    }
}

/// Velocity from the candidates at the maximizers, in increasing `x`:
/// right derivative at `t = 0`, left derivative at `t = 1`, smallest
/// maximizer in between.
fn pick_velocity(t: f64, mut candidates: impl Iterator<Item = f64>) -> f64 {
    if t == 0.0 {
        candidates.fold(f64::NEG_INFINITY, f64::max)
    } else if t == 1.0 {
        candidates.fold(f64::INFINITY, f64::min)
    } else {
        candidates.next().expect("maximizer set is nonempty")
    }
}

/// `u_t` on the primal grid, rebuilt as `sup_tau (P(u0, u1 - tau) + tau t)`.
#[derive(Debug, Clone, Serialize)]
pub struct TauSupPath {
    pub ts: Vec<f64>,
    /// `phi` samples of `u_t`, one row per `t`.
    pub samples: Vec<Vec<f64>>,
    /// Grid points at interior `t` where the sup sits on the edge of the
    /// `tau` grid; nonzero means the grid is too narrow.
    pub edge_hits: usize,
}

pub fn geodesic_via_tau_sup(
    u0: &RadialPotential,
    u1: &RadialPotential,
    taus: &[f64],
    ts: &[f64],
) -> Result<TauSupPath> {
    u0.same_grid(u1)?;
    if taus.len() < 2 || taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Argument("tau grid must be increasing with at least two points".into()));
    }
    let n = u0.config().primal_points;
    let mut samples = vec![vec![f64::NEG_INFINITY; n]; ts.len()];
    let mut arg = vec![vec![0usize; n]; ts.len()];
    for (k, &tau) in taus.iter().enumerate() {
        let p = rooftop(u0, &u1.shift(-tau))?;
        for (row, (&t, best)) in ts.iter().zip(samples.iter_mut()).enumerate() {
            for i in 0..n {
                let v = p.phi()[i] + tau * t;
                if v > best[i] {
                    best[i] = v;
                    arg[row][i] = k;
                }
            }
        }
    }
    let last = taus.len() - 1;
    let edge_hits = ts
        .iter()
        .zip(&arg)
        .filter(|(t, _)| **t > 0.0 && **t < 1.0)
        .map(|(_, a)| a.iter().filter(|&&k| k == 0 || k == last).count())
        .sum();
    Ok(TauSupPath {
        ts: ts.to_vec(),
        samples,
        edge_hits,
    })
}

/// `inf_t (u_t - tau t)` over a `t` grid, for each `tau`; rows are `phi`
/// samples. The grid is streamed so memory stays `O(len(taus) N)`.
pub fn legendre_in_t(g: &Geodesic, taus: &[f64], ts: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = g.u0().config().primal_points;
    let mut out = vec![vec![f64::INFINITY; n]; taus.len()];
    for &t in ts {
        let ut = g.eval(t)?;
        for (row, &tau) in out.iter_mut().zip(taus) {
            for (r, p) in row.iter_mut().zip(ut.phi()) {
                *r = r.min(p - tau * t);
            }
        }
    }
    Ok(out)
}

/// `inf_t (f(t) - tau t)` for sampled `f`; as `tau -> -inf` this tends to
/// `lim_{t -> 0} f(t)` for convex `f`.
pub fn t_legendre(ts: &[f64], fs: &[f64], tau: f64) -> f64 {
    ts.iter()
        .zip(fs)
        .map(|(t, f)| f - tau * t)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointRecord {
    pub end: End,
    pub epsilons: Vec<f64>,
    /// Distances `t` (or `1 - t`) from the endpoint.
    pub schedule: Vec<f64>,
    /// `capacities[e][k]`: capacity of `{|u_t - u_end| > eps_e}` at step `k`.
    pub capacities: Vec<Vec<f64>>,
    /// Capacity decays below 1e-3 for every epsilon.
    pub attained_by_capacity: bool,
    /// The singularity-type rooftop returns the endpoint.
    pub attained_by_envelope: bool,
    pub envelope_gap: f64,
    pub agree: bool,
}

pub const ENDPOINT_CAPACITY_TOL: f64 = 1e-3;
pub const ENDPOINT_ENVELOPE_TOL: f64 = 1e-6;

/// Classify whether `u_t` tends to the stored endpoint in capacity, along
/// `t = 2^-1, ..., 2^-10`, and compare with the envelope criterion.
pub fn endpoint_limit(g: &Geodesic, end: End, epsilons: &[f64]) -> Result<EndpointRecord> {
    if g.status() != GeodesicStatus::Finite {
        return Err(LabError::State("geodesic is identically -inf".into()));
    }
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(LabError::Argument("need at least one positive epsilon".into()));
    }
    let (target, other) = match end {
        End::Start => (g.u0(), g.u1()),
        End::Finish => (g.u1(), g.u0()),
    };
    let cfg = *target.config();
    let schedule: Vec<f64> = (1..=10).map(|k| 2f64.powi(-k)).collect();
    let path: Vec<RadialPotential> = schedule
        .iter()
        .map(|&d| g.eval(if end == End::Start { d } else { 1.0 - d }))
        .collect::<Result<_>>()?;
    let capacities = epsilons
        .iter()
        .map(|&eps| {
            path.iter()
                .map(|ut| capacity_of_nodes(cfg, &exceedance_mask(ut, target, eps)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let attained_by_capacity = capacities
        .iter()
        .all(|row| row.last().copied().unwrap_or(0.0) <= ENDPOINT_CAPACITY_TOL);

    let envelope = rooftop_singularity(target, other)?;
    let same_domain = envelope.potential.dual().start() == target.dual().start()
        && envelope.potential.dual().end() == target.dual().end();
    let envelope_gap = if same_domain {
        envelope.potential.sup_distance(target)?
    } else {
        f64::INFINITY
    };
    let attained_by_envelope = envelope_gap <= ENDPOINT_ENVELOPE_TOL * (1.0 + target.sup_abs_phi());
    Ok(EndpointRecord {
        end,
        epsilons: epsilons.to_vec(),
        schedule,
        capacities,
        attained_by_capacity,
        attained_by_envelope,
        envelope_gap,
        agree: attained_by_capacity == attained_by_envelope,
    })
}
