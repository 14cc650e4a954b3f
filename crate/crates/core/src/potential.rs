//! Radial potentials `phi = phi_FS + u` sampled on the primal grid, together
//! with their cached Legendre dual.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::{fs_profile, ModelConfig};
use crate::dual::DualPotential;
use crate::error::{LabError, Result};
use crate::hull::convex_minorant;

/// How the dual is computed from primal samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConjugateMethod {
    /// Monotone pointer walk, linear in `N + M`.
    #[default]
    SlopeMerge,
    /// Direct `O(N M)` search, kept as a cross-check.
    Naive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    cfg: ModelConfig,
    phi: Vec<f64>,
    slope_left: f64,
    slope_right: f64,
    dual: DualPotential,
}

/// Monge-Ampere measure of a potential: node masses on the primal grid plus
/// the two pole atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MaMeasure {
    pub node_mass: Vec<f64>,
    pub atom_neg: f64,
    pub atom_pos: f64,
}

impl MaMeasure {
    pub fn total(&self) -> f64 {
        self.node_mass.iter().sum::<f64>() + self.atom_neg + self.atom_pos
    }

    pub fn grid_mass(&self) -> f64 {
        self.node_mass.iter().sum()
    }
}

fn dual_index_range(cfg: &ModelConfig, a_lo: f64, a_hi: f64) -> Result<(usize, usize)> {
    let m = cfg.dual_points as f64;
    let ja = (a_lo * m - 1e-9).ceil().max(0.0) as usize;
    let jb = ((a_hi * m + 1e-9).floor() as usize).min(cfg.dual_points);
    if ja > jb {
        return Err(LabError::InvariantViolation(format!(
            "slope range [{a_lo}, {a_hi}] contains no dual grid point"
        )));
    }
    Ok((ja, jb))
}

/// Dual of the convex interpolant of `phi` with linear tails of slopes
/// `a_lo`, `a_hi`, sampled on the dual grid.
pub fn dual_from_samples(
    cfg: &ModelConfig,
    phi: &[f64],
    a_lo: f64,
    a_hi: f64,
    method: ConjugateMethod,
) -> Result<DualPotential> {
    let (ja, jb) = dual_index_range(cfg, a_lo, a_hi)?;
    let n = phi.len();
    let values = match method {
        ConjugateMethod::Naive => (ja..=jb)
            .map(|j| {
                let x = cfg.x(j);
                (0..n)
                    .map(|i| x * cfg.s(i) - phi[i])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect(),
        ConjugateMethod::SlopeMerge => {
            let mut out = Vec::with_capacity(jb - ja + 1);
            let mut i = 0usize;
            for j in ja..=jb {
                let x = cfg.x(j);
                let mut best = x * cfg.s(i) - phi[i];
                while i + 1 < n {
                    let next = x * cfg.s(i + 1) - phi[i + 1];
                    if next > best {
                        best = next;
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push(best);
            }
            out
        }
    };
    DualPotential::new(cfg.dual_points, ja, values)
}

impl RadialPotential {
    /// Potential from primal samples and asymptotic slopes.
    ///
    /// Samples must be convex with slopes in `[a_lo, a_hi]`, up to the
    /// configured tolerance. Rounding-level defects are repaired.
    pub fn from_samples(cfg: ModelConfig, phi: Vec<f64>, a_lo: f64, a_hi: f64) -> Result<Self> {
        Self::from_samples_with(cfg, phi, a_lo, a_hi, ConjugateMethod::SlopeMerge)
    }

    pub fn from_samples_with(
        cfg: ModelConfig,
        mut phi: Vec<f64>,
        a_lo: f64,
        a_hi: f64,
        method: ConjugateMethod,
    ) -> Result<Self> {
        cfg.validate()?;
        if phi.len() != cfg.primal_points {
            return Err(LabError::InvariantViolation(format!(
                "expected {} samples, got {}",
                cfg.primal_points,
                phi.len()
            )));
        }
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            return Err(LabError::InvariantViolation(format!(
                "non-finite sample at node {i}"
            )));
        }
        if !(0.0..=1.0).contains(&a_lo) || !(0.0..=1.0).contains(&a_hi) || a_lo > a_hi {
            return Err(LabError::InvariantViolation(format!(
                "asymptotic slopes ({a_lo}, {a_hi}) must satisfy 0 <= a_lo <= a_hi <= 1"
            )));
        }
        let scale = 1.0 + phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = cfg.convexity_tol * scale;
        let ds = cfg.ds();
        let mut defect = false;
        for (i, w) in phi.windows(3).enumerate() {
            let d2 = w[0] - 2.0 * w[1] + w[2];
            if d2 < -tol {
                return Err(LabError::InvariantViolation(format!(
                    "samples are not convex at node {}: second difference {d2:.3e}",
                    i + 1
                )));
            }
            defect |= d2 < 0.0;
        }
        let first = (phi[1] - phi[0]) / ds;
        let last = (phi[phi.len() - 1] - phi[phi.len() - 2]) / ds;
        if first < a_lo - tol / ds || last > a_hi + tol / ds {
            return Err(LabError::InvariantViolation(format!(
                "grid slopes [{first:.6}, {last:.6}] leave the asymptotic range [{a_lo}, {a_hi}]"
            )));
        }
        if defect {
            let s = cfg.primal_grid();
            phi = convex_minorant(&s, &phi);
        }
        let dual = dual_from_samples(&cfg, &phi, a_lo, a_hi, method)?;
        Ok(Self {
            cfg,
            phi,
            slope_left: a_lo,
            slope_right: a_hi,
            dual,
        })
    }

    /// Potential whose dual is exactly `dual`; samples are its conjugate.
    pub fn primal_of(cfg: ModelConfig, dual: DualPotential) -> Result<Self> {
        cfg.validate()?;
        if dual.cells() != cfg.dual_points {
            return Err(LabError::GridMismatch);
        }
        let s = cfg.primal_grid();
        let phi = dual.conjugate_sorted(&s).into_iter().map(|(v, _)| v).collect();
        Ok(Self {
            cfg,
            phi,
            slope_left: dual.x_lo(),
            slope_right: dual.x_hi(),
            dual,
        })
    }

    /// `phi_FS + c`.
    pub fn constant(cfg: ModelConfig, c: f64) -> Result<Self> {
        let dual = DualPotential::from_fn(cfg.dual_points, |x| crate::config::fs_dual(x) - c)?;
        Self::primal_of(cfg, dual)
    }

    #[inline]
    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Samples of `phi` on the primal grid.
    #[inline]
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Samples of `u = phi - phi_FS`.
    pub fn u(&self) -> Vec<f64> {
        (0..self.phi.len()).map(|i| self.u_at(i)).collect()
    }

    #[inline]
    pub fn u_at(&self, i: usize) -> f64 {
        self.phi[i] - fs_profile(self.cfg.s(i))
    }

    #[inline]
    pub fn slope_left(&self) -> f64 {
        self.slope_left
    }

    #[inline]
    pub fn slope_right(&self) -> f64 {
        self.slope_right
    }

    #[inline]
    pub fn dual(&self) -> &DualPotential {
        &self.dual
    }

    /// Dual computed afresh from the samples.
    pub fn dual_from_samples(&self, method: ConjugateMethod) -> Result<DualPotential> {
        dual_from_samples(&self.cfg, &self.phi, self.slope_left, self.slope_right, method)
    }

    /// Full Monge-Ampere mass, i.e. no mass at the poles.
    pub fn is_full_mass(&self) -> bool {
        self.dual.is_full()
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.cfg != other.cfg {
            return Err(LabError::GridMismatch);
        }
        Ok(())
    }

    /// `u + c`.
    pub fn shift(&self, c: f64) -> Self {
        Self {
            cfg: self.cfg,
            phi: self.phi.iter().map(|v| v + c).collect(),
            slope_left: self.slope_left,
            slope_right: self.slope_right,
            dual: self.dual.shift(c),
        }
    }

    pub fn sup_u(&self) -> f64 {
        (0..self.phi.len()).map(|i| self.u_at(i)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf_u(&self) -> f64 {
        (0..self.phi.len()).map(|i| self.u_at(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs_phi(&self) -> f64 {
        self.phi.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `sup_i |u_i - v_i|` on the primal grid.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .phi
            .iter()
            .zip(&other.phi)
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs())))
    }

    /// `phi(s)` at an arbitrary point, through the dual.
    pub fn eval_phi(&self, s: f64) -> f64 {
        self.dual.conjugate_at(s)
    }

    /// `u(s)` at an arbitrary point, through the dual.
    pub fn eval_u(&self, s: f64) -> f64 {
        self.eval_phi(s) - fs_profile(s)
    }

    /// Monge-Ampere measure from second differences of the samples.
    ///
    /// Node `i` carries the slope jump at `s_i`; the end nodes also absorb
    /// the tail mass beyond the grid. Total mass is `a_hi - a_lo` plus atoms.
    pub fn ma_measure(&self) -> MaMeasure {
        let ds = self.cfg.ds();
        let n = self.phi.len();
        let slopes: Vec<f64> = self.phi.windows(2).map(|w| (w[1] - w[0]) / ds).collect();
        let mut node_mass = Vec::with_capacity(n);
        node_mass.push((slopes[0] - self.slope_left).max(0.0));
        for w in slopes.windows(2) {
            node_mass.push((w[1] - w[0]).max(0.0));
        }
        node_mass.push((self.slope_right - slopes[n - 2]).max(0.0));
        MaMeasure {
            node_mass,
            atom_neg: self.slope_left,
            atom_pos: 1.0 - self.slope_right,
        }
    }

    /// Monge-Ampere measure as `M` atoms of mass `1/M`, one per finite dual
    /// cell, located at the cell's secant slope. Sorted by location.
    pub fn moment_atoms(&self) -> Vec<(f64, f64)> {
        let w = 1.0 / self.cfg.dual_points as f64;
        self.dual.secant_slopes().into_iter().map(|s| (s, w)).collect()
    }

    /// Lelong numbers at the two poles.
    pub fn lelong(&self) -> (f64, f64) {
        (self.slope_left, 1.0 - self.slope_right)
    }

    /// `max(u, -h)`, realized on the grid with tails `(0, 1)`.
    pub fn cutoff(&self, h: f64) -> Result<Self> {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(LabError::Argument(format!(
                "cutoff level must be finite and nonnegative, got {h}"
            )));
        }
        let phi: Vec<f64> = (0..self.phi.len())
            .map(|i| self.phi[i].max(fs_profile(self.cfg.s(i)) - h))
            .collect();
        if phi == self.phi && self.slope_left == 0.0 && self.slope_right == 1.0 {
            return Ok(self.clone());
        }
        Self::from_samples(self.cfg, phi, 0.0, 1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct PotentialRecord {
    config: ModelConfig,
    phi: Vec<f64>,
    slope_left: f64,
    slope_right: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dual: Option<DualPotential>,
}

impl Serialize for RadialPotential {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        PotentialRecord {
            config: self.cfg,
            phi: self.phi.clone(),
            slope_left: self.slope_left,
            slope_right: self.slope_right,
            dual: Some(self.dual.clone()),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for RadialPotential {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let rec = PotentialRecord::deserialize(de)?;
        let from_samples = RadialPotential::from_samples(rec.config, rec.phi, rec.slope_left, rec.slope_right)
            .map_err(D::Error::custom)?;
        let Some(dual) = rec.dual else {
            return Ok(from_samples);
        };
        let exact = RadialPotential::primal_of(rec.config, dual).map_err(D::Error::custom)?;
        let tol = 1e-9 * (1.0 + exact.sup_abs_phi());
        match exact.sup_distance(&from_samples) {
            Ok(d) if d <= tol => Ok(exact),
            _ => Err(D::Error::custom("stored dual does not match the samples")),
        }
    }
}
