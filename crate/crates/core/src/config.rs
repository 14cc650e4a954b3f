use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Discretization of the model: a uniform primal grid `s_i` on `[-S, S]`
/// and a uniform dual grid `x_j = j / M` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Primal half width `S`.
    pub half_width: f64,
    /// Number of primal nodes `N`.
    pub primal_points: usize,
    /// Number of dual cells `M`; the dual grid has `M + 1` nodes.
    pub dual_points: usize,
    /// Relative convexity tolerance.
    pub convexity_tol: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            half_width: 30.0,
            primal_points: 2048,
            dual_points: 1024,
            convexity_tol: 1e-9,
        }
    }
}

impl ModelConfig {
    pub fn new(half_width: f64, primal_points: usize, dual_points: usize) -> Result<Self> {
        let cfg = Self {
            half_width,
            primal_points,
            dual_points,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(LabError::InvalidConfig(format!(
                "half width must be positive, got {}",
                self.half_width
            )));
        }
        if self.primal_points < 16 {
            return Err(LabError::InvalidConfig(format!(
                "need at least 16 primal points, got {}",
                self.primal_points
            )));
        }
        if self.dual_points < 16 {
            return Err(LabError::InvalidConfig(format!(
                "need at least 16 dual points, got {}",
                self.dual_points
            )));
        }
        if !(self.convexity_tol > 0.0) {
            return Err(LabError::InvalidConfig(
                "convexity tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn ds(&self) -> f64 {
        2.0 * self.half_width / (self.primal_points - 1) as f64
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / self.dual_points as f64
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        if i + 1 == self.primal_points {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.ds()
        }
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.dual_points as f64
    }

    pub fn primal_grid(&self) -> Vec<f64> {
        (0..self.primal_points).map(|i| self.s(i)).collect()
    }

    pub fn dual_grid(&self) -> Vec<f64> {
        (0..=self.dual_points).map(|j| self.x(j)).collect()
    }

    /// Index of the primal node closest to `s`, clamped to the grid.
    pub fn nearest_node(&self, s: f64) -> usize {
        let k = ((s + self.half_width) / self.ds()).round();
        k.clamp(0.0, (self.primal_points - 1) as f64) as usize
    }
}

/// `log(1 + e^s)`, the Fubini-Study profile.
#[inline]
pub fn fs_profile(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Derivative of [`fs_profile`]: the logistic function.
#[inline]
pub fn fs_slope(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Legendre conjugate of the Fubini-Study profile, `x log x + (1-x) log(1-x)`.
#[inline]
pub fn fs_dual(x: f64) -> f64 {
    let a = if x > 0.0 { x * x.ln() } else { 0.0 };
    let b = if x < 1.0 { (1.0 - x) * (1.0 - x).ln() } else { 0.0 };
    a + b
}
