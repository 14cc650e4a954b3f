//! Closed-form convex profiles on the whole real line.
//!
//! These carry the exact tail behaviour that a finite grid cuts off, and are
//! sampled onto a grid by truncating to `[-S, S]` and continuing linearly
//! with the asymptotic slopes.

use std::fmt::Debug;

use crate::config::{fs_profile, fs_slope, ModelConfig};
use crate::dual::DualPotential;
use crate::error::Result;
use crate::potential::RadialPotential;

pub trait Profile: Debug + Send + Sync {
    /// Convex profile `phi(s)`.
    fn phi(&self, s: f64) -> f64;
    /// Right derivative of `phi`.
    fn slope(&self, s: f64) -> f64;
    /// Asymptotic slopes `(a_lo, a_hi)` at `-inf` and `+inf`.
    fn slope_limits(&self) -> (f64, f64);

    /// `phi(s) - phi_FS(s)`; implementors override this where the
    /// subtraction would cancel for large `|s|`.
    fn u(&self, s: f64) -> f64 {
        self.phi(s) - fs_profile(s)
    }
}

/// `inf { s in [lo, hi] : slope(s) >= x }`, clamped to the bracket.
pub fn slope_inverse_on(p: &dyn Profile, x: f64, lo: f64, hi: f64) -> f64 {
    if p.slope(lo) >= x {
        return lo;
    }
    if p.slope(hi) < x {
        return hi;
    }
    // bisect in asinh(s) so that huge brackets resolve in few steps
    let (mut a, mut b) = (lo.asinh(), hi.asinh());
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if p.slope(mid.sinh()) >= x {
            b = mid;
        } else {
            a = mid;
        }
    }
    b.sinh()
}

/// Point where the slope crosses `x`, searched over essentially all of R.
pub fn slope_inverse(p: &dyn Profile, x: f64) -> f64 {
    slope_inverse_on(p, x, -1e300, 1e300)
}

/// Exact dual of the truncated profile on the dual grid.
pub fn truncated_dual(p: &dyn Profile, cfg: &ModelConfig) -> Result<DualPotential> {
    let (a_lo, a_hi) = p.slope_limits();
    let m = cfg.dual_points;
    let ja = (a_lo * m as f64 - 1e-9).ceil().max(0.0) as usize;
    let jb = ((a_hi * m as f64 + 1e-9).floor() as usize).min(m);
    let sw = cfg.half_width;
    let values = (ja..=jb)
        .map(|j| {
            let x = cfg.x(j);
            let s = slope_inverse_on(p, x, -sw, sw);
            x * s - p.phi(s)
        })
        .collect();
    DualPotential::new(m, ja, values)
}

/// Grid potential of the truncated profile.
pub fn sample_profile(p: &dyn Profile, cfg: ModelConfig) -> Result<RadialPotential> {
    RadialPotential::primal_of(cfg, truncated_dual(p, &cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProfile {
    pub c: f64,
}

impl Profile for ConstantProfile {
    fn phi(&self, s: f64) -> f64 {
        fs_profile(s) + self.c
    }
    fn slope(&self, s: f64) -> f64 {
        fs_slope(s)
    }
    fn slope_limits(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn u(&self, _s: f64) -> f64 {
        self.c
    }
}

/// `phi = s + 1`: the normalized Green function with a full log pole at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenProfile;

impl Profile for GreenProfile {
    fn phi(&self, s: f64) -> f64 {
        s + 1.0
    }
    fn slope(&self, _s: f64) -> f64 {
        1.0
    }
    fn slope_limits(&self) -> (f64, f64) {
        (1.0, 1.0)
    }
    fn u(&self, s: f64) -> f64 {
        1.0 - fs_profile(-s)
    }
}

/// `phi = max(s + 1, phi_FS)`, the positive part of the Green function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenPositivePart;

impl GreenPositivePart {
    /// Where `s + 1` meets `phi_FS`: `s0 = -log(e - 1)`.
    pub fn kink() -> f64 {
        -(std::f64::consts::E - 1.0).ln()
    }
}

impl Profile for GreenPositivePart {
    fn phi(&self, s: f64) -> f64 {
        (s + 1.0).max(fs_profile(s))
    }
    fn slope(&self, s: f64) -> f64 {
        if s >= Self::kink() {
            1.0
        } else {
            fs_slope(s)
        }
    }
    fn slope_limits(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn u(&self, s: f64) -> f64 {
        (1.0 - fs_profile(-s)).max(0.0)
    }
}

/// `max(phi_FS + lo, a_k s + b_k)` with slopes `a_k` in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TentProfile {
    pub lo: f64,
    pub lines: Vec<(f64, f64)>,
}

impl Profile for TentProfile {
    fn phi(&self, s: f64) -> f64 {
        self.lines
            .iter()
            .fold(fs_profile(s) + self.lo, |m, (a, b)| m.max(a * s + b))
    }
    fn slope(&self, s: f64) -> f64 {
        let v = self.phi(s);
        let tol = 1e-12 * (1.0 + v.abs());
        // right derivative: largest slope among active pieces
        let mut best = if fs_profile(s) + self.lo >= v - tol {
            fs_slope(s)
        } else {
            f64::NEG_INFINITY
        };
        for (a, b) in &self.lines {
            if a * s + b >= v - tol {
                best = best.max(*a);
            }
        }
        best
    }
    fn slope_limits(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn u(&self, s: f64) -> f64 {
        let fs = fs_profile(s);
        self.lines
            .iter()
            .fold(self.lo, |m, (a, b)| m.max(a * s + b - fs))
    }
}

/// `u = -c (1 + log(1 + e^{-s}))^alpha`, a full-mass potential whose
/// energy integrability near the pole `s = -inf` is set by `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaTailProfile {
    pub alpha: f64,
    pub c: f64,
}

impl AlphaTailProfile {
    fn rho(s: f64) -> f64 {
        1.0 + fs_profile(-s)
    }
}

impl Profile for AlphaTailProfile {
    fn phi(&self, s: f64) -> f64 {
        fs_profile(s) - self.c * Self::rho(s).powf(self.alpha)
    }
    fn slope(&self, s: f64) -> f64 {
        let x = fs_slope(s);
        let y = fs_slope(-s);
        x + self.c * self.alpha * Self::rho(s).powf(self.alpha - 1.0) * y
    }
    fn slope_limits(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn u(&self, s: f64) -> f64 {
        -self.c * Self::rho(s).powf(self.alpha)
    }
}

/// `max(phi, phi_FS - h)`.
#[derive(Debug)]
pub struct CutoffProfile {
    pub inner: Box<dyn Profile>,
    pub h: f64,
}

impl Profile for CutoffProfile {
    fn phi(&self, s: f64) -> f64 {
        self.inner.phi(s).max(fs_profile(s) - self.h)
    }
    fn slope(&self, s: f64) -> f64 {
        let a = self.inner.phi(s);
        let b = fs_profile(s) - self.h;
        let tol = 1e-12 * (1.0 + a.abs());
        if a > b + tol {
            self.inner.slope(s)
        } else if b > a + tol {
            fs_slope(s)
        } else {
            self.inner.slope(s).max(fs_slope(s))
        }
    }
    fn slope_limits(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn u(&self, s: f64) -> f64 {
        self.inner.u(s).max(-self.h)
    }
}

/// `(1 - t) a + t b`.
#[derive(Debug)]
pub struct MixProfile {
    pub a: Box<dyn Profile>,
    pub b: Box<dyn Profile>,
    pub t: f64,
}

impl Profile for MixProfile {
    fn phi(&self, s: f64) -> f64 {
        (1.0 - self.t) * self.a.phi(s) + self.t * self.b.phi(s)
    }
    fn slope(&self, s: f64) -> f64 {
        (1.0 - self.t) * self.a.slope(s) + self.t * self.b.slope(s)
    }
    fn slope_limits(&self) -> (f64, f64) {
        let (a0, a1) = self.a.slope_limits();
        let (b0, b1) = self.b.slope_limits();
        (
            (1.0 - self.t) * a0 + self.t * b0,
            (1.0 - self.t) * a1 + self.t * b1,
        )
    }
    fn u(&self, s: f64) -> f64 {
        (1.0 - self.t) * self.a.u(s) + self.t * self.b.u(s)
    }
}

/// `phi + c`.
#[derive(Debug)]
pub struct ShiftProfile {
    pub inner: Box<dyn Profile>,
    pub c: f64,
}

impl Profile for ShiftProfile {
    fn phi(&self, s: f64) -> f64 {
        self.inner.phi(s) + self.c
    }
    fn slope(&self, s: f64) -> f64 {
        self.inner.slope(s)
    }
    fn slope_limits(&self) -> (f64, f64) {
        self.inner.slope_limits()
    }
    fn u(&self, s: f64) -> f64 {
        self.inner.u(s) + self.c
    }
}
