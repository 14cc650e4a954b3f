//! Sampled Legendre duals on the grid `x_j = j / M`.
//!
//! A dual is `+inf` outside a contiguous index range `[start, end]`; only the
//! finite values are stored, so `+inf` never comes out of arithmetic.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::hull::convex_minorant;

const CONVEXITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DualPotential {
    cells: usize,
    start: usize,
    values: Vec<f64>,
}

impl DualPotential {
    /// Dual with finite `values` on indices `start..start + values.len()`.
    ///
    /// Small convexity defects (rounding level) are repaired by taking the
    /// convex minorant; larger ones are rejected.
    pub fn new(cells: usize, start: usize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::InvariantViolation(
                "dual is identically +inf".into(),
            ));
        }
        if start + values.len() > cells + 1 {
            return Err(LabError::InvariantViolation(format!(
                "dual support {}..{} exceeds the grid of {} cells",
                start,
                start + values.len(),
                cells
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::InvariantViolation(format!(
                "non-finite dual value at index {}",
                start + j
            )));
        }
        let scale = 1.0 + values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut worst = 0.0f64;
        for w in values.windows(3) {
            worst = worst.min(w[0] - 2.0 * w[1] + w[2]);
        }
        let mut dual = Self {
            cells,
            start,
            values,
        };
        if worst < 0.0 {
            if -worst > CONVEXITY_TOL * scale {
                return Err(LabError::InvariantViolation(format!(
                    "dual is not convex: second difference {worst:.3e}"
                )));
            }
            let xs: Vec<f64> = (0..dual.values.len()).map(|k| k as f64).collect();
            dual.values = convex_minorant(&xs, &dual.values);
        }
        Ok(dual)
    }

    /// Build from a full table of `M + 1` entries, `None` meaning `+inf`.
    pub fn from_entries(cells: usize, entries: &[Option<f64>]) -> Result<Self> {
        if entries.len() != cells + 1 {
            return Err(LabError::InvariantViolation(format!(
                "expected {} dual entries, got {}",
                cells + 1,
                entries.len()
            )));
        }
        let first = entries.iter().position(Option::is_some).ok_or_else(|| {
            LabError::InvariantViolation("dual is identically +inf".into())
        })?;
        let last = entries.iter().rposition(Option::is_some).unwrap();
        let values = entries[first..=last]
            .iter()
            .map(|e| {
                e.ok_or_else(|| {
                    LabError::InvariantViolation("dual domain is not an interval".into())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cells, first, values)
    }

    /// Dual on the full grid from a function of `x`.
    pub fn from_fn(cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..=cells).map(|j| f(j as f64 / cells as f64)).collect();
        Self::new(cells, 0, values)
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// First index of the finite domain.
    #[inline]
    pub fn start(&self) -> usize {
        self.start
    }

    /// Last index of the finite domain (inclusive).
    #[inline]
    pub fn end(&self) -> usize {
        self.start + self.values.len() - 1
    }

    /// Finite values on `start..=end`.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.cells as f64
    }

    /// Left end of the domain, the lower asymptotic slope of the primal.
    pub fn x_lo(&self) -> f64 {
        self.x(self.start)
    }

    /// Right end of the domain, the upper asymptotic slope of the primal.
    pub fn x_hi(&self) -> f64 {
        self.x(self.end())
    }

    /// Value at index `j`, `None` for `+inf`.
    #[inline]
    pub fn value(&self, j: usize) -> Option<f64> {
        if j >= self.start && j <= self.end() {
            Some(self.values[j - self.start])
        } else {
            None
        }
    }

    pub fn entries(&self) -> Vec<Option<f64>> {
        (0..=self.cells).map(|j| self.value(j)).collect()
    }

    /// Finite on the whole of `[0, 1]`.
    pub fn is_full(&self) -> bool {
        self.start == 0 && self.values.len() == self.cells + 1
    }

    fn check_cells(&self, other: &Self) -> Result<()> {
        if self.cells != other.cells {
            return Err(LabError::GridMismatch);
        }
        Ok(())
    }

    fn intersection(&self, other: &Self) -> Option<(usize, usize)> {
        let lo = self.start.max(other.start);
        let hi = self.end().min(other.end());
        (lo <= hi).then_some((lo, hi))
    }

    /// Dual of `u + c`.
    pub fn shift(&self, c: f64) -> Self {
        Self {
            cells: self.cells,
            start: self.start,
            values: self.values.iter().map(|v| v - c).collect(),
        }
    }

    /// `(1 - t) self + t other`; `+inf` absorbs whenever its weight is positive.
    pub fn affine(&self, other: &Self, t: f64) -> Result<Self> {
        self.check_cells(other)?;
        if t == 0.0 {
            return Ok(self.clone());
        }
        if t == 1.0 {
            return Ok(other.clone());
        }
        let (lo, hi) = self.intersection(other).ok_or(LabError::MinusInfinity)?;
        let values = (lo..=hi)
            .map(|j| (1.0 - t) * self.values[j - self.start] + t * other.values[j - other.start])
            .collect();
        Self::new(self.cells, lo, values)
    }

    /// Pointwise maximum; `+inf` wins.
    pub fn max(&self, other: &Self) -> Result<Self> {
        self.check_cells(other)?;
        let (lo, hi) = self.intersection(other).ok_or(LabError::MinusInfinity)?;
        let values = (lo..=hi)
            .map(|j| self.values[j - self.start].max(other.values[j - other.start]))
            .collect();
        Self::new(self.cells, lo, values)
    }

    /// `self` on the domain of `other`, `+inf` elsewhere.
    pub fn restrict_to(&self, other: &Self) -> Result<Self> {
        self.check_cells(other)?;
        let (lo, hi) = self.intersection(other).ok_or(LabError::MinusInfinity)?;
        Ok(Self {
            cells: self.cells,
            start: lo,
            values: self.values[lo - self.start..=hi - self.start].to_vec(),
        })
    }

    /// Slopes of the interpolant on each finite cell `[x_j, x_{j+1}]`.
    pub fn secant_slopes(&self) -> Vec<f64> {
        let m = self.cells as f64;
        self.values.windows(2).map(|w| (w[1] - w[0]) * m).collect()
    }

    /// Smallest scaled second difference `M^2 (psi_{j+1} - 2 psi_j + psi_{j-1})`.
    /// Returns `None` for domains with fewer than three points.
    pub fn min_curvature(&self) -> Option<f64> {
        let m2 = (self.cells * self.cells) as f64;
        self.values
            .windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]) * m2)
            .reduce(f64::min)
    }

    /// `max_j (s x_j - psi_j)` at each `s` of an ascending list, with the
    /// smallest maximizing index. Linear in `len(s) + M`.
    pub fn conjugate_sorted(&self, s: &[f64]) -> Vec<(f64, usize)> {
        let mut out = Vec::with_capacity(s.len());
        let mut k = 0usize;
        let n = self.values.len();
        let xs: Vec<f64> = (self.start..=self.end()).map(|j| self.x(j)).collect();
        for &si in s {
            debug_assert!(out.is_empty() || si >= s[out.len() - 1]);
            let mut best = si * xs[k] - self.values[k];
            while k + 1 < n {
                let next = si * xs[k + 1] - self.values[k + 1];
                if next > best {
                    best = next;
                    k += 1;
                } else {
                    break;
                }
            }
            out.push((best, self.start + k));
        }
        out
    }

    /// `max_j (s x_j - psi_j)` by direct search over all nodes.
    pub fn conjugate_at(&self, s: f64) -> f64 {
        (self.start..=self.end())
            .map(|j| s * self.x(j) - self.values[j - self.start])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Piecewise-linear interpolant at `x`; `None` outside the domain.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let m = self.cells as f64;
        let pos = x * m;
        let lo = self.start as f64;
        let hi = self.end() as f64;
        if pos < lo - 1e-9 || pos > hi + 1e-9 {
            return None;
        }
        let pos = pos.clamp(lo, hi);
        let j = (pos.floor() as usize).min(self.end());
        if j == self.end() {
            return Some(self.values[j - self.start]);
        }
        let t = pos - j as f64;
        let a = self.values[j - self.start];
        let b = self.values[j + 1 - self.start];
        Some(a + t * (b - a))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Finite(f64),
    Tag(String),
}

#[derive(Serialize, Deserialize)]
struct DualRecord {
    cells: usize,
    values: Vec<Entry>,
}

impl Serialize for DualPotential {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let values = self
            .entries()
            .into_iter()
            .map(|e| match e {
                Some(v) => Entry::Finite(v),
                None => Entry::Tag("inf".into()),
            })
            .collect();
        DualRecord {
            cells: self.cells,
            values,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for DualPotential {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let rec = DualRecord::deserialize(de)?;
        let entries = rec
            .values
            .into_iter()
            .map(|e| match e {
                Entry::Finite(v) => Ok(Some(v)),
                Entry::Tag(t) if t == "inf" => Ok(None),
                Entry::Tag(t) => Err(D::Error::custom(format!("unknown dual entry {t:?}"))),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        DualPotential::from_entries(rec.cells, &entries).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::fs_dual;

    fn fs(m: usize) -> DualPotential {
        DualPotential::from_fn(m, fs_dual).unwrap()
    }

    #[test]
    fn rejects_concave_data() {
        let err = DualPotential::new(4, 0, vec![0.0, 1.0, 0.0]).unwrap_err();
        assert!(matches!(err, LabError::InvariantViolation(_)));
    }

    #[test]
    fn repairs_rounding_defects() {
        let d = DualPotential::new(4, 0, vec![0.0, 1e-14, 0.0]).unwrap();
        assert!(d.values()[1] <= 0.0);
    }

    #[test]
    fn entries_round_trip() {
        let d = DualPotential::new(8, 3, vec![1.0, 0.5, 0.25, 0.5]).unwrap();
        let e = d.entries();
        assert_eq!(e[2], None);
        assert_eq!(e[3], Some(1.0));
        assert_eq!(e[7], None);
        assert_eq!(DualPotential::from_entries(8, &e).unwrap(), d);
    }

    #[test]
    fn holes_are_rejected() {
        let e = vec![Some(0.0), None, Some(0.0), None, None];
        assert!(DualPotential::from_entries(4, &e).is_err());
    }

    #[test]
    fn json_uses_inf_tag() {
        let d = DualPotential::new(4, 4, vec![-1.0]).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(text, r#"{"cells":4,"values":["inf","inf","inf","inf",-1.0]}"#);
        let back: DualPotential = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<DualPotential>(r#"{"cells":1,"values":["nan",1.0]}"#).is_err());
    }

    #[test]
    fn affine_absorbs_infinity() {
        let a = fs(16);
        let b = DualPotential::new(16, 8, vec![0.0; 9]).unwrap();
        let mid = a.affine(&b, 0.5).unwrap();
        assert_eq!(mid.start(), 8);
        assert_eq!(a.affine(&b, 0.0).unwrap(), a);
        assert_eq!(a.affine(&b, 1.0).unwrap(), b);
        let c = DualPotential::new(16, 0, vec![0.0; 4]).unwrap();
        assert_eq!(b.max(&c).unwrap_err(), LabError::MinusInfinity);
    }

    #[test]
    fn sorted_conjugate_matches_direct_search() {
        let d = fs(64);
        let s: Vec<f64> = (0..200).map(|k| -10.0 + k as f64 * 0.1).collect();
        for (si, (v, j)) in s.iter().zip(d.conjugate_sorted(&s)) {
            assert!((v - d.conjugate_at(*si)).abs() < 1e-14);
            assert!((si * d.x(j) - d.value(j).unwrap() - v).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_hits_nodes() {
        let d = fs(32);
        assert_eq!(d.interpolate(0.5), d.value(16));
        assert!(d.interpolate(1.5).is_none());
    }
}
