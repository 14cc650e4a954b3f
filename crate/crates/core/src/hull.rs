//! Greatest convex minorant of sampled data (Andrew's monotone chain,
//! lower half only).

use crate::dual::DualPotential;
use crate::error::{LabError, Result};

/// Indices of the lower convex hull vertices of `(xs[i], ys[i])`.
///
/// `xs` must be strictly increasing. Collinear interior points are dropped.
pub fn lower_hull_vertices(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    debug_assert_eq!(xs.len(), ys.len());
    let mut stack: Vec<usize> = Vec::with_capacity(xs.len());
    for k in 0..xs.len() {
        while stack.len() >= 2 {
            let a = stack[stack.len() - 2];
            let b = stack[stack.len() - 1];
            // Drop b unless it lies strictly below the chord a -> k.
            let cross = (xs[b] - xs[a]) * (ys[k] - ys[a]) - (ys[b] - ys[a]) * (xs[k] - xs[a]);
            if cross <= 0.0 {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(k);
    }
    stack
}

/// Greatest convex minorant of `(xs, ys)` evaluated at every `xs[i]`.
///
/// Points already on the minorant keep their original value.
pub fn convex_minorant(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n <= 2 {
        return ys.to_vec();
    }
    let verts = lower_hull_vertices(xs, ys);
    let mut out = vec![0.0; n];
    for w in verts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (ys[b] - ys[a]) / (xs[b] - xs[a]);
        for k in a..=b {
            let interp = ys[a] + slope * (xs[k] - xs[a]);
            out[k] = interp.min(ys[k]);
        }
    }
    if verts.len() == 1 {
        out[verts[0]] = ys[verts[0]];
    }
    out
}

/// Greatest convex minorant on `[0, 1]` of a finite sample set, evaluated on
/// the dual grid with `m` cells. Grid points outside the sampled x-range are
/// `+inf`.
pub fn lower_convex_hull(points: &[(f64, f64)], m: usize) -> Result<DualPotential> {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if pts.is_empty() {
        return Err(LabError::Argument(
            "lower convex hull needs at least one finite sample".into(),
        ));
    }
    if pts.iter().any(|(x, _)| *x < -1e-12 || *x > 1.0 + 1e-12) {
        return Err(LabError::Argument("hull samples must lie in [0, 1]".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // keep the smallest value per abscissa
    pts.dedup_by(|b, a| (a.0 - b.0).abs() <= 1e-15);
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let verts = lower_hull_vertices(&xs, &ys);

    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let ja = (lo * m as f64 - 1e-9).ceil().max(0.0) as usize;
    let jb = ((hi * m as f64 + 1e-9).floor() as usize).min(m);
    if ja > jb {
        return Err(LabError::Argument(
            "hull support contains no dual grid point".into(),
        ));
    }
    let mut values = Vec::with_capacity(jb - ja + 1);
    let mut seg = 0usize;
    for j in ja..=jb {
        let x = (j as f64 / m as f64).clamp(lo, hi);
        while seg + 2 < verts.len() && xs[verts[seg + 1]] < x {
            seg += 1;
        }
        let v = if verts.len() == 1 {
            ys[verts[0]]
        } else {
            let (a, b) = (verts[seg], verts[(seg + 1).min(verts.len() - 1)]);
            if a == b {
                ys[a]
            } else {
                let t = (x - xs[a]) / (xs[b] - xs[a]);
                ys[a] + t * (ys[b] - ys[a])
            }
        };
        values.push(v);
    }
    DualPotential::new(m, ja, values)
}

/// `max_k (q nodes[k] - vals[k])` for each ascending query `q`, by a
/// monotone pointer walk. `vals` must be convex in `nodes`.
pub fn sup_affine_sorted(nodes: &[f64], vals: &[f64], queries: &[f64]) -> Vec<f64> {
    let mut k = 0usize;
    queries
        .iter()
        .map(|&q| {
            let mut best = q * nodes[k] - vals[k];
            while k + 1 < nodes.len() {
                let next = q * nodes[k + 1] - vals[k + 1];
                if next > best {
                    best = next;
                    k += 1;
                } else {
                    break;
                }
            }
            best
        })
        .collect()
}
