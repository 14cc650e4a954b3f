//! Grid capacity against a linear program over all grid potentials squeezed
//! between 0 and 1, solved with a dense simplex.

use radial_lab::capacity::{capacity_of_nodes, interval_capacity, RadialSet};
use radial_lab::{fs_profile, ModelConfig};

/// Maximize `c.y` subject to `A y <= b`, `y >= 0`, with `b >= 0`.
/// Dense tableau, Bland's rule.
fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let (m, n) = (a.len(), c.len());
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(i, (row, &bi))| {
            assert!(bi >= -1e-12);
            let mut r = row.clone();
            r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
            r.push(bi.max(0.0));
            r
        })
        .collect();
    let mut obj: Vec<f64> = c.iter().map(|v| -v).chain(std::iter::repeat(0.0).take(m + 1)).collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        let Some(col) = (0..width - 1).find(|&j| obj[j] < -1e-12) else {
            return obj[width - 1];
        };
        let mut pivot: Option<(usize, f64)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[col] > 1e-12 {
                let ratio = row[width - 1] / row[col];
                let better = match pivot {
                    None => true,
                    Some((p, r)) => ratio < r - 1e-15 || (ratio <= r + 1e-15 && basis[i] < basis[p]),
                };
                if better {
                    pivot = Some((i, ratio));
                }
            }
        }
        let (p, _) = pivot.expect("linear program is unbounded");
        let piv = t[p][col];
        t[p].iter_mut().for_each(|v| *v /= piv);
        let prow = t[p].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != p && row[col] != 0.0 {
                let f = row[col];
                row.iter_mut().zip(&prow).for_each(|(v, q)| *v -= f * q);
            }
        }
        let f = obj[col];
        obj.iter_mut().zip(&prow).for_each(|(v, q)| *v -= f * q);
        basis[p] = col;
    }
}

/// `sup { MA(v)(B) : 0 <= v <= 1 }` over grid potentials, in the variables
/// `y_i = v(s_i)`.
fn lp_capacity(cfg: &ModelConfig, mask: &[bool]) -> f64 {
    let n = cfg.primal_points;
    let ds = cfg.ds();
    let fs: Vec<f64> = (0..n).map(|i| fs_profile(cfg.s(i))).collect();
    // node mass i as (coefficients on y, constant from phi_FS)
    let mass = |i: usize| -> (Vec<f64>, f64) {
        let mut coef = vec![0.0; n];
        let mut add = |j: usize, w: f64| coef[j] += w / ds;
        let konst;
        if i == 0 {
            add(1, 1.0);
            add(0, -1.0);
            konst = (fs[1] - fs[0]) / ds;
        } else if i == n - 1 {
            add(n - 1, -1.0);
            add(n - 2, 1.0);
            konst = 1.0 - (fs[n - 1] - fs[n - 2]) / ds;
        } else {
            add(i + 1, 1.0);
            add(i, -2.0);
            add(i - 1, 1.0);
            konst = (fs[i + 1] - 2.0 * fs[i] + fs[i - 1]) / ds;
        }
        (coef, konst)
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        a.push(row);
        b.push(1.0);
        let (coef, konst) = mass(i);
        a.push(coef.iter().map(|v| -v).collect());
        b.push(konst);
    }
    let mut c = vec![0.0; n];
    let mut base = 0.0;
    for i in (0..n).filter(|&i| mask[i]) {
        let (coef, konst) = mass(i);
        c.iter_mut().zip(&coef).for_each(|(x, y)| *x += y);
        base += konst;
    }
    (base + simplex_max(&c, &a, &b)).min(1.0)
}

fn coarse() -> ModelConfig {
    ModelConfig::new(6.0, 33, 16).unwrap()
}

#[test]
fn envelope_capacity_matches_linear_program() {
    let cfg = coarse();
    let sets = [
        RadialSet::interval(-1.0, 1.0).unwrap(),
        RadialSet::interval(-4.0, -2.5).unwrap(),
        RadialSet::interval(2.0, f64::INFINITY).unwrap(),
        RadialSet::new(vec![(-3.0, -1.5), (0.5, 2.0)]).unwrap(),
        RadialSet::interval(-0.1, 0.1).unwrap(),
    ];
    for set in &sets {
        let mask = set.node_mask(&cfg);
        let grid = capacity_of_nodes(cfg, &mask).unwrap();
        let lp = lp_capacity(&cfg, &mask);
        assert!((grid - lp).abs() < 1e-9, "{set:?}: envelope {grid} vs lp {lp}");
    }
}

#[test]
fn linear_program_tracks_closed_form_at_nodes() {
    let cfg = ModelConfig::new(6.0, 65, 32).unwrap();
    let (a, b) = (cfg.s(20), cfg.s(40));
    let mask = RadialSet::interval(a, b).unwrap().node_mask(&cfg);
    let lp = lp_capacity(&cfg, &mask);
    assert!((lp - interval_capacity(a, b)).abs() < 0.05, "{lp} vs {}", interval_capacity(a, b));
}
