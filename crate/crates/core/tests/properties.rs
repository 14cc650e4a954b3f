//! Randomized invariants on a coarse grid.

use proptest::prelude::*;
use radial_lab::capacity::{capacity, RadialSet};
use radial_lab::energy::{aubin_mabuchi, energy, Weight};
use radial_lab::envelope::{rooftop, rooftop_by_projection};
use radial_lab::geodesic::build_geodesic;
use radial_lab::metric::{dual_l2, sandwich_check};
use radial_lab::{seeded_rng, ConjugateMethod, Fixture, ModelConfig, RadialPotential};

fn cfg() -> ModelConfig {
    ModelConfig::new(20.0, 512, 256).unwrap()
}

fn bounded(seed: u64) -> RadialPotential {
    Fixture::random_bounded(&mut seeded_rng(seed)).build(cfg()).unwrap()
}

fn close(a: &RadialPotential, b: &RadialPotential, tol: f64) -> bool {
    a.sup_distance(b).unwrap() <= tol * (1.0 + a.sup_abs_phi())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn conjugation_round_trips(seed in any::<u64>()) {
        let u = bounded(seed);
        let back = RadialPotential::primal_of(cfg(), u.dual().clone()).unwrap();
        prop_assert!(close(&u, &back, 1e-12));
        let naive = u.dual_from_samples(ConjugateMethod::Naive).unwrap();
        let merged = u.dual_from_samples(ConjugateMethod::SlopeMerge).unwrap();
        for (a, b) in naive.values().iter().zip(merged.values()) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn rooftop_is_symmetric_minorant(s0 in any::<u64>(), s1 in any::<u64>()) {
        let (a, b) = (bounded(s0), bounded(s1));
        let p = rooftop(&a, &b).unwrap();
        prop_assert!(close(&p, &rooftop(&b, &a).unwrap(), 0.0));
        let tol = 1e-9 * (1.0 + a.sup_abs_phi() + b.sup_abs_phi());
        for i in 0..p.phi().len() {
            prop_assert!(p.phi()[i] <= a.phi()[i].min(b.phi()[i]) + tol);
        }
        // kinks between grid nodes make the primal route differ at O(1/M)
        let primal = rooftop_by_projection(&a, &b).unwrap();
        prop_assert!(p.sup_distance(&primal).unwrap() <= 4.0 / cfg().dual_points as f64);
    }

    #[test]
    fn total_mass_is_one(seed in any::<u64>()) {
        let mu = bounded(seed).ma_measure();
        prop_assert!((mu.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distance_is_a_metric(s in any::<[u64; 3]>(), c in -2.0f64..2.0) {
        let [a, b, w] = s.map(bounded);
        let (ab, bw, aw) = (dual_l2(&a, &b).unwrap(), dual_l2(&b, &w).unwrap(), dual_l2(&a, &w).unwrap());
        prop_assert_eq!(ab, dual_l2(&b, &a).unwrap());
        prop_assert!(aw <= ab + bw + 1e-12);
        prop_assert!((dual_l2(&a, &a.shift(c)).unwrap() - c.abs()).abs() < 1e-12);
    }

    #[test]
    fn aubin_mabuchi_is_lipschitz_and_affine(s0 in any::<u64>(), s1 in any::<u64>(), t in 0.0f64..1.0) {
        let (a, b) = (bounded(s0), bounded(s1));
        let (ea, eb) = (aubin_mabuchi(&a).value().unwrap(), aubin_mabuchi(&b).value().unwrap());
        prop_assert!((ea - eb).abs() <= dual_l2(&a, &b).unwrap() + 1e-12);
        let ut = build_geodesic(&a, &b).unwrap().eval(t).unwrap();
        let et = aubin_mabuchi(&ut).value().unwrap();
        prop_assert!((et - ((1.0 - t) * ea + t * eb)).abs() < 1e-9);
    }

    #[test]
    fn cutoffs_decrease_to_the_potential(seed in any::<u64>()) {
        let u = Fixture::AlphaTail { alpha: 0.3, c: 1.0 }.build(cfg()).unwrap();
        let v = bounded(seed);
        let w = rooftop(&u, &v).unwrap();
        let mut prev = w.cutoff(1.0).unwrap();
        for k in 1..6 {
            let next = w.cutoff(2f64.powi(k)).unwrap();
            for (p, q) in prev.phi().iter().zip(next.phi()) {
                prop_assert!(q <= &(p + 1e-12));
            }
            prev = next;
        }
        prop_assert!(close(&prev, &w, 1e-12));
    }

    #[test]
    fn geodesic_stays_above_rooftop(s0 in any::<u64>(), s1 in any::<u64>(), t in 0.0f64..1.0) {
        let (a, b) = (bounded(s0), bounded(s1));
        let ut = build_geodesic(&a, &b).unwrap().eval(t).unwrap();
        let p = rooftop(&a, &b).unwrap();
        for (x, y) in ut.phi().iter().zip(p.phi()) {
            prop_assert!(x >= &(y - 1e-9));
        }
        // only the Aubin-Mabuchi energy is monotone; weighted energies
        // merely stay finite
        prop_assert!(aubin_mabuchi(&ut).value().unwrap() >= aubin_mabuchi(&p).value().unwrap() - 1e-12);
        for p in [0.5, 1.0, 2.0] {
            prop_assert!(energy(&ut, Weight::new(p).unwrap()).unwrap().is_finite());
        }
    }

    #[test]
    fn sandwich_bounds_hold(s0 in any::<u64>(), s1 in any::<u64>()) {
        let (a, b) = (bounded(s0), bounded(s1));
        let lo = rooftop(&a, &b).unwrap();
        let s = sandwich_check(&lo, &a).unwrap();
        prop_assert!(s.lower_margin >= -1e-9 && s.upper_margin >= -1e-9);
    }

    #[test]
    fn capacity_is_monotone_and_subadditive(a in -8.0f64..6.0, w1 in 0.1f64..3.0, gap in 0.1f64..2.0, w2 in 0.1f64..3.0) {
        let cfg = cfg();
        let i1 = RadialSet::interval(a, a + w1).unwrap();
        let i2 = RadialSet::interval(a + w1 + gap, a + w1 + gap + w2).unwrap();
        let hull = RadialSet::interval(a, a + w1 + gap + w2).unwrap();
        let (c1, c2) = (capacity(&i1, cfg).unwrap(), capacity(&i2, cfg).unwrap());
        let cu = capacity(&i1.union(&i2), cfg).unwrap();
        prop_assert!(cu <= c1 + c2 + 1e-6);
        prop_assert!(cu <= capacity(&hull, cfg).unwrap() + 1e-9);
        prop_assert!(c1 <= cu + 1e-9);
    }
}
