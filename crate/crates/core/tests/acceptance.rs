//! Acceptance suite on the default grid. Prints one line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use radial_lab::energy::{energy_of_rooftop_check, profile_energy, Weight};
use radial_lab::envelope::{partition_residual, rooftop, rooftop_singularity};
use radial_lab::geodesic::{build_geodesic, endpoint_limit, legendre_in_t, End};
use radial_lab::metric::{
    chen_integral, complete_cauchy, contraction_check, distance, dual_l2, monotone_limit_distance, npc_check,
    pythagoras_check,
};
use radial_lab::profile::AlphaTailProfile;
use radial_lab::{seeded_rng, Fixture, ModelConfig, RadialPotential, Result};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn cfg() -> ModelConfig {
    ModelConfig::default()
}

/// Finite-energy fixture: bounded families plus uncut alpha tails.
fn e2_fixture(rng: &mut ChaCha8Rng) -> Fixture {
    if rng.gen_bool(0.2) {
        Fixture::AlphaTail {
            alpha: rng.gen_range(0.1..0.3),
            c: rng.gen_range(0.5..1.0),
        }
    } else {
        Fixture::random_bounded(rng)
    }
}

fn e2_tuple<const K: usize>(rng: &mut ChaCha8Rng) -> Result<[RadialPotential; K]> {
    let mut out = Vec::with_capacity(K);
    for _ in 0..K {
        out.push(e2_fixture(rng).build(cfg())?);
    }
    Ok(out.try_into().unwrap_or_else(|_| unreachable!()))
}

fn pythagorean_identity() -> Result<Verdict> {
    let mut rng = seeded_rng(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let [a, b] = e2_tuple(&mut rng)?;
        let p = pythagoras_check(&a, &b)?;
        worst = worst.max(p.residual / (1.0 + p.d_sq));
    }
    verdict(worst <= 1e-6, format!("100 pairs, worst residual/(1+d^2) = {worst:.3e}"))
}

fn rooftop_contraction() -> Result<Verdict> {
    let mut rng = seeded_rng(102);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let [u, v, w] = e2_tuple(&mut rng)?;
        worst = worst.min(contraction_check(&u, &v, &w)?);
    }
    verdict(worst >= -1e-6, format!("100 triples, smallest margin = {worst:.3e}"))
}

fn constant_speed() -> Result<Verdict> {
    let mut rng = seeded_rng(103);
    let ts = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let [a, b] = e2_tuple(&mut rng)?;
        let d = dual_l2(&a, &b)?;
        let g = build_geodesic(&a, &b)?;
        let path = ts.iter().map(|&t| g.eval(t)).collect::<Result<Vec<_>>>()?;
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                let dev = (dual_l2(&path[i], &path[j])? - (ts[j] - ts[i]) * d).abs();
                worst = worst.max(dev / (1.0 + d));
            }
        }
    }
    verdict(worst <= 1e-6, format!("50 pairs, worst deviation/(1+d) = {worst:.3e}"))
}

fn legendre_identity() -> Result<Verdict> {
    let mut rng = seeded_rng(104);
    let taus: Vec<f64> = (0..41).map(|k| -4.0 + 0.2 * k as f64).collect();
    let ts: Vec<f64> = (0..=4000).map(|k| k as f64 / 4000.0).collect();
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let a = Fixture::random_tent(&mut rng).build(cfg())?;
        let b = Fixture::random_tent(&mut rng).build(cfg())?;
        let g = build_geodesic(&a, &b)?;
        let rows = legendre_in_t(&g, &taus, &ts)?;
        for (row, &tau) in rows.iter().zip(&taus) {
            let p = rooftop(&a, &b.shift(-tau))?;
            let gap = row.iter().zip(p.phi()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            worst = worst.max(gap);
        }
    }
    verdict(worst <= 1e-3, format!("4 tent pairs x 41 taus, worst sup gap = {worst:.3e}"))
}

fn distance_formula() -> Result<Verdict> {
    let mut rng = seeded_rng(105);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..20 {
        let a = Fixture::random_smooth_dual(&mut rng).build(cfg())?;
        let b = Fixture::random_smooth_dual(&mut rng).build(cfg())?;
        if let Some(delta) = distance(&a, &b)?.cross_check_delta {
            worst = worst.max(delta);
            checked += 1;
        }
    }
    let u0 = Fixture::GreenPositivePart.build(cfg())?;
    let u1 = Fixture::FubiniStudy.build(cfg())?;
    let chen = chen_integral(&build_geodesic(&u0, &u1)?, 0.0)?;
    let d = dual_l2(&u0, &u1)?;
    verdict(
        checked == 20 && worst <= 1e-3 && chen <= 1e-6 && d >= 0.1,
        format!("{checked}/20 smooth pairs, worst relative gap = {worst:.3e}; counterexample velocity energy = {chen:.3e}, dual distance = {d:.4}"),
    )
}

fn energy_estimate() -> Result<Verdict> {
    let mut rng = seeded_rng(106);
    let weights = [0.5, 1.0, 2.0].map(|p| Weight::new(p).unwrap());
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let [a, b] = e2_tuple(&mut rng)?;
        for w in weights {
            worst = worst.min(energy_of_rooftop_check(&a, &b, w)?.margin);
        }
    }
    verdict(worst >= -1e-4, format!("50 pairs x 3 weights, smallest margin = {worst:.3e}"))
}

/// `u0` from alpha tails; `u1` from alpha tails and Green-type potentials
/// with a mass atom at the pole.
fn fixture_matrix() -> (Vec<Fixture>, Vec<Fixture>) {
    let tails = |alphas: &[f64]| -> Vec<Fixture> {
        alphas.iter().map(|&alpha| Fixture::AlphaTail { alpha, c: 1.0 }).collect()
    };
    let u0 = tails(&[0.2, 0.4, 0.6]);
    let mut u1 = tails(&[0.3, 0.5]);
    u1.push(Fixture::GreenNormalized);
    for t in [0.25, 0.5, 0.75] {
        u1.push(Fixture::AffineMixOf {
            a: Box::new(Fixture::GreenNormalized),
            b: Box::new(Fixture::FubiniStudy),
            t,
        });
    }
    (u0, u1)
}

fn e_characterization() -> Result<Verdict> {
    let (rows, cols) = fixture_matrix();
    let mut disagreements = 0;
    for f0 in &rows {
        let u0 = f0.build(cfg())?;
        for f1 in &cols {
            let u1 = f1.build(cfg())?;
            let env = rooftop_singularity(&u0, &u1)?;
            let same = env.potential.dual().start() == u0.dual().start()
                && env.potential.sup_distance(&u0)? <= 1e-6 * (1.0 + u0.sup_abs_phi());
            if same != u1.is_full_mass() {
                disagreements += 1;
            }
        }
    }
    verdict(
        disagreements == 0,
        format!("{}x{} matrix, {disagreements} disagreements", rows.len(), cols.len()),
    )
}

fn endpoint_classification() -> Result<Verdict> {
    let (rows, cols) = fixture_matrix();
    let mut disagreements = 0;
    for f0 in &rows {
        let u0 = f0.build(cfg())?;
        for f1 in &cols {
            let u1 = f1.build(cfg())?;
            let rec = endpoint_limit(&build_geodesic(&u0, &u1)?, End::Start, &[0.5, 0.1])?;
            if !rec.agree {
                disagreements += 1;
            }
        }
    }
    verdict(
        disagreements == 0,
        format!("{}x{} matrix, {disagreements} disagreements", rows.len(), cols.len()),
    )
}

fn tail_law() -> Result<Verdict> {
    let mut wrong = Vec::new();
    for alpha in [0.2, 0.3, 0.32, 0.35, 0.4, 0.6] {
        let p = AlphaTailProfile { alpha, c: 1.0 };
        for (w, bound) in [(2.0, 1.0 / 3.0), (1.0, 0.5)] {
            let finite = profile_energy(&p, Weight::new(w)?).value.is_finite();
            if finite != (alpha < bound) {
                wrong.push(format!("alpha={alpha} p={w}"));
            }
        }
    }
    verdict(wrong.is_empty(), format!("6 exponents x 2 weights, misclassified: {wrong:?}"))
}

fn smooth_perturbation(rng: &mut ChaCha8Rng) -> (f64, Vec<f64>, f64, Vec<f64>) {
    let shift = rng.gen_range(-0.5..0.5);
    let coeffs = (0..3).map(|_| rng.gen_range(-0.6..0.6)).collect();
    let dshift = rng.gen_range(-1.0..1.0);
    let dcoeffs = (0..3).map(|_| rng.gen_range(-0.4..0.4)).collect();
    (shift, coeffs, dshift, dcoeffs)
}

fn completeness() -> Result<Verdict> {
    let mut rng = seeded_rng(110);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (shift, coeffs, dshift, dcoeffs) = smooth_perturbation(&mut rng);
        let at = |c: f64| Fixture::SmoothDual {
            shift: shift + c * dshift,
            coeffs: coeffs.iter().zip(&dcoeffs).map(|(a, d)| a + c * d).collect(),
        };
        let seq = (0..20)
            .map(|k| at(2f64.powi(-k)).build(cfg()))
            .collect::<Result<Vec<_>>>()?;
        let limit = at(0.0).build(cfg())?;
        worst = worst.max(dual_l2(&complete_cauchy(&seq)?.limit, &limit)?);
    }
    let u = Fixture::AlphaTail { alpha: 0.3, c: 1.0 }.build(cfg())?;
    let cutoffs = (0..12)
        .map(|k| u.cutoff(0.25 * 2f64.powf(k as f64 / 2.0)))
        .collect::<Result<Vec<_>>>()?;
    let mono = monotone_limit_distance(&cutoffs, &u)?;
    verdict(
        worst <= 1e-3 && mono.nonincreasing && mono.last <= 1e-3,
        format!("10 sequences, worst limit distance = {worst:.3e}; cutoff chain final distance = {:.3e}", mono.last),
    )
}

fn partition_formula() -> Result<Verdict> {
    let mut rng = seeded_rng(111);
    let m = cfg().dual_points as f64;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = Fixture::random_smooth_dual(&mut rng).build(cfg())?;
        let b = Fixture::random_smooth_dual(&mut rng).build(cfg())?;
        let r = partition_residual(&a, &b)?;
        worst = worst.max(r.residual * m / 2.0 / r.contact_boundaries.max(1) as f64);
    }
    let u0 = Fixture::GreenPositivePart.build(cfg())?;
    let u1 = Fixture::FubiniStudy.build(cfg())?;
    let excess = partition_residual(&u0, &u1)?.mass_excess;
    verdict(
        worst <= 1.0 && excess >= 0.3,
        format!("20 smooth pairs, worst residual per boundary = {:.3e} (bound {:.3e}); counterexample excess = {excess:.4}", worst * 2.0 / m, 2.0 / m),
    )
}

fn metric_axioms_and_npc() -> Result<Verdict> {
    let mut rng = seeded_rng(112);
    let mut tri = f64::INFINITY;
    let mut npc = f64::INFINITY;
    for k in 0..100 {
        let [p, q, r] = e2_tuple(&mut rng)?;
        let (dpq, dqr, dpr) = (dual_l2(&p, &q)?, dual_l2(&q, &r)?, dual_l2(&p, &r)?);
        tri = tri.min(dpq + dqr - dpr).min(dpr + dqr - dpq).min(dpq + dpr - dqr);
        let lambda = [0.25, 0.5, 0.75][k % 3];
        let n = npc_check(&p, &q, &r, lambda)?;
        npc = npc.min(n.margin / n.scale);
    }
    verdict(
        tri >= -1e-9 && npc >= -1e-6,
        format!("100 triples, triangle margin = {tri:.3e}, scaled comparison margin = {npc:.3e}"),
    )
}

type Criterion = (&'static str, fn() -> Result<Verdict>);

const CRITERIA: [Criterion; 12] = [
    ("pythagorean identity", pythagorean_identity),
    ("rooftop contraction", rooftop_contraction),
    ("constant-speed geodesics", constant_speed),
    ("legendre identity", legendre_identity),
    ("distance formula agreement", distance_formula),
    ("energy estimate for rooftops", energy_estimate),
    ("finite-energy characterization", e_characterization),
    ("endpoint classification", endpoint_classification),
    ("energy tail law", tail_law),
    ("completeness construction", completeness),
    ("partition formula", partition_formula),
    ("metric axioms and comparison inequality", metric_axioms_and_npc),
];

fn main() -> ExitCode {
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = CRITERIA
            .iter()
            .map(|(_, run)| {
                scope.spawn(move || {
                    let start = Instant::now();
                    (run(), start.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    let mut failed = 0;
    for (k, ((name, _), (res, took))) in CRITERIA.iter().zip(results).enumerate() {
        let (pass, detail) = match res {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
