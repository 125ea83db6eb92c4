//! Acceptance suite: closed-form reproduction and property checks, one test
//! per criterion, each printing a pass/fail line. Run with
//! `cargo test -p harmlab --test acceptance -- --nocapture`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use harmlab::blowup::{blowup_sequence, hausdorff_distance, nodal_components_s2, zero_set_blowup};
use harmlab::measure::{
    ball_measure, ball_measure_closed, ball_measure_two_sided, bounds_check_infinity,
    bounds_check_zero, degree_classify, f_r, r1, r2, ClassifyStatus, PolyMeasure,
};
use harmlab::metric::{
    cone_distance, epsilon_table, f_r_distance, f_r_single, pairwise_f_r, separation_experiment,
    ConeSearchConfig, LpOptions, SigmaMeasure,
};
use harmlab::particle::{discretize, Particle, ParticleMeasure};
use harmlab::poly::{harmonic_basis, lewy_polynomial, MultiIndex, Poly};
use harmlab::sphere::{
    big_piece_measure, build_rule, constants, derivative_bound_check, l1_norm_sphere,
    sup_norm_sphere, SphereRule,
};

const PI: f64 = std::f64::consts::PI;

fn random_homogeneous(k: u32, rng: &mut ChaCha8Rng) -> Poly {
    let basis = harmonic_basis(3, k).unwrap();
    loop {
        let p = basis.iter().fold(Poly::zero(3), |acc, b| {
            acc.add(&b.scale(rng.random_range(-2.0..2.0))).unwrap()
        });
        if !p.is_zero() {
            return p;
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Criterion 1: ball-measure identity. Quadrature omega(B_r) matches the
/// closed form (k/2) r^{n+k-2} ||h||_1 within 1e-6 relative for 20 random
/// homogeneous harmonics (k <= 4) at radii {0.5, 1, 2}; plus-side and
/// minus-side surface integrals agree within 1e-8.
#[test]
fn criterion_1_ball_measure_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let rule = build_rule(3, 0).unwrap();
    let mut max_closed: f64 = 0.0;
    let mut max_sides: f64 = 0.0;
    for i in 0..20 {
        let k = 1 + (i % 4) as u32;
        let p = random_homogeneous(k, &mut rng);
        let m = PolyMeasure::new(p, 1.0).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let (plus, minus) = ball_measure_two_sided(&m, r, &rule).unwrap();
            let closed = ball_measure_closed(&m, r, &rule).unwrap().unwrap();
            max_closed = max_closed.max((plus - closed).abs() / closed.abs());
            max_sides = max_sides.max((plus - minus).abs() / plus.abs().max(minus.abs()));
        }
    }
    println!(
        "criterion 1: closed-form rel err {max_closed:.3e} (tol 1e-6), side agreement {max_sides:.3e} (tol 1e-8) -> {}",
        if max_closed <= 1e-6 && max_sides <= 1e-8 { "PASS" } else { "FAIL" }
    );
    assert!(max_closed <= 1e-6);
    assert!(max_sides <= 1e-8);
}

/// Criterion 2: flat-measure anchor. h = x gives omega(B_r) = pi r^2 and
/// F_1 = pi/3 within 1e-6 by quadrature and 3% through the particle LP path.
#[test]
fn criterion_2_flat_anchor() {
    let m = PolyMeasure::new(Poly::parse("x", 3).unwrap(), 1.0).unwrap();
    let rule = build_rule(3, 0).unwrap();
    let mut max_ball: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let v = ball_measure(&m, r, &rule).unwrap();
        max_ball = max_ball.max((v - PI * r * r).abs() / (PI * r * r));
    }
    let f1 = f_r(&m, 1.0, &rule).unwrap();
    let f1_err = (f1 - PI / 3.0).abs() / (PI / 3.0);

    let cloud = discretize(&m, 1.0, &build_rule(3, 1).unwrap(), 4, 7)
        .unwrap()
        .consolidate_to(2000)
        .unwrap();
    let empty = ParticleMeasure::empty(3, 1.0);
    let lp = f_r_distance(&cloud, &empty, 1.0, &LpOptions::default()).unwrap();
    let lp_err = (lp - PI / 3.0).abs() / (PI / 3.0);
    println!(
        "criterion 2: ball rel err {max_ball:.3e}, F_1 rel err {f1_err:.3e} (tol 1e-6); particle path {lp_err:.3e} (tol 3e-2) -> {}",
        if max_ball <= 1e-6 && f1_err <= 1e-6 && lp_err <= 0.03 { "PASS" } else { "FAIL" }
    );
    assert!(max_ball <= 1e-6);
    assert!(f1_err <= 1e-6);
    assert!(lp_err <= 0.03);
}

/// Criterion 3: doubling exponents. Homogeneous degree k shows exponent
/// n + k - 2 within 1e-6 at every radius; mixed batteries h_d + h_j with
/// d <= 4 classify (j, d) correctly in at least 95% of 40 random cases.
#[test]
fn criterion_3_doubling_exponents() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let rule = build_rule(3, 0).unwrap();
    let mut max_exp_err: f64 = 0.0;
    for k in 1..=4u32 {
        let m = PolyMeasure::new(random_homogeneous(k, &mut rng), 1.0).unwrap();
        for r in [0.3, 1.0, 2.5] {
            let ratio = ball_measure(&m, 2.0 * r, &rule).unwrap() / ball_measure(&m, r, &rule).unwrap();
            let exponent = ratio.ln() / 2f64.ln();
            max_exp_err = max_exp_err.max((exponent - (1.0 + k as f64)).abs());
        }
    }
    let mut correct = 0usize;
    let total = 40usize;
    for _ in 0..total {
        let d = rng.random_range(2..=4u32);
        let j = rng.random_range(1..d);
        let p = random_homogeneous(d, &mut rng)
            .add(&random_homogeneous(j, &mut rng))
            .unwrap();
        let m = PolyMeasure::new(p, 1.0).unwrap();
        let c = degree_classify(&m, &rule).unwrap();
        if c.status == ClassifyStatus::Confirmed && c.j == j as i64 && c.d == d as i64 {
            correct += 1;
        }
    }
    let rate = correct as f64 / total as f64;
    println!(
        "criterion 3: homogeneous exponent err {max_exp_err:.3e} (tol 1e-6); classification {correct}/{total} (need >= 95%) -> {}",
        if max_exp_err <= 1e-6 && rate >= 0.95 { "PASS" } else { "FAIL" }
    );
    assert!(max_exp_err <= 1e-6);
    assert!(rate >= 0.95, "classification rate {rate}");
}

/// Criterion 4: the spherical-harmonic inequality suite. Lipschitz bound,
/// big piece, reverse Hoelder and the derivative bound: zero violations over
/// more than 10^4 randomized trials for k <= 4.
#[test]
fn criterion_4_inequality_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let rule = build_rule(3, 1).unwrap();
    let mut checks = 0usize;
    let mut violations = 0usize;
    for k in 1..=4u32 {
        let c = constants(3, k).unwrap();
        for _ in 0..10 {
            let p = random_homogeneous(k, &mut rng);
            let sup = sup_norm_sphere(&p, &rule).unwrap().value;
            let l1 = l1_norm_sphere(&p, &rule).unwrap();
            checks += 1;
            if sup > c.b_nk * l1 * (1.0 + 1e-9) {
                violations += 1;
            }
            checks += 1;
            if big_piece_measure(&p, &rule).unwrap() < c.l_nk {
                violations += 1;
            }
            for _ in 0..260 {
                let t1 = random_unit(&mut rng);
                let t2 = random_unit(&mut rng);
                let lhs = (p.evaluate(&t1).unwrap() - p.evaluate(&t2).unwrap()).abs();
                let dist = t1
                    .iter()
                    .zip(&t2)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                checks += 1;
                if lhs > c.a_nk * sup * dist * (1.0 + 1e-9) {
                    violations += 1;
                }
            }
        }
    }
    // Derivative bound: a random harmonic cubic, all |alpha| <= 3, 100
    // random points each.
    let cubic = random_homogeneous(3, &mut rng);
    for a0 in 0..=3u32 {
        for a1 in 0..=(3 - a0) {
            for a2 in 0..=(3 - a0 - a1) {
                if a0 + a1 + a2 == 0 {
                    continue;
                }
                let alpha = MultiIndex(vec![a0, a1, a2]);
                for _ in 0..100 {
                    let theta = random_unit(&mut rng);
                    checks += 1;
                    if !derivative_bound_check(&cubic, &alpha, &theta).unwrap() {
                        violations += 1;
                    }
                }
            }
        }
    }
    println!(
        "criterion 4: {checks} checks, {violations} violations (need 0, >= 10^4 trials) -> {}",
        if violations == 0 && checks >= 10_000 { "PASS" } else { "FAIL" }
    );
    assert!(checks >= 10_000);
    assert_eq!(violations, 0);
}

/// Criterion 5: the two-sided sandwiches. For 20 random mixed polynomials,
/// the top-degree bound holds at 10 radii beyond r_1 and the bottom-degree
/// bound at 10 radii below r_2, with zero violations.
#[test]
fn criterion_5_sandwich_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let rule = build_rule(3, 0).unwrap();
    let mut violations = 0usize;
    for _ in 0..20 {
        let d = rng.random_range(2..=4u32);
        let j = rng.random_range(1..d);
        let p = random_homogeneous(d, &mut rng)
            .add(&random_homogeneous(j, &mut rng))
            .unwrap();
        let m = PolyMeasure::new(p, 1.0).unwrap();
        let r1v = r1(&m, &rule).unwrap();
        let r2v = r2(&m, &rule).unwrap();
        for i in 0..10 {
            let t = (i as f64 + 1.0) / 10.0;
            let r_hi = r1v * 1e3f64.powf(t);
            if !bounds_check_infinity(&m, r_hi, &rule).unwrap() {
                violations += 1;
            }
            let r_lo = r2v * 1e-3f64.powf(t);
            if !bounds_check_zero(&m, r_lo, &rule).unwrap() {
                violations += 1;
            }
        }
    }
    println!(
        "criterion 5: 400 sandwich checks, {violations} violations (need 0) -> {}",
        if violations == 0 { "PASS" } else { "FAIL" }
    );
    assert_eq!(violations, 0);
}

fn reweighted(cloud: &ParticleMeasure, f: impl Fn(&[f64]) -> f64) -> ParticleMeasure {
    let particles: Vec<Particle> = cloud
        .particles()
        .map(|p| Particle { position: p.position.clone(), mass: p.mass * f(&p.position) })
        .collect();
    ParticleMeasure::from_particles(cloud.dim(), particles, cloud.truncation_radius()).unwrap()
}

/// Criterion 6: the F_r metric suite on particle clouds of at most 2000
/// points: semi-metric axioms, monotonicity in r, the F_r(mu, 0) identity
/// and the composition laws, all within LP tolerance 1e-6.
#[test]
fn criterion_6_metric_suite() {
    let opts = LpOptions::default();
    let flat = PolyMeasure::new(Poly::parse("x", 3).unwrap(), 1.0).unwrap();
    let rule = build_rule(3, 1).unwrap();
    let base = discretize(&flat, 1.6, &rule, 4, 7).unwrap().consolidate_to(2000).unwrap();

    // Axioms on a triple sharing a support.
    let mu = reweighted(&base, |_| 1.0);
    let nu = reweighted(&base, |x| 1.0 + 0.6 * x[1].max(0.0));
    let rho = reweighted(&base, |x| 1.4 - 0.5 * x[2].abs());
    let d = pairwise_f_r(&[&mu, &nu, &rho], 1.0, &opts).unwrap();
    let symmetric = (d[0][1] - d[1][0]).abs() <= 1e-6;
    let triangle = d[0][2] <= d[0][1] + d[1][2] + 1e-6
        && d[0][1] <= d[0][2] + d[2][1] + 1e-6
        && d[1][2] <= d[1][0] + d[0][2] + 1e-6;

    // Axioms across genuinely different supports (union-graph solves).
    let lewy = PolyMeasure::new(lewy_polynomial(), 1.0).unwrap();
    let lewy_cloud = discretize(&lewy, 1.6, &rule, 5, 3).unwrap().consolidate_to(1500).unwrap();
    let cone = PolyMeasure::new(Poly::parse("x*y", 3).unwrap(), 1.0).unwrap();
    let cone_cloud = discretize(&cone, 1.6, &rule, 4, 5).unwrap().consolidate_to(1500).unwrap();
    let d2 = pairwise_f_r(&[&base, &lewy_cloud, &cone_cloud], 1.0, &opts).unwrap();
    let triangle2 = d2[0][2] <= d2[0][1] + d2[1][2] + 1e-6
        && d2[0][1] <= d2[0][2] + d2[2][1] + 1e-6
        && d2[1][2] <= d2[1][0] + d2[0][2] + 1e-6;

    // Monotonicity in r.
    let mut monotone = true;
    let mut prev = 0.0;
    for r in [0.5, 1.0, 1.5] {
        let v = f_r_distance(&mu, &nu, r, &opts).unwrap();
        if v < prev - 1e-9 {
            monotone = false;
        }
        prev = v;
    }

    // F_r(mu, 0) = F_r(mu): LP against the empty measure equals the wall sum.
    let empty = ParticleMeasure::empty(3, 2.0);
    let lp0 = f_r_distance(&base, &empty, 1.0, &opts).unwrap();
    let identity = (lp0 - f_r_single(&base, 1.0)).abs() <= 1e-6 * lp0.max(1.0);

    // Composition law F_{rs}(mu, nu) = s F_r(T_{0,s} mu, T_{0,s} nu).
    let (r, s) = (0.8, 1.6);
    let lhs = f_r_distance(&mu, &nu, r * s, &opts).unwrap();
    let mus = mu.pushforward(&[0.0; 3], s).unwrap();
    let nus = nu.pushforward(&[0.0; 3], s).unwrap();
    let rhs = s * f_r_distance(&mus, &nus, r, &opts).unwrap();
    let composition = (lhs - rhs).abs() <= 1e-6 * lhs.max(1.0);

    let pass = symmetric && triangle && triangle2 && monotone && identity && composition;
    println!(
        "criterion 6: symmetry {symmetric}, triangle(shared) {triangle}, triangle(union) {triangle2}, monotone {monotone}, F_r(mu,0) identity {identity}, composition {composition} -> {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

/// Criterion 7: cone distances. Members of F_k sit within 0.02 of the cone;
/// every wrong-degree pair in a 12-case battery produces a witness radius
/// with d_r >= eps0; eps0 obeys its defining identity exactly.
#[test]
fn criterion_7_cone_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let cfg = ConeSearchConfig { restarts: 5, max_iters: 60, seed: 0xACCE, ..Default::default() };

    // eps0 identity (2 C~)^{n+k-1} eps0 = 1/2 for all d, k <= 4.
    let mut identity_ok = true;
    for d in 1..=4u32 {
        let table = epsilon_table(3, d).unwrap();
        for (i, &e) in table.eps0.iter().enumerate() {
            let k = i as f64 + 1.0;
            if ((2.0 * table.c_tilde).powf(3.0 + k - 1.0) * e - 0.5).abs() > 1e-9 {
                identity_ok = false;
            }
        }
    }

    // Cone members: d_1(omega_p, F_k) <= 0.02.
    let mut member_max: f64 = 0.0;
    for k in 1..=4u32 {
        let p = random_homogeneous(k, &mut rng);
        let m = PolyMeasure::new(p, 1.0).unwrap();
        let res = cone_distance(&SigmaMeasure::Poly(&m), k, 1.0, &cfg).unwrap();
        member_max = member_max.max(res.value);
    }

    // Wrong-degree battery: 12 (polynomial, k) pairs with deg != k.
    let mut witnesses = 0usize;
    let mut cases = 0usize;
    for (deg, k) in [(1u32, 2u32), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)] {
        for _ in 0..2 {
            let p = random_homogeneous(deg, &mut rng);
            let report = separation_experiment(&p, k, &[1.0], &cfg).unwrap();
            cases += 1;
            if report.witness_radius.is_some() {
                witnesses += 1;
            }
        }
    }
    let pass = identity_ok && member_max <= 0.02 && witnesses == cases;
    println!(
        "criterion 7: eps0 identity {identity_ok}, member max d_r {member_max:.4} (tol 0.02), witnesses {witnesses}/{cases} -> {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(identity_ok);
    assert!(member_max <= 0.02, "member distance {member_max}");
    assert_eq!(witnesses, cases);
}

/// Criterion 8: blow-up convergence for h = xy + x. The F_1 distance from
/// the normalized blow-up to the flat limit falls below 0.05 by r = 1e-3
/// and decreases over the last decade; the Hausdorff distance of rescaled
/// zero sets to {x = 0} decreases across r in {1, 0.3, 0.1, 0.03}.
#[test]
fn criterion_8_blowup_convergence() {
    let poly = Poly::parse("x*y + x", 3).unwrap();
    let m = PolyMeasure::new(poly.clone(), 1.0).unwrap();
    let rule = build_rule(3, 1).unwrap();
    let radii = [1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3];
    let seq = blowup_sequence(&m, &radii, &rule, 11).unwrap();
    let flat = PolyMeasure::new(Poly::parse("x", 3).unwrap(), 1.0).unwrap();
    // Fixed-spacing consolidation keeps the estimator aligned across the
    // sequence, so the reported distances track the true O(r) convergence.
    let spacing = 1.0 / 22.0;
    let limit = blowup_sequence(&flat, &[1.0], &rule, 11).unwrap()[0]
        .consolidate(spacing)
        .unwrap();
    let opts = LpOptions::default();
    let dists: Vec<f64> = seq
        .iter()
        .map(|nu| {
            let nu = nu.consolidate(spacing).unwrap();
            f_r_distance(&nu, &limit, 1.0, &opts).unwrap()
        })
        .collect();
    let final_small = dists[6] < 0.05;
    let monotone_last_decade = dists[6] <= dists[5] && dists[5] <= dists[4];

    let plane = zero_set_blowup(&Poly::parse("x", 3).unwrap(), 1.0, 1.0, 2, 3).unwrap();
    let mut hausdorff = Vec::new();
    for r in [1.0, 0.3, 0.1, 0.03] {
        let sample = zero_set_blowup(&poly, r, 1.0, 2, 3).unwrap();
        hausdorff.push(hausdorff_distance(&sample, &plane).unwrap());
    }
    let hausdorff_decreasing = hausdorff.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let pass = final_small && monotone_last_decade && hausdorff_decreasing;
    println!(
        "criterion 8: F_1 path {dists:.4?} (final < 0.05: {final_small}, monotone: {monotone_last_decade}); Hausdorff {hausdorff:.4?} decreasing: {hausdorff_decreasing} -> {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(final_small, "{dists:?}");
    assert!(monotone_last_decade, "{dists:?}");
    assert!(hausdorff_decreasing, "{hausdorff:?}");
}

/// Criterion 9: the Lewy demonstration. The nodal set splits S^2 into
/// exactly two components (stable across refinements), the laplacian
/// vanishes exactly, and the doubling exponents classify (3, 3).
#[test]
fn criterion_9_lewy_demo() {
    let lewy = lewy_polynomial();
    let components = nodal_components_s2(&lewy, 7).unwrap();
    let harmonic = lewy.laplacian().is_zero();
    let m = PolyMeasure::new(lewy, 1.0).unwrap();
    let rule: SphereRule = build_rule(3, 0).unwrap();
    let c = degree_classify(&m, &rule).unwrap();
    let pass = components == 2 && harmonic && c.j == 3 && c.d == 3 && c.status == ClassifyStatus::Confirmed;
    println!(
        "criterion 9: components {components} (want 2), laplacian zero {harmonic}, classified ({}, {}) -> {}",
        c.j,
        c.d,
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}
