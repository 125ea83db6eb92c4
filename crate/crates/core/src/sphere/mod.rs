//! Quadrature and norm estimation on S^{n-1}.
//!
//! n = 3 uses a product Gauss-Legendre x trapezoid rule for polynomial
//! moments plus a slice-exact adaptive engine for integrals involving |h| or
//! nodal-set indicators. n = 2 uses the trapezoid rule on the circle with
//! adaptive refinement. n > 3 falls back to seeded equal-weight Monte Carlo
//! with a reported statistical error.

mod engine;
mod gauss;

pub(crate) use engine::{
    integrate_s1_pointwise, integrate_s2, integrate_s2_pointwise, EngineParams, S2Task,
};

#[doc(hidden)]
pub use engine::probe as engine_probe;

pub(crate) use engine::nodal_curve_samples;
pub(crate) use engine::gauss_nodes_unit;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{monomials_up_to_degree, MultiIndex, Poly};

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

/// Total surface measure sigma_{n-1} = n omega_n of S^{n-1} in R^n.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Surface measure of the chordal cap { theta : |theta - theta_0| < rho }
/// on S^{n-1}. Exact for n = 3 (pi rho^2); colatitude quadrature otherwise.
pub fn cap_area_chordal(n: usize, rho: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("chordal radius {rho} outside [0, 2]")));
    }
    if n == 3 {
        return Ok(std::f64::consts::PI * rho * rho);
    }
    if n == 2 {
        // Arc of half-angle alpha on the circle.
        return Ok(2.0 * 2.0 * (rho / 2.0).asin());
    }
    let alpha = 2.0 * (rho / 2.0).asin();
    let rim = sphere_area(n - 1);
    // alpha * int_0^1 sin^{n-2}(alpha u) du, stable for tiny alpha.
    let v = gauss::gauss_on_interval(64, 0.0, 1.0, |u| (alpha * u).sin().powi(n as i32 - 2));
    Ok(rim * alpha * v)
}

/// Product-rule structure behind a rule on S^2: colatitude nodes/weights
/// and the azimuthal count. Ray-casting uses it to subdivide node cells.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductGrid {
    pub t_nodes: Vec<f64>,
    pub t_weights: Vec<f64>,
    pub azimuth: usize,
}

/// Quadrature rule on S^{n-1}: unit nodes, positive weights summing to
/// sigma_{n-1}, and the recorded polynomial exactness degree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereRule {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Polynomials up to this total degree integrate exactly (n = 2, 3).
    pub exactness_degree: u32,
    pub level: u32,
    /// RMS statistical error estimate for Monte Carlo rules, else None.
    pub statistical_error: Option<f64>,
    /// Seed of the node sampler for Monte Carlo rules.
    pub seed: Option<u64>,
    /// Present for n = 3 product rules.
    #[serde(default)]
    pub grid: Option<ProductGrid>,
}

impl SphereRule {
    /// Number of azimuthal panels backing the adaptive engine (n = 3).
    pub(crate) fn base_panels(&self) -> usize {
        (2 * self.azimuth_count()).clamp(64, 1024)
    }

    fn azimuth_count(&self) -> usize {
        match self.dim {
            3 => 16 << self.level,
            _ => 16 << self.level,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("rule serialization cannot fail")
    }
}

/// Build a quadrature rule on S^{n-1} at the given resolution level.
///
/// n = 3: product Gauss-Legendre (colatitude) x trapezoid (azimuth), exact
/// for polynomials of degree <= 2L - 1 with L = 8 * 2^level.
/// n = 2: M = 16 * 2^level equispaced angles, exact through degree M - 1.
/// n > 3: equal-weight Monte Carlo with 1024 * 4^level seeded nodes.
pub fn build_rule(n: usize, level: u32) -> Result<SphereRule> {
    if n < 2 {
        return Err(Error::InvalidParameter("sphere rules need n >= 2".into()));
    }
    match n {
        2 => {
            let m = 16usize << level;
            let mut nodes = Vec::with_capacity(m);
            let mut weights = Vec::with_capacity(m);
            let w = 2.0 * std::f64::consts::PI / m as f64;
            for i in 0..m {
                let phi = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                nodes.push(vec![phi.cos(), phi.sin()]);
                weights.push(w);
            }
            Ok(SphereRule {
                dim: 2,
                nodes,
                weights,
                exactness_degree: m as u32 - 1,
                level,
                statistical_error: None,
                seed: None,
                grid: None,
            })
        }
        3 => {
            let l = 8usize << level;
            let m = 2 * l;
            let (t_nodes, t_weights) = gauss::gauss_legendre(l).clone();
            let wphi = 2.0 * std::f64::consts::PI / m as f64;
            let mut nodes = Vec::with_capacity(l * m);
            let mut weights = Vec::with_capacity(l * m);
            for (t, wt) in t_nodes.iter().zip(&t_weights) {
                let s = (1.0 - t * t).max(0.0).sqrt();
                for i in 0..m {
                    let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                    nodes.push(vec![s * phi.cos(), s * phi.sin(), *t]);
                    weights.push(wt * wphi);
                }
            }
            Ok(SphereRule {
                dim: 3,
                nodes,
                weights,
                exactness_degree: 2 * l as u32 - 1,
                level,
                statistical_error: None,
                seed: None,
                grid: Some(ProductGrid { t_nodes, t_weights, azimuth: m }),
            })
        }
        _ => {
            let count = 1024usize << (2 * level);
            let seed = 0x5EED_0000_u64 ^ ((n as u64) << 32) ^ level as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let area = sphere_area(n);
            let w = area / count as f64;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                loop {
                    let v: Vec<f64> = (0..n).map(|_| normal_sample(&mut rng)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 1e-6 {
                        nodes.push(v.iter().map(|x| x / norm).collect());
                        break;
                    }
                }
            }
            Ok(SphereRule {
                dim: n,
                nodes,
                weights: vec![w; count],
                exactness_degree: 1,
                level,
                statistical_error: Some(area / (count as f64).sqrt()),
                seed: Some(seed),
                grid: None,
            })
        }
    }
}

fn normal_sample(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one value per call keeps the stream simple.
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Node-sum integration with Neumaier compensated summation; result is
/// independent of node order up to ~1e-16 relative.
pub fn integrate_with_rule(rule: &SphereRule, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut comp = 0.0;
    for (node, w) in rule.nodes.iter().zip(&rule.weights) {
        let v = w * f(node);
        let t = acc + v;
        if acc.abs() >= v.abs() {
            comp += (acc - t) + v;
        } else {
            comp += (v - t) + acc;
        }
        acc = t;
    }
    acc + comp
}

/// Integral of a polynomial over S^{n-1} using the plain rule nodes.
pub fn integrate_poly(p: &Poly, rule: &SphereRule) -> Result<f64> {
    check_dims(p, rule)?;
    Ok(integrate_with_rule(rule, |x| p.evaluate(x).expect("dims checked")))
}

fn check_dims(p: &Poly, rule: &SphereRule) -> Result<()> {
    if p.dim() != rule.dim {
        return Err(Error::DimensionMismatch { expected: rule.dim, got: p.dim() });
    }
    Ok(())
}

/// L^1 norm of p on S^{n-1}; adaptive near the nodal set for n = 2, 3.
pub fn l1_norm_sphere(p: &Poly, rule: &SphereRule) -> Result<f64> {
    check_dims(p, rule)?;
    match rule.dim {
        3 => {
            let params = EngineParams { base_panels: rule.base_panels(), ..Default::default() };
            Ok(integrate_s2(&S2Task::Abs { g: p }, &params))
        }
        2 => {
            let params = EngineParams { base_panels: rule.base_panels(), ..Default::default() };
            let mut f = |x: &[f64; 2]| p.evaluate(x).expect("dims checked").abs();
            Ok(integrate_s1_pointwise(&mut f, &params))
        }
        _ => Ok(integrate_with_rule(rule, |x| p.evaluate(x).expect("dims checked").abs())),
    }
}

/// Sup-norm estimate: lower bound from a dense scan polished by projected
/// gradient ascent, and the Lipschitz-envelope upper bound of the uniform
/// spherical-harmonic Lipschitz constant (informational unless A * mesh < 1).
#[derive(Clone, Copy, Debug)]
pub struct SupNorm {
    /// Polished maximum of |p| over scanned points (certified lower bound).
    pub value: f64,
    /// value * (1 + A_{n,k} * mesh).
    pub lipschitz_upper: f64,
    /// Chordal covering radius of the scan grid.
    pub mesh: f64,
}

pub fn sup_norm_sphere(p: &Poly, rule: &SphereRule) -> Result<SupNorm> {
    check_dims(p, rule)?;
    let n = rule.dim;
    let mut best = 0.0f64;
    let mut best_node: Option<Vec<f64>> = None;
    let mut consider = |node: &[f64], val: f64| {
        if val > best {
            best = val;
            best_node = Some(node.to_vec());
        }
    };
    let mesh;
    match n {
        3 => {
            let n_phi = 192usize.max(rule.azimuth_count());
            let n_t = n_phi / 2;
            for it in 0..=n_t {
                let t = -1.0 + 2.0 * it as f64 / n_t as f64;
                let s = (1.0 - t * t).max(0.0).sqrt();
                for ip in 0..n_phi {
                    let phi = 2.0 * std::f64::consts::PI * ip as f64 / n_phi as f64;
                    let node = [s * phi.cos(), s * phi.sin(), t];
                    consider(&node, p.evaluate(&node).expect("dims checked").abs());
                }
            }
            mesh = (2.0 / n_t as f64).hypot(2.0 * std::f64::consts::PI / n_phi as f64);
        }
        _ => {
            for node in &rule.nodes {
                consider(node, p.evaluate(node).expect("dims checked").abs());
            }
            // Equal-weight nodes: covering radius scales like (area/N)^{1/(n-1)}.
            let count = rule.node_count().max(1) as f64;
            mesh = (sphere_area(n) / count).powf(1.0 / (n as f64 - 1.0));
        }
    }
    // Polish the best candidates by projected gradient ascent.
    let mut top = best;
    if let Some(start) = best_node {
        let (_, polished) = polish_abs_max(p, &start, 80);
        top = top.max(polished);
    }
    let a_nk = match p.degree() {
        Some(k) if k >= 1 => constants(n, k).map(|c| c.a_nk).unwrap_or(f64::INFINITY),
        _ => 0.0,
    };
    Ok(SupNorm { value: top, lipschitz_upper: top * (1.0 + a_nk * mesh), mesh })
}

fn polish_abs_max(p: &Poly, start: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let normalize = |v: &mut Vec<f64>| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
    };
    let mut theta = start.to_vec();
    normalize(&mut theta);
    let mut best = p.evaluate(&theta).expect("dims fixed").abs();
    let mut step = 0.05;
    for _ in 0..iters {
        let val = p.evaluate(&theta).expect("dims fixed");
        let grad = p.gradient_at(&theta).expect("dims fixed");
        let dot: f64 = grad.iter().zip(&theta).map(|(g, t)| g * t).sum();
        let sign = if val >= 0.0 { 1.0 } else { -1.0 };
        let tangential: Vec<f64> = grad.iter().zip(&theta).map(|(g, t)| sign * (g - dot * t)).collect();
        let tnorm = tangential.iter().map(|x| x * x).sum::<f64>().sqrt();
        if tnorm < 1e-14 * best.max(1.0) {
            break;
        }
        let mut advanced = false;
        while step > 1e-14 {
            let mut cand: Vec<f64> = theta
                .iter()
                .zip(&tangential)
                .map(|(t, g)| t + step * g / tnorm)
                .collect();
            normalize(&mut cand);
            let cval = p.evaluate(&cand).expect("dims fixed").abs();
            if cval > best {
                theta = cand;
                best = cval;
                step *= 1.4;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    (theta, best)
}

/// The explicit constants of the spherical-harmonic inequality suite,
/// indexed by dimension n and degree k.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SphereConstants {
    /// Uniform Lipschitz constant of degree-k spherical harmonics.
    pub a_nk: f64,
    /// Big-piece constant: measure of the chordal cap of radius 1/(2 A).
    pub l_nk: f64,
    /// Reverse Hoelder constant 2 / l.
    pub b_nk: f64,
}

/// A_{n,k} = (2^{n+2} n k)^k sum_{1 <= |alpha| <= k} 1/alpha!,
/// l_{n,k} = cap area at chordal radius 1/(2 A), B = 2/l.
pub fn constants(n: usize, k: u32) -> Result<SphereConstants> {
    if n < 2 || k < 1 {
        return Err(Error::InvalidParameter("constants need n >= 2, k >= 1".into()));
    }
    let base = (2f64.powi(n as i32 + 2)) * n as f64 * k as f64;
    if k as f64 * base.ln() > 700.0 {
        return Err(Error::Overflow(format!(
            "(2^{{n+2}} n k)^k exceeds f64 range for n={n}, k={k}"
        )));
    }
    let mut inv_fact_sum = 0.0;
    for alpha in monomials_up_to_degree(n, k) {
        let mi = MultiIndex(alpha);
        if mi.order() >= 1 {
            inv_fact_sum += 1.0 / mi.factorial();
        }
    }
    let a_nk = base.powi(k as i32) * inv_fact_sum;
    let l_nk = cap_area_chordal(n, 1.0 / (2.0 * a_nk))?;
    if l_nk <= 0.0 || !l_nk.is_finite() {
        return Err(Error::Overflow(format!(
            "cap measure underflows for n={n}, k={k} (A = {a_nk:.3e})"
        )));
    }
    Ok(SphereConstants { a_nk, l_nk, b_nk: 2.0 / l_nk })
}

/// Surface measure of { |p| >= sup|p| / 2 } for homogeneous p; bounded
/// below by l_{n,k}.
pub fn big_piece_measure(p: &Poly, rule: &SphereRule) -> Result<f64> {
    check_dims(p, rule)?;
    if !p.is_homogeneous() {
        return Err(Error::InvalidParameter("big-piece measure needs homogeneous p".into()));
    }
    let sup = sup_norm_sphere(p, rule)?.value;
    if sup == 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    let half = Poly::monomial(p.dim(), vec![0; p.dim()], -0.5 * sup)?;
    let plus = p.add(&half)?; // p - sup/2
    let minus = p.scale(-1.0).add(&half)?; // -p - sup/2
    match rule.dim {
        3 => {
            let params = EngineParams { base_panels: rule.base_panels(), ..Default::default() };
            Ok(integrate_s2(&S2Task::IndicatorArea { g: &plus }, &params)
                + integrate_s2(&S2Task::IndicatorArea { g: &minus }, &params))
        }
        2 => {
            let params = EngineParams { base_panels: rule.base_panels(), ..Default::default() };
            let mut f = |x: &[f64; 2]| {
                if p.evaluate(x).expect("dims checked").abs() >= 0.5 * sup {
                    1.0
                } else {
                    0.0
                }
            };
            Ok(integrate_s1_pointwise(&mut f, &params))
        }
        _ => Ok(integrate_with_rule(rule, |x| {
            if p.evaluate(x).expect("dims checked").abs() >= 0.5 * sup {
                1.0
            } else {
                0.0
            }
        })),
    }
}

/// Check the interior derivative estimate for harmonic functions:
/// |D^alpha p(theta)| <= (2^{n+1} n |alpha|)^{|alpha|} sup_{|x|=2} |p|.
pub fn derivative_bound_check(p: &Poly, alpha: &MultiIndex, theta: &[f64]) -> Result<bool> {
    let n = p.dim();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
    }
    if theta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
    }
    if alpha.order() == 0 {
        return Err(Error::InvalidParameter("the derivative bound needs |alpha| >= 1".into()));
    }
    if !p.is_harmonic() {
        return Err(Error::NonHarmonic { residual: p.harmonic_residual() });
    }
    let mut d = p.clone();
    for (i, &a) in alpha.0.iter().enumerate() {
        for _ in 0..a {
            d = d.partial(i);
        }
    }
    let lhs = d.evaluate(theta)?.abs();
    let order = alpha.order();
    let base = 2f64.powi(n as i32 + 1) * n as f64 * order as f64;
    if order as f64 * base.ln() > 700.0 {
        return Err(Error::Overflow("derivative-bound factor exceeds f64 range".into()));
    }
    let factor = base.powi(order as i32);
    let rule = build_rule(n, 1)?;
    let sup_b2 = sup_norm_sphere(&p.scale_coords(2.0), &rule)?.value;
    Ok(lhs <= factor * sup_b2 * (1.0 + 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

    fn poly3(src: &str) -> Poly {
        Poly::parse(src, 3).unwrap()
    }

    /// Exact moment of x^a y^b z^c over S^2 (double-factorial formula);
    /// independent oracle for rule exactness.
    fn moment_s2(a: u32, b: u32, c: u32) -> f64 {
        if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
            return 0.0;
        }
        fn dfact(k: i64) -> f64 {
            if k <= 0 {
                1.0
            } else {
                k as f64 * dfact(k - 2)
            }
        }
        let s = (a + b + c) as i64;
        FOUR_PI * dfact(a as i64 - 1) * dfact(b as i64 - 1) * dfact(c as i64 - 1) / dfact(s + 1)
    }

    #[test]
    fn geometry_constants() {
        assert!((unit_ball_volume(3) - FOUR_PI / 3.0).abs() < 1e-14);
        assert!((sphere_area(3) - FOUR_PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn rule_total_mass_and_first_moments() {
        let rule = build_rule(3, 0).unwrap();
        let one = Poly::monomial(3, vec![0, 0, 0], 1.0).unwrap();
        assert!((integrate_poly(&one, &rule).unwrap() - FOUR_PI).abs() < 1e-10);
        let x = poly3("x");
        assert!(integrate_poly(&x, &rule).unwrap().abs() < 1e-12);
        let x2 = poly3("x^2");
        assert!((integrate_poly(&x2, &rule).unwrap() - FOUR_PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn rule_exactness_against_moment_oracle() {
        let rule = build_rule(3, 0).unwrap();
        for a in 0..=4u32 {
            for b in 0..=4u32 {
                for c in 0..=4u32 {
                    if a + b + c > rule.exactness_degree {
                        continue;
                    }
                    let p = Poly::monomial(3, vec![a, b, c], 1.0).unwrap();
                    let got = integrate_poly(&p, &rule).unwrap();
                    let want = moment_s2(a, b, c);
                    assert!(
                        (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                        "moment({a},{b},{c}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_surface_area() {
        for n in [2usize, 3, 4, 5] {
            let rule = build_rule(n, 0).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!(
                (total - sphere_area(n)).abs() <= 1e-8 * sphere_area(n),
                "n={n}: {total}"
            );
            for node in rule.nodes.iter().take(50) {
                let norm = node.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn l1_norm_examples() {
        let rule = build_rule(3, 0).unwrap();
        let v = l1_norm_sphere(&poly3("x"), &rule).unwrap();
        assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-9, "{v}");

        let c = Poly::monomial(3, vec![0, 0, 0], -2.5).unwrap();
        let vc = l1_norm_sphere(&c, &rule).unwrap();
        assert!((vc - 2.5 * FOUR_PI).abs() < 1e-9);
    }

    #[test]
    fn l1_norm_lewy_stable_across_levels() {
        let lewy = crate::poly::lewy_polynomial();
        let v0 = l1_norm_sphere(&lewy, &build_rule(3, 0).unwrap()).unwrap();
        let v1 = l1_norm_sphere(&lewy, &build_rule(3, 1).unwrap()).unwrap();
        assert!(v0 > 0.0);
        assert!((v0 - v1).abs() <= 1e-6 * v0, "{v0} vs {v1}");
    }

    #[test]
    fn sup_norm_examples() {
        let rule = build_rule(3, 0).unwrap();
        let sx = sup_norm_sphere(&poly3("x"), &rule).unwrap();
        assert!((sx.value - 1.0).abs() < 1e-10, "{}", sx.value);
        let sq = sup_norm_sphere(&poly3("x^2 - y^2"), &rule).unwrap();
        assert!((sq.value - 1.0).abs() < 1e-10, "{}", sq.value);
        assert!(sx.lipschitz_upper >= sx.value);
        // Bound-sandwich identity of the reported pair.
        let a = constants(3, 1).unwrap().a_nk;
        assert!((sx.lipschitz_upper - sx.value) <= a * sx.mesh * sx.value + 1e-12);
    }

    #[test]
    fn sup_norm_xy_is_half() {
        let rule = build_rule(3, 0).unwrap();
        let s = sup_norm_sphere(&poly3("x*y"), &rule).unwrap();
        assert!((s.value - 0.5).abs() < 1e-10, "{}", s.value);
    }

    #[test]
    fn constants_examples() {
        let c = constants(3, 1).unwrap();
        assert!((c.a_nk - 288.0).abs() < 1e-9);
        let rho = 1.0 / (2.0 * 288.0);
        assert!((c.l_nk - std::f64::consts::PI * rho * rho).abs() < 1e-18);
        assert!((c.b_nk * c.l_nk - 2.0).abs() < 1e-12);
        assert!(c.a_nk > 1.0 && c.b_nk > 1.0);
        assert!(c.l_nk > 0.0 && c.l_nk <= sphere_area(3));
    }

    #[test]
    fn constants_overflow_guard() {
        assert!(matches!(constants(3, 200), Err(Error::Overflow(_))));
    }

    #[test]
    fn big_piece_flat_value() {
        // sigma{ |theta_1| >= 1/2 } on S^2 = two caps of height 1/2 = 2 pi.
        let rule = build_rule(3, 0).unwrap();
        let v = big_piece_measure(&poly3("x"), &rule).unwrap();
        assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-9, "{v}");
    }

    #[test]
    fn big_piece_requires_homogeneous() {
        let rule = build_rule(3, 0).unwrap();
        assert!(big_piece_measure(&poly3("x + x^2"), &rule).is_err());
    }

    #[test]
    fn big_piece_lower_bound_holds() {
        let rule = build_rule(3, 0).unwrap();
        for k in 1..=4u32 {
            let l_nk = constants(3, k).unwrap().l_nk;
            for p in crate::poly::harmonic_basis(3, k).unwrap() {
                let v = big_piece_measure(&p, &rule).unwrap();
                assert!(v >= l_nk, "k={k}: {v} < {l_nk}");
            }
        }
    }

    #[test]
    fn derivative_bound_simple() {
        let p = poly3("x");
        let ok = derivative_bound_check(&p, &MultiIndex(vec![1, 0, 0]), &[0.0, 0.0, 1.0]).unwrap();
        assert!(ok);
        assert!(matches!(
            derivative_bound_check(&p, &MultiIndex(vec![0, 0, 0]), &[0.0, 0.0, 1.0]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn cap_area_small_alpha_general_n() {
        // For small rho the cap looks Euclidean: area ~ omega_{n-1} rho^{n-1}.
        for n in [4usize, 5] {
            let rho = 1e-3;
            let got = cap_area_chordal(n, rho).unwrap();
            let approx = unit_ball_volume(n - 1) * rho.powi(n as i32 - 1);
            assert!(
                (got - approx).abs() <= 1e-5 * approx,
                "n={n}: {got} vs {approx}"
            );
        }
    }

    #[test]
    fn rule_json_round_trip() {
        let rule = build_rule(3, 0).unwrap();
        let json = rule.to_json();
        let back: SphereRule = serde_json::from_str(&json).unwrap();
        assert_eq!(back.node_count(), rule.node_count());
        assert_eq!(back.exactness_degree, rule.exactness_degree);
    }
}
