//! Polynomial harmonic measures evaluated on centered balls.
//!
//! The measure of a harmonic polynomial h with h(0) = 0 has density |grad h|
//! on the zero set; on centered balls it satisfies
//! omega_h(B_r) = int_{dB_r, h > 0} d_r h dsigma, and for homogeneous h of
//! degree k the closed form (k/2) r^{n+k-2} ||h||_{L^1(S^{n-1})}. Radii below
//! r_2 see the bottom homogeneous part, radii above r_1 the top part; the
//! doubling exponent log(omega(B_{tau r})/omega(B_r)) / log tau reveals the
//! corresponding degree.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::particle::ParticleMeasure;
use crate::poly::{HomogDecomp, Poly};
use crate::sphere::{
    constants, integrate_s1_pointwise, integrate_s2, integrate_s2_pointwise,
    integrate_with_rule, l1_norm_sphere, sphere_area, sup_norm_sphere, EngineParams, S2Task,
    SphereRule,
};
use crate::univariate::{roots_in_interval, small, UniPoly};

/// A scaled polynomial harmonic measure c * omega_h.
#[derive(Clone, Debug)]
pub struct PolyMeasure {
    poly: Poly,
    scale: f64,
    decomp: HomogDecomp,
}

impl PolyMeasure {
    /// Validates: non-zero harmonic polynomial, h(0) = 0, positive scale.
    pub fn new(poly: Poly, scale: f64) -> Result<Self> {
        if poly.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("measure scale must be positive, got {scale}")));
        }
        let residual = poly.harmonic_residual();
        if residual > 1e-10 {
            return Err(Error::NonHarmonic { residual });
        }
        if poly.coefficient(&vec![0; poly.dim()]) != 0.0 {
            return Err(Error::NonZeroAtOrigin);
        }
        let decomp = poly.homogeneous_decompose()?;
        Ok(PolyMeasure { poly, scale, decomp })
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn decomp(&self) -> &HomogDecomp {
        &self.decomp
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    pub fn degree(&self) -> u32 {
        self.decomp.top_degree()
    }

    pub fn bottom_degree(&self) -> u32 {
        self.decomp.bottom_degree()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.decomp.top_degree() == self.decomp.bottom_degree()
    }

    /// The measure c * T_{0,r} of this measure, realized as the measure of
    /// the dilated polynomial.
    pub fn dilate(&self, c: f64, r: f64) -> Result<PolyMeasure> {
        PolyMeasure::new(self.poly.dilate_scale(1.0, r)?, self.scale * c)
    }

    /// Radial derivative d_s h(s theta) at s = r for a unit direction.
    fn radial_derivative(&self, r: f64, theta: &[f64]) -> f64 {
        self.decomp
            .parts()
            .map(|(m, part)| m as f64 * r.powi(m as i32 - 1) * part.evaluate(theta).expect("dims match"))
            .sum()
    }

}

fn engine_params(rule: &SphereRule) -> EngineParams {
    EngineParams { base_panels: rule.base_panels(), ..Default::default() }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// omega(B_r) by sphere quadrature of the signed radial derivative over the
/// directions where h(r theta) > 0 (the plus-side surface integral).
pub fn ball_measure(m: &PolyMeasure, r: f64, rule: &SphereRule) -> Result<f64> {
    let v = ball_measure_side(m, r, rule, true)?;
    if let Some(closed) = ball_measure_closed(m, r, rule)? {
        let scale = closed.abs().max(v.abs());
        if scale > 1e-280 && (v - closed).abs() > 1e-5 * scale {
            return Err(Error::Internal(format!(
                "homogeneous ball-measure quadrature {v:.12e} disagrees with closed form {closed:.12e}"
            )));
        }
    }
    Ok(v)
}

/// Both surface integrals of the ball-measure identity: the plus side over
/// {h > 0} and the minus side over {h < 0}. They agree analytically.
pub fn ball_measure_two_sided(m: &PolyMeasure, r: f64, rule: &SphereRule) -> Result<(f64, f64)> {
    Ok((
        ball_measure_side(m, r, rule, true)?,
        ball_measure_side(m, r, rule, false)?,
    ))
}

fn ball_measure_side(m: &PolyMeasure, r: f64, rule: &SphereRule, plus: bool) -> Result<f64> {
    check_radius(r)?;
    if rule.dim != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: rule.dim });
    }
    let n = m.dim();
    match n {
        3 => {
            // Sign polynomial h(r theta) and integrand r^{n-1} d_r h(r theta),
            // both polynomials in theta.
            let mut g = m.poly.scale_coords(r);
            let mut q = Poly::zero(3);
            for (deg, part) in m.decomp.parts() {
                q = q.add(&part.scale(deg as f64 * r.powi(deg as i32 + 1)))?;
            }
            if !plus {
                g = g.scale(-1.0);
                q = q.scale(-1.0);
            }
            let v = integrate_s2(&S2Task::IndicatorTimes { g: &g, q: &q }, &engine_params(rule));
            Ok(m.scale * v)
        }
        2 => {
            let sign = if plus { 1.0 } else { -1.0 };
            let mut f = |theta: &[f64; 2]| {
                let x = [r * theta[0], r * theta[1]];
                if sign * m.poly.evaluate(&x).expect("dims match") > 0.0 {
                    sign * m.radial_derivative(r, theta) * r
                } else {
                    0.0
                }
            };
            Ok(m.scale * integrate_s1_pointwise(&mut f, &engine_params(rule)))
        }
        _ => {
            let sign = if plus { 1.0 } else { -1.0 };
            let rpow = r.powi(n as i32 - 1);
            Ok(m.scale
                * integrate_with_rule(rule, |theta| {
                    let x: Vec<f64> = theta.iter().map(|t| r * t).collect();
                    if sign * m.poly.evaluate(&x).expect("dims match") > 0.0 {
                        sign * m.radial_derivative(r, theta) * rpow
                    } else {
                        0.0
                    }
                }))
        }
    }
}

/// Closed form (k/2) r^{n+k-2} ||h||_{L^1} for homogeneous measures;
/// None when the polynomial is not homogeneous.
pub fn ball_measure_closed(m: &PolyMeasure, r: f64, rule: &SphereRule) -> Result<Option<f64>> {
    check_radius(r)?;
    if !m.is_homogeneous() {
        return Ok(None);
    }
    let k = m.degree();
    let n = m.dim();
    let l1 = l1_norm_sphere(&m.poly, rule)?;
    Ok(Some(m.scale * k as f64 / 2.0 * r.powi((n as u32 + k - 2) as i32) * l1))
}

/// F_r = int_0^r omega(B_s) ds. The radial profile is resolved exactly per
/// direction (polynomial antiderivative between the ray's nodal crossings),
/// leaving a single adaptive integral over the sphere.
pub fn f_r(m: &PolyMeasure, r: f64, rule: &SphereRule) -> Result<f64> {
    check_radius(r)?;
    if rule.dim != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: rule.dim });
    }
    let n = m.dim();
    let d = m.degree() as usize;
    if d + n >= small::MAX {
        return Err(Error::InvalidParameter(format!(
            "degree {d} exceeds the radial-profile cap in dimension {n}"
        )));
    }
    if n == 3 && m.is_homogeneous() {
        // The radial profile collapses: F_r = int_{h>0} h(theta) dsigma
        // times k r^{n+k-1} / (n+k-1), a slice-exact indicator task.
        let k = d as f64;
        let factor = k * r.powi((d + n - 1) as i32) / (k + n as f64 - 1.0);
        let q = m.poly.scale(factor);
        let v = m.scale
            * integrate_s2(&S2Task::IndicatorTimes { g: &m.poly, q: &q }, &engine_params(rule));
        if let Some(closed) = f_r_closed(m, r, rule)? {
            let scale = closed.abs().max(v.abs());
            if scale > 1e-280 && (v - closed).abs() > 1e-5 * scale {
                return Err(Error::Internal(format!(
                    "homogeneous F_r quadrature {v:.12e} disagrees with closed form {closed:.12e}"
                )));
            }
        }
        return Ok(v);
    }
    let accumulated = |theta: &[f64]| -> f64 {
        // int over { s in (0, r) : g(s) > 0 } of s^{n-1} g'(s) ds, exactly.
        let mut coeffs = [0.0; small::MAX];
        for (deg, part) in m.decomp.parts() {
            coeffs[deg as usize] = part.evaluate(theta).expect("dims match");
        }
        let mut anti = [0.0; small::MAX];
        for deg in 1..=d {
            // s^{n-1} * deg * a * s^{deg-1} integrates to
            // deg * a / (deg + n - 1) * s^{deg+n-1}.
            anti[deg + n - 1] = deg as f64 * coeffs[deg] / (deg + n - 1) as f64;
        }
        let horner = |c: &[f64], t: f64| c.iter().rev().fold(0.0, |acc, v| acc * t + v);
        let mut breaks = [0.0; small::MAX];
        let nb = small::sign_change_roots(&coeffs[..=d], 0.0, r, &mut breaks);
        breaks[nb] = r;
        let mut acc = 0.0;
        let mut lo = 0.0;
        for &hi in breaks[..=nb].iter() {
            if hi > lo {
                let mid = 0.5 * (lo + hi);
                if horner(&coeffs[..=d], mid) > 0.0 {
                    acc += horner(&anti[..d + n], hi) - horner(&anti[..d + n], lo);
                }
            }
            lo = hi;
        }
        acc
    };
    let params = EngineParams {
        base_panels: rule.base_panels(),
        rel_tol: 1e-8,
        ..Default::default()
    };
    let v = match n {
        3 => {
            let mut f = |theta: &[f64; 3]| accumulated(theta);
            integrate_s2_pointwise(&mut f, &params, 12)
        }
        2 => {
            let mut f = |theta: &[f64; 2]| accumulated(theta);
            integrate_s1_pointwise(&mut f, &params)
        }
        _ => integrate_with_rule(rule, accumulated),
    };
    let v = m.scale * v;
    if let Some(closed) = f_r_closed(m, r, rule)? {
        let scale = closed.abs().max(v.abs());
        if scale > 1e-280 && (v - closed).abs() > 1e-5 * scale {
            return Err(Error::Internal(format!(
                "homogeneous F_r quadrature {v:.12e} disagrees with closed form {closed:.12e}"
            )));
        }
    }
    Ok(v)
}

/// Closed form F_r = k ||h||_1 r^{n+k-1} / (2 (n+k-1)) for homogeneous h.
pub fn f_r_closed(m: &PolyMeasure, r: f64, rule: &SphereRule) -> Result<Option<f64>> {
    check_radius(r)?;
    if !m.is_homogeneous() {
        return Ok(None);
    }
    let k = m.degree() as f64;
    let n = m.dim() as f64;
    let l1 = l1_norm_sphere(&m.poly, rule)?;
    Ok(Some(m.scale * k * l1 / (2.0 * (n + k - 1.0)) * r.powf(n + k - 1.0)))
}

/// zeta = max_{1 <= i < d} ||h_i|| / ||h_d|| over sup norms on the sphere;
/// zero for homogeneous polynomials.
pub fn zeta(m: &PolyMeasure, rule: &SphereRule) -> Result<f64> {
    let d = m.degree();
    let sup_top = sup_norm_sphere(m.decomp().part(d).expect("top part exists"), rule)?.value;
    let mut worst: f64 = 0.0;
    for (deg, part) in m.decomp().parts() {
        if deg < d {
            worst = worst.max(sup_norm_sphere(part, rule)?.value / sup_top);
        }
    }
    Ok(worst)
}

/// zeta_* = max_{j < i <= d} ||h_i|| / ||h_j||; zero for homogeneous.
pub fn zeta_star(m: &PolyMeasure, rule: &SphereRule) -> Result<f64> {
    let j = m.bottom_degree();
    let sup_bottom = sup_norm_sphere(m.decomp().part(j).expect("bottom part exists"), rule)?.value;
    let mut worst: f64 = 0.0;
    for (deg, part) in m.decomp().parts() {
        if deg > j {
            worst = worst.max(sup_norm_sphere(part, rule)?.value / sup_bottom);
        }
    }
    Ok(worst)
}

/// r_1 = 1 + 12 sigma_{n-1} zeta / l_{n,d}: beyond it the top degree rules.
pub fn r1(m: &PolyMeasure, rule: &SphereRule) -> Result<f64> {
    let z = zeta(m, rule)?;
    if z == 0.0 {
        return Ok(1.0);
    }
    let l = constants(m.dim(), m.degree())?.l_nk;
    Ok(1.0 + 12.0 * sphere_area(m.dim()) * z / l)
}

/// r_2 = min(1/2, l_{n,j} / (72 sigma_{n-1} zeta_*)): below it the bottom
/// degree rules.
pub fn r2(m: &PolyMeasure, rule: &SphereRule) -> Result<f64> {
    let z = zeta_star(m, rule)?;
    if z == 0.0 {
        return Ok(0.5);
    }
    let l = constants(m.dim(), m.bottom_degree())?.l_nk;
    Ok((l / (72.0 * sphere_area(m.dim()) * z)).min(0.5))
}

/// Two-sided bound (l/4) d r^{n+d-2} ||h_d|| <= omega(B_r) <= (3 sigma/2) d
/// r^{n+d-2} ||h_d||, valid for r > r_1.
pub fn bounds_check_infinity(m: &PolyMeasure, r: f64, rule: &SphereRule) -> Result<bool> {
    let r1v = r1(m, rule)?;
    if r <= r1v {
        return Err(Error::InvalidParameter(format!(
            "bounds at infinity need r > r_1 = {r1v:.6e}, got {r}"
        )));
    }
    let d = m.degree();
    bounds_check_at(m, r, rule, d)
}

/// Same bound driven by the bottom degree j, valid for r < r_2.
pub fn bounds_check_zero(m: &PolyMeasure, r: f64, rule: &SphereRule) -> Result<bool> {
    let r2v = r2(m, rule)?;
    if r >= r2v {
        return Err(Error::InvalidParameter(format!(
            "bounds at zero need r < r_2 = {r2v:.6e}, got {r}"
        )));
    }
    let j = m.bottom_degree();
    bounds_check_at(m, r, rule, j)
}

fn bounds_check_at(m: &PolyMeasure, r: f64, rule: &SphereRule, deg: u32) -> Result<bool> {
    let n = m.dim();
    let part = m
        .decomp()
        .part(deg)
        .ok_or_else(|| Error::Internal("missing homogeneous part".into()))?;
    let sup = sup_norm_sphere(part, rule)?.value;
    let l = constants(n, deg)?.l_nk;
    let shape = deg as f64 * r.powi((n as u32 + deg - 2) as i32) * sup * m.scale;
    let lower = l / 4.0 * shape;
    let upper = 1.5 * sphere_area(n) * shape;
    let omega = ball_measure(m, r, rule)?;
    let slack = 1e-9 * omega.abs().max(shape);
    Ok(lower <= omega + slack && omega <= upper + slack)
}

/// Doubling-ratio scan over a geometric radius grid.
#[derive(Clone, Debug, Serialize)]
pub struct DoublingScan {
    pub tau: f64,
    pub dim: usize,
    pub poly_hash: String,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub local_exponents: Vec<f64>,
    /// Mean local exponent over the innermost quarter of the grid.
    pub exponent_at_zero: f64,
    /// Mean local exponent over the outermost quarter of the grid.
    pub exponent_at_infinity: f64,
    /// Max deviation from the mean inside each fit window.
    pub fit_residual_zero: f64,
    pub fit_residual_infinity: f64,
}

impl DoublingScan {
    /// CSV with columns r, ratio, local_exponent; the header line records
    /// tau, the dimension and the polynomial hash.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# tau={}, n={}, poly_hash={}\nr,ratio,local_exponent\n",
            self.tau, self.dim, self.poly_hash
        );
        for i in 0..self.radii.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e}\n",
                self.radii[i], self.ratios[i], self.local_exponents[i]
            ));
        }
        out
    }
}

pub fn doubling_scan(
    m: &PolyMeasure,
    tau: f64,
    r_min: f64,
    r_max: f64,
    steps: usize,
    rule: &SphereRule,
) -> Result<DoublingScan> {
    if !(tau > 1.0) {
        return Err(Error::InvalidParameter(format!("tau must exceed 1, got {tau}")));
    }
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if steps < 4 {
        return Err(Error::GridTooCoarse { min: 4, got: steps });
    }
    let log_tau = tau.ln();
    let mut radii = Vec::with_capacity(steps);
    let mut ratios = Vec::with_capacity(steps);
    let mut local = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        let r = r_min * (r_max / r_min).powf(t);
        let a = ball_measure(m, r, rule)?;
        let b = ball_measure(m, tau * r, rule)?;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Internal(format!("non-positive ball measure at r = {r:.3e}")));
        }
        radii.push(r);
        ratios.push(b / a);
        local.push((b / a).ln() / log_tau);
    }
    let window = (steps / 4).max(2);
    let e0 = mean_of(&local[..window]);
    let einf = mean_of(&local[local.len() - window..]);
    Ok(DoublingScan {
        tau,
        dim: m.dim(),
        poly_hash: format!("{:016x}", m.poly.content_hash()),
        fit_residual_zero: spread_of(&local[..window], e0),
        fit_residual_infinity: spread_of(&local[local.len() - window..], einf),
        radii,
        ratios,
        local_exponents: local,
        exponent_at_zero: e0,
        exponent_at_infinity: einf,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClassifyStatus {
    /// Fits rounded cleanly and matched the coefficient table.
    Confirmed,
    /// Fits rounded cleanly but disagree with the coefficient table.
    Mismatch,
    /// Fit residual above threshold.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    /// Bottom degree read off the small-radius doubling exponent.
    pub j: i64,
    /// Top degree read off the large-radius doubling exponent.
    pub d: i64,
    pub status: ClassifyStatus,
    pub exponent_at_zero: f64,
    pub exponent_at_infinity: f64,
    /// Degrees recorded in the coefficient table, for the cross-check.
    pub expected: (u32, u32),
}

const CLASSIFY_ROUND_TOL: f64 = 0.05;

/// Read (j, d) off fitted doubling exponents: exponent - n + 2 at zero and
/// at infinity, scanned below r_2 and beyond r_1 respectively.
pub fn degree_classify(m: &PolyMeasure, rule: &SphereRule) -> Result<Classification> {
    let tau = 2.0;
    let n = m.dim() as f64;
    let (e0, res0, einf, resinf);
    if m.is_homogeneous() {
        // One scan suffices; the exponent is exact at every radius.
        let scan = doubling_scan(m, tau, 0.5, 2.0, 8, rule)?;
        e0 = scan.exponent_at_zero;
        res0 = scan.fit_residual_zero;
        einf = scan.exponent_at_infinity;
        resinf = scan.fit_residual_infinity;
    } else {
        let r2v = r2(m, rule)?;
        let r1v = r1(m, rule)?;
        let low = doubling_scan(m, tau, 1e-3 * r2v, r2v / tau * 0.999, 8, rule)?;
        let high = doubling_scan(m, tau, r1v * 1.01, 1e3 * r1v, 8, rule)?;
        e0 = mean_of(&low.local_exponents);
        res0 = spread_of(&low.local_exponents, e0);
        einf = mean_of(&high.local_exponents);
        resinf = spread_of(&high.local_exponents, einf);
    }
    let j_fit = e0 - n + 2.0;
    let d_fit = einf - n + 2.0;
    let j = j_fit.round() as i64;
    let d = d_fit.round() as i64;
    let round_err = (j_fit - j as f64).abs().max((d_fit - d as f64).abs());
    let expected = (m.bottom_degree(), m.degree());
    let status = if round_err > CLASSIFY_ROUND_TOL
        || res0 > CLASSIFY_ROUND_TOL
        || resinf > CLASSIFY_ROUND_TOL
    {
        ClassifyStatus::Inconclusive
    } else if j == expected.0 as i64 && d == expected.1 as i64 {
        ClassifyStatus::Confirmed
    } else {
        ClassifyStatus::Mismatch
    };
    Ok(Classification {
        j,
        d,
        status,
        exponent_at_zero: e0,
        exponent_at_infinity: einf,
        expected,
    })
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn spread_of(xs: &[f64], mu: f64) -> f64 {
    xs.iter().fold(0.0f64, |m, x| m.max((x - mu).abs()))
}

/// Smooth radial bump (1 - |x - c|^2 / R^2)^4 on the ball of radius R,
/// with polynomial laplacian profile; C^3 across the support boundary.
#[derive(Clone, Debug)]
pub struct RadialBump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl RadialBump {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("bump radius must be positive".into()));
        }
        Ok(RadialBump { center, radius })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let s2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        let u = s2 / (self.radius * self.radius);
        if u >= 1.0 {
            0.0
        } else {
            let w = 1.0 - u;
            w * w * w * w
        }
    }

    /// Laplacian profile in the radial distance s, as a polynomial in s:
    /// (1-u)^2 (8(n+6) u - 8n) / R^2 with u = s^2 / R^2, the radial
    /// laplacian phi'' + (n-1) phi' / s of (1-u)^4.
    fn laplacian_profile(&self, n: usize) -> UniPoly {
        let r2 = self.radius * self.radius;
        // In u: (1 - 2u + u^2)(a u + b) with a = 8(n+6), b = -8n.
        let a = 8.0 * (n as f64 + 6.0);
        let b = -8.0 * n as f64;
        // coefficients in u: [b, a - 2b, -2a + b, a]
        let cu = [b, a - 2.0 * b, -2.0 * a + b, a];
        // substitute u = s^2 / R^2 and divide by R^2
        let mut cs = vec![0.0; 7];
        for (i, c) in cu.iter().enumerate() {
            cs[2 * i] = c / r2.powi(i as i32) / r2;
        }
        UniPoly::new(cs)
    }
}

/// Residuals of the defining weak identity: the volume integrals
/// int_{h>0} h lap(phi) and int_{h<0} (-h) lap(phi), against the particle
/// cloud's integral of phi.
#[derive(Clone, Debug, Serialize)]
pub struct WeakFormReport {
    pub plus_side: f64,
    pub minus_side: f64,
    pub particle_side: f64,
    /// |plus - particle| / max(|plus|, |particle|)
    pub residual_particle: f64,
    /// |plus - minus| / max(|plus|, |minus|)
    pub residual_sides: f64,
}

pub fn weak_form_check(
    m: &PolyMeasure,
    bump: &RadialBump,
    cloud: &ParticleMeasure,
    rule: &SphereRule,
) -> Result<WeakFormReport> {
    let n = m.dim();
    if bump.center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: bump.center.len() });
    }
    let center_norm = bump.center.iter().map(|x| x * x).sum::<f64>().sqrt();
    if center_norm + bump.radius > cloud.truncation_radius() + 1e-12 {
        return Err(Error::RegionExceeded);
    }
    let lap = bump.laplacian_profile(n);
    let side = |plus: bool| -> f64 {
        let volume_ray = |theta: &[f64]| -> f64 {
            // int over { s : sign h(c + s theta) > 0 } of
            //   h(c + s theta) * lap_phi(s) * s^{n-1} ds, exactly.
            let coeffs = m.poly.ray_coefficients(&bump.center, theta).expect("dims match");
            let mut g = UniPoly::new(coeffs);
            if !plus {
                g = g.scale(-1.0);
            }
            let mut radial = vec![0.0; n];
            radial[n - 1] = 1.0;
            let integrand = g.mul(&lap).mul(&UniPoly::new(radial));
            let anti = integrand.antiderivative();
            let mut breaks: Vec<f64> = roots_in_interval(&g, 0.0, bump.radius)
                .into_iter()
                .filter(|root| root.sign_change)
                .map(|root| root.t)
                .collect();
            breaks.push(bump.radius);
            let mut acc = 0.0;
            let mut lo = 0.0;
            for &hi in &breaks {
                if hi > lo && g.eval(0.5 * (lo + hi)) > 0.0 {
                    acc += anti.eval(hi) - anti.eval(lo);
                }
                lo = hi;
            }
            acc
        };
        let params = EngineParams {
            base_panels: rule.base_panels(),
            rel_tol: 1e-7,
            ..Default::default()
        };
        let v = match n {
            3 => {
                let mut f = |theta: &[f64; 3]| volume_ray(theta);
                integrate_s2_pointwise(&mut f, &params, 12)
            }
            2 => {
                let mut f = |theta: &[f64; 2]| volume_ray(theta);
                integrate_s1_pointwise(&mut f, &params)
            }
            _ => integrate_with_rule(rule, volume_ray),
        };
        m.scale * v
    };
    let plus_side = side(true);
    let minus_side = side(false);
    let particle_side: f64 = cloud
        .particles()
        .map(|p| p.mass * bump.eval(&p.position))
        .sum();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    Ok(WeakFormReport {
        plus_side,
        minus_side,
        particle_side,
        residual_particle: rel(plus_side, particle_side),
        residual_sides: rel(plus_side, minus_side),
    })
}

/// C_{n,d} = 6 sigma_{n-1} / l_{n,d}: both doubling theorems' constant.
pub fn doubling_constant(n: usize, d: u32) -> Result<f64> {
    Ok(6.0 * sphere_area(n) / constants(n, d)?.l_nk)
}
