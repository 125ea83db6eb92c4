//! Adaptive integration of polynomial functionals over S^2.
//!
//! The sphere is parametrized by azimuth phi and colatitude via t = cos(psi),
//! so dsigma = dphi dt. Along a fixed meridian slice a polynomial restricts
//! to g(t) = P(t) + s Q(t) with s = sqrt(1 - t^2); P and Q are genuine
//! univariate polynomials whose real roots partition the slice into
//! sign-constant pieces. Each piece is integrated with a polynomial
//! antiderivative (P part) or a short Gauss rule in the colatitude variable
//! (s Q part, an entire trigonometric integrand). Only the outer phi
//! integral is adaptive; its integrand is piecewise analytic with isolated
//! kinks at tangency angles, which the bisection handles.

use crate::poly::Poly;
use crate::univariate::{roots_in_interval, UniPoly};

use super::gauss::{gauss_legendre, gauss_on_interval};

/// Degree-truncated expansion data for one monomial c x^i y^j z^k viewed on
/// a slice: c cos^i(phi) sin^j(phi) * t-polynomial, parity-separated.
struct SliceTerm {
    cos_pow: u32,
    sin_pow: u32,
    odd: bool,
    /// Expansion of t^k (1 - t^2)^m as (power, coefficient) pairs.
    t_expansion: Vec<(usize, f64)>,
    coeff: f64,
}

/// A polynomial on R^3 preprocessed for slice evaluation.
pub(crate) struct SlicePoly {
    terms: Vec<SliceTerm>,
    t_degree: usize,
    max_trig_pow: u32,
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut out = 1.0;
    for i in 0..k {
        out *= (n - i) as f64 / (i + 1) as f64;
    }
    out
}

impl SlicePoly {
    pub fn new(p: &Poly) -> Self {
        assert_eq!(p.dim(), 3, "slice evaluation is for S^2");
        let mut terms = Vec::new();
        let mut t_degree = 0usize;
        let mut max_trig_pow = 0u32;
        for (alpha, c) in p.terms() {
            let (i, j, k) = (alpha.0[0], alpha.0[1], alpha.0[2]);
            let ij = i + j;
            let odd = ij % 2 == 1;
            let m = ij / 2; // floor; the leftover s goes to the Q side
            let mut t_expansion = Vec::with_capacity(m as usize + 1);
            for l in 0..=m {
                let pow = (k + 2 * l) as usize;
                let w = binomial(m, l) * if l % 2 == 0 { 1.0 } else { -1.0 };
                t_expansion.push((pow, w));
                t_degree = t_degree.max(pow);
            }
            max_trig_pow = max_trig_pow.max(i).max(j);
            terms.push(SliceTerm { cos_pow: i, sin_pow: j, odd, t_expansion, coeff: c });
        }
        SlicePoly { terms, t_degree, max_trig_pow }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulate the slice representation at azimuth phi into p_out/q_out
    /// (coefficients ascending in t). Buffers must be zeroed by the caller.
    fn slice_into(&self, cos_phi: f64, sin_phi: f64, p_out: &mut [f64], q_out: &mut [f64], pows: &mut TrigPowers) {
        pows.fill(cos_phi, sin_phi, self.max_trig_pow);
        for term in &self.terms {
            let f = term.coeff * pows.cos[term.cos_pow as usize] * pows.sin[term.sin_pow as usize];
            if f == 0.0 {
                continue;
            }
            let out: &mut [f64] = if term.odd { &mut *q_out } else { &mut *p_out };
            for &(pow, w) in &term.t_expansion {
                out[pow] += f * w;
            }
        }
    }
}

struct TrigPowers {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigPowers {
    fn new() -> Self {
        TrigPowers { cos: vec![1.0], sin: vec![1.0] }
    }

    fn fill(&mut self, c: f64, s: f64, up_to: u32) {
        self.cos.clear();
        self.sin.clear();
        self.cos.push(1.0);
        self.sin.push(1.0);
        for i in 1..=up_to as usize {
            let pc = self.cos[i - 1] * c;
            let ps = self.sin[i - 1] * s;
            self.cos.push(pc);
            self.sin.push(ps);
        }
    }
}

/// What to integrate over the sphere.
pub(crate) enum S2Task<'a> {
    /// Integral of |g|.
    Abs { g: &'a Poly },
    /// Integral of q over { g > 0 }.
    IndicatorTimes { g: &'a Poly, q: &'a Poly },
    /// Surface measure of { g > 0 }.
    IndicatorArea { g: &'a Poly },
}

pub(crate) struct EngineParams {
    pub base_panels: usize,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams { base_panels: 64, rel_tol: 1e-9, max_depth: 48 }
    }
}

const GAUSS_SLICE: usize = 20;

struct Workspace {
    p_sign: Vec<f64>,
    q_sign: Vec<f64>,
    p_int: Vec<f64>,
    q_int: Vec<f64>,
    pows: TrigPowers,
    breakpoints: Vec<f64>,
}

/// Roots of gamma(t) = P(t) + sqrt(1-t^2) Q(t) on (-1, 1) where gamma
/// changes sign, written to `out`, sorted ascending in t.
///
/// Uses the half-angle substitution t = (1-z^2)/(1+z^2), s = 2z/(1+z^2)
/// with z = tan(psi/2) > 0: W(z) = (1+z^2)^D gamma is a plain polynomial in
/// z with sign(W) = sign(gamma), so ordinary Sturm isolation applies with
/// no squaring and no spurious conjugate roots.
fn sign_change_roots(p: &UniPoly, q: &UniPoly, out: &mut Vec<f64>) {
    out.clear();
    let dp = p.coeffs().len();
    let dq = q.coeffs().len();
    if dp == 0 && dq == 0 {
        return;
    }
    // D: power of (1+z^2) clearing all denominators (s carries one).
    let d = dp.max(dq + 1).max(1) - 1;
    // (1 - z^2)^k (1 + z^2)^{d-k} expanded once per k, reused for P and Q.
    let mut w = vec![0.0; 2 * d + 2];
    let mut pow_buf = Vec::new();
    for (k, &c) in p.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        expand_half_angle(k, d - k, &mut pow_buf);
        for (i, &b) in pow_buf.iter().enumerate() {
            w[i] += c * b;
        }
    }
    for (k, &c) in q.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        // s Q term: 2z (1-z^2)^k (1+z^2)^{d-1-k}
        expand_half_angle(k, d - 1 - k, &mut pow_buf);
        for (i, &b) in pow_buf.iter().enumerate() {
            w[i + 1] += 2.0 * c * b;
        }
    }
    let w_poly = UniPoly::new(w);
    if w_poly.is_zero() {
        return;
    }
    // Roots with z in (0, ~1]: psi in (0, pi/2]. Roots with z in [~1, inf):
    // reverse coefficients, roots u = 1/z. The windows overlap slightly so
    // a root at z = 1 (t = 0) cannot fall between them; dedup collapses it.
    for r in roots_in_interval(&w_poly, 0.0, 1.0 + 1e-7) {
        if r.sign_change {
            let z2 = r.t * r.t;
            out.push((1.0 - z2) / (1.0 + z2));
        }
    }
    let reversed = UniPoly::new(w_poly.coeffs().iter().rev().copied().collect());
    for r in roots_in_interval(&reversed, 0.0, 1.0 + 1e-7) {
        if r.sign_change && r.t > 0.0 {
            let z = 1.0 / r.t;
            let z2 = z * z;
            out.push((1.0 - z2) / (1.0 + z2));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
}

/// Coefficients of (1 - z^2)^k (1 + z^2)^m, ascending in z (even powers).
fn expand_half_angle(k: usize, m: usize, out: &mut Vec<f64>) {
    // Convolve the binomials in the u = z^2 variable.
    let mut acc = vec![0.0; k + m + 1];
    acc[0] = 1.0;
    let mut len = 1;
    for _ in 0..k {
        let mut next = vec![0.0; len + 1];
        for i in 0..len {
            next[i] += acc[i];
            next[i + 1] -= acc[i];
        }
        len += 1;
        acc[..len].copy_from_slice(&next);
    }
    for _ in 0..m {
        let mut next = vec![0.0; len + 1];
        for i in 0..len {
            next[i] += acc[i];
            next[i + 1] += acc[i];
        }
        len += 1;
        acc[..len].copy_from_slice(&next);
    }
    out.clear();
    out.resize(2 * (k + m) + 1, 0.0);
    for (i, &c) in acc[..len].iter().enumerate() {
        out[2 * i] = c;
    }
}

/// Exact-ish integral of P + s Q over t in [a, b]: polynomial antiderivative
/// for the P part, colatitude Gauss for the s Q part.
fn integrate_piece(p: &UniPoly, q: &UniPoly, a: f64, b: f64) -> f64 {
    let anti = p.antiderivative();
    let mut acc = anti.eval(b) - anti.eval(a);
    if !q.is_zero() {
        // t = cos(psi): int_a^b s Q dt = int_{acos b}^{acos a} sin^2 psi Q(cos psi) dpsi.
        let psi_lo = b.clamp(-1.0, 1.0).acos();
        let psi_hi = a.clamp(-1.0, 1.0).acos();
        acc += gauss_on_interval(GAUSS_SLICE, psi_lo, psi_hi, |psi| {
            let s = psi.sin();
            s * s * q.eval(psi.cos())
        });
    }
    acc
}

fn slice_value(task: &S2Task, sign: &SlicePoly, integrand: Option<&SlicePoly>, phi: f64, ws: &mut Workspace, t_deg_sign: usize, t_deg_int: usize) -> f64 {
    let (c, s) = (phi.cos(), phi.sin());
    for v in ws.p_sign.iter_mut() {
        *v = 0.0;
    }
    for v in ws.q_sign.iter_mut() {
        *v = 0.0;
    }
    sign.slice_into(c, s, &mut ws.p_sign[..=t_deg_sign], &mut ws.q_sign[..=t_deg_sign], &mut ws.pows);
    let p_sign = UniPoly::new(ws.p_sign[..=t_deg_sign].to_vec());
    let q_sign = UniPoly::new(ws.q_sign[..=t_deg_sign].to_vec());
    if p_sign.is_zero() && q_sign.is_zero() {
        return 0.0;
    }
    sign_change_roots(&p_sign, &q_sign, &mut ws.breakpoints);

    let gamma = |t: f64| {
        let sv = (1.0 - t * t).max(0.0).sqrt();
        p_sign.eval(t) + sv * q_sign.eval(t)
    };

    let (p_int, q_int) = match integrand {
        Some(ip) => {
            for v in ws.p_int.iter_mut() {
                *v = 0.0;
            }
            for v in ws.q_int.iter_mut() {
                *v = 0.0;
            }
            ip.slice_into(c, s, &mut ws.p_int[..=t_deg_int], &mut ws.q_int[..=t_deg_int], &mut ws.pows);
            (
                UniPoly::new(ws.p_int[..=t_deg_int].to_vec()),
                UniPoly::new(ws.q_int[..=t_deg_int].to_vec()),
            )
        }
        None => (UniPoly::zero(), UniPoly::zero()),
    };

    let mut acc = 0.0;
    let mut lo = -1.0;
    let n_pieces = ws.breakpoints.len() + 1;
    for piece in 0..n_pieces {
        let hi = if piece < ws.breakpoints.len() { ws.breakpoints[piece] } else { 1.0 };
        if hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            let positive = gamma(mid) > 0.0;
            match task {
                S2Task::Abs { .. } => {
                    let v = integrate_piece(&p_sign, &q_sign, lo, hi);
                    acc += if positive { v } else { -v };
                }
                S2Task::IndicatorTimes { .. } => {
                    if positive {
                        acc += integrate_piece(&p_int, &q_int, lo, hi);
                    }
                }
                S2Task::IndicatorArea { .. } => {
                    if positive {
                        acc += hi - lo;
                    }
                }
            }
        }
        lo = hi;
    }
    acc
}

struct SimpsonCtx<'a, F> {
    f: &'a mut F,
    noise_per_len: f64,
    evals_left: u64,
}

/// Adaptive Simpson on [a, b] with an absolute tolerance; function values at
/// the endpoints and midpoint are threaded through the recursion. The
/// `noise_per_len` floor stops refinement once the Richardson difference
/// falls to the evaluation-noise level: noise-dominated deltas scale with
/// interval length exactly like the tolerance, so without the floor the
/// acceptance ratio stays constant and the recursion degenerates into a
/// full binary tree. An evaluation budget guards the same failure mode for
/// any integrand whose noise exceeds the declared level.
#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: FnMut(f64) -> f64>(
    ctx: &mut SimpsonCtx<'_, F>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    min_depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = (ctx.f)(lm);
    let frm = (ctx.f)(rm);
    ctx.evals_left = ctx.evals_left.saturating_sub(2);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || ctx.evals_left == 0 {
        return left + right + delta / 15.0;
    }
    if min_depth == 0 && delta.abs() <= 15.0 * tol + ctx.noise_per_len * (b - a) {
        return left + right + delta / 15.0;
    }
    let next_min = min_depth.saturating_sub(1);
    adaptive_simpson(ctx, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, next_min)
        + adaptive_simpson(ctx, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, next_min)
}

/// Floor on the declared relative evaluation noise: slice values travel
/// through root isolation and cancellation-prone arithmetic, so they are
/// never cleaner than ~1e-12 relative.
const EVAL_NOISE_FLOOR: f64 = 1e-12;

const EVAL_BUDGET: u64 = 4_000_000;

/// Integrate a 1D function adaptively with a relative tolerance, using a
/// base-panel pass to estimate the magnitude first. `noise_rel` declares the
/// relative noise carried by each function value.
pub(crate) fn integrate_adaptive(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    base_panels: usize,
    rel_tol: f64,
    max_depth: u32,
    noise_rel: f64,
) -> f64 {
    let width = (b - a) / base_panels as f64;
    // Panel endpoints/midpoints; reuse shared endpoint values.
    let mut fs = Vec::with_capacity(base_panels + 1);
    for i in 0..=base_panels {
        fs.push(f(a + i as f64 * width));
    }
    let mut magnitude = 0.0;
    let mut panel_data = Vec::with_capacity(base_panels);
    for i in 0..base_panels {
        let pa = a + i as f64 * width;
        let pb = pa + width;
        let fm = f(0.5 * (pa + pb));
        let s = width / 6.0 * (fs[i] + 4.0 * fm + fs[i + 1]);
        magnitude += s.abs();
        panel_data.push((pa, pb, fs[i], fm, fs[i + 1], s));
    }
    let tol_total = rel_tol * magnitude.max(1e-300);
    // Typical |f| is magnitude / range; scale per-eval noise accordingly.
    let noise_per_len = 3.0 * noise_rel.max(EVAL_NOISE_FLOOR) * magnitude / (b - a);
    let mut ctx = SimpsonCtx { f, noise_per_len, evals_left: EVAL_BUDGET };
    let mut acc = 0.0;
    let mut comp = 0.0;
    for (pa, pb, fa, fm, fb, s) in panel_data {
        let v = adaptive_simpson(
            &mut ctx,
            pa,
            pb,
            fa,
            fm,
            fb,
            s,
            tol_total / base_panels as f64,
            max_depth,
            2,
        );
        // Neumaier compensated accumulation.
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

/// Integrate one of the polynomial tasks over S^2.
pub(crate) fn integrate_s2(task: &S2Task, params: &EngineParams) -> f64 {
    let (sign_poly, integrand_poly) = match task {
        S2Task::Abs { g } => (*g, None),
        S2Task::IndicatorTimes { g, q } => (*g, Some(*q)),
        S2Task::IndicatorArea { g } => (*g, None),
    };
    let sign = SlicePoly::new(sign_poly);
    if sign.is_empty() {
        return 0.0;
    }
    let integrand = integrand_poly.map(SlicePoly::new);
    let t_deg_sign = sign.t_degree;
    let t_deg_int = integrand.as_ref().map(|p| p.t_degree).unwrap_or(0);
    let mut ws = Workspace {
        p_sign: vec![0.0; t_deg_sign + 1],
        q_sign: vec![0.0; t_deg_sign + 1],
        p_int: vec![0.0; t_deg_int + 1],
        q_int: vec![0.0; t_deg_int + 1],
        pows: TrigPowers::new(),
        breakpoints: Vec::new(),
    };
    let mut f = |phi: f64| slice_value(task, &sign, integrand.as_ref(), phi, &mut ws, t_deg_sign, t_deg_int);
    integrate_adaptive(
        &mut f,
        0.0,
        2.0 * std::f64::consts::PI,
        params.base_panels,
        params.rel_tol,
        params.max_depth,
        0.0,
    )
}

/// Integral over S^2 of an arbitrary per-direction function, by nested
/// adaptive quadrature in (phi, psi). Used for integrands that are only
/// pointwise evaluable (radial profiles resolved exactly per direction).
/// The inner quadrature runs two orders tighter than the outer one, and its
/// residual error is declared to the outer pass as evaluation noise.
pub(crate) fn integrate_s2_pointwise(
    f: &mut impl FnMut(&[f64; 3]) -> f64,
    params: &EngineParams,
    inner_panels: usize,
) -> f64 {
    let inner_tol = params.rel_tol * 1e-2;
    let mut slice = |phi: f64| {
        let (c, s) = (phi.cos(), phi.sin());
        let mut g = |psi: f64| {
            let sp = psi.sin();
            let theta = [sp * c, sp * s, psi.cos()];
            f(&theta) * sp
        };
        integrate_adaptive(&mut g, 0.0, std::f64::consts::PI, inner_panels, inner_tol, params.max_depth, 0.0)
    };
    integrate_adaptive(
        &mut slice,
        0.0,
        2.0 * std::f64::consts::PI,
        params.base_panels,
        params.rel_tol,
        params.max_depth,
        2.0 * inner_tol,
    )
}

/// Integral over S^1 (n = 2) of a per-direction function.
pub(crate) fn integrate_s1_pointwise(
    f: &mut impl FnMut(&[f64; 2]) -> f64,
    params: &EngineParams,
) -> f64 {
    let mut g = |phi: f64| f(&[phi.cos(), phi.sin()]);
    integrate_adaptive(
        &mut g,
        0.0,
        2.0 * std::f64::consts::PI,
        params.base_panels,
        params.rel_tol,
        params.max_depth,
        0.0,
    )
}

pub(crate) fn gauss_nodes_unit(n: usize) -> (&'static [f64], &'static [f64]) {
    let (nodes, weights) = gauss_legendre(n);
    (nodes, weights)
}

/// Sample the nodal curve { g = 0 } on S^2 with arc-length weights, by dual
/// sweeps: azimuthal slices catch the curve where it runs flatter than the
/// meridians (|dt/dphi| <= 1 - t^2) and colatitude slices catch the rest,
/// so both parametrizations stay uniformly Lipschitz. Returns (point,
/// weight) pairs with sum(weights f) ~ int_curve f dl.
pub(crate) fn nodal_curve_samples(g: &Poly, slices: usize) -> Vec<([f64; 3], f64)> {
    assert_eq!(g.dim(), 3);
    let mut out = Vec::new();
    let sign = SlicePoly::new(g);
    if sign.is_empty() {
        return out;
    }
    let t_deg = sign.t_degree;
    let mut pows = TrigPowers::new();
    let mut p_buf = vec![0.0; t_deg + 1];
    let mut q_buf = vec![0.0; t_deg + 1];
    let mut roots = Vec::new();
    let dphi = 2.0 * std::f64::consts::PI / slices as f64;
    // Gradient of g in slice coordinates at a sphere point.
    let slice_gradients = |point: &[f64; 3]| -> (f64, f64) {
        let grad = g.gradient_at(point).expect("dims match");
        let t = point[2];
        let s = (1.0 - t * t).max(1e-14).sqrt();
        let (cp, sp) = if s > 1e-7 {
            (point[0] / s, point[1] / s)
        } else {
            (1.0, 0.0)
        };
        // d theta / d phi = (-s sin, s cos, 0); d theta / dt = (-t cos / s, -t sin / s, 1)
        let g_phi = -s * sp * grad[0] + s * cp * grad[1];
        let g_t = -(t / s) * cp * grad[0] - (t / s) * sp * grad[1] + grad[2];
        (g_phi, g_t)
    };
    // Azimuthal sweep.
    for j in 0..slices {
        let phi = dphi * (j as f64 + 0.5);
        for v in p_buf.iter_mut() {
            *v = 0.0;
        }
        for v in q_buf.iter_mut() {
            *v = 0.0;
        }
        sign.slice_into(phi.cos(), phi.sin(), &mut p_buf, &mut q_buf, &mut pows);
        let p = UniPoly::new(p_buf.clone());
        let q = UniPoly::new(q_buf.clone());
        sign_change_roots(&p, &q, &mut roots);
        for &t in roots.iter() {
            let s = (1.0 - t * t).max(0.0).sqrt();
            let point = [s * phi.cos(), s * phi.sin(), t];
            let (g_phi, g_t) = slice_gradients(&point);
            if g_t.abs() < 1e-300 {
                continue;
            }
            let tdot = -g_phi / g_t;
            let band = 1.0 - t * t;
            if tdot.abs() <= band {
                let dl = (band + tdot * tdot / band.max(1e-14)).sqrt();
                out.push((point, dl * dphi));
            }
        }
    }
    // Colatitude sweep, uniform in psi so the pole metric factor stays
    // bounded: for fixed t = cos(psi), roots in phi via z = tan(phi/2).
    let dpsi = std::f64::consts::PI / slices as f64;
    let mut w_coeffs: Vec<f64> = Vec::new();
    let mut expansion = Vec::new();
    for i in 0..slices {
        let psi = dpsi * (i as f64 + 0.5);
        let t = psi.cos();
        let s = (1.0 - t * t).max(0.0).sqrt();
        // W(z) = (1+z^2)^D g(phi(z), t), D = max trig degree.
        let d_trig = g
            .terms()
            .map(|(alpha, _)| (alpha.0[0] + alpha.0[1]) as usize)
            .max()
            .unwrap_or(0);
        w_coeffs.clear();
        w_coeffs.resize(2 * d_trig + 1, 0.0);
        for (alpha, c) in g.terms() {
            let (i_pow, j_pow, k_pow) = (alpha.0[0] as usize, alpha.0[1] as usize, alpha.0[2]);
            let factor = c * s.powi((i_pow + j_pow) as i32) * t.powi(k_pow as i32);
            if factor == 0.0 {
                continue;
            }
            // cos^i sin^j (1+z^2)^D = (1-z^2)^i (2z)^j (1+z^2)^{D-i-j}
            expand_half_angle(i_pow, d_trig - i_pow - j_pow, &mut expansion);
            let scale = factor * 2f64.powi(j_pow as i32);
            for (deg, &b) in expansion.iter().enumerate() {
                if deg + j_pow < w_coeffs.len() {
                    w_coeffs[deg + j_pow] += scale * b;
                }
            }
        }
        let w_poly = UniPoly::new(w_coeffs.clone());
        if w_poly.is_zero() {
            continue;
        }
        let mut phis: Vec<f64> = Vec::new();
        for r in roots_in_interval(&w_poly, -1.0 - 1e-7, 1.0 + 1e-7) {
            if r.sign_change {
                phis.push(2.0 * r.t.atan());
            }
        }
        let reversed = UniPoly::new(w_poly.coeffs().iter().rev().copied().collect());
        for r in roots_in_interval(&reversed, -1.0 + 1e-9, 1.0 - 1e-9) {
            if r.sign_change && r.t.abs() > 1e-12 {
                phis.push(2.0 * (1.0 / r.t).atan());
            }
        }
        phis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        phis.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for &phi in &phis {
            let point = [s * phi.cos(), s * phi.sin(), t];
            let (g_phi, g_t) = slice_gradients(&point);
            if g_phi.abs() < 1e-300 {
                continue;
            }
            let tdot = if g_t.abs() > 0.0 { -g_phi / g_t } else { f64::INFINITY };
            let band = 1.0 - t * t;
            if !(tdot.abs() <= band) {
                // dphi/dpsi = sin(psi) g_t / g_phi; dl/dpsi stays <= sqrt(2)
                // on this half of the partition.
                let dphi_dpsi = s * g_t / g_phi;
                let dl = (band.max(0.0) * dphi_dpsi * dphi_dpsi + 1.0).sqrt();
                out.push((point, dl * dpsi));
            }
        }
    }
    out
}

/// Hidden probe for numerical diagnostics in integration tests and debug
/// tooling; not part of the public surface.
#[doc(hidden)]
pub mod probe {
    use super::*;
    use crate::poly::Poly;

    pub fn slice_indicator_value(g: &Poly, q: &Poly, phi: f64) -> f64 {
        let sign = SlicePoly::new(g);
        let integrand = SlicePoly::new(q);
        let t_deg_sign = sign.t_degree;
        let t_deg_int = integrand.t_degree;
        let mut ws = Workspace {
            p_sign: vec![0.0; t_deg_sign + 1],
            q_sign: vec![0.0; t_deg_sign + 1],
            p_int: vec![0.0; t_deg_int + 1],
            q_int: vec![0.0; t_deg_int + 1],
            pows: TrigPowers::new(),
            breakpoints: Vec::new(),
        };
        let task = S2Task::IndicatorTimes { g, q };
        slice_value(&task, &sign, Some(&integrand), phi, &mut ws, t_deg_sign, t_deg_int)
    }
}
