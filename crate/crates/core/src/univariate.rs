//! Univariate real polynomials: evaluation, Sturm-sequence root isolation
//! and bisection refinement. Used for ray/zero-set intersections and for
//! per-slice root finding in the sphere integrator.

/// Dense univariate polynomial, coefficients ascending in the variable.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

/// A located root together with transversality information.
#[derive(Clone, Copy, Debug)]
pub struct Root {
    pub t: f64,
    /// True when the polynomial changes sign across the root. Roots of even
    /// contact carry no sign boundary and are reported with `false`.
    pub sign_change: bool,
    /// Derivative value at the root.
    pub derivative: f64,
}

const COEFF_EPS: f64 = 1e-14;

impl UniPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = UniPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: vec![] }
    }

    fn trim(&mut self) {
        // Drop a leading coefficient that is negligible against the rest;
        // keeps Sturm division stable.
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            self.coeffs.clear();
            return;
        }
        while let Some(&last) = self.coeffs.last() {
            if last.abs() <= COEFF_EPS * scale {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::zero();
        }
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> UniPoly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            out.push(c / (i + 1) as f64);
        }
        UniPoly::new(out)
    }

    pub fn scale(&self, c: f64) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|v| v * c).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        UniPoly::new(out)
    }

    /// Remainder of self divided by other (other non-zero).
    fn rem(&self, other: &UniPoly) -> UniPoly {
        let dd = other.degree().expect("division by zero polynomial");
        let lead = other.coeffs[dd];
        let mut r = self.coeffs.clone();
        while r.len() > dd {
            let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let last = *r.last().unwrap();
            if last.abs() <= COEFF_EPS * scale.max(1e-300) {
                r.pop();
                continue;
            }
            let k = r.len() - 1 - dd;
            let q = last / lead;
            for i in 0..dd {
                r[k + i] -= q * other.coeffs[i];
            }
            r.pop();
        }
        UniPoly::new(r)
    }
}

/// Canonical Sturm chain p, p', -rem(...), ...; the chain ends at the gcd,
/// which makes the variation count return the number of distinct real roots
/// even when roots are multiple.
pub fn sturm_sequence(p: &UniPoly) -> Vec<UniPoly> {
    let mut seq = Vec::new();
    if p.is_zero() {
        return seq;
    }
    // Normalize so remainder tolerances are scale-free.
    let scale = p.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    seq.push(p.scale(1.0 / scale));
    let d = seq[0].derivative();
    if d.is_zero() {
        return seq;
    }
    seq.push(d);
    loop {
        let n = seq.len();
        let r = seq[n - 2].rem(&seq[n - 1]);
        // Chain elements are normalized to unit coefficient scale, so a
        // remainder this small is the zero remainder of an exact gcd.
        let s = r.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if s <= 1e-12 {
            break;
        }
        // Renormalize each remainder; only signs matter for Sturm counts.
        seq.push(r.scale(-1.0 / s));
        if seq.last().unwrap().degree() == Some(0) {
            break;
        }
    }
    seq
}

fn sign_variations(seq: &[UniPoly], t: f64) -> usize {
    let mut count = 0;
    let mut prev = 0i8;
    for p in seq {
        let v = p.eval(t);
        let s = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        };
        if s != 0 {
            if prev != 0 && s != prev {
                count += 1;
            }
            prev = s;
        }
    }
    count
}

/// Number of distinct real roots in (a, b].
pub fn count_roots(seq: &[UniPoly], a: f64, b: f64) -> usize {
    if seq.is_empty() {
        return 0;
    }
    sign_variations(seq, a).saturating_sub(sign_variations(seq, b))
}

/// Isolate and refine all distinct real roots of p in (a, b). Endpoints that
/// are themselves roots are perturbed inward by a tiny relative nudge.
pub fn roots_in_interval(p: &UniPoly, a: f64, b: f64) -> Vec<Root> {
    let mut out = Vec::new();
    if p.is_zero() || a >= b {
        return out;
    }
    if p.degree() == Some(0) {
        return out;
    }
    let seq = sturm_sequence(p);
    let width = b - a;
    let nudge = 1e-14 * width.max(a.abs()).max(b.abs());
    let (mut lo, mut hi) = (a + nudge, b - nudge);
    if lo >= hi {
        return out;
    }
    // Move endpoints off roots of the chain if unlucky.
    for _ in 0..8 {
        if p.eval(lo) != 0.0 {
            break;
        }
        lo += nudge;
    }
    for _ in 0..8 {
        if p.eval(hi) != 0.0 {
            break;
        }
        hi -= nudge;
    }
    let mut stack = vec![(lo, hi, count_roots(&seq, lo, hi))];
    let deriv = p.derivative();
    while let Some((a, b, n)) = stack.pop() {
        if n == 0 {
            continue;
        }
        if n == 1 {
            if let Some(root) = refine_root(p, &deriv, a, b) {
                out.push(root);
            }
            continue;
        }
        let mut m = 0.5 * (a + b);
        // Avoid splitting exactly on a root of the chain.
        let mut tries = 0;
        while p.eval(m) == 0.0 && tries < 16 {
            m += (b - a) * 1e-13;
            tries += 1;
        }
        if b - a <= 1e-15 * (a.abs().max(b.abs()).max(1.0)) {
            // Cluster tighter than float resolution: report the midpoint once.
            out.push(Root { t: m, sign_change: p.eval(a) * p.eval(b) < 0.0, derivative: deriv.eval(m) });
            continue;
        }
        let nl = count_roots(&seq, a, m);
        stack.push((a, m, nl));
        stack.push((m, b, n - nl));
    }
    out.sort_by(|x, y| x.t.partial_cmp(&y.t).unwrap());
    out
}

/// Bisection to ~1e-13 relative on a bracket known to contain exactly one
/// distinct root. Falls back to a derivative-based polish for even-contact
/// roots (no sign change).
fn refine_root(p: &UniPoly, deriv: &UniPoly, mut a: f64, mut b: f64) -> Option<Root> {
    let fa = p.eval(a);
    let fb = p.eval(b);
    let scale = a.abs().max(b.abs()).max(1.0);
    if fa == 0.0 {
        return Some(Root { t: a, sign_change: false, derivative: deriv.eval(a) });
    }
    if fb == 0.0 {
        return Some(Root { t: b, sign_change: false, derivative: deriv.eval(b) });
    }
    if fa * fb < 0.0 {
        let mut fa = fa;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let fm = p.eval(m);
            if fm == 0.0 || b - a <= 1e-13 * scale {
                return Some(Root { t: m, sign_change: true, derivative: deriv.eval(m) });
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        let m = 0.5 * (a + b);
        return Some(Root { t: m, sign_change: true, derivative: deriv.eval(m) });
    }
    // Even contact: locate the critical point of p inside the bracket via
    // the derivative's sign change, then confirm p nearly vanishes there.
    let da = deriv.eval(a);
    let db = deriv.eval(b);
    if da * db < 0.0 {
        let (mut a2, mut b2, mut fa2) = (a, b, da);
        for _ in 0..200 {
            let m = 0.5 * (a2 + b2);
            let fm = deriv.eval(m);
            if fm == 0.0 || b2 - a2 <= 1e-13 * scale {
                break;
            }
            if fa2 * fm < 0.0 {
                b2 = m;
            } else {
                a2 = m;
                fa2 = fm;
            }
        }
        let t = 0.5 * (a2 + b2);
        let p_scale = p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if p.eval(t).abs() <= 1e-9 * p_scale.max(1e-300) * scale.powi(p.degree().unwrap_or(1) as i32) {
            return Some(Root { t, sign_change: false, derivative: deriv.eval(t) });
        }
    }
    None
}

/// Allocation-free Sturm isolation for low-degree polynomials, for use in
/// per-direction inner loops (ray casting and radial profiles). Coefficient
/// count is capped at MAX; callers with higher degrees use the heap path.
pub mod small {
    /// Max number of coefficients (degree + 1).
    pub const MAX: usize = 16;

    #[derive(Clone, Copy)]
    struct SPoly {
        c: [f64; MAX],
        len: usize,
    }

    impl SPoly {
        fn from_slice(coeffs: &[f64]) -> SPoly {
            let mut c = [0.0; MAX];
            c[..coeffs.len()].copy_from_slice(coeffs);
            let mut p = SPoly { c, len: coeffs.len() };
            p.trim();
            p
        }

        fn trim(&mut self) {
            let mut scale = 0.0f64;
            for i in 0..self.len {
                scale = scale.max(self.c[i].abs());
            }
            if scale == 0.0 {
                self.len = 0;
                return;
            }
            while self.len > 0 && self.c[self.len - 1].abs() <= 1e-14 * scale {
                self.len -= 1;
            }
        }

        fn eval(&self, t: f64) -> f64 {
            let mut acc = 0.0;
            for i in (0..self.len).rev() {
                acc = acc * t + self.c[i];
            }
            acc
        }

        fn derivative(&self) -> SPoly {
            let mut out = SPoly { c: [0.0; MAX], len: self.len.saturating_sub(1) };
            for i in 1..self.len {
                out.c[i - 1] = self.c[i] * i as f64;
            }
            out.trim();
            out
        }

        fn scale(&self) -> f64 {
            let mut s = 0.0f64;
            for i in 0..self.len {
                s = s.max(self.c[i].abs());
            }
            s
        }

        fn normalize(&mut self) {
            let s = self.scale();
            if s > 0.0 {
                for i in 0..self.len {
                    self.c[i] /= s;
                }
            }
        }

        /// self <- -rem(a, b); returns false when the remainder vanishes.
        fn neg_rem(a: &SPoly, b: &SPoly) -> Option<SPoly> {
            debug_assert!(b.len >= 1);
            let dd = b.len - 1;
            let lead = b.c[dd];
            let mut r = *a;
            let a_scale = a.scale().max(1e-300);
            while r.len > dd {
                let last = r.c[r.len - 1];
                if last.abs() <= 1e-14 * a_scale {
                    r.len -= 1;
                    continue;
                }
                let k = r.len - 1 - dd;
                let q = last / lead;
                for i in 0..dd {
                    r.c[k + i] -= q * b.c[i];
                }
                r.len -= 1;
            }
            r.trim();
            if r.scale() <= 1e-12 {
                return None;
            }
            for i in 0..r.len {
                r.c[i] = -r.c[i];
            }
            r.normalize();
            Some(r)
        }
    }

    struct Chain {
        seq: [SPoly; MAX],
        len: usize,
    }

    fn sturm_chain(p: &SPoly) -> Chain {
        let blank = SPoly { c: [0.0; MAX], len: 0 };
        let mut chain = Chain { seq: [blank; MAX], len: 0 };
        let mut p0 = *p;
        p0.normalize();
        chain.seq[0] = p0;
        chain.len = 1;
        let d = p0.derivative();
        if d.len == 0 {
            return chain;
        }
        chain.seq[1] = d;
        chain.len = 2;
        while chain.len < MAX {
            let next = SPoly::neg_rem(&chain.seq[chain.len - 2], &chain.seq[chain.len - 1]);
            match next {
                None => break,
                Some(r) => {
                    let stop = r.len <= 1;
                    chain.seq[chain.len] = r;
                    chain.len += 1;
                    if stop {
                        break;
                    }
                }
            }
        }
        chain
    }

    fn variations(chain: &Chain, t: f64) -> u32 {
        let mut count = 0;
        let mut prev = 0i8;
        for i in 0..chain.len {
            let v = chain.seq[i].eval(t);
            let s = if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            };
            if s != 0 {
                if prev != 0 && s != prev {
                    count += 1;
                }
                prev = s;
            }
        }
        count
    }

    /// Sign-change roots of the polynomial with the given ascending
    /// coefficients on (lo, hi), written into `out`; returns the count.
    /// Roots of even contact are not reported.
    pub fn sign_change_roots(coeffs: &[f64], lo: f64, hi: f64, out: &mut [f64; MAX]) -> usize {
        debug_assert!(coeffs.len() <= MAX);
        let p = SPoly::from_slice(coeffs);
        if p.len <= 1 || hi <= lo {
            return 0;
        }
        let chain = sturm_chain(&p);
        let width = hi - lo;
        let nudge = 1e-14 * width.max(lo.abs()).max(hi.abs());
        let (mut a, mut b) = (lo + nudge, hi - nudge);
        for _ in 0..8 {
            if p.eval(a) != 0.0 {
                break;
            }
            a += nudge;
        }
        for _ in 0..8 {
            if p.eval(b) != 0.0 {
                break;
            }
            b -= nudge;
        }
        if a >= b {
            return 0;
        }
        let mut count = 0usize;
        // Depth-first isolation over a small manual stack.
        let mut stack = [(0.0f64, 0.0f64, 0u32); 64];
        let n0 = variations(&chain, a).saturating_sub(variations(&chain, b));
        if n0 == 0 {
            return 0;
        }
        stack[0] = (a, b, n0);
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let (a, b, n) = stack[top];
            if n == 0 {
                continue;
            }
            let span_scale = a.abs().max(b.abs()).max(1.0);
            if n == 1 || b - a <= 1e-15 * span_scale {
                // Refine by bisection when there is a sign change.
                let (fa, fb) = (p.eval(a), p.eval(b));
                if fa * fb < 0.0 && count < MAX {
                    let (mut x0, mut x1, mut f0) = (a, b, fa);
                    for _ in 0..100 {
                        let m = 0.5 * (x0 + x1);
                        let fm = p.eval(m);
                        if fm == 0.0 || x1 - x0 <= 1e-14 * span_scale {
                            break;
                        }
                        if f0 * fm < 0.0 {
                            x1 = m;
                        } else {
                            x0 = m;
                            f0 = fm;
                        }
                    }
                    out[count] = 0.5 * (x0 + x1);
                    count += 1;
                }
                // n == 1 without sign change is an even-contact root: skip.
                continue;
            }
            let mut m = 0.5 * (a + b);
            let mut tries = 0;
            while p.eval(m) == 0.0 && tries < 16 {
                m += (b - a) * 1e-13;
                tries += 1;
            }
            let nl = variations(&chain, a).saturating_sub(variations(&chain, m));
            if top + 2 <= stack.len() {
                stack[top] = (a, m, nl);
                stack[top + 1] = (m, b, n - nl);
                top += 2;
            }
        }
        out[..count].sort_by(|x, y| x.partial_cmp(y).unwrap());
        count
    }
}
