//! Sparse multivariate polynomials over f64 with exact integer exponents.
//!
//! Polynomials are stored as a coefficient table keyed by multi-index, with
//! exact-zero pruning only (no magnitude-based pruning, so the stored degree
//! never drifts). All operations are pure; values are immutable after
//! construction.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial; length equals the ambient dimension.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// alpha! = prod alpha_i!
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (1..=a as u64).map(|v| v as f64).product::<f64>())
            .product()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Real polynomial on R^n as a sparse multi-index coefficient table.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    alpha: Vec<u32>,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    dim: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(a, &c)| TermRepr { alpha: a.0.clone(), c })
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        Poly::new(
            repr.dim,
            repr.terms.into_iter().map(|t| (t.alpha, t.c)),
        )
        .map_err(serde::de::Error::custom)
    }
}

impl Poly {
    /// Build from (exponent, coefficient) pairs. Coefficients on equal
    /// exponents are summed; exact zeros are pruned.
    pub fn new<I, E>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (E, f64)>,
        E: Into<Vec<u32>>,
    {
        if dim < 1 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        let mut map: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (alpha, c) in terms {
            let alpha: Vec<u32> = alpha.into();
            if alpha.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: alpha.len() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidParameter("non-finite coefficient".into()));
            }
            *map.entry(MultiIndex(alpha)).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Ok(Poly { dim, terms: map })
    }

    pub fn zero(dim: usize) -> Self {
        Poly { dim, terms: BTreeMap::new() }
    }

    pub fn monomial(dim: usize, alpha: Vec<u32>, c: f64) -> Result<Self> {
        Poly::new(dim, [(alpha, c)])
    }

    /// The coordinate function x_i.
    pub fn coordinate(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::DimensionMismatch { expected: dim, got: i + 1 });
        }
        let mut alpha = vec![0u32; dim];
        alpha[i] = 1;
        Poly::monomial(dim, alpha, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Max |alpha| over stored terms; None for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|a| a.order()).max()
    }

    /// Min |alpha| over stored terms; None for the zero polynomial.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|a| a.order()).min()
    }

    pub fn coefficient(&self, alpha: &[u32]) -> f64 {
        self.terms.get(&MultiIndex(alpha.to_vec())).copied().unwrap_or(0.0)
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn coeff_scale(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut acc = 0.0;
        for (alpha, c) in &self.terms {
            let mut t = *c;
            for (xi, &a) in x.iter().zip(&alpha.0) {
                if a > 0 {
                    t *= xi.powi(a as i32);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn gradient_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut g = vec![0.0; self.dim];
        for (i, gi) in g.iter_mut().enumerate() {
            *gi = self.partial(i).evaluate(x)?;
        }
        Ok(g)
    }

    /// Partial derivative with respect to x_i.
    pub fn partial(&self, i: usize) -> Poly {
        let mut terms = BTreeMap::new();
        for (alpha, &c) in &self.terms {
            let a = alpha.0[i];
            if a == 0 {
                continue;
            }
            let mut beta = alpha.0.clone();
            beta[i] = a - 1;
            *terms.entry(MultiIndex(beta)).or_insert(0.0) += c * a as f64;
        }
        let mut p = Poly { dim: self.dim, terms };
        p.terms.retain(|_, c| *c != 0.0);
        p
    }

    /// Sum of second partials. Cancellation is exact when the coefficient
    /// arithmetic is exact (integer coefficients in particular).
    pub fn laplacian(&self) -> Poly {
        let mut terms: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (alpha, &c) in &self.terms {
            for i in 0..self.dim {
                let a = alpha.0[i];
                if a < 2 {
                    continue;
                }
                let mut beta = alpha.0.clone();
                beta[i] = a - 2;
                *terms.entry(MultiIndex(beta)).or_insert(0.0) += c * (a * (a - 1)) as f64;
            }
        }
        terms.retain(|_, c| *c != 0.0);
        Poly { dim: self.dim, terms }
    }

    /// Largest laplacian coefficient relative to the input coefficient scale.
    pub fn harmonic_residual(&self) -> f64 {
        let scale = self.coeff_scale();
        if scale == 0.0 {
            return 0.0;
        }
        self.laplacian().coeff_scale() / scale
    }

    /// True when the laplacian vanishes up to 1e-12 relative to the
    /// coefficient scale (exactly zero for integer-coefficient input).
    pub fn is_harmonic(&self) -> bool {
        self.harmonic_residual() <= 1e-12
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut terms = self.terms.clone();
        for (alpha, &c) in &other.terms {
            *terms.entry(alpha.clone()).or_insert(0.0) += c;
        }
        terms.retain(|_, c| *c != 0.0);
        Ok(Poly { dim: self.dim, terms })
    }

    pub fn scale(&self, c: f64) -> Poly {
        if c == 0.0 {
            return Poly::zero(self.dim);
        }
        let terms = self.terms.iter().map(|(a, &v)| (a.clone(), v * c)).collect();
        Poly { dim: self.dim, terms }
    }

    /// p(lambda * x): multiplies each coefficient by lambda^{|alpha|}.
    pub fn scale_coords(&self, lambda: f64) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|(a, &v)| (a.clone(), v * lambda.powi(a.order() as i32)))
            .collect();
        Poly { dim: self.dim, terms }
    }

    /// Directional derivative (dir . grad) p as a polynomial.
    pub fn directional_derivative(&self, dir: &[f64]) -> Result<Poly> {
        if dir.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: dir.len() });
        }
        let mut acc = Poly::zero(self.dim);
        for (i, &di) in dir.iter().enumerate() {
            if di != 0.0 {
                acc = acc.add(&self.partial(i).scale(di))?;
            }
        }
        Ok(acc)
    }

    /// Coefficients of the univariate polynomial s -> p(base + s*dir),
    /// ascending in s. Computed from the Taylor expansion along the ray.
    pub fn ray_coefficients(&self, base: &[f64], dir: &[f64]) -> Result<Vec<f64>> {
        let deg = match self.degree() {
            None => return Ok(vec![]),
            Some(d) => d as usize,
        };
        let mut coeffs = Vec::with_capacity(deg + 1);
        let mut current = self.clone();
        let mut factorial = 1.0;
        for m in 0..=deg {
            if m > 0 {
                factorial *= m as f64;
            }
            coeffs.push(current.evaluate(base)? / factorial);
            if m < deg {
                current = current.directional_derivative(dir)?;
            }
        }
        Ok(coeffs)
    }

    /// Homogeneous part of total degree m.
    pub fn homogeneous_part(&self, m: u32) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(a, _)| a.order() == m)
            .map(|(a, &c)| (a.clone(), c))
            .collect();
        Poly { dim: self.dim, terms }
    }

    pub fn is_homogeneous(&self) -> bool {
        match (self.degree(), self.min_degree()) {
            (Some(d), Some(j)) => d == j,
            _ => false,
        }
    }

    /// Group terms by total degree. Errors on the zero polynomial.
    pub fn homogeneous_decompose(&self) -> Result<HomogDecomp> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let mut parts: BTreeMap<u32, Poly> = BTreeMap::new();
        for (alpha, &c) in &self.terms {
            let part = parts
                .entry(alpha.order())
                .or_insert_with(|| Poly::zero(self.dim));
            part.terms.insert(alpha.clone(), c);
        }
        let top_degree = *parts.keys().max().unwrap();
        let bottom_degree = *parts.keys().min().unwrap();
        Ok(HomogDecomp { parts, top_degree, bottom_degree })
    }

    /// g(x) = c * r^{n-2} * p(r x), the polynomial whose measure is the
    /// scaled dilation c * T_{0,r}[omega_p] of the measure of p. For
    /// homogeneous p of degree k this is c * r^{n+k-2} * p.
    pub fn dilate_scale(&self, c: f64, r: f64) -> Result<Poly> {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("scale c must be positive, got {c}")));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("ratio r must be positive, got {r}")));
        }
        let front = c * r.powi(self.dim as i32 - 2);
        Ok(self.scale_coords(r).scale(front))
    }

    /// Canonical JSON string (terms sorted by multi-index).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("poly serialization cannot fail")
    }

    /// Stable FNV-1a hash of the canonical JSON; used to tag reports.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_canonical_json().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    /// Parse strings like "x0^2*x1 - 3*x2 + 0.5" (x, y, z alias x0, x1, x2).
    pub fn parse(src: &str, dim: usize) -> Result<Poly> {
        parse_poly(src, dim)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (alpha, c) in &self.terms {
            if first {
                if *c < 0.0 {
                    write!(f, "-")?;
                }
                first = false;
            } else if *c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            let has_vars = alpha.order() > 0;
            if mag != 1.0 || !has_vars {
                write!(f, "{mag}")?;
                if has_vars {
                    write!(f, "*")?;
                }
            }
            let mut first_var = true;
            for (i, &a) in alpha.0.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                if !first_var {
                    write!(f, "*")?;
                }
                first_var = false;
                write!(f, "x{i}")?;
                if a > 1 {
                    write!(f, "^{a}")?;
                }
            }
        }
        Ok(())
    }
}

/// A polynomial split into homogeneous parts keyed by degree.
#[derive(Clone, Debug)]
pub struct HomogDecomp {
    parts: BTreeMap<u32, Poly>,
    top_degree: u32,
    bottom_degree: u32,
}

impl HomogDecomp {
    pub fn part(&self, degree: u32) -> Option<&Poly> {
        self.parts.get(&degree)
    }

    pub fn parts(&self) -> impl Iterator<Item = (u32, &Poly)> {
        self.parts.iter().map(|(&d, p)| (d, p))
    }

    pub fn top_degree(&self) -> u32 {
        self.top_degree
    }

    pub fn bottom_degree(&self) -> u32 {
        self.bottom_degree
    }

    /// Recombine the parts; reproduces the input coefficient table exactly.
    pub fn sum(&self) -> Poly {
        let dim = self.parts.values().next().map(|p| p.dim).unwrap_or(1);
        let mut acc = Poly::zero(dim);
        for p in self.parts.values() {
            acc = acc.add(p).expect("parts share dimension");
        }
        acc
    }
}

/// The Lewy spherical harmonic x^2(y-z) + y^2(z-x) + z^2(x-y) - xyz:
/// a homogeneous harmonic cubic on R^3 whose nodal set splits S^2 into
/// exactly two components.
pub fn lewy_polynomial() -> Poly {
    Poly::new(
        3,
        [
            (vec![2, 1, 0], 1.0),  // x^2 y
            (vec![2, 0, 1], -1.0), // -x^2 z
            (vec![0, 2, 1], 1.0),  // y^2 z
            (vec![1, 2, 0], -1.0), // -x y^2
            (vec![1, 0, 2], 1.0),  // x z^2
            (vec![0, 1, 2], -1.0), // -y z^2
            (vec![1, 1, 1], -1.0), // -xyz
        ],
    )
    .expect("fixed coefficient table")
}

// ---------------------------------------------------------------------------
// Harmonic basis: null space of the Laplacian on homogeneous degree-k
// polynomials, solved exactly over the rationals so basis coefficients are
// small integers and laplacian(basis element) cancels to exact zero.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Frac {
    num: i128,
    den: i128, // > 0
}

impl Frac {
    const ZERO: Frac = Frac { num: 0, den: 1 };

    fn new(num: i128, den: i128) -> Frac {
        assert!(den != 0);
        let g = gcd_i128(num.abs(), den.abs()).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Frac { num: sign * num / g, den: (den / g).abs() }
    }

    fn from_int(v: i128) -> Frac {
        Frac { num: v, den: 1 }
    }

    fn is_zero(&self) -> bool {
        self.num == 0
    }

    fn sub_mul(self, a: Frac, b: Frac) -> Frac {
        // self - a*b
        let prod = Frac::new(a.num * b.num, a.den * b.den);
        Frac::new(self.num * prod.den - prod.num * self.den, self.den * prod.den)
    }

    fn div(self, other: Frac) -> Frac {
        assert!(other.num != 0);
        Frac::new(self.num * other.den, self.den * other.num)
    }
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// All exponent vectors in n variables of total degree exactly k.
pub fn monomials_of_degree(n: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    fn rec(n: usize, pos: usize, remaining: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == n - 1 {
            current[pos] = remaining;
            out.push(current.clone());
            return;
        }
        for v in (0..=remaining).rev() {
            current[pos] = v;
            rec(n, pos + 1, remaining - v, current, out);
        }
    }
    rec(n, 0, k, &mut current, &mut out);
    out
}

/// All exponent vectors in n variables of total degree at most k.
pub fn monomials_up_to_degree(n: usize, k: u32) -> Vec<Vec<u32>> {
    (0..=k).flat_map(|d| monomials_of_degree(n, d)).collect()
}

/// Basis of the harmonic homogeneous polynomials of degree k in n variables.
/// Basis vectors are scaled to primitive integer coefficients, so each
/// element satisfies laplacian = 0 exactly in f64 arithmetic.
pub fn harmonic_basis(n: usize, k: u32) -> Result<Vec<Poly>> {
    if n < 2 {
        return Err(Error::InvalidParameter("harmonic basis needs n >= 2".into()));
    }
    if k < 1 {
        return Err(Error::InvalidParameter("harmonic basis needs k >= 1".into()));
    }
    let cols = monomials_of_degree(n, k);
    if k == 1 {
        return (0..n).map(|i| Poly::coordinate(n, i)).collect();
    }
    let rows = monomials_of_degree(n, k - 2);
    let row_index: BTreeMap<Vec<u32>, usize> =
        rows.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();

    // a[row][col]: coefficient of monomial `row` in Delta(x^col).
    let mut a = vec![vec![Frac::ZERO; cols.len()]; rows.len()];
    for (j, alpha) in cols.iter().enumerate() {
        for i in 0..n {
            if alpha[i] < 2 {
                continue;
            }
            let mut beta = alpha.clone();
            beta[i] -= 2;
            let r = row_index[&beta];
            let c = (alpha[i] * (alpha[i] - 1)) as i128;
            a[r][j] = Frac::new(a[r][j].num + c * a[r][j].den, a[r][j].den);
        }
    }

    // Reduced row echelon form over Q.
    let (nr, nc) = (rows.len(), cols.len());
    let mut pivot_col_of_row = Vec::new();
    let mut rank = 0usize;
    for col in 0..nc {
        let pivot = (rank..nr).find(|&r| !a[r][col].is_zero());
        let Some(pr) = pivot else { continue };
        a.swap(rank, pr);
        let pv = a[rank][col];
        for c in col..nc {
            a[rank][c] = a[rank][c].div(pv);
        }
        for r in 0..nr {
            if r != rank && !a[r][col].is_zero() {
                let factor = a[r][col];
                for c in col..nc {
                    a[r][c] = a[r][c].sub_mul(a[rank][c], factor);
                }
            }
        }
        pivot_col_of_row.push(col);
        rank += 1;
        if rank == nr {
            break;
        }
    }

    let pivot_cols: Vec<usize> = pivot_col_of_row;
    let is_pivot = {
        let mut v = vec![false; nc];
        for &c in &pivot_cols {
            v[c] = true;
        }
        v
    };

    let mut basis = Vec::new();
    for free in 0..nc {
        if is_pivot[free] {
            continue;
        }
        // Solution with x_free = 1, other free vars 0.
        let mut x = vec![Frac::ZERO; nc];
        x[free] = Frac::from_int(1);
        for (r, &pc) in pivot_cols.iter().enumerate() {
            // x_pc = -a[r][free]
            x[pc] = Frac::ZERO.sub_mul(a[r][free], Frac::from_int(1));
        }
        // Clear denominators and divide by gcd.
        let lcm = x.iter().fold(1i128, |l, f| {
            if f.is_zero() {
                l
            } else {
                l / gcd_i128(l, f.den) * f.den
            }
        });
        let ints: Vec<i128> = x.iter().map(|f| f.num * (lcm / f.den)).collect();
        let g = ints
            .iter()
            .fold(0i128, |g, &v| gcd_i128(g, v))
            .max(1);
        let poly = Poly::new(
            n,
            cols.iter()
                .zip(&ints)
                .filter(|(_, &v)| v != 0)
                .map(|(alpha, &v)| (alpha.clone(), (v / g) as f64)),
        )?;
        basis.push(poly);
    }
    Ok(basis)
}

/// Dimension of the space of spherical harmonics of degree k in n variables.
pub fn harmonic_space_dim(n: usize, k: u32) -> usize {
    fn n_monomials(n: usize, k: i64) -> i64 {
        if k < 0 {
            return 0;
        }
        // C(n+k-1, k)
        let mut num = 1i64;
        let mut den = 1i64;
        for i in 0..(n as i64 - 1) {
            num *= k + 1 + i;
            den *= i + 1;
        }
        num / den
    }
    (n_monomials(n, k as i64) - n_monomials(n, k as i64 - 2)) as usize
}

// ---------------------------------------------------------------------------
// Human-readable parser: signed sums of terms "c * xi^e * xj^e ...".
// ---------------------------------------------------------------------------

fn parse_poly(src: &str, dim: usize) -> Result<Poly> {
    let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
    let mut rest = src.trim();
    if rest.is_empty() {
        return Err(Error::Parse("empty polynomial string".into()));
    }
    let mut sign = 1.0;
    // Leading sign.
    if let Some(r) = rest.strip_prefix('-') {
        sign = -1.0;
        rest = r.trim_start();
    } else if let Some(r) = rest.strip_prefix('+') {
        rest = r.trim_start();
    }
    loop {
        let (term, remainder) = split_term(rest);
        let (alpha, c) = parse_term(term, dim)?;
        terms.push((alpha, sign * c));
        match remainder {
            None => break,
            Some((s, r)) => {
                sign = s;
                rest = r;
            }
        }
    }
    Poly::new(dim, terms)
}

fn split_term(src: &str) -> (&str, Option<(f64, &str)>) {
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'+' || b == b'-' {
            // Not part of an exponent like "e-3" (we do not accept e-notation
            // inside terms; coefficients are plain decimals).
            let sign = if b == b'-' { -1.0 } else { 1.0 };
            return (src[..i].trim(), Some((sign, src[i + 1..].trim_start())));
        }
        i += 1;
    }
    (src.trim(), None)
}

fn parse_term(term: &str, dim: usize) -> Result<(Vec<u32>, f64)> {
    if term.is_empty() {
        return Err(Error::Parse("empty term".into()));
    }
    let mut alpha = vec![0u32; dim];
    let mut coeff = 1.0;
    let mut saw_factor = false;
    for factor in term.split('*') {
        let factor = factor.trim();
        if factor.is_empty() {
            return Err(Error::Parse(format!("empty factor in term '{term}'")));
        }
        saw_factor = true;
        let indexed = factor
            .strip_prefix('x')
            .filter(|s| s.chars().next().is_some_and(|c| c.is_ascii_digit()));
        if let Some(var_part) = indexed {
            let (idx_str, exp) = match var_part.split_once('^') {
                Some((i, e)) => (i, e.trim().parse::<u32>().map_err(|_| {
                    Error::Parse(format!("bad exponent in '{factor}'"))
                })?),
                None => (var_part, 1),
            };
            let idx: usize = idx_str
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad variable index in '{factor}'")))?;
            if idx >= dim {
                return Err(Error::Parse(format!(
                    "variable x{idx} out of range for dimension {dim}"
                )));
            }
            alpha[idx] += exp;
        } else if let Some(idx) = letter_var(factor) {
            let (letter, exp) = idx;
            if letter >= dim {
                return Err(Error::Parse(format!(
                    "variable '{factor}' out of range for dimension {dim}"
                )));
            }
            alpha[letter] += exp;
        } else {
            let c: f64 = factor
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient '{factor}'")))?;
            coeff *= c;
        }
    }
    if !saw_factor {
        return Err(Error::Parse(format!("cannot parse term '{term}'")));
    }
    Ok((alpha, coeff))
}

fn letter_var(factor: &str) -> Option<(usize, u32)> {
    let (name, exp) = match factor.split_once('^') {
        Some((n, e)) => (n.trim(), e.trim().parse::<u32>().ok()?),
        None => (factor, 1),
    };
    let idx = match name {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        "w" => 3,
        _ => return None,
    };
    Some((idx, exp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly3(src: &str) -> Poly {
        Poly::parse(src, 3).unwrap()
    }

    #[test]
    fn evaluate_on_nodal_set() {
        let p = poly3("x^2 - y^2");
        assert_eq!(p.evaluate(&[1.0, 1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_lewy_at_pole() {
        let h = lewy_polynomial();
        assert_eq!(h.evaluate(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_coordinate() {
        let p = poly3("x");
        assert_eq!(p.evaluate(&[3.0, 0.0, 0.0]).unwrap(), 3.0);
    }

    #[test]
    fn evaluate_lewy_at_ones() {
        // 0 + 0 + 0 - 1
        let h = lewy_polynomial();
        assert_eq!(h.evaluate(&[1.0, 1.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn laplacian_examples() {
        assert!(poly3("x^2 - y^2").laplacian().is_zero());
        let lap = poly3("x^2").laplacian();
        assert_eq!(lap.coefficient(&[0, 0, 0]), 2.0);
        assert_eq!(lap.num_terms(), 1);
        assert!(lewy_polynomial().laplacian().is_zero());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = poly3("x");
        assert!(matches!(
            p.evaluate(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn decompose_groups_by_degree() {
        let p = poly3("x^2 - y^2 + x");
        let d = p.homogeneous_decompose().unwrap();
        assert_eq!(d.top_degree(), 2);
        assert_eq!(d.bottom_degree(), 1);
        assert_eq!(d.part(1).unwrap(), &poly3("x"));
        assert_eq!(d.part(2).unwrap(), &poly3("x^2 - y^2"));
        assert_eq!(d.sum(), p);
    }

    #[test]
    fn decompose_lewy_single_part() {
        let d = lewy_polynomial().homogeneous_decompose().unwrap();
        assert_eq!(d.top_degree(), 3);
        assert_eq!(d.bottom_degree(), 3);
        assert_eq!(d.parts().count(), 1);
    }

    #[test]
    fn decompose_zero_errors() {
        assert!(matches!(
            Poly::zero(3).homogeneous_decompose(),
            Err(Error::ZeroPolynomial)
        ));
    }

    #[test]
    fn harmonic_parts_of_harmonic_poly() {
        let p = poly3("x*y + x");
        let d = p.homogeneous_decompose().unwrap();
        for (_, part) in d.parts() {
            assert!(part.laplacian().is_zero());
        }
    }

    #[test]
    fn dilate_scale_flat() {
        // n = 3: g = c r^{n-2} p(rx) = 1 * 2 * (2x) = 4x.
        let p = poly3("x");
        let g = p.dilate_scale(1.0, 2.0).unwrap();
        assert_eq!(g.coefficient(&[1, 0, 0]), 4.0);
        assert_eq!(g.num_terms(), 1);
    }

    #[test]
    fn dilate_scale_homogeneous_power() {
        // Homogeneous degree k: g = c r^{n+k-2} p.
        let p = poly3("x*y");
        let g = p.dilate_scale(3.0, 2.0).unwrap();
        assert_eq!(g.coefficient(&[1, 1, 0]), 3.0 * 2f64.powi(3));
    }

    #[test]
    fn dilate_scale_identity_and_composition() {
        let p = lewy_polynomial();
        let id = p.dilate_scale(1.0, 1.0).unwrap();
        assert_eq!(id, p);

        let a = p.dilate_scale(1.5, 2.0).unwrap().dilate_scale(2.0, 0.25).unwrap();
        let b = p.dilate_scale(3.0, 0.5).unwrap();
        for (alpha, c) in a.terms() {
            let cb = b.coefficient(&alpha.0);
            assert!((c - cb).abs() <= 1e-12 * cb.abs().max(1.0));
        }
    }

    #[test]
    fn dilate_scale_rejects_bad_parameters() {
        let p = poly3("x");
        assert!(p.dilate_scale(0.0, 1.0).is_err());
        assert!(p.dilate_scale(1.0, -2.0).is_err());
    }

    #[test]
    fn harmonic_basis_dimensions() {
        assert_eq!(harmonic_basis(3, 1).unwrap().len(), 3);
        assert_eq!(harmonic_basis(3, 2).unwrap().len(), 5);
        assert_eq!(harmonic_basis(3, 3).unwrap().len(), 7);
        assert_eq!(harmonic_basis(2, 4).unwrap().len(), 2);
        for k in 1..=5 {
            assert_eq!(harmonic_basis(3, k).unwrap().len(), harmonic_space_dim(3, k));
        }
    }

    #[test]
    fn harmonic_basis_elements_are_exactly_harmonic() {
        for k in 1..=5 {
            for p in harmonic_basis(3, k).unwrap() {
                assert!(p.laplacian().is_zero(), "k={k}: {p}");
                assert_eq!(p.degree(), Some(k));
                assert!(p.is_homogeneous());
            }
        }
    }

    #[test]
    fn harmonic_basis_elements_linearly_independent() {
        // Evaluate the basis on random points; the Gram matrix of the value
        // vectors must be full rank.
        let basis = harmonic_basis(3, 3).unwrap();
        let m = basis.len();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<[f64; 3]> = (0..2 * m)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let mut mat: Vec<Vec<f64>> = basis
            .iter()
            .map(|p| pts.iter().map(|x| p.evaluate(x).unwrap()).collect())
            .collect();
        // Gaussian elimination rank.
        let mut rank = 0;
        for col in 0..pts.len() {
            let piv = (rank..m).max_by(|&a, &b| {
                mat[a][col].abs().partial_cmp(&mat[b][col].abs()).unwrap()
            });
            let Some(piv) = piv else { break };
            if mat[piv][col].abs() < 1e-9 {
                continue;
            }
            mat.swap(rank, piv);
            for r in rank + 1..m {
                let f = mat[r][col] / mat[rank][col];
                for c in col..pts.len() {
                    mat[r][c] -= f * mat[rank][c];
                }
            }
            rank += 1;
            if rank == m {
                break;
            }
        }
        assert_eq!(rank, m);
    }

    #[test]
    fn lewy_in_degree3_span() {
        // Least-squares projection of Lewy onto the degree-3 harmonic basis
        // must have zero residual: check via exact coefficient matching after
        // solving a small linear system on monomial coefficients.
        let basis = harmonic_basis(3, 3).unwrap();
        let lewy = lewy_polynomial();
        let monos = monomials_of_degree(3, 3);
        let a: Vec<Vec<f64>> = monos
            .iter()
            .map(|m| basis.iter().map(|p| p.coefficient(m)).collect())
            .collect();
        let b: Vec<f64> = monos.iter().map(|m| lewy.coefficient(m)).collect();
        // Solve min ||A c - b|| by normal equations (small system).
        let n = basis.len();
        let mut ata = vec![vec![0.0; n]; n];
        let mut atb = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                ata[i][j] = a.iter().map(|row| row[i] * row[j]).sum();
            }
            atb[i] = a.iter().zip(&b).map(|(row, bi)| row[i] * bi).sum();
        }
        // Gaussian solve.
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| ata[x][col].abs().partial_cmp(&ata[y][col].abs()).unwrap())
                .unwrap();
            ata.swap(col, piv);
            atb.swap(col, piv);
            for r in col + 1..n {
                let f = ata[r][col] / ata[col][col];
                for c in col..n {
                    ata[r][c] -= f * ata[col][c];
                }
                atb[r] -= f * atb[col];
            }
        }
        let mut coeffs = vec![0.0; n];
        for r in (0..n).rev() {
            let mut v = atb[r];
            for c in r + 1..n {
                v -= ata[r][c] * coeffs[c];
            }
            coeffs[r] = v / ata[r][r];
        }
        // Residual of the reconstruction.
        let mut resid: f64 = 0.0;
        for (mi, m) in monos.iter().enumerate() {
            let rec: f64 = (0..n).map(|i| coeffs[i] * a[mi][i]).sum();
            resid = resid.max((rec - b[mi]).abs());
        }
        assert!(resid <= 1e-12, "residual {resid}");
    }

    #[test]
    fn lewy_degree_and_harmonicity() {
        let h = lewy_polynomial();
        assert_eq!(h.degree(), Some(3));
        assert!(h.is_harmonic());
    }

    #[test]
    fn parser_and_json_round_trip() {
        let p = poly3("x0^2*x1 - 3*x2");
        assert_eq!(p.coefficient(&[2, 1, 0]), 1.0);
        assert_eq!(p.coefficient(&[0, 0, 1]), -3.0);
        let json = p.to_canonical_json();
        let q: Poly = serde_json::from_str(&json).unwrap();
        assert_eq!(p, q);

        let r = poly3("2.5*x*y - z^2");
        assert_eq!(r.coefficient(&[1, 1, 0]), 2.5);
        assert_eq!(r.coefficient(&[0, 0, 2]), -1.0);
    }

    #[test]
    fn parser_rejects_garbage() {
        assert!(Poly::parse("", 3).is_err());
        assert!(Poly::parse("x5", 3).is_err());
        assert!(Poly::parse("q^2", 3).is_err());
        assert!(Poly::parse("x^", 3).is_err());
    }

    #[test]
    fn ray_coefficients_match_direct_evaluation() {
        let h = lewy_polynomial();
        let base = [0.3, -0.2, 0.5];
        let dir = [0.6, 0.4, -0.7];
        let coeffs = h.ray_coefficients(&base, &dir).unwrap();
        for s in [0.0, 0.37, 1.5, -2.0] {
            let x: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + s * d).collect();
            let direct = h.evaluate(&x).unwrap();
            let horner = coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c);
            assert!((direct - horner).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn content_hash_is_stable_and_order_free() {
        let p = Poly::new(3, [(vec![1, 0, 0], 1.0), (vec![0, 1, 0], 2.0)]).unwrap();
        let q = Poly::new(3, [(vec![0, 1, 0], 2.0), (vec![1, 0, 0], 1.0)]).unwrap();
        assert_eq!(p.content_hash(), q.content_hash());
    }
}
