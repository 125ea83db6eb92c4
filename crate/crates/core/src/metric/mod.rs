//! Transport metrics between Radon measures and the cone-distance search.
//!
//! F_r(mu, nu) is the supremum of |int f dmu - int f dnu| over non-negative
//! 1-Lipschitz f supported in B_r, solved as a linear program on particle
//! clouds (see `flow`). On top of it: the complete weak-convergence metric
//! sum 2^{-i} min(1, F_i), and the normalized distance d_r from a measure to
//! the cone of degree-k homogeneous harmonic measures, minimized over basis
//! coefficients by multi-start Nelder-Mead.

pub mod flow;

pub use flow::{KrGraph, KrSolution, LpOptions};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{self, PolyMeasure};
use crate::particle::{discretize, discretize_homogeneous, ParticleMeasure};
use crate::poly::{harmonic_basis, Poly};
use crate::sphere::{build_rule, constants, l1_norm_sphere, sphere_area, sup_norm_sphere};

/// Merge supports by exact coordinate equality; returns the merged point
/// list and one signed-mass vector per input measure.
fn union_support(measures: &[&ParticleMeasure]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let dim = measures.first().map(|m| m.dim()).unwrap_or(0);
    for m in measures {
        if m.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
        }
    }
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut masses: Vec<Vec<f64>> = vec![Vec::new(); measures.len()];
    for (mi, m) in measures.iter().enumerate() {
        for p in m.particles() {
            let key: Vec<u64> = p.position.iter().map(|x| x.to_bits()).collect();
            let idx = *index.entry(key).or_insert_with(|| {
                points.push(p.position.clone());
                for column in masses.iter_mut() {
                    column.push(0.0);
                }
                points.len() - 1
            });
            masses[mi][idx] += p.mass;
        }
    }
    Ok((points, masses))
}

/// F_r(mu) = int_0^r mu(B_s) ds evaluated on a cloud: the tight Lipschitz
/// envelope gives F_r(mu, 0) = sum m (r - |p|)^+ exactly.
pub fn f_r_single(mu: &ParticleMeasure, r: f64) -> f64 {
    mu.particles()
        .map(|p| {
            let norm = p.position.iter().map(|x| x * x).sum::<f64>().sqrt();
            p.mass * (r - norm).max(0.0)
        })
        .sum()
}

/// Detailed LP result for one pair.
#[derive(Clone, Debug)]
pub struct FrDetail {
    pub value: f64,
    /// Optimum of +(mu - nu) and of -(mu - nu).
    pub positive_side: f64,
    pub negative_side: f64,
    /// Maximizing node values on the kept union support.
    pub optimal_f: Vec<f64>,
    pub kept_points: Vec<Vec<f64>>,
}

/// The transport semi-metric between two clouds at scale r.
pub fn f_r_distance(
    mu: &ParticleMeasure,
    nu: &ParticleMeasure,
    r: f64,
    opts: &LpOptions,
) -> Result<f64> {
    Ok(f_r_distance_detailed(mu, nu, r, opts)?.value)
}

pub fn f_r_distance_detailed(
    mu: &ParticleMeasure,
    nu: &ParticleMeasure,
    r: f64,
    opts: &LpOptions,
) -> Result<FrDetail> {
    if mu.truncation_radius() < r - 1e-12 || nu.truncation_radius() < r - 1e-12 {
        return Err(Error::RegionExceeded);
    }
    let (points, masses) = union_support(&[mu, nu])?;
    let graph = KrGraph::build(&points, r, opts)?;
    let signed: Vec<f64> = graph.kept.iter().map(|&i| masses[0][i] - masses[1][i]).collect();
    solve_both_sides(&graph, &signed, &points)
}

fn solve_both_sides(graph: &KrGraph, signed: &[f64], points: &[Vec<f64>]) -> Result<FrDetail> {
    let pos = graph.solve(signed)?;
    let neg_mass: Vec<f64> = signed.iter().map(|c| -c).collect();
    let neg = graph.solve(&neg_mass)?;
    let (value, optimal_f) = if pos.value >= neg.value {
        (pos.value, pos.f)
    } else {
        (neg.value, neg.f)
    };
    Ok(FrDetail {
        value,
        positive_side: pos.value,
        negative_side: neg.value,
        optimal_f,
        kept_points: graph.kept.iter().map(|&i| points[i].clone()).collect(),
    })
}

/// All pairwise F_r distances over a shared union support, so the LP
/// feasible set is literally identical across pairs and the semi-metric
/// axioms hold at solver precision.
pub fn pairwise_f_r(
    measures: &[&ParticleMeasure],
    r: f64,
    opts: &LpOptions,
) -> Result<Vec<Vec<f64>>> {
    for m in measures {
        if m.truncation_radius() < r - 1e-12 {
            return Err(Error::RegionExceeded);
        }
    }
    let (points, masses) = union_support(measures)?;
    let graph = KrGraph::build(&points, r, opts)?;
    let k = measures.len();
    let mut out = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let signed: Vec<f64> =
                graph.kept.iter().map(|&i| masses[a][i] - masses[b][i]).collect();
            let detail = solve_both_sides(&graph, &signed, &points)?;
            out[a][b] = detail.value;
            out[b][a] = detail.value;
        }
    }
    Ok(out)
}

/// Truncation of the complete weak-convergence metric:
/// sum_{i=1..terms} 2^{-i} min(1, F_i(mu, nu)); the dropped tail is below
/// 2^{-terms}.
pub fn weak_metric(
    mu: &ParticleMeasure,
    nu: &ParticleMeasure,
    terms: u32,
    opts: &LpOptions,
) -> Result<f64> {
    if mu.truncation_radius() < terms as f64 || nu.truncation_radius() < terms as f64 {
        return Err(Error::RegionExceeded);
    }
    let mut acc = 0.0;
    for i in 1..=terms {
        let fi = f_r_distance(mu, nu, i as f64, opts)?;
        acc += 2f64.powi(-(i as i32)) * fi.min(1.0);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Cone distance d_r(sigma, F_k)
// ---------------------------------------------------------------------------

/// Input measure for the cone search.
pub enum SigmaMeasure<'a> {
    Poly(&'a PolyMeasure),
    Cloud(&'a ParticleMeasure),
}

#[derive(Clone, Debug)]
pub struct ConeSearchConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Rule level for ray-cast discretization of non-homogeneous measures.
    pub rule_level: u32,
    /// Curve slices / radial nodes for cone-member discretization.
    pub curve_slices: usize,
    pub radial_nodes: usize,
    /// Particle budget per cloud for the final evaluation.
    pub max_cloud_points: usize,
    /// Smaller budget used inside the search loop; the winning candidate is
    /// re-evaluated at full resolution.
    pub search_cloud_points: usize,
    pub lp: LpOptions,
    pub seed: u64,
    /// Nelder-Mead termination when the simplex value spread drops below.
    pub f_tol: f64,
}

impl Default for ConeSearchConfig {
    fn default() -> Self {
        ConeSearchConfig {
            restarts: 6,
            max_iters: 70,
            rule_level: 1,
            curve_slices: 160,
            radial_nodes: 10,
            max_cloud_points: 900,
            search_cloud_points: 130,
            lp: LpOptions::default(),
            seed: 0xC0DE,
            f_tol: 2e-3,
        }
    }
}

/// Result of the nonconvex cone-distance minimization.
#[derive(Clone, Debug, Serialize)]
pub struct ConeDistResult {
    /// Best found value of F_r(sigma / F_r(sigma), psi).
    pub value: f64,
    /// Coefficients over harmonic_basis(n, k) of the best candidate,
    /// rescaled so that F_r(psi) = 1 under the closed form.
    pub best_coeffs: Vec<f64>,
    pub restarts: usize,
    pub converged: bool,
    pub evaluations: usize,
    /// LP distance between two independent discretizations of sigma-hat:
    /// values at or below this floor mean zero within tolerance.
    pub noise_floor: Option<f64>,
}

/// d_r(sigma, F_k): normalized transport distance from sigma to the unit-F_r
/// slice of the degree-k homogeneous cone. Returns 1 when F_r(sigma) = 0.
pub fn cone_distance(
    sigma: &SigmaMeasure,
    k: u32,
    r: f64,
    cfg: &ConeSearchConfig,
) -> Result<ConeDistResult> {
    let n = match sigma {
        SigmaMeasure::Poly(m) => m.dim(),
        SigmaMeasure::Cloud(c) => c.dim(),
    };
    if n != 3 {
        return Err(Error::InvalidParameter("cone search is implemented for n = 3".into()));
    }
    let norm_rule = build_rule(3, 0)?;
    // F_r(sigma) by the measure's own representation.
    let fr_sigma = match sigma {
        SigmaMeasure::Poly(m) => measure::f_r(m, r, &norm_rule)?,
        SigmaMeasure::Cloud(c) => f_r_single(c, r),
    };
    if fr_sigma <= 1e-300 {
        return Ok(ConeDistResult {
            value: 1.0,
            best_coeffs: Vec::new(),
            restarts: 0,
            converged: true,
            evaluations: 0,
            noise_floor: None,
        });
    }
    // Discretize sigma inside B_r and normalize its cloud to discrete
    // F_r = 1, which removes the mass-normalization component of the
    // discretization error.
    let sigma_cloud_raw = |seed_shift: u64, slices_scale: f64| -> Result<ParticleMeasure> {
        let cloud = match sigma {
            SigmaMeasure::Poly(m) => {
                if m.is_homogeneous() {
                    discretize_homogeneous(
                        m,
                        r,
                        (cfg.curve_slices as f64 * slices_scale) as usize,
                        cfg.radial_nodes,
                    )?
                } else {
                    let rule = build_rule(3, cfg.rule_level)?;
                    discretize(m, r, &rule, 2 + m.degree() as usize, cfg.seed ^ seed_shift)?
                }
            }
            SigmaMeasure::Cloud(c) => (*c).clone(),
        };
        let cloud = cloud.consolidate_to(cfg.max_cloud_points)?;
        let fr = f_r_single(&cloud, r);
        if fr <= 1e-300 {
            return Err(Error::Internal("sigma cloud carries no mass inside B_r".into()));
        }
        cloud.scale_mass(1.0 / fr)
    };
    let sigma_hat = sigma_cloud_raw(0, 1.0)?;
    // The search-resolution copy consolidates from the same raw cloud with
    // the same budget the candidate clouds use, so a candidate matching
    // sigma exactly reproduces the identical particle list.
    let sigma_hat_search = {
        let raw = match sigma {
            SigmaMeasure::Poly(m) if m.is_homogeneous() => {
                discretize_homogeneous(m, r, cfg.curve_slices, cfg.radial_nodes)?
            }
            _ => sigma_hat.clone(),
        };
        let c = raw.consolidate_to(cfg.search_cloud_points)?;
        let fr = f_r_single(&c, r);
        c.scale_mass(1.0 / fr)?
    };
    // Independent second discretization for the numerical floor.
    let noise_floor = match sigma {
        SigmaMeasure::Poly(_) => {
            let other = sigma_cloud_raw(0x9E37, 1.31)?;
            Some(f_r_distance(&sigma_hat, &other, r, &cfg.lp)?)
        }
        SigmaMeasure::Cloud(_) => None,
    };

    let basis = harmonic_basis(3, k)?;
    let dim = basis.len();
    let evaluate_at = |coeffs: &[f64], budget: usize, target: &ParticleMeasure| -> f64 {
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return 2.0;
        }
        let mut p = Poly::zero(3);
        for (c, b) in coeffs.iter().zip(&basis) {
            p = p.add(&b.scale(c / norm)).expect("same dims");
        }
        let Ok(pm) = PolyMeasure::new(p, 1.0) else {
            return 2.0;
        };
        let Ok(cloud) = discretize_homogeneous(&pm, r, cfg.curve_slices, cfg.radial_nodes) else {
            return 2.0;
        };
        let Ok(cloud) = cloud.consolidate_to(budget) else {
            return 2.0;
        };
        let fr = f_r_single(&cloud, r);
        if fr <= 1e-300 {
            return 2.0;
        }
        let psi = cloud.scale_mass(1.0 / fr).expect("positive scale");
        f_r_distance(target, &psi, r, &cfg.lp).unwrap_or(2.0)
    };
    let evaluate = |coeffs: &[f64]| evaluate_at(coeffs, cfg.search_cloud_points, &sigma_hat_search);

    // The first start projects the degree-k part of sigma's polynomial onto
    // the basis when available (exact for cone members); the rest are seeded
    // random directions.
    let projected_start: Option<Vec<f64>> = match sigma {
        SigmaMeasure::Poly(m) => {
            let part = m.decomp().part(k).cloned();
            part.and_then(|p| project_onto_basis(&p, &basis))
        }
        SigmaMeasure::Cloud(_) => None,
    };
    let runs: Vec<(f64, Vec<f64>, bool, usize)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let start: Vec<f64> = match (&projected_start, restart) {
                (Some(p), 0) => p.clone(),
                _ => {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(cfg.seed ^ (0xA5A5 + restart as u64));
                    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
                }
            };
            nelder_mead(&evaluate, &start, cfg.max_iters, cfg.f_tol)
        })
        .collect();
    let mut best = 0usize;
    for i in 1..runs.len() {
        if runs[i].0 < runs[best].0 {
            best = i;
        }
    }
    let evaluations = runs.iter().map(|r| r.3).sum();
    let any_converged = runs.iter().any(|r| r.2);
    let (_, raw_coeffs, ..) = runs.into_iter().nth(best).expect("at least one restart");
    // Final value at full resolution.
    let value = evaluate_at(&raw_coeffs, cfg.max_cloud_points, &sigma_hat);

    // Rescale the winning candidate so F_r(psi) = 1 in closed form:
    // ||p||_1 = 2 (n + k - 1) / (k r^{n+k-1}).
    let norm = raw_coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut p = Poly::zero(3);
    for (c, b) in raw_coeffs.iter().zip(&basis) {
        p = p.add(&b.scale(c / norm))?;
    }
    let l1 = l1_norm_sphere(&p, &norm_rule)?;
    let target_l1 = 2.0 * (3.0 + k as f64 - 1.0) / (k as f64 * r.powi(3 + k as i32 - 1));
    let best_coeffs: Vec<f64> = raw_coeffs.iter().map(|c| c / norm * target_l1 / l1).collect();

    Ok(ConeDistResult {
        value,
        best_coeffs,
        restarts: cfg.restarts,
        converged: any_converged,
        evaluations,
        noise_floor,
    })
}

/// Least-squares coefficients expressing `target` in the basis (by monomial
/// matching); None when the target is zero or the normal system degenerates.
fn project_onto_basis(target: &Poly, basis: &[Poly]) -> Option<Vec<f64>> {
    if target.is_zero() || basis.is_empty() {
        return None;
    }
    let monos: Vec<Vec<u32>> = {
        let mut set = std::collections::BTreeSet::new();
        for (alpha, _) in target.terms() {
            set.insert(alpha.0.clone());
        }
        for b in basis {
            for (alpha, _) in b.terms() {
                set.insert(alpha.0.clone());
            }
        }
        set.into_iter().collect()
    };
    let n = basis.len();
    let a: Vec<Vec<f64>> = monos
        .iter()
        .map(|m| basis.iter().map(|b| b.coefficient(m)).collect())
        .collect();
    let rhs: Vec<f64> = monos.iter().map(|m| target.coefficient(m)).collect();
    let mut ata = vec![vec![0.0; n]; n];
    let mut atb = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            ata[i][j] = a.iter().map(|row| row[i] * row[j]).sum();
        }
        atb[i] = a.iter().zip(&rhs).map(|(row, b)| row[i] * b).sum();
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| ata[x][col].abs().partial_cmp(&ata[y][col].abs()).unwrap())?;
        if ata[piv][col].abs() < 1e-12 {
            return None;
        }
        ata.swap(col, piv);
        atb.swap(col, piv);
        for r2 in col + 1..n {
            let f = ata[r2][col] / ata[col][col];
            for c2 in col..n {
                ata[r2][c2] -= f * ata[col][c2];
            }
            atb[r2] -= f * atb[col];
        }
    }
    let mut x = vec![0.0; n];
    for r2 in (0..n).rev() {
        let mut v = atb[r2];
        for c2 in r2 + 1..n {
            v -= ata[r2][c2] * x[c2];
        }
        x[r2] = v / ata[r2][r2];
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return None;
    }
    Some(x.iter().map(|v| v / norm).collect())
}

/// Plain Nelder-Mead on R^m; returns (best value, best point, converged,
/// evaluations). The objective is scale-invariant, so no constraints.
fn nelder_mead(
    f: &(impl Fn(&[f64]) -> f64 + Sync),
    start: &[f64],
    max_iters: usize,
    f_tol: f64,
) -> (f64, Vec<f64>, bool, usize) {
    let dim = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        f(x)
    };
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
    let v0 = eval(start);
    simplex.push((v0, start.to_vec()));
    for i in 0..dim {
        let mut x = start.to_vec();
        x[i] += 0.35;
        let v = eval(&x);
        simplex.push((v, x));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if simplex[dim].0 - simplex[0].0 < f_tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(_, x)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst.1)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let fr = eval(&reflect);
        if fr < simplex[0].0 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst.1)
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            let fe = eval(&expand);
            simplex[dim] = if fe < fr { (fe, expand) } else { (fr, reflect) };
            continue;
        }
        if fr < simplex[dim - 1].0 {
            simplex[dim] = (fr, reflect);
            continue;
        }
        let contract: Vec<f64> = centroid
            .iter()
            .zip(&worst.1)
            .map(|(c, w)| c + rho * (w - c))
            .collect();
        let fc = eval(&contract);
        if fc < worst.0 {
            simplex[dim] = (fc, contract);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].1.clone();
        for entry in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best
                .iter()
                .zip(&entry.1)
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            let v = eval(&x);
            *entry = (v, x);
        }
    }
    simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (v, x) = simplex.into_iter().next().expect("non-empty simplex");
    (v, x, converged, evals)
}

// ---------------------------------------------------------------------------
// Separation constants
// ---------------------------------------------------------------------------

/// The explicit separation constants of the degree-detection lemma:
/// eps0(n, d, k) = (1/2) (2 C~)^{-(n+k-1)} with C~ = 2^{n+d-1} C_{n,d} and
/// C_{n,d} = 6 sigma_{n-1} / l_{n,d}.
#[derive(Clone, Debug, Serialize)]
pub struct EpsilonTable {
    pub n: usize,
    pub d: u32,
    pub c_nd: f64,
    pub c_tilde: f64,
    /// eps0 indexed by k = 1..=d.
    pub eps0: Vec<f64>,
    /// min over k (attained at k = d).
    pub eps1: f64,
    /// the k = 1 constant.
    pub eps2: f64,
}

pub fn epsilon_table(n: usize, d: u32) -> Result<EpsilonTable> {
    if d < 1 {
        return Err(Error::InvalidParameter("epsilon table needs d >= 1".into()));
    }
    let c_nd = 6.0 * sphere_area(n) / constants(n, d)?.l_nk;
    let c_tilde = c_nd * 2f64.powi(n as i32 + d as i32 - 1);
    let mut eps0 = Vec::with_capacity(d as usize);
    for k in 1..=d {
        let exponent = -((n as f64) + k as f64 - 1.0);
        let value = 0.5 * (2.0 * c_tilde).powf(exponent);
        if !(value > 0.0) {
            return Err(Error::Overflow(format!("eps0 underflows for n={n}, d={d}, k={k}")));
        }
        eps0.push(value);
    }
    let eps1 = eps0.iter().copied().fold(f64::INFINITY, f64::min);
    let eps2 = eps0[0];
    Ok(EpsilonTable { n, d, c_nd, c_tilde, eps0, eps1, eps2 })
}

/// Coefficient bound for homogeneous harmonics: every monomial coefficient
/// satisfies |c_alpha| <= (2^{n+2} n k)^k ||h||_inf(S^{n-1}).
pub fn coefficient_bound_check(p: &Poly) -> Result<bool> {
    if !p.is_homogeneous() {
        return Err(Error::InvalidParameter("coefficient bound applies to homogeneous p".into()));
    }
    let n = p.dim();
    let k = p.degree().ok_or(Error::ZeroPolynomial)?;
    let base = 2f64.powi(n as i32 + 2) * n as f64 * k as f64;
    if k as f64 * base.ln() > 700.0 {
        return Err(Error::Overflow("coefficient-bound factor exceeds f64 range".into()));
    }
    let rule = build_rule(n, 1)?;
    let sup = sup_norm_sphere(p, &rule)?.value;
    let bound = base.powi(k as i32) * sup;
    Ok(p.terms().all(|(_, c)| c.abs() <= bound * (1.0 + 1e-9)))
}

/// Scan d_r(omega_h, F_k) over radii and look for a witness radius where
/// the distance exceeds eps0: the degree-detection lemma guarantees one
/// whenever deg h != k.
#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub poly_hash: String,
    pub degree: u32,
    pub k: u32,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub converged: Vec<bool>,
    pub noise_floors: Vec<f64>,
    pub eps0: f64,
    /// First scanned radius with d_r >= eps0.
    pub witness_radius: Option<f64>,
    /// First radius with d_r above both eps0 and the numerical floor.
    pub witness_radius_above_floor: Option<f64>,
    /// True when the lemma's implication is upheld by the scan.
    pub consistent: bool,
    pub seed: u64,
}

pub fn separation_experiment(
    h: &Poly,
    k: u32,
    radii: &[f64],
    cfg: &ConeSearchConfig,
) -> Result<SeparationReport> {
    let m = PolyMeasure::new(h.clone(), 1.0)?;
    let d = m.degree();
    let eps = epsilon_table(h.dim(), d.max(k))?;
    let eps0 = 0.5 * (2.0 * eps.c_tilde).powf(-(h.dim() as f64 + k as f64 - 1.0));
    let mut values = Vec::with_capacity(radii.len());
    let mut converged = Vec::with_capacity(radii.len());
    let mut floors = Vec::with_capacity(radii.len());
    for &r in radii {
        let res = cone_distance(&SigmaMeasure::Poly(&m), k, r, cfg)?;
        values.push(res.value);
        converged.push(res.converged);
        floors.push(res.noise_floor.unwrap_or(0.0));
    }
    let witness_radius = radii
        .iter()
        .zip(&values)
        .find(|(_, &v)| v >= eps0)
        .map(|(&r, _)| r);
    let witness_radius_above_floor = radii
        .iter()
        .zip(values.iter().zip(&floors))
        .find(|(_, (&v, &fl))| v >= eps0 && v > 2.0 * fl)
        .map(|(&r, _)| r);
    let consistent = if d != k { witness_radius.is_some() } else { true };
    Ok(SeparationReport {
        poly_hash: format!("{:016x}", h.content_hash()),
        degree: d,
        k,
        radii: radii.to_vec(),
        values,
        converged,
        noise_floors: floors,
        eps0,
        witness_radius,
        witness_radius_above_floor,
        consistent,
        seed: cfg.seed,
    })
}
