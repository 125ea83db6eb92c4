//! Weighted point clouds approximating polynomial harmonic measures inside
//! a truncation ball, and the pushforward (y - x)/r of clouds.
//!
//! Discretization casts rays from a seeded generic interior point (a center
//! strictly off the zero set): zero sets of homogeneous polynomials are
//! cones through the origin, so rays from the origin itself would never
//! cross them transversally. Along each ray the restriction of h is a
//! univariate polynomial whose sign-change roots are isolated by Sturm
//! sequences; each transversal crossing at distance s from the ray center
//! contributes the surface-element mass
//!   w * s^{n-1} * |grad h|^2 / |grad h . theta|,
//! the spherical-coordinate conversion of the density |grad h| dH^{n-1}.
//! The ray center scales with the truncation radius, so clouds of dilates
//! of a measure are dilates of each other up to the tangential-drop set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::PolyMeasure;
use crate::sphere::SphereRule;
use crate::univariate::{roots_in_interval, UniPoly};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec<f64>,
    pub mass: f64,
}

/// Cloud metadata carried into serialized sidecars.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CloudMeta {
    pub poly_hash: String,
    pub rule_level: u32,
    pub seed: u64,
    pub center: Vec<f64>,
    /// Mass fraction dropped at near-tangential crossings (capped estimate).
    pub dropped_mass_fraction: f64,
}

/// Weighted point cloud on {h = 0} inside the ball B_R.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParticleMeasure {
    dim: usize,
    particles: Vec<Particle>,
    truncation_radius: f64,
    pub meta: Option<CloudMeta>,
}

/// Relative threshold below which a crossing counts as tangential:
/// |grad h . theta| < threshold * |grad h|.
const TANGENTIAL_DROP: f64 = 1e-8;

impl ParticleMeasure {
    pub fn from_particles(dim: usize, particles: Vec<Particle>, truncation_radius: f64) -> Result<Self> {
        if !(truncation_radius > 0.0) {
            return Err(Error::InvalidParameter("truncation radius must be positive".into()));
        }
        for p in &particles {
            if p.position.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.position.len() });
            }
            if !(p.mass > 0.0) {
                return Err(Error::InvalidParameter("particle masses must be positive".into()));
            }
            let norm = p.position.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > truncation_radius * (1.0 + 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "particle at |x| = {norm} outside truncation ball of radius {truncation_radius}"
                )));
            }
        }
        Ok(ParticleMeasure { dim, particles, truncation_radius, meta: None })
    }

    pub fn empty(dim: usize, truncation_radius: f64) -> Self {
        ParticleMeasure { dim, particles: Vec::new(), truncation_radius, meta: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn particles(&self) -> impl Iterator<Item = &Particle> {
        self.particles.iter()
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).sum()
    }

    /// Scale all masses by a positive factor.
    pub fn scale_mass(&self, c: f64) -> Result<ParticleMeasure> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("mass scale must be positive, got {c}")));
        }
        let mut out = self.clone();
        for p in out.particles.iter_mut() {
            p.mass *= c;
        }
        Ok(out)
    }

    /// T_{x,r}: particle p maps to (p - x)/r, masses unchanged. The region
    /// of validity shrinks to (R - |x|)/r.
    pub fn pushforward(&self, x: &[f64], r: f64) -> Result<ParticleMeasure> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("dilation ratio must be positive, got {r}")));
        }
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let new_radius = (self.truncation_radius - xnorm) / r;
        if new_radius <= 0.0 {
            return Err(Error::RegionExceeded);
        }
        let particles = self
            .particles
            .iter()
            .filter_map(|p| {
                let pos: Vec<f64> = p.position.iter().zip(x).map(|(a, b)| (a - b) / r).collect();
                let norm = pos.iter().map(|v| v * v).sum::<f64>().sqrt();
                (norm <= new_radius * (1.0 + 1e-12)).then(|| Particle { position: pos, mass: p.mass })
            })
            .collect();
        Ok(ParticleMeasure {
            dim: self.dim,
            particles,
            truncation_radius: new_radius,
            meta: self.meta.clone(),
        })
    }

    /// Sum of masses inside the closed ball B(center, r), which must sit
    /// inside the validity region.
    pub fn ball_mass(&self, center: &[f64], r: f64) -> Result<f64> {
        if center.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: center.len() });
        }
        if r < 0.0 {
            return Err(Error::InvalidParameter("ball radius must be non-negative".into()));
        }
        let cnorm = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        if cnorm + r > self.truncation_radius * (1.0 + 1e-9) {
            return Err(Error::RegionExceeded);
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let r2 = r * r;
        Ok(self
            .particles
            .iter()
            .filter(|p| {
                let d2: f64 = p.position.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= r2 * (1.0 + 1e-12)
            })
            .map(|p| p.mass)
            .sum())
    }

    /// Merge particles on a voxel grid of the given spacing: one particle
    /// per occupied voxel at the mass-weighted centroid. Mass is conserved
    /// exactly; positions move by at most half a voxel diagonal, which is
    /// the natural transport resolution for Lipschitz test functions. Used
    /// to shrink dense clouds to linear-program-sized supports.
    pub fn consolidate(&self, spacing: f64) -> Result<ParticleMeasure> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidParameter("voxel spacing must be positive".into()));
        }
        let mut bins: std::collections::HashMap<Vec<i64>, (Vec<f64>, f64)> =
            std::collections::HashMap::new();
        for p in &self.particles {
            // Voxel centers at integer multiples of the spacing, so surfaces
            // through the coordinate planes sit mid-voxel instead of on a
            // boundary where sign jitter would split their mass.
            let key: Vec<i64> = p.position.iter().map(|x| (x / spacing + 0.5).floor() as i64).collect();
            let entry = bins.entry(key).or_insert_with(|| (vec![0.0; self.dim], 0.0));
            for (acc, x) in entry.0.iter_mut().zip(&p.position) {
                *acc += p.mass * x;
            }
            entry.1 += p.mass;
        }
        let mut particles: Vec<Particle> = bins
            .into_values()
            .map(|(weighted, mass)| Particle {
                position: weighted.into_iter().map(|v| v / mass).collect(),
                mass,
            })
            .collect();
        // Deterministic order independent of hash iteration.
        particles.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
        // Centroids can poke just past the truncation sphere; clamp inward.
        let r = self.truncation_radius;
        for p in particles.iter_mut() {
            let norm = p.position.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > r {
                for x in p.position.iter_mut() {
                    *x *= r / norm;
                }
            }
        }
        let mut out = ParticleMeasure::from_particles(self.dim, particles, r)?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Consolidate with a spacing chosen to bring the cloud under the given
    /// particle budget.
    pub fn consolidate_to(&self, max_points: usize) -> Result<ParticleMeasure> {
        if self.len() <= max_points {
            return Ok(self.clone());
        }
        let mut spacing = self.truncation_radius / 24.0;
        for _ in 0..24 {
            let c = self.consolidate(spacing)?;
            if c.len() <= max_points {
                return Ok(c);
            }
            spacing *= 1.35;
        }
        self.consolidate(spacing)
    }

    /// CSV rows x1..xn,mass (no header beyond the column names).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            out.push_str(&format!("x{}", i));
            out.push(',');
        }
        out.push_str("mass\n");
        for p in &self.particles {
            for v in &p.position {
                out.push_str(&format!("{v:.17e},"));
            }
            out.push_str(&format!("{:.17e}\n", p.mass));
        }
        out
    }

    /// JSON sidecar with truncation radius and provenance metadata.
    pub fn sidecar_json(&self) -> String {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            dim: usize,
            count: usize,
            truncation_radius: f64,
            total_mass: f64,
            meta: &'a Option<CloudMeta>,
        }
        serde_json::to_string_pretty(&Sidecar {
            dim: self.dim,
            count: self.particles.len(),
            truncation_radius: self.truncation_radius,
            total_mass: self.total_mass(),
            meta: &self.meta,
        })
        .expect("sidecar serialization cannot fail")
    }
}

/// Pick a ray center at a fixed fraction of R in a seeded direction chosen
/// to keep |h| large (the center must avoid the zero set).
fn pick_center(m: &PolyMeasure, radius: f64, seed: u64) -> Vec<f64> {
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC3A7_5EED);
    let mut best: (f64, Vec<f64>) = (-1.0, vec![0.0; n]);
    // Scale-normalized objective: |h(c)| relative to the coefficient mass
    // at |c|, so the choice is invariant under dilations of the measure.
    let part_scale: f64 = {
        let r = 0.55 * radius;
        m.decomp()
            .parts()
            .map(|(deg, part)| part.coeff_scale() * r.powi(deg as i32))
            .sum::<f64>()
            .max(1e-300)
    };
    for _ in 0..64 {
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        let c: Vec<f64> = dir.iter().map(|x| 0.55 * radius * x / norm).collect();
        let score = m.poly().evaluate(&c).expect("dims match").abs() / part_scale;
        if score > best.0 {
            best = (score, c);
        }
    }
    best.1
}

/// A transversality-annotated crossing along one ray.
struct Hit {
    s: f64,
    position: Vec<f64>,
    grad_norm2: f64,
    radial: f64,
    /// |g''(s)| along the ray, for the fold-scale cap.
    curvature: f64,
}


struct Caster<'a> {
    m: &'a PolyMeasure,
    center: Vec<f64>,
    center_norm2: f64,
    radius: f64,
    roots_per_ray_max: usize,
    particles: Vec<Particle>,
    dropped_mass: f64,
}

/// Silhouette handling: the surface-element factor 1/|cos gamma| = 1/kappa
/// is an integrable singularity whose boundary layer has angular width
/// ~ kappa^2. Cells are split while wider than that layer, and while a
/// grazing miss passes within the width the cell subtends. Point values of
/// 1/kappa inside the layer are capped at the fold-model cell average, which
/// keeps every cell's contribution bounded independently of where the
/// sample lands relative to the fold.
const KAPPA_CAP: f64 = 0.35;
const SPLIT_DEPTH_MAX: u32 = 5;

impl Caster<'_> {
    /// Ray crossings and a should-split verdict for the given direction.
    fn cast(&self, dir: &[f64], cell_diam: f64) -> Result<(Vec<Hit>, bool)> {
        let b = self.center.iter().zip(dir).map(|(c, d)| c * d).sum::<f64>();
        let disc = b * b + self.radius * self.radius - self.center_norm2;
        if disc <= 0.0 {
            return Ok((Vec::new(), false));
        }
        let s_exit = -b + disc.sqrt();
        if s_exit <= 0.0 {
            return Ok((Vec::new(), false));
        }
        // Widened isolation window: roots just beyond the ball exit must
        // still trigger rim subdivision, or the rim bias is one-sided.
        let s_wide = s_exit * (1.0 + 20.0 * cell_diam);
        let coeffs = self.m.poly().ray_coefficients(&self.center, dir)?;
        let g = UniPoly::new(coeffs);
        let roots = roots_in_interval(&g, 0.0, s_wide);
        if roots.iter().filter(|r| r.t <= s_exit).count() > self.roots_per_ray_max {
            return Err(Error::Internal(format!(
                "ray produced {} roots, above the stated cap {}",
                roots.len(),
                self.roots_per_ray_max
            )));
        }
        let mut hits = Vec::with_capacity(roots.len());
        let mut split = false;
        let g2 = g.derivative().derivative();
        for root in &roots {
            let s = root.t;
            let position: Vec<f64> = self.center.iter().zip(dir).map(|(c, d)| c + s * d).collect();
            let grad = self.m.poly().gradient_at(&position)?;
            let grad_norm2: f64 = grad.iter().map(|x| x * x).sum();
            let grad_norm = grad_norm2.sqrt().max(1e-300);
            let kappa = root.derivative.abs() / grad_norm;
            let curvature = g2.eval(s).abs();
            // Truncation rim: a crossing near the ball exit (on either side)
            // means the indicator jump cuts through the cell. The root moves
            // by ~ s/kappa per unit angle, the exit point by ~ s_exit.
            let rim_slope = (1.0 + s / (kappa.max(0.05) * s_exit)).min(20.0);
            if (s_exit - s).abs() <= cell_diam * s_exit * rim_slope {
                split = true;
            }
            if s > s_exit {
                continue;
            }
            // Silhouette layer: resolve cells wider than the kappa^2 layer.
            if kappa < KAPPA_CAP && cell_diam > 2.0 * kappa * kappa {
                split = true;
            }
            // Scale-uniform relative resolution: a hit at distance |P| from
            // the origin should be resolved by cells subtending a fixed
            // fraction of that distance, so centered-ball masses carry the
            // same relative accuracy at every radius (conical zero sets
            // repeat their geometry at all scales).
            let hit_dist = position.iter().map(|x| x * x).sum::<f64>().sqrt();
            if cell_diam * s > 0.12 * hit_dist.max(self.radius / 16.0) {
                split = true;
            }
            if root.sign_change {
                hits.push(Hit {
                    s,
                    position,
                    grad_norm2,
                    radial: root.derivative.abs(),
                    curvature,
                });
            }
        }
        // A grazing miss: a critical point of g passing within the spatial
        // width the cell subtends at that range means sub-rays may hit.
        if !split && cell_diam > 0.0 {
            let dg = g.derivative();
            for crit in roots_in_interval(&dg, 0.0, s_exit) {
                let sc = crit.t;
                if sc <= 0.0 {
                    continue;
                }
                let pc: Vec<f64> = self.center.iter().zip(dir).map(|(c, d)| c + sc * d).collect();
                let grad = self.m.poly().gradient_at(&pc)?;
                let gn = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
                if gn > 0.0 && g.eval(sc).abs() <= gn * sc * cell_diam {
                    split = true;
                    break;
                }
            }
        }
        Ok((hits, split))
    }

    fn emit(&mut self, hits: Vec<Hit>, weight: f64, cell_diam: f64) {
        let n = self.center.len();
        for hit in hits {
            let w = weight * hit.s.powi(n as i32 - 1) * self.m.scale();
            let grad_norm = hit.grad_norm2.sqrt();
            if hit.radial < TANGENTIAL_DROP * grad_norm || grad_norm == 0.0 {
                // Tangential crossing: the mass formula blows up; drop the
                // particle and log a capped estimate of what was lost.
                self.dropped_mass += w * hit.grad_norm2 / (TANGENTIAL_DROP * grad_norm).max(1e-300);
                continue;
            }
            // Fold model: kappa at angular distance delta from the fold is
            // sqrt(g'' s delta / |grad h|); the cell average of 1/kappa over
            // the straddling cell equals 1/kappa at delta ~ cell/4. Cone
            // vertices are not folds (kappa varies linearly, g'' -> 0), so a
            // linear-in-cell floor bounds those spikes as well.
            let fold_kappa =
                (0.25 * hit.curvature * hit.s * cell_diam / grad_norm.max(1e-300)).sqrt();
            let cap_kappa = fold_kappa.max(0.5 * cell_diam);
            let radial_eff = hit.radial.max(cap_kappa * grad_norm);
            let mass = w * hit.grad_norm2 / radial_eff;
            self.particles.push(Particle { position: hit.position, mass });
        }
    }

    /// Sample a (phi, t) cell; subdivide 3x3 near the silhouette, splitting
    /// the weight evenly across an exact partition of the cell.
    #[allow(clippy::too_many_arguments)]
    fn cast_cell(
        &mut self,
        phi: f64,
        dphi: f64,
        t_sample: f64,
        t_lo: f64,
        t_hi: f64,
        weight: f64,
        depth: u32,
    ) -> Result<()> {
        let t = t_sample.clamp(-1.0, 1.0);
        let s = (1.0 - t * t).max(0.0).sqrt();
        let dir = [s * phi.cos(), s * phi.sin(), t];
        let cell_diam = dphi.max(t_hi - t_lo);
        let (hits, split) = self.cast(&dir, cell_diam)?;
        if split && depth < SPLIT_DEPTH_MAX {
            let w9 = weight / 9.0;
            let len3 = (t_hi - t_lo) / 3.0;
            for i in 0..3 {
                let cphi = phi + dphi * (i as f64 - 1.0) / 3.0;
                for j in 0..3 {
                    let clo = t_lo + j as f64 * len3;
                    let chi = clo + len3;
                    self.cast_cell(cphi, dphi / 3.0, 0.5 * (clo + chi), clo, chi, w9, depth + 1)?;
                }
            }
            return Ok(());
        }
        self.emit(hits, weight, cell_diam);
        Ok(())
    }
}

/// Fast deterministic discretization for homogeneous measures on R^3: the
/// zero set is the cone over the spherical nodal curve, so the cloud is a
/// set of radial Gauss stacks over arc-length curve samples. The measure
/// element is |grad h(u)| rho^k drho dl(u) for degree k.
pub fn discretize_homogeneous(
    m: &PolyMeasure,
    radius: f64,
    slices: usize,
    radial_nodes: usize,
) -> Result<ParticleMeasure> {
    if m.dim() != 3 {
        return Err(Error::InvalidParameter("cone discretization is for n = 3".into()));
    }
    if !m.is_homogeneous() {
        return Err(Error::InvalidParameter("cone discretization needs a homogeneous polynomial".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("truncation radius must be positive".into()));
    }
    let k = m.degree() as i32;
    let curve = crate::sphere::nodal_curve_samples(m.poly(), slices);
    let (rho_nodes, rho_weights) = crate::sphere::gauss_nodes_unit(radial_nodes);
    let mut particles = Vec::with_capacity(curve.len() * radial_nodes);
    for (u, wl) in curve {
        let grad = m.poly().gradient_at(&u)?;
        let grad_norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        if grad_norm == 0.0 {
            continue;
        }
        for (x, w) in rho_nodes.iter().zip(rho_weights) {
            // Map [-1, 1] Gauss nodes onto (0, radius).
            let rho = 0.5 * radius * (x + 1.0);
            let wr = 0.5 * radius * w;
            let mass = m.scale() * wl * grad_norm * wr * rho.powi(k);
            if mass > 0.0 {
                particles.push(Particle {
                    position: u.iter().map(|c| c * rho).collect(),
                    mass,
                });
            }
        }
    }
    let mut cloud = ParticleMeasure::from_particles(3, particles, radius)?;
    cloud.meta = Some(CloudMeta {
        poly_hash: format!("{:016x}", m.poly().content_hash()),
        rule_level: slices as u32,
        seed: 0,
        center: vec![0.0; 3],
        dropped_mass_fraction: 0.0,
    });
    Ok(cloud)
}

/// Discretize c * omega_h inside B_R as a particle cloud, casting one ray
/// per quadrature node of `rule` from a seeded interior center. Product
/// rules on S^2 refine node cells adaptively near ray-tangency silhouettes.
pub fn discretize(
    m: &PolyMeasure,
    radius: f64,
    rule: &SphereRule,
    roots_per_ray_max: usize,
    seed: u64,
) -> Result<ParticleMeasure> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("truncation radius must be positive".into()));
    }
    if rule.dim != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: rule.dim });
    }
    let n = m.dim();
    let center = pick_center(m, radius, seed);
    let mut caster = Caster {
        m,
        center_norm2: center.iter().map(|x| x * x).sum(),
        center,
        radius,
        roots_per_ray_max,
        particles: Vec::new(),
        dropped_mass: 0.0,
    };
    match (&rule.grid, n) {
        (Some(grid), 3) => {
            let dphi = 2.0 * std::f64::consts::PI / grid.azimuth as f64;
            // True cell partition: boundaries at midpoints between nodes.
            let nt = grid.t_nodes.len();
            for (idx, (t, wt)) in grid.t_nodes.iter().zip(&grid.t_weights).enumerate() {
                let lo = if idx == 0 { -1.0 } else { 0.5 * (grid.t_nodes[idx - 1] + t) };
                let hi = if idx + 1 == nt { 1.0 } else { 0.5 * (t + grid.t_nodes[idx + 1]) };
                for i in 0..grid.azimuth {
                    let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / grid.azimuth as f64;
                    caster.cast_cell(phi, dphi, *t, lo, hi, wt * dphi, 0)?;
                }
            }
        }
        _ => {
            for (node, &w) in rule.nodes.iter().zip(&rule.weights) {
                let (hits, _) = caster.cast(node, 0.0)?;
                caster.emit(hits, w, 0.0);
            }
        }
    }
    let kept: f64 = caster.particles.iter().map(|p| p.mass).sum();
    let dropped_mass = caster.dropped_mass;
    let center = caster.center.clone();
    let mut cloud = ParticleMeasure::from_particles(n, caster.particles, radius)?;
    cloud.meta = Some(CloudMeta {
        poly_hash: format!("{:016x}", m.poly().content_hash()),
        rule_level: rule.level,
        seed,
        center,
        dropped_mass_fraction: if kept + dropped_mass > 0.0 {
            dropped_mass / (kept + dropped_mass)
        } else {
            0.0
        },
    });
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{ball_measure, PolyMeasure};
    use crate::poly::{lewy_polynomial, Poly};
    use crate::sphere::build_rule;

    const PI: f64 = std::f64::consts::PI;

    fn flat() -> PolyMeasure {
        PolyMeasure::new(Poly::parse("x", 3).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn flat_cloud_total_mass_is_disk_area() {
        let rule = build_rule(3, 1).unwrap();
        let cloud = discretize(&flat(), 1.0, &rule, 8, 7).unwrap();
        let mass = cloud.total_mass();
        assert!((mass - PI).abs() <= 0.02 * PI, "{mass} vs {PI}");
        let meta = cloud.meta.as_ref().unwrap();
        assert!(meta.dropped_mass_fraction < 0.02, "{}", meta.dropped_mass_fraction);
    }

    #[test]
    fn flat_cloud_cumulative_mass_at_half_radius() {
        let rule = build_rule(3, 1).unwrap();
        let cloud = discretize(&flat(), 1.0, &rule, 8, 7).unwrap();
        let inner = cloud.ball_mass(&[0.0, 0.0, 0.0], 0.5).unwrap();
        assert!((inner - PI / 4.0).abs() <= 0.02 * PI / 4.0, "{inner}");
    }

    #[test]
    fn cloud_mass_cross_validates_with_quadrature() {
        let rule = build_rule(3, 2).unwrap();
        for src in ["x*y", "x*y + x"] {
            let m = PolyMeasure::new(Poly::parse(src, 3).unwrap(), 1.0).unwrap();
            let cloud = discretize(&m, 1.0, &rule, 8, 3).unwrap();
            let quad = ball_measure(&m, 1.0, &build_rule(3, 0).unwrap()).unwrap();
            let mass = cloud.total_mass();
            assert!(
                (mass - quad).abs() <= 0.02 * quad,
                "{src}: cloud {mass} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn lewy_cloud_mass_cross_validates() {
        let rule = build_rule(3, 2).unwrap();
        let m = PolyMeasure::new(lewy_polynomial(), 1.0).unwrap();
        let cloud = discretize(&m, 1.0, &rule, 8, 3).unwrap();
        let quad = ball_measure(&m, 1.0, &build_rule(3, 0).unwrap()).unwrap();
        let mass = cloud.total_mass();
        assert!((mass - quad).abs() <= 0.02 * quad, "cloud {mass} vs {quad}");
    }

    #[test]
    fn rays_missing_the_zero_set_contribute_nothing() {
        // h = x y + x = x (y + 1): inside B_{1/2} only the plane {x = 0}
        // intersects; every particle must sit on it.
        let rule = build_rule(3, 1).unwrap();
        let m = PolyMeasure::new(Poly::parse("x*y + x", 3).unwrap(), 1.0).unwrap();
        let cloud = discretize(&m, 0.5, &rule, 8, 5).unwrap();
        assert!(!cloud.is_empty());
        for p in cloud.particles() {
            assert!(p.position[0].abs() < 1e-10, "{:?}", p.position);
        }
    }

    #[test]
    fn pushforward_identity_and_ball_mass_identity() {
        let rule = build_rule(3, 1).unwrap();
        let cloud = discretize(&flat(), 1.0, &rule, 8, 7).unwrap();
        let same = cloud.pushforward(&[0.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(same.len(), cloud.len());
        assert!((same.total_mass() - cloud.total_mass()).abs() < 1e-12);

        // T_{0,s}[mu](B_1) = mu(B_s).
        let s = 0.5;
        let pushed = cloud.pushforward(&[0.0, 0.0, 0.0], s).unwrap();
        let lhs = pushed.ball_mass(&[0.0, 0.0, 0.0], 1.0).unwrap();
        let rhs = cloud.ball_mass(&[0.0, 0.0, 0.0], s).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), "{lhs} vs {rhs}");
        assert!((lhs - PI / 4.0).abs() <= 0.02 * PI / 4.0);
    }

    #[test]
    fn pushforward_composition_exact_on_coordinates() {
        let rule = build_rule(3, 1).unwrap();
        let cloud = discretize(&flat(), 1.0, &rule, 8, 7).unwrap();
        let a = cloud
            .pushforward(&[0.0, 0.0, 0.0], 0.5)
            .unwrap()
            .pushforward(&[0.0, 0.0, 0.0], 0.4)
            .unwrap();
        let b = cloud.pushforward(&[0.0, 0.0, 0.0], 0.2).unwrap();
        assert_eq!(a.len(), b.len());
        for (pa, pb) in a.particles().zip(b.particles()) {
            for (x, y) in pa.position.iter().zip(&pb.position) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
            assert_eq!(pa.mass, pb.mass);
        }
    }

    #[test]
    fn pushforward_outside_region_errors() {
        let rule = build_rule(3, 1).unwrap();
        let cloud = discretize(&flat(), 1.0, &rule, 8, 7).unwrap();
        assert!(matches!(
            cloud.pushforward(&[2.0, 0.0, 0.0], 1.0),
            Err(Error::RegionExceeded)
        ));
    }

    #[test]
    fn ball_mass_edge_cases() {
        let rule = build_rule(3, 1).unwrap();
        let cloud = discretize(&flat(), 1.0, &rule, 8, 7).unwrap();
        assert_eq!(cloud.ball_mass(&[0.1, 0.0, 0.0], 0.0).unwrap(), 0.0);
        assert!(matches!(
            cloud.ball_mass(&[0.9, 0.0, 0.0], 0.5),
            Err(Error::RegionExceeded)
        ));
    }

    #[test]
    fn in_plane_off_center_disk_mass() {
        let rule = build_rule(3, 2).unwrap();
        let cloud = discretize(&flat(), 1.0, &rule, 8, 7).unwrap();
        let v = cloud.ball_mass(&[0.0, 0.5, 0.0], 0.25).unwrap();
        let want = PI / 16.0;
        assert!((v - want).abs() <= 0.03 * want, "{v} vs {want}");
    }

    #[test]
    fn refinement_convergence_of_ball_mass() {
        let m = PolyMeasure::new(lewy_polynomial(), 1.0).unwrap();
        let coarse = discretize(&m, 1.0, &build_rule(3, 2).unwrap(), 8, 9).unwrap();
        let fine = discretize(&m, 1.0, &build_rule(3, 3).unwrap(), 8, 9).unwrap();
        for r in [0.125, 0.25, 0.5] {
            let a = coarse.ball_mass(&[0.0, 0.0, 0.0], r).unwrap();
            let b = fine.ball_mass(&[0.0, 0.0, 0.0], r).unwrap();
            assert!((a - b).abs() <= 0.01 * b.max(1e-12), "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn consolidation_conserves_mass_and_shrinks() {
        let m = PolyMeasure::new(lewy_polynomial(), 1.0).unwrap();
        let cloud = discretize(&m, 1.0, &build_rule(3, 1).unwrap(), 8, 9).unwrap();
        let small = cloud.consolidate_to(1500).unwrap();
        assert!(small.len() <= 1500, "{}", small.len());
        assert!((small.total_mass() - cloud.total_mass()).abs() <= 1e-9 * cloud.total_mass());
        for p in small.particles() {
            let norm: f64 = p.position.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn csv_and_sidecar_shapes() {
        let rule = build_rule(3, 0).unwrap();
        let cloud = discretize(&flat(), 1.0, &rule, 8, 7).unwrap();
        let csv = cloud.to_csv();
        assert!(csv.starts_with("x0,x1,x2,mass\n"));
        assert_eq!(csv.lines().count(), cloud.len() + 1);
        let sidecar = cloud.sidecar_json();
        let parsed: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
        assert_eq!(parsed["dim"], 3);
        assert!(parsed["meta"]["dropped_mass_fraction"].as_f64().unwrap() >= 0.0);
    }
}
