//! Blow-up sequences of polynomial harmonic measures, rescaled zero sets,
//! Hausdorff distances between samples, and nodal-component counting on S^2.
//!
//! The blow-up of a measure at the origin along radius r is the pushforward
//! T_{0,r} of its restriction to B_r, normalized by the ball mass; for a
//! measure with bottom homogeneous part of degree j the sequence converges
//! to the measure of that part. Rescaled zero sets { y : h(r y) = 0 }
//! converge to the bottom part's zero set the same way.

use serde::Serialize;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::measure::{ball_measure, PolyMeasure};
use crate::particle::{discretize, ParticleMeasure};
use crate::poly::Poly;
use crate::sphere::{build_rule, SphereRule};

/// Point sample of a zero set inside a window ball.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroSetSample {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub window: f64,
    /// Resolution tag (rule level of the ray grid).
    pub generation: u32,
}

impl ZeroSetSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// nu_i = T_{0, r_i}[omega restricted to B_{r_i}] / omega(B_{r_i}), one per
/// radius. Radii must be positive and decreasing. Normalization uses the
/// quadrature ball mass, not the particle totals, so the discretization and
/// normalization errors stay decoupled.
pub fn blowup_sequence(
    m: &PolyMeasure,
    radii: &[f64],
    rule: &SphereRule,
    seed: u64,
) -> Result<Vec<ParticleMeasure>> {
    if radii.is_empty() {
        return Err(Error::EmptySample);
    }
    for pair in radii.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::InvalidParameter("blow-up radii must be strictly decreasing".into()));
        }
    }
    if !(radii[radii.len() - 1] > 0.0) {
        return Err(Error::InvalidParameter("blow-up radii must be positive".into()));
    }
    let norm_rule = build_rule(m.dim(), 0)?;
    let cap = 2 + m.degree() as usize;
    radii
        .iter()
        .map(|&r| {
            let cloud = discretize(m, r, rule, cap, seed)?;
            let mass = ball_measure(m, r, &norm_rule)?;
            if !(mass > 0.0) {
                return Err(Error::Internal(format!("vanishing ball mass at r = {r:.3e}")));
            }
            cloud.pushforward(&vec![0.0; m.dim()], r)?.scale_mass(1.0 / mass)
        })
        .collect()
}

/// Sample of (1/r) h^{-1}(0) inside B_R, via ray casting on y -> h(r y).
/// Samples are capped at a few thousand points by deterministic striding
/// (every k-th crossing), so the points stay exactly on the zero set.
pub fn zero_set_blowup(h: &Poly, r: f64, window: f64, rule_level: u32, seed: u64) -> Result<ZeroSetSample> {
    if !(r > 0.0) || !(window > 0.0) {
        return Err(Error::InvalidParameter("scale and window must be positive".into()));
    }
    const MAX_POINTS: usize = 4000;
    let scaled = h.scale_coords(r);
    let m = PolyMeasure::new(scaled, 1.0)?;
    let rule = build_rule(h.dim(), rule_level)?;
    let cloud = discretize(&m, window, &rule, 2 + m.degree() as usize, seed)?;
    // Spatially uniform thinning: one representative per voxel, keeping the
    // sampled point nearest the voxel center so samples stay exactly on the
    // zero set.
    let mut spacing = window / 40.0;
    let points = loop {
        let mut best: HashMap<Vec<i64>, (f64, Vec<f64>)> = HashMap::new();
        for p in cloud.particles() {
            let key: Vec<i64> =
                p.position.iter().map(|x| (x / spacing + 0.5).floor() as i64).collect();
            let center: Vec<f64> = key.iter().map(|&k| k as f64 * spacing).collect();
            let d2: f64 = p
                .position
                .iter()
                .zip(&center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum();
            match best.get(&key) {
                Some((bd, _)) if *bd <= d2 => {}
                _ => {
                    best.insert(key, (d2, p.position.clone()));
                }
            }
        }
        if best.len() <= MAX_POINTS {
            let mut pts: Vec<Vec<f64>> = best.into_values().map(|(_, p)| p).collect();
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            break pts;
        }
        spacing *= 1.3;
    };
    Ok(ZeroSetSample { dim: h.dim(), points, window, generation: rule_level })
}

/// Symmetric Hausdorff distance between two finite samples: the max over
/// both directed nearest-neighbour sup distances.
pub fn hausdorff_distance(a: &ZeroSetSample, b: &ZeroSetSample) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, got: b.dim });
    }
    let directed = |from: &[Vec<f64>], to: &[Vec<f64>]| -> f64 {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| {
                        p.iter()
                            .zip(q)
                            .map(|(x, y)| (x - y) * (x - y))
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .fold(0.0f64, f64::max)
    };
    Ok(directed(&a.points, &b.points).max(directed(&b.points, &a.points)))
}

// ---------------------------------------------------------------------------
// Nodal components on S^2: icosahedral subdivision + union-find.
// ---------------------------------------------------------------------------

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            // Path halving.
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra as usize] = rb;
        }
    }
}

struct IcoSphere {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[u32; 3]>,
}

fn icosahedron() -> IcoSphere {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let vertices: Vec<[f64; 3]> = raw
        .iter()
        .map(|v| {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        })
        .collect();
    let faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    IcoSphere { vertices, faces }
}

fn subdivide(sphere: &IcoSphere) -> IcoSphere {
    let mut vertices = sphere.vertices.clone();
    let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
    let mut faces = Vec::with_capacity(sphere.faces.len() * 4);
    let mid = |a: u32, b: u32, vertices: &mut Vec<[f64; 3]>, midpoint: &mut HashMap<(u32, u32), u32>| -> u32 {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = midpoint.get(&key) {
            return m;
        }
        let va = vertices[a as usize];
        let vb = vertices[b as usize];
        let mut v = [va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        v = [v[0] / n, v[1] / n, v[2] / n];
        vertices.push(v);
        let idx = vertices.len() as u32 - 1;
        midpoint.insert(key, idx);
        idx
    };
    for &[a, b, c] in &sphere.faces {
        let ab = mid(a, b, &mut vertices, &mut midpoint);
        let bc = mid(b, c, &mut vertices, &mut midpoint);
        let ca = mid(c, a, &mut vertices, &mut midpoint);
        faces.push([a, ab, ca]);
        faces.push([b, bc, ab]);
        faces.push([c, ca, bc]);
        faces.push([ab, bc, ca]);
    }
    IcoSphere { vertices, faces }
}

/// Components of S^2 minus the nodal set at one subdivision level; None
/// when too many cells are sign-ambiguous.
fn count_components(h: &Poly, sphere: &IcoSphere) -> Option<usize> {
    let nf = sphere.faces.len();
    // Face signs from the centroid; cells with |h| below 1e-9 of the local
    // scale are treated as boundary and excluded.
    let mut sign = vec![0i8; nf];
    let mut boundary_cells = 0usize;
    for (i, face) in sphere.faces.iter().enumerate() {
        let mut centroid = [0.0f64; 3];
        let mut local_scale = 0.0f64;
        for &v in face {
            let vert = sphere.vertices[v as usize];
            for (c, x) in centroid.iter_mut().zip(&vert) {
                *c += x;
            }
            local_scale = local_scale.max(h.evaluate(&vert).expect("dim 3").abs());
        }
        let n = (centroid[0] * centroid[0] + centroid[1] * centroid[1] + centroid[2] * centroid[2]).sqrt();
        let centroid = [centroid[0] / n, centroid[1] / n, centroid[2] / n];
        let val = h.evaluate(&centroid).expect("dim 3");
        local_scale = local_scale.max(val.abs());
        if val.abs() <= 1e-9 * local_scale.max(1e-300) {
            sign[i] = 0;
            boundary_cells += 1;
        } else {
            sign[i] = if val > 0.0 { 1 } else { -1 };
        }
    }
    if boundary_cells * 10 > nf {
        return None;
    }
    // Union faces sharing an edge with equal sign.
    let mut edge_owner: HashMap<(u32, u32), u32> = HashMap::new();
    let mut uf = UnionFind::new(nf);
    for (i, face) in sphere.faces.iter().enumerate() {
        for e in 0..3 {
            let a = face[e];
            let b = face[(e + 1) % 3];
            let key = (a.min(b), a.max(b));
            match edge_owner.get(&key) {
                None => {
                    edge_owner.insert(key, i as u32);
                }
                Some(&j) => {
                    if sign[i] != 0 && sign[i] == sign[j as usize] {
                        uf.union(i as u32, j);
                    }
                }
            }
        }
    }
    let mut roots = std::collections::HashSet::new();
    for i in 0..nf {
        if sign[i] != 0 {
            roots.insert(uf.find(i as u32));
        }
    }
    Some(roots.len())
}

/// Number of connected components of S^2 minus the nodal set of a
/// homogeneous polynomial, by sign labeling on an icosahedral grid with
/// refinement until the count is stable across two consecutive levels.
pub fn nodal_components_s2(h: &Poly, max_level: u32) -> Result<usize> {
    if h.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: h.dim() });
    }
    if !h.is_homogeneous() {
        return Err(Error::InvalidParameter("nodal counting needs a homogeneous polynomial".into()));
    }
    let mut sphere = icosahedron();
    let mut previous: Option<usize> = None;
    for level in 0..=max_level {
        if level > 0 {
            sphere = subdivide(&sphere);
        }
        if level < 2 {
            continue; // too coarse to trust
        }
        if let Some(count) = count_components(h, &sphere) {
            if previous == Some(count) {
                return Ok(count);
            }
            previous = Some(count);
        } else {
            previous = None;
        }
    }
    Err(Error::Inconclusive(format!(
        "nodal count did not stabilize by subdivision level {max_level}"
    )))
}
