//! The Lipschitz transport semi-metric as a linear program, solved through
//! its min-cost-flow dual.
//!
//! F_r(mu, nu) maximizes |sum_v c_v f_v| over node values f on the union
//! support, with c = mu - nu, subject to f >= 0, f(v) <= dist(v, B_r
//! complement) and the pairwise Lipschitz constraints |f(u) - f(v)| <=
//! |u - v| on a sparse neighbour graph. The dual is an uncapacitated
//! transshipment problem: supplies c_v, transport arcs along the graph,
//! disposal arcs v -> boundary at cost d_v and free creation arcs
//! boundary -> v. Successive shortest paths with potentials solve it
//! exactly; the optimal node potentials recover the maximizing f.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Lipschitz-constraint graph options: K nearest neighbours per node plus
/// seeded random long-range pairs, or the full O(N^2) constraint set.
#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    pub knn: usize,
    pub long_range_per_node: usize,
    pub full_graph: bool,
    pub seed: u64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { knn: 16, long_range_per_node: 4, full_graph: false, seed: 0x4b52 }
    }
}

/// The constraint graph for one support set and radius, reusable across
/// solves with different signed-mass vectors.
pub struct KrGraph {
    /// Indices of the retained input points (those strictly inside B_r).
    pub kept: Vec<usize>,
    /// Distance of each kept node to the complement of B_r.
    pub wall: Vec<f64>,
    arc_to: Vec<u32>,
    arc_cost: Vec<f64>,
    // CSR adjacency over arcs.
    head: Vec<u32>,
    next: Vec<u32>,
    node_count: usize,
}

const NO_ARC: u32 = u32::MAX;

impl KrGraph {
    /// Build the graph for points inside B_r. Points outside contribute
    /// nothing (f vanishes there) and are dropped.
    pub fn build(points: &[Vec<f64>], r: f64, opts: &LpOptions) -> Result<KrGraph> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        let mut kept = Vec::new();
        let mut wall = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < r {
                kept.push(i);
                wall.push(r - norm);
            }
        }
        let n = kept.len();
        let boundary = n;
        let mut graph = KrGraph {
            kept: kept.clone(),
            wall: wall.clone(),
            arc_to: Vec::new(),
            arc_cost: Vec::new(),
            head: vec![NO_ARC; n + 1],
            next: Vec::new(),
            node_count: n + 1,
        };
        let dist = |a: usize, b: usize| -> f64 {
            points[kept[a]]
                .iter()
                .zip(&points[kept[b]])
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let mut pairs: HashSet<(u32, u32)> = HashSet::new();
        let add_pair = |pairs: &mut HashSet<(u32, u32)>, a: usize, b: usize| {
            if a != b {
                let key = (a.min(b) as u32, a.max(b) as u32);
                pairs.insert(key);
            }
        };
        if opts.full_graph {
            for a in 0..n {
                for b in a + 1..n {
                    add_pair(&mut pairs, a, b);
                }
            }
        } else if n > 1 {
            let k = opts.knn.min(n - 1);
            let mut dists: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
            for a in 0..n {
                dists.clear();
                for b in 0..n {
                    if a != b {
                        dists.push((dist(a, b), b));
                    }
                }
                dists.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                for &(_, b) in dists.iter().take(k) {
                    add_pair(&mut pairs, a, b);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            for a in 0..n {
                for _ in 0..opts.long_range_per_node {
                    let b = rng.random_range(0..n);
                    add_pair(&mut pairs, a, b);
                }
            }
        }
        for &(a, b) in &pairs {
            let w = dist(a as usize, b as usize);
            graph.add_arc_pair(a as usize, b as usize, w, w);
        }
        for (v, &d) in wall.iter().enumerate() {
            // v -> boundary at cost d (f_v <= d); boundary -> v free (f_v >= 0).
            graph.add_arc_pair(v, boundary, d, 0.0);
        }
        Ok(graph)
    }

    /// Two directed arcs u->v (cost c_uv) and v->u (cost c_vu), each with an
    /// uncapacitated forward direction; residual traversal uses the pairing
    /// arc ^ 1 with negated cost.
    fn add_arc_pair(&mut self, u: usize, v: usize, c_uv: f64, c_vu: f64) {
        let a = self.arc_to.len() as u32;
        self.arc_to.push(v as u32);
        self.arc_cost.push(c_uv);
        self.next.push(self.head[u]);
        self.head[u] = a;
        self.arc_to.push(u as u32);
        self.arc_cost.push(c_vu);
        self.next.push(self.head[v]);
        self.head[v] = a + 1;
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.arc_to.len() / 2
    }

    /// Solve max sum c_v f_v over the feasible f for the signed masses on
    /// the kept nodes. Returns the optimum and the maximizing node values.
    pub fn solve(&self, signed_mass: &[f64]) -> Result<KrSolution> {
        let n = self.node_count - 1;
        if signed_mass.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: signed_mass.len() });
        }
        let boundary = n;
        let arcs = self.arc_to.len();
        let mut flow = vec![0.0f64; arcs];
        let mut excess = signed_mass.to_vec();
        excess.push(-signed_mass.iter().sum::<f64>());
        let mass_scale = signed_mass.iter().map(|c| c.abs()).sum::<f64>().max(1e-300);
        let tol = 1e-13 * mass_scale;
        let mut pi = vec![0.0f64; self.node_count];

        let mut dist = vec![f64::INFINITY; self.node_count];
        let mut parent = vec![NO_ARC; self.node_count];
        let mut settled = vec![false; self.node_count];
        let mut touched: Vec<u32> = Vec::new();

        let max_rounds = 24 * self.node_count + 256;
        for _round in 0..max_rounds {
            let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
            let mut any_source = false;
            for v in 0..self.node_count {
                if excess[v] > tol {
                    any_source = true;
                    dist[v] = 0.0;
                    parent[v] = NO_ARC;
                    touched.push(v as u32);
                    heap.push(HeapEntry { dist: 0.0, node: v as u32 });
                }
            }
            if !any_source {
                // Clean up and finish.
                for &v in &touched {
                    dist[v as usize] = f64::INFINITY;
                    settled[v as usize] = false;
                    parent[v as usize] = NO_ARC;
                }
                touched.clear();
                let value: f64 = (0..arcs)
                    .step_by(2)
                    .map(|a| {
                        // Net flow on the pair a / a+1 costs flow * cost each way.
                        flow[a] * self.arc_cost[a] + flow[a + 1] * self.arc_cost[a + 1]
                    })
                    .sum();
                let f: Vec<f64> = (0..n).map(|v| pi[boundary] - pi[v]).collect();
                return Ok(KrSolution { value, f });
            }
            // Multi-source Dijkstra on reduced costs, stopping at the first
            // settled node carrying deficit.
            let mut target: Option<u32> = None;
            while let Some(entry) = heap.pop() {
                let u = entry.node as usize;
                if settled[u] || entry.dist > dist[u] {
                    continue;
                }
                settled[u] = true;
                if excess[u] < -tol {
                    target = Some(entry.node);
                    break;
                }
                let mut a = self.head[u];
                while a != NO_ARC {
                    let ai = a as usize;
                    // Residual: forward arcs are uncapacitated; the reverse
                    // of a loaded arc is usable while flow remains.
                    let usable_forward = true;
                    let rev = ai ^ 1;
                    let v = self.arc_to[ai] as usize;
                    if usable_forward {
                        let rc = (self.arc_cost[ai] + pi[u] - pi[v]).max(0.0);
                        let nd = dist[u] + rc;
                        if nd + 1e-15 * (1.0 + nd.abs()) < dist[v] {
                            if dist[v].is_infinite() {
                                touched.push(v as u32);
                            }
                            dist[v] = nd;
                            parent[v] = a;
                            heap.push(HeapEntry { dist: nd, node: v as u32 });
                        }
                    }
                    // Arc a's pairing arc rev runs v -> u; treat u -> v via
                    // undoing flow on rev when it is loaded.
                    if flow[rev] > tol {
                        let rc = (-self.arc_cost[rev] + pi[u] - pi[v]).max(0.0);
                        let nd = dist[u] + rc;
                        if nd + 1e-15 * (1.0 + nd.abs()) < dist[v] {
                            if dist[v].is_infinite() {
                                touched.push(v as u32);
                            }
                            dist[v] = nd;
                            parent[v] = a | ARC_UNDO;
                            heap.push(HeapEntry { dist: nd, node: v as u32 });
                        }
                    }
                    a = self.next[ai];
                }
            }
            let Some(t) = target else {
                return Err(Error::Internal("transshipment sink unreachable; the boundary arcs should prevent this".into()));
            };
            let dist_t = dist[t as usize];
            // Potential update keeps all reduced costs non-negative; nodes
            // the search never reached advance by the full dist_t.
            for (v, p) in pi.iter_mut().enumerate() {
                *p += dist[v].min(dist_t);
            }
            // Trace the path, find the bottleneck. The origin of the step
            // recorded on node v is the tail of its parent arc, which is the
            // head of the pairing arc.
            let mut bottleneck = -excess[t as usize];
            let mut v = t as usize;
            while parent[v] != NO_ARC {
                let code = parent[v];
                let a = (code & !ARC_UNDO) as usize;
                if code & ARC_UNDO != 0 {
                    bottleneck = bottleneck.min(flow[a ^ 1]);
                }
                v = self.arc_to[a ^ 1] as usize;
            }
            bottleneck = bottleneck.min(excess[v]);
            // Augment.
            let mut v2 = t as usize;
            while parent[v2] != NO_ARC {
                let code = parent[v2];
                let a = (code & !ARC_UNDO) as usize;
                if code & ARC_UNDO != 0 {
                    flow[a ^ 1] -= bottleneck;
                } else {
                    flow[a] += bottleneck;
                }
                v2 = self.arc_to[(a ^ 1) as usize] as usize;
            }
            excess[v2] -= bottleneck;
            excess[t as usize] += bottleneck;
            // Clear the search state.
            for &w in &touched {
                dist[w as usize] = f64::INFINITY;
                settled[w as usize] = false;
                parent[w as usize] = NO_ARC;
            }
            touched.clear();
        }
        Err(Error::Internal("successive shortest paths failed to converge".into()))
    }
}

const ARC_UNDO: u32 = 1 << 31;

/// Optimal value and the maximizing node values f (on kept nodes).
pub struct KrSolution {
    pub value: f64,
    pub f: Vec<f64>,
}

struct HeapEntry {
    dist: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on dist, tie-break on node id for determinism.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}
