//! Independent oracle for the transport LP: a dense tableau simplex solving
//! the primal maximize c.f subject to f >= 0, f_v <= wall_v and the full
//! pairwise Lipschitz constraint set. The flow solver must reproduce its
//! optimum on small instances.

use harmlab::metric::{KrGraph, LpOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Maximize c.x subject to A x <= b, x >= 0 (all b >= 0), by the standard
/// tableau simplex with Bland's rule. Small dense instances only.
fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let n = c.len();
    let m = a.len();
    // Tableau: rows 0..m constraints, last row objective; columns
    // 0..n structural, n..n+m slacks, last column RHS.
    let cols = n + m + 1;
    let mut t = vec![vec![0.0f64; cols]; m + 1];
    for (i, row) in a.iter().enumerate() {
        t[i][..n].copy_from_slice(row);
        t[i][n + i] = 1.0;
        t[i][cols - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    for _ in 0..20000 {
        // Bland: entering = smallest index with negative reduced cost.
        let Some(enter) = (0..cols - 1).find(|&j| t[m][j] < -1e-11) else {
            return t[m][cols - 1];
        };
        // Ratio test with Bland tie-breaking on basis index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for (i, row) in t[..m].iter().enumerate() {
            if row[enter] > 1e-11 {
                let ratio = row[cols - 1] / row[enter];
                if ratio < best - 1e-12
                    || (ratio < best + 1e-12
                        && leave.is_some_and(|l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            return f64::INFINITY; // unbounded; cannot happen here
        };
        // Pivot.
        let piv = t[leave][enter];
        for v in t[leave].iter_mut() {
            *v /= piv;
        }
        for i in 0..=m {
            if i != leave {
                let factor = t[i][enter];
                if factor != 0.0 {
                    for j in 0..cols {
                        t[i][j] -= factor * t[leave][j];
                    }
                }
            }
        }
        basis[leave] = enter;
    }
    panic!("simplex did not terminate");
}

/// Oracle value of F_r(mu, nu) on a small point set: both signs of the
/// objective over the full Lipschitz polytope.
fn oracle_f_r(points: &[Vec<f64>], signed: &[f64], r: f64) -> f64 {
    let kept: Vec<usize> = (0..points.len())
        .filter(|&i| points[i].iter().map(|x| x * x).sum::<f64>().sqrt() < r)
        .collect();
    let n = kept.len();
    if n == 0 {
        return 0.0;
    }
    let wall: Vec<f64> = kept
        .iter()
        .map(|&i| r - points[i].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for v in 0..n {
        let mut row = vec![0.0; n];
        row[v] = 1.0;
        a.push(row);
        b.push(wall[v]);
    }
    for u in 0..n {
        for v in 0..n {
            if u != v {
                let w = points[kept[u]]
                    .iter()
                    .zip(&points[kept[v]])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let mut row = vec![0.0; n];
                row[u] = 1.0;
                row[v] = -1.0;
                a.push(row);
                b.push(w);
            }
        }
    }
    let c: Vec<f64> = kept.iter().map(|&i| signed[i]).collect();
    let neg: Vec<f64> = c.iter().map(|x| -x).collect();
    simplex_max(&c, &a, &b).max(simplex_max(&neg, &a, &b))
}

#[test]
fn flow_matches_dense_simplex_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..60 {
        let n = rng.random_range(4..=24);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-1.2..1.2)).collect())
            .collect();
        let signed: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let r = rng.random_range(0.6..1.4);
        let oracle = oracle_f_r(&points, &signed, r);

        let graph = KrGraph::build(
            &points,
            r,
            &LpOptions { full_graph: true, ..Default::default() },
        )
        .unwrap();
        let kept_signed: Vec<f64> = graph.kept.iter().map(|&i| signed[i]).collect();
        let pos = graph.solve(&kept_signed).unwrap().value;
        let neg: Vec<f64> = kept_signed.iter().map(|x| -x).collect();
        let flow = pos.max(graph.solve(&neg).unwrap().value);
        assert!(
            (flow - oracle).abs() <= 1e-9 * oracle.abs().max(1.0),
            "trial {trial}: flow {flow} vs oracle {oracle}"
        );
    }
}

#[test]
fn sparse_graph_stays_within_validation_tolerance_of_oracle() {
    // The kNN + long-range relaxation against the exact polytope optimum.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..12 {
        let n = 28;
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-0.9..0.9)).collect())
            .collect();
        let signed: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let oracle = oracle_f_r(&points, &signed, 1.0);
        let graph = KrGraph::build(&points, 1.0, &LpOptions::default()).unwrap();
        let kept_signed: Vec<f64> = graph.kept.iter().map(|&i| signed[i]).collect();
        let pos = graph.solve(&kept_signed).unwrap().value;
        let negv: Vec<f64> = kept_signed.iter().map(|x| -x).collect();
        let sparse = pos.max(graph.solve(&negv).unwrap().value);
        assert!(sparse >= oracle - 1e-9, "relaxation must not undercut");
        assert!(
            sparse - oracle <= 1e-4 * oracle.max(1.0),
            "trial {trial}: sparse {sparse} vs oracle {oracle}"
        );
    }
}

#[test]
fn oracle_agrees_with_wall_integral_for_single_measure() {
    // Cross-check the oracle itself on the case with a closed form.
    let points = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.0],
        vec![0.0, -0.7, 0.0],
    ];
    let masses = vec![1.0, 2.0, 0.25];
    let direct: f64 = points
        .iter()
        .zip(&masses)
        .map(|(p, m)| m * (1.0 - p.iter().map(|x| x * x).sum::<f64>().sqrt()))
        .sum();
    let oracle = oracle_f_r(&points, &masses, 1.0);
    assert!((oracle - direct).abs() < 1e-10, "{oracle} vs {direct}");
}
