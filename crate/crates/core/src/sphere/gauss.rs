//! Gauss–Legendre nodes/weights with a process-wide cache.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

fn compute(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on P_n with the standard Chebyshev initial guess.
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Nodes and weights on [-1, 1], cached per size.
pub(crate) fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(compute(n))))
}

/// Map [-1,1] nodes/weights onto [a, b] and accumulate f.
pub(crate) fn gauss_on_interval(n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // GL(8) is exact through degree 15.
        for d in 0..=15u32 {
            let v = gauss_on_interval(8, -1.0, 1.0, |x| x.powi(d as i32));
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            assert!((v - exact).abs() < 1e-14, "degree {d}: {v} vs {exact}");
        }
    }

    #[test]
    fn integrates_trig_to_machine_precision() {
        let v = gauss_on_interval(24, 0.0, std::f64::consts::PI, |x| x.sin());
        assert!((v - 2.0).abs() < 1e-14);
    }
}
