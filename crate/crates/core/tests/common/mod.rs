//! Oracles shared by the integration tests.

#![allow(dead_code)]

use pagerank_sparse::sparse::CsrMatrix;
use pagerank_sparse::DualSparseMatrix;

/// Stationary vector of `P` by power iteration on the lazy chain
/// `(P + I)/2`, which has the same stationary vectors but no periodicity.
/// Stops when successive iterates differ by less than `tol` in the ∞-norm.
pub fn power_iteration(p: &DualSparseMatrix, tol: f64, max_iters: usize) -> Option<Vec<f64>> {
    let n = p.n_rows();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..max_iters {
        let px = p.mul_vec_transposed(&x).unwrap();
        let next: Vec<f64> = x.iter().zip(&px).map(|(a, b)| 0.5 * (a + b)).collect();
        let diff = next
            .iter()
            .zip(&x)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        x = next;
        if diff < tol {
            return Some(x);
        }
    }
    None
}

fn reaches_all(m: &CsrMatrix) -> bool {
    let n = m.n_rows();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for &j in m.row(i).0 {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == n
}

/// Whether the graph of `P` is strongly connected, i.e. `P` is irreducible
/// and has a unique stationary distribution.
pub fn strongly_connected(p: &DualSparseMatrix) -> bool {
    p.n_rows() > 0 && reaches_all(p.by_rows()) && reaches_all(p.by_cols())
}

pub fn inf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
