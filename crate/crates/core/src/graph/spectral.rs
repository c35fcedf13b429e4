//! Laplacian spectrum and algebraic connectivity.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Adjacency, EdgeFilter, RelationGraph};

/// Components up to this many nodes use a dense symmetric eigensolver.
pub const DEFAULT_DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub dense_limit: usize,
    /// Convergence tolerance of the iterative solver.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            dense_limit: DEFAULT_DENSE_LIMIT,
            tolerance: 1e-12,
            max_iterations: 5000,
        }
    }
}

fn laplacian(adj: &Adjacency) -> DMatrix<f64> {
    let n = adj.len();
    let mut l = DMatrix::zeros(n, n);
    for (i, ns) in adj.neighbors.iter().enumerate() {
        l[(i, i)] = ns.len() as f64;
        for &j in ns {
            l[(i, j)] = -1.0;
        }
    }
    l
}

/// All eigenvalues of L = D − A in ascending order.
pub fn laplacian_spectrum(adj: &Adjacency) -> Vec<f64> {
    if adj.is_empty() {
        return Vec::new();
    }
    let mut values: Vec<f64> = laplacian(adj).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// λ₂ of the Laplacian of the largest component under `filter`; 0 when that
/// component has fewer than two nodes.
pub fn algebraic_connectivity(graph: &RelationGraph, filter: EdgeFilter, params: &SpectralParams) -> f64 {
    let adj = graph.adjacency(filter);
    match adj.components().first() {
        Some(c) if c.len() >= 2 => fiedler_value(&adj.induced(c), params),
        _ => 0.0,
    }
}

/// λ₂ of a connected graph.
pub(crate) fn fiedler_value(adj: &Adjacency, params: &SpectralParams) -> f64 {
    if adj.len() < 2 {
        return 0.0;
    }
    let value = if adj.len() <= params.dense_limit {
        laplacian_spectrum(adj)[1]
    } else {
        inverse_iteration(adj, params)
    };
    value.max(0.0)
}

fn apply(adj: &Adjacency, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        adj.len(),
        adj.neighbors
            .iter()
            .enumerate()
            .map(|(i, ns)| ns.len() as f64 * x[i] - ns.iter().map(|&j| x[j]).sum::<f64>()),
    )
}

fn deflate(x: &mut DVector<f64>) {
    let mean = x.mean();
    x.add_scalar_mut(-mean);
}

/// Solves L y = b for b ⊥ 1 with conjugate gradients, keeping iterates ⊥ 1.
fn solve(adj: &Adjacency, b: &DVector<f64>, params: &SpectralParams) -> DVector<f64> {
    let mut x = DVector::zeros(b.len());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let stop = (params.tolerance * b.norm()).powi(2);
    for _ in 0..params.max_iterations.max(b.len()) {
        if rr <= stop {
            break;
        }
        let lp = apply(adj, &p);
        let alpha = rr / p.dot(&lp);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &lp, 1.0);
        deflate(&mut r);
        let rr_next = r.dot(&r);
        p = &r + (rr_next / rr) * &p;
        rr = rr_next;
    }
    deflate(&mut x);
    x
}

/// Inverse iteration restricted to the complement of the constant vector,
/// where L is positive definite for a connected graph.
fn inverse_iteration(adj: &Adjacency, params: &SpectralParams) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DVector::from_fn(adj.len(), |_, _| rng.random::<f64>() - 0.5);
    deflate(&mut x);
    x.normalize_mut();
    let mut lambda = x.dot(&apply(adj, &x));
    for _ in 0..params.max_iterations {
        let mut y = solve(adj, &x, params);
        y.normalize_mut();
        let ly = apply(adj, &y);
        let next = y.dot(&ly);
        let residual = (&ly - next * &y).norm();
        let settled = (next - lambda).abs() <= params.tolerance * next.max(1.0);
        x = y;
        lambda = next;
        if settled && residual <= 1e-7 * lambda.max(1.0) {
            break;
        }
    }
    lambda
}
