//! Independent oracles shared by the integration and acceptance tests. Nothing
//! here calls the solvers under test; matrices are assembled from the raw
//! operator coefficients and inverted densely.
#![allow(dead_code)]

use std::sync::Arc;

use hyperpot::builders::random_connected_graph;
use hyperpot::{Domain, MetricGraph, SchrodingerOperator};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All-pairs distances by repeated relaxation of every edge.
pub fn bellman_ford_all_pairs(g: &MetricGraph) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (s, row) in d.iter_mut().enumerate() {
        row[s] = 0.0;
        loop {
            let mut changed = false;
            for e in g.edges() {
                for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                    if row[a] + e.length < row[b] {
                        row[b] = row[a] + e.length;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    d
}

fn product(d: &[Vec<f64>], x: usize, y: usize, z: usize) -> f64 {
    0.5 * (d[z][x] + d[z][y] - d[x][y])
}

/// Four-point constant by a literal scan over all ordered quadruples.
pub fn naive_four_point(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut best: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    let v = product(d, x, w, z).min(product(d, w, y, z)) - product(d, x, y, z);
                    best = best.max(v);
                }
            }
        }
    }
    best
}

/// `mu (L - shift)` restricted to the domain, built from the coefficients.
pub fn dense_operator(op: &SchrodingerOperator, domain: &Domain, shift: f64) -> DMatrix<f64> {
    let verts = domain.vertices();
    let n = verts.len();
    let pos = |x: usize| verts.iter().position(|&v| v == x);
    let mut a = DMatrix::zeros(n, n);
    for (i, &x) in verts.iter().enumerate() {
        a[(i, i)] = op.killing()[x] + (op.potential()[x] - shift) * op.measure()[x];
    }
    for (e, w) in op.graph().edges().iter().zip(op.conductance()) {
        if let Some(i) = pos(e.u) {
            a[(i, i)] += w;
        }
        if let Some(j) = pos(e.v) {
            a[(j, j)] += w;
        }
        if let (Some(i), Some(j)) = (pos(e.u), pos(e.v)) {
            a[(i, j)] -= w;
            a[(j, i)] -= w;
        }
    }
    a
}

/// Dense Green matrix indexed by domain positions.
pub fn dense_green(op: &SchrodingerOperator, domain: &Domain, shift: f64) -> DMatrix<f64> {
    dense_operator(op, domain, shift)
        .lu()
        .try_inverse()
        .expect("oracle operator is invertible")
}

/// Smallest eigenvalue of `A` against the diagonal mass `mu`.
pub fn dense_lambda1(op: &SchrodingerOperator, domain: &Domain) -> f64 {
    let a = dense_operator(op, domain, 0.0);
    let s: Vec<f64> = domain
        .vertices()
        .iter()
        .map(|&x| 1.0 / op.measure()[x].sqrt())
        .collect();
    let b = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s[i] * s[j]);
    SymmetricEigen::new(b).eigenvalues.min()
}

/// Dirichlet Green function of the path `1..n` (unit weights, `V = 0`).
pub fn interval_green(n: usize, x: usize, y: usize) -> f64 {
    (x.min(y) * (n + 1 - x.max(y))) as f64 / (n + 1) as f64
}

/// Root `r < 1` of `r^2 - (2 + eps) r + 1 = 0`.
pub fn line_root(eps: f64) -> f64 {
    let b = 2.0 + eps;
    (b - (b * b - 4.0).sqrt()) / 2.0
}

/// `G(0, 0)` on the whole integer line with `V = eps`: `1 / sqrt((2+eps)^2 - 4)`.
pub fn line_g0(eps: f64) -> f64 {
    let b = 2.0 + eps;
    1.0 / (b * b - 4.0).sqrt()
}

/// Reduit by enumerating contact sets inside `a_set`: for each subset `C`
/// the candidate is `u` on `C` and harmonic elsewhere in the domain; the
/// answer is the smallest feasible candidate.
pub fn reduit_active_set(
    op: &SchrodingerOperator,
    domain: &Domain,
    u: &[f64],
    a_set: &[usize],
) -> Vec<f64> {
    let verts = domain.vertices();
    let n = verts.len();
    let a = dense_operator(op, domain, 0.0);
    let k = a_set.len();
    assert!(k <= 16, "active-set oracle is exponential");
    let in_a: Vec<bool> = verts.iter().map(|x| a_set.contains(x)).collect();
    let mut best: Option<DVector<f64>> = None;
    for mask in 0u32..(1 << k) {
        let contact: Vec<bool> = verts
            .iter()
            .map(|x| {
                a_set
                    .iter()
                    .position(|y| y == x)
                    .is_some_and(|p| mask & (1 << p) != 0)
            })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| !contact[i]).collect();
        let mut v = DVector::zeros(n);
        for i in 0..n {
            if contact[i] {
                v[i] = u[verts[i]];
            }
        }
        if !free.is_empty() {
            let m = free.len();
            let sub = DMatrix::from_fn(m, m, |i, j| a[(free[i], free[j])]);
            let rhs = DVector::from_fn(m, |i, _| {
                -(0..n)
                    .filter(|&j| contact[j])
                    .map(|j| a[(free[i], j)] * v[j])
                    .sum::<f64>()
            });
            let Some(sol) = sub.lu().solve(&rhs) else {
                continue;
            };
            for (i, &f) in free.iter().enumerate() {
                v[f] = sol[i];
            }
        }
        let av = &a * &v;
        let scale = v.amax().max(1e-300);
        let feasible = (0..n).all(|i| {
            let floor = if in_a[i] { u[verts[i]] } else { 0.0 };
            v[i] >= floor - 1e-10 * scale && av[i] >= -1e-10 * scale
        });
        if feasible && best.as_ref().is_none_or(|b| v.sum() < b.sum()) {
            best = Some(v);
        }
    }
    let best = best.expect("the reduit is always a feasible candidate");
    let mut out = vec![0.0; op.n()];
    for (i, &x) in verts.iter().enumerate() {
        out[x] = best[i];
    }
    out
}

/// Random connected graph with lengths in `[1, 2]` and `V` uniform in `[lo, hi]`.
pub fn random_instance(n: usize, extra: usize, lo: f64, hi: f64, seed: u64) -> SchrodingerOperator {
    let g = Arc::new(random_connected_graph(n, extra, 1.0, 2.0, seed).expect("random graph"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
    let v = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    SchrodingerOperator::new(g, v).expect("valid operator")
}

/// Integer path `0..n` with unit weights and constant potential.
pub fn line_operator(n: usize, v: f64) -> SchrodingerOperator {
    let pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let g = Arc::new(MetricGraph::unit(n, &pairs).expect("path"));
    SchrodingerOperator::constant(g, v).expect("valid operator")
}

/// Sum of `G(x, y) f(y) mu(y)` with the dense oracle, full length.
pub fn dense_potential(op: &SchrodingerOperator, domain: &Domain, f: &[f64]) -> Vec<f64> {
    let g = dense_green(op, domain, 0.0);
    let verts = domain.vertices();
    let mut out = vec![0.0; op.n()];
    for (i, &x) in verts.iter().enumerate() {
        out[x] = verts
            .iter()
            .enumerate()
            .map(|(j, &y)| g[(i, j)] * f[y] * op.measure()[y])
            .sum();
    }
    out
}
