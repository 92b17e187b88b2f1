//! Sparse and dense linear algebra used by the operator code: a CSR matrix,
//! Jacobi-preconditioned conjugate gradients, a direct Cholesky path for small
//! systems, a shift-invert Lanczos eigensolver and nonnegative least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative residual target for iterative solves.
pub const CG_TOL: f64 = 1e-12;

/// Systems up to this size are factored densely.
pub const DENSE_LIMIT: usize = 400;

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// Returns `self + shift * diag(d)`.
    pub fn add_diagonal(&self, shift: f64, d: &[f64]) -> CsrMatrix {
        let mut trip = Vec::with_capacity(self.values.len() + self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                trip.push((i, j, v));
            }
            trip.push((i, i, shift * d[i]));
        }
        CsrMatrix::from_triplets(self.n, trip)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite `a`.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.n();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Numerical {
                msg: format!(
                    "conjugate gradients met nonpositive curvature {pap:e} at iteration {it}"
                ),
                dump: x,
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rel = norm(&r) / bnorm;
        if rel < tol {
            return Ok(CgOutcome {
                x,
                iterations: it + 1,
                relative_residual: rel,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Numerical {
        msg: format!(
            "conjugate gradients did not reach {tol:e} in {max_iter} iterations (residual {:e})",
            norm(&r) / bnorm
        ),
        dump: x,
    })
}

/// Factorised or iterative solver for a fixed SPD matrix.
pub enum SpdSolver {
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Iterative(CsrMatrix),
}

impl SpdSolver {
    /// Picks a dense Cholesky factorisation for small systems and CG otherwise.
    /// Fails if the matrix is not positive definite (dense path only).
    pub fn new(a: CsrMatrix) -> Result<Self> {
        if a.n() <= DENSE_LIMIT {
            let dense = a.to_dense();
            match dense.cholesky() {
                Some(ch) => Ok(SpdSolver::Dense(ch)),
                None => Err(Error::numerical("matrix is not positive definite")),
            }
        } else {
            Ok(SpdSolver::Iterative(a))
        }
    }

    /// Smallest entry of a solution, relative to its largest, that the solver resolves.
    pub fn relative_resolution(&self) -> f64 {
        match self {
            SpdSolver::Dense(_) => 0.0,
            SpdSolver::Iterative(_) => 1e3 * CG_TOL,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            SpdSolver::Dense(ch) => {
                let x = ch.solve(&DVector::from_column_slice(b));
                Ok(x.as_slice().to_vec())
            }
            SpdSolver::Iterative(a) => {
                let max_iter = 20 * a.n() + 1000;
                Ok(pcg(a, b, CG_TOL, max_iter)?.x)
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Smallest eigenpair of the pencil `a u = lambda diag(m) u`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub restarts: usize,
}

/// Smallest generalized eigenvalue of `a u = lambda diag(m) u` by shift-invert
/// Lanczos in the `m` inner product. `shift` must lie strictly below the
/// spectrum so that `a - shift*m` is positive definite.
pub fn smallest_generalized_eigen(
    a: &CsrMatrix,
    m: &[f64],
    shift: f64,
    tol: f64,
) -> Result<EigenPair> {
    let n = a.n();
    if n == 0 {
        return Err(Error::input("empty eigenproblem"));
    }
    if n <= DENSE_LIMIT {
        return dense_smallest_generalized(a, m);
    }
    let shifted = a.add_diagonal(-shift, m);
    let solver = SpdSolver::new(shifted)?;
    let krylov = 40.min(n);
    let max_restarts = 200;

    let mdot =
        |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).zip(m).map(|((a, b), w)| a * b * w).sum() };

    let mut start: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64 / 101.0)
        .collect();
    let mut prev = f64::NAN;
    let mut last_vec = start.clone();
    for restart in 0..max_restarts {
        let nrm = mdot(&start, &start).sqrt();
        for v in start.iter_mut() {
            *v /= nrm;
        }
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..krylov {
            let rhs: Vec<f64> = basis[j].iter().zip(m).map(|(v, w)| v * w).collect();
            let mut w = solver.solve(&rhs)?;
            let aj = mdot(&w, &basis[j]);
            alpha.push(aj);
            // full reorthogonalisation, twice for stability
            for _ in 0..2 {
                for q in &basis {
                    let c = mdot(&w, q);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let bj = mdot(&w, &w).sqrt();
            if j + 1 == krylov || bj < 1e-14 * aj.abs().max(1e-300) {
                break;
            }
            beta.push(bj);
            for wi in w.iter_mut() {
                *wi /= bj;
            }
            basis.push(w);
        }
        let k = alpha.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        let (imax, theta) = eig.eigenvalues.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
        if theta <= 0.0 {
            return Err(Error::numerical(
                "shift-invert Lanczos produced a nonpositive Ritz value",
            ));
        }
        let s = eig.eigenvectors.column(imax);
        let mut ritz = vec![0.0; n];
        for (c, q) in s.iter().zip(&basis) {
            for (r, qi) in ritz.iter_mut().zip(q) {
                *r += c * qi;
            }
        }
        let lambda = shift + 1.0 / theta;
        // true residual of the pencil
        let au = a.mul_vec(&ritz);
        let res: f64 = au
            .iter()
            .zip(&ritz)
            .zip(m)
            .map(|((x, u), w)| (x - lambda * w * u).powi(2) / w)
            .sum::<f64>()
            .sqrt();
        // absolute floor relative to the shift gap so that a zero eigenvalue converges
        let size = lambda.abs().max(1e-6 * (lambda - shift).abs()).max(1e-300);
        let scale = size * mdot(&ritz, &ritz).sqrt();
        last_vec = ritz.clone();
        let change = ((lambda - prev) / size).abs();
        if (res / scale < tol.sqrt() && change < tol) || res / scale < tol {
            return Ok(EigenPair {
                value: lambda,
                vector: ritz,
                restarts: restart,
            });
        }
        prev = lambda;
        start = ritz;
    }
    Err(Error::Numerical {
        msg: format!("Lanczos eigensolver did not converge in {max_restarts} restarts"),
        dump: last_vec,
    })
}

/// Dense smallest generalized eigenpair via the symmetric reduction
/// `m^{-1/2} a m^{-1/2}`.
pub fn dense_smallest_generalized(a: &CsrMatrix, m: &[f64]) -> Result<EigenPair> {
    let n = a.n();
    let mut d = a.to_dense();
    let s: Vec<f64> = m.iter().map(|w| 1.0 / w.sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] *= s[i] * s[j];
        }
    }
    let eig = d.symmetric_eigen();
    let (imin, value) =
        eig.eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    let mut vector: Vec<f64> = eig
        .eigenvectors
        .column(imin)
        .iter()
        .zip(&s)
        .map(|(v, si)| v * si)
        .collect();
    if vector.iter().sum::<f64>() < 0.0 {
        for v in vector.iter_mut() {
            *v = -*v;
        }
    }
    Ok(EigenPair {
        value,
        vector,
        restarts: 0,
    })
}

/// Nonnegative least squares `min ||a x - b||, x >= 0` (Lawson-Hanson active set).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Result<DVector<f64>> {
    let (_, ncols) = a.shape();
    let mut x = DVector::<f64>::zeros(ncols);
    let mut passive = vec![false; ncols];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    for _ in 0..max_iter {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..ncols)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(jmax) = candidate else {
            return Ok(x);
        };
        passive[jmax] = true;
        loop {
            let idx: Vec<usize> = (0..ncols).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(&idx);
            let z_sub = least_squares(&sub, b)?;
            if z_sub.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z_sub[k];
                }
                break;
            }
            let mut step = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z_sub[k] <= 0.0 {
                    let s = x[j] / (x[j] - z_sub[k]);
                    if s < step {
                        step = s;
                    }
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += step * (z_sub[k] - x[j]);
            }
            for &j in &idx {
                if x[j] <= 1e-15 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Err(Error::numerical(
        "nonnegative least squares did not converge",
    ))
}

fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-13)
        .map_err(|e| Error::numerical(format!("least squares failed: {e}")))
}
