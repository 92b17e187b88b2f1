//! Discrete Schrödinger operators `(Lu)(x) = (1/mu(x)) [sum_y w_xy (u(x) - u(y)) + kappa(x) u(x)] + V(x) u(x)`
//! and their Dirichlet problems, Green functions and resolvents.
//!
//! `kappa` is a killing term standing for edges to Dirichlet boundary points
//! that are not part of the graph. Green functions are normalised by
//! `L G(., y) = 1_y / mu(y)`, so that `sum_y G(x, y) f(y) mu(y)` inverts `L`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, smallest_generalized_eigen, CsrMatrix, SpdSolver};
use crate::metric_graph::MetricGraph;

/// Relative tolerance for eigenvalue computations.
pub const EIGEN_TOL: f64 = 1e-10;

/// Finite vertex set on which Dirichlet problems are posed.
#[derive(Debug, Clone)]
pub struct Domain {
    vertices: Vec<usize>,
    index: Vec<usize>,
}

impl Domain {
    pub fn new(g: &MetricGraph, mut vertices: Vec<usize>) -> Result<Self> {
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.is_empty() {
            return Err(Error::input("domain must be nonempty"));
        }
        if *vertices.last().unwrap() >= g.n() {
            return Err(Error::input("domain references a vertex outside the graph"));
        }
        let mut index = vec![usize::MAX; g.n()];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        Ok(Domain { vertices, index })
    }

    pub fn all(g: &MetricGraph) -> Self {
        Domain::new(g, (0..g.n()).collect()).expect("graphs are nonempty")
    }

    /// Closed ball `B_r(o)`.
    pub fn ball(g: &MetricGraph, o: usize, r: f64) -> Result<Self> {
        Domain::new(g, g.ball(o, r)?)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.index.get(x).is_some_and(|&i| i != usize::MAX)
    }

    pub fn index_of(&self, x: usize) -> Option<usize> {
        self.index.get(x).copied().filter(|&i| i != usize::MAX)
    }

    /// Vertices outside the domain adjacent to it.
    pub fn exterior_boundary(&self, g: &MetricGraph) -> Vec<usize> {
        g.outer_boundary(&self.vertices)
    }

    /// Restriction of a full-length vector to the domain.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.vertices.iter().map(|&v| u[v]).collect()
    }

    /// Zero extension of a domain vector to full length.
    pub fn extend(&self, local: &[f64], n: usize) -> Vec<f64> {
        let mut full = vec![0.0; n];
        for (&v, &x) in self.vertices.iter().zip(local) {
            full[v] = x;
        }
        full
    }
}

/// Conductances, potential, measure and killing on a metric graph.
#[derive(Debug, Clone)]
pub struct SchrodingerOperator {
    graph: Arc<MetricGraph>,
    conductance: Vec<f64>,
    potential: Vec<f64>,
    measure: Vec<f64>,
    killing: Vec<f64>,
}

impl SchrodingerOperator {
    /// Unit conductances, the graph measure and potential `potential`.
    pub fn new(graph: Arc<MetricGraph>, potential: Vec<f64>) -> Result<Self> {
        let m = graph.edges().len();
        let measure = graph.mu().to_vec();
        let n = graph.n();
        SchrodingerOperator::with_coefficients(
            graph,
            vec![1.0; m],
            potential,
            measure,
            vec![0.0; n],
        )
    }

    /// Constant potential `v`.
    pub fn constant(graph: Arc<MetricGraph>, v: f64) -> Result<Self> {
        let n = graph.n();
        SchrodingerOperator::new(graph, vec![v; n])
    }

    pub fn with_coefficients(
        graph: Arc<MetricGraph>,
        conductance: Vec<f64>,
        potential: Vec<f64>,
        measure: Vec<f64>,
        killing: Vec<f64>,
    ) -> Result<Self> {
        let n = graph.n();
        if conductance.len() != graph.edges().len() {
            return Err(Error::input("one conductance per edge required"));
        }
        if potential.len() != n || measure.len() != n || killing.len() != n {
            return Err(Error::input(
                "potential, measure and killing need one value per vertex",
            ));
        }
        if conductance.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::input("conductances must be positive and finite"));
        }
        if measure.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::input("measure must be positive and finite"));
        }
        if killing.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
            return Err(Error::input("killing must be nonnegative and finite"));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("potential must be bounded"));
        }
        Ok(SchrodingerOperator {
            graph,
            conductance,
            potential,
            measure,
            killing,
        })
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<MetricGraph> {
        Arc::clone(&self.graph)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn killing(&self) -> &[f64] {
        &self.killing
    }

    /// `max |V|`.
    pub fn k_bound(&self) -> f64 {
        max_abs(&self.potential)
    }

    /// Same operator with another potential.
    pub fn with_potential(&self, potential: Vec<f64>) -> Result<Self> {
        SchrodingerOperator::with_coefficients(
            self.graph_arc(),
            self.conductance.clone(),
            potential,
            self.measure.clone(),
            self.killing.clone(),
        )
    }

    /// Same operator with another measure (the form is unchanged only if the
    /// potential is rescaled by the caller).
    pub fn with_measure(&self, measure: Vec<f64>) -> Result<Self> {
        SchrodingerOperator::with_coefficients(
            self.graph_arc(),
            self.conductance.clone(),
            self.potential.clone(),
            measure,
            self.killing.clone(),
        )
    }

    /// Conductance-weighted difference `sum_y w_xy (u(x) - u(y))`.
    fn conductance_laplacian(&self, u: &[f64], x: usize) -> f64 {
        self.graph
            .neighbors(x)
            .iter()
            .map(|&(y, k)| self.conductance[k] * (u[x] - u[y]))
            .sum()
    }

    /// `Lu` at every vertex.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|x| {
                (self.conductance_laplacian(u, x) + self.killing[x] * u[x]) / self.measure[x]
                    + self.potential[x] * u[x]
            })
            .collect()
    }

    /// `E(u, v) = sum_e w_e du dv + sum kappa u v + sum V u v mu`.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        let edges: f64 = self
            .graph
            .edges()
            .iter()
            .zip(&self.conductance)
            .map(|(e, w)| w * (u[e.u] - u[e.v]) * (v[e.u] - v[e.v]))
            .sum();
        let diag: f64 = (0..self.n())
            .map(|x| (self.killing[x] + self.potential[x] * self.measure[x]) * u[x] * v[x])
            .sum();
        edges + diag
    }

    /// Matrix of `mu (L - shift)` restricted to the domain (zero exterior values).
    pub fn matrix(&self, domain: &Domain, shift: f64) -> CsrMatrix {
        self.assemble(domain, shift, true)
    }

    /// Same as [`matrix`](Self::matrix) with the potential dropped.
    pub fn free_matrix(&self, domain: &Domain) -> CsrMatrix {
        self.assemble(domain, 0.0, false)
    }

    fn assemble(&self, domain: &Domain, shift: f64, with_potential: bool) -> CsrMatrix {
        let mut trip = Vec::new();
        for (i, &x) in domain.vertices().iter().enumerate() {
            let mut diag = self.killing[x];
            if with_potential {
                diag += (self.potential[x] - shift) * self.measure[x];
            }
            for &(y, k) in self.graph.neighbors(x) {
                let w = self.conductance[k];
                diag += w;
                if let Some(j) = domain.index_of(y) {
                    trip.push((i, j, -w));
                }
            }
            trip.push((i, i, diag));
        }
        CsrMatrix::from_triplets(domain.len(), trip)
    }

    /// Domain restriction of the measure.
    pub fn mass(&self, domain: &Domain) -> Vec<f64> {
        domain.restrict(&self.measure)
    }

    /// `sum_{y outside} w_xy f(y)` for every domain vertex.
    pub fn boundary_coupling(&self, domain: &Domain, f: &[f64]) -> Vec<f64> {
        domain
            .vertices()
            .iter()
            .map(|&x| {
                self.graph
                    .neighbors(x)
                    .iter()
                    .filter(|&&(y, _)| !domain.contains(y))
                    .map(|&(y, k)| self.conductance[k] * f[y])
                    .sum()
            })
            .collect()
    }

    /// Sufficient condition for coercivity that needs no eigensolve: `V >= 0`
    /// on the domain and every component of the domain touches a killing
    /// vertex, a positive potential or the exterior.
    pub fn obviously_coercive(&self, domain: &Domain) -> bool {
        if domain.vertices().iter().any(|&x| self.potential[x] < 0.0) {
            return false;
        }
        let g = &*self.graph;
        let mut seen = vec![false; domain.len()];
        for start in 0..domain.len() {
            if seen[start] {
                continue;
            }
            let mut anchored = false;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let x = domain.vertices()[i];
                if self.killing[x] > 0.0 || self.potential[x] > 0.0 {
                    anchored = true;
                }
                for &(y, _) in g.neighbors(x) {
                    match domain.index_of(y) {
                        Some(j) => {
                            if !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                        None => anchored = true,
                    }
                }
            }
            if !anchored {
                return false;
            }
        }
        true
    }

    /// Errors unless `L - shift` is coercive on the domain.
    pub fn ensure_coercive(&self, domain: &Domain, shift: f64) -> Result<()> {
        if shift <= 0.0 && self.obviously_coercive(domain) {
            return Ok(());
        }
        let lambda1 = dirichlet_eigenvalue(self, domain)?;
        if exceeds_shift(lambda1, shift) {
            Ok(())
        } else {
            Err(Error::NotCoercive { lambda1, shift })
        }
    }
}

/// True if `lambda1` lies above `shift` by more than rounding.
pub fn exceeds_shift(lambda1: f64, shift: f64) -> bool {
    lambda1 - shift > 1e-12 * lambda1.abs().max(1.0)
}

/// Principal Dirichlet eigenvalue of `L` on the domain in the `mu` inner product.
pub fn dirichlet_eigenvalue(op: &SchrodingerOperator, domain: &Domain) -> Result<f64> {
    let a = op.matrix(domain, 0.0);
    let m = op.mass(domain);
    let lower = domain
        .vertices()
        .iter()
        .map(|&x| op.potential[x] + op.killing[x] / op.measure[x])
        .fold(f64::INFINITY, f64::min);
    Ok(smallest_generalized_eigen(&a, &m, lower - 1.0, EIGEN_TOL)?.value)
}

/// Green function or resolvent column on a domain.
#[derive(Debug, Clone, Serialize)]
pub struct GreenTable {
    pub domain: Vec<usize>,
    pub pole: usize,
    /// Full-length values, zero outside the domain.
    pub values: Vec<f64>,
    /// Spectral shift `lambda` of `L - lambda` (0 for the Green function).
    pub lambda_shift: f64,
    pub converged: bool,
    /// Max-norm residual of `mu (L - lambda) G - 1_pole` on the domain, or the
    /// last relative change for exhaustions.
    pub residual: f64,
    /// Exhaustion radius when computed by [`green_global`].
    pub radius: Option<f64>,
}

/// Reusable solver for `L - shift` on a fixed domain.
pub struct GreenSolver {
    domain: Domain,
    shift: f64,
    n: usize,
    matrix: CsrMatrix,
    solver: SpdSolver,
}

impl GreenSolver {
    /// Checks coercivity of `L - shift` and prepares the solver.
    pub fn new(op: &SchrodingerOperator, domain: &Domain, shift: f64) -> Result<Self> {
        op.ensure_coercive(domain, shift)?;
        let matrix = op.matrix(domain, shift);
        let solver = SpdSolver::new(matrix.clone()).map_err(|_| Error::NotCoercive {
            lambda1: f64::NAN,
            shift,
        })?;
        Ok(GreenSolver {
            domain: domain.clone(),
            shift,
            n: op.n(),
            matrix,
            solver,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Entries of a column below this fraction of its maximum are not resolved.
    pub fn relative_resolution(&self) -> f64 {
        self.solver.relative_resolution()
    }

    /// Solves `mu (L - shift) u = b` on the domain with zero exterior data.
    pub fn solve_local(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solver.solve(b)
    }

    /// `G(., y)` as a table.
    pub fn column(&self, y: usize) -> Result<GreenTable> {
        let i = self
            .domain
            .index_of(y)
            .ok_or_else(|| Error::input(format!("pole {y} is not in the domain")))?;
        let mut rhs = vec![0.0; self.domain.len()];
        rhs[i] = 1.0;
        let local = self.solver.solve(&rhs)?;
        let mut r = self.matrix.mul_vec(&local);
        r[i] -= 1.0;
        Ok(GreenTable {
            domain: self.domain.vertices().to_vec(),
            pole: y,
            values: self.domain.extend(&local, self.n),
            lambda_shift: self.shift,
            converged: true,
            residual: max_abs(&r),
            radius: None,
        })
    }
}

/// Dirichlet Green function `G_Omega(., y)`.
pub fn green_dirichlet(op: &SchrodingerOperator, domain: &Domain, y: usize) -> Result<GreenTable> {
    if !domain.contains(y) {
        return Err(Error::input(format!("pole {y} is not in the domain")));
    }
    GreenSolver::new(op, domain, 0.0)?.column(y)
}

/// Resolvent `G_{-lambda}(., y)`: Green function of `L - lambda`.
pub fn resolvent(
    op: &SchrodingerOperator,
    lambda: f64,
    domain: &Domain,
    y: usize,
) -> Result<GreenTable> {
    if !domain.contains(y) {
        return Err(Error::input(format!("pole {y} is not in the domain")));
    }
    GreenSolver::new(op, domain, lambda)?.column(y)
}

/// Ball exhaustion `B_R(center)`, `R = r_start, r_start + r_step, ... <= r_max`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Exhaustion {
    pub center: usize,
    pub r_start: f64,
    pub r_step: f64,
    pub r_max: f64,
}

impl Exhaustion {
    pub fn new(center: usize, r_start: f64, r_max: f64) -> Self {
        Exhaustion {
            center,
            r_start,
            r_step: 2.0,
            r_max,
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        let mut r = self.r_start;
        let mut out = Vec::new();
        while r <= self.r_max + 1e-12 {
            out.push(r);
            r += self.r_step;
        }
        out
    }
}

/// Global Green function by monotone exhaustion. Stops once the largest
/// relative change on the window `B_{r_start/2}(center)` drops below `tol`;
/// otherwise returns the last table with `converged = false`.
pub fn green_global(
    op: &SchrodingerOperator,
    y: usize,
    tol: f64,
    exhaustion: &Exhaustion,
) -> Result<GreenTable> {
    let g = op.graph();
    let window = g.ball(exhaustion.center, exhaustion.r_start / 2.0)?;
    let mut previous: Option<GreenTable> = None;
    for r in exhaustion.radii() {
        let domain = Domain::ball(g, exhaustion.center, r)?;
        if !domain.contains(y) {
            continue;
        }
        let mut table = green_dirichlet(op, &domain, y)?;
        table.radius = Some(r);
        table.converged = false;
        if let Some(prev) = &previous {
            let change = window
                .iter()
                .map(|&x| {
                    let new = table.values[x];
                    if new == 0.0 {
                        0.0
                    } else {
                        ((new - prev.values[x]) / new).abs()
                    }
                })
                .fold(0.0, f64::max);
            table.residual = change;
            if change < tol {
                table.converged = true;
                return Ok(table);
            }
        } else {
            table.residual = f64::INFINITY;
        }
        previous = Some(table);
    }
    previous.ok_or_else(|| Error::input("no exhaustion ball contains the pole"))
}

/// Dense Green matrix `(mu (L - shift))^{-1}` on a domain, rows and columns in
/// domain order.
pub fn green_matrix(op: &SchrodingerOperator, domain: &Domain, shift: f64) -> Result<DMatrix<f64>> {
    if domain.len() > 2000 {
        return Err(Error::input(
            "dense Green matrices are limited to 2000 vertices",
        ));
    }
    op.ensure_coercive(domain, shift)?;
    let a = op.matrix(domain, shift).to_dense();
    let ch = a.cholesky().ok_or(Error::NotCoercive {
        lambda1: f64::NAN,
        shift,
    })?;
    Ok(ch.inverse())
}

/// Residuals of the resolvent equation and the two resolvent inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct ResolventReport {
    pub lambda: f64,
    /// `max |G_{-l} - G - l G∘G_{-l}| / G_{-l}` over entries.
    pub relative_residual: f64,
    /// `min (G_{-l} - G)`; nonnegative when `G <= G_{-l}`.
    pub monotone_slack: f64,
    /// `min (G_{-l}/l - G∘G_{-l})`; nonnegative when the second inequality holds.
    pub composition_slack: f64,
    pub holds: bool,
}

/// Checks `G_{-l} = G + l G∘G_{-l}` with `(G∘H)(x,z) = sum_y G(x,y) H(y,z) mu(y)`,
/// `G <= G_{-l}` and `G∘G_{-l} <= G_{-l}/l` entrywise.
pub fn check_resolvent_equation(
    op: &SchrodingerOperator,
    lambda: f64,
    domain: &Domain,
) -> Result<ResolventReport> {
    let g0 = green_matrix(op, domain, 0.0)?;
    let gl = green_matrix(op, domain, lambda)?;
    let m = op.mass(domain);
    let n = domain.len();
    let mut weighted = gl.clone();
    for i in 0..n {
        for j in 0..n {
            weighted[(i, j)] *= m[i];
        }
    }
    let comp = &g0 * &weighted;
    let mut rel: f64 = 0.0;
    let mut mono = f64::INFINITY;
    let mut compo = f64::INFINITY;
    let scale = gl.amax();
    for i in 0..n {
        for j in 0..n {
            let r = gl[(i, j)] - g0[(i, j)] - lambda * comp[(i, j)];
            let denom = gl[(i, j)].abs().max(1e-300);
            if r != 0.0 {
                rel = rel.max(r.abs() / denom);
            }
            mono = mono.min(gl[(i, j)] - g0[(i, j)]);
            if lambda > 0.0 {
                compo = compo.min(gl[(i, j)] / lambda - comp[(i, j)]);
            }
        }
    }
    let tol = 1e-12 * scale;
    let holds =
        rel < 1e-9 && (lambda < 0.0 || mono >= -tol) && (lambda <= 0.0 || compo >= -tol / lambda);
    Ok(ResolventReport {
        lambda,
        relative_residual: rel,
        monotone_slack: mono,
        composition_slack: compo,
        holds,
    })
}

/// Method for [`dirichlet_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    /// Sum of free solves `L0 u_0 = phi`, `L0 u_i = -V u_{i-1}`.
    Iterated,
}

/// Solves `Lu = phi` on the domain with `u = f` outside. `f` and `phi` are
/// full-length; the result is full-length with `f` copied outside the domain.
pub fn dirichlet_solve(
    op: &SchrodingerOperator,
    domain: &Domain,
    f: &[f64],
    phi: &[f64],
    method: SolveMethod,
) -> Result<Vec<f64>> {
    let n = op.n();
    if f.len() != n || phi.len() != n {
        return Err(Error::input(
            "boundary data and right-hand side must be full length",
        ));
    }
    let coupling = op.boundary_coupling(domain, f);
    let rhs: Vec<f64> = domain
        .vertices()
        .iter()
        .zip(&coupling)
        .map(|(&x, c)| op.measure[x] * phi[x] + c)
        .collect();
    let local = match method {
        SolveMethod::Direct => {
            op.ensure_coercive(domain, 0.0)?;
            SpdSolver::new(op.matrix(domain, 0.0))?.solve(&rhs)?
        }
        SolveMethod::Iterated => {
            let free = free_solver(op, domain)?;
            let bound = contraction_bound(op, domain, &free)?;
            if bound >= 1.0 {
                return Err(Error::Input(format!(
                    "iterated solve needs ||L0^-1 V|| < 1 but the measured bound is {bound:.4}; use the direct method"
                )));
            }
            let mut term = free.solve(&rhs)?;
            let mut sum = term.clone();
            let mut converged = false;
            for _ in 0..10_000 {
                let next_rhs: Vec<f64> = domain
                    .vertices()
                    .iter()
                    .zip(&term)
                    .map(|(&x, t)| -op.potential[x] * op.measure[x] * t)
                    .collect();
                term = free.solve(&next_rhs)?;
                for (s, t) in sum.iter_mut().zip(&term) {
                    *s += t;
                }
                if max_abs(&term) <= 1e-15 * max_abs(&sum).max(1e-300) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerical {
                    msg: "iterated Dirichlet solve did not converge".into(),
                    dump: sum,
                });
            }
            sum
        }
    };
    let mut u = f.to_vec();
    for (&x, v) in domain.vertices().iter().zip(&local) {
        u[x] = *v;
    }
    Ok(u)
}

fn free_solver(op: &SchrodingerOperator, domain: &Domain) -> Result<SpdSolver> {
    let free = op.with_potential(vec![0.0; op.n()])?;
    if !free.obviously_coercive(domain) {
        return Err(Error::input(
            "the potential-free operator is not invertible on this domain (no boundary or killing)",
        ));
    }
    SpdSolver::new(op.free_matrix(domain))
}

/// `max_x (L0^{-1} |V|)(x)`, the sup-norm of `L0^{-1} V` on the domain.
fn contraction_bound(op: &SchrodingerOperator, domain: &Domain, free: &SpdSolver) -> Result<f64> {
    let rhs: Vec<f64> = domain
        .vertices()
        .iter()
        .map(|&x| op.potential[x].abs() * op.measure[x])
        .collect();
    Ok(max_abs(&free.solve(&rhs)?))
}

/// Local Green function as the Neumann series `G0 sum_i (-W)^i`,
/// `W(x, y) = V(x) G0(x, y)`, valid when `max_x |V(x)| sum_y G0(x,y) mu(y) < 1/2`.
pub fn neumann_series_green(
    op: &SchrodingerOperator,
    domain: &Domain,
    y: usize,
) -> Result<GreenTable> {
    let i = domain
        .index_of(y)
        .ok_or_else(|| Error::input(format!("pole {y} is not in the domain")))?;
    let free = free_solver(op, domain)?;
    let mass = op.mass(domain);
    let g0_mass = free.solve(&mass)?;
    let bound = domain
        .vertices()
        .iter()
        .zip(&g0_mass)
        .map(|(&x, g)| op.potential[x].abs() * g)
        .fold(0.0, f64::max);
    if bound >= 0.5 {
        return Err(Error::Input(format!(
            "Neumann series precondition fails: max_x |V(x)| sum_y G0(x,y) mu(y) = {bound:.6} >= 1/2"
        )));
    }
    let mut rhs = vec![0.0; domain.len()];
    rhs[i] = 1.0;
    let mut term = free.solve(&rhs)?;
    let mut sum = term.clone();
    let mut converged = false;
    for _ in 0..10_000 {
        let next: Vec<f64> = domain
            .vertices()
            .iter()
            .zip(&term)
            .map(|(&x, t)| -op.potential[x] * op.measure[x] * t)
            .collect();
        term = free.solve(&next)?;
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        if max_abs(&term) < 1e-12 * max_abs(&sum) {
            converged = true;
            break;
        }
    }
    let mut r = op.matrix(domain, 0.0).mul_vec(&sum);
    r[i] -= 1.0;
    Ok(GreenTable {
        domain: domain.vertices().to_vec(),
        pole: y,
        values: domain.extend(&sum, op.n()),
        lambda_shift: 0.0,
        converged,
        residual: max_abs(&r),
        radius: None,
    })
}

/// Ground-state transform `E^h(u, v) = E(uh, vh)`:
/// `w' = w h(x) h(y)`, `mu' = h^2 mu`, `kappa' = kappa h^2` and
/// `V' = V + sum_y w_xy (h(x) - h(y)) / (h(x) mu(x))`, so that `L^h u = h^-1 L(hu)`.
pub fn h_transform(op: &SchrodingerOperator, h: &[f64]) -> Result<SchrodingerOperator> {
    if h.len() != op.n() {
        return Err(Error::input("h needs one value per vertex"));
    }
    if let Some((x, v)) = h
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
    {
        return Err(Error::input(format!("h must be positive, h({x}) = {v}")));
    }
    let g = op.graph();
    let conductance = g
        .edges()
        .iter()
        .zip(&op.conductance)
        .map(|(e, w)| w * h[e.u] * h[e.v])
        .collect();
    let measure: Vec<f64> = (0..op.n()).map(|x| h[x] * h[x] * op.measure[x]).collect();
    let killing = (0..op.n()).map(|x| h[x] * h[x] * op.killing[x]).collect();
    let potential = (0..op.n())
        .map(|x| op.potential[x] + op.conductance_laplacian(h, x) / (h[x] * op.measure[x]))
        .collect();
    SchrodingerOperator::with_coefficients(op.graph_arc(), conductance, potential, measure, killing)
}

/// Empirical Harnack constant on `B_r(x0)` for positive harmonic functions on
/// `B_2r(x0)`.
#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub h_emp: f64,
    pub samples: usize,
    /// Largest ratio among single boundary-vertex data.
    pub single_vertex_max: f64,
    /// Largest ratio among Green functions with far poles.
    pub green_max: f64,
}

/// Samples positive `L`-harmonic functions on `B_2r(x0)`: Dirichlet extensions
/// of random nonnegative data on the exterior boundary of the ball (half of
/// them concentrated on one vertex) and Green functions of `domain` with poles
/// farther than `2r`. Returns the largest `sup_{B_r} u / inf_{B_r} u`.
pub fn harnack_constant(
    op: &SchrodingerOperator,
    domain: &Domain,
    x0: usize,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<HarnackReport> {
    let g = op.graph();
    let big = Domain::ball(g, x0, 2.0 * r)?;
    if big.vertices().iter().any(|&x| !domain.contains(x)) {
        return Err(Error::input("B_2r(x0) must lie inside the computed domain"));
    }
    let small = g.ball(x0, r)?;
    let boundary = big.exterior_boundary(g);
    if boundary.is_empty() {
        return Err(Error::input("B_2r(x0) has no exterior boundary"));
    }
    let solver = GreenSolver::new(op, &big, 0.0)?;
    // Poisson kernels of the boundary vertices restricted to B_r
    let kernels: Vec<Vec<f64>> = boundary
        .iter()
        .map(|&l| {
            let mut f = vec![0.0; op.n()];
            f[l] = 1.0;
            let local = solver.solve_local(&op.boundary_coupling(&big, &f))?;
            let full = big.extend(&local, op.n());
            Ok(small.iter().map(|&x| full[x]).collect())
        })
        .collect::<Result<_>>()?;
    let ratio = |vals: &[f64]| -> Result<f64> {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo > 0.0) {
            return Err(Error::numerical(
                "generated harmonic function is not positive on B_r; the operator may not be coercive",
            ));
        }
        Ok(hi / lo)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut single_max: f64 = 1.0;
    let mut h_emp: f64 = 1.0;
    for t in 0..trials {
        if t % 2 == 0 {
            let l = rng.gen_range(0..boundary.len());
            let q = ratio(&kernels[l])?;
            single_max = single_max.max(q);
            h_emp = h_emp.max(q);
        } else {
            let weights: Vec<f64> = (0..boundary.len()).map(|_| rng.gen::<f64>()).collect();
            let vals: Vec<f64> = (0..small.len())
                .map(|i| kernels.iter().zip(&weights).map(|(k, w)| k[i] * w).sum())
                .collect();
            h_emp = h_emp.max(ratio(&vals)?);
        }
    }
    let dist = g.distances_from(x0);
    let far: Vec<usize> = domain
        .vertices()
        .iter()
        .copied()
        .filter(|&p| dist[p] > 2.0 * r + 1e-12)
        .collect();
    let mut green_max: f64 = 1.0;
    if !far.is_empty() {
        let dsolver = GreenSolver::new(op, domain, 0.0)?;
        let picks = 8.min(far.len());
        for k in 0..picks {
            let p = far[k * far.len() / picks];
            let col = dsolver.column(p)?;
            let vals: Vec<f64> = small.iter().map(|&x| col.values[x]).collect();
            green_max = green_max.max(ratio(&vals)?);
        }
    }
    Ok(HarnackReport {
        h_emp: h_emp.max(green_max),
        samples: trials + far.len().min(8),
        single_vertex_max: single_max,
        green_max,
    })
}
