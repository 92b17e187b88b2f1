//! Reduits (obstacle problems), Martin kernels and their convergence along
//! rays, the L-vanishing test and finite Martin decompositions.
//!
//! A finite domain stands in for the whole space; its exterior boundary layer
//! plays the role of the boundary at infinity. Harmonic functions on the
//! domain are determined by their values on that layer, so the greatest
//! harmonic minorant of a superharmonic function is the Dirichlet extension of
//! its boundary trace and potentials are exactly the functions with zero trace.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::BoundaryRay;
use crate::linalg::{max_abs, nnls, CsrMatrix, SpdSolver};
use crate::schrodinger::{Domain, GreenSolver, GreenTable, SchrodingerOperator};

/// Relaxation factor of the projected SOR sweeps.
const PSOR_OMEGA: f64 = 1.5;
const PSOR_TOL: f64 = 1e-10;
const PSOR_MAX_SWEEPS: usize = 200_000;

/// Smallest `v >= obstacle` on the domain with `L v >= 0`, `v = exterior`
/// outside and `(Lv)(v - obstacle) = 0`. Projected SOR in fixed vertex order,
/// followed by an exact solve on the detected free set.
pub fn obstacle_solve(
    op: &SchrodingerOperator,
    domain: &Domain,
    obstacle: &[f64],
    exterior: &[f64],
) -> Result<Vec<f64>> {
    op.ensure_coercive(domain, 0.0)?;
    let a = op.matrix(domain, 0.0);
    let b = op.boundary_coupling(domain, exterior);
    let psi = domain.restrict(obstacle);
    let scale = max_abs(&psi)
        .max(max_abs(&domain.restrict(exterior)))
        .max(1e-300);
    let diag = a.diagonal();
    let mut v: Vec<f64> = psi.iter().map(|p| p.max(0.0)).collect();
    let mut converged = false;
    for _ in 0..PSOR_MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for i in 0..v.len() {
            let mut s = b[i];
            for (j, aij) in a.row(i) {
                if j != i {
                    s -= aij * v[j];
                }
            }
            let gs = s / diag[i];
            let new = (v[i] + PSOR_OMEGA * (gs - v[i])).max(psi[i]);
            change = change.max((new - v[i]).abs());
            v[i] = new;
        }
        if change < PSOR_TOL * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical {
            msg: "projected SOR did not converge".into(),
            dump: v,
        });
    }
    let v = polish_free_set(&a, &b, &psi, v, scale)?;
    let mut full = exterior.to_vec();
    for (&x, val) in domain.vertices().iter().zip(&v) {
        full[x] = *val;
    }
    Ok(full)
}

/// Re-solves the linear system on the free set `{v > obstacle}` exactly and
/// keeps the result if it is feasible.
fn polish_free_set(
    a: &CsrMatrix,
    b: &[f64],
    psi: &[f64],
    v: Vec<f64>,
    scale: f64,
) -> Result<Vec<f64>> {
    let n = v.len();
    let contact: Vec<bool> = (0..n).map(|i| v[i] - psi[i] <= 1e-8 * scale).collect();
    let free: Vec<usize> = (0..n).filter(|&i| !contact[i]).collect();
    if free.is_empty() {
        return Ok(psi.to_vec());
    }
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        pos[i] = k;
    }
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; free.len()];
    for (k, &i) in free.iter().enumerate() {
        rhs[k] = b[i];
        for (j, aij) in a.row(i) {
            if contact[j] {
                rhs[k] -= aij * psi[j];
            } else {
                trip.push((k, pos[j], aij));
            }
        }
    }
    let sub = CsrMatrix::from_triplets(free.len(), trip);
    let sol = SpdSolver::new(sub)?.solve(&rhs)?;
    let mut w = psi.to_vec();
    for (k, &i) in free.iter().enumerate() {
        w[i] = sol[k];
    }
    let tol = 1e-9 * scale;
    let residual: Vec<f64> = a.mul_vec(&w).iter().zip(b).map(|(x, y)| x - y).collect();
    let feasible = (0..n).all(|i| w[i] >= psi[i] - tol && residual[i] >= -tol);
    Ok(if feasible { w } else { v })
}

/// Errors unless `u >= 0` and `Lu >= -tol` on the domain.
fn check_superharmonic(op: &SchrodingerOperator, domain: &Domain, u: &[f64]) -> Result<()> {
    let lu = op.apply(u);
    let scale = max_abs(u).max(1e-300);
    for &x in domain.vertices() {
        if u[x] < -1e-12 * scale {
            return Err(Error::input(format!("u is negative at vertex {x}")));
        }
        let diag_scale = (op.graph().degree(x) as f64 + 1.0) * scale / op.measure()[x];
        if lu[x] < -1e-9 * diag_scale {
            return Err(Error::input(format!(
                "u is not superharmonic at vertex {x} (Lu = {:e})",
                lu[x]
            )));
        }
    }
    Ok(())
}

/// Reduit `R_u^A` on the domain with zero exterior values.
pub fn reduit(
    op: &SchrodingerOperator,
    domain: &Domain,
    u: &[f64],
    a_set: &[usize],
) -> Result<Vec<f64>> {
    if a_set.iter().any(|&x| !domain.contains(x)) {
        return Err(Error::input("the obstacle set must lie inside the domain"));
    }
    check_superharmonic(op, domain, u)?;
    let mut obstacle = vec![0.0; op.n()];
    for &x in a_set {
        obstacle[x] = u[x];
    }
    obstacle_solve(op, domain, &obstacle, &vec![0.0; op.n()])
}

/// Largest violations of the reduit calculus on randomised instances.
#[derive(Debug, Clone, Serialize)]
pub struct ReduitReport {
    pub instances: usize,
    pub harmonic_off_set: f64,
    pub equality_on_set: f64,
    pub scaling: f64,
    pub additivity: f64,
    /// `min (R^A + R^B - R^{A∪B})`, nonnegative when subadditivity holds.
    pub subadditivity_slack: f64,
    pub symmetry: f64,
    pub ok: bool,
}

/// Checks on random Green potentials `u, v` and sets `A, B`: `L R = 0` off `A`,
/// `R = u` on `A`, `R_{cu} = c R_u`, `R_{u+v} = R_u + R_v`,
/// `R^{A∪B} <= R^A + R^B` and `R^A_{G(.,y)}(x) = R^A_{G(.,x)}(y)`.
pub fn reduit_properties_check(
    op: &SchrodingerOperator,
    domain: &Domain,
    seed: u64,
    instances: usize,
) -> Result<ReduitReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solver = GreenSolver::new(op, domain, 0.0)?;
    let verts = domain.vertices().to_vec();
    let n = op.n();
    let mut rep = ReduitReport {
        instances,
        harmonic_off_set: 0.0,
        equality_on_set: 0.0,
        scaling: 0.0,
        additivity: 0.0,
        subadditivity_slack: f64::INFINITY,
        symmetry: 0.0,
        ok: false,
    };
    let random_potential = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
        let mut u = vec![0.0; n];
        for _ in 0..3 {
            let y = verts[rng.gen_range(0..verts.len())];
            let c: f64 = rng.gen_range(0.2..1.0);
            let col = solver.column(y)?;
            for (ui, gi) in u.iter_mut().zip(&col.values) {
                *ui += c * gi;
            }
        }
        Ok(u)
    };
    let random_set = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        let k = (verts.len() / 3).max(1);
        let mut s: Vec<usize> = verts.choose_multiple(rng, k).copied().collect();
        s.sort_unstable();
        s
    };
    let diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    for _ in 0..instances {
        let u = random_potential(&mut rng)?;
        let v = random_potential(&mut rng)?;
        let a = random_set(&mut rng);
        let b = random_set(&mut rng);
        let ru = reduit(op, domain, &u, &a)?;
        let scale = max_abs(&u);

        let lr = op.apply(&ru);
        let in_a = op.graph().indicator(&a);
        for &x in &verts {
            if in_a[x] {
                rep.equality_on_set = rep.equality_on_set.max((ru[x] - u[x]).abs() / scale);
            } else {
                let s = (op.graph().degree(x) as f64 + 1.0) * scale / op.measure()[x];
                rep.harmonic_off_set = rep.harmonic_off_set.max(lr[x].abs() / s);
            }
        }

        let c: f64 = rng.gen_range(0.1..3.0);
        let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
        let rcu = reduit(op, domain, &cu, &a)?;
        let scaled: Vec<f64> = ru.iter().map(|x| c * x).collect();
        rep.scaling = rep.scaling.max(diff(&rcu, &scaled) / (c * scale));
        let zero: Vec<f64> = u.iter().map(|_| 0.0).collect();
        let r0 = reduit(op, domain, &zero, &a)?;
        rep.scaling = rep.scaling.max(max_abs(&r0) / scale);

        let rv = reduit(op, domain, &v, &a)?;
        let uv: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x + y).collect();
        let ruv = reduit(op, domain, &uv, &a)?;
        let sum: Vec<f64> = ru.iter().zip(&rv).map(|(x, y)| x + y).collect();
        rep.additivity = rep.additivity.max(diff(&ruv, &sum) / max_abs(&uv));

        let mut ab = a.clone();
        ab.extend(&b);
        ab.sort_unstable();
        ab.dedup();
        let rab = reduit(op, domain, &u, &ab)?;
        let rb = reduit(op, domain, &u, &b)?;
        for &x in &verts {
            rep.subadditivity_slack = rep
                .subadditivity_slack
                .min((ru[x] + rb[x] - rab[x]) / scale);
        }

        let x = verts[rng.gen_range(0..verts.len())];
        let y = verts[rng.gen_range(0..verts.len())];
        let gy = solver.column(y)?.values;
        let gx = solver.column(x)?.values;
        let rgy = reduit(op, domain, &gy, &a)?;
        let rgx = reduit(op, domain, &gx, &a)?;
        let s = gx[x].max(gy[y]);
        rep.symmetry = rep.symmetry.max((rgy[x] - rgx[y]).abs() / s);
    }
    let tol = 1e-8;
    rep.ok = rep.harmonic_off_set <= tol
        && rep.equality_on_set <= tol
        && rep.scaling <= tol
        && rep.additivity <= tol
        && rep.subadditivity_slack >= -tol
        && rep.symmetry <= tol;
    Ok(rep)
}

/// Where a Martin kernel has its pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelPole {
    /// Interior pole: `G(., x) / G(o, x)`.
    Vertex(usize),
    /// Exterior boundary vertex: normalised Poisson kernel.
    Leaf(usize),
}

/// Normalised kernel with value 1 at the base.
#[derive(Debug, Clone, Serialize)]
pub struct MartinKernel {
    pub base: usize,
    pub pole: KernelPole,
    pub values: Vec<f64>,
}

impl MartinKernel {
    /// Normalises a Green table at `o`.
    pub fn from_green(table: &GreenTable, o: usize) -> Result<Self> {
        let at_o = table.values[o];
        if !(at_o > 0.0) {
            return Err(Error::input(format!("G(o, pole) = {at_o} is not positive")));
        }
        Ok(MartinKernel {
            base: o,
            pole: KernelPole::Vertex(table.pole),
            values: table.values.iter().map(|g| g / at_o).collect(),
        })
    }

    /// Kernel for another basepoint: `K / K(o')`.
    pub fn rebase(&self, o: usize) -> Result<Self> {
        let at = self.values[o];
        if !(at > 0.0) {
            return Err(Error::input("new basepoint has zero kernel value"));
        }
        Ok(MartinKernel {
            base: o,
            pole: self.pole,
            values: self.values.iter().map(|v| v / at).collect(),
        })
    }
}

/// `K_x = G(., x) / G(o, x)` for the Dirichlet Green function of the domain.
pub fn martin_kernel(
    op: &SchrodingerOperator,
    domain: &Domain,
    o: usize,
    pole: usize,
) -> Result<MartinKernel> {
    if !domain.contains(o) {
        return Err(Error::input("basepoint must lie in the domain"));
    }
    let table = crate::schrodinger::green_dirichlet(op, domain, pole)?;
    MartinKernel::from_green(&table, o)
}

/// Normalised Poisson kernels of every exterior boundary vertex of the domain:
/// `P(., l)` is the Dirichlet extension of the indicator of `l`, divided by `P(o, l)`.
pub fn leaf_kernels(
    op: &SchrodingerOperator,
    domain: &Domain,
    o: usize,
) -> Result<Vec<MartinKernel>> {
    if !domain.contains(o) {
        return Err(Error::input("basepoint must lie in the domain"));
    }
    let solver = GreenSolver::new(op, domain, 0.0)?;
    let leaves = domain.exterior_boundary(op.graph());
    let n = op.n();
    leaves
        .par_iter()
        .map(|&l| {
            let mut f = vec![0.0; n];
            f[l] = 1.0;
            let local = solver.solve_local(&op.boundary_coupling(domain, &f))?;
            let mut values = domain.extend(&local, n);
            values[l] = 1.0;
            let at_o = values[o];
            if !(at_o > 0.0) {
                return Err(Error::numerical("Poisson kernel vanishes at the basepoint"));
            }
            for v in values.iter_mut() {
                *v /= at_o;
            }
            Ok(MartinKernel {
                base: o,
                pole: KernelPole::Leaf(l),
                values,
            })
        })
        .collect()
}

/// Successive kernel differences along a ray.
#[derive(Debug, Clone, Serialize)]
pub struct MartinConvergenceReport {
    pub depths: Vec<usize>,
    /// `sup_{B_window(o)} |K_{d_{k+1}} - K_{d_k}|`.
    pub sup_differences: Vec<f64>,
    pub monotone: bool,
    pub cauchy: bool,
    pub final_difference: f64,
    pub window: f64,
    pub tol: f64,
}

/// Martin kernels at the ray vertices of the given depths, each computed on the
/// exhaustion ball `B_{min(depth + margin, r_max)}(o)`, compared on `B_window(o)`.
/// Cauchy means strictly decreasing differences (up to `1e-13`) ending below `tol`.
#[allow(clippy::too_many_arguments)]
pub fn martin_convergence(
    op: &SchrodingerOperator,
    ray: &BoundaryRay,
    depths: &[usize],
    window: f64,
    margin: f64,
    r_max: f64,
    tol: f64,
) -> Result<MartinConvergenceReport> {
    let o = ray.base;
    let g = op.graph();
    if let Some(&d) = depths.iter().find(|&&d| d > ray.depth()) {
        return Err(Error::input(format!(
            "ray depth {} is below requested depth {d}",
            ray.depth()
        )));
    }
    let win = g.ball(o, window)?;
    let kernels: Vec<MartinKernel> = depths
        .iter()
        .map(|&d| {
            let radius = (d as f64 + margin).min(r_max);
            let domain = Domain::ball(g, o, radius)?;
            martin_kernel(op, &domain, o, ray.vertices[d])
        })
        .collect::<Result<_>>()?;
    let diffs: Vec<f64> = kernels
        .windows(2)
        .map(|k| {
            win.iter()
                .map(|&x| (k[1].values[x] - k[0].values[x]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let monotone = diffs
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] < 1e-13 && w[1] < 1e-13));
    let final_difference = diffs.last().copied().unwrap_or(0.0);
    Ok(MartinConvergenceReport {
        depths: depths.to_vec(),
        sup_differences: diffs,
        monotone,
        cauchy: monotone && final_difference < tol,
        final_difference,
        window,
        tol,
    })
}

/// Result of the L-vanishing test.
#[derive(Debug, Clone, Serialize)]
pub struct LVanishingReport {
    pub vanishing: bool,
    /// Greatest harmonic minorant of the reduit at `o`, relative to `u(o)`, per radius.
    pub scores: Vec<f64>,
    pub score: f64,
}

/// Threshold below which the harmonic part counts as zero.
pub const VANISHING_TOL: f64 = 1e-8;

/// Tests whether `u` is L-vanishing on `set`: for each radius `R` the reduit
/// `p_R = R_u^{set ∩ B_R(o)}` is computed on the closed domain (domain plus
/// exterior layer, where the obstacle acts on the boundary values), then its
/// greatest harmonic minorant by the decreasing iteration
/// `h_{k+1} = Dirichlet extension of min(h_k, p_R)`. Vanishing iff the minorant
/// at `o` is below [`VANISHING_TOL`] times `u(o)` at the last radius.
pub fn l_vanishing_test(
    op: &SchrodingerOperator,
    domain: &Domain,
    o: usize,
    u: &[f64],
    set: &[usize],
    radii: &[f64],
) -> Result<LVanishingReport> {
    let g = op.graph();
    let n = op.n();
    if !(u[o] > 0.0) {
        return Err(Error::input("u must be positive at the basepoint"));
    }
    check_superharmonic(op, domain, u)?;
    let exterior = domain.exterior_boundary(g);
    let dist = g.distances_from(o);
    let in_set = g.indicator(set);
    let solver = GreenSolver::new(op, domain, 0.0)?;
    let mut scores = Vec::with_capacity(radii.len());
    for &r in radii {
        let active = |x: usize| in_set[x] && dist[x] <= r + 1e-12;
        let mut obstacle = vec![0.0; n];
        for &x in domain.vertices() {
            if active(x) {
                obstacle[x] = u[x];
            }
        }
        let mut boundary = vec![0.0; n];
        for &x in &exterior {
            if active(x) {
                boundary[x] = u[x];
            }
        }
        let p = obstacle_solve(op, domain, &obstacle, &boundary)?;
        let mut h = p.clone();
        for _ in 0..10_000 {
            let mut data = vec![0.0; n];
            for &x in &exterior {
                data[x] = h[x].min(p[x]);
            }
            let local = solver.solve_local(&op.boundary_coupling(domain, &data))?;
            let mut next = data.clone();
            for (&x, v) in domain.vertices().iter().zip(&local) {
                next[x] = *v;
            }
            let change = next
                .iter()
                .zip(&h)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            h = next;
            if change <= 1e-10 * max_abs(&p).max(1e-300) {
                break;
            }
        }
        scores.push((h[o] / u[o]).max(0.0));
    }
    let score = scores.last().copied().unwrap_or(0.0);
    Ok(LVanishingReport {
        vanishing: score <= VANISHING_TOL,
        scores,
        score,
    })
}

/// Indices of the kernels that are L-vanishing on the complement of every
/// set in `neighborhoods`, i.e. whose pole is the boundary point the
/// neighbourhoods shrink to.
pub fn kernels_vanishing_outside(
    op: &SchrodingerOperator,
    domain: &Domain,
    o: usize,
    kernels: &[MartinKernel],
    neighborhoods: &[Vec<usize>],
    radii: &[f64],
) -> Result<Vec<usize>> {
    let g = op.graph();
    let complements: Vec<Vec<usize>> = neighborhoods
        .iter()
        .map(|set| {
            let inside = g.indicator(set);
            (0..g.n()).filter(|&x| !inside[x]).collect()
        })
        .collect();
    let verdicts = kernels
        .par_iter()
        .map(|k| {
            for set in &complements {
                if !l_vanishing_test(op, domain, o, &k.values, set, radii)?.vanishing {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(verdicts
        .iter()
        .enumerate()
        .filter(|(_, &v)| v)
        .map(|(i, _)| i)
        .collect())
}

/// Nonnegative leaf weights of a harmonic function.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    /// (leaf vertex, weight) for every exterior boundary vertex.
    pub weights: Vec<(usize, f64)>,
    /// `max |sum w K - u| / max |u|` on the closed domain.
    pub residual: f64,
    pub ok: bool,
}

/// Decomposes a positive harmonic `u` on the domain into leaf kernels by
/// nonnegative least squares on the domain and its exterior layer.
pub fn martin_decompose_tree(
    op: &SchrodingerOperator,
    domain: &Domain,
    o: usize,
    u: &[f64],
) -> Result<DecompositionReport> {
    let kernels = leaf_kernels(op, domain, o)?;
    let mut rows: Vec<usize> = domain.vertices().to_vec();
    rows.extend(domain.exterior_boundary(op.graph()));
    let a = DMatrix::from_fn(rows.len(), kernels.len(), |i, j| kernels[j].values[rows[i]]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&x| u[x]));
    let w = nnls(&a, &b, 50 * kernels.len() + 100)?;
    let fit = &a * &w;
    let residual = (fit - &b).amax() / b.amax().max(1e-300);
    let weights = kernels
        .iter()
        .zip(w.iter())
        .map(|(k, &wt)| match k.pole {
            KernelPole::Leaf(l) | KernelPole::Vertex(l) => (l, wt),
        })
        .collect();
    Ok(DecompositionReport {
        weights,
        residual,
        ok: residual <= 1e-6,
    })
}
