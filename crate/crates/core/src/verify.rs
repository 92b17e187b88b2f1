//! Empirical constants of the Green-function inequalities: 3G along chains,
//! growth recovery, exponential decay, the relative maximum principle,
//! boundary Harnack and rough additivity of the Green metric.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::{phi_neighborhood_basis, BoundaryRay, PhiChain};
use crate::schrodinger::{Domain, GreenSolver, SchrodingerOperator};
use crate::stats::linear_fit;

/// Green values below this are treated as lost to truncation.
const GREEN_FLOOR: f64 = 1e-250;

fn ball_measure(op: &SchrodingerOperator, x: usize, sigma: f64) -> Result<f64> {
    let ball = op.graph().ball(x, sigma)?;
    Ok(ball.iter().map(|&v| op.measure()[v]).sum())
}

/// Threshold below which entries of a Green column are not trusted.
fn floor_of(solver: &GreenSolver, col: &[f64]) -> f64 {
    let top = col.iter().copied().fold(0.0, f64::max);
    GREEN_FLOOR.max(solver.relative_resolution() * top)
}

fn checked(value: f64, floor: f64, what: &str) -> Result<f64> {
    if value > floor {
        Ok(value)
    } else {
        Err(Error::Numerical {
            msg: format!("{what} is below solver resolution ({value:e}); increase exhaustion"),
            dump: vec![value],
        })
    }
}

/// 3G ratios along a chain.
#[derive(Debug, Clone, Serialize)]
pub struct ThreeGReport {
    /// `(j, rho_j)` with `rho_j = G(x_m,x_1) / (mu(B_sigma(x_j)) G(x_m,x_j) G(x_j,x_1))`.
    pub ratios: Vec<(usize, f64)>,
    pub c_lower: f64,
    pub c_upper: f64,
    /// `max(1 / min rho, max rho)`.
    pub c: f64,
}

/// 3G constant along track points `x_1, ..., x_m`: ratios over middle indices
/// whose distance to both ends exceeds `separation`.
pub fn check_3g(
    op: &SchrodingerOperator,
    domain: &Domain,
    track: &[usize],
    sigma: f64,
    separation: f64,
) -> Result<ThreeGReport> {
    if track.len() < 3 {
        return Err(Error::input("3G needs at least three track points"));
    }
    let solver = GreenSolver::new(op, domain, 0.0)?;
    let first = track[0];
    let last = *track.last().unwrap();
    let g_first = solver.column(first)?.values;
    let g_last = solver.column(last)?.values;
    let d_first = op.graph().distances_from(first);
    let d_last = op.graph().distances_from(last);
    let (f_first, f_last) = (floor_of(&solver, &g_first), floor_of(&solver, &g_last));
    let end_to_end = checked(g_last[first], f_last, "G(x_m, x_1)")?;
    let mut ratios = Vec::new();
    for (j, &xj) in track.iter().enumerate().take(track.len() - 1).skip(1) {
        if d_first[xj] <= separation || d_last[xj] <= separation {
            continue;
        }
        let mu_b = ball_measure(op, xj, sigma)?;
        let a = checked(g_last[xj], f_last, "G(x_m, x_j)")?;
        let b = checked(g_first[xj], f_first, "G(x_j, x_1)")?;
        ratios.push((j, end_to_end / (mu_b * a * b)));
    }
    if ratios.is_empty() {
        return Err(Error::input(
            "no middle track point satisfies the separation",
        ));
    }
    let c_lower = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let c_upper = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ThreeGReport {
        ratios,
        c_lower,
        c_upper,
        c: (1.0 / c_lower).max(c_upper),
    })
}

/// 3G check on the track points of a Φ-chain.
pub fn check_3g_chain(
    op: &SchrodingerOperator,
    domain: &Domain,
    chain: &PhiChain,
    sigma: f64,
    separation: f64,
) -> Result<ThreeGReport> {
    check_3g(op, domain, &chain.track_points, sigma, separation)
}

/// Growth-recovery ratios per chain index.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    /// Max over `z ∈ ∂U_{j+1}` of
    /// `G(z,x_1) / (mu(B_sigma(x_j)) G_{-eps}(z,x_j) G(x_{j+1},x_1))`, per `j`.
    pub per_index_max: Vec<f64>,
    pub max_ratio: f64,
    /// `max_j <= 1.5 * (value at the first index)`.
    pub flat: bool,
}

/// Growth recovery along a chain with resolvent shift `eps`.
pub fn check_growth_recovery(
    op: &SchrodingerOperator,
    eps: f64,
    domain: &Domain,
    chain: &PhiChain,
    sigma: f64,
) -> Result<GrowthReport> {
    let m = chain.track_points.len();
    if m < 2 || chain.sets.len() != m {
        return Err(Error::input("chain needs matching sets and track points"));
    }
    let g = op.graph();
    let solver = GreenSolver::new(op, domain, 0.0)?;
    let shifted = GreenSolver::new(op, domain, eps)?;
    let x1 = chain.track_points[0];
    let g1 = solver.column(x1)?.values;
    let f1 = floor_of(&solver, &g1);
    let mut per_index_max = Vec::with_capacity(m - 1);
    for j in 0..m - 1 {
        let xj = chain.track_points[j];
        let gj = shifted.column(xj)?.values;
        let fj = floor_of(&shifted, &gj);
        let mu_b = ball_measure(op, xj, sigma)?;
        let next = checked(g1[chain.track_points[j + 1]], f1, "G(x_{j+1}, x_1)")?;
        let boundary = g.edge_boundary_vertices(&chain.sets[j + 1]);
        let mut worst: f64 = 0.0;
        for z in boundary.into_iter().filter(|&z| domain.contains(z)) {
            if gj[z] > fj && g1[z] > f1 {
                let denom = mu_b * gj[z] * next;
                worst = worst.max(g1[z] / denom);
            }
        }
        per_index_max.push(worst);
    }
    let max_ratio = per_index_max.iter().copied().fold(0.0, f64::max);
    Ok(GrowthReport {
        flat: max_ratio <= 1.5 * per_index_max[0],
        per_index_max,
        max_ratio,
    })
}

/// Log-linear fit of Green values against distance.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub alpha2: f64,
    pub ln_b: f64,
    pub r2: f64,
    /// Decay rate of `G / G_{-eps}` when a shift was given.
    pub alpha1: Option<f64>,
    pub pairs: usize,
}

/// Fits `ln G(x, y) = ln B - alpha2 d(x, y)` over pairs with `d > 2 sigma`, and
/// optionally `ln (G / G_{-eps}) = c - alpha1 d`.
pub fn check_exponential_decay(
    op: &SchrodingerOperator,
    domain: &Domain,
    pairs: &[(usize, usize)],
    sigma: f64,
    eps: Option<f64>,
) -> Result<DecayReport> {
    let g = op.graph();
    let mut by_pole: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(x, y) in pairs {
        by_pole.entry(y).or_default().push(x);
    }
    let solver = GreenSolver::new(op, domain, 0.0)?;
    let shifted = match eps {
        Some(e) => Some(GreenSolver::new(op, domain, e)?),
        None => None,
    };
    let mut ds = Vec::new();
    let mut lg = Vec::new();
    let mut lratio = Vec::new();
    for (&y, xs) in &by_pole {
        let dist = g.distances_from(y);
        let col = solver.column(y)?.values;
        let floor = floor_of(&solver, &col);
        let scol = match &shifted {
            Some(s) => {
                let c = s.column(y)?.values;
                let f = floor_of(s, &c);
                Some((c, f))
            }
            None => None,
        };
        for &x in xs {
            if dist[x] <= 2.0 * sigma || !(col[x] > floor) {
                continue;
            }
            if scol.as_ref().is_some_and(|(c, f)| !(c[x] > *f)) {
                continue;
            }
            ds.push(dist[x]);
            lg.push(col[x].ln());
            if let Some((s, _)) = &scol {
                lratio.push((col[x] / s[x]).ln());
            }
        }
    }
    if ds.len() < 10 {
        return Err(Error::input(format!(
            "need at least 10 pairs with d > 2 sigma, got {}",
            ds.len()
        )));
    }
    let fit = linear_fit(&ds, &lg);
    let alpha1 = if shifted.is_some() {
        Some(-linear_fit(&ds, &lratio).slope)
    } else {
        None
    };
    Ok(DecayReport {
        alpha2: -fit.slope,
        ln_b: fit.intercept,
        r2: fit.r2,
        alpha1,
        pairs: ds.len(),
    })
}

/// Relative maximum principle measurement.
#[derive(Debug, Clone, Serialize)]
pub struct RmpReport {
    pub eta: f64,
    /// `u(x) / ubar(x)`.
    pub ratio: f64,
    pub ok: bool,
}

/// Compares `u = G(., p)` with `ubar = s G_{-eps}(., p)`, where `s` is the
/// smallest scale with `ubar >= u` on the boundary of `B_r(x)`, and returns
/// `eta = (u(x) / ubar(x))^{1/r}`.
pub fn check_relative_max_principle(
    op: &SchrodingerOperator,
    domain: &Domain,
    eps: f64,
    x: usize,
    r: f64,
    pole: usize,
) -> Result<RmpReport> {
    let g = op.graph();
    if g.distance(x, pole)? <= r {
        return Err(Error::input("pole must lie outside B_r(x)"));
    }
    let ball = g.ball(x, r)?;
    let sphere = g.inner_boundary(&ball);
    let u = GreenSolver::new(op, domain, 0.0)?.column(pole)?.values;
    let shifted = GreenSolver::new(op, domain, eps)?;
    let v = shifted.column(pole)?.values;
    let fv = floor_of(&shifted, &v);
    let mut scale: f64 = 0.0;
    for &z in &sphere {
        let vz = checked(v[z], fv, "G_{-eps} on the sphere")?;
        scale = scale.max(u[z] / vz);
    }
    let ratio = u[x] / (scale * checked(v[x], fv, "G_{-eps}(x, p)")?);
    let eta = ratio.powf(1.0 / r);
    Ok(RmpReport {
        eta,
        ratio,
        ok: eta < 1.0,
    })
}

/// Boundary Harnack measurement.
#[derive(Debug, Clone, Serialize)]
pub struct BhiReport {
    pub hb_emp: f64,
    pub points: usize,
    pub level: usize,
}

/// `max_{x,y ∈ N_{i+1}} u(x) v(y) / (u(y) v(x))` for `u = G(., p1)`, `v = G(., p2)`,
/// where `N` is the neighbourhood basis of the ray and the poles lie outside `N_i`.
#[allow(clippy::too_many_arguments)]
pub fn check_boundary_harnack(
    op: &SchrodingerOperator,
    domain: &Domain,
    ray: &BoundaryRay,
    i: usize,
    p1: usize,
    p2: usize,
    delta: f64,
) -> Result<BhiReport> {
    let g = op.graph();
    let basis = phi_neighborhood_basis(g, ray, i + 1, delta)?;
    let ni = g.indicator(&basis.sets[i - 1]);
    if ni[p1] || ni[p2] {
        return Err(Error::input("poles must lie outside N_i"));
    }
    let region: Vec<usize> = basis.sets[i]
        .iter()
        .copied()
        .filter(|&x| domain.contains(x))
        .collect();
    if region.is_empty() {
        return Err(Error::input("N_{i+1} is empty inside the domain"));
    }
    let solver = GreenSolver::new(op, domain, 0.0)?;
    let u = solver.column(p1)?.values;
    let v = solver.column(p2)?.values;
    let (fu, fv) = (floor_of(&solver, &u), floor_of(&solver, &v));
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &x in &region {
        let q = checked(u[x], fu, "u on N_{i+1}")? / checked(v[x], fv, "v on N_{i+1}")?;
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok(BhiReport {
        hb_emp: hi / lo,
        points: region.len(),
        level: i,
    })
}

/// Green-metric additivity defects.
#[derive(Debug, Clone, Serialize)]
pub struct GreenMetricReport {
    /// `|d_G(x,z) - d_G(x,y) - d_G(y,z)|` per aligned triple.
    pub aligned_defects: Vec<f64>,
    pub max_aligned_defect: f64,
    /// `max (d_G(x,z) - d_G(x,y) - d_G(y,z))` over general triples.
    pub max_triangle_excess: f64,
}

/// `d_G(x, y) = -ln(G(x, y) sqrt(mu(B_sigma(x)) mu(B_sigma(y))))`.
pub fn green_metric_check(
    op: &SchrodingerOperator,
    domain: &Domain,
    sigma: f64,
    aligned: &[(usize, usize, usize)],
    general: &[(usize, usize, usize)],
) -> Result<GreenMetricReport> {
    let solver = GreenSolver::new(op, domain, 0.0)?;
    let mut columns: BTreeMap<usize, (Vec<f64>, f64)> = BTreeMap::new();
    let mut balls: BTreeMap<usize, f64> = BTreeMap::new();
    let mut dg = |x: usize, y: usize| -> Result<f64> {
        if let std::collections::btree_map::Entry::Vacant(slot) = columns.entry(y) {
            let col = solver.column(y)?.values;
            let floor = floor_of(&solver, &col);
            slot.insert((col, floor));
        }
        for v in [x, y] {
            if let std::collections::btree_map::Entry::Vacant(slot) = balls.entry(v) {
                slot.insert(ball_measure(op, v, sigma)?);
            }
        }
        let (col, floor) = &columns[&y];
        let gxy = checked(col[x], *floor, "G on a triple")?;
        Ok(-(gxy * (balls[&x] * balls[&y]).sqrt()).ln())
    };
    let mut aligned_defects = Vec::with_capacity(aligned.len());
    for &(x, y, z) in aligned {
        let d = dg(x, z)? - dg(x, y)? - dg(y, z)?;
        aligned_defects.push(d.abs());
    }
    let mut excess = f64::NEG_INFINITY;
    for &(x, y, z) in general {
        excess = excess.max(dg(x, z)? - dg(x, y)? - dg(y, z)?);
    }
    Ok(GreenMetricReport {
        max_aligned_defect: aligned_defects.iter().copied().fold(0.0, f64::max),
        aligned_defects,
        max_triangle_excess: excess,
    })
}

/// Random triples `(x, y, z)` of domain vertices with `y` on the geodesic from
/// `x` to `z` and both `d(x, y)` and `d(y, z)` above `separation`.
pub fn aligned_triples(
    op: &SchrodingerOperator,
    domain: &Domain,
    separation: f64,
    count: usize,
    seed: u64,
) -> Vec<(usize, usize, usize)> {
    let g = op.graph();
    let verts = domain.vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 50 * count {
        attempts += 1;
        let x = verts[rng.gen_range(0..verts.len())];
        let z = verts[rng.gen_range(0..verts.len())];
        let dx = g.distances_from(x);
        if dx[z] <= 2.0 * separation {
            continue;
        }
        let path = g.geodesic_with(&dx, x, z);
        let candidates: Vec<usize> = path
            .iter()
            .copied()
            .filter(|&y| dx[y] > separation && dx[z] - dx[y] > separation && domain.contains(y))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let y = candidates[rng.gen_range(0..candidates.len())];
        out.push((x, y, z));
    }
    out
}
