//! Grid samples of planar uniform domains, their quasi-hyperbolic unfoldings,
//! uniformity and Hardy checks, and the operator transfer to the unfolding.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::{boundary_quasi_metric, delta_four_point, BoundaryRay, ScanMode};
use crate::linalg::smallest_generalized_eigen;
use crate::metric_graph::{Edge, MetricGraph};
use crate::schrodinger::{dirichlet_solve, h_transform, Domain, SchrodingerOperator, SolveMethod};
use crate::stats::spearman;

/// Analytic domain shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DomainSpec {
    /// Open unit disc.
    Disc,
    /// `(0,1)^2`.
    Square,
    /// Unit disc minus the segment `[0,1) x {0}`.
    Slit,
    /// `(-1,1)^2` minus `[0,1) x (-1,0]`.
    LShape,
    /// Outward cusp `{0 < x < 1, |y| < x^q}`.
    Cusp(f64),
    /// `(0,1)` in one dimension.
    Interval,
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval => 1,
            _ => 2,
        }
    }

    fn inside(&self, p: [f64; 2]) -> bool {
        let [x, y] = p;
        match *self {
            DomainSpec::Cusp(q) => x > 0.0 && x < 1.0 && y.abs() < x.powf(q),
            _ => self.boundary_distance(p).0,
        }
    }

    /// `(inside, distance to the boundary)` for a point.
    fn boundary_distance(&self, p: [f64; 2]) -> (bool, f64) {
        let [x, y] = p;
        match *self {
            DomainSpec::Interval => (x > 0.0 && x < 1.0, x.min(1.0 - x)),
            DomainSpec::Disc => {
                let d = 1.0 - x.hypot(y);
                (d > 0.0, d)
            }
            DomainSpec::Square => {
                let d = x.min(1.0 - x).min(y).min(1.0 - y);
                (d > 0.0, d)
            }
            DomainSpec::Slit => {
                let disc = 1.0 - x.hypot(y);
                let slit = segment_distance(p, [0.0, 0.0], [1.0, 0.0]);
                (disc > 0.0 && slit > 0.0, disc.min(slit))
            }
            DomainSpec::LShape => {
                let inside = x > -1.0 && x < 1.0 && y > -1.0 && y < 1.0 && !(x >= 0.0 && y <= 0.0);
                let corners = [
                    [-1.0, -1.0],
                    [0.0, -1.0],
                    [0.0, 0.0],
                    [1.0, 0.0],
                    [1.0, 1.0],
                    [-1.0, 1.0],
                ];
                let d = (0..6)
                    .map(|i| segment_distance(p, corners[i], corners[(i + 1) % 6]))
                    .fold(f64::INFINITY, f64::min);
                (inside, d)
            }
            DomainSpec::Cusp(q) => {
                let inside = x > 0.0 && x < 1.0 && y.abs() < x.powf(q);
                let right = segment_distance(p, [1.0, -1.0], [1.0, 1.0]);
                (inside, right.min(power_curve_distance(x, y.abs(), q)))
            }
        }
    }

    fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            DomainSpec::Disc | DomainSpec::Slit | DomainSpec::LShape => ([-1.0, -1.0], [1.0, 1.0]),
            DomainSpec::Square => ([0.0, 0.0], [1.0, 1.0]),
            DomainSpec::Cusp(_) => ([0.0, -1.0], [1.0, 1.0]),
            DomainSpec::Interval => ([0.0, 0.0], [1.0, 0.0]),
        }
    }

    /// True if the open segment between two inside points leaves the domain.
    fn segment_leaves(&self, p: [f64; 2], q: [f64; 2]) -> bool {
        if let DomainSpec::Slit = self {
            if (p[1] > 0.0 && q[1] < 0.0) || (p[1] < 0.0 && q[1] > 0.0) {
                let t = p[1] / (p[1] - q[1]);
                let x = p[0] + t * (q[0] - p[0]);
                if (0.0..=1.0).contains(&x) {
                    return true;
                }
            }
        }
        (1..8).any(|k| {
            let t = k as f64 / 8.0;
            let m = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            !self.inside(m)
        })
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Disc => write!(f, "disc"),
            DomainSpec::Square => write!(f, "square"),
            DomainSpec::Slit => write!(f, "slit"),
            DomainSpec::LShape => write!(f, "lshape"),
            DomainSpec::Cusp(q) => write!(f, "cusp:{q}"),
            DomainSpec::Interval => write!(f, "interval"),
        }
    }
}

impl FromStr for DomainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "disc" => Ok(DomainSpec::Disc),
            "square" => Ok(DomainSpec::Square),
            "slit" => Ok(DomainSpec::Slit),
            "lshape" => Ok(DomainSpec::LShape),
            "interval" => Ok(DomainSpec::Interval),
            _ => {
                let q = s
                    .strip_prefix("cusp:")
                    .ok_or_else(|| Error::input(format!("unknown domain '{s}'")))?
                    .parse::<f64>()
                    .map_err(|e| Error::input(format!("bad cusp power in '{s}': {e}")))?;
                if !(q > 1.0) {
                    return Err(Error::input("cusp power must exceed 1"));
                }
                Ok(DomainSpec::Cusp(q))
            }
        }
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Distance from `(a, b)` to the curve `{(t, t^q) : 0 <= t <= 1}`.
fn power_curve_distance(a: f64, b: f64, q: f64) -> f64 {
    let f = |t: f64| (t - a).hypot(t.powf(q) - b);
    let a = a.clamp(0.0, 1.0);
    // the nearest curve point is no farther than the one straight above or below
    let reach = f(a);
    let (lo, hi) = ((a - reach).max(0.0), (a + reach).min(1.0));
    const SCAN: usize = 200;
    let at = |i: usize| lo + (hi - lo) * i as f64 / SCAN as f64;
    let mut best = 0;
    let mut best_val = f(lo);
    for i in 1..=SCAN {
        let v = f(at(i));
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let mut lo_t = at(best.saturating_sub(1));
    let mut hi_t = at((best + 1).min(SCAN));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi_t - phi * (hi_t - lo_t);
        let m2 = lo_t + phi * (hi_t - lo_t);
        if f(m1) < f(m2) {
            hi_t = m2;
        } else {
            lo_t = m1;
        }
    }
    best_val.min(f(0.5 * (lo_t + hi_t)))
}

/// Grid sample of a domain with its base graph.
#[derive(Debug, Clone)]
pub struct DomainSample {
    pub spec: DomainSpec,
    pub h: f64,
    pub points: Vec<[f64; 2]>,
    /// Boundary distance at each point.
    pub dist: Vec<f64>,
    /// Euclidean graph on the points.
    pub graph: Arc<MetricGraph>,
    /// Stencil weight of each graph edge.
    pub stencil: Vec<f64>,
    /// Stencil weight of neighbours that fell outside the sample.
    pub lost_stencil: Vec<f64>,
}

impl DomainSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Edges where `|d(x) - d(y)| > |x - y| + tol`.
    pub fn lipschitz_violations(&self, tol: f64) -> usize {
        self.graph
            .edges()
            .iter()
            .filter(|e| (self.dist[e.u] - self.dist[e.v]).abs() > e.length + tol)
            .count()
    }

    /// Sample point nearest to `p`.
    pub fn nearest(&self, p: [f64; 2]) -> usize {
        (0..self.len())
            .min_by(|&a, &b| {
                euclid(self.points[a], p)
                    .total_cmp(&euclid(self.points[b], p))
                    .then(a.cmp(&b))
            })
            .expect("sample is nonempty")
    }

    /// Base Schrödinger operator: grid Laplacian with the boundary as killing,
    /// `mu = h^dim` and potential `v`.
    pub fn base_operator(&self, potential: Vec<f64>) -> Result<SchrodingerOperator> {
        let mu = vec![self.h.powi(self.spec.dim() as i32); self.len()];
        SchrodingerOperator::with_coefficients(
            Arc::clone(&self.graph),
            self.stencil.clone(),
            potential,
            mu,
            self.lost_stencil.clone(),
        )
    }
}

fn euclid(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Grid points `h Z^dim` inside the domain with boundary distance above `h/2`,
/// joined to their 8 grid neighbours (2 in one dimension). Conductances are
/// the nine-point stencil (axis `2/3`, diagonal `1/6`) or `1/h` on the line.
pub fn sample_domain(spec: DomainSpec, h: f64) -> Result<DomainSample> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::input("grid step must lie in (0, 1)"));
    }
    let (lo, hi) = spec.bounding_box();
    let i_range = ((lo[0] / h).floor() as i64, (hi[0] / h).ceil() as i64);
    let j_range = ((lo[1] / h).floor() as i64, (hi[1] / h).ceil() as i64);
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut points = Vec::new();
    let mut dist = Vec::new();
    let mut keys = Vec::new();
    for j in j_range.0..=j_range.1 {
        for i in i_range.0..=i_range.1 {
            let p = [i as f64 * h, j as f64 * h];
            if !spec.inside(p) {
                continue;
            }
            let (_, d) = spec.boundary_distance(p);
            if d > h / 2.0 {
                index.insert((i, j), points.len());
                points.push(p);
                dist.push(d);
                keys.push((i, j));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Construction(format!(
            "no grid point of {spec} at h = {h}; use a smaller h"
        )));
    }
    let stencil: Vec<((i64, i64), f64)> = if spec.dim() == 1 {
        vec![((1, 0), 1.0 / h), ((-1, 0), 1.0 / h)]
    } else {
        let mut s = Vec::new();
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if (di, dj) != (0, 0) {
                    let w = if di == 0 || dj == 0 {
                        2.0 / 3.0
                    } else {
                        1.0 / 6.0
                    };
                    s.push(((di, dj), w));
                }
            }
        }
        s
    };
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    let mut lost = vec![0.0; points.len()];
    for (a, &(i, j)) in keys.iter().enumerate() {
        for &((di, dj), w) in &stencil {
            match index.get(&(i + di, j + dj)) {
                Some(&b) if !spec.segment_leaves(points[a], points[b]) => {
                    if a < b {
                        edges.push(Edge {
                            u: a,
                            v: b,
                            length: euclid(points[a], points[b]),
                        });
                        weights.push(w);
                    }
                }
                _ => lost[a] += w,
            }
        }
    }
    let n = points.len();
    let graph = MetricGraph::new(n, edges, vec![1.0; n]).map_err(|e| {
        Error::Construction(format!(
            "sample of {spec} at h = {h} is not a connected graph ({e}); use a smaller h"
        ))
    })?;
    Ok(DomainSample {
        spec,
        h,
        points,
        dist,
        graph: Arc::new(graph),
        stencil: weights,
        lost_stencil: lost,
    })
}

/// Same vertices and edges, lengths `|x-y| (1/d(x) + 1/d(y)) / 2` and measure
/// `h^dim / d^dim`.
pub fn quasi_hyperbolic_graph(ds: &DomainSample) -> Result<MetricGraph> {
    let edges = ds
        .graph
        .edges()
        .iter()
        .map(|e| Edge {
            u: e.u,
            v: e.v,
            length: e.length * 0.5 * (1.0 / ds.dist[e.u] + 1.0 / ds.dist[e.v]),
        })
        .collect();
    let dim = ds.spec.dim() as i32;
    let mu = ds
        .dist
        .iter()
        .map(|d| ds.h.powi(dim) / d.powi(dim))
        .collect();
    MetricGraph::new(ds.len(), edges, mu)
}

/// Uniform-curve constants of quasi-hyperbolic geodesics.
#[derive(Debug, Clone, Serialize)]
pub struct UniformityReport {
    /// Per pair: smallest `c` with `length <= c |x - y|` and the double-cone condition.
    pub per_pair: Vec<f64>,
    pub worst_c: f64,
    /// Fraction of pairs with constant at most the requested `c`.
    pub uniform_fraction: f64,
}

/// Smallest `c` for which the quasi-hyperbolic geodesic from `a` to `b` is a
/// `c`-uniform curve.
pub fn curve_uniformity(ds: &DomainSample, qh: &MetricGraph, a: usize, b: usize) -> Result<f64> {
    let path = qh.geodesic(a, b)?;
    let mut arc = vec![0.0; path.len()];
    for k in 1..path.len() {
        arc[k] = arc[k - 1] + euclid(ds.points[path[k - 1]], ds.points[path[k]]);
    }
    let total = *arc.last().unwrap();
    let chord = euclid(ds.points[a], ds.points[b]);
    let mut c = if chord > 0.0 { total / chord } else { 1.0 };
    for (k, &v) in path.iter().enumerate() {
        c = c.max(arc[k].min(total - arc[k]) / ds.dist[v]);
    }
    Ok(c)
}

pub fn check_uniformity(
    ds: &DomainSample,
    pairs: &[(usize, usize)],
    c: f64,
) -> Result<UniformityReport> {
    let qh = quasi_hyperbolic_graph(ds)?;
    let per_pair = pairs
        .iter()
        .map(|&(a, b)| curve_uniformity(ds, &qh, a, b))
        .collect::<Result<Vec<_>>>()?;
    let worst_c = per_pair.iter().copied().fold(1.0, f64::max);
    let uniform_fraction = if per_pair.is_empty() {
        1.0
    } else {
        per_pair.iter().filter(|&&v| v <= c).count() as f64 / per_pair.len() as f64
    };
    Ok(UniformityReport {
        per_pair,
        worst_c,
        uniform_fraction,
    })
}

/// Pairs of sample points near fixed physical locations, so that samples at
/// different resolutions are compared on the same geometry: random pairs
/// from a seeded stream plus, for a cusp, pairs deep in the tip.
pub fn uniformity_pairs(ds: &DomainSample, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let (lo, hi) = ds.spec.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    let mut attempts = 0;
    while pairs.len() < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let mut pick = || [rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1])];
        let (p, q) = (pick(), pick());
        if ds.spec.inside(p) && ds.spec.inside(q) {
            let (a, b) = (ds.nearest(p), ds.nearest(q));
            if a != b {
                pairs.push((a, b));
            }
        }
    }
    if let DomainSpec::Cusp(_) = ds.spec {
        pairs.extend(cusp_tip_pairs(ds));
    }
    pairs
}

/// Pairs on the cusp axis: the innermost sample point with points at two and
/// four times its abscissa.
pub fn cusp_tip_pairs(ds: &DomainSample) -> Vec<(usize, usize)> {
    let axis: Vec<usize> = (0..ds.len()).filter(|&i| ds.points[i][1] == 0.0).collect();
    let Some(&tip) = axis
        .iter()
        .min_by(|&&a, &&b| ds.points[a][0].total_cmp(&ds.points[b][0]))
    else {
        return Vec::new();
    };
    let x0 = ds.points[tip][0];
    [2.0, 4.0]
        .iter()
        .map(|f| ds.nearest([f * x0, 0.0]))
        .filter(|&b| b != tip)
        .map(|b| (tip, b))
        .collect()
}

/// Four-point δ of the unfolding at two resolutions.
#[derive(Debug, Clone, Serialize)]
pub struct UnfoldingDeltaReport {
    pub h: f64,
    pub delta: f64,
    pub delta_refined: f64,
    /// `delta_refined / delta`.
    pub ratio: f64,
}

pub fn unfolding_delta(ds: &DomainSample, mode: ScanMode) -> Result<f64> {
    delta_four_point(&quasi_hyperbolic_graph(ds)?, mode)
}

/// Sampled four-point δ of the unfolding at `h` and `h/2`.
pub fn check_unfolding_hyperbolic(
    spec: DomainSpec,
    h: f64,
    mode: ScanMode,
) -> Result<UnfoldingDeltaReport> {
    let delta = unfolding_delta(&sample_domain(spec, h)?, mode)?;
    let delta_refined = unfolding_delta(&sample_domain(spec, h / 2.0)?, mode)?;
    Ok(UnfoldingDeltaReport {
        h,
        delta,
        delta_refined,
        ratio: delta_refined / delta,
    })
}

/// Best constant in `E(u,u) >= C sum u^2 d^-2 mu`: the smallest generalized
/// eigenvalue of the form against the weighted mass.
pub fn hardy_constant(op: &SchrodingerOperator, ds: &DomainSample) -> Result<f64> {
    if op.n() != ds.len() {
        return Err(Error::input("operator does not live on this sample"));
    }
    let domain = Domain::all(op.graph());
    let a = op.matrix(&domain, 0.0);
    let weight: Vec<f64> = (0..ds.len())
        .map(|x| op.measure()[x] / (ds.dist[x] * ds.dist[x]))
        .collect();
    Ok(smallest_generalized_eigen(&a, &weight, 0.0, 1e-9)?.value)
}

/// Operator on the quasi-hyperbolic graph.
#[derive(Debug, Clone)]
pub struct UnfoldedOperator {
    pub op: SchrodingerOperator,
    /// Transfer weight `d^{-(dim-2)/2}`.
    pub transfer: Vec<f64>,
    /// `max |V| d^2` of the base potential.
    pub potential_weight: f64,
    pub warning: Option<String>,
}

/// Transfers a base operator to the unfolding: the form `E'(u,v) =
/// E(d^{-(dim-2)/2} u, d^{-(dim-2)/2} v)` with measure `d^-dim mu`. Warns when
/// `|V| d^2` exceeds `cap`.
pub fn unfold_operator(
    op: &SchrodingerOperator,
    ds: &DomainSample,
    dim: usize,
    cap: f64,
) -> Result<UnfoldedOperator> {
    if op.n() != ds.len() {
        return Err(Error::input("operator does not live on this sample"));
    }
    let exponent = -(dim as f64 - 2.0) / 2.0;
    let transfer: Vec<f64> = ds.dist.iter().map(|d| d.powf(exponent)).collect();
    let conjugated = h_transform(op, &transfer)?;
    let measure: Vec<f64> = (0..ds.len())
        .map(|x| op.measure()[x] / ds.dist[x].powi(dim as i32))
        .collect();
    let potential: Vec<f64> = (0..ds.len())
        .map(|x| conjugated.potential()[x] * conjugated.measure()[x] / measure[x])
        .collect();
    let qh = Arc::new(quasi_hyperbolic_graph(ds)?);
    let unfolded = SchrodingerOperator::with_coefficients(
        qh,
        conjugated.conductance().to_vec(),
        potential,
        measure,
        conjugated.killing().to_vec(),
    )?;
    let potential_weight = (0..ds.len())
        .map(|x| op.potential()[x].abs() * ds.dist[x] * ds.dist[x])
        .fold(0.0, f64::max);
    let warning = (potential_weight > cap)
        .then(|| format!("|V| d^2 reaches {potential_weight:.3e}, above the cap {cap:.3e}"));
    Ok(UnfoldedOperator {
        op: unfolded,
        transfer,
        potential_weight,
        warning,
    })
}

/// Solves `Lw = 0` on a random interior subdomain of the base with random
/// positive boundary data, maps `u = w / transfer` and returns
/// `max |mu' L' u| / max sum |terms|` on the subdomain.
pub fn harmonic_transfer_residual(
    base: &SchrodingerOperator,
    unfolded: &UnfoldedOperator,
    ds: &DomainSample,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centre = rng.gen_range(0..ds.len());
    let radius = ds.dist[centre] * rng.gen_range(0.5..0.9);
    let region = Domain::new(
        base.graph(),
        base.graph().ball(centre, radius.max(ds.h * 1.5))?,
    )?;
    let f: Vec<f64> = (0..ds.len()).map(|_| rng.gen_range(0.1..1.0)).collect();
    let w = dirichlet_solve(base, &region, &f, &vec![0.0; ds.len()], SolveMethod::Direct)?;
    let u: Vec<f64> = w
        .iter()
        .zip(&unfolded.transfer)
        .map(|(a, t)| a / t)
        .collect();
    let op = &unfolded.op;
    let lu = op.apply(&u);
    let g = op.graph();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &x in region.vertices() {
        worst = worst.max((lu[x] * op.measure()[x]).abs());
        let terms: f64 = g
            .neighbors(x)
            .iter()
            .map(|&(y, k)| op.conductance()[k] * (u[x].abs() + u[y].abs()))
            .sum::<f64>()
            + (op.killing()[x] + (op.potential()[x] * op.measure()[x]).abs()) * u[x].abs();
        scale = scale.max(terms);
    }
    Ok(worst / scale)
}

/// Rank agreement between boundary geometry of the unfolding and the
/// Euclidean boundary.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryCorrespondence {
    pub spearman: f64,
    pub rays: usize,
}

/// Rays in the disc unfolding from the centre to the outermost sample points
/// at `count` equally spaced angles; compares the boundary quasi-metric with
/// Euclidean boundary arc distance.
pub fn disc_boundary_correspondence(
    ds: &DomainSample,
    count: usize,
) -> Result<BoundaryCorrespondence> {
    if ds.spec != DomainSpec::Disc {
        return Err(Error::input(
            "boundary correspondence is implemented for the disc",
        ));
    }
    let qh = quasi_hyperbolic_graph(ds)?;
    let o = ds.nearest([0.0, 0.0]);
    let angles: Vec<f64> = (0..count)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / count as f64)
        .collect();
    let mut rays = Vec::with_capacity(count);
    for &t in &angles {
        let dir = [t.cos(), t.sin()];
        let tip = (0..ds.len())
            .max_by(|&a, &b| {
                let score = |i: usize| {
                    let p = ds.points[i];
                    let r = p[0].hypot(p[1]);
                    let along = p[0] * dir[0] + p[1] * dir[1];
                    r - 4.0 * (r - along)
                };
                score(a).total_cmp(&score(b)).then(b.cmp(&a))
            })
            .unwrap();
        rays.push(BoundaryRay::geodesic(&qh, o, tip)?);
    }
    let dq = boundary_quasi_metric(&qh, o, &rays)?;
    let mut ours = Vec::new();
    let mut arcs = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            let gap = (angles[j] - angles[i]).abs();
            arcs.push(gap.min(2.0 * std::f64::consts::PI - gap));
            ours.push(dq[i][j]);
        }
    }
    Ok(BoundaryCorrespondence {
        spearman: spearman(&ours, &arcs),
        rays: count,
    })
}

/// `max |E'(u,v) - E(t u, t v)|` relative to the form scale on random vectors.
pub fn transfer_identity_defect(
    base: &SchrodingerOperator,
    unfolded: &UnfoldedOperator,
    seed: u64,
    trials: usize,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = base.n();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tu: Vec<f64> = u
            .iter()
            .zip(&unfolded.transfer)
            .map(|(a, t)| a * t)
            .collect();
        let tv: Vec<f64> = v
            .iter()
            .zip(&unfolded.transfer)
            .map(|(a, t)| a * t)
            .collect();
        let lhs = unfolded.op.form(&u, &v);
        let rhs = base.form(&tu, &tv);
        let scale = base
            .form(&tu, &tu)
            .abs()
            .max(base.form(&tv, &tv).abs())
            .max(1e-300);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}

/// Smallest eigenvalue of the unfolded form in the unfolded measure.
pub fn unfolded_ground_state(unfolded: &UnfoldedOperator) -> Result<f64> {
    let op = &unfolded.op;
    let domain = Domain::all(op.graph());
    let a = op.matrix(&domain, 0.0);
    Ok(smallest_generalized_eigen(&a, op.measure(), 0.0, 1e-9)?.value)
}

/// Relative spread of a set of values, `max / min - 1`.
pub fn relative_spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi / lo - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_half_step() {
        let ds = sample_domain(DomainSpec::Square, 0.5).unwrap();
        assert_eq!(ds.points, vec![[0.5, 0.5]]);
        assert_eq!(ds.dist, vec![0.5]);
    }

    #[test]
    fn parse_specs() {
        assert_eq!(
            "cusp:2".parse::<DomainSpec>().unwrap(),
            DomainSpec::Cusp(2.0)
        );
        assert_eq!("lshape".parse::<DomainSpec>().unwrap(), DomainSpec::LShape);
        assert!("hexagon".parse::<DomainSpec>().is_err());
        assert_eq!(DomainSpec::Cusp(2.0).to_string(), "cusp:2");
    }

    #[test]
    fn curve_distance_on_parabola() {
        assert!(power_curve_distance(0.5, 0.25, 2.0) < 1e-9);
        assert!((power_curve_distance(0.0, 0.0, 2.0)).abs() < 1e-12);
        assert!((power_curve_distance(0.0, -0.5, 2.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn slit_edges_do_not_cross() {
        let ds = sample_domain(DomainSpec::Slit, 0.1).unwrap();
        for e in ds.graph.edges() {
            assert!(!DomainSpec::Slit.segment_leaves(ds.points[e.u], ds.points[e.v]));
        }
    }
}
