//! Gromov products, hyperbolicity constants, boundary quasi-metric, Φ-chains
//! and neighbourhood bases of boundary points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric_graph::{sample_indices, DistanceMatrix, MetricGraph};

/// Graphs up to this size get a full distance table for sampled scans.
const FULL_TABLE_LIMIT: usize = 2500;
/// Number of vertices sampled as quadruple pool on larger graphs.
const POOL_SIZE: usize = 1500;
/// Largest graph for which exhaustive quadruple scans are allowed.
pub const EXHAUSTIVE_LIMIT: usize = 60;

/// Gromov product `(x|y)_z`.
pub fn gromov_product(g: &MetricGraph, x: usize, y: usize, z: usize) -> Result<f64> {
    let dz = {
        g.distance(z, z)?;
        g.distances_from(z)
    };
    let dxy = g.distance(x, y)?;
    Ok(0.5 * (dz[x] + dz[y] - dxy))
}

/// Gromov product from a distance table (indices into the table).
#[inline]
pub fn gromov_product_in(d: &DistanceMatrix, x: usize, y: usize, z: usize) -> f64 {
    0.5 * (d.get(z, x) + d.get(z, y) - d.get(x, y))
}

/// How quadruples or triangles are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

/// Four-point hyperbolicity constant:
/// `max min{(x|w)_z, (w|y)_z} - (x|y)_z` over quadruples, clamped at 0.
pub fn delta_four_point(g: &MetricGraph, mode: ScanMode) -> Result<f64> {
    match mode {
        ScanMode::Exhaustive => {
            if g.n() > EXHAUSTIVE_LIMIT {
                return Err(Error::input(format!(
                    "exhaustive scan limited to {EXHAUSTIVE_LIMIT} vertices (graph has {})",
                    g.n()
                )));
            }
            let d = g.distance_matrix();
            Ok(four_point_exhaustive(&d))
        }
        ScanMode::Sampled { count, seed } => {
            let pool = if g.n() <= FULL_TABLE_LIMIT {
                (0..g.n()).collect()
            } else {
                sample_pool(g.n(), POOL_SIZE, seed)
            };
            let d = g.distance_matrix_on(&pool);
            Ok(four_point_sampled(&d, count, seed))
        }
    }
}

fn sample_pool(n: usize, size: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut pool: Vec<usize> = rand::seq::index::sample(&mut rng, n, size.min(n)).into_vec();
    pool.sort_unstable();
    pool
}

#[inline]
fn four_point_defect(d: &DistanceMatrix, x: usize, y: usize, z: usize, w: usize) -> f64 {
    let xw = gromov_product_in(d, x, w, z);
    let wy = gromov_product_in(d, w, y, z);
    let xy = gromov_product_in(d, x, y, z);
    xw.min(wy) - xy
}

/// Exhaustive four-point scan over a distance table.
pub fn four_point_exhaustive(d: &DistanceMatrix) -> f64 {
    let n = d.len();
    (0..n)
        .into_par_iter()
        .map(|z| {
            let mut best = 0.0f64;
            for x in 0..n {
                for y in 0..n {
                    for w in 0..n {
                        best = best.max(four_point_defect(d, x, y, z, w));
                    }
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Four-point scan over `count` random quadruples of table indices; the sample
/// list is generated before the (parallel) scan so the result is independent
/// of scheduling.
pub fn four_point_sampled(d: &DistanceMatrix, count: usize, seed: u64) -> f64 {
    let n = d.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quads: Vec<[u32; 4]> = (0..count)
        .map(|_| {
            [
                rng.gen_range(0..n) as u32,
                rng.gen_range(0..n) as u32,
                rng.gen_range(0..n) as u32,
                rng.gen_range(0..n) as u32,
            ]
        })
        .collect();
    quads
        .par_iter()
        .map(|q| {
            let [x, y, z, w] = q.map(|v| v as usize);
            four_point_defect(d, x, y, z, w)
        })
        .reduce(|| 0.0, f64::max)
}

/// Thin-triangle constant: over geodesic triangles, the largest distance from a
/// vertex on one side to the union of the other two sides.
pub fn delta_thin_triangles(g: &MetricGraph, mode: ScanMode) -> Result<f64> {
    let n = g.n();
    let triples: Vec<[usize; 3]> = match mode {
        ScanMode::Exhaustive => {
            if n > EXHAUSTIVE_LIMIT {
                return Err(Error::input(
                    "exhaustive triangle scan limited to small graphs",
                ));
            }
            let mut t = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        t.push([a, b, c]);
                    }
                }
            }
            t
        }
        ScanMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    [
                        rng.gen_range(0..n),
                        rng.gen_range(0..n),
                        rng.gen_range(0..n),
                    ]
                })
                .collect()
        }
    };
    let table = if n <= FULL_TABLE_LIMIT {
        Some(g.distance_matrix())
    } else {
        None
    };
    let value = triples
        .par_iter()
        .map(|&[a, b, c]| {
            let side = |p: usize, q: usize| -> Vec<usize> {
                match &table {
                    Some(t) => geodesic_from_table(g, t, p, q),
                    None => g.geodesic(p, q).expect("valid vertices"),
                }
            };
            let sides = [side(a, b), side(b, c), side(c, a)];
            let mut worst = 0.0f64;
            for i in 0..3 {
                let others: Vec<usize> = sides[(i + 1) % 3]
                    .iter()
                    .chain(&sides[(i + 2) % 3])
                    .copied()
                    .collect();
                for &p in &sides[i] {
                    let dp = match &table {
                        Some(t) => others
                            .iter()
                            .map(|&q| t.get(p, q))
                            .fold(f64::INFINITY, f64::min),
                        None => {
                            let dist = g.distances_from(p);
                            others
                                .iter()
                                .map(|&q| dist[q])
                                .fold(f64::INFINITY, f64::min)
                        }
                    };
                    worst = worst.max(dp);
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(value)
}

fn geodesic_from_table(g: &MetricGraph, t: &DistanceMatrix, x: usize, y: usize) -> Vec<usize> {
    // the full table is indexed by vertex id
    let row: Vec<f64> = (0..g.n()).map(|v| t.get(x, v)).collect();
    g.geodesic_with(&row, x, y)
}

/// Finite stand-in for a boundary point: a geodesic ray from `base`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryRay {
    pub base: usize,
    pub vertices: Vec<usize>,
}

impl BoundaryRay {
    /// Validates adjacency and strictly increasing distance from the base.
    pub fn new(g: &MetricGraph, vertices: Vec<usize>) -> Result<Self> {
        let Some(&base) = vertices.first() else {
            return Err(Error::input("empty ray"));
        };
        let dist = g.distances_from(base);
        for w in vertices.windows(2) {
            if !g.neighbors(w[0]).iter().any(|&(v, _)| v == w[1]) {
                return Err(Error::input(format!(
                    "ray vertices {} and {} are not adjacent",
                    w[0], w[1]
                )));
            }
            if !(dist[w[1]] > dist[w[0]]) {
                return Err(Error::input(
                    "ray distances from the base must increase strictly",
                ));
            }
        }
        Ok(BoundaryRay { base, vertices })
    }

    /// Geodesic ray from `base` to `tip`.
    pub fn geodesic(g: &MetricGraph, base: usize, tip: usize) -> Result<Self> {
        let path = g.geodesic(base, tip)?;
        BoundaryRay::new(g, path)
    }

    pub fn tip(&self) -> usize {
        *self.vertices.last().unwrap()
    }

    /// Number of edges.
    pub fn depth(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Ray vertex nearest to arclength parameter `t` from the base.
    pub fn vertex_at(&self, g: &MetricGraph, t: f64) -> usize {
        let dist = g.distances_from(self.base);
        *self
            .vertices
            .iter()
            .min_by(|&&a, &&b| (dist[a] - t).abs().total_cmp(&(dist[b] - t).abs()))
            .unwrap()
    }
}

/// Matrix of `exp(-(tip_i | tip_j)_o)` with zero diagonal.
pub fn boundary_quasi_metric(
    g: &MetricGraph,
    o: usize,
    rays: &[BoundaryRay],
) -> Result<Vec<Vec<f64>>> {
    for r in rays {
        if r.base != o {
            return Err(Error::input("all rays must start at the basepoint"));
        }
        if r.depth() < 2 {
            return Err(Error::input("rays must have depth at least 2"));
        }
    }
    let tips: Vec<usize> = rays.iter().map(BoundaryRay::tip).collect();
    let mut points = vec![o];
    points.extend(&tips);
    let d = g.distance_matrix_on(&points);
    let k = rays.len();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                out[i][j] = (-gromov_product_in(&d, i + 1, j + 1, 0)).exp();
            }
        }
    }
    Ok(out)
}

/// Target of a Φ-chain: a vertex or the tip of a ray.
#[derive(Debug, Clone, Copy)]
pub enum ChainTarget<'a> {
    Vertex(usize),
    Ray(&'a BoundaryRay),
}

/// Nested vertex sets with track points and a linear gauge `Φ(t) = alpha t + beta`.
#[derive(Debug, Clone, Serialize)]
pub struct PhiChain {
    /// Sorted vertex sets, decreasing.
    pub sets: Vec<Vec<usize>>,
    pub track_points: Vec<usize>,
    pub phi0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta_used: f64,
}

impl PhiChain {
    pub fn len(&self) -> usize {
        self.track_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.track_points.is_empty()
    }

    /// Chain traversed backwards: complements in reverse order, same track points.
    pub fn reversed(&self, g: &MetricGraph) -> PhiChain {
        let sets = self
            .sets
            .iter()
            .rev()
            .map(|s| {
                let ind = g.indicator(s);
                (0..g.n()).filter(|&x| !ind[x]).collect()
            })
            .collect();
        let mut track_points = self.track_points.clone();
        track_points.reverse();
        PhiChain {
            sets,
            track_points,
            ..self.clone()
        }
    }
}

/// Effective hyperbolicity constant: at least one half.
pub fn effective_delta(delta: f64) -> f64 {
    delta.max(0.5)
}

/// Φ-chain along the geodesic from `a` to `b`:
/// `U_i = {x : (x|b)_a > 4 i delta_eff}` with track points on the geodesic at
/// parameter `4 i delta_eff`, for `i = 0 .. floor(d(a,b) / (4 delta_eff)) - 1`.
pub fn phi_chain_along_geodesic(
    g: &MetricGraph,
    a: usize,
    b: ChainTarget<'_>,
    delta: f64,
) -> Result<PhiChain> {
    let tip = match b {
        ChainTarget::Vertex(v) => v,
        ChainTarget::Ray(r) => {
            if r.base != a {
                return Err(Error::input("ray must start at the chain origin"));
            }
            r.tip()
        }
    };
    let de = effective_delta(delta);
    let dist_a = {
        g.distance(a, tip)?;
        g.distances_from(a)
    };
    let total = dist_a[tip];
    if a == tip || total < 8.0 * de {
        return Err(Error::input(format!(
            "chain too short for 3G: d(a,b) = {total} < {}",
            8.0 * de
        )));
    }
    let path = match b {
        ChainTarget::Ray(r) => r.vertices.clone(),
        ChainTarget::Vertex(_) => g.geodesic_with(&dist_a, a, tip),
    };
    let count = (total / (4.0 * de)).floor() as usize;
    if count < 3 {
        return Err(Error::input("chain too short for 3G: fewer than 3 links"));
    }
    let dist_b = g.distances_from(tip);
    let product: Vec<f64> = (0..g.n())
        .map(|x| 0.5 * (dist_a[x] + total - dist_b[x]))
        .collect();
    let mut sets = Vec::with_capacity(count);
    let mut track_points = Vec::with_capacity(count);
    for i in 0..count {
        let t = 4.0 * i as f64 * de;
        sets.push((0..g.n()).filter(|&x| product[x] > t + 1e-12).collect());
        let x = *path
            .iter()
            .min_by(|&&p, &&q| (dist_a[p] - t).abs().total_cmp(&(dist_a[q] - t).abs()))
            .unwrap();
        track_points.push(x);
    }
    let spacings: Vec<f64> = track_points
        .windows(2)
        .map(|w| (dist_a[w[1]] - dist_a[w[0]]).abs())
        .collect();
    let phi0 = spacings.iter().copied().fold(0.0, f64::max) / 3.0;
    let mut chain = PhiChain {
        sets,
        track_points,
        phi0,
        alpha: 0.0,
        beta: phi0,
        delta_used: de,
    };
    let report = verify_phi_chain(g, &chain);
    chain.alpha = report.alpha.unwrap_or(0.0);
    chain.beta = report.beta.unwrap_or(phi0);
    Ok(chain)
}

/// Outcome of checking the Φ-chain conditions.
#[derive(Debug, Clone, Serialize)]
pub struct PhiChainReport {
    pub ok: bool,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub phi0: f64,
    pub violations: Vec<String>,
    /// (i, boundary vertex, t = d(x, x_i), d(x, ∂U_{i±1})) samples used for the fit.
    pub samples: Vec<(usize, usize, f64, f64)>,
}

/// Checks nesting, `x_i ∈ ∂U_i` and the separation condition, and fits the
/// gauge: `beta` is the smallest admissible `Φ_0` (a third of the largest track
/// spacing), `alpha` the largest slope with `d(x, ∂U_{i±1}) >= alpha t + beta`.
/// Boundaries are two-sided (endpoints of edges leaving the set).
pub fn verify_phi_chain(g: &MetricGraph, chain: &PhiChain) -> PhiChainReport {
    let mut violations = Vec::new();
    let m = chain.sets.len();
    if m < 2 || chain.track_points.len() != m {
        violations.push(format!(
            "need at least two sets with one track point each (sets {m}, track points {})",
            chain.track_points.len()
        ));
        return PhiChainReport {
            ok: false,
            alpha: None,
            beta: None,
            phi0: chain.phi0,
            violations,
            samples: Vec::new(),
        };
    }
    for i in 0..m - 1 {
        let outer = g.indicator(&chain.sets[i]);
        if chain.sets[i + 1].iter().any(|&x| !outer[x]) {
            violations.push(format!("U_{} is not contained in U_{}", i + 1, i));
        } else if chain.sets[i + 1].len() == chain.sets[i].len() {
            violations.push(format!("U_{} equals U_{}", i + 1, i));
        }
    }
    let boundaries: Vec<Vec<usize>> = chain
        .sets
        .iter()
        .map(|s| g.edge_boundary_vertices(s))
        .collect();
    for (i, b) in boundaries.iter().enumerate() {
        if b.binary_search(&chain.track_points[i]).is_err() {
            violations.push(format!(
                "track point {} not on the boundary of U_{i}",
                chain.track_points[i]
            ));
        }
    }
    let spacings: Vec<f64> = chain
        .track_points
        .windows(2)
        .map(|w| g.distance(w[0], w[1]).unwrap_or(f64::NAN))
        .collect();
    let max_sp = spacings.iter().copied().fold(0.0, f64::max);
    let min_sp = spacings.iter().copied().fold(f64::INFINITY, f64::min);
    let beta_lo = max_sp / 3.0;
    let mut beta_hi = min_sp;
    let mut samples = Vec::new();
    let dist_to_boundary: Vec<Vec<f64>> = boundaries
        .par_iter()
        .map(|b| {
            if b.is_empty() {
                vec![f64::INFINITY; g.n()]
            } else {
                g.distances_to_set(b)
            }
        })
        .collect();
    for i in 0..m {
        let dist_track = g.distances_from(chain.track_points[i]);
        for &x in &boundaries[i] {
            let t = dist_track[x];
            for j in [i.wrapping_sub(1), i + 1] {
                if j < m {
                    let dx = dist_to_boundary[j][x];
                    samples.push((i, x, t, dx));
                    if t == 0.0 {
                        beta_hi = beta_hi.min(dx);
                    }
                }
            }
        }
    }
    let beta = beta_lo;
    let mut alpha = f64::INFINITY;
    for &(i, x, t, dx) in &samples {
        if dx < beta - 1e-12 && t == 0.0 {
            violations.push(format!(
                "boundary vertex {x} of U_{i} too close to a neighbouring boundary"
            ));
        }
        if t > 0.0 {
            alpha = alpha.min((dx - beta) / t);
        }
    }
    let beta_ok = beta_lo > 0.0 && beta_lo <= beta_hi + 1e-12;
    if !beta_ok {
        violations.push(format!("no admissible Φ_0: need {beta_lo} <= {beta_hi}"));
    }
    let alpha = if alpha.is_finite() { Some(alpha) } else { None };
    if let Some(a) = alpha {
        if a <= 0.0 {
            violations.push(format!(
                "separation does not grow with distance (slope {a})"
            ));
        }
    }
    let ok = violations.is_empty();
    PhiChainReport {
        ok,
        alpha,
        beta: if beta_ok { Some(beta) } else { None },
        phi0: chain.phi0,
        violations,
        samples,
    }
}

/// Nested neighbourhoods of the boundary point of a ray.
#[derive(Debug, Clone, Serialize)]
pub struct NeighborhoodBasis {
    /// `sets[k]` is `N_{k+1} = {x : (x|tip)_o >= c_delta (k+1)}`.
    pub sets: Vec<Vec<usize>>,
    /// Hub of `(N_i, N_{i+1})`: ray vertex at parameter `c_delta (i + 1/2)`.
    pub hubs: Vec<usize>,
    pub c_delta: f64,
    pub phi0: f64,
}

/// Neighbourhood basis `N_i = {x : (x|tip)_o >= c_delta i}`, `i = 1..=levels`,
/// with `c_delta = 4 delta_eff`. The threshold is closed so that on a tree `N_i`
/// is the full subtree rooted at the ray vertex of depth `c_delta i`.
pub fn phi_neighborhood_basis(
    g: &MetricGraph,
    ray: &BoundaryRay,
    levels: usize,
    delta: f64,
) -> Result<NeighborhoodBasis> {
    let de = effective_delta(delta);
    let c_delta = 4.0 * de;
    let o = ray.base;
    let dist_o = g.distances_from(o);
    let tip = ray.tip();
    let depth = dist_o[tip];
    if depth < c_delta * levels as f64 - 1e-12 {
        return Err(Error::input(format!(
            "ray depth {depth} is below c_delta * levels = {}",
            c_delta * levels as f64
        )));
    }
    let dist_tip = g.distances_from(tip);
    let product: Vec<f64> = (0..g.n())
        .map(|x| 0.5 * (dist_o[x] + depth - dist_tip[x]))
        .collect();
    let sets = (1..=levels)
        .map(|i| {
            let th = c_delta * i as f64;
            (0..g.n()).filter(|&x| product[x] >= th - 1e-12).collect()
        })
        .collect();
    let hubs = (1..=levels)
        .map(|i| ray.vertex_at(g, c_delta * (i as f64 + 0.5)))
        .collect();
    Ok(NeighborhoodBasis {
        sets,
        hubs,
        c_delta,
        phi0: de * 4.0 / 3.0,
    })
}

impl NeighborhoodBasis {
    /// Checks `B_{Φ0}(hub) ⊂ N_i \ N_{i+1}` (open ball) for consecutive pairs.
    pub fn hub_balls_separate(&self, g: &MetricGraph) -> bool {
        (0..self.sets.len().saturating_sub(1)).all(|k| {
            let outer = g.indicator(&self.sets[k]);
            let inner = g.indicator(&self.sets[k + 1]);
            let d = g.distances_from(self.hubs[k]);
            (0..g.n())
                .filter(|&x| d[x] < self.phi0)
                .all(|x| outer[x] && !inner[x])
        })
    }
}

/// Vertices spread evenly over a graph, used as default sample sets.
pub fn spread_vertices(g: &MetricGraph, count: usize) -> Vec<usize> {
    sample_indices(g.n(), count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{cycle_graph, regular_tree, DEFAULT_VERTEX_CAP};

    #[test]
    fn gromov_product_identities() {
        let g = cycle_graph(7).unwrap();
        assert_eq!(
            gromov_product(&g, 2, 2, 5).unwrap(),
            g.distance(2, 5).unwrap()
        );
        assert_eq!(gromov_product(&g, 2, 4, 2).unwrap(), 0.0);
    }

    #[test]
    fn tree_is_zero_hyperbolic() {
        let g = regular_tree(3, 3, DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(delta_four_point(&g, ScanMode::Exhaustive).unwrap(), 0.0);
        assert_eq!(
            delta_thin_triangles(
                &g,
                ScanMode::Sampled {
                    count: 500,
                    seed: 1
                }
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn cycle_is_not_a_tree() {
        let g = cycle_graph(12).unwrap();
        assert!(delta_four_point(&g, ScanMode::Exhaustive).unwrap() >= 1.0);
        assert!(delta_thin_triangles(&g, ScanMode::Exhaustive).unwrap() > 0.0);
    }

    #[test]
    fn tree_chain_gauge() {
        let g = regular_tree(3, 10, DEFAULT_VERTEX_CAP).unwrap();
        let leaf = g.n() - 1;
        let chain = phi_chain_along_geodesic(&g, 0, ChainTarget::Vertex(leaf), 0.0).unwrap();
        let rep = verify_phi_chain(&g, &chain);
        assert!(rep.ok, "{:?}", rep.violations);
        assert!((rep.beta.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((rep.alpha.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(phi_chain_along_geodesic(&g, 3, ChainTarget::Vertex(3), 0.0).is_err());
    }
}
