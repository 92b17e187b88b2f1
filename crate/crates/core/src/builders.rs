//! Constructors for the benchmark graph families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric_graph::{Edge, MetricGraph};

/// Default cap on generated vertex counts.
pub const DEFAULT_VERTEX_CAP: usize = 2_000_000;

/// Rooted regular tree: every interior vertex has degree `branching`, the root
/// is vertex 0 and vertices are numbered breadth first. Unit edges and measure.
pub fn regular_tree(branching: usize, depth: usize, cap: usize) -> Result<MetricGraph> {
    if branching < 3 {
        return Err(Error::input("regular trees need branching >= 3"));
    }
    if depth < 1 {
        return Err(Error::input("tree depth must be >= 1"));
    }
    let mut count: usize = 1;
    let mut level: usize = branching;
    for _ in 0..depth {
        count = count
            .checked_add(level)
            .filter(|&c| c <= cap)
            .ok_or_else(|| {
                Error::Construction(format!(
                    "tree({branching},{depth}) exceeds the vertex cap {cap}"
                ))
            })?;
        level = level.saturating_mul(branching - 1);
    }
    let mut pairs = Vec::with_capacity(count - 1);
    let mut frontier = vec![0usize];
    let mut next_id = 1;
    for d in 0..depth {
        let children = if d == 0 { branching } else { branching - 1 };
        let mut next = Vec::with_capacity(frontier.len() * children);
        for &p in &frontier {
            for _ in 0..children {
                pairs.push((p, next_id));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    MetricGraph::unit(count, &pairs)
}

/// Path `0 - 1 - ... - (n-1)` with unit edges.
pub fn path_graph(n: usize) -> Result<MetricGraph> {
    let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    MetricGraph::unit(n, &pairs)
}

/// Cycle on `n >= 3` vertices with unit edges.
pub fn cycle_graph(n: usize) -> Result<MetricGraph> {
    if n < 3 {
        return Err(Error::input("cycles need at least 3 vertices"));
    }
    let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    MetricGraph::unit(n, &pairs)
}

/// `width x height` grid, vertex `(i, j)` is `j * width + i`.
pub fn grid_graph(width: usize, height: usize) -> Result<MetricGraph> {
    let mut pairs = Vec::new();
    for j in 0..height {
        for i in 0..width {
            let v = j * width + i;
            if i + 1 < width {
                pairs.push((v, v + 1));
            }
            if j + 1 < height {
                pairs.push((v, v + width));
            }
        }
    }
    MetricGraph::unit(width * height, &pairs)
}

/// Random connected graph: a random spanning tree plus `extra` random chords,
/// lengths uniform in `[min_len, max_len]`, unit measure.
pub fn random_connected_graph(
    n: usize,
    extra: usize,
    min_len: f64,
    max_len: f64,
    seed: u64,
) -> Result<MetricGraph> {
    if n == 0 {
        return Err(Error::input("need at least one vertex"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut present = std::collections::HashSet::new();
    let mut edges = Vec::new();
    let length = |rng: &mut ChaCha8Rng| {
        if max_len > min_len {
            rng.gen_range(min_len..max_len)
        } else {
            min_len
        }
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        present.insert((u, v));
        let l = length(&mut rng);
        edges.push(Edge { u, v, length: l });
    }
    let max_extra = n * (n - 1) / 2 - (n - 1);
    let mut added = 0;
    while added < extra.min(max_extra) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if present.insert(key) {
            let l = length(&mut rng);
            edges.push(Edge {
                u: key.0,
                v: key.1,
                length: l,
            });
            added += 1;
        }
    }
    MetricGraph::new(n, edges, vec![1.0; n])
}

/// Cartesian product with l1 edge structure: vertex `(a, b)` is `a * n2 + b`,
/// measure is the product measure.
pub fn product_graph(g1: &MetricGraph, g2: &MetricGraph, cap: usize) -> Result<MetricGraph> {
    let (n1, n2) = (g1.n(), g2.n());
    let n = n1.checked_mul(n2).filter(|&n| n <= cap).ok_or_else(|| {
        Error::Construction(format!(
            "product of {n1} and {n2} vertices exceeds the cap {cap}"
        ))
    })?;
    let mut edges = Vec::with_capacity(g1.edges().len() * n2 + g2.edges().len() * n1);
    for e in g1.edges() {
        for b in 0..n2 {
            edges.push(Edge {
                u: e.u * n2 + b,
                v: e.v * n2 + b,
                length: e.length,
            });
        }
    }
    for a in 0..n1 {
        for e in g2.edges() {
            edges.push(Edge {
                u: a * n2 + e.u,
                v: a * n2 + e.v,
                length: e.length,
            });
        }
    }
    let mut mu = Vec::with_capacity(n);
    for a in 0..n1 {
        for b in 0..n2 {
            mu.push(g1.mu()[a] * g2.mu()[b]);
        }
    }
    MetricGraph::new(n, edges, mu)
}

/// Finite metric space given by a distance matrix.
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    dist: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    /// Validates symmetry, zero diagonal, positivity and the triangle inequality.
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return Err(Error::input("metric space must have at least one point"));
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::input(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row[i] != 0.0 {
                return Err(Error::input(format!("nonzero diagonal at {i}")));
            }
        }
        let tol = 1e-12;
        for i in 0..n {
            for j in 0..n {
                if i != j && !(dist[i][j] > 0.0) {
                    return Err(Error::input(format!("distance {i}-{j} must be positive")));
                }
                if (dist[i][j] - dist[j][i]).abs() > tol {
                    return Err(Error::input(format!(
                        "distance matrix not symmetric at {i},{j}"
                    )));
                }
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + tol {
                        return Err(Error::input(format!(
                            "triangle inequality fails on {i},{j},{k}"
                        )));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { dist })
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// `n` equally spaced points on a circle with the arc metric scaled to
    /// diameter 1.
    pub fn circle(n: usize) -> Result<Self> {
        let dist = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let k = i.abs_diff(j);
                        let steps = k.min(n - k) as f64;
                        steps / (n / 2) as f64
                    })
                    .collect()
            })
            .collect();
        FiniteMetricSpace::new(dist)
    }

    /// Text format: first line `n`, then `n` rows of `n` reals.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let n: usize = first.trim().parse().map_err(|_| Error::Parse {
            line: 1,
            msg: "bad point count".into(),
        })?;
        let mut dist = Vec::with_capacity(n);
        for _ in 0..n {
            let (lineno, l) = lines.next().ok_or(Error::Parse {
                line: n + 1,
                msg: "missing rows".into(),
            })?;
            let row: std::result::Result<Vec<f64>, _> =
                l.split_whitespace().map(str::parse).collect();
            dist.push(row.map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: "bad number".into(),
            })?);
        }
        FiniteMetricSpace::new(dist)
    }
}

/// Output of the hyperbolic approximation.
#[derive(Debug, Clone)]
pub struct HyperbolicApproximation {
    pub graph: MetricGraph,
    /// Points of the metric space selected at each level.
    pub levels: Vec<Vec<usize>>,
    /// For every vertex: (level, point id).
    pub vertex_label: Vec<(usize, usize)>,
    pub basepoint: usize,
}

impl HyperbolicApproximation {
    /// Vertex representing point `p` at level `k`, if selected there.
    pub fn vertex_of(&self, k: usize, p: usize) -> Option<usize> {
        self.vertex_label.iter().position(|&l| l == (k, p))
    }

    /// Level-by-level vertices nearest to point `p` (first index on ties).
    pub fn ray_towards(&self, z: &FiniteMetricSpace, p: usize) -> Vec<usize> {
        self.levels
            .iter()
            .enumerate()
            .map(|(k, pts)| {
                let q = *pts
                    .iter()
                    .min_by(|&&a, &&b| z.dist(p, a).total_cmp(&z.dist(p, b)).then(a.cmp(&b)))
                    .expect("nonempty level");
                self.vertex_of(k, q).expect("selected point has a vertex")
            })
            .collect()
    }
}

/// Hyperbolic approximation of a finite metric space of diameter at most 1.
///
/// Level `k` is a greedy (by point id) set whose points are pairwise more than
/// `2^-k` apart and which leaves no point farther than `2^-k` from it. Points
/// of one level are joined when within `4 * 2^-k`, consecutive levels when
/// within `2 * 2^-k`. Unit lengths and measure.
pub fn hyperbolic_approximation(
    z: &FiniteMetricSpace,
    levels: usize,
) -> Result<HyperbolicApproximation> {
    if z.diameter() > 1.0 + 1e-12 {
        return Err(Error::input(
            "metric space must be normalised to diameter <= 1",
        ));
    }
    let mut level_sets = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let scale = 0.5f64.powi(k as i32);
        let mut chosen: Vec<usize> = Vec::new();
        for p in 0..z.len() {
            if chosen.iter().all(|&q| z.dist(p, q) > scale) {
                chosen.push(p);
            }
        }
        level_sets.push(chosen);
    }
    let mut vertex_label = Vec::new();
    let mut offsets = Vec::new();
    for (k, pts) in level_sets.iter().enumerate() {
        offsets.push(vertex_label.len());
        vertex_label.extend(pts.iter().map(|&p| (k, p)));
    }
    let mut pairs = Vec::new();
    for (k, pts) in level_sets.iter().enumerate() {
        let scale = 0.5f64.powi(k as i32);
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                if z.dist(pts[a], pts[b]) <= 4.0 * scale {
                    pairs.push((offsets[k] + a, offsets[k] + b));
                }
            }
        }
        if k + 1 < level_sets.len() {
            for (a, &p) in pts.iter().enumerate() {
                for (b, &q) in level_sets[k + 1].iter().enumerate() {
                    if z.dist(p, q) <= 2.0 * scale {
                        pairs.push((offsets[k] + a, offsets[k + 1] + b));
                    }
                }
            }
        }
    }
    let graph = MetricGraph::unit(vertex_label.len(), &pairs).map_err(|e| match e {
        Error::Input(msg) => Error::Construction(format!("hyperbolic approximation: {msg}")),
        other => other,
    })?;
    if level_sets[0].len() != 1 {
        return Err(Error::Construction(
            "level 0 must consist of a single point".into(),
        ));
    }
    Ok(HyperbolicApproximation {
        graph,
        levels: level_sets,
        vertex_label,
        basepoint: 0,
    })
}
