//! Weighted graphs as geodesic metric measure spaces.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Undirected edge with a positive length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

/// Connected graph with positive edge lengths and a positive vertex measure.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    edges: Vec<Edge>,
    mu: Vec<f64>,
    // (neighbour, edge index), sorted by neighbour
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// Relative slack used when deciding whether a path realises a distance.
const TIE_EPS: f64 = 1e-12;

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MetricGraph {
    /// Validates and builds a graph on vertices `0..n`.
    pub fn new(n: usize, edges: Vec<Edge>, mu: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("graph must have at least one vertex"));
        }
        if mu.len() != n {
            return Err(Error::input(format!(
                "measure has {} entries, expected {n}",
                mu.len()
            )));
        }
        if let Some((i, m)) = mu
            .iter()
            .enumerate()
            .find(|(_, m)| !(**m > 0.0) || !m.is_finite())
        {
            return Err(Error::input(format!(
                "measure of vertex {i} is {m}, must be positive"
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::input(format!(
                    "edge {k} references a vertex outside 0..{n}"
                )));
            }
            if e.u == e.v {
                return Err(Error::input(format!("self-loop at vertex {}", e.u)));
            }
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(Error::input(format!(
                    "edge {}-{} has nonpositive length {}",
                    e.u, e.v, e.length
                )));
            }
            adjacency[e.u].push((e.v, k));
            adjacency[e.v].push((e.u, k));
        }
        for (x, adj) in adjacency.iter_mut().enumerate() {
            adj.sort_unstable();
            if adj.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::input(format!("duplicate edge at vertex {x}")));
            }
        }
        let g = MetricGraph {
            edges,
            mu,
            adjacency,
        };
        let reached = g.component_of(0);
        if reached.iter().any(|r| !r) {
            return Err(Error::input("graph is not connected"));
        }
        Ok(g)
    }

    /// Unit-length edges and unit measure.
    pub fn unit(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let edges = pairs
            .iter()
            .map(|&(u, v)| Edge { u, v, length: 1.0 })
            .collect();
        MetricGraph::new(n, edges, vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Neighbours of `x` with the index of the connecting edge.
    pub fn neighbors(&self, x: usize) -> &[(usize, usize)] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.length)
            .fold(f64::INFINITY, f64::min)
    }

    /// Same graph with a different vertex measure.
    pub fn with_measure(&self, mu: Vec<f64>) -> Result<Self> {
        MetricGraph::new(self.n(), self.edges.clone(), mu)
    }

    /// Same graph with all edge lengths multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                length: e.length * factor,
                ..*e
            })
            .collect();
        MetricGraph::new(self.n(), edges, self.mu.clone())
    }

    fn check_vertex(&self, x: usize) -> Result<()> {
        if x >= self.n() {
            Err(Error::input(format!(
                "unknown vertex {x} (graph has {} vertices)",
                self.n()
            )))
        } else {
            Ok(())
        }
    }

    fn component_of(&self, x: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut stack = vec![x];
        seen[x] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Single-source shortest path lengths, optionally truncated at `cutoff`
    /// (vertices beyond it are reported as infinity).
    pub fn distances_from_within(&self, sources: &[usize], cutoff: f64) -> Vec<f64> {
        let n = self.n();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(HeapItem {
                dist: 0.0,
                vertex: s,
            });
        }
        while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(w, k) in &self.adjacency[v] {
                let nd = d + self.edges[k].length;
                if nd < dist[w] && nd <= cutoff {
                    dist[w] = nd;
                    heap.push(HeapItem {
                        dist: nd,
                        vertex: w,
                    });
                }
            }
        }
        dist
    }

    /// Shortest path lengths from `x` to every vertex.
    pub fn distances_from(&self, x: usize) -> Vec<f64> {
        self.distances_from_within(&[x], f64::INFINITY)
    }

    /// Distance to the nearest vertex of a set (infinity for an empty set).
    pub fn distances_to_set(&self, set: &[usize]) -> Vec<f64> {
        self.distances_from_within(set, f64::INFINITY)
    }

    pub fn distance(&self, x: usize, y: usize) -> Result<f64> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        Ok(self.distances_from(x)[y])
    }

    /// A shortest path from `x` to `y`. Among equally short paths, each vertex
    /// is reached from its smallest-index predecessor.
    pub fn geodesic(&self, x: usize, y: usize) -> Result<Vec<usize>> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        let dist = self.distances_from(x);
        Ok(self.geodesic_with(&dist, x, y))
    }

    /// Geodesic extraction given precomputed distances from `x`.
    pub fn geodesic_with(&self, dist_from_x: &[f64], x: usize, y: usize) -> Vec<usize> {
        let mut path = vec![y];
        let mut cur = y;
        while cur != x {
            let dc = dist_from_x[cur];
            let pred = self.adjacency[cur]
                .iter()
                .filter(|&&(p, k)| {
                    let via = dist_from_x[p] + self.edges[k].length;
                    dist_from_x[p] < dc && (via - dc).abs() <= TIE_EPS * dc.max(1.0)
                })
                .map(|&(p, _)| p)
                .min()
                .expect("predecessor on a shortest path");
            path.push(pred);
            cur = pred;
        }
        path.reverse();
        path
    }

    /// Closed ball `{y : d(x, y) <= r}` in increasing vertex order.
    pub fn ball(&self, x: usize, r: f64) -> Result<Vec<usize>> {
        self.check_vertex(x)?;
        if r < 0.0 {
            return Err(Error::input("ball radius must be nonnegative"));
        }
        let dist = self.distances_from_within(&[x], r * (1.0 + TIE_EPS) + TIE_EPS);
        Ok((0..self.n())
            .filter(|&y| dist[y] <= r * (1.0 + TIE_EPS) + TIE_EPS)
            .collect())
    }

    pub fn measure_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.mu[x]).sum()
    }

    /// Vertices outside `set` adjacent to it.
    pub fn outer_boundary(&self, set: &[usize]) -> Vec<usize> {
        let inside = self.indicator(set);
        let mut out: Vec<usize> = set
            .iter()
            .flat_map(|&x| self.adjacency[x].iter().map(|&(y, _)| y))
            .filter(|&y| !inside[y])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Vertices of `set` with a neighbour outside it.
    pub fn inner_boundary(&self, set: &[usize]) -> Vec<usize> {
        let inside = self.indicator(set);
        set.iter()
            .copied()
            .filter(|&x| self.adjacency[x].iter().any(|&(y, _)| !inside[y]))
            .collect()
    }

    /// Two-sided boundary: endpoints of edges leaving `set`.
    pub fn edge_boundary_vertices(&self, set: &[usize]) -> Vec<usize> {
        let mut b = self.inner_boundary(set);
        b.extend(self.outer_boundary(set));
        b.sort_unstable();
        b.dedup();
        b
    }

    pub fn indicator(&self, set: &[usize]) -> Vec<bool> {
        let mut ind = vec![false; self.n()];
        for &x in set {
            ind[x] = true;
        }
        ind
    }

    /// Doubling exponent: max over sampled centres and radii `r` on the grid of
    /// half the minimal edge length, `0 < r <= sigma`, of
    /// `log2(mu(B_2r(x)) / mu(B_r(x)))`.
    pub fn doubling_exponent(&self, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::input("sigma must be positive"));
        }
        let step = self.min_edge_length() / 2.0;
        let radii: Vec<f64> = if self.edges.is_empty() {
            vec![sigma]
        } else {
            (1..)
                .map(|k| k as f64 * step)
                .take_while(|&r| r <= sigma * (1.0 + TIE_EPS))
                .collect()
        };
        if radii.is_empty() {
            return Ok(0.0);
        }
        let centres = sample_indices(self.n(), 600);
        let worst = centres
            .par_iter()
            .map(|&x| {
                let dist =
                    self.distances_from_within(&[x], 2.0 * sigma * (1.0 + TIE_EPS) + TIE_EPS);
                let mut reached: Vec<(f64, f64)> = dist
                    .iter()
                    .zip(&self.mu)
                    .filter(|(d, _)| d.is_finite())
                    .map(|(d, m)| (*d, *m))
                    .collect();
                reached.sort_by(|a, b| a.0.total_cmp(&b.0));
                let measure_within = |r: f64| -> f64 {
                    let lim = r * (1.0 + TIE_EPS) + TIE_EPS;
                    reached
                        .iter()
                        .take_while(|(d, _)| *d <= lim)
                        .map(|(_, m)| m)
                        .sum()
                };
                radii
                    .iter()
                    .map(|&r| (measure_within(2.0 * r) / measure_within(r)).log2())
                    .fold(0.0f64, f64::max)
            })
            .reduce(|| 0.0f64, f64::max);
        Ok(worst)
    }

    /// Distances between every pair of `points` (rows in the order given).
    pub fn distance_matrix_on(&self, points: &[usize]) -> DistanceMatrix {
        let rows: Vec<Vec<f64>> = points
            .par_iter()
            .map(|&p| {
                let d = self.distances_from(p);
                points.iter().map(|&q| d[q]).collect()
            })
            .collect();
        DistanceMatrix {
            points: points.to_vec(),
            data: rows.concat(),
        }
    }

    /// All-pairs distance matrix.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let all: Vec<usize> = (0..self.n()).collect();
        self.distance_matrix_on(&all)
    }

    /// Serialises to the text graph format.
    pub fn to_text(&self) -> String {
        let mut s = format!("vertices {}\n", self.n());
        for e in &self.edges {
            let _ = writeln!(s, "edge {} {} {}", e.u, e.v, e.length);
        }
        for (x, m) in self.mu.iter().enumerate() {
            if *m != 1.0 {
                let _ = writeln!(s, "mu {x} {m}");
            }
        }
        s
    }

    /// Parses the text graph format: `vertices n`, `edge u v length`, `mu v value`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        let mut mu_entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let tok: Vec<&str> = line.split_whitespace().collect();
            match tok[0] {
                "vertices" if tok.len() == 2 => {
                    n = Some(tok[1].parse().map_err(|_| parse_err("bad vertex count"))?);
                }
                "edge" if tok.len() == 4 => {
                    let u = tok[1].parse().map_err(|_| parse_err("bad vertex id"))?;
                    let v = tok[2].parse().map_err(|_| parse_err("bad vertex id"))?;
                    let length = tok[3].parse().map_err(|_| parse_err("bad length"))?;
                    edges.push(Edge { u, v, length });
                }
                "mu" if tok.len() == 3 => {
                    let v: usize = tok[1].parse().map_err(|_| parse_err("bad vertex id"))?;
                    let m: f64 = tok[2].parse().map_err(|_| parse_err("bad measure"))?;
                    mu_entries.push((v, m, lineno + 1));
                }
                _ => return Err(parse_err("unrecognised line")),
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 1,
            msg: "missing `vertices <n>` header".into(),
        })?;
        let mut mu = vec![1.0; n];
        for (v, m, line) in mu_entries {
            if v >= n {
                return Err(Error::Parse {
                    line,
                    msg: format!("vertex {v} out of range"),
                });
            }
            mu[v] = m;
        }
        MetricGraph::new(n, edges, mu)
    }

    pub fn read(path: &Path) -> Result<Self> {
        MetricGraph::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Deterministic evenly spread subset of `0..n` of size at most `cap`.
pub fn sample_indices(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        (0..n).collect()
    } else {
        (0..cap).map(|k| k * n / cap).collect()
    }
}

/// Dense distance table over a list of vertices.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    points: Vec<usize>,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Vertex ids in row order.
    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Distance between the `i`-th and `j`-th listed points.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.points.len() + j]
    }
}

/// Bounded-geometry constants of a graph and operator; measured, not certified.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GeometryConstants {
    pub sigma: f64,
    pub doubling: f64,
    pub poincare: f64,
    pub dirichlet: f64,
    pub k_bound: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl GeometryConstants {
    /// Measures the purely geometric constants at scale `sigma`.
    ///
    /// The Poincaré estimate is `max 1/(r^2 lambda_2)` over sampled balls
    /// `B_r`, `r <= sigma`, with `lambda_2` the first nonzero Neumann eigenvalue
    /// of the unit-conductance Laplacian on the ball. The Dirichlet constant is
    /// `min r^2 lambda_1` with zero values outside the ball.
    pub fn measure(g: &MetricGraph, sigma: f64, samples: usize) -> Result<Self> {
        let doubling = g.doubling_exponent(sigma)?;
        let centres = sample_indices(g.n(), samples.max(1));
        let mut poincare = 0.0f64;
        let mut dirichlet = f64::INFINITY;
        for &x in &centres {
            let ball = g.ball(x, sigma)?;
            if ball.len() < 2 || ball.len() > 300 {
                continue;
            }
            let (lap_n, lap_d) = ball_laplacians(g, &ball);
            let mu: Vec<f64> = ball.iter().map(|&v| g.mu()[v]).collect();
            let s: Vec<f64> = mu.iter().map(|m| 1.0 / m.sqrt()).collect();
            let scaled = |m: &nalgebra::DMatrix<f64>| {
                let mut m = m.clone();
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        m[(i, j)] *= s[i] * s[j];
                    }
                }
                m
            };
            let mut ev_n: Vec<f64> = scaled(&lap_n)
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .collect();
            ev_n.sort_by(f64::total_cmp);
            let lambda2 = ev_n[1];
            if lambda2 > 1e-12 {
                poincare = poincare.max(1.0 / (sigma * sigma * lambda2));
            }
            let ev_d = scaled(&lap_d).symmetric_eigen().eigenvalues.min();
            dirichlet = dirichlet.min(sigma * sigma * ev_d);
        }
        Ok(GeometryConstants {
            sigma,
            doubling,
            poincare,
            dirichlet: if dirichlet.is_finite() {
                dirichlet
            } else {
                0.0
            },
            ..Default::default()
        })
    }
}

fn ball_laplacians(
    g: &MetricGraph,
    ball: &[usize],
) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
    let k = ball.len();
    let mut pos = std::collections::HashMap::new();
    for (i, &v) in ball.iter().enumerate() {
        pos.insert(v, i);
    }
    let mut neumann = nalgebra::DMatrix::zeros(k, k);
    let mut dirichlet = nalgebra::DMatrix::zeros(k, k);
    for (i, &v) in ball.iter().enumerate() {
        for &(w, _) in g.neighbors(v) {
            dirichlet[(i, i)] += 1.0;
            if let Some(&j) = pos.get(&w) {
                neumann[(i, i)] += 1.0;
                neumann[(i, j)] -= 1.0;
                dirichlet[(i, j)] -= 1.0;
            }
        }
    }
    (neumann, dirichlet)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> MetricGraph {
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        MetricGraph::unit(n, &pairs).unwrap()
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert!(MetricGraph::unit(3, &[(0, 1)]).is_err());
        assert!(MetricGraph::unit(2, &[(0, 0), (0, 1)]).is_err());
        assert!(MetricGraph::unit(2, &[(0, 1), (1, 0)]).is_err());
        assert!(MetricGraph::new(
            2,
            vec![Edge {
                u: 0,
                v: 1,
                length: 0.0
            }],
            vec![1.0; 2]
        )
        .is_err());
        assert!(MetricGraph::new(
            2,
            vec![Edge {
                u: 0,
                v: 1,
                length: 1.0
            }],
            vec![1.0, -1.0]
        )
        .is_err());
        assert!(MetricGraph::new(0, vec![], vec![]).is_err());
    }

    #[test]
    fn path_distances() {
        let g = path(3);
        assert_eq!(g.distance(0, 2).unwrap(), 2.0);
        assert_eq!(g.distance(1, 1).unwrap(), 0.0);
        assert!(g.distance(0, 7).is_err());
    }

    #[test]
    fn cycle_geodesic_tie_break() {
        let g = MetricGraph::unit(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(g.geodesic(0, 2).unwrap(), vec![0, 1, 2]);
        assert_eq!(g.geodesic(2, 2).unwrap(), vec![2]);
    }

    #[test]
    fn ball_and_measure() {
        let g = path(5);
        assert_eq!(g.ball(2, 0.0).unwrap(), vec![2]);
        assert_eq!(g.ball(2, 1.0).unwrap(), vec![1, 2, 3]);
        assert_eq!(g.measure_of(&g.ball(2, 1.0).unwrap()), 3.0);
    }

    #[test]
    fn path_doubling() {
        let g = path(21);
        let n = g.doubling_exponent(1.0).unwrap();
        assert!((n - 3f64.log2()).abs() < 1e-12);
        assert!(n <= 5f64.log2());
    }

    #[test]
    fn text_round_trip() {
        let g = MetricGraph::new(
            3,
            vec![
                Edge {
                    u: 0,
                    v: 1,
                    length: 1.5,
                },
                Edge {
                    u: 1,
                    v: 2,
                    length: 2.0,
                },
            ],
            vec![1.0, 2.0, 1.0],
        )
        .unwrap();
        let h = MetricGraph::from_text(&g.to_text()).unwrap();
        assert_eq!(h.edges(), g.edges());
        assert_eq!(h.mu(), g.mu());
        assert!(MetricGraph::from_text("edge 0 1 1").is_err());
    }

    #[test]
    fn boundaries() {
        let g = path(5);
        assert_eq!(g.outer_boundary(&[1, 2]), vec![0, 3]);
        assert_eq!(g.inner_boundary(&[1, 2]), vec![1, 2]);
        assert_eq!(g.edge_boundary_vertices(&[0, 1]), vec![1, 2]);
    }
}
