mod common;

use hyperpot::builders::{
    cycle_graph, path_graph, random_connected_graph, regular_tree, DEFAULT_VERTEX_CAP,
};
use hyperpot::{Edge, Error, MetricGraph};

#[test]
fn distances_match_full_relaxation_on_random_graph() {
    let g = random_connected_graph(20, 12, 0.5, 3.0, 11).unwrap();
    let oracle = common::bellman_ford_all_pairs(&g);
    for x in 0..g.n() {
        let row = g.distances_from(x);
        for y in 0..g.n() {
            assert!((row[y] - oracle[x][y]).abs() < 1e-12, "d({x},{y})");
            assert_eq!(g.distance(x, y).unwrap(), row[y]);
        }
        assert_eq!(row[x], 0.0);
    }
}

#[test]
fn distance_is_symmetric_and_satisfies_triangle_inequality() {
    let g = random_connected_graph(25, 20, 1.0, 2.0, 5).unwrap();
    let d = g.distance_matrix();
    for x in 0..g.n() {
        for y in 0..g.n() {
            assert!((d.get(x, y) - d.get(y, x)).abs() <= 1e-12 * d.get(x, y));
            for z in 0..g.n() {
                assert!(d.get(x, z) <= d.get(x, y) + d.get(y, z) + 1e-12);
            }
        }
    }
}

#[test]
fn unknown_vertex_is_an_input_error() {
    let g = path_graph(3).unwrap();
    assert!(matches!(g.distance(0, 7), Err(Error::Input(_))));
    assert!(matches!(g.geodesic(9, 0), Err(Error::Input(_))));
}

#[test]
fn geodesics() {
    let p = path_graph(3).unwrap();
    assert_eq!(p.distance(0, 2).unwrap(), 2.0);
    assert_eq!(p.geodesic(1, 1).unwrap(), vec![1]);

    let t = regular_tree(3, 4, DEFAULT_VERTEX_CAP).unwrap();
    let leaf = t.n() - 1;
    let path = t.geodesic(leaf, 1).unwrap();
    assert_eq!(path.len() as f64, t.distance(leaf, 1).unwrap() + 1.0);
    assert!(path
        .windows(2)
        .all(|w| t.neighbors(w[0]).iter().any(|&(v, _)| v == w[1])));

    // both 0-1-2 and 0-3-2 have length 2; the smaller predecessor wins
    let c = cycle_graph(4).unwrap();
    let candidates = [vec![0, 1, 2], vec![0, 3, 2]];
    let got = c.geodesic(0, 2).unwrap();
    assert!(candidates.contains(&got));
    assert_eq!(got, vec![0, 1, 2]);
}

#[test]
fn balls_and_measure() {
    let t = regular_tree(3, 5, DEFAULT_VERTEX_CAP).unwrap();
    assert_eq!(t.ball(0, 0.0).unwrap(), vec![0]);
    assert_eq!(t.measure_of(&t.ball(0, 0.0).unwrap()), 1.0);
    assert_eq!(t.ball(0, 2.0).unwrap().len(), 1 + 3 + 6);
    let weighted = t
        .with_measure((0..t.n()).map(|x| 1.0 + x as f64).collect())
        .unwrap();
    assert_eq!(weighted.measure_of(&[0, 1, 2]), 6.0);
}

#[test]
fn doubling_exponents() {
    let p = path_graph(30).unwrap();
    let v = p.doubling_exponent(1.0).unwrap();
    assert!(v <= 5f64.log2() + 1e-12, "{v}");
    assert!(v >= (5.0f64 / 3.0).log2() - 1e-12);

    // one ball covering everything gives ratio one
    let single = MetricGraph::new(1, vec![], vec![1.0]).unwrap();
    assert_eq!(single.doubling_exponent(3.0).unwrap(), 0.0);

    // radii step by half an edge; the worst ratio is |B_1| / |B_1/2| = 4 at an interior vertex
    let t = regular_tree(3, 6, DEFAULT_VERTEX_CAP).unwrap();
    assert_eq!(t.doubling_exponent(1.0).unwrap(), 2.0);
}

#[test]
fn rejects_bad_input() {
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
        3,
        vec![Edge {
            u: 0,
            v: 1,
            length: 1.0
        }],
        vec![1.0; 3]
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
}

#[test]
fn text_round_trip_preserves_distances() {
    let g = random_connected_graph(15, 6, 1.0, 2.5, 3).unwrap();
    let back = MetricGraph::from_text(&g.to_text()).unwrap();
    assert_eq!(back.n(), g.n());
    assert_eq!(
        common::bellman_ford_all_pairs(&back),
        common::bellman_ford_all_pairs(&g)
    );
}
