mod common;

use hyperpot::builders::{
    cycle_graph, grid_graph, hyperbolic_approximation, path_graph, product_graph, regular_tree,
    FiniteMetricSpace, DEFAULT_VERTEX_CAP,
};
use hyperpot::hyperbolic::{delta_four_point, gromov_product, ScanMode};

#[test]
fn regular_tree_counts_and_degrees() {
    assert_eq!(regular_tree(3, 1, DEFAULT_VERTEX_CAP).unwrap().n(), 4);
    assert_eq!(regular_tree(3, 2, DEFAULT_VERTEX_CAP).unwrap().n(), 10);
    let t = regular_tree(4, 3, DEFAULT_VERTEX_CAP).unwrap();
    assert_eq!(t.n(), 1 + 4 + 12 + 36);
    assert_eq!(t.degree(0), 4);
    let interior = (0..t.n()).filter(|&x| t.degree(x) == 4).count();
    assert_eq!(interior, 1 + 4 + 12);
    assert!(regular_tree(3, 20, 1000).is_err());
    assert!(regular_tree(2, 5, DEFAULT_VERTEX_CAP).is_err());
}

#[test]
fn trees_are_zero_hyperbolic_against_naive_scan() {
    let t = regular_tree(3, 3, DEFAULT_VERTEX_CAP).unwrap();
    let d = common::bellman_ford_all_pairs(&t);
    assert_eq!(common::naive_four_point(&d), 0.0);
    assert_eq!(delta_four_point(&t, ScanMode::Exhaustive).unwrap(), 0.0);
}

#[test]
fn path_cycle_grid_shapes() {
    assert_eq!(path_graph(5).unwrap().edges().len(), 4);
    let c = cycle_graph(6).unwrap();
    assert!((0..6).all(|x| c.degree(x) == 2));
    let g = grid_graph(4, 3).unwrap();
    assert_eq!(g.n(), 12);
    assert_eq!(g.distance(0, 11).unwrap(), 5.0);
}

#[test]
fn product_of_paths_is_a_square_and_product_of_trees_has_flats() {
    let p2 = path_graph(2).unwrap();
    let sq = product_graph(&p2, &p2, DEFAULT_VERTEX_CAP).unwrap();
    assert_eq!(sq.n(), 4);
    assert_eq!(sq.edges().len(), 4);
    assert!((0..4).all(|x| sq.degree(x) == 2));

    let t = regular_tree(3, 6, DEFAULT_VERTEX_CAP).unwrap();
    let n = t.n();
    let prod = product_graph(&t, &t, DEFAULT_VERTEX_CAP).unwrap();
    // corners of an l1 square of side s: the four-point defect equals s
    let (a, b) = (0, n - 1);
    let s = t.distance(a, b).unwrap();
    let at = |i: usize, j: usize| i * n + j;
    let (x, w, y, z) = (at(a, a), at(b, a), at(b, b), at(a, b));
    let defect = gromov_product(&prod, x, w, z)
        .unwrap()
        .min(gromov_product(&prod, w, y, z).unwrap())
        - gromov_product(&prod, x, y, z).unwrap();
    assert_eq!(defect, s);
    let sampled = delta_four_point(
        &prod,
        ScanMode::Sampled {
            count: 200_000,
            seed: 3,
        },
    )
    .unwrap();
    assert!(sampled >= 2.0, "{sampled}");
}

#[test]
fn hyperbolic_approximation_of_small_spaces() {
    let two = FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let levels = 5;
    let ha = hyperbolic_approximation(&two, levels).unwrap();
    assert_eq!(ha.levels.len(), levels + 1);
    let d = common::bellman_ford_all_pairs(&ha.graph);
    assert!(d.iter().flatten().all(|v| v.is_finite()));
    assert!(common::naive_four_point(&d) <= 1.0);

    let one = FiniteMetricSpace::new(vec![vec![0.0]]).unwrap();
    let ha = hyperbolic_approximation(&one, 4).unwrap();
    assert_eq!(ha.graph.n(), 5);
    assert_eq!(ha.graph.edges().len(), 4);
}

#[test]
fn hyperbolic_approximation_of_a_circle_is_hyperbolic() {
    let z = FiniteMetricSpace::circle(32).unwrap();
    let ha = hyperbolic_approximation(&z, 5).unwrap();
    let delta = delta_four_point(
        &ha.graph,
        ScanMode::Sampled {
            count: 300_000,
            seed: 1,
        },
    )
    .unwrap();
    assert!(delta <= 3.0, "{delta}");
    let ray = ha.ray_towards(&z, 7);
    assert_eq!(ray.len(), 6);
    assert!(ray
        .windows(2)
        .all(|w| ha.graph.distance(w[0], w[1]).unwrap() == 1.0));
}

#[test]
fn metric_space_must_be_normalised() {
    let big = FiniteMetricSpace::new(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
    assert!(hyperbolic_approximation(&big, 3).is_err());
}
