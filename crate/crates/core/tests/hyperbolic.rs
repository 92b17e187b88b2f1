mod common;

use hyperpot::builders::{cycle_graph, grid_graph, regular_tree, DEFAULT_VERTEX_CAP};
use hyperpot::hyperbolic::{
    boundary_quasi_metric, delta_four_point, delta_thin_triangles, effective_delta, gromov_product,
    phi_chain_along_geodesic, phi_neighborhood_basis, verify_phi_chain, BoundaryRay, ChainTarget,
    PhiChain, ScanMode,
};
use hyperpot::stats::linear_fit;
use hyperpot::MetricGraph;

fn subtree(g: &MetricGraph, v: usize) -> Vec<usize> {
    let d0 = g.distances_from(0);
    let dv = g.distances_from(v);
    (0..g.n()).filter(|&x| d0[x] == d0[v] + dv[x]).collect()
}

#[test]
fn gromov_product_on_a_tree_is_distance_to_the_geodesic() {
    let t = regular_tree(3, 4, DEFAULT_VERTEX_CAP).unwrap();
    let d = common::bellman_ford_all_pairs(&t);
    for &(x, y) in &[(5, 40), (12, 13), (45, 20), (0, 33)] {
        let path = t.geodesic(x, y).unwrap();
        for z in (0..t.n()).step_by(3) {
            let to_path = path.iter().map(|&p| d[z][p]).fold(f64::INFINITY, f64::min);
            assert_eq!(gromov_product(&t, x, y, z).unwrap(), to_path);
        }
        assert_eq!(gromov_product(&t, x, x, y).unwrap(), d[x][y]);
        assert_eq!(gromov_product(&t, x, y, x).unwrap(), 0.0);
        assert_eq!(
            gromov_product(&t, x, 7, y).unwrap(),
            gromov_product(&t, 7, x, y).unwrap()
        );
    }
}

#[test]
fn cycle_four_point_constant_matches_naive_scan() {
    let c = cycle_graph(12).unwrap();
    let oracle = common::naive_four_point(&common::bellman_ford_all_pairs(&c));
    let got = delta_four_point(&c, ScanMode::Exhaustive).unwrap();
    assert_eq!(got, oracle);
    assert!(got >= 1.0);
    let sampled = delta_four_point(
        &c,
        ScanMode::Sampled {
            count: 200_000,
            seed: 9,
        },
    )
    .unwrap();
    assert!(sampled <= got);
    assert_eq!(sampled, got);
}

#[test]
fn sampled_tree_scan_is_zero_for_every_seed() {
    let t = regular_tree(3, 8, DEFAULT_VERTEX_CAP).unwrap();
    for seed in [0, 1, 42, 12345] {
        assert_eq!(
            delta_four_point(
                &t,
                ScanMode::Sampled {
                    count: 100_000,
                    seed
                }
            )
            .unwrap(),
            0.0
        );
    }
    assert!(delta_four_point(&t, ScanMode::Exhaustive).is_err());
}

#[test]
fn thin_triangles() {
    let t = regular_tree(3, 3, DEFAULT_VERTEX_CAP).unwrap();
    assert_eq!(delta_thin_triangles(&t, ScanMode::Exhaustive).unwrap(), 0.0);
    let c = cycle_graph(12).unwrap();
    let thin = delta_thin_triangles(&c, ScanMode::Exhaustive).unwrap();
    assert!(thin > 0.0);
    let sampled = delta_thin_triangles(
        &c,
        ScanMode::Sampled {
            count: 20_000,
            seed: 4,
        },
    )
    .unwrap();
    assert_eq!(sampled, thin);
    let four = delta_four_point(&c, ScanMode::Exhaustive).unwrap();
    assert!(thin <= 8.0 * four + 2.0);
}

#[test]
fn boundary_quasi_metric_on_a_tree() {
    let t = regular_tree(3, 6, DEFAULT_VERTEX_CAP).unwrap();
    let leaves: Vec<usize> = (0..t.n()).filter(|&x| t.degree(x) == 1).collect();
    let ray = |tip: usize| BoundaryRay::geodesic(&t, 0, tip).unwrap();
    let same = boundary_quasi_metric(&t, 0, &[ray(leaves[0]), ray(leaves[0])]).unwrap();
    assert!((same[0][1] - (-6.0f64).exp()).abs() < 1e-15);

    let rays: Vec<BoundaryRay> = leaves.iter().step_by(7).map(|&l| ray(l)).collect();
    let q = boundary_quasi_metric(&t, 0, &rays).unwrap();
    for i in 0..rays.len() {
        for j in 0..rays.len() {
            if i == j {
                continue;
            }
            let split = rays[i]
                .vertices
                .iter()
                .zip(&rays[j].vertices)
                .take_while(|(a, b)| a == b)
                .count()
                - 1;
            assert!((q[i][j] - (-(split as f64)).exp()).abs() < 1e-15);
            // trees give an ultrametric
            for k in 0..rays.len() {
                if k != i && k != j {
                    assert!(q[i][j] <= q[i][k].max(q[k][j]) + 1e-15);
                }
            }
        }
    }
}

#[test]
fn tree_phi_chain_is_nested_and_passes() {
    let t = regular_tree(3, 10, DEFAULT_VERTEX_CAP).unwrap();
    let leaf = t.n() - 1;
    let chain = phi_chain_along_geodesic(&t, 0, ChainTarget::Vertex(leaf), 0.0).unwrap();
    assert_eq!(chain.delta_used, effective_delta(0.0));
    assert_eq!(chain.len(), 5);
    for w in chain.sets.windows(2) {
        assert!(w[1].len() < w[0].len());
        assert!(w[1].iter().all(|x| w[0].binary_search(x).is_ok()));
    }
    // away from the root each set is the subtree hanging below the geodesic
    let path = t.geodesic(0, leaf).unwrap();
    for i in 1..chain.len() {
        let below = path[2 * i + 1];
        assert_eq!(chain.sets[i], subtree(&t, below));
    }
    let report = verify_phi_chain(&t, &chain);
    assert!(report.ok, "{:?}", report.violations);
    assert!(report.alpha.unwrap() > 0.0 && report.beta.unwrap() > 0.0);

    let reversed = chain.reversed(&t);
    assert_eq!(reversed.track_points.first(), chain.track_points.last());
    for w in reversed.sets.windows(2) {
        assert!(w[1].iter().all(|x| w[0].binary_search(x).is_ok()));
    }
}

#[test]
fn degenerate_and_non_nested_chains() {
    let t = regular_tree(3, 6, DEFAULT_VERTEX_CAP).unwrap();
    assert!(phi_chain_along_geodesic(&t, 5, ChainTarget::Vertex(5), 0.0).is_err());
    let bad = PhiChain {
        sets: vec![vec![1, 2, 3], vec![4, 5], vec![6]],
        track_points: vec![1, 4, 6],
        phi0: 1.0,
        alpha: 0.0,
        beta: 1.0,
        delta_used: 0.5,
    };
    assert!(!verify_phi_chain(&t, &bad).ok);
}

fn half_plane_chain(g: &MetricGraph, w: usize, h: usize) -> PhiChain {
    let mid = h / 2;
    PhiChain {
        sets: (0..6)
            .map(|i| (0..g.n()).filter(|&v| v % w > 2 + 4 * i).collect())
            .collect(),
        track_points: (0..6).map(|i| mid * w + 3 + 4 * i).collect(),
        phi0: 4.0 / 3.0,
        alpha: 0.0,
        beta: 4.0 / 3.0,
        delta_used: 0.5,
    }
}

#[test]
fn flat_grid_half_planes_do_not_form_a_phi_chain() {
    let small = grid_graph(30, 30).unwrap();
    let report = verify_phi_chain(&small, &half_plane_chain(&small, 30, 30));
    // separation between neighbouring boundaries does not grow along the boundary
    let (t, d): (Vec<f64>, Vec<f64>) = report
        .samples
        .iter()
        .filter(|s| s.2 > 0.0)
        .map(|s| (s.2, s.3))
        .unzip();
    assert!(linear_fit(&t, &d).slope.abs() < 1e-9);
    // so the admissible slope is only an artefact of truncation and vanishes with size
    let large = grid_graph(60, 60).unwrap();
    let bigger = verify_phi_chain(&large, &half_plane_chain(&large, 60, 60));
    assert!(bigger.alpha.unwrap() < 0.6 * report.alpha.unwrap());
}

#[test]
fn tree_neighbourhood_basis_is_a_subtree_sequence() {
    let t = regular_tree(3, 10, DEFAULT_VERTEX_CAP).unwrap();
    let ray = BoundaryRay::geodesic(&t, 0, t.n() - 1).unwrap();
    let basis = phi_neighborhood_basis(&t, &ray, 4, 0.0).unwrap();
    assert_eq!(basis.c_delta, 2.0);
    for (k, set) in basis.sets.iter().enumerate() {
        assert_eq!(*set, subtree(&t, ray.vertices[2 * (k + 1)]));
    }
    for w in basis.sets.windows(2) {
        assert!(w[1].iter().all(|x| w[0].binary_search(x).is_ok()));
    }
    assert!(basis.hub_balls_separate(&t));
    assert!(phi_neighborhood_basis(&t, &ray, 8, 0.0).is_err());
}
