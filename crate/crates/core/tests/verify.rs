mod common;

use std::sync::Arc;

use hyperpot::builders::{regular_tree, DEFAULT_VERTEX_CAP};
use hyperpot::hyperbolic::{phi_chain_along_geodesic, BoundaryRay, ChainTarget};
use hyperpot::verify::{
    aligned_triples, check_3g, check_3g_chain, check_boundary_harnack, check_exponential_decay,
    check_growth_recovery, check_relative_max_principle, green_metric_check,
};
use hyperpot::{Domain, Error, SchrodingerOperator};

fn tree_setup(depth: usize, v: f64) -> (Arc<hyperpot::MetricGraph>, SchrodingerOperator, Domain) {
    let t = Arc::new(regular_tree(3, depth, DEFAULT_VERTEX_CAP).unwrap());
    let op = SchrodingerOperator::constant(Arc::clone(&t), v).unwrap();
    let dom = Domain::ball(&t, 0, (depth - 1) as f64).unwrap();
    (t, op, dom)
}

#[test]
fn three_g_on_the_integer_line_is_exact() {
    let eps = 0.1;
    let line = common::line_operator(601, eps);
    let dom = Domain::all(line.graph());
    let track: Vec<usize> = (0..8).map(|i| 280 + 6 * i).collect();
    let rep = check_3g(&line, &dom, &track, 1.0, 0.0).unwrap();
    let c = 3.0 * common::line_g0(eps);
    for (_, r) in &rep.ratios {
        assert!((r - 1.0 / c).abs() < 1e-9 / c);
    }
    assert!((rep.c - c).abs() < 1e-8 * c);
    assert!(check_3g(&line, &dom, &track[..2], 1.0, 0.0).is_err());
    let short = check_3g(&line, &dom, &track[..3], 1.0, 0.0).unwrap();
    assert_eq!(short.ratios.len(), 1);
    assert!(short.c >= 1.0);
}

#[test]
fn three_g_on_trees_is_stable_in_depth() {
    let mut cs = Vec::new();
    for depth in [8, 10] {
        let (t, op, dom) = tree_setup(depth, 0.0);
        let chain = phi_chain_along_geodesic(&t, 0, ChainTarget::Vertex(t.n() - 1), 0.0).unwrap();
        let rep = check_3g_chain(&op, &dom, &chain, 1.0, 0.0).unwrap();
        assert!(rep.c >= 1.0 && rep.c_lower <= rep.c_upper && rep.c_lower > 0.0);
        cs.push(rep.c);
    }
    assert!(cs[1] / cs[0] <= 1.25 && cs[0] / cs[1] <= 1.25, "{cs:?}");
}

#[test]
fn lost_green_values_ask_for_a_larger_exhaustion() {
    let line = common::line_operator(2001, 3.0);
    let dom = Domain::all(line.graph());
    // G decays like 0.38^d, so d = 1000 underflows the floor
    let track = vec![0, 1000, 2000];
    match check_3g(&line, &dom, &track, 1.0, 0.0) {
        Err(Error::Numerical { msg, .. }) => assert!(msg.contains("increase exhaustion")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn growth_recovery_is_flat_on_trees() {
    let (t, op, dom) = tree_setup(10, 0.0);
    let target = (0..t.n())
        .rev()
        .find(|&x| t.distance(0, x).unwrap() == 8.0)
        .unwrap();
    let chain = phi_chain_along_geodesic(&t, 0, ChainTarget::Vertex(target), 0.0).unwrap();
    let fwd = check_growth_recovery(&op, 0.1, &dom, &chain, 1.0).unwrap();
    assert!(fwd.flat, "{:?}", fwd.per_index_max);
    assert!(fwd.max_ratio.is_finite() && fwd.max_ratio > 0.0);
    let back = check_growth_recovery(&op, 0.1, &dom, &chain.reversed(&t), 1.0).unwrap();
    assert!(back.flat, "{:?}", back.per_index_max);
}

#[test]
fn exponential_decay_fits() {
    let eps = 0.1;
    let line = common::line_operator(801, eps);
    let dom = Domain::all(line.graph());
    let pairs: Vec<(usize, usize)> = (3..60).map(|k| (400 + k, 400)).collect();
    let rep = check_exponential_decay(&line, &dom, &pairs, 1.0, Some(0.05)).unwrap();
    assert!((rep.alpha2 + common::line_root(eps).ln()).abs() < 1e-4);
    assert!(rep.r2 > 0.999);
    let a1 = -(common::line_root(eps) / common::line_root(eps - 0.05)).ln();
    assert!((rep.alpha1.unwrap() - a1).abs() < 1e-4);
    assert!(check_exponential_decay(&line, &dom, &pairs[..5], 1.0, None).is_err());

    let (t, op, dom) = tree_setup(10, 0.0);
    let verts = dom.vertices();
    let pairs: Vec<(usize, usize)> = [0usize, 5, 40]
        .iter()
        .flat_map(|&y| verts.iter().step_by(37).map(move |&x| (x, y)))
        .collect();
    let rep = check_exponential_decay(&op, &dom, &pairs, 1.0, Some(0.1)).unwrap();
    assert!(rep.alpha2 > 0.0 && rep.r2 >= 0.95, "{rep:?}");
    assert!(rep.alpha1.unwrap() >= 0.0);
    assert!(t.n() > 0);
}

#[test]
fn relative_maximum_principle() {
    let (v0, eps) = (0.2, 0.1);
    let line = common::line_operator(601, v0);
    let dom = Domain::all(line.graph());
    let rep = check_relative_max_principle(&line, &dom, eps, 300, 5.0, 315).unwrap();
    let want = common::line_root(v0) / common::line_root(v0 - eps);
    assert!((rep.eta - want).abs() < 1e-6, "{} vs {want}", rep.eta);
    assert!(rep.ok);
    let tiny = check_relative_max_principle(&line, &dom, eps, 300, 0.5, 315).unwrap();
    assert!(tiny.ratio <= 1.0 + 1e-12);
    assert!(check_relative_max_principle(&line, &dom, eps, 300, 20.0, 315).is_err());

    let (t, op, dom) = tree_setup(10, 0.0);
    let path = t.geodesic(0, t.n() - 1).unwrap();
    let (pole, x) = (path[9], path[3]);
    let etas: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&e| {
            check_relative_max_principle(&op, &dom, e, x, 2.0, pole)
                .unwrap()
                .eta
        })
        .collect();
    assert!(
        etas.windows(2).all(|w| w[1] < w[0]) && etas[0] < 1.0,
        "{etas:?}"
    );
}

#[test]
fn boundary_harnack() {
    let (t, op, dom) = tree_setup(10, 0.0);
    let ray = BoundaryRay::geodesic(&t, 0, t.n() - 1).unwrap();
    let same = check_boundary_harnack(&op, &dom, &ray, 2, 1, 1, 0.0).unwrap();
    assert!((same.hb_emp - 1.0).abs() < 1e-12);
    let off = t
        .neighbors(0)
        .iter()
        .map(|&(y, _)| y)
        .find(|y| !ray.vertices.contains(y))
        .unwrap();
    let rep = check_boundary_harnack(&op, &dom, &ray, 2, 0, off, 0.0).unwrap();
    assert!(rep.hb_emp >= 1.0 && rep.points > 0);
    assert!(check_boundary_harnack(&op, &dom, &ray, 2, ray.vertices[5], 0, 0.0).is_err());
}

#[test]
fn green_metric_on_the_integer_line_and_trees() {
    let eps = 0.1;
    let line = common::line_operator(601, eps);
    let dom = Domain::all(line.graph());
    let aligned: Vec<(usize, usize, usize)> =
        (2..12).map(|s| (300 - 3 * s, 300, 300 + 2 * s)).collect();
    let general = vec![(290, 310, 300), (295, 300, 320)];
    let rep = green_metric_check(&line, &dom, 1.0, &aligned, &general).unwrap();
    // G(250, 350) is about 1e-14 of the diagonal, below the iterative solver's resolution
    match green_metric_check(&line, &dom, 1.0, &[], &[(250, 350, 300)]) {
        Err(Error::Numerical { msg, .. }) => assert!(msg.contains("increase exhaustion")),
        other => panic!("unexpected {other:?}"),
    }
    // the defect is the constant ln(mu(B_1) G(0,0)) at every separation
    let want = (3.0 * common::line_g0(eps)).ln();
    assert!(
        rep.aligned_defects.iter().all(|d| (d - want).abs() < 1e-8),
        "{:?}",
        rep.aligned_defects
    );
    let c = check_3g(&line, &dom, &[290, 300, 310], 1.0, 0.0).unwrap().c;
    assert!(rep.max_aligned_defect <= c.ln() + 1e-6);
    assert!(rep.max_triangle_excess <= c.ln() + 1e-6);

    let (_, op, dom) = tree_setup(9, 0.0);
    let triples = aligned_triples(&op, &dom, 1.0, 15, 2);
    assert!(!triples.is_empty());
    let rep = green_metric_check(&op, &dom, 1.0, &triples, &[]).unwrap();
    let mut c: f64 = 1.0;
    for &(x, y, z) in &triples {
        c = c.max(check_3g(&op, &dom, &[x, y, z], 1.0, 0.0).unwrap().c);
    }
    assert!(rep.max_aligned_defect <= c.ln() + 1e-6);
}
