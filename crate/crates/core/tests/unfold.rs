use hyperpot::hyperbolic::ScanMode;
use hyperpot::unfold::{
    check_unfolding_hyperbolic, check_uniformity, curve_uniformity, disc_boundary_correspondence,
    hardy_constant, harmonic_transfer_residual, quasi_hyperbolic_graph, sample_domain,
    transfer_identity_defect, unfold_operator, unfolded_ground_state, uniformity_pairs, DomainSpec,
};

const SPECS: [DomainSpec; 6] = [
    DomainSpec::Disc,
    DomainSpec::Square,
    DomainSpec::Slit,
    DomainSpec::LShape,
    DomainSpec::Cusp(2.0),
    DomainSpec::Interval,
];

#[test]
fn samples_and_boundary_distance() {
    let ds = sample_domain(DomainSpec::Square, 0.5).unwrap();
    assert_eq!(ds.points, vec![[0.5, 0.5]]);
    let disc = sample_domain(DomainSpec::Disc, 0.1).unwrap();
    assert_eq!(disc.dist[disc.nearest([0.0, 0.0])], 1.0);
    for spec in SPECS {
        let ds = sample_domain(spec, 0.05).unwrap();
        assert!(ds.dist.iter().all(|&d| d > 0.025), "{spec}");
        assert_eq!(ds.lipschitz_violations(1e-12), 0, "{spec}");
    }
    assert!(sample_domain(DomainSpec::Disc, 0.0).is_err());
    assert!(sample_domain(DomainSpec::Disc, 1.5).is_err());
}

#[test]
fn quasi_hyperbolic_lengths() {
    let ds = sample_domain(DomainSpec::Disc, 0.1).unwrap();
    let qh = quasi_hyperbolic_graph(&ds).unwrap();
    for (e, q) in ds.graph.edges().iter().zip(qh.edges()) {
        let want = e.length * 0.5 * (1.0 / ds.dist[e.u] + 1.0 / ds.dist[e.v]);
        assert!((q.length - want).abs() < 1e-15);
        if ds.dist[e.u] == ds.dist[e.v] {
            assert!((q.length - e.length / ds.dist[e.u]).abs() < 1e-15);
        }
    }
    for x in 0..ds.len() {
        assert!((qh.mu()[x] - 0.01 / (ds.dist[x] * ds.dist[x])).abs() < 1e-15);
    }
}

fn radial_distance(h: f64) -> f64 {
    let ds = sample_domain(DomainSpec::Disc, h).unwrap();
    let qh = quasi_hyperbolic_graph(&ds).unwrap();
    qh.distance(ds.nearest([0.0, 0.0]), ds.nearest([0.9, 0.0]))
        .unwrap()
}

#[test]
fn radial_distance_approaches_the_continuum_value() {
    // the integral of 1 / (1 - r) from 0 to 0.9
    let want = 10f64.ln();
    let coarse = radial_distance(0.02);
    assert!((coarse - want).abs() < 0.1 * want, "{coarse}");
    let fine = radial_distance(0.01);
    assert!((fine - coarse).abs() < 0.05 * coarse, "{coarse} {fine}");
}

#[test]
fn disc_geodesics_are_uniform() {
    let ds = sample_domain(DomainSpec::Disc, 0.05).unwrap();
    let rep = check_uniformity(&ds, &uniformity_pairs(&ds, 40, 1), 10.0).unwrap();
    assert!(rep.worst_c <= 10.0, "{}", rep.worst_c);
    assert_eq!(rep.uniform_fraction, 1.0);
    let qh = quasi_hyperbolic_graph(&ds).unwrap();
    let diameter =
        curve_uniformity(&ds, &qh, ds.nearest([-0.9, 0.0]), ds.nearest([0.9, 0.0])).unwrap();
    assert!((diameter - 1.0).abs() < 0.05, "{diameter}");
}

#[test]
fn disc_unfolding_delta_is_stable_under_refinement() {
    let rep = check_unfolding_hyperbolic(
        DomainSpec::Disc,
        0.1,
        ScanMode::Sampled {
            count: 200_000,
            seed: 3,
        },
    )
    .unwrap();
    assert!(rep.delta > 0.0);
    assert!(rep.ratio > 0.8 && rep.ratio < 1.25, "{rep:?}");
}

#[test]
fn hardy_constant_is_positive_and_monotone_in_the_potential() {
    let ds = sample_domain(DomainSpec::Disc, 0.1).unwrap();
    let mut last = 0.0;
    for v in [0.0, 1.0, 5.0] {
        let c = hardy_constant(&ds.base_operator(vec![v; ds.len()]).unwrap(), &ds).unwrap();
        assert!(c > last, "{v}: {c}");
        last = c;
    }
    let other = sample_domain(DomainSpec::Square, 0.1).unwrap();
    assert!(hardy_constant(&other.base_operator(vec![0.0; other.len()]).unwrap(), &ds).is_err());
}

#[test]
fn planar_unfolding_without_potential_keeps_the_coefficients() {
    let ds = sample_domain(DomainSpec::Disc, 0.1).unwrap();
    let base = ds.base_operator(vec![0.0; ds.len()]).unwrap();
    let un = unfold_operator(&base, &ds, 2, 1.0).unwrap();
    assert!(un.transfer.iter().all(|&t| t == 1.0));
    assert_eq!(un.op.conductance(), base.conductance());
    assert_eq!(un.op.killing(), base.killing());
    assert!(un.op.potential().iter().all(|&v| v == 0.0));
    assert_eq!(un.potential_weight, 0.0);
    assert!(un.warning.is_none());

    let strong = ds.base_operator(vec![100.0; ds.len()]).unwrap();
    assert!(unfold_operator(&strong, &ds, 2, 1.0)
        .unwrap()
        .warning
        .is_some());
}

#[test]
fn transfer_preserves_harmonicity_and_the_form() {
    for (spec, dim) in [
        (DomainSpec::Interval, 1),
        (DomainSpec::Disc, 2),
        (DomainSpec::Disc, 3),
    ] {
        let h = if dim == 1 { 0.01 } else { 0.1 };
        let ds = sample_domain(spec, h).unwrap();
        let base = ds.base_operator(vec![0.5; ds.len()]).unwrap();
        let un = unfold_operator(&base, &ds, dim, 10.0).unwrap();
        for seed in 0..3 {
            let r = harmonic_transfer_residual(&base, &un, &ds, seed).unwrap();
            assert!(r < 1e-9, "{spec} dim {dim}: {r}");
        }
        let defect = transfer_identity_defect(&base, &un, 7, 20);
        assert!(defect < 1e-10, "{spec} dim {dim}: {defect}");
    }
}

#[test]
fn unfolded_ground_state_is_the_hardy_constant() {
    let h = 0.1;
    let ds = sample_domain(DomainSpec::Disc, h).unwrap();
    let base = ds.base_operator(vec![0.0; ds.len()]).unwrap();
    let hardy = hardy_constant(&base, &ds).unwrap();
    let lambda = unfolded_ground_state(&unfold_operator(&base, &ds, 2, 1.0).unwrap()).unwrap();
    assert!(lambda >= hardy * (1.0 - 10.0 * h));
    assert!((lambda - hardy).abs() < 1e-6 * hardy, "{lambda} {hardy}");
}

#[test]
fn disc_boundary_matches_euclidean_order() {
    let ds = sample_domain(DomainSpec::Disc, 0.05).unwrap();
    let rep = disc_boundary_correspondence(&ds, 12).unwrap();
    assert!(rep.spearman >= 0.9, "{}", rep.spearman);
    let sq = sample_domain(DomainSpec::Square, 0.1).unwrap();
    assert!(disc_boundary_correspondence(&sq, 12).is_err());
}
