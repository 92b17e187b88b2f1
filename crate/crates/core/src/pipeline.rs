//! Config-driven experiment pipelines producing JSON reports.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Config, GraphSpec};
use crate::error::{Error, Result};
use crate::hyperbolic::{
    delta_four_point, phi_chain_along_geodesic, verify_phi_chain, BoundaryRay, ChainTarget,
    ScanMode,
};
use crate::metric_graph::{sample_indices, MetricGraph};
use crate::potential::martin_convergence;
use crate::schrodinger::{dirichlet_eigenvalue, exceeds_shift, Domain, SchrodingerOperator};
use crate::unfold::{
    check_uniformity, hardy_constant, harmonic_transfer_residual, quasi_hyperbolic_graph,
    sample_domain, transfer_identity_defect, unfold_operator, unfolded_ground_state,
    uniformity_pairs, DomainSpec,
};
use crate::verify::{
    aligned_triples, check_3g, check_3g_chain, check_boundary_harnack, check_exponential_decay,
    check_growth_recovery, check_relative_max_principle, green_metric_check,
};

/// A hard check of a pipeline.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub body: Value,
    pub assertions: Vec<Assertion>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    fn assert(&mut self, name: &str, passed: bool) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            passed,
        });
    }
}

/// Scan mode used when a graph is too large for the exhaustive four-point scan.
pub fn default_scan(n: usize, samples: usize, seed: u64) -> ScanMode {
    if n <= crate::hyperbolic::EXHAUSTIVE_LIMIT {
        ScanMode::Exhaustive
    } else {
        ScanMode::Sampled {
            count: samples,
            seed,
        }
    }
}

/// Runs the pipeline named in `[run] pipeline`.
pub fn run(cfg: &Config, seed: u64) -> Result<Report> {
    match cfg.require("run", "pipeline")? {
        "tree3g" | "inequalities" => inequalities(cfg, seed, None),
        "unfold" => unfold(cfg, seed),
        "martin" => martin(cfg),
        other => Err(Error::input(format!("unknown pipeline '{other}'"))),
    }
}

fn operator(cfg: &Config, g: Arc<MetricGraph>) -> Result<SchrodingerOperator> {
    let v: f64 = cfg.value("operator", "potential", 0.0)?;
    SchrodingerOperator::constant(g, v)
}

/// Vertex at distance `r` from `center` with the largest index.
fn farthest_at(g: &MetricGraph, center: usize, r: f64) -> Result<usize> {
    let d = g.distances_from(center);
    (0..g.n())
        .rev()
        .find(|&x| (d[x] - r).abs() < 1e-9)
        .ok_or_else(|| Error::input(format!("no vertex at distance {r} from {center}")))
}

/// Checks of the inequality pipeline, in report order.
pub const INEQUALITY_CHECKS: [&str; 6] = ["3g", "growth", "decay", "rmp", "bhi", "greenmetric"];

/// Green-function inequality harness on a graph: Φ-chain, 3G, growth recovery,
/// exponential decay, relative maximum principle, boundary Harnack and the
/// Green metric. `only` restricts the run to one check (3G is always computed
/// since the others are compared against it).
pub fn inequalities(cfg: &Config, seed: u64, only: Option<&str>) -> Result<Report> {
    if let Some(k) = only {
        if !INEQUALITY_CHECKS.contains(&k) {
            return Err(Error::input(format!("unknown check '{k}'")));
        }
    }
    let wants = |k: &str| only.is_none_or(|o| o == k);
    let spec: GraphSpec = cfg.require("graph", "spec")?.parse()?;
    let g = Arc::new(spec.build()?);
    let op = operator(cfg, Arc::clone(&g))?;
    let center: usize = cfg.value("domain", "center", 0)?;
    let radius: f64 = cfg.value("domain", "radius", f64::INFINITY)?;
    let domain = if radius.is_finite() {
        Domain::ball(&g, center, radius)?
    } else {
        Domain::all(&g)
    };
    let sigma: f64 = cfg.value("checks", "sigma", 1.0)?;
    let separation: f64 = cfg.value("checks", "separation", 0.0)?;
    let eps: f64 = cfg.value("checks", "eps", 0.1)?;
    let level: usize = cfg.value("checks", "bhi_level", 2)?;
    let samples: usize = cfg.value("checks", "delta_samples", 200_000)?;
    let chain_length: f64 = cfg.value("checks", "chain_length", radius - 1.0)?;
    if !chain_length.is_finite() {
        return Err(Error::input(
            "[checks] chain_length is required on unbounded domains",
        ));
    }

    let delta = delta_four_point(&g, default_scan(g.n(), samples, seed))?;
    let target = farthest_at(&g, center, chain_length)?;
    let chain = phi_chain_along_geodesic(&g, center, ChainTarget::Vertex(target), delta)?;
    let chain_report = verify_phi_chain(&g, &chain);
    let lambda1 = dirichlet_eigenvalue(&op, &domain)?;
    let three_g = check_3g_chain(&op, &domain, &chain, sigma, separation)?;
    let ln_c = three_g.c.ln();

    let mut body = json!({
        "pipeline": "inequalities",
        "graph": { "vertices": g.n(), "edges": g.edges().len() },
        "domain": { "center": center, "radius": radius.is_finite().then_some(radius), "vertices": domain.len() },
        "delta": delta,
        "lambda1": lambda1,
        "phi_chain": {
            "length": chain.len(), "track_points": chain.track_points, "alpha": chain.alpha,
            "beta": chain.beta, "ok": chain_report.ok,
        },
        "three_g": three_g,
    });
    let mut report = Report {
        body: Value::Null,
        assertions: Vec::new(),
    };
    report.assert("coercive", exceeds_shift(lambda1, 0.0));
    report.assert("phi_chain", chain_report.ok);
    report.assert("c_3g >= 1", three_g.c >= 1.0);

    if wants("growth") {
        let growth = check_growth_recovery(&op, eps, &domain, &chain, sigma)?;
        let reversed = check_growth_recovery(&op, eps, &domain, &chain.reversed(&g), sigma)?;
        report.assert("growth flat", growth.flat);
        report.assert("growth flat (reversed chain)", reversed.flat);
        body["growth"] = json!(growth);
        body["growth_reversed"] = json!(reversed);
    }
    let verts = domain.vertices();
    if wants("decay") {
        let poles: Vec<usize> = sample_indices(verts.len(), 5)
            .into_iter()
            .map(|i| verts[i])
            .collect();
        let targets: Vec<usize> = sample_indices(verts.len(), 200)
            .into_iter()
            .map(|i| verts[i])
            .collect();
        let pairs: Vec<(usize, usize)> = poles
            .iter()
            .flat_map(|&y| targets.iter().map(move |&x| (x, y)))
            .collect();
        let decay = check_exponential_decay(&op, &domain, &pairs, sigma, Some(eps))?;
        report.assert("alpha2 > 0", decay.alpha2 > 0.0);
        report.assert("alpha1 >= 0", decay.alpha1.is_some_and(|a| a >= 0.0));
        body["decay"] = json!(decay);
    }
    if wants("rmp") {
        let middle = chain.track_points[chain.len() / 2];
        let r = (chain_length / 4.0).floor().max(1.0);
        let rmp = check_relative_max_principle(&op, &domain, eps, middle, r, target)?;
        report.assert("eta < 1", rmp.ok);
        body["rmp"] = json!(rmp);
    }
    if wants("bhi") {
        let ray = BoundaryRay::geodesic(&g, center, target)?;
        let off_ray = g
            .neighbors(center)
            .iter()
            .map(|&(y, _)| y)
            .find(|y| !ray.vertices.contains(y))
            .unwrap_or(center);
        let bhi = check_boundary_harnack(&op, &domain, &ray, level, center, off_ray, delta)?;
        report.assert(
            "HB <= c_3g^4",
            bhi.hb_emp <= three_g.c.powi(4) * (1.0 + 1e-12),
        );
        body["bhi"] = json!(bhi);
    }
    if wants("greenmetric") {
        let aligned = aligned_triples(&op, &domain, sigma, 20, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        let mut general = Vec::new();
        for _ in 0..2000 {
            if general.len() == 20 {
                break;
            }
            let t = [0; 3].map(|_| verts[rng.gen_range(0..verts.len())]);
            let far = |a: usize, b: usize| g.distance(a, b).map(|d| d > 2.0 * sigma);
            if far(t[0], t[1])? && far(t[1], t[2])? && far(t[0], t[2])? {
                general.push((t[0], t[1], t[2]));
            }
        }
        let metric = green_metric_check(&op, &domain, sigma, &aligned, &general)?;
        let mut c_triples: f64 = 1.0;
        for &(x, y, z) in &aligned {
            c_triples = c_triples.max(check_3g(&op, &domain, &[x, y, z], sigma, 0.0)?.c);
        }
        let ln_ct = c_triples.ln();
        report.assert(
            "aligned defect <= ln c_3g",
            metric.max_aligned_defect <= ln_ct + 1e-6,
        );
        report.assert(
            "triangle excess <= ln c_3g",
            metric.max_triangle_excess <= ln_c.max(ln_ct) + 1e-6,
        );
        body["green_metric"] = json!(metric);
        body["green_metric"]["c_3g_on_triples"] = json!(c_triples);
    }
    report.body = body;
    Ok(report)
}

/// Unfolding of a sampled planar domain.
pub fn unfold(cfg: &Config, seed: u64) -> Result<Report> {
    let spec: DomainSpec = cfg.require("domain", "spec")?.parse()?;
    let h: f64 = cfg.value("domain", "h", 0.1)?;
    let checks = {
        let list = cfg.list("checks", "list");
        if list.is_empty() {
            vec![
                "uniformity".into(),
                "delta".into(),
                "hardy".into(),
                "transfer".into(),
            ]
        } else {
            list
        }
    };
    let samples: usize = cfg.value("checks", "delta_samples", 200_000)?;
    let pair_count: usize = cfg.value("checks", "pairs", 30)?;
    let uniform_c: f64 = cfg.value("checks", "uniform_c", 10.0)?;
    let potential: f64 = cfg.value("operator", "potential", 0.0)?;
    let cap: f64 = cfg.value("operator", "potential_cap", 1e6)?;

    let ds = sample_domain(spec, h)?;
    let mut body = json!({
        "pipeline": "unfold",
        "domain": spec.to_string(),
        "h": h,
        "points": ds.len(),
        "lipschitz_violations": ds.lipschitz_violations(1e-12),
    });
    let mut report = Report {
        body: Value::Null,
        assertions: Vec::new(),
    };
    report.assert(
        "distance is 1-Lipschitz",
        ds.lipschitz_violations(1e-12) == 0,
    );
    let base = ds.base_operator(vec![potential; ds.len()])?;
    for check in &checks {
        match check.as_str() {
            "uniformity" => {
                let pairs = uniformity_pairs(&ds, pair_count, seed);
                let u = check_uniformity(&ds, &pairs, uniform_c)?;
                body["uniformity"] = json!({ "worst_c": u.worst_c, "uniform_fraction": u.uniform_fraction, "pairs": pairs.len() });
            }
            "delta" => {
                let qh = quasi_hyperbolic_graph(&ds)?;
                let d = delta_four_point(&qh, default_scan(qh.n(), samples, seed))?;
                let refined = sample_domain(spec, h / 2.0)?;
                let qh2 = quasi_hyperbolic_graph(&refined)?;
                let d2 = delta_four_point(&qh2, default_scan(qh2.n(), samples, seed))?;
                body["delta"] = json!({ "delta": d, "delta_refined": d2, "ratio": d2 / d });
            }
            "hardy" => {
                let c = hardy_constant(&base, &ds)?;
                body["hardy"] = json!({ "constant": c });
                report.assert("hardy constant > 0", c > 0.0);
            }
            "transfer" => {
                let unfolded = unfold_operator(&base, &ds, spec.dim(), cap)?;
                let residual = harmonic_transfer_residual(&base, &unfolded, &ds, seed)?;
                let defect = transfer_identity_defect(&base, &unfolded, seed, 8);
                let lambda = unfolded_ground_state(&unfolded)?;
                body["transfer"] = json!({
                    "harmonic_residual": residual,
                    "identity_defect": defect,
                    "lambda1_unfolded": lambda,
                    "potential_weight": unfolded.potential_weight,
                    "warning": unfolded.warning,
                });
                report.assert("harmonic transfer residual < 1e-9", residual < 1e-9);
                report.assert("transfer identity < 1e-10", defect < 1e-10);
            }
            other => return Err(Error::input(format!("unknown unfold check '{other}'"))),
        }
    }
    report.body = body;
    Ok(report)
}

/// Martin kernel convergence along a ray to the last vertex of the graph.
pub fn martin(cfg: &Config) -> Result<Report> {
    let spec: GraphSpec = cfg.require("graph", "spec")?.parse()?;
    let g = Arc::new(spec.build()?);
    let op = operator(cfg, Arc::clone(&g))?;
    let o: usize = cfg.value("domain", "center", 0)?;
    let depths: Vec<usize> = cfg
        .list("checks", "depths")
        .iter()
        .map(|s| {
            s.parse()
                .map_err(|e| Error::input(format!("[checks] depths: {e}")))
        })
        .collect::<Result<_>>()?;
    if depths.len() < 2 {
        return Err(Error::input("[checks] depths needs at least two entries"));
    }
    let window: f64 = cfg.value("checks", "window", 3.0)?;
    let margin: f64 = cfg.value("checks", "margin", 3.0)?;
    let r_max: f64 = cfg.value("checks", "r_max", f64::INFINITY)?;
    let tol: f64 = cfg.value("checks", "tol", 1e-3)?;
    let ray = BoundaryRay::geodesic(&g, o, g.n() - 1)?;
    let conv = martin_convergence(&op, &ray, &depths, window, margin, r_max, tol)?;
    let mut report = Report {
        body: json!({ "pipeline": "martin", "convergence": conv }),
        assertions: Vec::new(),
    };
    report.assert("kernels are Cauchy", conv.cauchy);
    Ok(report)
}
