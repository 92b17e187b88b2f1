//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Config, GraphSpec};
use crate::error::{Error, Result};
use crate::hyperbolic::{
    delta_four_point, delta_thin_triangles, phi_chain_along_geodesic, verify_phi_chain, ChainTarget,
};
use crate::pipeline::{self, default_scan, Report};
use crate::schrodinger::{
    dirichlet_eigenvalue, exceeds_shift, green_dirichlet, Domain, SchrodingerOperator,
};

#[derive(Debug, Parser)]
#[command(
    name = "hyperpot",
    version,
    about = "Potential theory experiments on hyperbolic graphs"
)]
pub struct Cli {
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for reports.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// `tree:B:R`, `path:N`, `cycle:N`, `grid:W:H`, `product-tree:B:R`,
    /// `random:N:EXTRA:SEED` or a graph file.
    #[arg(long)]
    pub graph: String,
}

#[derive(Debug, Args)]
pub struct OperatorArgs {
    /// Constant potential.
    #[arg(long, default_value_t = 0.0)]
    pub potential: f64,
    /// Centre of the ball domain.
    #[arg(long, default_value_t = 0)]
    pub center: usize,
    /// Radius of the ball domain (whole graph when absent).
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated graph in text form.
    Build {
        #[command(flatten)]
        graph: GraphArgs,
        /// Graph file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Hyperbolicity constants.
    Delta {
        #[command(flatten)]
        graph: GraphArgs,
        /// Sampled quadruples (exhaustive on small graphs).
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Φ-chain along a geodesic.
    Phichain {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        /// Hyperbolicity constant (measured when absent).
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dirichlet Green function with one pole.
    Green {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        #[arg(long)]
        pole: usize,
        /// Also write `vertex,distance_to_pole,value` rows.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Principal Dirichlet eigenvalue.
    Eig {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Martin kernel convergence along a ray to the last vertex.
    Martin {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 0.0)]
        potential: f64,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8,10,12")]
        depths: Vec<usize>,
        #[arg(long, default_value_t = 3.0)]
        window: f64,
        #[arg(long, default_value_t = 3.0)]
        margin: f64,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One Green-function inequality check.
    Verify {
        /// 3g, growth, decay, rmp, bhi or greenmetric.
        check: String,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Minimum distance of 3G middle points to the chain ends.
        #[arg(long, default_value_t = 0.0)]
        separation: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Distance from the centre to the chain end (radius - 1 by default).
        #[arg(long)]
        chain_length: Option<f64>,
        #[arg(long, default_value_t = 2)]
        bhi_level: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quasi-hyperbolic unfolding of a planar domain.
    Unfold {
        /// disc, square, slit, lshape, cusp:Q or interval.
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        #[arg(long, default_value = "uniformity,delta,hardy,transfer")]
        checks: String,
        #[arg(long, default_value_t = 0.0)]
        potential: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Build { .. } => "build",
            Command::Delta { .. } => "delta",
            Command::Phichain { .. } => "phichain",
            Command::Green { .. } => "green",
            Command::Eig { .. } => "eig",
            Command::Martin { .. } => "martin",
            Command::Verify { .. } => "verify",
            Command::Unfold { .. } => "unfold",
            Command::Run { .. } => "run",
        }
    }

    fn out(&self) -> Option<&Path> {
        match self {
            Command::Build { .. } => None,
            Command::Delta { out, .. }
            | Command::Phichain { out, .. }
            | Command::Green { out, .. }
            | Command::Eig { out, .. }
            | Command::Martin { out, .. }
            | Command::Verify { out, .. }
            | Command::Unfold { out, .. }
            | Command::Run { out, .. } => out.as_deref(),
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn build_graph(args: &GraphArgs) -> Result<Arc<crate::MetricGraph>> {
    Ok(Arc::new(args.graph.parse::<GraphSpec>()?.build()?))
}

fn domain_of(g: &crate::MetricGraph, op: &OperatorArgs) -> Result<Domain> {
    match op.radius {
        Some(r) => Domain::ball(g, op.center, r),
        None => Ok(Domain::all(g)),
    }
}

fn plain(body: Value) -> Report {
    Report {
        body,
        assertions: Vec::new(),
    }
}

/// Runs a command and returns its report; the input hash covers the config
/// file for `run` and the graph text or command arguments otherwise.
pub fn execute(cli: &Cli) -> Result<(Report, String)> {
    match &cli.command {
        Command::Build { graph, out } => {
            let g = build_graph(graph)?;
            let text = g.to_text();
            fs::write(out, &text)?;
            let body = json!({ "vertices": g.n(), "edges": g.edges().len(), "file": out.display().to_string() });
            Ok((plain(body), sha256_hex(text.as_bytes())))
        }
        Command::Delta { graph, samples, .. } => {
            let g = build_graph(graph)?;
            let mode = default_scan(g.n(), *samples, cli.seed);
            let body = json!({
                "vertices": g.n(),
                "mode": format!("{mode:?}"),
                "delta_four_point": delta_four_point(&g, mode)?,
                "delta_thin_triangles": delta_thin_triangles(&g, mode)?,
            });
            Ok((plain(body), sha256_hex(g.to_text().as_bytes())))
        }
        Command::Phichain {
            graph,
            from,
            to,
            delta,
            samples,
            ..
        } => {
            let g = build_graph(graph)?;
            let delta = match delta {
                Some(d) => *d,
                None => delta_four_point(&g, default_scan(g.n(), *samples, cli.seed))?,
            };
            let chain = phi_chain_along_geodesic(&g, *from, ChainTarget::Vertex(*to), delta)?;
            let check = verify_phi_chain(&g, &chain);
            let body = json!({
                "delta": delta,
                "track_points": chain.track_points,
                "set_sizes": chain.sets.iter().map(Vec::len).collect::<Vec<_>>(),
                "phi0": chain.phi0, "alpha": chain.alpha, "beta": chain.beta,
                "ok": check.ok, "violations": check.violations,
            });
            let mut report = plain(body);
            report.assertions.push(pipeline::Assertion {
                name: "phi_chain".into(),
                passed: check.ok,
            });
            Ok((report, sha256_hex(g.to_text().as_bytes())))
        }
        Command::Green {
            graph,
            operator,
            pole,
            csv,
            ..
        } => {
            let g = build_graph(graph)?;
            let op = SchrodingerOperator::constant(Arc::clone(&g), operator.potential)?;
            let domain = domain_of(&g, operator)?;
            let table = green_dirichlet(&op, &domain, *pole)?;
            if let Some(path) = csv {
                let dist = g.distances_from(*pole);
                let mut text = String::from("vertex,distance_to_pole,value\n");
                for &x in domain.vertices() {
                    text.push_str(&format!("{x},{},{:e}\n", dist[x], table.values[x]));
                }
                fs::write(path, text)?;
            }
            let body = json!({
                "pole": pole,
                "domain_vertices": domain.len(),
                "residual": table.residual,
                "values": domain.vertices().iter().map(|&x| table.values[x]).collect::<Vec<_>>(),
                "vertices": domain.vertices(),
            });
            Ok((plain(body), sha256_hex(g.to_text().as_bytes())))
        }
        Command::Eig {
            graph, operator, ..
        } => {
            let g = build_graph(graph)?;
            let op = SchrodingerOperator::constant(Arc::clone(&g), operator.potential)?;
            let domain = domain_of(&g, operator)?;
            let lambda1 = dirichlet_eigenvalue(&op, &domain)?;
            let mut report = plain(json!({ "lambda1": lambda1, "domain_vertices": domain.len() }));
            report.assertions.push(pipeline::Assertion {
                name: "coercive".into(),
                passed: exceeds_shift(lambda1, 0.0),
            });
            Ok((report, sha256_hex(g.to_text().as_bytes())))
        }
        Command::Martin {
            graph,
            potential,
            depths,
            window,
            margin,
            r_max,
            tol,
            ..
        } => {
            let depths = depths
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",");
            let mut text = format!(
                "[run]\npipeline = martin\n[graph]\nspec = {}\n[operator]\npotential = {potential}\n[checks]\ndepths = {depths}\nwindow = {window}\nmargin = {margin}\ntol = {tol}\n",
                graph.graph
            );
            if let Some(r) = r_max {
                text.push_str(&format!("r_max = {r}\n"));
            }
            let cfg = Config::parse(&text)?;
            Ok((pipeline::martin(&cfg)?, sha256_hex(text.as_bytes())))
        }
        Command::Verify {
            check,
            graph,
            operator,
            sigma,
            separation,
            eps,
            chain_length,
            bhi_level,
            ..
        } => {
            let radius = operator
                .radius
                .map(|r| format!("radius = {r}\n"))
                .unwrap_or_default();
            let length = chain_length
                .map(|c| format!("chain_length = {c}\n"))
                .unwrap_or_default();
            let text = format!(
                "[graph]\nspec = {}\n[operator]\npotential = {}\n[domain]\ncenter = {}\n{radius}[checks]\nsigma = {sigma}\nseparation = {separation}\neps = {eps}\nbhi_level = {bhi_level}\n{length}",
                graph.graph, operator.potential, operator.center
            );
            let cfg = Config::parse(&text)?;
            let check = if check == "3G" { "3g" } else { check.as_str() };
            Ok((
                pipeline::inequalities(&cfg, cli.seed, Some(check))?,
                sha256_hex(text.as_bytes()),
            ))
        }
        Command::Unfold {
            domain,
            h,
            checks,
            potential,
            ..
        } => {
            let text = format!(
                "[run]\npipeline = unfold\n[domain]\nspec = {domain}\nh = {h}\n[operator]\npotential = {potential}\n[checks]\nlist = {checks}\n"
            );
            let cfg = Config::parse(&text)?;
            Ok((
                pipeline::unfold(&cfg, cli.seed)?,
                sha256_hex(text.as_bytes()),
            ))
        }
        Command::Run { config, .. } => {
            let bytes = fs::read(config)?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|e| Error::input(format!("config is not UTF-8: {e}")))?;
            let cfg = Config::parse(&text)?;
            Ok((pipeline::run(&cfg, cli.seed)?, sha256_hex(&bytes)))
        }
    }
}

/// Full JSON document for a report.
pub fn document(cli: &Cli, report: &Report, input_sha256: &str) -> Value {
    json!({
        "meta": {
            "tool": "hyperpot",
            "version": env!("CARGO_PKG_VERSION"),
            "command": cli.command.name(),
            "seed": cli.seed,
            "input_sha256": input_sha256,
        },
        "passed": report.passed(),
        "assertions": report.assertions,
        "report": report.body,
    })
}

/// Parses arguments, runs the command, writes the report and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("warning: could not configure {t} threads: {e}");
        }
    }
    let out_path = cli
        .command
        .out()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cli.out_dir.join(format!("{}.json", cli.command.name())));
    match execute(&cli) {
        Ok((report, hash)) => {
            let doc = document(&cli, &report, &hash);
            if let Err(e) = write_json(&out_path, &doc) {
                eprintln!("error: {e}");
                return e.exit_code();
            }
            for a in &report.assertions {
                println!("{} {}", if a.passed { "PASS" } else { "FAIL" }, a.name);
            }
            println!("report written to {}", out_path.display());
            if report.passed() {
                0
            } else {
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Numerical { msg, dump } = &e {
                let path = cli
                    .out_dir
                    .join(format!("{}-diagnostic.json", cli.command.name()));
                let doc = json!({ "error": msg, "dump": dump });
                match write_json(&path, &doc) {
                    Ok(()) => eprintln!("diagnostic dump written to {}", path.display()),
                    Err(w) => eprintln!("could not write diagnostic dump: {w}"),
                }
            }
            e.exit_code()
        }
    }
}

fn write_json(path: &Path, doc: &Value) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
