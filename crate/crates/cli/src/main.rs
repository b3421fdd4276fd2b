//! `snl`: generate, solve and analyse sensor network localization problems.
//!
//! Exit status is 0 on success, 2 when a solver stops without converging and
//! 1 for usage, parse or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use snl_core::analysis::{self, ScanOutcome};
use snl_core::descent::{self, DescentOptions, DEFAULT_MERGE_RADIUS};
use snl_core::io::ProblemDocument;
use snl_core::model::{self, BuiltinExample};
use snl_core::sdr::{self, SdrOptions};
use snl_core::{LossSpec, Rect, SensorConfig, SnlError, SnlProblem, UnitDiskCase};

#[derive(Parser, Debug)]
#[command(name = "snl", version, about = "Sensor network localization toolkit")]
struct Cli {
    /// Seed for every randomized command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a problem file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Check a problem for non-convexity of its loss.
    Certify(CertifyArgs),
    /// Monte Carlo frequency of certified non-convexity on random instances.
    Mc(McArgs),
    /// Loss values on a 2-D grid for one moving sensor.
    Landscape(LandscapeArgs),
    /// Edge-length deviation along the lifted path between two solutions.
    Pathcheck(PathArgs),
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Uniform sensors in a cube, edges between points within `--r`.
    Unitdisk {
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "corners")]
        anchors: AnchorLayout,
    },
    /// Each sensor linked to its `dim + 1` nearest predecessors.
    Trilateration {
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long)]
        n: usize,
    },
    /// A named example: one_anchor_one_sensor, three_anchor_one_sensor,
    /// radius_example (with `--params e,h,r`).
    Example {
        name: String,
        #[arg(long, value_delimiter = ',')]
        params: Vec<f64>,
    },
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// Side length of the cube `[0, side]^dim`.
    #[arg(long, default_value_t = 1.0)]
    square: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
}

impl RegionArgs {
    fn rect(&self) -> Result<Rect, SnlError> {
        Rect::cube(self.dim, self.square)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AnchorLayout {
    /// One anchor per cube corner.
    #[value(alias = "corners4")]
    Corners,
    None,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Gd,
    Sdr,
    SdrGd,
}

#[derive(Args, Debug)]
struct LossArgs {
    /// Degree inside the absolute value.
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    /// Degree outside the absolute value.
    #[arg(long)]
    c: Option<f64>,
}

impl LossArgs {
    fn spec(&self, dim: usize, default_c: f64) -> Result<LossSpec, SnlError> {
        LossSpec::new(self.b, self.c.unwrap_or(default_c), dim)
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(value_enum)]
    method: Method,
    file: PathBuf,
    #[command(flatten)]
    loss: LossArgs,
    /// Random starts for `gd`.
    #[arg(long, default_value_t = 1)]
    starts: usize,
    /// Start box `lo,hi` applied to every coordinate (default: anchor
    /// bounding box grown by 1).
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    start_box: Vec<f64>,
    /// Descent iteration cap.
    #[arg(long)]
    iters: Option<usize>,
    /// Relaxation residual tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Relaxation iteration cap.
    #[arg(long, default_value_t = 50_000)]
    sdr_iters: usize,
    /// Weight of the spreading regularizer in the relaxation.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_MERGE_RADIUS)]
    merge_radius: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CertifyMode {
    /// The three-point condition at the true positions.
    Sufficient,
    /// The same condition in dimension `n + d`.
    Augmented,
    /// Random segment search.
    Scan,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    file: PathBuf,
    /// Defaults to `sufficient` when true positions are present, else `scan`.
    #[arg(long, value_enum)]
    mode: Option<CertifyMode>,
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = 10_000)]
    segments: usize,
    #[arg(long, default_value_t = 3)]
    samples: usize,
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    scan_box: Vec<f64>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[command(flatten)]
    region: RegionArgs,
    #[arg(long)]
    r: f64,
    #[arg(long, value_enum, default_value = "corners")]
    anchors: AnchorLayout,
    #[arg(long, value_delimiter = ',', default_value = "25,50,100,200")]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = analysis::DEFAULT_EPSILON)]
    epsilon: f64,
    #[command(flatten)]
    loss: LossArgs,
}

#[derive(Args, Debug)]
struct LandscapeArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 0)]
    sensor: usize,
    /// Grid range `lo,hi` on both axes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,2")]
    grid: Vec<f64>,
    /// Points per axis.
    #[arg(long, default_value_t = 101)]
    res: usize,
    #[command(flatten)]
    loss: LossArgs,
}

#[derive(Args, Debug)]
struct PathArgs {
    file: PathBuf,
    /// First solution (JSON list of points, or an object with `positions`);
    /// defaults to the file's true positions.
    #[arg(long)]
    p: Option<PathBuf>,
    /// Second solution.
    #[arg(long)]
    q: PathBuf,
    #[arg(long, default_value_t = 101)]
    samples: usize,
}

enum Outcome {
    Done,
    NotConverged,
}

type CliResult<T> = Result<T, String>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Gen { kind } => cmd_gen(cli, kind),
        Command::Solve(args) => cmd_solve(cli, args),
        Command::Certify(args) => cmd_certify(cli, args),
        Command::Mc(args) => cmd_mc(cli, args),
        Command::Landscape(args) => cmd_landscape(cli, args),
        Command::Pathcheck(args) => cmd_pathcheck(cli, args),
    }
}

fn err(e: SnlError) -> String {
    e.to_string()
}

fn require_seed(cli: &Cli, what: &str) -> CliResult<u64> {
    cli.seed.ok_or_else(|| format!("{what} is randomized: pass --seed"))
}

fn json_only(cli: &Cli, what: &str) -> CliResult<()> {
    match cli.format {
        Some(Format::Csv) => Err(format!("{what} has no CSV output")),
        _ => Ok(()),
    }
}

/// Writes `content` to `--out` (printing `summary`) or to stdout (with the
/// summary on stderr).
fn emit(cli: &Cli, content: &str, summary: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => {
            fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            println!("{summary}");
        }
        None => {
            print!("{content}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn load(path: &Path) -> CliResult<ProblemDocument> {
    ProblemDocument::load(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn range_pair(v: &[f64], flag: &str) -> CliResult<(f64, f64)> {
    match *v {
        [lo, hi] if lo < hi => Ok((lo, hi)),
        _ => Err(format!("--{flag} expects lo,hi with lo < hi")),
    }
}

fn anchor_layout(layout: AnchorLayout, region: &Rect) -> Vec<Vec<f64>> {
    match layout {
        AnchorLayout::Corners => region.corners(),
        AnchorLayout::None => Vec::new(),
    }
}

fn cmd_gen(cli: &Cli, kind: &GenKind) -> CliResult<Outcome> {
    json_only(cli, "gen")?;
    let fw = match kind {
        GenKind::Unitdisk { region, r, n, anchors } => {
            let seed = require_seed(cli, "gen unitdisk")?;
            let rect = region.rect().map_err(err)?;
            let case = UnitDiskCase::new(rect.clone(), *r, *n, anchor_layout(*anchors, &rect)).map_err(err)?;
            model::sample_unit_disk(&case, seed)
        }
        GenKind::Trilateration { region, n } => {
            let seed = require_seed(cli, "gen trilateration")?;
            model::gen_trilateration(region.dim, *n, &region.rect().map_err(err)?, seed).map_err(err)?
        }
        GenKind::Example { name, params } => BuiltinExample::from_name(name, params).map_err(err)?.framework(),
    };
    let doc = ProblemDocument::from_framework(&fw);
    let summary = format!(
        "{} sensors, {} anchors, {} sensor edges, {} anchor edges",
        fw.topology().n_sensors(),
        fw.topology().n_anchors(),
        fw.topology().edges_ss().len(),
        fw.topology().edges_as().len()
    );
    emit(cli, &(doc.to_json().map_err(err)? + "\n"), &summary)?;
    Ok(Outcome::Done)
}

fn default_box(p: &SnlProblem) -> Rect {
    let d = p.dim();
    if p.anchors().is_empty() {
        return Rect::symmetric(d, -2.0, 2.0).expect("valid box");
    }
    let lo = (0..d).map(|k| p.anchors().iter().map(|a| a[k]).fold(f64::INFINITY, f64::min) - 1.0).collect();
    let hi = (0..d).map(|k| p.anchors().iter().map(|a| a[k]).fold(f64::NEG_INFINITY, f64::max) + 1.0).collect();
    Rect::new(lo, hi).expect("valid box")
}

fn positions_csv(x: &SensorConfig) -> String {
    let mut out = String::from("sensor");
    for k in 0..x.dim() {
        out.push_str(&format!(",x{k}"));
    }
    out.push('\n');
    for i in 0..x.n_sensors() {
        out.push_str(&i.to_string());
        for v in x.point(i) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

fn cmd_solve(cli: &Cli, args: &SolveArgs) -> CliResult<Outcome> {
    let doc = load(&args.file)?;
    let p = doc.to_problem().map_err(err)?;
    let sdr_opts = SdrOptions {
        solver_tol: args.tol,
        max_iters: args.sdr_iters,
        regularization_weight: args.lambda,
        ..SdrOptions::default()
    };
    let (doc_out, positions, summary, converged) = match args.method {
        Method::Gd => {
            let seed = require_seed(cli, "solve gd")?;
            let spec = args.loss.spec(p.dim(), 2.0).map_err(err)?;
            let mut opts = DescentOptions::for_spec(&spec);
            if let Some(it) = args.iters {
                opts.max_iters = it;
            }
            let start_box = if args.start_box.is_empty() {
                default_box(&p)
            } else {
                let (lo, hi) = range_pair(&args.start_box, "box")?;
                Rect::symmetric(p.dim(), lo, hi).map_err(err)?
            };
            let results = descent::multistart(&p, &spec, args.starts, &start_box, &opts, seed).map_err(err)?;
            let clusters = descent::cluster_minima(&results, args.merge_radius);
            let best = results.iter().min_by(|a, b| a.loss_final.total_cmp(&b.loss_final)).expect("at least one start");
            let clusters_json: Vec<Value> = clusters
                .iter()
                .map(|c| json!({ "positions": c.representative.points(), "loss": c.loss, "count": c.members.len() }))
                .collect();
            let v = json!({
                "method": "gd",
                "b": spec.inside_degree,
                "c": spec.outside_degree,
                "starts": args.starts,
                "positions": best.x_final.points(),
                "loss": best.loss_final,
                "iterations": best.iters_used,
                "converged": best.converged,
                "clusters": clusters_json,
            });
            let summary = format!(
                "gd: best loss {:.3e} after {} iterations, {} distinct minima over {} starts",
                best.loss_final,
                best.iters_used,
                clusters.len(),
                args.starts
            );
            (v, best.x_final.clone(), summary, best.converged)
        }
        Method::Sdr => {
            let sol = sdr::solve_sdr_unchecked(&p, &sdr_opts).map_err(err)?;
            let x = sol.positions();
            let v = json!({
                "method": "sdr",
                "positions": x.points(),
                "objective": sol.objective,
                "numeric_rank": sol.numeric_rank,
                "iterations": sol.iterations,
                "converged": sol.converged,
                "solution": sol.to_record(),
            });
            let summary = format!(
                "sdr: objective {:.3e}, rank {}, {} iterations{}",
                sol.objective,
                sol.numeric_rank,
                sol.iterations,
                if sol.converged { "" } else { " (not converged)" }
            );
            (v, x, summary, sol.converged)
        }
        Method::SdrGd => {
            let mut opts = DescentOptions::default();
            if let Some(it) = args.iters {
                opts.max_iters = it;
            }
            match sdr::sdr_gd_pipeline(&p, &sdr_opts, &opts) {
                Ok(res) => {
                    let v = json!({
                        "method": "sdr-gd",
                        "positions": res.result.x_final.points(),
                        "loss": res.result.loss_final,
                        "iterations": res.result.iters_used,
                        "converged": res.result.converged,
                        "warm_start": res.warm.points(),
                        "solution": res.sdr.to_record(),
                    });
                    let summary = format!(
                        "sdr-gd: loss {:.3e} after {} relaxation and {} descent iterations",
                        res.result.loss_final, res.sdr.iterations, res.result.iters_used
                    );
                    (v, res.result.x_final, summary, res.result.converged)
                }
                Err(SnlError::SdrNotConverged(sol)) => {
                    let x = sol.positions();
                    let v = json!({
                        "method": "sdr-gd",
                        "positions": x.points(),
                        "converged": false,
                        "solution": sol.to_record(),
                    });
                    let summary = format!("sdr-gd: relaxation did not converge in {} iterations", sol.iterations);
                    (v, x, summary, false)
                }
                Err(e) => return Err(err(e)),
            }
        }
    };
    let content = match cli.format {
        Some(Format::Csv) => positions_csv(&positions),
        _ => pretty(&doc_out),
    };
    emit(cli, &content, &summary)?;
    Ok(if converged { Outcome::Done } else { Outcome::NotConverged })
}

fn cmd_certify(cli: &Cli, args: &CertifyArgs) -> CliResult<Outcome> {
    json_only(cli, "certify")?;
    let doc = load(&args.file)?;
    let p = doc.to_problem().map_err(err)?;
    let spec = args.loss.spec(p.dim(), 1.0).map_err(err)?;
    let fw = doc.to_framework().map_err(err)?;
    let mode = args.mode.unwrap_or(if fw.is_some() { CertifyMode::Sufficient } else { CertifyMode::Scan });
    let (v, summary) = match mode {
        CertifyMode::Sufficient | CertifyMode::Augmented => {
            let fw = fw.ok_or("the sufficient condition needs true sensor positions (sensors_true)")?;
            let cert = if mode == CertifyMode::Sufficient {
                analysis::check_sufficient_condition(&fw, &spec)
            } else {
                analysis::augmented_nonconvexity(&fw, &spec)
            }
            .map_err(err)?;
            let summary = format!(
                "{}: lhs {:.6e} rhs {:.6e}",
                if cert.is_valid() { "non-convex" } else { "inconclusive" },
                cert.lhs,
                cert.rhs
            );
            (json!({ "valid": cert.is_valid(), "certificate": cert }), summary)
        }
        CertifyMode::Scan => {
            let seed = require_seed(cli, "certify --mode scan")?;
            let bx = if args.scan_box.is_empty() {
                default_box(&p)
            } else {
                let (lo, hi) = range_pair(&args.scan_box, "box")?;
                Rect::symmetric(p.dim() * p.n_sensors(), lo, hi).map_err(err)?
            };
            match analysis::segment_convexity_scan(&p, &spec, &bx, args.segments, args.samples, seed).map_err(err)? {
                ScanOutcome::Violation(cert) => {
                    let summary = format!("non-convex: lhs {:.6e} rhs {:.6e}", cert.lhs, cert.rhs);
                    (json!({ "valid": true, "certificate": cert }), summary)
                }
                ScanOutcome::ConvexSoFar { segments } => (
                    json!({ "valid": false, "convex_so_far": segments }),
                    format!("no violation on {segments} segments"),
                ),
            }
        }
    };
    emit(cli, &pretty(&v), &summary)?;
    Ok(Outcome::Done)
}

fn cmd_mc(cli: &Cli, args: &McArgs) -> CliResult<Outcome> {
    let seed = require_seed(cli, "mc")?;
    let rect = args.region.rect().map_err(err)?;
    let anchors = anchor_layout(args.anchors, &rect);
    let case = UnitDiskCase::new(rect.clone(), args.r, 1, anchors).map_err(err)?;
    let spec = args.loss.spec(rect.dim(), 1.0).map_err(err)?;
    let report =
        analysis::monte_carlo_nonconvexity_with_epsilon(&case, &spec, &args.n_list, args.trials, seed, args.epsilon)
            .map_err(err)?;
    let content = match cli.format {
        Some(Format::Json) => pretty(&serde_json::to_value(&report).map_err(|e| e.to_string())?),
        _ => report.to_csv(),
    };
    let last = report.rows.last().expect("non-empty n list");
    let summary = format!("n={}: certified fraction {:.3} over {} trials", last.n, last.fraction, last.trials);
    emit(cli, &content, &summary)?;
    Ok(Outcome::Done)
}

fn cmd_landscape(cli: &Cli, args: &LandscapeArgs) -> CliResult<Outcome> {
    let doc = load(&args.file)?;
    let p = doc.to_problem().map_err(err)?;
    let spec = args.loss.spec(p.dim(), 1.0).map_err(err)?;
    let (lo, hi) = range_pair(&args.grid, "grid")?;
    let region = Rect::symmetric(2, lo, hi).map_err(err)?;
    let others = match &doc.sensors_true {
        Some(s) => SensorConfig::from_points(s).map_err(err)?,
        None => SensorConfig::zeros(p.dim(), p.n_sensors()),
    };
    let grid = analysis::landscape_grid(&p, &spec, args.sensor, &region, (args.res, args.res), &others).map_err(err)?;
    let content = match cli.format {
        Some(Format::Json) => pretty(&serde_json::to_value(&grid).map_err(|e| e.to_string())?),
        _ => grid.to_csv(),
    };
    let summary = format!("{} grid local minima", grid.local_minima().len());
    emit(cli, &content, &summary)?;
    Ok(Outcome::Done)
}

fn read_positions(path: &Path) -> CliResult<SensorConfig> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let points = match v.get("positions") {
        Some(p) => p.clone(),
        None => v,
    };
    let points: Vec<Vec<f64>> =
        serde_json::from_value(points).map_err(|e| format!("{}: expected a list of points: {e}", path.display()))?;
    SensorConfig::from_points(&points).map_err(err)
}

fn cmd_pathcheck(cli: &Cli, args: &PathArgs) -> CliResult<Outcome> {
    let doc = load(&args.file)?;
    let p = doc.to_problem().map_err(err)?;
    let p_cfg = match (&args.p, &doc.sensors_true) {
        (Some(path), _) => read_positions(path)?,
        (None, Some(s)) => SensorConfig::from_points(s).map_err(err)?,
        (None, None) => return Err("no --p given and the file has no true positions".into()),
    };
    let q_cfg = read_positions(&args.q)?;
    let dev = analysis::verify_path_isometry(&p, &p_cfg, &q_cfg, args.samples).map_err(err)?;
    let content = match cli.format {
        Some(Format::Csv) => format!("max_deviation\n{dev}\n"),
        _ => pretty(&json!({ "max_deviation": dev, "samples": args.samples })),
    };
    emit(cli, &content, &format!("max edge deviation {dev:e}"))?;
    Ok(Outcome::Done)
}
