//! `gapwb` — batch front end for the workbench: grid metrics, distortion
//! certificates, gap reports, relaxation solves, sparsest cuts, and the
//! geometric-measure experiments, all stamped with reproducible manifests.
//!
//! Exit codes: 0 success, 2 precondition violation, 3 convergence/search
//! failure, 4 I/O. Errors and logs are single-line JSON documents on
//! stderr; reports are JSON files (with CSV mirrors for tabular data).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use gapwb_cli::commands::{self, Ctx, MeasureSource, Outcome};
use gapwb_cli::errors::CliError;
use gapwb_cli::manifest::{normalized_command, versions, RunManifest};
use gapwb_cli::spec::{parse_epsilons, parse_strategy};
use gapwb_heisenberg::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "gapwb",
    version,
    about = "Numerical workbench for metric-embedding gap experiments",
    long_about = None
)]
struct Cli {
    /// RNG seed for every sampled subroutine.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: GAP_WORKBENCH_THREADS, then all cores).
    /// By contract this never changes numeric output.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Experiment-constant config file (JSON; missing keys take defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit the grid metric on {0..k}^3 (optionally a seeded subset) with a
    /// negative-type diagnostic. CSV mirror: the distance matrix.
    Grid {
        /// Grid side parameter; the grid has (k+1)^3 points.
        #[arg(long)]
        k: usize,
        /// Restrict to a seeded subset of this size.
        #[arg(long)]
        subset: Option<usize>,
        /// Report file (stdout when omitted); mirror at the same stem .csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact L1-distortion certificate for a metric file (.json or .csv).
    Distortion {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrality-gap report: from a metric (certificate pipeline) or from
    /// an instance (exact cut vs relaxation), with identity cross-checks.
    Gap {
        /// Metric file: runs the negative-type -> certificate -> dual
        /// demands -> relaxation chain.
        #[arg(long, conflicts_with = "instance")]
        metric: Option<PathBuf>,
        /// Instance file {n, C, D}: compares the exact sparsest cut with
        /// the relaxation value.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Override the solver's stopping tolerance.
        #[arg(long)]
        stop_tol: Option<f64>,
        /// Override the solver's iteration limit.
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the negative-type relaxation for an instance file.
    Sdp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        stop_tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force sparsest cut for an instance file.
    Sparsest {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Non-monotonicity of a named set with its noise floor and best
    /// half-space fit. CSV mirror: the summary row.
    Monotone {
        /// Set spec: half-space:nx,ny,nz,off | slab:lo,hi | ball:cx,cy,cz,r
        /// | bent:amplitude.
        #[arg(long)]
        set: String,
        /// Ball spec cx,cy,cz,r.
        #[arg(long, default_value = "0,0,0,1")]
        ball: String,
        /// Number of sampled lines.
        #[arg(long, default_value_t = 2000)]
        lines: usize,
        /// Trace resolution along lines.
        #[arg(long, default_value_t = 1.0 / 64.0)]
        resolution: f64,
        /// Lattice spacing for the half-space fit.
        #[arg(long, default_value_t = 0.125)]
        fit_resolution: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Central-collapse search for a named map over an epsilon list.
    /// CSV mirror: epsilon vs ratio, plot-ready.
    Collapse {
        /// Map spec: horizontal | coordinate:x|y | dist:cx,cy,cz.
        #[arg(long)]
        map: String,
        #[arg(long, default_value = "0,0,0,1")]
        ball: String,
        /// Comma-separated separations in (0, 1).
        #[arg(long, default_value = "0.25,0.125,0.0625,0.03125,0.015625")]
        epsilons: String,
        /// grid-scan | segment-partition.
        #[arg(long, default_value = "grid-scan")]
        strategy: String,
        /// Voxel edge for the sampled map.
        #[arg(long, default_value_t = 0.0625)]
        resolution: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scale/location selection for a cut measure: class-weight table and
    /// the chosen (j, y). CSV mirror: the weight table.
    ScaleSelect {
        /// Directory holding a saved cut measure.
        #[arg(long, conflicts_with_all = ["fixture", "set"])]
        measure: Option<PathBuf>,
        /// Shipped fixture: half-space-x | coordinate-x | horizontal-xy.
        #[arg(long, conflicts_with = "set")]
        fixture: Option<String>,
        /// A set spec, voxelized into a single-atom measure.
        #[arg(long)]
        set: Option<String>,
        #[arg(long, default_value = "0,0,0,1")]
        ball: String,
        #[arg(long, default_value_t = 400)]
        lines: usize,
        /// Trace resolution along lines.
        #[arg(long, default_value_t = 1.0 / 32.0)]
        resolution: f64,
        /// Voxel edge used when building measures from fixtures or sets.
        #[arg(long, default_value_t = 1.0 / 16.0)]
        voxel_resolution: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the frozen census oracles and compare against the recorded
    /// calibration values; drift exits with the convergence code.
    CalibrateOracle {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let start = Instant::now();
    let args: Vec<String> = std::env::args().collect();

    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Precondition(e.to_string());
            eprintln!("{}", err.to_json_line());
            return err.exit_code();
        }
    };

    if let Some(n) = thread_count(&cli) {
        // Ignore the error from a pool that already exists; that only
        // happens in-process under tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    match execute(&cli, &args, start) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}

fn thread_count(cli: &Cli) -> Option<usize> {
    cli.threads.or_else(|| {
        std::env::var("GAP_WORKBENCH_THREADS").ok().and_then(|v| v.parse().ok())
    })
}

fn execute(cli: &Cli, args: &[String], start: Instant) -> Result<i32, CliError> {
    let config = match &cli.config {
        Some(path) => {
            let loaded = ExperimentConfig::load(path)?;
            loaded.validate()?;
            loaded
        }
        None => ExperimentConfig::default(),
    };
    let mut ctx = Ctx::new(cli.seed, config);
    if let Some(path) = &cli.config {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        ctx.record_hash(path, &bytes);
    }

    let (outcome, out) = dispatch(cli, &mut ctx)?;

    let mut output_paths: Vec<String> = Vec::new();
    let csv_path = out.as_deref().and_then(|p| csv_mirror_path(p, outcome.csv.is_some()));
    if let Some(path) = out.as_deref() {
        output_paths.push(path.display().to_string());
    }
    if let Some(p) = &csv_path {
        output_paths.push(p.display().to_string());
    }

    let manifest = RunManifest {
        command: normalized_command(args),
        config: ctx.config,
        seed: ctx.seed,
        versions: versions(),
        input_hashes: ctx.input_hashes.clone(),
        output_paths,
        wall_time_ms: None,
    };
    let document = json!({ "manifest": manifest, "report": outcome.report });
    let mut text = serde_json::to_string_pretty(&document).expect("report serializes");
    text.push('\n');

    match out.as_deref() {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            if let (Some(csv), Some(p)) = (&outcome.csv, &csv_path) {
                std::fs::write(p, csv)
                    .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
            }
        }
        None => print!("{text}"),
    }

    let wall = start.elapsed().as_millis() as u64;
    eprintln!("{}", serde_json::to_string(&json!({"log": {"wall_ms": wall}})).unwrap());

    if let Some(e) = outcome.post_error {
        eprintln!("{}", e.to_json_line());
        return Ok(e.exit_code());
    }
    Ok(0)
}

/// The CSV mirror lands next to the report with the `csv` extension; a
/// report explicitly named `*.csv` keeps its bytes and skips the mirror.
fn csv_mirror_path(out: &Path, has_csv: bool) -> Option<PathBuf> {
    if !has_csv {
        return None;
    }
    let mirror = out.with_extension("csv");
    if mirror == out {
        return None;
    }
    Some(mirror)
}

fn dispatch(cli: &Cli, ctx: &mut Ctx) -> Result<(Outcome, Option<PathBuf>), CliError> {
    match &cli.cmd {
        Cmd::Grid { k, subset, out } => {
            Ok((commands::grid(ctx, *k, *subset)?, out.clone()))
        }
        Cmd::Distortion { metric, out } => {
            Ok((commands::distortion(ctx, metric)?, out.clone()))
        }
        Cmd::Gap { metric, instance, stop_tol, max_iter, out } => Ok((
            commands::gap(ctx, metric.as_deref(), instance.as_deref(), *stop_tol, *max_iter)?,
            out.clone(),
        )),
        Cmd::Sdp { instance, stop_tol, max_iter, out } => {
            Ok((commands::sdp(ctx, instance, *stop_tol, *max_iter)?, out.clone()))
        }
        Cmd::Sparsest { instance, out } => {
            Ok((commands::sparsest(ctx, instance)?, out.clone()))
        }
        Cmd::Monotone { set, ball, lines, resolution, fit_resolution, out } => Ok((
            commands::monotone(ctx, set, ball, *lines, *resolution, *fit_resolution)?,
            out.clone(),
        )),
        Cmd::Collapse { map, ball, epsilons, strategy, resolution, out } => {
            let eps = parse_epsilons(epsilons)?;
            let strat = parse_strategy(strategy)?;
            Ok((commands::collapse(ctx, map, ball, &eps, strat, *resolution)?, out.clone()))
        }
        Cmd::ScaleSelect {
            measure,
            fixture,
            set,
            ball,
            lines,
            resolution,
            voxel_resolution,
            out,
        } => {
            let source = match (measure, fixture, set) {
                (Some(dir), None, None) => MeasureSource::Dir(dir),
                (None, Some(name), None) => MeasureSource::Fixture(name),
                (None, None, Some(spec)) => MeasureSource::Set(spec),
                _ => {
                    return Err(CliError::Precondition(
                        "pass exactly one of --measure, --fixture, or --set".into(),
                    ))
                }
            };
            Ok((
                commands::scale_select(ctx, source, ball, *lines, *resolution, *voxel_resolution)?,
                out.clone(),
            ))
        }
        Cmd::CalibrateOracle { out } => Ok((commands::calibrate_oracle(ctx)?, out.clone())),
    }
}
