//! One function per subcommand. Each returns an [`Outcome`]: a JSON report
//! body (embedded under `"report"` next to the run manifest) plus an
//! optional CSV mirror for tabular data, and possibly a deferred error for
//! runs that produce a full report *and* signal failure (calibration drift).

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use gapwb_core::metric::{is_negative_type, FiniteMetric};
use gapwb_core::sdp::{gap_lower_bound_from_metric, integrality_gap, solve_gl_sdp, SdpOptions};
use gapwb_core::sparsestcut::{phi_star, DemandInstance};
use gapwb_core::cutcone::c1_exact;

use gapwb_heisenberg::collapse::{collapse_search, CollapseStrategy};
use gapwb_heisenberg::cutmeasure::CutMeasure;
use gapwb_heisenberg::halfspace::fit_halfspace;
use gapwb_heisenberg::nm::nm_ball;
use gapwb_heisenberg::scale::select_scale;
use gapwb_heisenberg::trace::TraceParams;
use gapwb_heisenberg::voxel::{VoxelGrid, VoxelSet};
use gapwb_heisenberg::{grid_metric, grid_metric_subset, sample_lines, ExperimentConfig};

use crate::errors::CliError;
use crate::fixtures::{calibration_oracles, cut_measure_fixture};
use crate::manifest::{sha256_hex, InputHash};
use crate::spec::{MapSpec, SetSpec};

/// Shared run state: the seed and constants in force, plus the digests of
/// every input file read so far (in read order).
pub struct Ctx {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub input_hashes: Vec<InputHash>,
}

impl Ctx {
    pub fn new(seed: u64, config: ExperimentConfig) -> Self {
        Ctx { seed, config, input_hashes: Vec::new() }
    }

    /// Read a text input file, recording its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        self.record_hash(path, &bytes);
        String::from_utf8(bytes)
            .map_err(|e| CliError::Io(format!("{} is not UTF-8: {e}", path.display())))
    }

    /// Record the digest of an already-read input.
    pub fn record_hash(&mut self, path: &Path, bytes: &[u8]) {
        self.input_hashes.push(InputHash {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    fn trace_params(&self, resolution: f64) -> Result<TraceParams, CliError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(CliError::Precondition(format!(
                "trace resolution must be positive and finite, got {resolution}"
            )));
        }
        Ok(TraceParams::for_resolution(resolution))
    }
}

/// What a command produced: the report body, an optional CSV mirror, and an
/// error to raise *after* the outputs are written.
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
    pub post_error: Option<CliError>,
}

impl Outcome {
    fn new(report: Value) -> Self {
        Outcome { report, csv: None, post_error: None }
    }

    fn with_csv(report: Value, csv: String) -> Self {
        Outcome { report, csv: Some(csv), post_error: None }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Parse a metric file by extension: `.csv` is the matrix-with-header form,
/// anything else the JSON form.
fn parse_metric(path: &Path, text: &str) -> Result<FiniteMetric, CliError> {
    let metric = if path.extension().is_some_and(|e| e == "csv") {
        FiniteMetric::from_csv(text)?
    } else {
        FiniteMetric::from_json(text)?
    };
    Ok(metric)
}

fn sdp_options(stop_tol: Option<f64>, max_iter: Option<usize>) -> Result<SdpOptions, CliError> {
    let mut opts = SdpOptions::default();
    if let Some(t) = stop_tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Precondition(format!(
                "stop tolerance must be positive and finite, got {t}"
            )));
        }
        opts.stop_tol = t;
    }
    if let Some(m) = max_iter {
        if m == 0 {
            return Err(CliError::Precondition("iteration limit must be positive".into()));
        }
        opts.max_iter = m;
    }
    Ok(opts)
}

/// `grid`: the metric on the integer grid `{0..k}^3` (optionally a seeded
/// subset), with a negative-type diagnostic. CSV mirror: the matrix.
pub fn grid(ctx: &mut Ctx, k: usize, subset: Option<usize>) -> Result<Outcome, CliError> {
    let (points, metric) = match subset {
        None => grid_metric(k)?,
        Some(size) => grid_metric_subset(k, size, ctx.seed)?,
    };
    let (verdict, min_eig) = is_negative_type(&metric, Some(1e-8))?;
    let metric_value: Value = serde_json::from_str(&metric.to_json())
        .expect("metric JSON is well-formed");
    let report = json!({
        "k": k,
        "subset": subset,
        "points": to_value(&points),
        "metric": metric_value,
        "negative_type": { "verdict": verdict, "min_eigenvalue": min_eig, "tolerance": 1e-8 },
    });
    Ok(Outcome::with_csv(report, metric.to_csv()))
}

/// `distortion`: the exact L1-distortion certificate for a metric file.
pub fn distortion(ctx: &mut Ctx, metric_path: &Path) -> Result<Outcome, CliError> {
    let text = ctx.read_input(metric_path)?;
    let metric = parse_metric(metric_path, &text)?;
    let cert = c1_exact(&metric)?;
    let report: Value =
        serde_json::from_str(&cert.to_json()).expect("certificate JSON is well-formed");
    Ok(Outcome::new(json!({ "certificate": report })))
}

/// `gap`: the full lower-bound pipeline from a metric file, or the exact
/// cut-vs-relaxation comparison for an instance file. Cross-checks the
/// duality identities and flags residual violations rather than hiding them.
pub fn gap(
    ctx: &mut Ctx,
    metric_path: Option<&Path>,
    instance_path: Option<&Path>,
    stop_tol: Option<f64>,
    max_iter: Option<usize>,
) -> Result<Outcome, CliError> {
    let opts = sdp_options(stop_tol, max_iter)?;
    let mut flags: Vec<String> = Vec::new();
    let (source, rep) = match (metric_path, instance_path) {
        (Some(path), None) => {
            let text = ctx.read_input(path)?;
            let metric = parse_metric(path, &text)?;
            (json!({"metric": path.display().to_string()}),
             gap_lower_bound_from_metric(&metric, &opts)?)
        }
        (None, Some(path)) => {
            let text = ctx.read_input(path)?;
            let inst = DemandInstance::from_json(&text)?;
            (json!({"instance": path.display().to_string()}), integrality_gap(&inst, &opts)?)
        }
        _ => {
            return Err(CliError::Precondition(
                "pass exactly one of --metric or --instance".into(),
            ))
        }
    };

    if rep.residuals.primal > 1e-6 || rep.residuals.dual > 1e-6 {
        flags.push(format!(
            "relaxation residuals above 1e-6 (primal {:.3e}, dual {:.3e})",
            rep.residuals.primal, rep.residuals.dual
        ));
    }
    let mut checks = serde_json::Map::new();
    if let Some(c1) = rep.c1 {
        checks.insert("phi_star_minus_one".into(), json!(rep.phi_star - 1.0));
        checks.insert("gap_minus_c1".into(), json!(rep.gap - c1));
        if (rep.phi_star - 1.0).abs() > 1e-6 {
            flags.push(format!("dual demands should cut at exactly 1, got {}", rep.phi_star));
        }
        if rep.gap < c1 - 2e-3 {
            flags.push(format!("gap {} fell below its certificate floor c1 = {c1}", rep.gap));
        }
    }
    if let Some(w) = rep.witness_objective {
        checks.insert("m_star_minus_witness".into(), json!(rep.m_star - w));
        if rep.m_star > w + 1e-3 {
            flags.push(format!(
                "relaxation value {} exceeds its feasibility witness {w}",
                rep.m_star
            ));
        }
    }
    checks.insert("flags".into(), json!(flags));

    Ok(Outcome::new(json!({
        "source": source,
        "gap_report": to_value(&rep),
        "checks": Value::Object(checks),
    })))
}

/// `sdp`: solve the negative-type relaxation for an instance file.
pub fn sdp(
    ctx: &mut Ctx,
    instance_path: &Path,
    stop_tol: Option<f64>,
    max_iter: Option<usize>,
) -> Result<Outcome, CliError> {
    let opts = sdp_options(stop_tol, max_iter)?;
    let text = ctx.read_input(instance_path)?;
    let inst = DemandInstance::from_json(&text)?;
    let sol = solve_gl_sdp(&inst, &opts)?;
    let report: Value =
        serde_json::from_str(&sol.to_json()).expect("solution JSON is well-formed");
    Ok(Outcome::new(json!({ "solution": report })))
}

/// `sparsest`: brute-force sparsest cut for an instance file.
pub fn sparsest(ctx: &mut Ctx, instance_path: &Path) -> Result<Outcome, CliError> {
    let text = ctx.read_input(instance_path)?;
    let inst = DemandInstance::from_json(&text)?;
    let cut = phi_star(&inst)?;
    let side: Vec<usize> = (0..inst.n()).filter(|i| (cut.mask >> i) & 1 == 1).collect();
    Ok(Outcome::new(json!({
        "n": inst.n(),
        "value": cut.value,
        "mask": cut.mask,
        "side": side,
    })))
}

/// `monotone`: non-monotonicity of a named set over sampled horizontal
/// lines, with its noise floor and the best half-space fit.
pub fn monotone(
    ctx: &mut Ctx,
    set_spec: &str,
    ball_spec: &str,
    lines: usize,
    resolution: f64,
    fit_resolution: f64,
) -> Result<Outcome, CliError> {
    let spec = SetSpec::parse(set_spec)?;
    let set = spec.build();
    let ball = crate::spec::parse_ball(ball_spec)?;
    let params = ctx.trace_params(resolution)?;
    let sample = sample_lines(&ball, lines, ctx.seed)?;
    let nm = nm_ball(&*set, &ball, &sample, &params)?;
    let fit = fit_halfspace(&*set, &ball, fit_resolution);
    let noise_floor = 3.0 * nm.std_error;
    let report = json!({
        "set": set_spec,
        "ball": to_value(&ball),
        "lines": lines,
        "trace_resolution": resolution,
        "nm": to_value(&nm),
        "noise_floor_3sigma": noise_floor,
        "below_noise_floor": nm.value <= noise_floor,
        "halfspace_fit": to_value(&fit),
        "fit_resolution": fit_resolution,
    });
    let mut csv = String::from(
        "nm,std_error,lines,noise_floor_3sigma,symdiff_fraction,normal_x,normal_y,normal_z,offset\n",
    );
    let _ = writeln!(
        csv,
        "{:?},{:?},{},{:?},{:?},{:?},{:?},{:?},{:?}",
        nm.value,
        nm.std_error,
        nm.lines,
        noise_floor,
        fit.symdiff_fraction,
        fit.normal[0],
        fit.normal[1],
        fit.normal[2],
        fit.offset
    );
    Ok(Outcome::with_csv(report, csv))
}

/// `collapse`: the central-collapse ratio of a named map over a list of
/// separations. CSV mirror: one row per epsilon, plot-ready.
pub fn collapse(
    ctx: &mut Ctx,
    map_spec: &str,
    ball_spec: &str,
    epsilons: &[f64],
    strategy: CollapseStrategy,
    resolution: f64,
) -> Result<Outcome, CliError> {
    let spec = MapSpec::parse(map_spec)?;
    let ball = crate::spec::parse_ball(ball_spec)?;
    let grid = VoxelGrid::cover_ball(&ball, resolution, resolution)?;
    let map = spec.build(grid);
    let params = ctx.config.collapse_params();
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        rows.push(collapse_search(&map, &ball, eps, strategy, &params, ctx.seed)?);
    }
    let report = json!({
        "map": map_spec,
        "ball": to_value(&ball),
        "strategy": to_value(&strategy),
        "resolution": resolution,
        "rows": to_value(&rows),
    });
    let mut csv = String::from("epsilon,r,ratio,lipschitz_max,px,py,pz,qx,qy,qz\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            row.epsilon,
            row.r,
            row.ratio,
            row.lipschitz_max,
            row.p.x,
            row.p.y,
            row.p.z,
            row.q.x,
            row.q.y,
            row.q.z
        );
    }
    Ok(Outcome::with_csv(report, csv))
}

/// Where a `scale-select` measure comes from.
pub enum MeasureSource<'a> {
    /// A directory previously written by a cut-measure save.
    Dir(&'a Path),
    /// One of the named shipped fixtures.
    Fixture(&'a str),
    /// A named set, voxelized into a single-atom measure.
    Set(&'a str),
}

/// `scale-select`: the class-weight table and the selected `(j, y)` for a
/// cut measure. CSV mirror: the weight table.
pub fn scale_select(
    ctx: &mut Ctx,
    source: MeasureSource<'_>,
    ball_spec: &str,
    lines: usize,
    resolution: f64,
    voxel_resolution: f64,
) -> Result<Outcome, CliError> {
    let ball = crate::spec::parse_ball(ball_spec)?;
    let (cm, source_desc) = match source {
        MeasureSource::Dir(dir) => {
            let cm = load_measure_hashed(ctx, dir)?;
            (cm, json!({"measure": dir.display().to_string()}))
        }
        MeasureSource::Fixture(name) => (
            cut_measure_fixture(name, &ball, voxel_resolution)?,
            json!({"fixture": name}),
        ),
        MeasureSource::Set(spec_str) => {
            let spec = SetSpec::parse(spec_str)?;
            let set = spec.build();
            let grid = VoxelGrid::cover_ball(&ball, voxel_resolution, voxel_resolution)?;
            let atom = gapwb_heisenberg::cutmeasure::CutAtom {
                set: VoxelSet::from_predicate(grid, &*set),
                weight: 1.0,
            };
            (CutMeasure::new(vec![atom])?, json!({"set": spec_str}))
        }
    };
    let params = ctx.trace_params(resolution)?;
    let sample = sample_lines(&ball, lines, ctx.seed)?;
    let dec = select_scale(
        &cm,
        &ball,
        &sample,
        &params,
        ctx.config.delta,
        ctx.config.scale_consts(),
        ctx.config.gamma,
    )?;
    // Trim the (fixed-capacity) weight table to the populated prefix.
    let last = dec.weights.iter().rposition(|&w| w > 0.0).map_or(0, |i| i + 1);
    let mut csv = String::from("j,weight\n");
    for (j, w) in dec.weights[..last.max(dec.selected_j + 1)].iter().enumerate() {
        let _ = writeln!(csv, "{j},{w:?}");
    }
    let report = json!({
        "source": source_desc,
        "ball": to_value(&ball),
        "lines": lines,
        "decomposition": to_value(&dec),
    });
    Ok(Outcome::with_csv(report, csv))
}

/// Load a saved cut measure, hashing its manifest and atom files as inputs.
fn load_measure_hashed(ctx: &mut Ctx, dir: &Path) -> Result<CutMeasure, CliError> {
    let manifest_path = dir.join("manifest.json");
    let bytes = std::fs::read(&manifest_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", manifest_path.display())))?;
    ctx.record_hash(&manifest_path, &bytes);
    #[derive(serde::Deserialize)]
    struct Entry {
        file: String,
    }
    #[derive(serde::Deserialize)]
    struct MeasureManifest {
        atoms: Vec<Entry>,
    }
    let parsed: MeasureManifest = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Io(format!("bad measure manifest: {e}")))?;
    for entry in &parsed.atoms {
        if entry.file.contains('/') || entry.file.contains("..") {
            return Err(CliError::Io(format!(
                "atom file name {:?} escapes the measure directory",
                entry.file
            )));
        }
        let p = dir.join(&entry.file);
        let b = std::fs::read(&p)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))?;
        ctx.record_hash(&p, &b);
    }
    Ok(CutMeasure::load(dir)?)
}

/// `calibrate-oracle`: recompute the frozen census oracles and compare
/// against the recorded values. Drift beyond 1e-12 still writes the full
/// comparison report, then exits with the convergence code.
pub fn calibrate_oracle(_ctx: &mut Ctx) -> Result<Outcome, CliError> {
    const TOL: f64 = 1e-12;
    let mut rows = Vec::new();
    let mut csv = String::from("oracle,class,recomputed,recorded,drift\n");
    let mut worst: f64 = 0.0;
    let mut worst_name = "";
    for oracle in calibration_oracles() {
        let got = oracle.recompute()?;
        for (j, (&g, &e)) in got.iter().zip(oracle.expected).enumerate() {
            let drift = (g - e).abs();
            if drift > worst {
                worst = drift;
                worst_name = oracle.name;
            }
            let _ = writeln!(csv, "{},{j},{g:?},{e:?},{drift:?}", oracle.name);
            rows.push(json!({
                "oracle": oracle.name,
                "class": j,
                "recomputed": g,
                "recorded": e,
                "drift": drift,
            }));
        }
    }
    let ok = worst <= TOL;
    let report = json!({
        "tolerance": TOL,
        "ok": ok,
        "worst_drift": worst,
        "rows": rows,
    });
    let post_error = (!ok).then(|| {
        CliError::Convergence(format!(
            "calibration drift {worst:.3e} on {worst_name} exceeds {TOL:.0e}; \
             the environment does not reproduce the recorded oracles"
        ))
    });
    Ok(Outcome { report, csv: Some(csv), post_error })
}
