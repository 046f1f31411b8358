//! End-to-end acceptance suite.
//!
//! Each test prints one `acceptance NN (<name>): PASS` line on success and
//! asserts the stated numeric tolerance and runtime budget. Together they
//! cover the metric layer, the cut-cone LP and its dual demands, the
//! semidefinite relaxation, the kinematic census, scale selection, the
//! cut-measure representation, monotone-set statistics, central collapse,
//! and byte-level determinism of the command-line reports.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gapwb_cli::fixtures::{cut_measure_fixture, perturbation_suite, CUT_MEASURE_FIXTURES};
use gapwb_cli::spec::{MapSpec, SetSpec};
use gapwb_core::cutcone::{c1_exact, dual_demands};
use gapwb_core::metric::{is_negative_type, FiniteMetric};
use gapwb_core::sdp::{gap_lower_bound_from_metric, solve_gl_sdp, SdpOptions};
use gapwb_core::sparsestcut::{phi_star, DemandInstance};
use gapwb_heisenberg::cutmeasure::sample_ball_cells;
use gapwb_heisenberg::sets::{CentralSlab, Dilated};
use gapwb_heisenberg::{
    collapse_search, cut_measure_of_map, fit_halfspace, grid_metric, grid_metric_subset,
    nm_ball, rho, sample_lines, select_scale, Census, CollapseStrategy, ExperimentConfig,
    HBall, HPoint, TraceParams, VoxelGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn budget(start: Instant, cap: Duration, what: &str) {
    let used = start.elapsed();
    assert!(used < cap, "{what}: runtime {used:?} exceeded budget {cap:?}");
}

fn random_point(rng: &mut ChaCha8Rng, span: f64) -> HPoint {
    HPoint::new(
        rng.gen_range(-span..span),
        rng.gen_range(-span..span),
        rng.gen_range(-span..span),
    )
}

/// Random metric with entries uniform in [1, 2]; the triangle inequality
/// holds because every two-hop path is at least 2 while no edge exceeds 2.
fn random_band_metric(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetric {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(1.0..2.0);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    FiniteMetric::from_matrix(&rows).expect("band metric")
}

/// Shortest-path closure of a complete graph with uniform random weights.
fn random_path_metric(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetric {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(0.1..1.0);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    FiniteMetric::from_matrix(&d).expect("path metric")
}

/// Euclidean distance matrix of random points in the unit cube.
fn random_euclidean_metric(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetric {
    let pts: Vec<[f64; 3]> = (0..n)
        .map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
        .collect();
    FiniteMetric::from_fn(n, |i, j| {
        let dx = pts[i][0] - pts[j][0];
        let dy = pts[i][1] - pts[j][1];
        let dz = pts[i][2] - pts[j][2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    })
    .expect("euclidean metric")
}

/// Complete-graph instance: capacities uniform in [0.5, 1.5], demands
/// uniform in [0, 1].
fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> DemandInstance {
    let mut c = vec![vec![0.0; n]; n];
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let cv = rng.gen_range(0.5..1.5);
            let dv = rng.gen_range(0.0..1.0);
            c[i][j] = cv;
            c[j][i] = cv;
            d[i][j] = dv;
            d[j][i] = dv;
        }
    }
    DemandInstance::from_matrices(&c, &d).expect("instance")
}

/// Midrank vector (1-based, ties averaged).
fn midranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("comparable"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = midranks(x);
    let ry = midranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        let a = rx[i] - mx;
        let b = ry[i] - my;
        num += a * b;
        vx += a * a;
        vy += b * b;
    }
    num / (vx.sqrt() * vy.sqrt())
}

/// Run the installed binary in `dir`, asserting success, and return the
/// bytes of the report it wrote to `out`.
fn run_cli(dir: &Path, args: &[&str], out: &str) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_gapwb"))
        .args(args)
        .current_dir(dir)
        .env_remove("GAP_WORKBENCH_THREADS")
        .output()
        .expect("binary runs");
    assert!(
        status.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&status.stderr)
    );
    std::fs::read(dir.join(out)).expect("report written")
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_metric_validity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100_000 {
        let a = random_point(&mut rng, 2.0);
        let b = random_point(&mut rng, 2.0);
        let c = random_point(&mut rng, 2.0);
        let ab = rho(a, b);
        let bc = rho(b, c);
        let ac = rho(a, c);
        assert!(ac <= ab + bc + 1e-12, "triangle violated: {ac} > {ab} + {bc}");
        assert!((ab - rho(b, a)).abs() <= 1e-15, "asymmetric at {a:?} {b:?}");
        assert!(ab >= 0.0);
    }
    assert_eq!(rho(HPoint::new(0.3, -0.7, 0.2), HPoint::new(0.3, -0.7, 0.2)), 0.0);
    budget(start, Duration::from_secs(10), "triple sweep");
    println!("acceptance 01 (metric validity): PASS");
}

#[test]
fn acceptance_02_negative_type() {
    let start = Instant::now();
    for t in 0..100u64 {
        let size = 2 + (t as usize * 7 + 3) % 15; // sizes 2..=16
        let (_, m) = grid_metric_subset(3, size, 1000 + t).expect("subset");
        let (ok, min_eig) = is_negative_type(&m, Some(1e-8)).expect("gram check");
        assert!(ok, "subset {t} (n = {size}) failed: min eigenvalue {min_eig:.3e}");
    }
    budget(start, Duration::from_secs(60), "negative-type sweep");
    println!("acceptance 02 (negative type): PASS");
}

#[test]
fn acceptance_03_cut_cone_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in 0..1000 {
        let m = if t % 2 == 0 {
            random_band_metric(&mut rng, 4)
        } else {
            random_path_metric(&mut rng, 4)
        };
        let cert = c1_exact(&m).expect("lp solves");
        assert!(
            (cert.c1 - 1.0).abs() <= 1e-6,
            "4-point metric {t}: c1 = {} is not 1",
            cert.c1
        );
    }
    // Two-against-three bipartite shortest-path metric: distortion exactly 4/3.
    let k23 = FiniteMetric::from_fn(5, |i, j| if (i >= 2) == (j >= 2) { 2.0 } else { 1.0 })
        .expect("bipartite metric");
    let cert = c1_exact(&k23).expect("lp solves");
    assert!(
        (cert.c1 - 4.0 / 3.0).abs() <= 1e-6,
        "bipartite distortion {} is not 4/3",
        cert.c1
    );
    budget(start, Duration::from_secs(120), "cut-cone sweep");
    println!("acceptance 03 (cut-cone exactness): PASS");
}

#[test]
fn acceptance_04_duality_chain() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in 0..50u64 {
        let n = 4 + (t as usize) % 5; // n in 4..=8
        let m = if t % 2 == 0 {
            random_euclidean_metric(&mut rng, n)
        } else {
            grid_metric_subset(3, n, 4000 + t).expect("subset").1
        };
        let (demands, cert) = dual_demands(&m).expect("dual extraction");
        let inst = DemandInstance::from_matrices(&demands.c, &demands.d).expect("dual instance");
        let cut = phi_star(&inst).expect("enumeration");
        assert!(
            (cut.value - 1.0).abs() <= 1e-6,
            "metric {t}: dual instance has sparsest cut {} instead of 1",
            cut.value
        );
        let (num, den) = inst.weigh_metric(&m);
        let ratio = num / den;
        assert!(
            (ratio - 1.0 / cert.c1).abs() <= 1e-6,
            "metric {t}: objective ratio {ratio} differs from 1/c1 = {}",
            1.0 / cert.c1
        );
    }
    budget(start, Duration::from_secs(300), "duality sweep");
    println!("acceptance 04 (duality chain): PASS");
}

#[test]
fn acceptance_05_relaxation_bounds() {
    let start = Instant::now();
    let opts = SdpOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..100 {
        let n = 4 + t % 5; // n in 4..=8
        let inst = random_instance(&mut rng, n);
        let cut = phi_star(&inst).expect("enumeration");
        let sol = solve_gl_sdp(&inst, &opts).expect("solver converges");
        assert!(
            sol.objective <= cut.value + 1e-3,
            "instance {t} (n = {n}): relaxation {} above cut value {}",
            sol.objective,
            cut.value
        );
        let r = &sol.residuals;
        let worst = r.primal.max(r.dual).max(r.cone).max(r.link).max(r.triangle);
        assert!(worst < 1e-6, "instance {t}: residual {worst:.3e} too large");
    }
    for t in 0..100 {
        let inst = random_instance(&mut rng, 4);
        let cut = phi_star(&inst).expect("enumeration");
        let sol = solve_gl_sdp(&inst, &opts).expect("solver converges");
        assert!(
            (sol.objective - cut.value).abs() <= 1e-3,
            "4-point instance {t}: relaxation {} is not tight against {}",
            sol.objective,
            cut.value
        );
    }
    budget(start, Duration::from_secs(600), "relaxation sweep");
    println!("acceptance 05 (relaxation bounds): PASS");
}

#[test]
fn acceptance_06_end_to_end_gap_identity() {
    // Recorded value for the 8-point unit grid: it embeds isometrically, so
    // the certified lower bound is the identity gap.
    const RECORDED_GAP: f64 = 1.0;

    let (_, m) = grid_metric(1).expect("grid");
    let cert = c1_exact(&m).expect("lp solves");
    let opts = SdpOptions::default();
    let reports: Vec<_> = (0..3)
        .map(|_| gap_lower_bound_from_metric(&m, &opts).expect("chain"))
        .collect();
    for rep in &reports {
        assert!((rep.gap - cert.c1).abs() <= 2e-3, "gap {} vs c1 {}", rep.gap, cert.c1);
        assert!((rep.gap - RECORDED_GAP).abs() <= 2e-3, "gap {} drifted", rep.gap);
    }
    assert!(reports.windows(2).all(|w| w[0].gap == w[1].gap), "gap not reproducible");

    // The seed flag must not perturb the pipeline either.
    let dir = tempfile::tempdir().expect("tempdir");
    std::fs::write(dir.path().join("m.json"), m.to_json()).expect("metric written");
    let mut subtrees = Vec::new();
    for seed in ["0", "1", "2"] {
        let bytes = run_cli(
            dir.path(),
            &["--seed", seed, "gap", "--metric", "m.json", "--out", "g.json"],
            "g.json",
        );
        let doc: serde_json::Value = serde_json::from_slice(&bytes).expect("report parses");
        let gap = doc["report"]["gap_report"]["gap"].as_f64().expect("gap present");
        assert!((gap - RECORDED_GAP).abs() <= 2e-3);
        subtrees.push(doc["report"]["gap_report"].to_string());
    }
    assert!(subtrees.windows(2).all(|w| w[0] == w[1]), "gap report varies with seed");
    println!("acceptance 06 (end-to-end gap identity): PASS");
}

#[test]
fn acceptance_07_monotone_set_laws() {
    let start = Instant::now();
    let ball = HBall::unit();
    let params = TraceParams::for_resolution(1.0 / 64.0);
    let sample = sample_lines(&ball, 10_000, 7).expect("line sample");

    let hs = SetSpec::parse("half-space:1,0,0,0").expect("grammar").build();
    let nm_hs = nm_ball(hs.as_ref(), &ball, &sample, &params).expect("estimate");
    assert!(
        nm_hs.value <= 3.0 * nm_hs.std_error,
        "half-space deviation {} above noise floor {}",
        nm_hs.value,
        3.0 * nm_hs.std_error
    );

    // The unit ball spans z in [-1/4, 1/4], so this slab properly cuts it.
    let slab = CentralSlab { z_lo: -0.1, z_hi: 0.1 };
    let nm_slab = nm_ball(&slab, &ball, &sample, &params).expect("estimate");
    assert!(
        nm_slab.value > 3.0 * nm_slab.std_error,
        "slab deviation {} not above noise floor {}",
        nm_slab.value,
        3.0 * nm_slab.std_error
    );

    // Dilation invariance: the same slab viewed at twice the scale.
    let dilated = Dilated::new(2.0, &slab);
    let ball2 = HBall { center: HPoint::new(0.0, 0.0, 0.0), radius: 2.0 };
    let params2 = TraceParams::for_resolution(2.0 / 64.0);
    let sample2 = sample_lines(&ball2, 10_000, 8).expect("line sample");
    let nm_dil = nm_ball(&dilated, &ball2, &sample2, &params2).expect("estimate");
    let sigma = (nm_slab.std_error.powi(2) + nm_dil.std_error.powi(2)).sqrt();
    assert!(
        (nm_slab.value - nm_dil.value).abs() <= 2.0 * sigma,
        "dilation drift {} above 2 sigma = {}",
        (nm_slab.value - nm_dil.value).abs(),
        2.0 * sigma
    );
    budget(start, Duration::from_secs(300), "monotone laws");
    println!("acceptance 07 (monotone-set laws): PASS");
}

#[test]
fn acceptance_08_kinematic_partition_identity() {
    let ball = HBall::unit();
    let cfg = ExperimentConfig::default();
    let params = TraceParams::for_resolution(1.0 / 32.0);
    let sample = sample_lines(&ball, 400, 23).expect("line sample");
    for name in CUT_MEASURE_FIXTURES {
        let cm = cut_measure_fixture(name, &ball, 1.0 / 16.0).expect("fixture");
        for atom in &cm.atoms {
            let census = Census::collect(&atom.set, &ball, &sample, cfg.delta, &params, cfg.gamma);
            let total: f64 = census.weights_full().iter().sum();
            assert!(
                (total - census.perimeter()).abs() <= 1e-9,
                "fixture {name}: class weights sum {} but perimeter is {}",
                total,
                census.perimeter()
            );
        }
        let dec = select_scale(&cm, &ball, &sample, &params, cfg.delta, cfg.scale_consts(), cfg.gamma)
            .unwrap_or_else(|e| panic!("fixture {name}: no admissible scale: {e}"));
        let diag = &dec.diagnostics;
        assert!(
            dec.weights[dec.selected_j] <= diag.j_threshold + 1e-12,
            "fixture {name}: class {} mass {} above budget {}",
            dec.selected_j,
            dec.weights[dec.selected_j],
            diag.j_threshold
        );
        assert!(
            diag.selected_mass <= diag.y_threshold + 1e-12,
            "fixture {name}: sub-ball mass {} above budget {}",
            diag.selected_mass,
            diag.y_threshold
        );
    }
    println!("acceptance 08 (kinematic partition identity): PASS");
}

#[test]
fn acceptance_09_representation_identity() {
    let ball = HBall::unit();
    for (which, text) in ["horizontal", "coordinate:x", "dist:0.5,0.25,0.0"].iter().enumerate() {
        let spec = MapSpec::parse(text).expect("grammar");
        let grid = VoxelGrid::cover_ball(&ball, 1.0 / 16.0, 1.0 / 16.0).expect("grid");
        let map = spec.build(grid.clone());

        // Evenly spaced thresholds per coordinate covering the sampled range.
        let dim = map.dim();
        let mut thresholds: Vec<Vec<f64>> = Vec::with_capacity(dim);
        let mut gap_sum = 0.0;
        for i in 0..dim {
            let vals: Vec<f64> = grid.centers().map(|p| map.eval(p)[i]).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-9;
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-9;
            let steps = 40;
            let gap = (hi - lo) / steps as f64;
            gap_sum += gap;
            thresholds.push((0..=steps).map(|k| lo + gap * k as f64).collect());
        }
        let cm = cut_measure_of_map(&map, &thresholds).expect("decomposition");

        let cells = sample_ball_cells(&grid, &ball, 2000, 900 + which as u64);
        for pair in cells.chunks_exact(2) {
            let (p, q) = (pair[0], pair[1]);
            let err = (cm.d(p, q) - map.l1_dist(p, q)).abs();
            assert!(
                err <= gap_sum + 1e-9,
                "map {text}: measure distance off by {err} (> {gap_sum}) at {p:?}, {q:?}"
            );
        }
    }
    println!("acceptance 09 (representation identity): PASS");
}

#[test]
fn acceptance_10_stability_trend() {
    let start = Instant::now();
    let ball = HBall::unit();
    let params = TraceParams::for_resolution(1.0 / 64.0);
    let sample = sample_lines(&ball, 40_000, 10).expect("line sample");
    let suite = perturbation_suite(50);
    let mut deviations = Vec::with_capacity(suite.len());
    let mut symdiffs = Vec::with_capacity(suite.len());
    for set in &suite {
        deviations.push(nm_ball(set, &ball, &sample, &params).expect("estimate").value);
        symdiffs.push(fit_halfspace(set, &ball, 1.0 / 32.0).symdiff_fraction);
    }
    let coeff = spearman(&deviations, &symdiffs);
    assert!(
        coeff >= 0.8,
        "rank correlation {coeff:.3} below 0.8\n  deviations {deviations:?}\n  symdiffs {symdiffs:?}"
    );
    budget(start, Duration::from_secs(600), "stability sweep");
    println!("acceptance 10 (stability trend): PASS (spearman = {coeff:.3})");
}

#[test]
fn acceptance_11_collapse_trend() {
    let start = Instant::now();
    let ball = HBall::unit();
    let cfg = ExperimentConfig::default();
    let params = cfg.collapse_params();
    let epsilons = [0.25, 0.125, 0.0625, 0.03125, 0.015625];

    for text in ["horizontal", "coordinate:x", "dist:0.5,0.25,0.0"] {
        let grid = VoxelGrid::cover_ball(&ball, 1.0 / 16.0, 1.0 / 64.0).expect("grid");
        let map = MapSpec::parse(text).expect("grammar").build(grid);
        let ratios: Vec<f64> = epsilons
            .iter()
            .map(|&eps| {
                collapse_search(&map, &ball, eps, CollapseStrategy::GridScan, &params, 11)
                    .expect("search finds a pair")
                    .ratio
            })
            .collect();
        for w in ratios.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "map {text}: ratio rose from {} to {} as the separation shrank",
                w[0],
                w[1]
            );
        }
        if text == "horizontal" {
            assert!(
                ratios.iter().all(|&r| r == 0.0),
                "horizontal map should collapse exactly, got {ratios:?}"
            );
        }
    }
    budget(start, Duration::from_secs(300), "collapse sweep");
    println!("acceptance 11 (collapse trend): PASS");
}

#[test]
fn acceptance_12_determinism() {
    let dir = tempfile::tempdir().expect("tempdir");
    let d = dir.path();

    // Small inputs shared by the runs below.
    let adj = "[[0,1,0,1],[1,0,1,0],[0,1,0,1],[1,0,1,0]]";
    let ones = "[[0,1,1,1],[1,0,1,1],[1,1,0,1],[1,1,1,0]]";
    std::fs::write(d.join("inst.json"), format!("{{\"n\":4,\"C\":{adj},\"D\":{ones}}}"))
        .expect("instance written");
    let (_, m) = grid_metric(1).expect("grid");
    std::fs::write(d.join("m.json"), m.to_json()).expect("metric written");

    let cases: Vec<Vec<&str>> = vec![
        vec!["grid", "--k", "1"],
        vec!["distortion", "--metric", "m.json"],
        vec!["gap", "--instance", "inst.json"],
        vec!["sdp", "--instance", "inst.json"],
        vec!["sparsest", "--instance", "inst.json"],
        vec!["monotone", "--set", "slab:-0.2,0.2", "--lines", "300"],
        vec![
            "collapse", "--map", "dist:1,0,0", "--epsilons", "0.25,0.125", "--resolution", "0.125",
        ],
        vec!["scale-select", "--fixture", "half-space-x"],
        vec!["calibrate-oracle"],
    ];

    for case in &cases {
        let mut first_report: Option<Vec<u8>> = None;
        let mut first_csv: Option<Option<Vec<u8>>> = None;
        for threads in ["1", "1", "4"] {
            let mut args: Vec<&str> = vec!["--threads", threads];
            args.extend_from_slice(case);
            args.extend_from_slice(&["--out", "report.json"]);
            let report = run_cli(d, &args, "report.json");
            let csv = std::fs::read(d.join("report.csv")).ok();
            match (&first_report, &first_csv) {
                (None, _) => {
                    first_report = Some(report);
                    first_csv = Some(csv);
                }
                (Some(r), Some(c)) => {
                    assert_eq!(r, &report, "{case:?}: report bytes changed across runs");
                    assert_eq!(c, &csv, "{case:?}: mirror bytes changed across runs");
                }
                _ => unreachable!(),
            }
        }
        std::fs::remove_file(d.join("report.json")).ok();
        std::fs::remove_file(d.join("report.csv")).ok();
    }
    println!("acceptance 12 (determinism): PASS");
}
