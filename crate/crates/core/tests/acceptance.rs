//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so every line is printed whether the
//! check passes or not. The process exits non-zero if any check fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use snl_core::analysis::{self, ScanOutcome};
use snl_core::descent::{self, DescentOptions, DEFAULT_MERGE_RADIUS};
use snl_core::loss::{self, LossSpec, SensorConfig};
use snl_core::model::{self, distance, BuiltinExample, Rect, UnitDiskCase};
use snl_core::sdr::{self, SdrOptions};
use snl_core::{seeded_rng, Framework, SnlProblem};

struct Check {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Check {
    Check { ok, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn unit_square() -> Rect {
    Rect::cube(2, 1.0).unwrap()
}

fn mean_error(truth: &[Vec<f64>], x: &SensorConfig) -> f64 {
    truth.iter().enumerate().map(|(i, s)| distance(s, x.point(i))).sum::<f64>() / truth.len() as f64
}

fn c1_multistart_minima() -> Check {
    let t = Instant::now();
    let p = BuiltinExample::ThreeAnchorOneSensor.problem();
    let spec = LossSpec::smooth(2);
    let bx = Rect::symmetric(2, -2.0, 2.0).unwrap();
    let results = descent::multistart(&p, &spec, 64, &bx, &DescentOptions::for_spec(&spec), 1).unwrap();
    let clusters = descent::cluster_minima(&results, DEFAULT_MERGE_RADIUS);
    let elapsed = t.elapsed();
    let mut min_sep = f64::INFINITY;
    for (i, a) in clusters.iter().enumerate() {
        for b in &clusters[i + 1..] {
            min_sep = min_sep.min(a.representative.distance(&b.representative));
        }
    }
    let global = clusters.iter().find(|c| {
        let q = c.representative.point(0);
        c.loss <= 1e-10 && q[0].abs() < 1e-3 && (q[1] - 1.0).abs() < 1e-3
    });
    let ok = clusters.len() >= 2 && min_sep >= 0.1 && global.is_some() && within(elapsed, 5.0);
    let listing: Vec<String> = clusters
        .iter()
        .map(|c| {
            let q = c.representative.point(0);
            format!("({:.4}, {:.4}) loss {:.2e} x{}", q[0], q[1], c.loss, c.members.len())
        })
        .collect();
    check(ok, format!("{} clusters [{}], min separation {min_sep:.3}, {:.2}s", clusters.len(), listing.join("; "), elapsed.as_secs_f64()))
}

fn c2_radius_example() -> Check {
    let t = Instant::now();
    let (e, h) = (1.0, 1.99);
    let spec = LossSpec::absolute(2);
    let small = BuiltinExample::RadiusExample { e, h, r: 1.995 }.problem();
    let bx = Rect::symmetric(4, -3.0, 3.0).unwrap();
    let scan = analysis::segment_convexity_scan(&small, &spec, &bx, 10_000, 3, 2).unwrap();
    let convex = matches!(scan, ScanOutcome::ConvexSoFar { segments: 10_000 });

    let large = BuiltinExample::RadiusExample { e, h, r: 2.5 }.problem();
    let has_ss = large.edges_ss().len() == 1 && small.edges_ss().is_empty();
    let x0 = SensorConfig::new(2, vec![-e, h, e, h]).unwrap();
    let x1 = SensorConfig::new(2, vec![e, h, -e, h]).unwrap();
    let mid = SensorConfig::new(2, vec![0.0, h, 0.0, h]).unwrap();
    let f0 = loss::loss_eval(&large, &spec, &x0).unwrap();
    let f1 = loss::loss_eval(&large, &spec, &x1).unwrap();
    let fm = loss::loss_eval(&large, &spec, &mid).unwrap();
    let cert = analysis::midpoint_certificate(&large, &spec, &x0, &x1).unwrap();
    let elapsed = t.elapsed();
    let ok = convex && has_ss && f0 + f1 < 2.0 * fm && cert.is_valid() && within(elapsed, 10.0);
    check(
        ok,
        format!(
            "F0 scan {}, F(-e,h,e,h)+F(e,h,-e,h) = {:.4} < 2F(0,h,0,h) = {:.4}, {:.2}s",
            if convex { "clean on 10^4 segments" } else { "found a violation" },
            f0 + f1,
            2.0 * fm,
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_sdr_exactness() -> Check {
    let t = Instant::now();
    let opts = SdrOptions { solver_tol: 1e-7, ..SdrOptions::default() };
    let mut worst_err: f64 = 0.0;
    let mut worst_obj: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..20u64 {
        let n = 5 + (k as usize * 3) % 16;
        let fw = model::gen_trilateration(2, n, &unit_square(), 100 + k).unwrap();
        match sdr::solve_sdr(&fw.problem(), &opts) {
            Ok(sol) => {
                let x = sol.positions();
                let err = fw.sensors().iter().enumerate().map(|(i, s)| distance(s, x.point(i))).fold(0.0, f64::max);
                worst_err = worst_err.max(err);
                worst_obj = worst_obj.max(sol.objective);
                if err > 1e-3 || sol.objective > 1e-6 {
                    failures.push(k);
                }
            }
            Err(e) => {
                eprintln!("instance {k}: {e}");
                failures.push(k);
            }
        }
    }
    let elapsed = t.elapsed();
    let ok = failures.is_empty() && within(elapsed, 60.0);
    check(
        ok,
        format!(
            "20 instances, max position error {worst_err:.2e}, max objective {worst_obj:.2e}, failing {failures:?}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn sweep_ok(report: &analysis::McReport) -> (bool, String) {
    let rows = &report.rows;
    let monotone = rows.windows(2).all(|w| w[1].fraction >= w[0].fraction || w[1].ci_high >= w[0].ci_low);
    let last = rows.last().unwrap();
    let fractions: Vec<String> = rows.iter().map(|r| format!("n={}:{:.3}", r.n, r.fraction)).collect();
    (monotone && last.n == 200 && last.fraction >= 0.95, fractions.join(" "))
}

fn c4_monte_carlo() -> Check {
    let t = Instant::now();
    let sq = unit_square();
    let spec = LossSpec::absolute(2);
    let ns = [25, 50, 100, 200];
    let sparse = UnitDiskCase::new(sq.clone(), 0.35, 1, sq.corners()).unwrap();
    let rep_sparse = analysis::monte_carlo_nonconvexity(&sparse, &spec, &ns, 200, 4).unwrap();
    let complete = UnitDiskCase::new(sq.clone(), 2f64.sqrt() + 0.1, 1, sq.corners()).unwrap();
    let rep_complete = analysis::monte_carlo_nonconvexity(&complete, &spec, &ns, 200, 4).unwrap();
    let elapsed = t.elapsed();
    let (ok_s, desc_s) = sweep_ok(&rep_sparse);
    let (ok_c, desc_c) = sweep_ok(&rep_complete);
    check(
        ok_s && ok_c && within(elapsed, 120.0),
        format!("r=0.35 [{desc_s}]; complete [{desc_c}]; {:.2}s", elapsed.as_secs_f64()),
    )
}

fn c5_bound() -> Check {
    let b1 = analysis::theoretical_bound(1, 0.05);
    let b4 = analysis::theoretical_bound(4, 0.05);
    let b10k = analysis::theoretical_bound(10_000, 0.05);
    let ok1 = b1 == 0.0;
    let ok4 = (b4 + 20.66).abs() <= 0.01;
    let ok10k = b10k.is_finite() && b10k >= 0.999;
    check(
        ok1 && ok4 && ok10k,
        format!("bound(1)={b1} [{}], bound(4)={b4:.4} [{}], bound(10^4)={b10k:.4e} [{}]", pf(ok1), pf(ok4), pf(ok10k)),
    )
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn random_problem(seed: u64) -> (Framework, SnlProblem) {
    let sq = unit_square();
    let case = UnitDiskCase::new(sq.clone(), 0.5, 10, sq.corners()).unwrap();
    let fw = model::sample_unit_disk(&case, seed);
    let p = fw.problem();
    (fw, p)
}

fn c6_gradient() -> Check {
    let (_, p) = random_problem(6);
    let spec = LossSpec::smooth(2);
    let mut rng = seeded_rng(6, 1);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let coords: Vec<f64> = (0..20).map(|_| rng.random_range(-0.5..1.5)).collect();
        let x = SensorConfig::new(2, coords).unwrap();
        let g = loss::loss_grad(&p, &spec, &x).unwrap();
        let mut diff2 = 0.0;
        for k in 0..20 {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus.coords_mut()[k] += h;
            minus.coords_mut()[k] -= h;
            let fd = (loss::loss_eval(&p, &spec, &plus).unwrap() - loss::loss_eval(&p, &spec, &minus).unwrap()) / (2.0 * h);
            diff2 += (fd - g[k]).powi(2);
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(diff2.sqrt() / norm.max(1.0));
    }
    check(worst <= 1e-6, format!("{} edges, max relative error {worst:.2e} over 100 points", p.n_edges()))
}

fn c7_path() -> Check {
    // Anchors on the x-axis; the reflection of every sensor across it solves the same problem.
    let anchors = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![5.0, 0.0]];
    let truth = vec![vec![1.0, 1.5], vec![3.0, 2.0], vec![4.0, 0.7]];
    let mirror: Vec<Vec<f64>> = truth.iter().map(|s| vec![s[0], -s[1]]).collect();
    let fw = model::framework_by_radius(2, anchors, truth.clone(), 10.0).unwrap();
    let p = fw.problem();
    let pc = SensorConfig::from_points(&truth).unwrap();
    let qc = SensorConfig::from_points(&mirror).unwrap();
    let dev = analysis::verify_path_isometry(&p, &pc, &qc, 101).unwrap();
    let start = analysis::lift_path(&pc, &qc, 0.0).unwrap();
    let end = analysis::lift_path(&pc, &qc, 1.0).unwrap();
    let end_err = start
        .coords()
        .iter()
        .zip(pc.padded(4).coords())
        .chain(end.coords().iter().zip(qc.padded(4).coords()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        dev <= 1e-10 && end_err <= 1e-15,
        format!("{} edges, max deviation {dev:.2e} over 101 samples, endpoint error {end_err:.1e}", p.n_edges()),
    )
}

fn c8_augmented() -> Check {
    let sq = unit_square();
    let spec = LossSpec::absolute(2);
    let mut mismatches = 0;
    let mut valid = 0;
    for k in 0..100 {
        // Sizes straddle the transition so both outcomes occur.
        let case = UnitDiskCase::new(sq.clone(), 0.35, 50 + 2 * k as usize, sq.corners()).unwrap();
        let fw = model::sample_unit_disk(&case, 8000 + k);
        let plain = analysis::check_sufficient_condition(&fw, &spec).unwrap();
        let aug = analysis::augmented_nonconvexity(&fw, &spec).unwrap();
        if plain.is_valid() != aug.is_valid() {
            mismatches += 1;
        }
        if plain.is_valid() {
            valid += 1;
        }
    }
    check(mismatches == 0, format!("100 frameworks, {valid} certified, {mismatches} mismatches"))
}

fn c9_warm_start() -> Check {
    let t = Instant::now();
    let sq = unit_square();
    let r = 0.35;
    let case = UnitDiskCase::new(sq.clone(), r, 10, sq.corners()).unwrap();
    let spec = LossSpec::smooth(2);
    let opts = DescentOptions::for_spec(&spec);
    let mut pipe_total = 0.0;
    let mut base_total = 0.0;
    let mut degree_total = 0usize;
    for k in 0..20u64 {
        let fw = model::sample_unit_disk(&case, 9000 + k);
        let p = fw.problem();
        degree_total += fw.topology().sensor_degrees().iter().sum::<usize>();
        let pipe = match sdr::sdr_gd_pipeline(&p, &SdrOptions::default(), &opts) {
            Ok(res) => res.result.x_final,
            Err(snl_core::SnlError::SdrNotConverged(sol)) => {
                descent::descend(&p, &spec, &sol.positions(), &opts).unwrap().x_final
            }
            Err(e) => panic!("{e}"),
        };
        let starts = descent::multistart(&p, &spec, 5, &sq, &opts, k).unwrap();
        let best = starts.iter().min_by(|a, b| a.loss_final.total_cmp(&b.loss_final)).unwrap();
        pipe_total += mean_error(fw.sensors(), &pipe);
        base_total += mean_error(fw.sensors(), &best.x_final);
    }
    let (pipe_mean, base_mean) = (pipe_total / 20.0, base_total / 20.0);
    let mean_degree = degree_total as f64 / 200.0;
    check(
        pipe_mean <= base_mean,
        format!(
            "r={r}, mean degree {mean_degree:.2}, mean error SDR+GD {pipe_mean:.4e} vs best-of-5 {base_mean:.4e}, {:.2}s",
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c10_landscape() -> Check {
    let p = BuiltinExample::OneAnchorOneSensor.problem();
    let region = Rect::symmetric(2, -2.0, 2.0).unwrap();
    let grid = analysis::landscape_grid(&p, &LossSpec::absolute(2), 0, &region, (201, 201), &SensorConfig::zeros(2, 1)).unwrap();
    let (hx, hy) = grid.cell_size();
    let cell = hx.max(hy);
    let minima = grid.local_minima();
    let worst = minima.iter().map(|&(x, y, _)| (x.hypot(y) - 1.0).abs()).fold(0.0, f64::max);
    check(
        !minima.is_empty() && worst <= cell,
        format!("{} grid minima, max distance from circle {worst:.2e} (cell {cell:.2e})", minima.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("multistart finds two minima of the three-anchor example", c1_multistart_minima),
        ("radius example: convex F0, non-convex F", c2_radius_example),
        ("SDR recovers trilateration instances", c3_sdr_exactness),
        ("Monte Carlo certified fraction reaches 0.95", c4_monte_carlo),
        ("probability bound values", c5_bound),
        ("smooth-loss gradient matches finite differences", c6_gradient),
        ("connecting path keeps edge lengths", c7_path),
        ("augmented certificate equals plain certificate", c8_augmented),
        ("SDR warm start beats best-of-5 random starts", c9_warm_start),
        ("one-anchor landscape minima lie on the circle", c10_landscape),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            check(false, format!("panicked: {msg}"))
        });
        if !res.ok {
            failed += 1;
        }
        println!("criterion {:>2} {}: {} ({})", k + 1, if res.ok { "PASS" } else { "FAIL" }, name, res.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
