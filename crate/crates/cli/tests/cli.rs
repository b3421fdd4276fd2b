use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn snl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snl")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn gen_example(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(format!("{name}.json"));
    let mut args = vec!["gen", "example", name, "--out", path_str(&out)];
    args.extend_from_slice(extra);
    let o = snl(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_example_writes_problem() {
    let dir = TempDir::new().unwrap();
    let f = gen_example(&dir, "three_anchor_one_sensor", &[]);
    let v = read_json(&f);
    assert_eq!(v["dim"], 2);
    assert_eq!(v["anchors"].as_array().unwrap().len(), 3);
    assert_eq!(v["sensors_true"][0][1], 1.0);
    assert_eq!(v["edges_as"].as_array().unwrap().len(), 3);
}

#[test]
fn gen_unitdisk_round_trips() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("u.json");
    let args = ["gen", "unitdisk", "--square", "1", "--r", "0.35", "--n", "50", "--anchors", "corners4", "--seed", "7", "--out", path_str(&f)];
    assert!(snl(&args).status.success());
    let v = read_json(&f);
    assert_eq!(v["sensors_true"].as_array().unwrap().len(), 50);
    assert_eq!(v["anchors"].as_array().unwrap().len(), 4);
    let doc = snl_core::io::ProblemDocument::load(&f).unwrap();
    assert_eq!(doc.to_framework().unwrap().unwrap().problem(), doc.to_problem().unwrap());

    let g = dir.path().join("u2.json");
    let mut again = args.to_vec();
    *again.last_mut().unwrap() = path_str(&g);
    assert!(snl(&again).status.success());
    assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(&g).unwrap());
}

#[test]
fn gen_trilateration_degrees() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("t.json");
    assert!(snl(&["gen", "trilateration", "--dim", "2", "--n", "5", "--seed", "1", "--out", path_str(&f)]).status.success());
    let doc = snl_core::io::ProblemDocument::load(&f).unwrap();
    let topo = doc.to_problem().unwrap().topology();
    let degrees = topo.sensor_degrees();
    assert!(degrees.iter().all(|&d| d >= 3), "{degrees:?}");
}

#[test]
fn missing_seed_is_a_usage_error() {
    let o = snl(&["gen", "unitdisk", "--r", "0.3", "--n", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
}

#[test]
fn unknown_flag_exits_1_and_help_exits_0() {
    assert_eq!(snl(&["gen", "example", "three_anchor_one_sensor", "--bogus"]).status.code(), Some(1));
    assert_eq!(snl(&["--help"]).status.code(), Some(0));
    assert_eq!(snl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(snl(&["gen", "example", "no_such_example"]).status.code(), Some(1));
}

#[test]
fn solve_sdr_gd_three_anchor() {
    let dir = TempDir::new().unwrap();
    let f = gen_example(&dir, "three_anchor_one_sensor", &[]);
    let out = dir.path().join("r.json");
    let o = snl(&["solve", "sdr-gd", path_str(&f), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert!(v["loss"].as_f64().unwrap() <= 1e-10);
    let pos = &v["positions"][0];
    assert!((pos[0].as_f64().unwrap()).abs() < 1e-4 && (pos[1].as_f64().unwrap() - 1.0).abs() < 1e-4);
}

#[test]
fn solve_gd_finds_two_minima() {
    let dir = TempDir::new().unwrap();
    let f = gen_example(&dir, "three_anchor_one_sensor", &[]);
    let out = dir.path().join("r.json");
    let o = snl(&["solve", "gd", "--b", "2", "--c", "2", "--starts", "64", "--seed", "5", "--box", "-2,2", path_str(&f), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert!(v["clusters"].as_array().unwrap().len() >= 2);
    assert!(v["loss"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn solve_sdr_without_edges() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("empty.json");
    std::fs::write(&f, r#"{"dim": 2, "anchors": [[0, 0]], "sensors_true": null, "edges_ss": [], "edges_as": [], "n_sensors": 2}"#).unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(snl(&["solve", "sdr", path_str(&f), "--out", path_str(&out)]).status.code(), Some(0));
    assert!(read_json(&out)["objective"].as_f64().unwrap().abs() <= 1e-9);
}

#[test]
fn non_convergence_exits_2() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("t.json");
    assert!(snl(&["gen", "trilateration", "--n", "8", "--seed", "3", "--out", path_str(&f)]).status.success());
    let out = dir.path().join("r.json");
    let o = snl(&["solve", "sdr", path_str(&f), "--sdr-iters", "2", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(read_json(&out)["converged"], false);
}

#[test]
fn malformed_problem_exits_1() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, "{ not json").unwrap();
    assert_eq!(snl(&["solve", "sdr", path_str(&f)]).status.code(), Some(1));
}

#[test]
fn certify_modes() {
    let dir = TempDir::new().unwrap();
    let f = gen_example(&dir, "radius_example", &["--params", "1,1.99,2.5"]);
    let out = dir.path().join("c.json");
    assert!(snl(&["certify", path_str(&f), "--out", path_str(&out)]).status.success());
    let v = read_json(&out);
    assert!(v["certificate"]["lhs"].is_number());

    let small = gen_example(&dir, "radius_example", &["--params", "1,1.99,1.995"]);
    let o = snl(&["certify", path_str(&small), "--mode", "scan", "--segments", "500", "--box", "-3,3", "--seed", "1", "--out", path_str(&out)]);
    assert!(o.status.success());
    assert_eq!(read_json(&out)["valid"], false);

    let three = gen_example(&dir, "three_anchor_one_sensor", &[]);
    assert!(snl(&["certify", path_str(&three), "--mode", "scan", "--seed", "0", "--out", path_str(&out)]).status.success());
    assert_eq!(read_json(&out)["valid"], true);

    let no_truth = dir.path().join("nt.json");
    std::fs::write(&no_truth, r#"{"dim": 2, "anchors": [[0, 0]], "edges_as": [[0, 0, 1.0]]}"#).unwrap();
    assert_eq!(snl(&["certify", path_str(&no_truth), "--mode", "sufficient"]).status.code(), Some(1));
}

#[test]
fn mc_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("mc.csv");
    let o = snl(&["mc", "--r", "0.35", "--n-list", "10,40", "--trials", "20", "--seed", "2", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,trials,fraction,ci_low,ci_high,bound_raw,bound_clamped,lemma_gate_ok");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("10,20,"));
}

#[test]
fn landscape_csv() {
    let dir = TempDir::new().unwrap();
    let f = gen_example(&dir, "one_anchor_one_sensor", &[]);
    let out = dir.path().join("l.csv");
    assert!(snl(&["landscape", path_str(&f), "--res", "11", "--out", path_str(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 122);
    assert_eq!(text.lines().next(), Some("x,y,loss"));
}

#[test]
fn pathcheck_mirror_pair() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("m.json");
    // Two anchors on the x-axis; the reflected sensor is a second solution.
    let d0 = (1.0f64 + 4.0).sqrt();
    let d1 = (4.0f64 + 4.0).sqrt();
    std::fs::write(
        &f,
        format!(r#"{{"dim": 2, "anchors": [[0, 0], [3, 0]], "sensors_true": [[1, 2]], "edges_ss": [], "edges_as": [[0, 0, {d0}], [1, 0, {d1}]]}}"#),
    )
    .unwrap();
    let q = dir.path().join("q.json");
    std::fs::write(&q, "[[1, -2]]").unwrap();
    let out = dir.path().join("p.json");
    let o = snl(&["pathcheck", path_str(&f), "--q", path_str(&q), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read_json(&out)["max_deviation"].as_f64().unwrap() <= 1e-10);

    std::fs::write(&q, "[[1, -2.5]]").unwrap();
    assert_eq!(snl(&["pathcheck", path_str(&f), "--q", path_str(&q)]).status.code(), Some(1));
}
