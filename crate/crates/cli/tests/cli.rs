use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SQUARE: &str = r#"{"dim": 2, "kind": "polytope", "vertices": [[0,0],[1,0],[1,1],[0,1]]}"#;
const TRIANGLE: &str = r#"{"kind": "polytope", "vertices": [[0,0],[4,0],[0,3]]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isoprofile"))
        .args(args)
        .env_remove("ISOPROFILE_SEED")
        .output()
        .expect("spawn")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

/// The output without the wall-time line or field.
fn data_section(text: &str) -> String {
    if text.starts_with('{') {
        let v: Value = serde_json::from_str(text).unwrap();
        v["data"].to_string()
    } else {
        text.lines()
            .filter(|l| !l.starts_with("# wall_time_s"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[test]
fn body_reports_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    let o = run(&["body", sq.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["data"]["dim"], 2);
    assert_eq!(v["data"]["volume"], 1.0);
    assert_eq!(v["data"]["inradius"], 0.5);
    assert_eq!(v["data"]["chebyshev_center"], serde_json::json!([0.5, 0.5]));
    for key in ["tool", "seed", "workers", "wall_time_s"] {
        assert!(v["metadata"].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn square_profile_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    let o = run(&[
        "profile",
        sq.to_str().unwrap(),
        "--v-grid",
        "0.05:0.95:0.05",
        "--methods",
        "upper",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 19);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let v: f64 = f[0].parse().unwrap();
        let value: f64 = f[2].parse().unwrap();
        let pi = std::f64::consts::PI;
        let exact = (pi * v).sqrt().min(1.0).min((pi * (1.0 - v)).sqrt());
        assert!((value - exact).abs() < 1e-6, "v={v}: {value} vs {exact}");
        assert_eq!(f[1], "upper");
    }
}

#[test]
fn concavity_audit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    let csv = dir.path().join("p.csv");
    let o = run(&[
        "profile",
        sq.to_str().unwrap(),
        "--v-grid",
        "0.1:0.9:0.1",
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let good = run(&["audit", "concavity", csv.to_str().unwrap(), "--tol", "1e-9"]);
    assert_eq!(good.status.code(), Some(0));
    assert_eq!(json(&good)["data"]["pass"], true);

    let text = std::fs::read_to_string(&csv).unwrap();
    let corrupted: String = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.splitn(5, ',').collect();
            if f.len() == 5 && f[0] == "0.5" {
                let bumped = f[2].parse::<f64>().unwrap() * 1.1;
                format!("{},{},{},{},{}\n", f[0], f[1], bumped, f[3], f[4])
            } else {
                format!("{l}\n")
            }
        })
        .collect();
    let bad = write(dir.path(), "bad.csv", &corrupted);
    let o = run(&["audit", "concavity", bad.to_str().unwrap(), "--tol", "1e-9"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["data"]["pass"], false);
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["profile", sq.to_str().unwrap()]).status.code(), Some(64));
    let o = run(&["body", sq.to_str().unwrap(), "--tol", "bogus=1"]);
    assert_eq!(o.status.code(), Some(64));
    let o = run(&["cone-angles", sq.to_str().unwrap(), "--tol", "bogus=1"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write(
        dir.path(),
        "flat.json",
        r#"{"kind":"polytope","vertices":[[0,0],[1,0],[2,0]]}"#,
    );
    assert_eq!(run(&["body", flat.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["body", "/nonexistent/body.json"]).status.code(), Some(1));
}

#[test]
fn reruns_are_identical_and_seed_comes_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.json", TRIANGLE);
    let args = [
        "profile",
        tri.to_str().unwrap(),
        "--v-grid",
        "0.2,0.5",
        "--relative",
        "--methods",
        "upper,oracle",
        "--resolution",
        "24",
        "--seed",
        "5",
    ];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(data_section(&a), data_section(&b));
    assert!(a.contains("# seed: 5"));

    let o = Command::new(env!("CARGO_BIN_EXE_isoprofile"))
        .args(["cone-angles", tri.to_str().unwrap()])
        .env("ISOPROFILE_SEED", "42")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("# seed: 42"));
    let o = Command::new(env!("CARGO_BIN_EXE_isoprofile"))
        .args(["cone-angles", tri.to_str().unwrap(), "--seed", "9"])
        .env("ISOPROFILE_SEED", "42")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("# seed: 9"));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.json", TRIANGLE);
    let base = [
        "profile",
        tri.to_str().unwrap(),
        "--v-grid",
        "0.1:0.9:0.2",
        "--relative",
        "--methods",
        "upper,lower",
    ];
    let one = stdout(&run(&[&base[..], &["--workers", "1"]].concat()));
    let four = stdout(&run(&[&base[..], &["--workers", "4"]].concat()));
    let strip = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with("# wall_time_s") && !l.starts_with("# workers"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&one), strip(&four));
}

#[test]
fn cone_angles_mark_the_sharpest_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.json", TRIANGLE);
    let text = stdout(&run(&["cone-angles", tri.to_str().unwrap()]));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "vertex_index,x0,x1,alpha,is_min");
    let min: Vec<&&str> = rows[1..].iter().filter(|r| r.ends_with("true")).collect();
    assert_eq!(min.len(), 1);
    assert!(min[0].contains(",4,0,"));
}

#[test]
fn map_lip_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    let disk = write(
        dir.path(),
        "disk.json",
        r#"{"kind":"ball","center":[0.5,0.5],"radius":0.5}"#,
    );
    let o = run(&[
        "map-lip",
        sq.to_str().unwrap(),
        disk.to_str().unwrap(),
        "--pairs",
        "2000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let d = &json(&o)["data"];
    for key in [
        "r_core",
        "R",
        "analytic_bound",
        "lip_forward",
        "lip_inverse",
        "dL_upper",
    ] {
        assert!(d.get(key).is_some(), "missing {key}");
    }
    assert!(d["lip_forward"].as_f64().unwrap() <= d["analytic_bound"].as_f64().unwrap());
}

#[test]
fn oracle_region_feeds_density_audit() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    let region = dir.path().join("region.json");
    let o = run(&[
        "oracle",
        sq.to_str().unwrap(),
        "--v",
        "0.3",
        "--resolution",
        "24",
        "--region-out",
        region.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o)["data"]["perimeter"].as_f64().unwrap() > 0.9);
    let o = run(&[
        "density-audit",
        sq.to_str().unwrap(),
        region.to_str().unwrap(),
        "--probes",
        "64",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let d = &json(&o)["data"];
    assert_eq!(d["fail"], 0);
    assert_eq!(d["connected"], serde_json::json!([true, true]));
}

#[test]
fn exhaustive_oracle_on_a_tiny_grid() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.json", SQUARE);
    let o = run(&[
        "oracle",
        sq.to_str().unwrap(),
        "--v",
        "0.25",
        "--resolution",
        "4",
        "--strategy",
        "exhaustive",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let d = &json(&o)["data"];
    assert_eq!(d["target_cells"], 4);
}

#[test]
fn converge_runs_an_experiment_file() {
    let dir = tempfile::tempdir().unwrap();
    let exp = write(
        dir.path(),
        "semi.json",
        &format!(
            r#"{{"name": "semicontinuity", "generator": {{"kind": "body", "params": {{"body": {TRIANGLE}, "k": 8}}}}}}"#
        ),
    );
    let o = run(&["converge", exp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("facet,alpha_limit,tail_min,pass"));
    assert!(text.contains(r#""pass":true"#));

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"name": "profile", "generator": {"kind": "inscribed-polygons", "params": {"radius": 1, "k": [8]}}}"#,
    );
    assert_eq!(
        run(&["converge", bad.to_str().unwrap(), "--tol", "nope=1"])
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn help_describes_every_subcommand() {
    for sub in [
        "body",
        "profile",
        "audit",
        "cone-angles",
        "map-lip",
        "density-audit",
        "converge",
        "small-volume",
        "oracle",
    ] {
        let o = run(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        let about = text.lines().next().unwrap_or("");
        assert!(about.split_whitespace().count() >= 6, "{sub}: {about}");
    }
}
