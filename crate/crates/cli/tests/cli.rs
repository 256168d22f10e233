use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const DISC: &str = "[domain]\nkind = \"disc\"\n\n[mesh]\nh = 0.1\n";
const SQUARE: &str = "[domain]\nkind = \"square\"\n\n[mesh]\nh = 0.1\n";

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, cmd: &str, config: &str, extra: &[&str]) -> Output {
        let path = self.dir.path().join("config.toml");
        std::fs::write(&path, config).unwrap();
        Command::new(env!("CARGO_BIN_EXE_spectral-flow"))
            .arg(cmd)
            .arg("--config")
            .arg(&path)
            .arg("--out")
            .arg(self.out())
            .args(extra)
            .output()
            .unwrap()
    }

    fn ok(&self, cmd: &str, config: &str) -> &Self {
        let o = self.exec(cmd, config, &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        self
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.out().join(name)).unwrap()).unwrap()
    }
}

/// `(t, j, Λ, λ)` rows of a flow table.
fn table(path: &Path) -> Vec<(f64, usize, f64, f64)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["t", "j", "Lambda", "lambda"]);
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (
                rec[0].parse().unwrap(),
                rec[1].parse().unwrap(),
                rec[2].parse().unwrap(),
                rec[3].parse().unwrap(),
            )
        })
        .collect()
}

fn at_one(rows: &[(f64, usize, f64, f64)], j: usize) -> f64 {
    rows.iter().find(|r| r.0 == 1.0 && r.1 == j).unwrap().3
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn free_disc_flow_is_pure_scaling() {
    let run = Run::new();
    run.ok("flow", &format!("{DISC}[flow]\ntau = 0.5\ngrid_n = 6\nbranches = 3\n"));
    let rows = table(&run.out().join("flow.csv"));
    assert_eq!(rows.len(), 18);
    for r in &rows {
        let expect = at_one(&rows, r.1) / (r.0 * r.0);
        assert!((r.3 - expect).abs() <= 1e-10 * expect, "{r:?}");
    }
}

#[test]
fn constant_potential_flow_shifts() {
    let c = 3.0;
    let run = Run::new();
    run.ok(
        "flow",
        &format!("{SQUARE}[potential]\nkind = \"constant\"\nvalue = {c}\n[flow]\ntau = 0.6\ngrid_n = 5\nbranches = 4\n"),
    );
    let rows = table(&run.out().join("flow.csv"));
    for r in &rows {
        let expect = (at_one(&rows, r.1) - c) / (r.0 * r.0);
        assert!(((r.3 - c) - expect).abs() <= 1e-10 * expect, "{r:?}");
    }
}

#[test]
fn malformed_config_exits_with_validation_code() {
    let run = Run::new();
    let o = run.exec("flow", &format!("{DISC}[flow]\ntau = 0.0\n"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("flow.tau") && err.contains("line 7"), "{err}");
    let o = run.exec("flow", "[domain]\nkind = \"disc\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mesh"));
}

#[test]
fn derivative_routes_agree_for_free_disc() {
    let run = Run::new();
    run.ok("derivative", &format!("{DISC}[target]\nindex = 1\nt0 = 0.8\n"));
    let v = run.json("derivative.json");
    let d = &v["derivative"];
    let lambda = d["lambda_omega"].as_f64().unwrap();
    let dlam = floats(&d["dlam"])[0];
    assert!((dlam + 2.0 * lambda / 0.8).abs() <= 1e-8 * dlam.abs());
    assert!((floats(&d["crossing_form"])[0] / 0.8 - dlam).abs() <= 1e-6 * dlam.abs());
    assert!((floats(&d["oracle"])[0] - dlam).abs() <= 1e-6 * dlam.abs());
    let boundary = floats(&d["boundary_integral"])[0] / 0.8;
    assert!((boundary - dlam).abs() <= 0.15 * dlam.abs());
    let routes: Vec<&str> = v["deviations"].as_array().unwrap().iter().map(|x| x["route"].as_str().unwrap()).collect();
    assert_eq!(routes, ["crossing form", "boundary integral", "finite-difference oracle"]);
    let a = &v["asymptotic"]["branches"][0];
    assert!((a["a2"].as_f64().unwrap() - 3.0 * lambda / 0.64).abs() <= 1e-6 * lambda);
}

#[test]
fn derivative_constant_shift_and_polygon_warning() {
    let run = Run::new();
    run.ok(
        "derivative",
        &format!("{SQUARE}[potential]\nkind = \"constant\"\nvalue = 3.0\n[target]\nindex = 1\n"),
    );
    let v = run.json("derivative.json");
    let mu = v["derivative"]["lambda_omega"].as_f64().unwrap() - 3.0;
    let dlam = floats(&v["derivative"]["dlam"])[0];
    assert!((dlam + 2.0 * mu).abs() <= 1e-8 * mu);
    let oracle = floats(&v["derivative"]["oracle"])[0];
    assert!((oracle - dlam).abs() <= 1e-6 * dlam.abs());
    assert!(v["derivative"].get("boundary_integral").is_none());
    assert_eq!(v["warnings"][0]["kind"], "route_skipped");
    assert_eq!(v["warnings"][0]["route"], "boundary integral");
}

#[test]
fn maslov_reports_index_and_count() {
    let run = Run::new();
    let base = format!("{DISC}[flow]\ntau = 0.5\ngrid_n = 16\n");
    run.ok("maslov", &format!("{base}[target]\nlambda0 = 2.0\n"));
    let v = run.json("maslov.json");
    assert_eq!(v["index"], 0);
    assert_eq!(v["crossings"], serde_json::json!([]));

    run.ok("maslov", &format!("{base}[target]\nlambda0 = 10.0\n"));
    let v = run.json("maslov.json");
    assert_eq!(v["index"], -1);
    assert_eq!(v["spectral_count"], 1);
    assert_eq!(v["consistent"], true);
    assert_eq!(v["crossings"][0]["dim"], 1);
    assert!(v["crossings"][0]["form_eigenvalues"][0].as_f64().unwrap() < 0.0);
}

#[test]
fn maslov_indices_add_over_split_interval() {
    let run = Run::new();
    let cfg = |tau: f64, end: f64| {
        format!("{SQUARE}[potential]\nkind = \"gaussian\"\namplitude = -3.0\ncenter = [0.2, 0.1]\nwidth = 0.3\n[flow]\ntau = {tau}\nt_end = {end}\ngrid_n = 24\n[target]\nlambda0 = 45.0\n")
    };
    let index = |tau, end| {
        run.ok("maslov", &cfg(tau, end));
        run.json("maslov.json")["index"].as_i64().unwrap()
    };
    let whole = index(0.5, 1.0);
    assert!(whole < 0);
    assert_eq!(whole, index(0.5, 0.73) + index(0.73, 1.0));
}

#[test]
fn reports_are_deterministic() {
    let cfg = format!("{DISC}[potential]\nkind = \"gaussian\"\namplitude = 2.0\ncenter = [0.1, 0.0]\nwidth = 0.3\n[target]\nindex = 2\nt0 = 0.9\n");
    let a = Run::new();
    a.ok("derivative", &cfg);
    let b = Run::new();
    let o = b.exec("derivative", &cfg, &["--threads", "2"]);
    assert!(o.status.success());
    let read = |r: &Run, n: &str| std::fs::read(r.out().join(n)).unwrap();
    assert_eq!(read(&a, "derivative.json"), read(&b, "derivative.json"));
    let meta = a.json("derivative.metadata.json");
    assert!(meta["timestamp_unix"].as_u64().unwrap() > 0);
    assert_eq!(meta["outputs"][0], "derivative.json");
}

#[test]
fn mesh_writes_text_and_summary() {
    let run = Run::new();
    run.ok("mesh", "[domain]\nkind = \"square\"\n[mesh]\nh = 0.25\n");
    let s = run.json("mesh.json");
    assert!((s["area"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let text = std::fs::read_to_string(run.out().join("mesh.txt")).unwrap();
    assert!(text.starts_with(&format!("nodes {}", s["nodes"])));
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_spectral-flow"))
        .args(["verify", "--criterion", "9", "--criterion", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("criterion 9 PASS") && stdout.contains("criterion 1 PASS"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_spectral-flow"))
        .args(["verify", "--criterion", "12", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
