use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CHAIN: &str = r#"{"dim": 1, "vertices": [{"id": 1, "offset": [0.0]}], "edges": [{"from": 1, "to": 1, "cell": [1]}]}"#;

/// Two vertices per cell in the plane, so the fiber is a genuine 2×2 matrix.
const DIMER: &str = r#"{
  "dim": 2,
  "vertices": [{"id": 1, "offset": [0.0, 0.0], "Q": 0.5}, {"id": 2, "offset": [0.5, 0.5]}],
  "edges": [
    {"from": 1, "to": 2, "cell": [0, 0]},
    {"from": 2, "to": 1, "cell": [1, 0]},
    {"from": 2, "to": 1, "cell": [0, 1]},
    {"from": 1, "to": 1, "cell": [1, 1]}
  ]
}"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("chain.json"), CHAIN).unwrap();
        std::fs::write(dir.path().join("dimer.json"), DIMER).unwrap();
        Workspace { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        self.run_with(args, None)
    }

    fn run_with(&self, args: &[&str], threads: Option<&str>) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_gapcount"));
        cmd.current_dir(self.dir.path()).args(args);
        match threads {
            Some(t) => cmd.env("GAPCOUNT_THREADS", t),
            None => cmd.env_remove("GAPCOUNT_THREADS"),
        };
        cmd.output().unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn gamma_prints_the_chain_value() {
    let w = Workspace::new();
    let o = w.run(&["gamma", "--graph", "chain.json", "--lambda", "-1", "--p", "1", "--sign", "minus", "--theta", "const:1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let value: f64 = stdout(&o).trim().parse().unwrap();
    assert!((value - 2.0 / 5f64.sqrt()).abs() < 1e-9, "{value}");
}

#[test]
fn gamma_csv_row() {
    let w = Workspace::new();
    let out = w.path("gamma.csv");
    let o = w.run(&[
        "gamma", "--graph", "chain.json", "--lambda", "-1", "--p", "1", "--sign", "minus", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,p,sign,gamma,torus_sum,sphere,grid"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[2], "-");
    assert!((row[3].parse::<f64>().unwrap() - 0.894427191).abs() < 1e-9);
    assert_eq!(row[5].parse::<f64>().unwrap(), 2.0);
}

#[test]
fn bands_table_has_one_row_per_grid_point() {
    let w = Workspace::new();
    let out = w.path("bands.csv");
    let o = w.run(&["bands", "--graph", "chain.json", "--grid", "64", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = read(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k_1,E_1");
    assert_eq!(lines.len(), 65);
    // Every real carries 17 significant digits.
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "-3.1415926535897931e0");
    assert_eq!(first[1].parse::<f64>().unwrap(), 4.0);
}

#[test]
fn two_band_header() {
    let w = Workspace::new();
    let o = w.run(&["bands", "--graph", "dimer.json", "--grid", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("k_1,k_2,E_1,E_2"));
    assert_eq!(text.lines().count(), 17);
}

#[test]
fn missing_graph_is_a_usage_error() {
    let w = Workspace::new();
    let o = w.run(&["bands", "--grid", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--graph"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let w = Workspace::new();
    assert_eq!(w.run(&["spectrum"]).status.code(), Some(2));
}

#[test]
fn malformed_graph_points_at_the_line() {
    let w = Workspace::new();
    std::fs::write(w.path("bad.json"), "{\n  \"dim\": 1,\n  \"vertices\": [}\n").unwrap();
    let o = w.run(&["gaps", "--graph", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.json:3:"), "{err}");
}

#[test]
fn invalid_graph_is_rejected() {
    let w = Workspace::new();
    std::fs::write(
        w.path("loose.json"),
        r#"{"dim": 1, "vertices": [{"id": 1, "offset": [0.0]}, {"id": 2, "offset": [0.5]}], "edges": [{"from": 1, "to": 1, "cell": [1]}]}"#,
    )
    .unwrap();
    let o = w.run(&["gaps", "--graph", "loose.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("vertex 2 has no edges"), "{}", stderr(&o));
}

#[test]
fn inside_band_lambda_is_reported() {
    let w = Workspace::new();
    let o = w.run(&["gamma", "--graph", "chain.json", "--lambda", "2", "--p", "1", "--sign", "plus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("inside a band"));
}

#[test]
fn output_does_not_depend_on_the_worker_count() {
    let w = Workspace::new();
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let bands = w.path(&format!("bands{threads}.csv"));
        let gamma = w.path(&format!("gamma{threads}.csv"));
        let o = w.run_with(&["bands", "--graph", "dimer.json", "--grid", "48", "--out", bands.to_str().unwrap()], Some(threads));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let o = w.run_with(
            &["gamma", "--graph", "dimer.json", "--lambda", "-0.5", "--p", "1.5", "--sign", "minus", "--theta", "cos2", "--out", gamma.to_str().unwrap()],
            Some(threads),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        files.push((std::fs::read(bands).unwrap(), std::fs::read(gamma).unwrap()));
    }
    assert!(files[0] == files[1]);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let w = Workspace::new();
    let o = w.run_with(&["gaps", "--graph", "chain.json"], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gaps_and_regularity() {
    let w = Workspace::new();
    let o = w.run(&["gaps", "--graph", "chain.json", "--grid", "16"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.lines().nth(1).unwrap().starts_with("0,left-semi-infinite,-inf,0.0000000000000000e0"));
    let o = w.run(&["regularity", "--graph", "chain.json", "--gap", "0", "--edge", "right"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["verdict"], "regular");
    let h = report["hessians"][0][0][0].as_f64().unwrap();
    assert!((h - 2.0).abs() < 1e-6);
    let o = w.run(&["regularity", "--graph", "chain.json", "--gap", "0", "--edge", "left"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn edge_conditions_on_the_chain() {
    let w = Workspace::new();
    let o = w.run(&[
        "edge-conditions", "--graph", "chain.json", "--gap", "0", "--edge", "right", "--p", "1", "--kappa", "1",
        "--ladder", "64,128,256", "--weak-ladder", "1024,2048",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "check,exponent,grid,total,growth_exponent,verdict");
    assert_eq!(lines.len(), 6);
    assert!(lines[3].starts_with("integrable,") && lines[3].ends_with(",divergent"), "{text}");
}

#[test]
fn count_agrees_between_methods() {
    let w = Workspace::new();
    let o = w.run(&[
        "count", "--graph", "chain.json", "--lambda", "-1", "--tau", "5,20", "--L", "60", "--p", "1", "--sign", "minus",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,tau,L,N_bs,N_direct,gamma,ratio,flags");
    assert_eq!(lines.len(), 3);
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[3], f[4]);
        assert!(f[3].parse::<usize>().unwrap() > 0);
    }
}

#[test]
fn count_along_an_edge_ladder() {
    let w = Workspace::new();
    let o = w.run(&[
        "count", "--graph", "chain.json", "--gap", "0", "--edge", "right", "--steps", "4", "--tau", "10", "--L", "40", "--p",
        "1", "--sign", "minus",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let counts: Vec<usize> = stdout(&o).lines().skip(1).map(|r| r.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(counts.len(), 4);
    assert!(counts.windows(2).all(|c| c[0] <= c[1]), "{counts:?}");
    let o = w.run(&[
        "count", "--graph", "chain.json", "--gap", "0", "--edge", "right", "--tau", "10", "--L", "40", "--p", "1", "--sign",
        "plus",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn asymptotics_table() {
    let w = Workspace::new();
    let o = w.run(&[
        "asymptotics", "--graph", "chain.json", "--lambda", "-1", "--p", "1", "--sign", "minus", "--tau", "5,10", "--L",
        "25,50,100,200",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3, "{text}");
    let o = w.run(&[
        "asymptotics", "--graph", "chain.json", "--lambda", "-1", "--p", "1", "--sign", "minus", "--tau", "50", "--L", "25,50",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_format() {
    let w = Workspace::new();
    let o = w.run(&["gaps", "--graph", "chain.json", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows[1]["kind"], "right-semi-infinite");
    assert_eq!(rows[1]["lower"].as_f64(), Some(4.0));
}

#[test]
fn pdo_multiplication_case() {
    let w = Workspace::new();
    let out = w.path("s.csv");
    let summary = w.path("summary.csv");
    let o = w.run(&[
        "pdo", "--L", "32,64", "--out", out.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = read(&out);
    assert_eq!(s.lines().next(), Some("m,s_m,m^{1/p}s_m"));
    assert_eq!(s.lines().count(), 130);
    let first: Vec<f64> = s.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 1.0);
    assert!((first[1] - 1.0).abs() < 1e-9);
    let summary = read(&summary);
    assert_eq!(summary.lines().next(), Some("L,M,dp_sup,dp_inf,formula"));
    let last: Vec<&str> = summary.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(last[1], "512");
    assert!((last[4].parse::<f64>().unwrap() - 2.0).abs() < 1e-8);
}

#[test]
fn pdo_commutator_and_cwikel() {
    let w = Workspace::new();
    let o = w.run(&["pdo", "--L", "16", "--f", "const:2", "--commutator"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for row in stdout(&o).lines().skip(1) {
        assert_eq!(row.split(',').nth(1).unwrap().parse::<f64>().unwrap(), 0.0);
    }
    let o = w.run(&["pdo", "--L", "16,32", "--f", "half:0", "--cwikel-q", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().next(), Some("L,M,ratio"));
    let o = w.run(&["pdo", "--L", "16", "--cwikel-q", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn weaklp_summary_and_errors() {
    let w = Workspace::new();
    let harmonic: Vec<String> = (1..=256).map(|m| (1.0 / m as f64).to_string()).collect();
    std::fs::write(w.path("h.txt"), format!("# harmonic\n{}\n", harmonic.join(" "))).unwrap();
    let o = w.run(&["weaklp", "--input", "h.txt", "--p", "1", "--window", "0.01,0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["quasinorm"].as_f64(), Some(1.0));
    assert_eq!(v["weak"], "yes");
    assert_eq!(v["small_o"], "no");
    std::fs::write(w.path("bad.txt"), "1 2\n3, -4\n").unwrap();
    let o = w.run(&["weaklp", "--input", "bad.txt", "--p", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.txt:2:4:"), "{}", stderr(&o));
}

#[test]
fn verify_subset_passes() {
    let w = Workspace::new();
    let o = w.run(&["verify", "--only", "1,3,9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    assert!(text.contains("3/3 checks passed"));
    assert_eq!(w.run(&["verify", "--only", "13"]).status.code(), Some(2));
}
