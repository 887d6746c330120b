use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nbspectra"))
}

fn write_graph(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

const TRIANGLE: &str = "nbgraph v1\nvertices 3\nedge 0 1\nedge 1 2\nedge 2 0\n";
const K4: &str =
    "nbgraph v1\nvertices 4\nedge 0 1\nedge 0 2\nedge 0 3\nedge 1 2\nedge 1 3\nedge 2 3\n";
const PATH2: &str = "nbgraph v1\nvertices 2\nedge 0 1\n";

fn parse_eig_csv(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("re,") && !l.trim().is_empty())
        .map(|l| {
            let (re, im) = l.split_once(',').unwrap();
            (re.parse().unwrap(), im.parse().unwrap())
        })
        .collect()
}

#[test]
fn spectrum_triangle_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "t.graph", TRIANGLE);
    let out = bin().args(["spectrum", &g]).output().unwrap();
    assert!(out.status.success());
    let rows = parse_eig_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 6);
}

#[test]
fn spectrum_methods_agree_on_k4() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "k4.graph", K4);
    let run = |method: &str| {
        let out = bin().args(["spectrum", &g, "--method", method]).output().unwrap();
        assert!(out.status.success());
        parse_eig_csv(&String::from_utf8(out.stdout).unwrap())
    };
    let mut a = run("companion");
    let mut b = run("direct");
    assert_eq!(a.len(), 12);
    assert_eq!(b.len(), 12);
    let key = |x: &(f64, f64)| (x.0, x.1);
    a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    for (x, y) in a.iter().zip(&b) {
        assert!((x.0 - y.0).hypot(x.1 - y.1) < 1e-6);
    }
}

#[test]
fn missing_file_is_usage_error() {
    let out = bin().args(["spectrum", "/nonexistent/g.graph"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ratios_k4_out_at_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "k4.graph", K4);
    let out = bin().args(["ratios", &g, "--lambda", "2"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["decision"], "out");
    assert!((v["alpha"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert_eq!(v["lambda"][0], 2.0);
    assert!(v["ratios"].is_array());
    assert_eq!(v["config"]["subcommand"], "ratios");
}

#[test]
fn ratios_forced_in_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "k4.graph", K4);
    let out = bin().args(["ratios", &g, "--lambda", "1"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["decision"], "in");
    assert_eq!(v["method"], "forced_point");
}

#[test]
fn ratios_malformed_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "k4.graph", K4);
    let out = bin().args(["ratios", &g, "--lambda", "2+?i"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scan_outputs_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "k4.graph", K4);
    let prefix1 = dir.path().join("scan1").display().to_string();
    let prefix2 = dir.path().join("scan2").display().to_string();
    for (prefix, threads) in [(&prefix1, "1"), (&prefix2, "2")] {
        let out = bin()
            .args([
                "scan", &g, "--region", "-1.6,1.6,-1.6,1.6", "--grid", "10x10", "--seed", "5",
                "--threads", threads, "--out", prefix,
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    // identical bytes regardless of thread count
    for ext in ["csv", "pgm", "meta.json"] {
        let a = std::fs::read(format!("{prefix1}.{ext}")).unwrap();
        let b = std::fs::read(format!("{prefix2}.{ext}")).unwrap();
        assert_eq!(a, b, "{ext} differs");
    }
    let pgm = std::fs::read_to_string(format!("{prefix1}.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n"));
    assert!(pgm.contains("\n10 10\n255\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{prefix1}.meta.json")).unwrap())
            .unwrap();
    assert!((meta["meta"]["gr"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(meta["meta"]["seed"], 5);
    assert_eq!(meta["meta"]["config"]["subcommand"], "scan");
}

#[test]
fn scan_bad_region_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "k4.graph", K4);
    let out = bin()
        .args(["scan", &g, "--region", "1,-1,0,1", "--grid", "4x4", "--out", "x"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lift_n1_all_old_and_seed_echo() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "k4.graph", K4);
    let prefix = dir.path().join("lift").display().to_string();
    let out = bin()
        .args(["lift", &g, "-n", "1", "--seed", "77", "--out", &prefix])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{prefix}.stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["n_new"], 0);
    assert_eq!(stats["n_old"], 12);
    assert_eq!(stats["config"]["seed"], 77);
    let cloud = std::fs::read_to_string(format!("{prefix}.points.csv")).unwrap();
    assert_eq!(cloud.lines().filter(|l| l.ends_with(",old")).count(), 12);
    assert_eq!(cloud.lines().filter(|l| l.ends_with(",new")).count(), 0);
}

#[test]
fn verify_k4_passes_and_low_degree_refused() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "k4.graph", K4);
    let out = bin().args(["verify", &g]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("max residual"));
    assert!(text.contains("ok"));

    let p2 = write_graph(dir.path(), "p2.graph", PATH2);
    let out = bin().args(["verify", &p2]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn env_seed_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "k4.graph", K4);
    let prefix = dir.path().join("lift").display().to_string();
    let out = bin()
        .env("NBSPECTRA_SEED", "123")
        .args(["lift", &g, "-n", "2", "--out", &prefix])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{prefix}.stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["config"]["seed"], 123);
}
