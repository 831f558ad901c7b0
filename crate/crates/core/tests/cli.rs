use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spectral_echo::io::read_matrix_bin;
use spectral_echo::manifest::Manifest;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectral-echo"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn value<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
}

fn two_disks(dir: &Path, n_per: &str) -> std::path::PathBuf {
    let data = dir.join("disks");
    ok(&["generate", "two-disks", "--n-per", n_per, "--seed", "2", "--out", s(&data)]);
    data
}

#[test]
fn generate_writes_dataset_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_disks(dir.path(), "30");
    for f in ["points.csv", "edges.txt", "labels.txt", "manifest.txt", "echo.conf"] {
        assert!(data.join(f).exists(), "missing {f}");
    }
    let rows = fs::read_to_string(data.join("points.csv")).unwrap().lines().count();
    assert_eq!(rows, 61);
    let labels = fs::read_to_string(data.join("labels.txt")).unwrap();
    assert_eq!(labels.lines().filter(|l| l.trim() == "1").count(), 30);

    // same seed, same bytes
    let again = dir.path().join("again");
    ok(&["generate", "two-disks", "--n-per", "30", "--seed", "2", "--out", s(&again)]);
    assert_eq!(fs::read(data.join("points.csv")).unwrap(), fs::read(again.join("points.csv")).unwrap());
    assert_eq!(fs::read(data.join("edges.txt")).unwrap(), fs::read(again.join("edges.txt")).unwrap());
}

#[test]
fn echo_writes_symmetric_distance_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_disks(dir.path(), "25");
    let out = dir.path().join("echo");
    let stdout = ok(&[
        "echo", "--config", s(&data.join("echo.conf")), "--rule", "mean", "--k-sources", "4", "--samples", "40",
        "--csv", "--out", s(&out),
    ]);
    assert_eq!(value(&stdout, "n"), "50");
    let lambda1: f64 = value(&stdout, "lambda1").parse().unwrap();
    let horizon: f64 = value(&stdout, "horizon").parse().unwrap();
    assert!((horizon * lambda1 - 1.0).abs() < 1e-12);

    let d = read_matrix_bin(fs::File::open(out.join("distance.bin")).unwrap()).unwrap();
    assert_eq!(d.dim(), (50, 50));
    for i in 0..50 {
        assert_eq!(d[[i, i]], 0.0);
        for j in 0..50 {
            assert_eq!(d[[i, j]], d[[j, i]]);
        }
    }
    assert!(out.join("distance.csv").exists() && out.join("affinity.bin").exists());
    assert_eq!(fs::read_to_string(out.join("sources.txt")).unwrap().lines().count(), 4);
    let m = Manifest::read_file(&out.join("manifest.txt")).unwrap();
    assert_eq!(m.get("rule"), Some("mean"));
    assert_eq!(m.parse::<usize>("samples").unwrap(), Some(40));
}

#[test]
fn min_rule_never_exceeds_mean_rule() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_disks(dir.path(), "20");
    let mut mats = Vec::new();
    for rule in ["min", "mean"] {
        let out = dir.path().join(rule);
        ok(&["echo", "--config", s(&data.join("echo.conf")), "--rule", rule, "--k-sources", "5", "--out", s(&out)]);
        mats.push(read_matrix_bin(fs::File::open(out.join("distance.bin")).unwrap()).unwrap());
    }
    assert!(mats[0].iter().zip(mats[1].iter()).all(|(a, b)| *a <= *b + 1e-12));
}

#[test]
fn distance_bytes_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_disks(dir.path(), "40");
    let mut bytes = Vec::new();
    for threads in ["1", "2", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = bin()
            .args(["echo", "--config", s(&data.join("echo.conf")), "--rule", "min", "--seed", "5", "--out", s(&out)])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        bytes.push(fs::read(out.join("distance.bin")).unwrap());
    }
    assert!(bytes.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn missing_rule_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_disks(dir.path(), "10");
    let o = run(&["echo", "--config", s(&data.join("echo.conf")), "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rule"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_disks(dir.path(), "10");
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, format!("edges={}\nrule=min\nbogus=1\n", data.join("edges.txt").display())).unwrap();
    let o = run(&["echo", "--config", s(&conf), "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_disks(dir.path(), "10");
    let conf = dir.path().join("c.conf");
    fs::write(&conf, format!("edges={}\nrule=min\nsamples=30\n", data.join("edges.txt").display())).unwrap();
    let out = dir.path().join("o");
    ok(&["echo", "--config", s(&conf), "--samples", "45", "--k-sources", "3", "--out", s(&out)]);
    let m = Manifest::read_file(&out.join("manifest.txt")).unwrap();
    assert_eq!(m.parse::<usize>("samples").unwrap(), Some(45));
    assert_eq!(m.get("rule"), Some("min"));
}

#[test]
fn disconnected_graph_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("tri.txt");
    fs::write(&edges, "0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n").unwrap();
    let o = run(&["echo", "--edges", s(&edges), "--rule", "min", "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(3));

    let o = run(&["verify-theorem", "--edges", s(&edges), "--x0", "0", "--y0", "3", "--samples", "20000"]);
    assert_eq!(o.status.code(), Some(3));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("bound_holds=true"), "{stdout}");
}

#[test]
fn verify_theorem_on_two_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("pair.txt");
    fs::write(&edges, "0 1 1.0\n").unwrap();
    let stdout = ok(&["verify-theorem", "--edges", s(&edges), "--x0", "0", "--y0", "1", "--tolerance", "0.005"]);
    let line = stdout.lines().find(|l| l.starts_with("pair=0,1")).unwrap();
    let ratio: f64 = line.split_whitespace().find_map(|t| t.strip_prefix("ratio=")).unwrap().parse().unwrap();
    assert!((ratio - 1.0).abs() < 0.005);
    assert!(line.ends_with("pass=true"));

    let stdout = ok(&["verify-theorem", "--edges", s(&edges), "--x0", "1", "--y0", "1"]);
    assert!(stdout.contains("pair=1,1 skipped=trivial"));

    // too short a horizon to average out the oscillation
    let o = run(&["verify-theorem", "--edges", s(&edges), "--x0", "0", "--y0", "1", "--horizon", "0.7", "--samples", "1000"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn compare_scores_two_disks() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_disks(dir.path(), "60");
    let out = dir.path().join("cmp");
    let stdout = ok(&["compare", "--config", s(&data.join("echo.conf")), "--rule", "mean", "--out", s(&out)]);
    for k in ["raw.accuracy", "refined.accuracy"] {
        let a: f64 = value(&stdout, k).parse().unwrap();
        assert!((0.5..=1.0).contains(&a), "{k}={a}");
    }
    assert!(out.join("embedding_raw.csv").exists() && out.join("embedding_refined.csv").exists());
    let header = fs::read_to_string(out.join("embedding_refined.csv")).unwrap();
    assert!(header.starts_with("phi1,phi2"));
}

#[test]
fn compare_reports_dumbbell_step_fit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("db");
    ok(&["generate", "dumbbell", "--n", "200", "--seed", "1", "--out", s(&data)]);
    let stdout = ok(&[
        "compare", "--config", s(&data.join("echo.conf")), "--rule", "mean", "--symbol", "heat", "--dims", "1",
        "--n-eigs", "20",
    ]);
    for k in ["raw.step_fit", "refined.step_fit", "refined.box_variance_left", "refined.box_variance_right"] {
        let v: f64 = value(&stdout, k).parse().unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }
}

#[test]
fn circles_on_a_toy_network() {
    let dir = tempfile::tempdir().unwrap();
    let mut edges = String::new();
    for base in [0u32, 100] {
        for i in 0..6 {
            for j in (i + 1)..6 {
                edges.push_str(&format!("{} {}\n", base + i, base + j));
            }
        }
    }
    edges.push_str("0 100\n");
    fs::write(dir.path().join("toy.txt"), edges).unwrap();
    fs::write(dir.path().join("toy.circles"), "c0\t0\t1\t2\t3\t4\t5\nc1\t100\t101\t102\n").unwrap();
    let out = dir.path().join("circ");
    let stdout = ok(&[
        "compare", "--snap-edges", s(&dir.path().join("toy.txt")), "--snap-circles", s(&dir.path().join("toy.circles")),
        "--rule", "mean", "--out", s(&out),
    ]);
    assert_eq!(value(&stdout, "original.median_circle_edges"), "9");
    value(&stdout, "wave.median_circle_edges");
    let csv = fs::read_to_string(out.join("circle_edges.csv")).unwrap();
    assert!(csv.starts_with("circle,size,original,heat,wave\nc0,6,15,"));
}
