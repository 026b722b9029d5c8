//! The `phlo` binary: exit codes, golden outputs, emitted files.
//!
//! Set `PHLO_UPDATE_GOLDEN=1` to rewrite the golden files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "grid.nx = 16\ngrid.ny = 16\ngrid.nz = 16\ngrid.nt = 16\nprobes = 300\n";

fn phlo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phlo")).args(args).env_remove("PHLO_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("PHLO_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

#[test]
fn verify_passes_on_a_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.conf", SMALL);
    let out = phlo(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("PhLO verification report\n"));
    assert!(text.contains("summary: 32 passed, 0 failed"));
    golden("verify_small.txt", &text);
}

#[test]
fn verify_machine_format_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.conf", SMALL);
    let out = phlo(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "machine",
        "--provider",
        "fd",
        "--fd-step",
        "1e-5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["provider"]["mode"], "finite_difference");
    assert_eq!(json["provider"]["step"], 1e-5);
}

#[test]
fn verify_fails_on_a_non_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "x.conf", &format!("{SMALL}u_expr = x\n"));
    let out = phlo(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("[FAIL] eom_component_pdes (dynamical)"));
    assert!(!text.lines().any(|l| l.starts_with("[FAIL]") && l.ends_with("(structural)")));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.conf");
    let out = phlo(&["verify", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot read"));

    for (text, needle) in [
        ("lambda = 2\n", "derived"),
        ("colour = red\n", "unknown key `colour`"),
        ("kappa = 3\n", "kappa"),
        ("u_expr = sin(\n", "offset 4"),
        ("l0 = 1\nl0 = 2\n", "given twice"),
    ] {
        let cfg = write_config(dir.path(), "bad.conf", text);
        let out = phlo(&["verify", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(stderr(&out).contains(needle), "{text}: {}", stderr(&out));
    }
    assert_eq!(phlo(&["verify", "--provider", "magic"]).status.code(), Some(2));
    assert_eq!(phlo(&["energy", "--grid", "4,4"]).status.code(), Some(2));
}

#[test]
fn curvature_of_linear_fields() {
    let out = phlo(&["curvature", "--u", "z", "--p", "xi", "--epsilon", "1", "--probes", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("x          min 1.000000000000e0  max 1.000000000000e0"));
    assert!(text.contains("(Hdz,Hdxi) non-integrable"));
    assert!(text.contains("(dx,dy)    integrable"));
    golden("curvature_linear.txt", &text);
}

#[test]
fn curvature_of_zero_fields_and_bad_input() {
    let out = phlo(&["curvature", "--u", "0", "--p", "0", "--probes", "32"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("l0: undefined"));

    let out = phlo(&["curvature", "--u", "sin(", "--p", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("offset 4"));
    assert_eq!(phlo(&["curvature", "--u", "x", "--p", "y", "--epsilon", "2"]).status.code(), Some(2));
}

#[test]
fn parse_check_echoes_canonical_forms() {
    let out = phlo(&["parse-check", "-x^2", "sin(x)*bump((xi+z)/4)", "2^3^2"]);
    assert_eq!(out.status.code(), Some(0));
    golden("parse_check.txt", &stdout(&out));
    let out = phlo(&["parse-check", "x + "]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("at offset 4: expected primary"));
}

#[test]
fn planck_and_energy_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.conf", SMALL);
    let c = cfg.to_str().unwrap();
    let out = phlo(&["planck", "--config", c]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    for key in ["E  ", "T  ", "nu  ", "h = E*T", "H  ", "mismatch", "richardson", "result: PASS"] {
        assert!(text.contains(key), "missing {key}");
    }
    let out = phlo(&["energy", "--config", c, "--grid", "16,16,16", "--format", "machine"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["slices"].as_array().unwrap().len(), 5);

    // κ flipped: H changes sign.
    let flipped = write_config(dir.path(), "flip.conf", &format!("{SMALL}kappa = -1\n"));
    let machine = |p: &Path| -> serde_json::Value {
        serde_json::from_str(&stdout(&phlo(&["planck", "--config", p.to_str().unwrap(), "--format", "machine"])))
            .unwrap()
    };
    let (a, b) = (machine(&cfg), machine(&flipped));
    assert_eq!(a["action"].as_f64().unwrap(), -b["action"].as_f64().unwrap());
}

#[test]
fn truncated_support_exits_1_with_a_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cut.conf", &format!("{SMALL}box.xmin = 0.8\n"));
    let out = phlo(&["planck", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("support truncated"));
    assert!(stderr(&out).contains("try x∈"));
}

#[test]
fn emit_writes_the_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let out = phlo(&["emit", "--t", "0", "--grid", "2,2,2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,y,z,t,u,p,phi,psi,energy_density");
    assert_eq!(lines.len(), 9);

    let bad = dir.path().join("no/such/dir/grid.csv");
    let out = phlo(&["emit", "--grid", "2,2,2", "--out", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn emitted_energy_translates_with_the_wave() {
    // Fixed box so both emissions share nodes; Δt = 0.1 is one z step.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "box.conf",
        "box.xmin = 0.6\nbox.xmax = 1.4\nbox.ymin = 0.6\nbox.ymax = 1.4\nbox.zmin = -1.2\nbox.zmax = 1.2\n",
    );
    let c = cfg.to_str().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for (t, p) in [("0.3", &a), ("0.4", &b)] {
        let out = phlo(&["emit", "--config", c, "--t", t, "--grid", "4,4,24", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let energy = |p: &Path| -> Vec<f64> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect()
    };
    let (ea, eb) = (energy(&a), energy(&b));
    // −εcΔt = +0.1 with the default ε = −1.
    for col in 0..16 {
        for k in 0..23 {
            assert!((ea[col * 24 + k] - eb[col * 24 + k + 1]).abs() < 1e-12);
        }
    }
}

#[test]
fn threads_flag_and_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_phlo"))
        .args(["parse-check", "x"])
        .env("PHLO_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_phlo"))
        .args(["--threads", "2", "parse-check", "x"])
        .env("PHLO_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(phlo(&["--threads", "0", "parse-check", "x"]).status.code(), Some(2));
}
