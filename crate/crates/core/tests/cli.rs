use std::path::Path;
use std::process::{Command, Output};

use sentinel::report::SolutionFile;

fn sentinel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentinel")).args(args).output().unwrap()
}

fn solve_to(dir: &Path, engine: &str, case: &str) -> (Output, SolutionFile) {
    let out = dir.join(format!("{engine}-{case}.json"));
    let o = sentinel(&["solve", "--engine", engine, "--case", case, "--out", out.to_str().unwrap()]);
    let file = SolutionFile::load(&out).unwrap();
    (o, file)
}

#[test]
fn figure_cases() {
    let dir = tempfile::tempdir().unwrap();
    let (o, b0) = solve_to(dir.path(), "b0", "1");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(b0.plan.time_to_target, Some(10));
    assert!(b0.stats.budget_ignored);
    let (o, exact) = solve_to(dir.path(), "exact", "1");
    assert!(o.status.success());
    assert_eq!(exact.plan.time_to_target, Some(9));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("engine exact, case 1"), "{stderr}");
    assert!(stderr.contains("T=12") && stderr.contains("cooldown 10"), "{stderr}");
}

#[test]
fn validate_accepts_solve_output() {
    let dir = tempfile::tempdir().unwrap();
    solve_to(dir.path(), "exact", "4");
    let path = dir.path().join("exact-4.json");
    let o = sentinel(&["validate", "--solution", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));

    // Tampering with the trajectory is caught.
    let mut file = SolutionFile::load(&path).unwrap();
    file.plan.trajectories[0][1] = file.plan.trajectories[0][0] + 40;
    std::fs::write(&path, file.to_json()).unwrap();
    let o = sentinel(&["validate", "--solution", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = sentinel(&["gen", "--seed", "11", "--case", "2", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let batch = dir.path().join("batch");
    std::fs::create_dir(&batch).unwrap();
    let o = sentinel(&["gen", "--seeds", "3..6", "--small", "--case", "1", "--out", batch.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(&batch).unwrap().count(), 3);
}

#[test]
fn render_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = solve_to(dir.path(), "exact", "1");
    let sol = dir.path().join("exact-1.json");
    let svg = |name: &str| {
        let out = dir.path().join(name);
        let o = sentinel(&["render", "--solution", sol.to_str().unwrap(), "--show-coverage", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read_to_string(out).unwrap()
    };
    let first = svg("a.svg");
    assert!(first.starts_with("<svg"));
    assert_eq!(first, svg("b.svg"));
}

#[test]
fn export_and_stats() {
    let o = sentinel(&["export-lp", "--case", "2"]);
    assert!(o.status.success());
    let lp = String::from_utf8(o.stdout).unwrap();
    let parsed = sentinel::formulation::parse_lp(&lp).unwrap();
    assert!(!parsed.maximize);
    assert!(!parsed.rows.is_empty());

    let o = sentinel(&["stats", "--case", "1", "--model"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("percent"), "{text}");
}

#[test]
fn exit_codes() {
    assert_eq!(sentinel(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(sentinel(&["--help"]).status.code(), Some(0));
    // Far too short a horizon.
    assert_eq!(sentinel(&["solve", "--case", "1", "--horizon", "3"]).status.code(), Some(2));
    assert_eq!(sentinel(&["solve", "--scenario", "/nonexistent.json"]).status.code(), Some(1));
}
