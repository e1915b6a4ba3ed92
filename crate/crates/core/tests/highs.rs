//! Runs the exported models through HiGHS via `scripts/highs_solve.py`.
//! Skipped when python3 or highspy is not available.

use std::process::Command;
use std::time::Duration;

use sentinel::engines::{solve, solve_external, EngineConfig, EngineKind};
use sentinel::formulation::{ReductionMask, ReductionPolicy};
use sentinel::scenario::generate::small_instance;

fn highs_available() -> bool {
    Command::new("python3").args(["-c", "import highspy"]).output().is_ok_and(|o| o.status.success())
}

#[test]
fn external_matches_exact() {
    if !highs_available() {
        eprintln!("skipping: highspy not importable");
        return;
    }
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scripts/highs_solve.py");
    let cmd = format!("python3 {script}");
    for seed in 0..10u64 {
        let sc = small_instance(seed, (seed % 5 + 1) as u8).unwrap();
        let tb = sc.derive_tables();
        let exact = solve(&sc, EngineKind::Exact, &EngineConfig::default());
        let mask = match ReductionMask::compute(&sc, &tb, ReductionPolicy::Safe) {
            Ok(m) => m,
            Err(_) => {
                assert!(exact.is_err());
                continue;
            }
        };
        let ext = solve_external(&sc, &tb, &mask, &cmd, Duration::from_secs(120));
        match (exact, ext) {
            (Ok(e), Ok(x)) => {
                let (a, b) = (e.plan.objective.unwrap(), x.objective.unwrap());
                assert!((a - b).abs() <= 1e-6, "seed {seed}: exact {a} vs highs {b}");
            }
            (Err(_), Err(sentinel::error::Error::Infeasible)) => {}
            (e, x) => panic!("seed {seed}: exact {:?} vs highs {:?}", e.map(|s| s.plan.objective), x.map(|p| p.objective)),
        }
    }
}
