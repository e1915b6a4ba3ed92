//! Acceptance checks, one line per criterion. Run with
//! `cargo test --test acceptance`; exits non-zero if any check fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sentinel::engines::{oracle_enumerate, oracle_enumerate_with_limits, solve, solve_external, EngineConfig, EngineKind, OracleLimits, Solution};
use sentinel::error::Error;
use sentinel::formulation::solution::format_solution;
use sentinel::formulation::{export_lp, parse_lp, validate_plan, Confusion, Model, Plan, ReductionMask, ReductionPolicy};
use sentinel::heuristic::solve_heuristic;
use sentinel::mesh::{Cell, Mesh, VertexId, ABSORBING};
use sentinel::scenario::cases::apply_case;
use sentinel::scenario::generate::{generate_instance, small_instance, GenParams};
use sentinel::scenario::probability::{evasion_probability, evasion_probability_two};
use sentinel::scenario::{io, Agent, DerivedTables, Mode, Scenario};

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

fn example_case(case: u8, horizon: Option<u32>) -> Scenario {
    apply_case(&io::example(), case, horizon).unwrap()
}

fn example_oracle(sc: &Scenario) -> Plan {
    let limits = OracleLimits {
        max_vertices: 200,
        ..OracleLimits::default()
    };
    oracle_enumerate_with_limits(sc, &sc.derive_tables(), &limits).unwrap()
}

fn criterion_1() -> Check {
    let sc = example_case(1, None);
    let t0 = Instant::now();
    let sol = match solve(&sc, EngineKind::B0, &EngineConfig::default()) {
        Ok(s) => s,
        Err(e) => return check(false, format!("b0 failed: {e}")),
    };
    let elapsed = t0.elapsed();
    // Recount coverage along the path from raw geometry.
    let mut worst = 0;
    for &v in &sol.plan.trajectories[0] {
        if v == ABSORBING || v == sc.target() {
            continue;
        }
        let (x, y) = sc.mesh.position(v);
        let n = sc
            .sensors
            .iter()
            .filter(|s| ((s.position.0 - x).powi(2) + (s.position.1 - y).powi(2)).sqrt() <= s.radius + 1e-9)
            .count();
        worst = worst.max(n);
    }
    let t = sol.plan.time_to_target;
    check(
        t == Some(10) && elapsed < Duration::from_secs(5) && worst <= 1,
        format!("b0 time {t:?} (expected 10), {:.1} ms, at most {worst} sensor(s) per path vertex", elapsed.as_secs_f64() * 1e3),
    )
}

fn criterion_2() -> Check {
    let sc = example_case(1, None);
    let sol = solve(&sc, EngineKind::Exact, &EngineConfig::default()).unwrap();
    let oracle = example_oracle(&sc);
    let plan = &sol.plan;
    let ok_params = sc.budget == 1.0 && sc.knockout_radius == 3.0 && sc.agents.iter().all(|a| a.knockout_cost == 1.0 && a.knockout_duration == 10);
    let disabled: Vec<usize> = plan
        .knockouts
        .iter()
        .map(|k| {
            let (x, y) = sc.mesh.position(k.vertex);
            sc.sensors
                .iter()
                .filter(|s| ((s.position.0 - x).powi(2) + (s.position.1 - y).powi(2)).sqrt() <= sc.knockout_radius + 1e-9)
                .count()
        })
        .collect();
    let valid = validate_plan(&sc, &sc.derive_tables(), plan).feasible;
    check(
        ok_params && valid && plan.time_to_target == Some(9) && oracle.time_to_target == Some(9) && disabled.iter().any(|&d| d >= 2),
        format!(
            "exact time {:?}, oracle time {:?}, knockouts {:?} disabling {:?} sensors, valid {valid}",
            plan.time_to_target,
            oracle.time_to_target,
            plan.knockouts.iter().map(|k| (k.vertex, k.time)).collect::<Vec<_>>(),
            disabled
        ),
    )
}

fn criterion_3() -> Check {
    let cfg = EngineConfig::default();
    let p10 = solve(&example_case(3, Some(10)), EngineKind::Exact, &cfg).unwrap().plan.ped.unwrap();
    let sc9 = example_case(3, Some(9));
    let p9 = solve(&sc9, EngineKind::Exact, &cfg).unwrap().plan.ped.unwrap();
    let o9 = example_oracle(&sc9).ped.unwrap();
    check(
        (p10 - 1.0).abs() <= 1e-9 && p9 < 0.01 && (p9 - o9).abs() <= 1e-9,
        format!("T=10 PED {p10:.12}, T=9 PED {p9:.6} (oracle {o9:.6})"),
    )
}

fn criterion_4() -> Check {
    let mut sc = example_case(4, Some(9));
    sc.budget = 1.0;
    let dc_ok = sc.agents.iter().all(|a| a.confusion_duration >= 9);
    let ped = solve(&sc, EngineKind::Exact, &EngineConfig::default()).unwrap().plan.ped.unwrap();
    let oracle = example_oracle(&sc).ped.unwrap();
    check(
        dc_ok && sc.confusion_factor == 0.1 && (0.93..=0.97).contains(&ped) && (ped - oracle).abs() <= 1e-9,
        format!("PED {ped:.6} with one confusion (oracle {oracle:.6})"),
    )
}

/// Objective used to compare engines: arrival time for min-time modes, PED otherwise.
fn score(sc: &Scenario, plan: &Plan) -> f64 {
    if sc.mode.minimises_time() {
        plan.objective.unwrap()
    } else {
        plan.ped.unwrap_or(1.0)
    }
}

fn is_infeasible(e: &Error) -> bool {
    matches!(e, Error::Infeasible | Error::InfeasibleByReduction)
}

fn agree(sc: &Scenario, a: &Result<Plan, Error>, b: &Result<Plan, Error>) -> Result<(), String> {
    match (a, b) {
        (Ok(x), Ok(y)) => {
            let (sx, sy) = (score(sc, x), score(sc, y));
            let ok = if sc.mode.minimises_time() {
                sx == sy
            } else if sc.mode == Mode::MaxPed {
                (sx - sy).abs() <= 1e-9
            } else {
                true
            };
            if ok {
                Ok(())
            } else {
                Err(format!("{sx} vs {sy}"))
            }
        }
        (Err(x), Err(y)) if is_infeasible(x) && is_infeasible(y) => Ok(()),
        (x, y) => Err(format!("{:?} vs {:?}", x.as_ref().map(|p| score(sc, p)), y.as_ref().map(|p| score(sc, p)))),
    }
}

struct SmallRun {
    seed: u64,
    sc: Scenario,
    exact: Result<Plan, Error>,
    oracle: Result<Plan, Error>,
    plain: Result<Plan, Error>,
    heuristic: Result<Plan, Error>,
}

fn small_runs() -> (Vec<SmallRun>, Duration) {
    let t0 = Instant::now();
    let cfg = EngineConfig::default();
    let plain_cfg = EngineConfig {
        use_reductions: false,
        ..EngineConfig::default()
    };
    let plan = |r: sentinel::error::Result<Solution>| r.map(|s| s.plan);
    let runs = (0..50u64)
        .map(|seed| {
            let sc = small_instance(seed, (seed % 5 + 1) as u8).unwrap();
            let tb = sc.derive_tables();
            SmallRun {
                seed,
                exact: plan(solve(&sc, EngineKind::Exact, &cfg)),
                oracle: oracle_enumerate(&sc, &tb),
                plain: plan(solve(&sc, EngineKind::Exact, &plain_cfg)),
                heuristic: solve_heuristic(&sc, &tb, &cfg).map(|(p, _)| p),
                sc,
            }
        })
        .collect();
    (runs, t0.elapsed())
}

fn criterion_5(runs: &[SmallRun], elapsed: Duration) -> Check {
    let mut bad = Vec::new();
    let mut modes = BTreeSet::new();
    let mut cases = BTreeSet::new();
    let mut limits_ok = true;
    for r in runs {
        modes.insert(r.sc.mode.name());
        cases.insert(r.seed % 5 + 1);
        limits_ok &= r.sc.sensors.len() <= 4 && r.sc.agents.len() <= 2 && r.sc.horizon <= 10 && r.sc.budget <= 2.0;
        if let Err(e) = agree(&r.sc, &r.exact, &r.oracle) {
            bad.push(format!("seed {}: {e}", r.seed));
        }
    }
    let feasible = runs.iter().filter(|r| r.exact.is_ok()).count();
    check(
        bad.is_empty() && limits_ok && cases.len() == 5 && elapsed < Duration::from_secs(600),
        format!(
            "{} instances over {} cases ({:?}), {feasible} feasible, {:.1} s; mismatches {:?}",
            runs.len(),
            cases.len(),
            modes,
            elapsed.as_secs_f64(),
            bad
        ),
    )
}

fn criterion_6(runs: &[SmallRun]) -> Check {
    let bad: Vec<String> = runs
        .iter()
        .filter_map(|r| agree(&r.sc, &r.exact, &r.plain).err().map(|e| format!("seed {}: {e}", r.seed)))
        .collect();
    let big = |case| {
        let p = GenParams {
            case: Some(case),
            ..GenParams::default()
        };
        let sc = generate_instance(7, &p).unwrap();
        let tb = sc.derive_tables();
        let safe = ReductionMask::compute(&sc, &tb, ReductionPolicy::Safe).unwrap().stats();
        let strict = ReductionMask::compute(&sc, &tb, ReductionPolicy::Strict).unwrap().stats();
        (sc.horizon, safe.percent_excluded, strict.percent_excluded)
    };
    let (t3, safe3, strict3) = big(3);
    let (t1, safe1, strict1) = big(1);
    check(
        bad.is_empty() && safe3 > 90.0,
        format!(
            "reduced and unreduced optima agree on {} instances {:?}; 30x30 at T={t3} excludes {:.1}% of x (strict policy {:.1}%); at T={t1} {:.1}% ({:.1}%)",
            runs.len(),
            bad,
            safe3,
            strict3,
            safe1,
            strict1
        ),
    )
}

/// Random walk that keeps the target reachable by `T`, plus random confusions.
fn random_plan(sc: &Scenario, tb: &DerivedTables, rng: &mut ChaCha8Rng) -> Plan {
    let big_t = sc.horizon;
    let trajectories = sc
        .agents
        .iter()
        .enumerate()
        .map(|(a, agent)| {
            if (a > 0 && rng.gen_bool(0.4)) || tb.dist_to_target[agent.start as usize] > big_t {
                let mut tr = vec![ABSORBING; big_t as usize + 1];
                tr[0] = agent.start;
                return tr;
            }
            let mut tr = vec![agent.start];
            let mut v = agent.start;
            for t in 1..=big_t {
                let left = big_t - t;
                let mut options: Vec<VertexId> = std::iter::once(v).chain(sc.mesh.neighbors(v).iter().copied()).filter(|&u| tb.dist_to_target[u as usize] <= left).collect();
                options.sort_unstable();
                v = options[rng.gen_range(0..options.len())];
                tr.push(v);
            }
            tr
        })
        .collect();
    let mut plan = Plan::new(big_t, trajectories);
    for _ in 0..rng.gen_range(0..=2u32) {
        plan.confusions.push(Confusion {
            agent: rng.gen_range(1..=sc.agents.len() as u32),
            time: rng.gen_range(1..=big_t),
        });
    }
    plan.confusions.sort();
    plan.confusions.dedup();
    plan
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut scenarios = vec![example_case(4, Some(12)), example_case(4, Some(10))];
    for seed in 0..8 {
        scenarios.push(small_instance(1000 + seed, 4).unwrap());
    }
    let mut tested = 0;
    let mut attempts = 0;
    let mut worst = 0.0f64;
    let mut with_confusion = 0;
    while tested < 100 && attempts < 100_000 {
        attempts += 1;
        let sc = &scenarios[attempts % scenarios.len()];
        let tb = sc.derive_tables();
        let plan = random_plan(sc, &tb, &mut rng);
        if !validate_plan(sc, &tb, &plan).feasible {
            continue;
        }
        let model = Model::build(sc, &tb, &ReductionMask::full(sc)).unwrap();
        let values = model.assignment_from_plan(&plan, sc, &tb).unwrap();
        assert!(model.check(&values).is_empty(), "valid plan violates the model");
        let from_model = model.objective_value(&values).exp();
        // Product form, straight from the per-step evasion tables.
        let mut product = 1.0;
        for tr in &plan.trajectories {
            for t in 1..=sc.horizon {
                let v = tr[t as usize];
                if v == ABSORBING || v == sc.target() {
                    continue;
                }
                let confused = plan.confusions.iter().any(|c| t >= c.time && t <= c.time + sc.agents[c.agent as usize - 1].confusion_duration);
                product *= if confused { tb.evade_confused[v as usize] } else { tb.evade[v as usize] };
            }
        }
        with_confusion += usize::from(!plan.confusions.is_empty());
        worst = worst.max(((from_model - product) / product).abs());
        tested += 1;
    }
    check(
        tested == 100 && worst <= 1e-9,
        format!("{tested} valid random plans ({with_confusion} with confusion), worst relative error {worst:.2e}"),
    )
}

fn subset_evasion(p: &[f64], omega: u32) -> f64 {
    let s = p.len();
    (0u32..1 << s)
        .filter(|m| m.count_ones() < omega)
        .map(|m| (0..s).map(|i| if m >> i & 1 == 1 { p[i] } else { 1.0 - p[i] }).product::<f64>())
        .sum()
}

fn two_closed_form(p: &[f64]) -> f64 {
    let none: f64 = p.iter().map(|x| 1.0 - x).product();
    let one: f64 = (0..p.len())
        .map(|i| p[i] * (0..p.len()).filter(|&j| j != i).map(|j| 1.0 - p[j]).product::<f64>())
        .sum();
    none + one
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_two = 0.0f64;
    let mut worst_enum = 0.0f64;
    for _ in 0..2000 {
        let s = rng.gen_range(0..=10);
        let p: Vec<f64> = (0..s).map(|_| if rng.gen_bool(0.1) { 1.0 } else { rng.gen::<f64>() }).collect();
        let two = two_closed_form(&p);
        worst_two = worst_two.max((evasion_probability(&p, 2) - two).abs()).max((evasion_probability_two(&p) - two).abs());
        for omega in 1..=s as u32 + 1 {
            worst_enum = worst_enum.max((evasion_probability(&p, omega) - subset_evasion(&p, omega)).abs());
        }
    }
    // Bundled scenario tables against raw geometry.
    let sc = io::example();
    let tb = sc.derive_tables();
    let mut worst_table = 0.0f64;
    for v in 1..sc.target() {
        let (x, y) = sc.mesh.position(v);
        let p: Vec<f64> = sc
            .sensors
            .iter()
            .filter_map(|s| {
                let d2 = (s.position.0 - x).powi(2) + (s.position.1 - y).powi(2);
                (d2.sqrt() <= s.radius + 1e-9).then(|| 1.0 / (1.0 + d2 / (s.radius * s.radius)))
            })
            .collect();
        worst_table = worst_table.max((tb.evade[v as usize] - two_closed_form(&p)).abs());
    }
    check(
        worst_two <= 1e-12 && worst_enum <= 1e-12 && worst_table <= 1e-12,
        format!("omega=2 error {worst_two:.1e}, enumeration error {worst_enum:.1e} (S<=10, all omega), example table error {worst_table:.1e}"),
    )
}

fn criterion_9(runs: &[SmallRun]) -> Check {
    let mut problems = Vec::new();
    let (mut found, mut matched, mut feasible) = (0, 0, 0);
    for r in runs {
        let tb = r.sc.derive_tables();
        let exact = r.exact.as_ref().ok();
        feasible += usize::from(exact.is_some());
        let Ok(h) = &r.heuristic else { continue };
        found += 1;
        if !validate_plan(&r.sc, &tb, h).feasible {
            problems.push(format!("seed {}: infeasible plan", r.seed));
            continue;
        }
        let Some(e) = exact else {
            problems.push(format!("seed {}: plan returned where exact finds none", r.seed));
            continue;
        };
        let (sh, se) = (score(&r.sc, h), score(&r.sc, e));
        let better = if r.sc.mode.minimises_time() { sh < se } else { sh > se + 1e-12 };
        if better {
            problems.push(format!("seed {}: heuristic {sh} beats exact {se}", r.seed));
        }
        let same = if r.sc.mode.minimises_time() { sh == se } else { (sh - se).abs() <= 1e-9 };
        matched += usize::from(same);
    }
    check(
        problems.is_empty(),
        format!(
            "heuristic found {found}/{feasible} feasible instances, matched the optimum on {matched} ({:.0}%); problems {:?}",
            100.0 * matched as f64 / feasible.max(1) as f64,
            problems
        ),
    )
}

/// Two adjacent vertices: the agent starts on 1, the target is 2.
fn two_vertex(mode: Mode) -> Scenario {
    let blocked: BTreeSet<Cell> = [Cell::new(1, 0), Cell::new(1, 1)].into_iter().collect();
    let sc = Scenario {
        mesh: Mesh::build(2, 2, &blocked).unwrap(),
        sensors: Vec::new(),
        agents: vec![Agent::new(1, 1)],
        horizon: 2,
        budget: 1.0,
        omega: 2,
        knockout_radius: 3.0,
        confusion_factor: 0.1,
        required_ped: None,
        mode,
        exit_target: None,
        forced_knockouts: BTreeSet::new(),
        single_agent: false,
    };
    sc.validate().unwrap();
    sc
}

fn criterion_10() -> Check {
    let mut notes = Vec::new();
    let mut pass = true;
    // Hand tallies with no reductions, T = 2, one agent, vertices {0, 1, 2}.
    // x: 3 vertices x 2 steps. Knockout mode adds alpha on {1, 2} x 2 steps;
    // max-ped adds beta and z per step.
    let tallies: [(Mode, usize, &[(&str, usize)]); 2] = [
        (
            Mode::MinTime,
            10,
            &[("assign", 2), ("reach", 4), ("leave", 3), ("absorb", 1), ("target", 1), ("finish", 1), ("excess", 1), ("ko_at", 4), ("budget", 1)],
        ),
        (
            Mode::MaxPed,
            10,
            &[("assign", 2), ("reach", 4), ("leave", 3), ("absorb", 1), ("target", 1), ("excess", 1), ("conf", 2), ("active", 2), ("budget", 1)],
        ),
    ];
    for (mode, vars, families) in tallies {
        let sc = two_vertex(mode);
        let tb = sc.derive_tables();
        let model = Model::build(&sc, &tb, &ReductionMask::full(&sc)).unwrap();
        let expected: BTreeMap<&str, usize> = families.iter().copied().collect();
        let rows: usize = expected.values().sum();
        let lp = parse_lp(&export_lp(&model)).unwrap();
        let ok = model.num_vars() == vars && model.family_counts() == expected && lp.rows.len() == rows && lp.binaries.len() == vars;
        pass &= ok;
        notes.push(format!("{mode}: {} vars / {} rows (expected {vars} / {rows})", model.num_vars(), lp.rows.len()));
    }

    // Stub solver that hands back a known-feasible assignment.
    let sc = example_case(1, None);
    let tb = sc.derive_tables();
    let mask = ReductionMask::compute(&sc, &tb, ReductionPolicy::Safe).unwrap();
    let known = solve(&sc, EngineKind::Exact, &EngineConfig::default()).unwrap().plan;
    let model = Model::build(&sc, &tb, &mask).unwrap();
    let values = model.assignment_from_plan(&known, &sc, &tb).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let answer = dir.path().join("answer.txt");
    std::fs::write(&answer, format_solution(&model, &values)).unwrap();
    let script = dir.path().join("stub.sh");
    std::fs::write(&script, format!("cp '{}' \"$2\"\n", answer.display())).unwrap();
    let cmd = format!("sh {}", script.display());
    match solve_external(&sc, &tb, &mask, &cmd, Duration::from_secs(30)) {
        Ok(plan) => {
            let ok = validate_plan(&sc, &tb, &plan).feasible && plan.time_to_target == Some(9);
            pass &= ok;
            notes.push(format!("stub round trip gives a valid plan with time {:?}", plan.time_to_target));
        }
        Err(e) => {
            pass = false;
            notes.push(format!("stub round trip failed: {e}"));
        }
    }

    // A fractional answer must be rejected.
    let bad = dir.path().join("bad.txt");
    let mut text = format_solution(&model, &values);
    text = text.replacen(" 1\n", " 0.4\n", 1);
    std::fs::write(&bad, text).unwrap();
    std::fs::write(&script, format!("cp '{}' \"$2\"\n", bad.display())).unwrap();
    let rejected = matches!(solve_external(&sc, &tb, &mask, &cmd, Duration::from_secs(30)), Err(Error::InvalidSolution(_)) | Err(Error::Parse { .. }));
    pass &= rejected;
    notes.push(format!("fractional answer rejected: {rejected}"));

    std::fs::write(&script, "exit 2\n").unwrap();
    let infeasible = matches!(solve_external(&sc, &tb, &mask, &cmd, Duration::from_secs(30)), Err(Error::Infeasible));
    pass &= infeasible;
    notes.push(format!("exit status 2 maps to infeasible: {infeasible}"));
    check(pass, notes.join("; "))
}

fn main() {
    let (runs, elapsed) = small_runs();
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(&runs, elapsed),
        criterion_6(&runs),
        criterion_7(),
        criterion_8(),
        criterion_9(&runs),
        criterion_10(),
    ];
    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!("criterion {:>2}: {} {}", i + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
