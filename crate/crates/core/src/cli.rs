//! Command-line front end. Results go to standard output as JSON (or SVG/LP
//! text); run headers and summaries go to standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::engines::{solve, EngineConfig, EngineKind, Solution, SolveStats};
use crate::error::{Error, Result};
use crate::formulation::{export_lp, import_solution, validate_plan, Model, ReductionMask, ReductionPolicy};
use crate::render::{render_svg, RenderSpec};
use crate::report::{run_header, SolutionFile, SCHEMA_VERSION};
use crate::scenario::generate::{generate_instance, small_instance, GenParams};
use crate::scenario::{cases, io, Scenario};

#[derive(Parser)]
#[command(name = "sentinel", version, about = "Sensor-evading path planning on triangular meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random scenarios.
    Gen(GenArgs),
    /// Solve a scenario with one engine.
    Solve(SolveArgs),
    /// Write the 0-1 program as an LP file.
    ExportLp(ExportArgs),
    /// Check a solution file (or a solver assignment) against its scenario.
    Validate(ValidateArgs),
    /// Draw a scenario or solution as SVG.
    Render(RenderArgs),
    /// Report variable reductions and model size.
    Stats(StatsArgs),
    /// Run the HTTP planning service.
    Serve(ServeArgs),
}

#[derive(Args, Clone, Default)]
struct ScenarioArgs {
    /// Scenario file; the bundled 13x13 example if omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Experiment preset 1..5.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    case: Option<u8>,
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    omega: Option<u32>,
    #[arg(long)]
    required_ped: Option<f64>,
    /// Sensor ids to treat as switched off, comma separated.
    #[arg(long, value_delimiter = ',')]
    forced_knockouts: Vec<u32>,
    #[arg(long)]
    single_agent: bool,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        let base = match &self.scenario {
            Some(p) => io::load_scenario(p)?,
            None => io::example(),
        };
        let mut sc = match self.case {
            Some(c) => cases::apply_case(&base, c, self.horizon)?,
            None => {
                let mut sc = base;
                if let Some(t) = self.horizon {
                    sc.horizon = t;
                }
                sc
            }
        };
        if let Some(b) = self.budget {
            sc.budget = b;
        }
        if let Some(o) = self.omega {
            sc.omega = o;
        }
        if let Some(q) = self.required_ped {
            sc.required_ped = Some(q);
        }
        if !self.forced_knockouts.is_empty() {
            sc = sc.with_forced_knockouts(self.forced_knockouts.iter().copied());
        }
        if self.single_agent {
            sc.single_agent = true;
        }
        Ok(sc)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Seed range `a..b` (end exclusive); needs `--out` as a directory.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, default_value_t = 30)]
    mesh_size: u32,
    #[arg(long, default_value_t = 15)]
    sensors: u32,
    #[arg(long, default_value_t = 2)]
    agents: u32,
    #[arg(long, default_value_t = 2.6)]
    radius: f64,
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    case: Option<u8>,
    #[arg(long)]
    double_area: bool,
    #[arg(long, default_value_t = 0)]
    blocked: u32,
    /// Small 9x9 test instance for the given `--case` (other size flags ignored).
    #[arg(long, requires = "case")]
    small: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long)]
    no_reductions: bool,
    #[arg(long, value_parser = ["safe", "strict"], default_value = "safe")]
    policy: String,
}

impl EngineArgs {
    fn policy(&self) -> ReductionPolicy {
        if self.policy == "strict" {
            ReductionPolicy::Strict
        } else {
            ReductionPolicy::Safe
        }
    }

    fn mask(&self, sc: &Scenario) -> Result<ReductionMask> {
        if self.no_reductions {
            Ok(ReductionMask::full(sc))
        } else {
            ReductionMask::compute(sc, &sc.derive_tables(), self.policy())
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "exact", value_parser = ["exact", "heuristic", "b0", "oracle", "external"])]
    engine: String,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    engine_opts: EngineArgs,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// External solver command, run as `<cmd> model.lp solution.txt`.
    #[arg(long)]
    solver_cmd: Option<String>,
    #[arg(long, default_value_t = 60.0)]
    solver_timeout: f64,
    #[arg(long, default_value_t = 100_000)]
    combo_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    engine_opts: EngineArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Solution file written by `solve`.
    #[arg(long, required_unless_present = "assignment")]
    solution: Option<PathBuf>,
    /// `name value` assignment from an external solver, checked against the
    /// scenario given by the scenario flags.
    #[arg(long, conflicts_with = "solution")]
    assignment: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    engine_opts: EngineArgs,
}

#[derive(Args)]
struct RenderArgs {
    /// Draw this solution; otherwise only the scenario.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    show_mesh: bool,
    #[arg(long)]
    show_coverage: bool,
    #[arg(long)]
    hide_knocked: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Also build the model and count variables and constraints.
    #[arg(long)]
    model: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "SENTINEL_ADDR", default_value = "127.0.0.1:8080")]
    addr: String,
    #[arg(long, env = "SENTINEL_DATA", default_value = "sentinel-data")]
    data: PathBuf,
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s
}

fn parse_range(s: &str) -> Result<std::ops::Range<u64>> {
    let bad = || Error::Config(format!("expected a seed range like 0..50, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a >= b {
        return Err(bad());
    }
    Ok(a..b)
}

fn gen(args: GenArgs) -> Result<()> {
    let params = GenParams {
        mesh_size: args.mesh_size,
        n_sensors: args.sensors,
        n_agents: args.agents,
        radius: args.radius,
        horizon: args.horizon,
        case: args.case,
        double_area: args.double_area,
        blocked: args.blocked,
    };
    let make = |seed: u64| -> Result<Scenario> {
        if args.small {
            small_instance(seed, args.case.expect("clap requires --case"))
        } else {
            generate_instance(seed, &params)
        }
    };
    match (&args.seeds, args.seed) {
        (Some(range), _) => {
            let dir = args.out.as_deref().ok_or_else(|| Error::Config("--seeds needs --out <dir>".into()))?;
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            for seed in parse_range(range)? {
                let path = dir.join(format!("instance-{seed}.json"));
                io::save_scenario(&make(seed)?, &path)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        (None, seed) => write_out(args.out.as_deref(), &io::to_json(&make(seed.unwrap_or(0))?)),
    }
}

fn solve_cmd(args: SolveArgs) -> Result<()> {
    let engine: EngineKind = args.engine.parse()?;
    let sc = args.scenario.load()?;
    eprintln!("{}", run_header(&sc, args.scenario.case, engine));
    let cfg = EngineConfig {
        node_limit: args.node_limit.or(EngineConfig::default().node_limit),
        time_limit: args.time_limit.map(Duration::from_secs_f64),
        use_reductions: !args.engine_opts.no_reductions,
        policy: args.engine_opts.policy(),
        solver_cmd: args.solver_cmd.clone(),
        solver_timeout: Duration::from_secs_f64(args.solver_timeout),
        combo_cap: args.combo_cap,
    };
    let sol = match solve(&sc, engine, &cfg) {
        Ok(sol) => sol,
        Err(Error::ResourceLimit { reason, incumbent }) => {
            if let Some(plan) = incumbent {
                let sol = Solution { engine, plan: plan.with_metrics(&sc, &sc.derive_tables()), stats: SolveStats::default(), trace: None };
                write_out(args.out.as_deref(), &SolutionFile::new(&sc, args.scenario.case, sol).to_json())?;
                eprintln!("incumbent written");
            }
            return Err(Error::ResourceLimit { reason, incumbent: None });
        }
        Err(e) => return Err(e),
    };
    let file = SolutionFile::new(&sc, args.scenario.case, sol);
    let p = &file.plan;
    let mut summary = match p.time_to_target {
        Some(t) => format!("time to target {t} steps"),
        None => "target not reached".to_string(),
    };
    if let Some(ped) = p.ped {
        summary += &format!(", PED {ped:.6}");
    }
    summary += &format!(
        ", {} knockouts, {} confusions, {} ms",
        p.knockouts.len(),
        p.confusions.len(),
        file.stats.elapsed_ms
    );
    if file.stats.budget_ignored {
        summary += ", budget ignored by b0";
    }
    if file.stats.truncated {
        summary += ", combination cap reached";
    }
    eprintln!("{summary}");
    write_out(args.out.as_deref(), &file.to_json())
}

fn export_cmd(args: ExportArgs) -> Result<()> {
    let sc = args.scenario.load()?;
    sc.validate()?;
    let model = Model::build(&sc, &sc.derive_tables(), &args.engine_opts.mask(&sc)?)?;
    eprintln!("{} variables, {} constraints", model.num_vars(), model.num_constraints());
    write_out(args.out.as_deref(), &export_lp(&model))
}

fn validate_cmd(args: ValidateArgs) -> Result<bool> {
    let (sc, plan) = match (&args.solution, &args.assignment) {
        (Some(path), _) => {
            let file = SolutionFile::load(path)?;
            (file.scenario()?, file.plan)
        }
        (None, Some(path)) => {
            let sc = args.scenario.load()?;
            sc.validate()?;
            let tb = sc.derive_tables();
            let model = Model::build(&sc, &tb, &args.engine_opts.mask(&sc)?)?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            (sc.clone(), import_solution(&model, &sc, &tb, &text)?)
        }
        (None, None) => unreachable!("clap enforces one source"),
    };
    let report = validate_plan(&sc, &sc.derive_tables(), &plan);
    eprintln!("{} violations", report.violations.len());
    write_out(None, &json(&report))?;
    Ok(report.feasible)
}

fn render_cmd(args: RenderArgs) -> Result<()> {
    let (sc, plan) = match &args.solution {
        Some(path) => {
            let file = SolutionFile::load(path)?;
            (file.scenario()?, Some(file.plan))
        }
        None => (args.scenario.load()?, None),
    };
    let spec = RenderSpec {
        show_mesh: args.show_mesh,
        show_coverage: args.show_coverage,
        hide_knocked: args.hide_knocked,
    };
    write_out(args.out.as_deref(), &render_svg(&sc, plan.as_ref(), &spec))
}

fn stats_cmd(args: StatsArgs) -> Result<()> {
    let sc = args.scenario.load()?;
    sc.validate()?;
    let tb = sc.derive_tables();
    let mut out = serde_json::Map::new();
    out.insert("schema_version".into(), SCHEMA_VERSION.into());
    for policy in [ReductionPolicy::Safe, ReductionPolicy::Strict] {
        let mask = ReductionMask::compute(&sc, &tb, policy)?;
        let st = mask.stats();
        let name = if policy == ReductionPolicy::Safe { "safe" } else { "strict" };
        eprintln!("{name}: {:.2}% of x variables excluded ({} of {})", st.percent_excluded, st.eliminated_x, st.total_x);
        let mut entry = serde_json::to_value(st).expect("serializes");
        if args.model {
            let model = Model::build(&sc, &tb, &mask)?;
            entry["variables"] = model.num_vars().into();
            entry["constraints"] = model.num_constraints().into();
            entry["families"] = serde_json::to_value(model.family_counts()).expect("serializes");
        }
        out.insert(name.into(), entry);
    }
    write_out(None, &json(&out))
}

fn serve_cmd(args: ServeArgs) -> Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Config(format!("could not start runtime: {e}")))?;
    rt.block_on(crate::service::serve(&args.addr, &args.data))
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve_cmd(a),
        Command::ExportLp(a) => export_cmd(a),
        Command::Validate(a) => match validate_cmd(a) {
            Ok(true) => Ok(()),
            Ok(false) => return 1,
            Err(e) => Err(e),
        },
        Command::Render(a) => render_cmd(a),
        Command::Stats(a) => stats_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
