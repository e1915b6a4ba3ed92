//! Solvers. Every engine returns a [`Plan`] with metrics filled in.

pub mod b0;
pub mod exact;
pub mod external;
pub mod oracle;
pub mod ped;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{Plan, ReductionMask, ReductionPolicy, ReductionStats};
use crate::scenario::Scenario;

pub use b0::solve_b0;
pub use exact::solve_exact;
pub use external::solve_external;
pub use oracle::{oracle_enumerate, oracle_enumerate_with_limits, OracleLimits};
pub use ped::{evaluate_log_ped, evaluate_ped};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Exact,
    External,
    Heuristic,
    Oracle,
    B0,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Exact => "exact",
            EngineKind::External => "external",
            EngineKind::Heuristic => "heuristic",
            EngineKind::Oracle => "oracle",
            EngineKind::B0 => "b0",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => EngineKind::Exact,
            "external" => EngineKind::External,
            "heuristic" => EngineKind::Heuristic,
            "oracle" => EngineKind::Oracle,
            "b0" => EngineKind::B0,
            _ => return Err(Error::Config(format!("unknown engine `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Filter moves and actions through the shortest-path reduction mask.
    pub use_reductions: bool,
    pub policy: ReductionPolicy,
    /// Command for the external engine, split on whitespace.
    pub solver_cmd: Option<String>,
    pub solver_timeout: Duration,
    /// Maximum action combinations the heuristic tries per path.
    pub combo_cap: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            node_limit: Some(20_000_000),
            time_limit: None,
            use_reductions: true,
            policy: ReductionPolicy::Safe,
            solver_cmd: None,
            solver_timeout: Duration::from_secs(60),
            combo_cap: 100_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub elapsed_ms: u64,
    pub nodes: u64,
    pub reductions: Option<ReductionStats>,
    /// Set when b0 ran on a scenario whose budget allows actions.
    pub budget_ignored: bool,
    /// Set when the heuristic hit its combination cap on some path.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub engine: EngineKind,
    pub plan: Plan,
    pub stats: SolveStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<crate::heuristic::HeuristicTrace>,
}

pub fn solve(sc: &Scenario, engine: EngineKind, cfg: &EngineConfig) -> Result<Solution> {
    sc.validate()?;
    let started = Instant::now();
    let tb = sc.derive_tables();
    let mut stats = SolveStats::default();
    let mut trace = None;
    let plan = match engine {
        EngineKind::B0 => {
            stats.budget_ignored = sc.agents.iter().any(|a| a.action_cost(sc.mode) <= sc.budget);
            solve_b0(sc, &tb)?
        }
        EngineKind::Exact => {
            let mask = if cfg.use_reductions {
                let m = ReductionMask::compute(sc, &tb, cfg.policy)?;
                stats.reductions = Some(m.stats());
                Some(m)
            } else {
                None
            };
            let (plan, nodes) = solve_exact(sc, &tb, mask.as_ref(), cfg)?;
            stats.nodes = nodes;
            plan
        }
        EngineKind::Oracle => oracle_enumerate(sc, &tb)?,
        EngineKind::External => {
            let cmd = cfg
                .solver_cmd
                .as_deref()
                .ok_or_else(|| Error::Config("the external engine needs a solver command".into()))?;
            let mask = if cfg.use_reductions {
                ReductionMask::compute(sc, &tb, cfg.policy)?
            } else {
                ReductionMask::full(sc)
            };
            stats.reductions = Some(mask.stats());
            solve_external(sc, &tb, &mask, cmd, cfg.solver_timeout)?
        }
        EngineKind::Heuristic => {
            let (plan, tr) = crate::heuristic::solve_heuristic(sc, &tb, cfg)?;
            stats.truncated = tr.truncated;
            trace = Some(tr);
            plan
        }
    };
    stats.elapsed_ms = started.elapsed().as_millis() as u64;
    Ok(Solution {
        engine,
        plan,
        stats,
        trace,
    })
}
