//! The solution file written by `solve` and stored by the service.
//!
//! It embeds the scenario the plan was computed for (after any case preset),
//! so `validate` and `render` need nothing else.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engines::{EngineKind, Solution, SolveStats};
use crate::error::{Error, Result};
use crate::formulation::{validate_plan, Plan, ValidationReport};
use crate::heuristic::HeuristicTrace;
use crate::scenario::io::ScenarioFile;
use crate::scenario::{cases, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub schema_version: u32,
    pub engine: EngineKind,
    #[serde(default)]
    pub case: Option<u8>,
    pub scenario: ScenarioFile,
    pub plan: Plan,
    pub stats: SolveStats,
    pub validation: ValidationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<HeuristicTrace>,
}

impl SolutionFile {
    pub fn new(sc: &Scenario, case: Option<u8>, sol: Solution) -> SolutionFile {
        let validation = validate_plan(sc, &sc.derive_tables(), &sol.plan);
        SolutionFile {
            schema_version: SCHEMA_VERSION,
            engine: sol.engine,
            case,
            scenario: ScenarioFile::from_scenario(sc),
            plan: sol.plan,
            stats: sol.stats,
            validation,
            trace: sol.trace,
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario.clone().into_scenario()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<SolutionFile> {
        let file: SolutionFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            field: String::new(),
            message: e.to_string(),
        })?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion {
                found: file.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SolutionFile> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SolutionFile::from_json(&text)
    }
}

/// One-line summary of the parameters a solve runs with, including the
/// durations and cooldowns a preset fills in.
pub fn run_header(sc: &Scenario, case: Option<u8>, engine: EngineKind) -> String {
    let mode = sc.mode;
    let mut s = format!("engine {engine}");
    if let Some(c) = case {
        s += &format!(", case {c} ({})", cases::describe(c));
    }
    s += &format!(
        ", mode {}, N={}, S={}, A={}, T={}, B={}, omega={}",
        mode.name(),
        sc.n(),
        sc.sensors.len(),
        sc.agents.len(),
        sc.horizon,
        sc.budget,
        sc.omega
    );
    if mode.uses_knockouts() {
        s += &format!(", knockout radius {}", sc.knockout_radius);
    } else {
        s += &format!(", kappa {}", sc.confusion_factor);
    }
    if let Some(q) = sc.required_ped {
        s += &format!(", required PED {q}");
    }
    for (i, a) in sc.agents.iter().enumerate() {
        let show = |o: Option<u32>| o.map_or("none".to_string(), |v| v.to_string());
        s += &format!(
            "; agent {}: cost {} duration {} cooldown {} dwell {}",
            i + 1,
            a.action_cost(mode),
            a.action_duration(mode),
            show(a.action_cooldown(mode)),
            show(a.action_dwell(mode))
        );
    }
    s
}
