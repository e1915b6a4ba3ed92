//! Sensors, agents and mission parameters.

pub mod cases;
pub mod generate;
pub mod io;
pub mod probability;
pub mod tables;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Cell, Mesh, VertexId};

pub use tables::DerivedTables;

pub const DEFAULT_KNOCKOUT_RADIUS: f64 = 3.0;
pub const DEFAULT_CONFUSION_FACTOR: f64 = 0.1;
pub const DEFAULT_DURATION: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[serde(rename = "feasibility-at-T", alias = "feasibility-at-t", alias = "feasibility")]
    FeasibilityAtT,
    MinTime,
    MaxPed,
    MinTimeRequiredPed,
}

impl Mode {
    /// Knockout modes enforce the hard detection threshold and use knockout actions.
    pub fn uses_knockouts(self) -> bool {
        matches!(self, Mode::FeasibilityAtT | Mode::MinTime)
    }

    /// Probability modes score exposure and use confusion actions.
    pub fn uses_confusion(self) -> bool {
        !self.uses_knockouts()
    }

    pub fn minimises_time(self) -> bool {
        matches!(self, Mode::MinTime | Mode::MinTimeRequiredPed)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::FeasibilityAtT => "feasibility-at-T",
            Mode::MinTime => "min-time",
            Mode::MaxPed => "max-ped",
            Mode::MinTimeRequiredPed => "min-time-required-ped",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::invalid("mode", format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub id: u32,
    pub position: (f64, f64),
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: u32,
    pub start: VertexId,
    pub knockout_cost: f64,
    pub knockout_duration: u32,
    pub confusion_cost: f64,
    pub confusion_duration: u32,
    pub knockout_cooldown: Option<u32>,
    pub confusion_cooldown: Option<u32>,
    pub knockout_dwell: Option<u32>,
    pub confusion_dwell: Option<u32>,
}

impl Agent {
    pub fn new(id: u32, start: VertexId) -> Self {
        Agent {
            id,
            start,
            knockout_cost: 1.0,
            knockout_duration: DEFAULT_DURATION,
            confusion_cost: 1.0,
            confusion_duration: DEFAULT_DURATION,
            knockout_cooldown: None,
            confusion_cooldown: None,
            knockout_dwell: None,
            confusion_dwell: None,
        }
    }

    /// Cost of one action of the kind the mode allows.
    pub fn action_cost(&self, mode: Mode) -> f64 {
        if mode.uses_knockouts() {
            self.knockout_cost
        } else {
            self.confusion_cost
        }
    }

    pub fn action_duration(&self, mode: Mode) -> u32 {
        if mode.uses_knockouts() {
            self.knockout_duration
        } else {
            self.confusion_duration
        }
    }

    pub fn action_cooldown(&self, mode: Mode) -> Option<u32> {
        if mode.uses_knockouts() {
            self.knockout_cooldown
        } else {
            self.confusion_cooldown
        }
    }

    pub fn action_dwell(&self, mode: Mode) -> Option<u32> {
        if mode.uses_knockouts() {
            self.knockout_dwell
        } else {
            self.confusion_dwell
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mesh: Mesh,
    pub sensors: Vec<Sensor>,
    pub agents: Vec<Agent>,
    pub horizon: u32,
    pub budget: f64,
    pub omega: u32,
    pub knockout_radius: f64,
    pub confusion_factor: f64,
    pub required_ped: Option<f64>,
    pub mode: Mode,
    pub exit_target: Option<VertexId>,
    pub forced_knockouts: BTreeSet<u32>,
    /// Use exactly one agent; all others leave at t = 1.
    pub single_agent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
    pub severity: Severity,
}

impl Diagnostic {
    fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            field: field.into(),
            message: message.into(),
            severity: Severity::Error,
        }
    }

    fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            field: field.into(),
            message: message.into(),
            severity: Severity::Warning,
        }
    }
}

impl Scenario {
    pub fn target(&self) -> VertexId {
        self.mesh.target()
    }

    pub fn n(&self) -> usize {
        self.mesh.vertex_count()
    }

    pub fn cell_of(&self, v: VertexId) -> Cell {
        self.mesh.vertex(v).expect("vertex in mesh").cell
    }

    /// Every problem with the scenario, fatal or not.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let t = self.horizon;
        if t < 1 {
            out.push(Diagnostic::error("horizon", "horizon must be at least 1"));
        }
        if !(self.budget >= 0.0) || !self.budget.is_finite() {
            out.push(Diagnostic::error("budget", "budget must be a finite non-negative number"));
        }
        if self.omega < 1 {
            out.push(Diagnostic::error("omega", "omega must be at least 1"));
        }
        if !(self.knockout_radius >= 0.0) || !self.knockout_radius.is_finite() {
            out.push(Diagnostic::error("knockout_radius", "knockout radius must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.confusion_factor) {
            out.push(Diagnostic::error("confusion_factor", "confusion factor must lie in [0, 1]"));
        }
        match (self.mode, self.required_ped) {
            (Mode::MinTimeRequiredPed, None) => out.push(Diagnostic::error(
                "required_ped",
                "min-time-required-ped mode needs a required PED",
            )),
            (Mode::MinTimeRequiredPed, Some(q)) if !(0.0..=1.0).contains(&q) => {
                out.push(Diagnostic::error("required_ped", "required PED must lie in [0, 1]"))
            }
            (Mode::MinTimeRequiredPed, Some(_)) => {}
            (mode, Some(_)) => out.push(Diagnostic::error(
                "required_ped",
                format!("required PED is only meaningful in min-time-required-ped mode, not {mode}"),
            )),
            (_, None) => {}
        }
        let mut ids = BTreeSet::new();
        for (i, s) in self.sensors.iter().enumerate() {
            let field = format!("sensors[{i}]");
            if s.id as usize != i + 1 {
                out.push(Diagnostic::error(format!("{field}.id"), format!("sensor ids must run 1..S in order, found {}", s.id)));
            }
            ids.insert(s.id);
            if !(s.radius > 0.0) || !s.radius.is_finite() {
                out.push(Diagnostic::error(format!("{field}.radius"), "radius must be positive"));
            }
            if !s.position.0.is_finite() || !s.position.1.is_finite() {
                out.push(Diagnostic::error(format!("{field}.position"), "position must be finite"));
            }
        }
        if self.agents.is_empty() {
            out.push(Diagnostic::error("agents", "at least one agent is required"));
        }
        let target = self.target();
        let mut starts = BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            let field = format!("agents[{i}]");
            if a.id as usize != i + 1 {
                out.push(Diagnostic::error(format!("{field}.id"), format!("agent ids must run 1..A in order, found {}", a.id)));
            }
            if !self.mesh.contains(a.start) {
                out.push(Diagnostic::error(format!("{field}.start"), "start is not a mesh vertex"));
            } else if a.start == target {
                out.push(Diagnostic::error(format!("{field}.start"), "agent starts on the target"));
            }
            if !starts.insert(a.start) {
                out.push(Diagnostic::warning(format!("{field}.start"), "two agents share a start vertex"));
            }
            for (name, cost) in [("knockout_cost", a.knockout_cost), ("confusion_cost", a.confusion_cost)] {
                if !(cost >= 0.0) || !cost.is_finite() {
                    out.push(Diagnostic::error(format!("{field}.{name}"), "cost must be finite and non-negative"));
                }
            }
            for (name, value) in [
                ("knockout_cooldown", a.knockout_cooldown),
                ("confusion_cooldown", a.confusion_cooldown),
                ("knockout_dwell", a.knockout_dwell),
                ("confusion_dwell", a.confusion_dwell),
            ] {
                if let Some(v) = value {
                    if v < 1 || v >= t {
                        out.push(Diagnostic::error(
                            format!("{field}.{name}"),
                            format!("must lie in [1, T-1] = [1, {}], got {v}", t.saturating_sub(1)),
                        ));
                    }
                }
            }
        }
        for &k in &self.forced_knockouts {
            if !ids.contains(&k) {
                out.push(Diagnostic::error("forced_knockouts", format!("unknown sensor id {k}")));
            }
        }
        if let Some(xi) = self.exit_target {
            if !self.mesh.contains(xi) {
                out.push(Diagnostic::error("exit_target", "exit target is not a mesh vertex"));
            } else if xi == target {
                out.push(Diagnostic::error("exit_target", "exit target coincides with the extraction vertex"));
            }
        }
        let (tx, ty) = self.mesh.position(target);
        for s in &self.sensors {
            if s.id > 0 && !self.forced_knockouts.contains(&s.id) && dist((tx, ty), s.position) <= s.radius + tables::RANGE_EPS {
                out.push(Diagnostic::warning(
                    "mesh.target",
                    format!("target lies inside the range of sensor {}; detection there is ignored", s.id),
                ));
            }
        }
        out
    }

    /// Fails on the first fatal diagnostic.
    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().into_iter().find(|d| d.severity == Severity::Error) {
            Some(d) => Err(Error::InvalidScenario {
                field: d.field,
                message: d.message,
            }),
            None => Ok(()),
        }
    }

    pub fn derive_tables(&self) -> DerivedTables {
        DerivedTables::derive(self)
    }

    /// Same scenario with sensors removed from play.
    pub fn with_forced_knockouts(&self, sensors: impl IntoIterator<Item = u32>) -> Scenario {
        let mut s = self.clone();
        s.forced_knockouts.extend(sensors);
        s
    }
}

pub(crate) fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_example_is_valid() {
        let s = io::example();
        s.validate().unwrap();
        assert_eq!(s.sensors.len(), 4);
        assert_eq!(s.agents.len(), 2);
    }

    #[test]
    fn required_ped_must_match_mode() {
        let mut s = io::example();
        s.required_ped = Some(0.9);
        assert!(matches!(s.validate(), Err(Error::InvalidScenario { field, .. }) if field == "required_ped"));
        s.mode = Mode::MinTimeRequiredPed;
        s.validate().unwrap();
        s.required_ped = None;
        assert!(s.validate().is_err());
    }

    #[test]
    fn cooldown_range() {
        let mut s = io::example();
        s.agents[0].knockout_cooldown = Some(s.horizon);
        assert!(s.validate().is_err());
        s.agents[0].knockout_cooldown = Some(s.horizon - 1);
        s.validate().unwrap();
    }

    #[test]
    fn target_in_range_is_a_warning() {
        let mut s = io::example();
        s.sensors[0].position = s.mesh.position(s.target());
        let d = s.diagnostics();
        assert!(d.iter().any(|d| d.severity == Severity::Warning && d.field == "mesh.target"));
        s.validate().unwrap();
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [Mode::FeasibilityAtT, Mode::MinTime, Mode::MaxPed, Mode::MinTimeRequiredPed] {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
    }
}
