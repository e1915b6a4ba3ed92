//! Versioned JSON scenario files.
//!
//! Lattice references (`mesh.target`, `mesh.blocked`, agent `start`,
//! `exit_target`) are `[row, col]` pairs because vertex ids depend on which
//! cell is the target.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Cell, Mesh};

use super::{Agent, Mode, Scenario, Sensor};

pub const FORMAT_VERSION: u32 = 1;

const EXAMPLE: &str = include_str!("../../scenarios/example.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub rows: u32,
    pub cols: u32,
    #[serde(default)]
    pub blocked: Vec<Cell>,
    pub target: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub id: u32,
    pub start: Cell,
    pub knockout_cost: f64,
    pub knockout_duration: u32,
    pub confusion_cost: f64,
    pub confusion_duration: u32,
    #[serde(default)]
    pub knockout_cooldown: Option<u32>,
    #[serde(default)]
    pub confusion_cooldown: Option<u32>,
    #[serde(default)]
    pub knockout_dwell: Option<u32>,
    #[serde(default)]
    pub confusion_dwell: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub mesh: MeshFile,
    pub sensors: Vec<Sensor>,
    pub agents: Vec<AgentFile>,
    pub horizon: u32,
    pub budget: f64,
    pub omega: u32,
    pub knockout_radius: f64,
    pub confusion_factor: f64,
    pub required_ped: Option<f64>,
    pub mode: Mode,
    pub exit_target: Option<Cell>,
    #[serde(default)]
    pub forced_knockouts: Vec<u32>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub single_agent: bool,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<serde_json::Value>,
}

impl ScenarioFile {
    pub fn from_scenario(sc: &Scenario) -> ScenarioFile {
        ScenarioFile {
            version: FORMAT_VERSION,
            mesh: MeshFile {
                rows: sc.mesh.rows(),
                cols: sc.mesh.cols(),
                blocked: sc.mesh.blocked().iter().copied().collect(),
                target: sc.cell_of(sc.target()),
            },
            sensors: sc.sensors.clone(),
            agents: sc
                .agents
                .iter()
                .map(|a| AgentFile {
                    id: a.id,
                    start: sc.cell_of(a.start),
                    knockout_cost: a.knockout_cost,
                    knockout_duration: a.knockout_duration,
                    confusion_cost: a.confusion_cost,
                    confusion_duration: a.confusion_duration,
                    knockout_cooldown: a.knockout_cooldown,
                    confusion_cooldown: a.confusion_cooldown,
                    knockout_dwell: a.knockout_dwell,
                    confusion_dwell: a.confusion_dwell,
                })
                .collect(),
            horizon: sc.horizon,
            budget: sc.budget,
            omega: sc.omega,
            knockout_radius: sc.knockout_radius,
            confusion_factor: sc.confusion_factor,
            required_ped: sc.required_ped,
            mode: sc.mode,
            exit_target: sc.exit_target.map(|v| sc.cell_of(v)),
            forced_knockouts: sc.forced_knockouts.iter().copied().collect(),
            single_agent: sc.single_agent,
        }
    }

    /// Resolves lattice references. Does not run [`Scenario::validate`].
    pub fn into_scenario(self) -> Result<Scenario> {
        if self.version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: self.version,
                expected: FORMAT_VERSION,
            });
        }
        let blocked: BTreeSet<Cell> = self.mesh.blocked.iter().copied().collect();
        let mesh = Mesh::build(self.mesh.rows, self.mesh.cols, &blocked)?;
        let mesh = mesh.with_target(self.mesh.target).map_err(|e| Error::invalid("mesh.target", e.to_string()))?;
        let resolve = |field: String, cell: Cell| {
            mesh.id_of(cell).ok_or_else(|| {
                Error::invalid(field, format!("cell [{}, {}] is blocked or outside the mesh", cell.row, cell.col))
            })
        };
        let agents = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                Ok(Agent {
                    id: a.id,
                    start: resolve(format!("agents[{i}].start"), a.start)?,
                    knockout_cost: a.knockout_cost,
                    knockout_duration: a.knockout_duration,
                    confusion_cost: a.confusion_cost,
                    confusion_duration: a.confusion_duration,
                    knockout_cooldown: a.knockout_cooldown,
                    confusion_cooldown: a.confusion_cooldown,
                    knockout_dwell: a.knockout_dwell,
                    confusion_dwell: a.confusion_dwell,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let exit_target = self.exit_target.map(|c| resolve("exit_target".into(), c)).transpose()?;
        Ok(Scenario {
            mesh,
            sensors: self.sensors,
            agents,
            horizon: self.horizon,
            budget: self.budget,
            omega: self.omega,
            knockout_radius: self.knockout_radius,
            confusion_factor: self.confusion_factor,
            required_ped: self.required_ped,
            mode: self.mode,
            exit_target,
            forced_knockouts: self.forced_knockouts.into_iter().collect(),
            single_agent: self.single_agent,
        })
    }
}

/// Parses scenario JSON, reporting the offending line and field on failure.
pub fn parse_file(text: &str) -> Result<ScenarioFile> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        field: String::new(),
        message: e.to_string(),
    })?;
    match probe.version {
        None => {
            return Err(Error::Parse {
                line: 1,
                field: "version".into(),
                message: "missing field `version`".into(),
            })
        }
        Some(v) => match v.as_u64() {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::UnsupportedVersion {
                    found: v.min(u32::MAX as u64) as u32,
                    expected: FORMAT_VERSION,
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    field: "version".into(),
                    message: format!("version must be an integer, got {v}"),
                })
            }
        },
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        let field = match missing_field(&message) {
            Some(name) if path == "." => name.to_string(),
            Some(name) => format!("{path}.{name}"),
            None => path,
        };
        Error::Parse {
            line: inner.line(),
            field,
            message,
        }
    })
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

pub fn from_json(text: &str) -> Result<Scenario> {
    parse_file(text)?.into_scenario()
}

pub fn to_json(sc: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(&ScenarioFile::from_scenario(sc)).expect("scenario serializes");
    s.push('\n');
    s
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

pub fn save_scenario(sc: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(sc)).map_err(|e| Error::io(path, e))
}

/// The bundled 13x13 four-sensor example.
pub fn example() -> Scenario {
    from_json(EXAMPLE).expect("bundled example parses")
}

pub fn example_json() -> &'static str {
    EXAMPLE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let sc = example();
        let text = to_json(&sc);
        let back = from_json(&text).unwrap();
        assert_eq!(sc, back);
        assert_eq!(text, to_json(&back));
    }

    #[test]
    fn file_round_trip_with_options() {
        let mut sc = example();
        sc.exit_target = Some(sc.mesh.id_of(Cell::new(3, 3)).unwrap());
        sc.forced_knockouts.insert(2);
        sc.agents[1].confusion_dwell = Some(2);
        sc.mode = Mode::MinTimeRequiredPed;
        sc.required_ped = Some(0.95);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_scenario(&sc, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), sc);
    }

    #[test]
    fn missing_omega_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(EXAMPLE).unwrap();
        v.as_object_mut().unwrap().remove("omega");
        let err = from_json(&serde_json::to_string_pretty(&v).unwrap()).unwrap_err();
        match err {
            Error::Parse { field, .. } => assert_eq!(field, "omega"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_field_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(EXAMPLE).unwrap();
        v["agents"][1]["start"] = serde_json::json!("left");
        let err = from_json(&serde_json::to_string_pretty(&v).unwrap()).unwrap_err();
        match err {
            Error::Parse { field, line, .. } => {
                assert_eq!(field, "agents[1].start");
                assert!(line > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn legacy_version_rejected() {
        let text = EXAMPLE.replacen("\"version\": 1", "\"version\": 0", 1);
        assert!(matches!(from_json(&text), Err(Error::UnsupportedVersion { found: 0, expected: 1 })));
    }

    #[test]
    fn blocked_start_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(EXAMPLE).unwrap();
        v["mesh"]["blocked"] = serde_json::json!([[1, 2]]);
        let err = from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::InvalidScenario { ref field, .. } if field == "agents[0].start"), "{err:?}");
    }
}
