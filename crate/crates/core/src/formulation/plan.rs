use serde::{Deserialize, Serialize};

use crate::mesh::{VertexId, ABSORBING};
use crate::scenario::{DerivedTables, Mode, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Knockout {
    /// 1-based agent id.
    pub agent: u32,
    pub vertex: VertexId,
    pub time: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Confusion {
    pub agent: u32,
    pub time: u32,
}

/// Per-agent trajectories over `t = 0..=T` plus the actions taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub horizon: u32,
    pub trajectories: Vec<Vec<VertexId>>,
    #[serde(default)]
    pub knockouts: Vec<Knockout>,
    #[serde(default)]
    pub confusions: Vec<Confusion>,
    /// Sum of arrival times (min-time modes), log PED (max-ped) or 0.
    #[serde(default)]
    pub objective: Option<f64>,
    #[serde(default)]
    pub ped: Option<f64>,
    #[serde(default)]
    pub time_to_target: Option<u32>,
}

impl Plan {
    pub fn new(horizon: u32, trajectories: Vec<Vec<VertexId>>) -> Plan {
        Plan {
            horizon,
            trajectories,
            knockouts: Vec::new(),
            confusions: Vec::new(),
            objective: None,
            ped: None,
            time_to_target: None,
        }
    }

    pub fn position(&self, agent: usize, t: u32) -> VertexId {
        self.trajectories[agent][t as usize]
    }

    /// Times `t >= 1` at which agent `agent` sits on `target`.
    pub fn visits(&self, agent: usize, v: VertexId) -> impl Iterator<Item = u32> + '_ {
        self.trajectories[agent]
            .iter()
            .enumerate()
            .skip(1)
            .filter(move |&(_, &p)| p == v)
            .map(|(t, _)| t as u32)
    }

    /// `z_t` as a count of overlapping confusion windows, indexed `0..=T`.
    pub fn confusion_counts(&self, sc: &Scenario) -> Vec<u32> {
        let mut z = vec![0u32; self.horizon as usize + 1];
        for c in &self.confusions {
            let Some(agent) = sc.agents.get(c.agent as usize - 1) else { continue };
            let end = (c.time + agent.confusion_duration).min(self.horizon);
            for t in c.time..=end {
                z[t as usize] += 1;
            }
        }
        z
    }

    /// `λ_st` indexed `[t][s]` for `t = 0..=T`.
    pub fn knock_timeline(&self, sc: &Scenario, tb: &DerivedTables) -> Vec<Vec<bool>> {
        let mut lam = vec![vec![false; tb.n_sensors]; self.horizon as usize + 1];
        for k in &self.knockouts {
            let Some(agent) = sc.agents.get(k.agent as usize - 1) else { continue };
            let Some(sensors) = tb.knock_sets.get(k.vertex as usize) else { continue };
            let end = (k.time + agent.knockout_duration).min(self.horizon);
            for t in k.time..=end {
                for &s in sensors {
                    lam[t as usize][s] = true;
                }
            }
        }
        lam
    }

    /// Fills `objective`, `ped` and `time_to_target` from the trajectories.
    pub fn with_metrics(mut self, sc: &Scenario, tb: &DerivedTables) -> Plan {
        let target = sc.target();
        let arrivals: Vec<u32> = (0..self.trajectories.len()).flat_map(|a| self.visits(a, target).collect::<Vec<_>>()).collect();
        self.time_to_target = arrivals.iter().copied().min();
        let ped = crate::engines::ped::evaluate_ped(&self, sc, tb);
        self.objective = Some(match sc.mode {
            Mode::MinTime | Mode::MinTimeRequiredPed => arrivals.iter().map(|&t| t as f64).sum(),
            Mode::MaxPed => ped.ln(),
            Mode::FeasibilityAtT => 0.0,
        });
        self.ped = sc.mode.uses_confusion().then_some(ped);
        self
    }

    /// Plan where every agent leaves for the absorbing vertex at t = 1.
    pub fn idle(sc: &Scenario) -> Plan {
        let t = sc.horizon as usize;
        let trajectories = sc
            .agents
            .iter()
            .map(|a| {
                let mut tr = vec![ABSORBING; t + 1];
                tr[0] = a.start;
                tr
            })
            .collect();
        Plan::new(sc.horizon, trajectories)
    }
}
