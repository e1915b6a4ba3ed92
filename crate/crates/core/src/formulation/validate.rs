//! Checks a plan against the scenario rules directly, without building a model.

use serde::{Deserialize, Serialize};

use crate::mesh::{VertexId, ABSORBING};
use crate::scenario::{DerivedTables, Mode, Scenario};

use super::plan::Plan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    /// 1-based agent, when the violation belongs to one.
    pub agent: Option<u32>,
    pub time: Option<u32>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    /// Largest number of live sensors covering any agent at any step.
    pub max_simultaneous_detections: u32,
    pub ped: f64,
    pub objective: f64,
    pub time_to_target: Option<u32>,
}

struct Collector(Vec<Violation>);

impl Collector {
    fn add(&mut self, rule: &str, agent: Option<usize>, time: Option<u32>, message: String) {
        self.0.push(Violation {
            rule: rule.into(),
            agent: agent.map(|a| a as u32 + 1),
            time,
            message,
        });
    }
}

pub fn validate_plan(sc: &Scenario, tb: &DerivedTables, plan: &Plan) -> ValidationReport {
    let mut out = Collector(Vec::new());
    let horizon = sc.horizon;
    let target = sc.target();
    let n = sc.n() as VertexId;

    if plan.horizon != horizon || plan.trajectories.len() != sc.agents.len() {
        out.add("shape", None, None, format!(
            "plan has horizon {} and {} agents; scenario has {} and {}",
            plan.horizon, plan.trajectories.len(), horizon, sc.agents.len()
        ));
        return report(out, 0, sc, tb, plan);
    }
    for (a, tr) in plan.trajectories.iter().enumerate() {
        if tr.len() != horizon as usize + 1 {
            out.add("shape", Some(a), None, format!("trajectory has {} entries, expected {}", tr.len(), horizon + 1));
            return report(out, 0, sc, tb, plan);
        }
        if tr.iter().any(|&v| v > n) {
            out.add("shape", Some(a), None, "trajectory names a vertex outside the mesh".into());
            return report(out, 0, sc, tb, plan);
        }
    }

    for (a, tr) in plan.trajectories.iter().enumerate() {
        if tr[0] != sc.agents[a].start {
            out.add("start", Some(a), Some(0), format!("starts at {} instead of {}", tr[0], sc.agents[a].start));
        }
        for t in 0..horizon as usize {
            let (u, v) = (tr[t], tr[t + 1]);
            let ok = if u == ABSORBING {
                v == ABSORBING
            } else {
                v == ABSORBING || v == u || sc.mesh.are_adjacent(u, v)
            };
            if !ok {
                out.add("move", Some(a), Some(t as u32 + 1), format!("illegal move {u} -> {v}"));
            }
        }
        if sc.mode.minimises_time() {
            for t in 1..horizon as usize {
                if tr[t] == target && tr[t + 1] != ABSORBING {
                    out.add("finish", Some(a), Some(t as u32 + 1), "agent must leave for the absorbing vertex after reaching the target".into());
                }
            }
        }
    }

    let reached = if sc.mode.minimises_time() {
        (0..sc.agents.len()).any(|a| plan.visits(a, target).next().is_some())
    } else {
        plan.trajectories.iter().any(|tr| tr[horizon as usize] == target)
    };
    if !reached {
        out.add("target", None, None, match sc.mode.minimises_time() {
            true => "no agent reaches the target".into(),
            false => format!("no agent is at the target at t = {horizon}"),
        });
    }

    if let Some(xi) = sc.exit_target {
        if !(0..sc.agents.len()).any(|a| plan.visits(a, xi).next().is_some()) {
            out.add("exit", None, None, format!("no agent visits the exit vertex {xi}"));
        }
        for (a, tr) in plan.trajectories.iter().enumerate() {
            for t in 1..=horizon as usize {
                if tr[t] == target && !tr[1..t].contains(&xi) {
                    out.add("exit", Some(a), Some(t as u32), "at the target before visiting the exit vertex".into());
                }
            }
        }
    }

    // Actions.
    let knock_mode = sc.mode.uses_knockouts();
    if knock_mode && !plan.confusions.is_empty() {
        out.add("action", None, None, format!("confusion is not available in {} mode", sc.mode));
    }
    if !knock_mode && !plan.knockouts.is_empty() {
        out.add("action", None, None, format!("knockouts are not available in {} mode", sc.mode));
    }
    let mut spent = 0.0;
    let mut times: Vec<Vec<u32>> = vec![Vec::new(); sc.agents.len()];
    for k in &plan.knockouts {
        let Some(a) = (k.agent as usize).checked_sub(1).filter(|&a| a < sc.agents.len()) else {
            out.add("action", None, Some(k.time), format!("knockout by unknown agent {}", k.agent));
            continue;
        };
        if k.time == 0 || k.time > horizon {
            out.add("action", Some(a), Some(k.time), "knockout outside 1..T".into());
            continue;
        }
        let here = plan.position(a, k.time);
        if k.vertex == ABSORBING || here != k.vertex {
            out.add("action", Some(a), Some(k.time), format!("knockout at {} but the agent is at {here}", k.vertex));
        }
        let agent = &sc.agents[a];
        spent += agent.knockout_cost;
        times[a].push(k.time);
        if let Some(psi) = agent.knockout_dwell {
            for tau in k.time..=(k.time + psi).min(horizon) {
                let p = plan.position(a, tau);
                if p != k.vertex && p != ABSORBING {
                    out.add("dwell", Some(a), Some(tau), format!("moved to {p} within the dwell time of a knockout at {}", k.time));
                }
            }
        }
    }
    let z = plan.confusion_counts(sc);
    for c in &plan.confusions {
        let Some(a) = (c.agent as usize).checked_sub(1).filter(|&a| a < sc.agents.len()) else {
            out.add("action", None, Some(c.time), format!("confusion by unknown agent {}", c.agent));
            continue;
        };
        if c.time == 0 || c.time > horizon {
            out.add("action", Some(a), Some(c.time), "confusion outside 1..T".into());
            continue;
        }
        let here = plan.position(a, c.time);
        if here == ABSORBING {
            out.add("action", Some(a), Some(c.time), "confusion by an inactive agent".into());
        }
        let agent = &sc.agents[a];
        spent += agent.confusion_cost;
        times[a].push(c.time);
        if let Some(psi) = agent.confusion_dwell {
            for tau in c.time..=(c.time + psi).min(horizon) {
                let p = plan.position(a, tau);
                if p != here && p != ABSORBING {
                    out.add("dwell", Some(a), Some(tau), format!("moved to {p} within the dwell time of a confusion at {}", c.time));
                }
            }
        }
    }
    for (t, &count) in z.iter().enumerate() {
        if count > 1 {
            out.add("overlap", None, Some(t as u32), format!("{count} confusion windows overlap"));
        }
    }
    if spent > sc.budget + 1e-9 {
        out.add("budget", None, None, format!("actions cost {spent}, budget is {}", sc.budget));
    }
    for (a, ts) in times.iter_mut().enumerate() {
        ts.sort_unstable();
        if ts.windows(2).any(|w| w[0] == w[1]) {
            out.add("action", Some(a), None, "two actions at the same time".into());
        }
        if let Some(phi) = sc.agents[a].action_cooldown(sc.mode) {
            for w in ts.windows(2) {
                if w[1] - w[0] <= phi {
                    out.add("cooldown", Some(a), Some(w[1]), format!("actions at {} and {} are within the cooldown {phi}", w[0], w[1]));
                }
            }
        }
    }

    for (a, tr) in plan.trajectories.iter().enumerate() {
        let acted = !times[a].is_empty();
        if !(tr[1] == ABSORBING || tr[1..].contains(&target) || acted) {
            out.add("excess", Some(a), None, "agent neither leaves at t = 1, reaches the target nor acts".into());
        }
    }
    if sc.single_agent {
        let idle = plan.trajectories.iter().filter(|tr| tr[1] == ABSORBING).count();
        if idle + 1 != sc.agents.len() {
            out.add("single", None, None, format!("{} agents are active, expected exactly one", sc.agents.len() - idle));
        }
    }

    let lam = plan.knock_timeline(sc, tb);
    let mut max_live = 0;
    for t in 1..=horizon {
        for (a, tr) in plan.trajectories.iter().enumerate() {
            let v = tr[t as usize];
            if v == ABSORBING || v == target {
                continue;
            }
            let live = tb.live_detections(v, |s| lam[t as usize][s]);
            max_live = max_live.max(live);
            if knock_mode && live >= sc.omega {
                out.add("detection", Some(a), Some(t), format!("{live} live sensors cover vertex {v}"));
            }
        }
    }

    if sc.mode == Mode::MinTimeRequiredPed {
        let q = sc.required_ped.unwrap_or(0.0);
        let ped = crate::engines::ped::evaluate_ped(plan, sc, tb);
        if ped < q * (1.0 - 1e-9) {
            out.add("ped", None, None, format!("PED {ped:.6} is below the required {q}"));
        }
    }
    report(out, max_live, sc, tb, plan)
}

fn report(out: Collector, max_live: u32, sc: &Scenario, tb: &DerivedTables, plan: &Plan) -> ValidationReport {
    let shaped = plan.trajectories.len() == sc.agents.len()
        && plan.horizon == sc.horizon
        && plan.trajectories.iter().all(|t| t.len() == sc.horizon as usize + 1 && t.iter().all(|&v| v as usize <= sc.n()));
    let (ped, objective, ttt) = if shaped {
        let p = plan.clone().with_metrics(sc, tb);
        (crate::engines::ped::evaluate_ped(plan, sc, tb), p.objective.unwrap_or(0.0), p.time_to_target)
    } else {
        (0.0, 0.0, None)
    };
    ValidationReport {
        feasible: out.0.is_empty(),
        violations: out.0,
        max_simultaneous_detections: max_live,
        ped,
        objective,
        time_to_target: ttt,
    }
}
