//! Successive shortest paths.
//!
//! For each agent: take the shortest path to the target, try every placement
//! of actions along it (fewest actions first, then earliest), and if none
//! works delete the path vertex covered by the most sensors and repeat.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::engines::b0::avoiding_path;
use crate::engines::EngineConfig;
use crate::error::{Error, Result};
use crate::formulation::{validate_plan, Confusion, Knockout, Plan};
use crate::mesh::{VertexId, ABSORBING};
use crate::scenario::{DerivedTables, Mode, Scenario};

/// Max-PED runs stop after this many iterations without improvement.
const PATIENCE: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub iteration: u32,
    pub path: Vec<VertexId>,
    /// Vertex removed after this iteration, if any.
    pub deleted: Option<VertexId>,
    pub combos_tried: u64,
    pub best_objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    /// 1-based agent id.
    pub agent: u32,
    pub iterations: Vec<Iteration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicTrace {
    pub agents: Vec<AgentTrace>,
    pub chosen_agent: Option<u32>,
    pub truncated: bool,
}

/// Lays `path` out in time with actions at the given path indices; each
/// action is followed by the agent's dwell time at that vertex.
fn schedule(sc: &Scenario, agent: usize, path: &[VertexId], at: &[usize]) -> Option<Plan> {
    let mode = sc.mode;
    let a = &sc.agents[agent];
    let dwell = a.action_dwell(mode).unwrap_or(0) as usize;
    let horizon = sc.horizon as usize;
    let mut tr = vec![path[0]];
    let mut times = Vec::with_capacity(at.len());
    for (i, &v) in path.iter().enumerate().skip(1) {
        tr.push(v);
        if at.contains(&i) {
            times.push((tr.len() - 1) as u32);
            for _ in 0..dwell {
                tr.push(v);
            }
        }
    }
    if tr.len() > horizon + 1 {
        return None;
    }
    let fill = if mode.minimises_time() { ABSORBING } else { *path.last().unwrap() };
    tr.resize(horizon + 1, fill);
    let mut plan = Plan::idle(sc);
    plan.trajectories[agent] = tr;
    for (&i, &t) in at.iter().zip(&times) {
        if mode.uses_knockouts() {
            plan.knockouts.push(Knockout { agent: agent as u32 + 1, vertex: path[i], time: t });
        } else {
            plan.confusions.push(Confusion { agent: agent as u32 + 1, time: t });
        }
    }
    Some(plan)
}

/// Calls `f` on each increasing index list of length 0..=`max_k` over
/// `0..n`, shortest first; stops when `f` returns false.
fn combinations(n: usize, max_k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    for k in 0..=max_k.min(n) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if !f(&idx) {
                return;
            }
            // Next combination in lexicographic order.
            let mut i = k;
            while i > 0 && idx[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
}

fn better(mode: Mode, a: &Plan, b: &Plan) -> bool {
    match mode {
        Mode::MaxPed => a.ped.unwrap_or(0.0) > b.ped.unwrap_or(0.0) + 1e-12,
        Mode::FeasibilityAtT => false,
        _ => a.objective.unwrap_or(f64::INFINITY) < b.objective.unwrap_or(f64::INFINITY),
    }
}

pub fn solve_heuristic(sc: &Scenario, tb: &DerivedTables, cfg: &EngineConfig) -> Result<(Plan, HeuristicTrace)> {
    let mode = sc.mode;
    let mut trace = HeuristicTrace {
        agents: Vec::new(),
        chosen_agent: None,
        truncated: false,
    };
    let mut best: Option<(usize, Plan)> = None;

    for (a, agent) in sc.agents.iter().enumerate() {
        let cost = agent.action_cost(mode);
        let max_k = if cost > sc.budget {
            0
        } else if cost > 0.0 {
            (sc.budget / cost + 1e-9).floor() as usize
        } else {
            usize::MAX
        };
        let mut deleted: HashSet<VertexId> = HashSet::new();
        let mut at_trace = AgentTrace {
            agent: a as u32 + 1,
            iterations: Vec::new(),
        };
        let mut agent_best: Option<Plan> = None;
        let mut stale = 0;
        for iteration in 1..=sc.n() as u32 {
            let Some(path) = avoiding_path(sc, agent.start, |v| deleted.contains(&v)) else { break };
            if path.len() - 1 > sc.horizon as usize {
                break;
            }
            let candidates: Vec<usize> = (1..path.len() - 1)
                .filter(|&i| !mode.uses_knockouts() || !tb.knock_sets[path[i] as usize].is_empty())
                .collect();
            let mut tried = 0u64;
            let mut found: Option<Plan> = None;
            let mut truncated = false;
            combinations(candidates.len(), max_k, |pick| {
                if tried as usize >= cfg.combo_cap {
                    truncated = true;
                    return false;
                }
                tried += 1;
                let at: Vec<usize> = pick.iter().map(|&i| candidates[i]).collect();
                let Some(plan) = schedule(sc, a, &path, &at) else { return true };
                if !validate_plan(sc, tb, &plan).feasible {
                    return true;
                }
                let plan = plan.with_metrics(sc, tb);
                if mode != Mode::MaxPed {
                    found = Some(plan);
                    return false;
                }
                if found.as_ref().map_or(true, |f| better(mode, &plan, f)) {
                    found = Some(plan);
                }
                true
            });
            trace.truncated |= truncated;
            let objective = found.as_ref().and_then(|p| p.objective);
            let mut record = Iteration {
                iteration,
                path: path.clone(),
                deleted: None,
                combos_tried: tried,
                best_objective: objective,
            };
            if let Some(plan) = found {
                let improved = agent_best.as_ref().map_or(true, |b| better(mode, &plan, b));
                if improved {
                    agent_best = Some(plan);
                }
                if mode != Mode::MaxPed {
                    at_trace.iterations.push(record);
                    break;
                }
                stale = if improved { 0 } else { stale + 1 };
                if stale >= PATIENCE || agent_best.as_ref().and_then(|p| p.ped).is_some_and(|p| p >= 1.0) {
                    at_trace.iterations.push(record);
                    break;
                }
            } else if mode == Mode::MaxPed && agent_best.is_some() {
                stale += 1;
                if stale >= PATIENCE {
                    at_trace.iterations.push(record);
                    break;
                }
            }
            // Remove the most covered interior vertex (not the exit).
            let victim = path[1..path.len() - 1]
                .iter()
                .copied()
                .filter(|&v| Some(v) != sc.exit_target)
                .max_by(|&u, &v| {
                    let key = |x: VertexId| (tb.cover_count[x as usize], -tb.evade[x as usize]);
                    let (ku, kv) = (key(u), key(v));
                    ku.0.cmp(&kv.0)
                        .then(ku.1.partial_cmp(&kv.1).unwrap_or(std::cmp::Ordering::Equal))
                        .then(v.cmp(&u))
                });
            record.deleted = victim;
            at_trace.iterations.push(record);
            match victim {
                Some(v) if tb.cover_count[v as usize] > 0 || mode.uses_knockouts() => {
                    deleted.insert(v);
                }
                _ => break,
            }
        }
        trace.agents.push(at_trace);
        if let Some(plan) = agent_best {
            let take = match &best {
                None => true,
                Some((_, b)) => better(mode, &plan, b),
            };
            if take {
                best = Some((a, plan));
            }
        }
    }
    let (a, plan) = best.ok_or(Error::HeuristicInfeasible)?;
    trace.chosen_agent = Some(a as u32 + 1);
    Ok((plan, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{cases, io};

    #[test]
    fn combination_order() {
        let mut seen = Vec::new();
        combinations(3, 2, |c| {
            seen.push(c.to_vec());
            true
        });
        assert_eq!(seen, vec![vec![], vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn example_by_deletion() {
        let sc = io::example();
        let tb = sc.derive_tables();
        let (plan, trace) = solve_heuristic(&sc, &tb, &EngineConfig::default()).unwrap();
        assert_eq!(plan.time_to_target, Some(10));
        for at in &trace.agents {
            for w in at.iterations.windows(2) {
                let d = w[0].deleted.unwrap();
                assert!(w[0].path.contains(&d));
                assert!(!w[1].path.contains(&d));
                let top = w[0].path[1..w[0].path.len() - 1].iter().map(|&v| tb.cover_count[v as usize]).max().unwrap();
                assert_eq!(tb.cover_count[d as usize], top);
            }
        }
    }

    #[test]
    fn one_knockout_bounds() {
        let sc = cases::apply_case(&io::example(), 1, None).unwrap();
        let tb = sc.derive_tables();
        let (plan, _) = solve_heuristic(&sc, &tb, &EngineConfig::default()).unwrap();
        let t = plan.time_to_target.unwrap();
        assert!((9..=10).contains(&t));
        assert!(validate_plan(&sc, &tb, &plan).feasible);
    }
}
