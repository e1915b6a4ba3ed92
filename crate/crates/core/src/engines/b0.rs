//! Plans without any actions: a sensor-avoiding BFS for knockout modes and a
//! best-PED dynamic program for confusion modes.

use crate::error::{Error, Result};
use crate::formulation::Plan;
use crate::mesh::{VertexId, ABSORBING};
use crate::scenario::{DerivedTables, Mode, Scenario};

use super::ped::ln_floor;

/// Shortest path from `from` through the exit (if any) to the target that
/// keeps out of `blocked` vertices, or `None`.
pub fn avoiding_path(sc: &Scenario, from: VertexId, blocked: impl Fn(VertexId) -> bool) -> Option<Vec<VertexId>> {
    let target = sc.target();
    match sc.exit_target {
        Some(xi) => {
            let mut first = sc.mesh.shortest_path(from, xi, |v| v != target && !blocked(v))?;
            let second = sc.mesh.shortest_path(xi, target, |v| !blocked(v))?;
            first.extend_from_slice(&second[1..]);
            Some(first)
        }
        None => sc.mesh.shortest_path(from, target, |v| !blocked(v)),
    }
}

/// Lays a path from the start onto a full trajectory: after reaching the
/// target the agent leaves for the absorbing vertex in min-time modes and
/// waits otherwise.
pub fn trajectory_from_path(sc: &Scenario, path: &[VertexId]) -> Vec<VertexId> {
    let t = sc.horizon as usize;
    let mut tr = Vec::with_capacity(t + 1);
    tr.extend_from_slice(&path[..path.len().min(t + 1)]);
    let fill = if sc.mode.minimises_time() { ABSORBING } else { *tr.last().expect("non-empty path") };
    while tr.len() < t + 1 {
        tr.push(fill);
    }
    tr
}

fn assemble(sc: &Scenario, tb: &DerivedTables, agent: usize, tr: Vec<VertexId>) -> Plan {
    let mut plan = Plan::idle(sc);
    plan.trajectories[agent] = tr;
    plan.with_metrics(sc, tb)
}

pub fn solve_b0(sc: &Scenario, tb: &DerivedTables) -> Result<Plan> {
    match sc.mode {
        Mode::MinTime | Mode::FeasibilityAtT => {
            let mut best: Option<(usize, Vec<VertexId>)> = None;
            for (a, agent) in sc.agents.iter().enumerate() {
                let Some(p) = avoiding_path(sc, agent.start, |v| tb.is_multi_covered(v)) else { continue };
                if p.len() - 1 <= sc.horizon as usize && best.as_ref().map_or(true, |(_, b)| p.len() < b.len()) {
                    best = Some((a, p));
                }
            }
            let (a, p) = best.ok_or(Error::Infeasible)?;
            Ok(assemble(sc, tb, a, trajectory_from_path(sc, &p)))
        }
        Mode::MaxPed | Mode::MinTimeRequiredPed => {
            let mut best: Option<(u32, f64, usize, Vec<VertexId>)> = None;
            for a in 0..sc.agents.len() {
                let dp = PedDp::run(sc, tb, a);
                let pick = if sc.mode == Mode::MaxPed {
                    dp.best_at(sc.target(), sc.horizon).map(|lp| (sc.horizon, lp))
                } else {
                    let q = ln_floor(sc.required_ped.unwrap_or(0.0)) - 1e-9;
                    (1..=sc.horizon).find_map(|t| dp.arrival(t).filter(|&lp| lp >= q).map(|lp| (t, lp)))
                };
                let Some((t, lp)) = pick else { continue };
                let better = match &best {
                    None => true,
                    Some((_, blp, _, _)) if sc.mode == Mode::MaxPed => lp > *blp,
                    Some((bt, _, _, _)) => t < *bt,
                };
                if better {
                    best = Some((t, lp, a, dp.trace(sc, t)));
                }
            }
            let (_, _, a, tr) = best.ok_or(Error::Infeasible)?;
            Ok(assemble(sc, tb, a, tr))
        }
    }
}

/// Best log-PED over single-agent paths without actions, with the exit flag
/// in the state. In min-time modes the target is terminal: entering it is an
/// arrival and the agent is then absorbed.
pub(crate) struct PedDp {
    n: usize,
    /// `value[t][f * (n + 1) + v]`
    value: Vec<Vec<f64>>,
    parent: Vec<Vec<u32>>,
    /// Best log-PED on first reaching the target at `t`, with its predecessor.
    arrivals: Vec<Option<(f64, u32)>>,
    start: VertexId,
}

const NONE: u32 = u32::MAX;

impl PedDp {
    pub(crate) fn run(sc: &Scenario, tb: &DerivedTables, agent: usize) -> PedDp {
        let n = sc.n();
        let width = 2 * (n + 1);
        let big_t = sc.horizon as usize;
        let target = sc.target();
        let terminal = sc.mode.minimises_time();
        let xi = sc.exit_target;
        let start = sc.agents[agent].start;
        let mut value = vec![vec![f64::NEG_INFINITY; width]; big_t + 1];
        let mut parent = vec![vec![NONE; width]; big_t + 1];
        let mut arrivals = vec![None; big_t + 1];
        let f0 = usize::from(xi.is_none());
        value[0][f0 * (n + 1) + start as usize] = 0.0;
        for t in 0..big_t {
            for f in 0..2 {
                for u in 1..=n as VertexId {
                    let cur = value[t][f * (n + 1) + u as usize];
                    if cur == f64::NEG_INFINITY || (terminal && u == target && t > 0) {
                        continue;
                    }
                    let nbrs = sc.mesh.neighbors(u);
                    for &v in std::iter::once(&u).chain(nbrs.iter()) {
                        let nf = if Some(v) == xi { 1 } else { f };
                        if v == target && nf == 0 {
                            continue;
                        }
                        let score = cur + ln_floor(tb.evade_at(v, false));
                        if terminal && v == target {
                            let slot = &mut arrivals[t + 1];
                            if slot.map_or(true, |(s, _)| score > s) {
                                *slot = Some((score, (f * (n + 1) + u as usize) as u32));
                            }
                            continue;
                        }
                        let k = nf * (n + 1) + v as usize;
                        if score > value[t + 1][k] {
                            value[t + 1][k] = score;
                            parent[t + 1][k] = (f * (n + 1) + u as usize) as u32;
                        }
                    }
                }
            }
        }
        PedDp { n, value, parent, arrivals, start }
    }

    pub(crate) fn best_at(&self, v: VertexId, t: u32) -> Option<f64> {
        let s = self.value[t as usize][self.n + 1 + v as usize];
        (s > f64::NEG_INFINITY).then_some(s)
    }

    pub(crate) fn arrival(&self, t: u32) -> Option<f64> {
        self.arrivals[t as usize].map(|(s, _)| s)
    }

    /// Trajectory ending at the target at `t`, padded to the horizon.
    pub(crate) fn trace(&self, sc: &Scenario, t: u32) -> Vec<VertexId> {
        let w = self.n + 1;
        let target = sc.target();
        let mut rev = vec![target];
        let mut k = if sc.mode.minimises_time() {
            self.arrivals[t as usize].expect("arrival exists").1
        } else {
            (w + target as usize) as u32
        };
        let mut tt = t as usize;
        if !sc.mode.minimises_time() {
            k = self.parent[tt][k as usize];
        }
        tt -= 1;
        while tt > 0 {
            rev.push((k as usize % w) as VertexId);
            k = self.parent[tt][k as usize];
            tt -= 1;
        }
        rev.push(self.start);
        rev.reverse();
        trajectory_from_path(sc, &rev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::validate_plan;
    use crate::scenario::{cases, io};

    #[test]
    fn example_avoiding_path() {
        let sc = io::example();
        let tb = sc.derive_tables();
        let plan = solve_b0(&sc, &tb).unwrap();
        assert_eq!(plan.time_to_target, Some(10));
        assert!(validate_plan(&sc, &tb, &plan).feasible);
    }

    #[test]
    fn no_sensors_is_plain_distance() {
        let mut sc = io::example();
        sc.sensors.clear();
        let tb = sc.derive_tables();
        let plan = solve_b0(&sc, &tb).unwrap();
        assert_eq!(plan.time_to_target, tb.min_start_distance(sc.target()));
    }

    #[test]
    fn max_ped_without_confusion() {
        let sc = cases::apply_case(&io::example(), 3, Some(10)).unwrap();
        let tb = sc.derive_tables();
        let plan = solve_b0(&sc, &tb).unwrap();
        assert!((plan.ped.unwrap() - 1.0).abs() < 1e-9);
        assert!(validate_plan(&sc, &tb, &plan).feasible);
    }
}
