//! Brute-force reference solver for small instances.
//!
//! Every action schedule (who acts, where and when) within the budget,
//! cooldown and overlap rules is enumerated. A fixed schedule fixes the sensor
//! timeline, after which agents no longer interact, so each agent's best path
//! is found by a plain dynamic program over (vertex, exit-seen) states with
//! its own actions as waypoints. The per-agent results are then combined
//! exhaustively.

use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{Confusion, Knockout, Plan};
use crate::mesh::{VertexId, ABSORBING};
use crate::scenario::{DerivedTables, Mode, Scenario};

use super::ped::ln_floor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_agents: usize,
    pub max_horizon: u32,
    pub max_vertices: usize,
    /// Largest number of actions the budget may pay for.
    pub max_actions: u32,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_agents: 2,
            max_horizon: 12,
            max_vertices: 80,
            max_actions: 2,
        }
    }
}

const NEG: f64 = f64::NEG_INFINITY;

/// One action: agent, time and (for knockouts) vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Action {
    agent: usize,
    time: u32,
    vertex: VertexId,
}

#[derive(Debug)]
struct AgentDp {
    /// `arrivals[t]`: best log-PED on first entering the target at `t` (min-time modes).
    arrivals: Vec<f64>,
    /// Best log-PED over all end states without entering the target (min-time
    /// modes) or over all end states (other modes).
    free_end: f64,
    /// Best log-PED ending on the target at T (non min-time modes).
    target_end: f64,
}

struct Trace {
    parent: Vec<Vec<u32>>,
    arrival_parent: Vec<u32>,
    end_values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Choice {
    Absorbed,
    Free,
    Arrive(u32),
    AtTarget,
}

struct Ctx<'a> {
    sc: &'a Scenario,
    tb: &'a DerivedTables,
    n: usize,
    terminal: bool,
}

impl Ctx<'_> {
    fn width(&self) -> usize {
        2 * (self.n + 1)
    }

    /// Runs the per-agent program. With `parents` set, also returns the
    /// predecessor table and the target-arrival predecessors.
    fn run(&self, a: usize, own: &[Action], knocked: &[u64], z: &[bool], parents: bool) -> (AgentDp, Option<Trace>) {
        let sc = self.sc;
        let tb = self.tb;
        let n = self.n;
        let w = self.width();
        let big_t = sc.horizon as usize;
        let target = sc.target();
        let xi = sc.exit_target;
        let agent = &sc.agents[a];
        let knock_mode = sc.mode.uses_knockouts();
        let dwell = agent.action_dwell(sc.mode).unwrap_or(0);

        // Time-indexed waypoint and dwell constraints. `pin[t]` fixes the
        // vertex (or the absorbing vertex during a dwell); `clash[t]` marks
        // contradictory pins, which leave only the absorbing vertex.
        let mut pin: Vec<Option<VertexId>> = vec![None; big_t + 1];
        let mut clash = vec![false; big_t + 1];
        let mut active_at = vec![false; big_t + 1];
        let mut hold = vec![false; big_t + 1];
        let mut set_pin = |t: usize, v: VertexId, pin: &mut Vec<Option<VertexId>>| match pin[t] {
            Some(p) if p != v => clash[t] = true,
            _ => pin[t] = Some(v),
        };
        for act in own {
            active_at[act.time as usize] = true;
            if knock_mode {
                set_pin(act.time as usize, act.vertex, &mut pin);
            }
        }
        for act in own {
            for tau in act.time + 1..=(act.time + dwell).min(sc.horizon) {
                hold[tau as usize] = true;
                if knock_mode {
                    set_pin(tau as usize, act.vertex, &mut pin);
                }
            }
        }
        let allowed = |t: usize, v: VertexId| -> bool {
            if v == ABSORBING {
                return !active_at[t];
            }
            if clash[t] || pin[t].is_some_and(|p| p != v) {
                return false;
            }
            if knock_mode && tb.is_multi_covered(v) {
                let live = (0..tb.n_sensors)
                    .filter(|&s| tb.coverage[s][v as usize] && knocked[t] & (1 << s) == 0)
                    .count() as u32;
                if live >= sc.omega {
                    return false;
                }
            }
            true
        };
        let gain = |t: usize, v: VertexId| -> f64 {
            if knock_mode || v == ABSORBING {
                0.0
            } else {
                let q = tb.evade_at(v, z[t]);
                if q < 1.0 {
                    ln_floor(q)
                } else {
                    0.0
                }
            }
        };

        let mut cur = vec![NEG; w];
        let mut par: Vec<Vec<u32>> = if parents { vec![vec![u32::MAX; w]; big_t + 1] } else { Vec::new() };
        let mut arr_par = if parents { vec![u32::MAX; big_t + 1] } else { Vec::new() };
        let mut arrivals = vec![NEG; big_t + 1];
        let f0 = usize::from(xi.is_none());
        cur[f0 * (n + 1) + agent.start as usize] = 0.0;
        for t in 0..big_t {
            let t1 = t + 1;
            let mut nxt = vec![NEG; w];
            for f in 0..2 {
                for u in 0..=n as VertexId {
                    let val = cur[f * (n + 1) + u as usize];
                    if val == NEG {
                        continue;
                    }
                    let from = (f * (n + 1) + u as usize) as u32;
                    let mut push = |v: VertexId, nxt: &mut Vec<f64>| {
                        let nf = if Some(v) == xi { 1 } else { f };
                        if v == target && nf == 0 {
                            return;
                        }
                        if !allowed(t1, v) {
                            return;
                        }
                        let score = val + gain(t1, v);
                        if self.terminal && v == target {
                            if score > arrivals[t1] {
                                arrivals[t1] = score;
                                if parents {
                                    arr_par[t1] = from;
                                }
                            }
                            return;
                        }
                        let k = nf * (n + 1) + v as usize;
                        if score > nxt[k] {
                            nxt[k] = score;
                            if parents {
                                par[t1][k] = from;
                            }
                        }
                    };
                    push(ABSORBING, &mut nxt);
                    if u == ABSORBING {
                        continue;
                    }
                    push(u, &mut nxt);
                    if !(hold[t1] && !knock_mode) {
                        for &v in sc.mesh.neighbors(u) {
                            push(v, &mut nxt);
                        }
                    }
                }
            }
            cur = nxt;
        }
        let free_end = cur.iter().copied().fold(NEG, f64::max);
        let target_end = if self.terminal { NEG } else { cur[n + 1 + target as usize] };
        // Arrivals are only usable if no own action comes later.
        let last = own.iter().map(|x| x.time).max().unwrap_or(0) as usize;
        for (t, v) in arrivals.iter_mut().enumerate() {
            if t < last {
                *v = NEG;
            }
        }
        let trace = parents.then(|| Trace {
            parent: par,
            arrival_parent: arr_par,
            end_values: cur,
        });
        (
            AgentDp {
                arrivals,
                free_end,
                target_end,
            },
            trace,
        )
    }

    fn path(&self, a: usize, own: &[Action], knocked: &[u64], z: &[bool], choice: Choice) -> Vec<VertexId> {
        let sc = self.sc;
        let big_t = sc.horizon as usize;
        let n1 = self.n + 1;
        let mut tr = vec![ABSORBING; big_t + 1];
        tr[0] = sc.agents[a].start;
        if choice == Choice::Absorbed {
            return tr;
        }
        let (_, trace) = self.run(a, own, knocked, z, true);
        let trace = trace.expect("parents requested");
        let (mut k, mut t) = match choice {
            Choice::Arrive(t) => {
                tr[t as usize] = sc.target();
                (trace.arrival_parent[t as usize], t as usize - 1)
            }
            Choice::AtTarget => ((n1 + sc.target() as usize) as u32, big_t),
            _ => {
                let mut best = (u32::MAX, NEG);
                for (i, &v) in trace.end_values.iter().enumerate() {
                    if v > best.1 {
                        best = (i as u32, v);
                    }
                }
                (best.0, big_t)
            }
        };
        while t > 0 {
            tr[t] = (k as usize % n1) as VertexId;
            k = trace.parent[t][k as usize];
            t -= 1;
        }
        tr
    }
}

pub fn oracle_enumerate(sc: &Scenario, tb: &DerivedTables) -> Result<Plan> {
    oracle_enumerate_with_limits(sc, tb, &OracleLimits::default())
}

pub fn oracle_enumerate_with_limits(sc: &Scenario, tb: &DerivedTables, limits: &OracleLimits) -> Result<Plan> {
    let mode = sc.mode;
    let refuse = |m: String| Err(Error::Refused(m));
    if sc.agents.len() > limits.max_agents {
        return refuse(format!("{} agents exceed the limit of {}", sc.agents.len(), limits.max_agents));
    }
    if sc.horizon > limits.max_horizon {
        return refuse(format!("horizon {} exceeds the limit of {}", sc.horizon, limits.max_horizon));
    }
    if sc.n() > limits.max_vertices {
        return refuse(format!("{} vertices exceed the limit of {}", sc.n(), limits.max_vertices));
    }
    if tb.n_sensors > 64 {
        return refuse("more than 64 sensors".into());
    }
    let affordable: Vec<f64> = sc.agents.iter().map(|a| a.action_cost(mode)).filter(|&c| c <= sc.budget).collect();
    if affordable.iter().any(|&c| c <= 0.0) {
        return refuse("zero-cost actions make the schedule space unbounded".into());
    }
    let max_actions = affordable
        .iter()
        .copied()
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.min(c))))
        .map_or(0, |c| (sc.budget / c + 1e-9).floor() as u32);
    if max_actions > limits.max_actions {
        return refuse(format!("the budget pays for {max_actions} actions, above the limit of {}", limits.max_actions));
    }

    // Candidate single actions.
    let big_t = sc.horizon;
    let mut items = Vec::new();
    for (a, agent) in sc.agents.iter().enumerate() {
        if agent.action_cost(mode) > sc.budget {
            continue;
        }
        for time in 1..=big_t {
            if mode.uses_knockouts() {
                for v in 1..=sc.n() as VertexId {
                    if tb.dist_from_start[a][v as usize] <= time && !tb.knock_sets[v as usize].is_empty() {
                        items.push(Action { agent: a, time, vertex: v });
                    }
                }
            } else {
                items.push(Action { agent: a, time, vertex: 0 });
            }
        }
    }

    let ctx = Ctx {
        sc,
        tb,
        n: sc.n(),
        terminal: mode.minimises_time(),
    };
    let mut memo: HashMap<(usize, Vec<Action>, Vec<u64>, Vec<bool>), Rc<AgentDp>> = HashMap::new();
    let mut best: Option<(f64, f64, Vec<Action>, Vec<Choice>)> = None;
    let ln_q = sc.required_ped.map(|q| ln_floor(q) - 1e-9);

    let mut chosen: Vec<usize> = Vec::new();
    // Iterative enumeration of index combinations in increasing order.
    let mut evaluate = |sched: &[Action], best: &mut Option<(f64, f64, Vec<Action>, Vec<Choice>)>| {
        let (knocked, z) = timeline(sc, tb, sched);
        let mut per_agent: Vec<Vec<(Choice, f64, f64)>> = Vec::new();
        for a in 0..sc.agents.len() {
            let own: Vec<Action> = sched.iter().copied().filter(|x| x.agent == a).collect();
            let key = (a, own.clone(), if mode.uses_knockouts() { knocked.clone() } else { Vec::new() }, if mode.uses_confusion() { z.clone() } else { Vec::new() });
            let dp = memo
                .entry(key)
                .or_insert_with(|| Rc::new(ctx.run(a, &own, &knocked, &z, false).0))
                .clone();
            let mut opts = Vec::new();
            if own.is_empty() {
                opts.push((Choice::Absorbed, 0.0, 0.0));
            } else if dp.free_end > NEG {
                opts.push((Choice::Free, 0.0, dp.free_end));
            }
            if ctx.terminal {
                for t in 1..=big_t {
                    if dp.arrivals[t as usize] > NEG {
                        opts.push((Choice::Arrive(t), t as f64, dp.arrivals[t as usize]));
                    }
                }
            } else if dp.target_end > NEG {
                opts.push((Choice::AtTarget, 0.0, dp.target_end));
            }
            if opts.is_empty() {
                return;
            }
            per_agent.push(opts);
        }
        let mut idx = vec![0usize; per_agent.len()];
        loop {
            let picks: Vec<(Choice, f64, f64)> = idx.iter().enumerate().map(|(a, &i)| per_agent[a][i]).collect();
            let arrives = picks.iter().any(|p| matches!(p.0, Choice::Arrive(_) | Choice::AtTarget));
            let active = picks.iter().filter(|p| p.0 != Choice::Absorbed).count();
            let time: f64 = picks.iter().map(|p| p.1).sum();
            let lp: f64 = picks.iter().map(|p| p.2).sum();
            let ok = arrives && (!sc.single_agent || active == 1) && ln_q.map_or(true, |q| lp >= q);
            if ok {
                let better = match best {
                    None => true,
                    Some((bt, blp, _, _)) => match mode {
                        Mode::MinTime | Mode::MinTimeRequiredPed => time < *bt,
                        Mode::MaxPed => lp > *blp + 1e-12,
                        Mode::FeasibilityAtT => false,
                    },
                };
                if better {
                    *best = Some((time, lp, sched.to_vec(), picks.iter().map(|p| p.0).collect()));
                }
            }
            let mut r = 0;
            while r < idx.len() {
                idx[r] += 1;
                if idx[r] < per_agent[r].len() {
                    break;
                }
                idx[r] = 0;
                r += 1;
            }
            if r == idx.len() {
                break;
            }
        }
    };

    // Depth-first enumeration of schedules as increasing index lists.
    fn recurse(
        sc: &Scenario,
        items: &[Action],
        from: usize,
        chosen: &mut Vec<usize>,
        spent: f64,
        left: u32,
        visit: &mut dyn FnMut(&[Action]),
    ) {
        let sched: Vec<Action> = chosen.iter().map(|&i| items[i]).collect();
        visit(&sched);
        if left == 0 {
            return;
        }
        for i in from..items.len() {
            let it = items[i];
            let agent = &sc.agents[it.agent];
            let cost = agent.action_cost(sc.mode);
            if spent + cost > sc.budget + 1e-9 {
                continue;
            }
            if !compatible(sc, &sched, it) {
                continue;
            }
            chosen.push(i);
            recurse(sc, items, i + 1, chosen, spent + cost, left - 1, visit);
            chosen.pop();
        }
    }
    recurse(sc, &items, 0, &mut chosen, 0.0, max_actions, &mut |s| evaluate(s, &mut best));

    let (_, _, sched, picks) = best.ok_or(Error::Infeasible)?;
    let (knocked, z) = timeline(sc, tb, &sched);
    let mut plan = Plan::idle(sc);
    for (a, &choice) in picks.iter().enumerate() {
        let own: Vec<Action> = sched.iter().copied().filter(|x| x.agent == a).collect();
        plan.trajectories[a] = ctx.path(a, &own, &knocked, &z, choice);
    }
    for act in &sched {
        if mode.uses_knockouts() {
            plan.knockouts.push(Knockout { agent: act.agent as u32 + 1, vertex: act.vertex, time: act.time });
        } else {
            plan.confusions.push(Confusion { agent: act.agent as u32 + 1, time: act.time });
        }
    }
    plan.knockouts.sort();
    plan.confusions.sort();
    Ok(plan.with_metrics(sc, tb))
}

/// Whether `it` can join `sched` under the per-agent and overlap rules.
fn compatible(sc: &Scenario, sched: &[Action], it: Action) -> bool {
    let mode = sc.mode;
    for o in sched {
        if o.agent == it.agent {
            if o.time == it.time {
                return false;
            }
            if let Some(phi) = sc.agents[it.agent].action_cooldown(mode) {
                if o.time.abs_diff(it.time) <= phi {
                    return false;
                }
            }
        }
        if mode.uses_confusion() {
            let (first, second) = if o.time <= it.time { (o, &it) } else { (&it, o) };
            if second.time <= first.time + sc.agents[first.agent].confusion_duration {
                return false;
            }
        }
    }
    true
}

/// Knocked-out sensor masks and confusion flags per time step.
fn timeline(sc: &Scenario, tb: &DerivedTables, sched: &[Action]) -> (Vec<u64>, Vec<bool>) {
    let big_t = sc.horizon as usize;
    let mut knocked = vec![0u64; big_t + 1];
    let mut z = vec![false; big_t + 1];
    for act in sched {
        let agent = &sc.agents[act.agent];
        if sc.mode.uses_knockouts() {
            let end = (act.time + agent.knockout_duration).min(sc.horizon);
            for t in act.time..=end {
                for &s in &tb.knock_sets[act.vertex as usize] {
                    knocked[t as usize] |= 1 << s;
                }
            }
        } else {
            let end = (act.time + agent.confusion_duration).min(sc.horizon);
            for t in act.time..=end {
                z[t as usize] = true;
            }
        }
    }
    (knocked, z)
}
