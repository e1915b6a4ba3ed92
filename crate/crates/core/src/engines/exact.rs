//! Exact solver: a layered search over the time-expanded product state.
//!
//! One agent is designated the arriver and a subset of the others helpers;
//! every remaining agent leaves for the absorbing vertex at t = 1. Helpers
//! must act at least once and may only leave for the absorbing vertex after
//! acting, and in min-time modes they never enter the target. Any optimal
//! plan can be rewritten into this shape without changing its objective, so
//! trying every (arriver, helpers) pair is exhaustive.
//!
//! States at the same time step with the same positions, flags, counters and
//! sensor timeline are merged, keeping only the Pareto front over
//! (budget spent, log-PED).

use std::collections::HashMap;
use std::time::Instant;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::formulation::{Confusion, Knockout, Plan, ReductionMask};
use crate::mesh::{VertexId, ABSORBING};
use crate::scenario::{DerivedTables, Mode, Scenario};

use super::ped::ln_floor;
use super::EngineConfig;

const ENGAGED: u8 = 1;
const EXIT_SEEN: u8 = 2;
const EPS: f64 = 1e-12;

type Small<T> = SmallVec<[T; 4]>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    pos: Small<VertexId>,
    flags: Small<u8>,
    cool: Small<u16>,
    dwell: Small<u16>,
    /// (sensor, steps the knockout still lasts after this one), sorted.
    knocked: Small<(u16, u16)>,
    confused: u16,
}

#[derive(Debug, Clone, Copy)]
struct Act {
    role: u8,
    vertex: VertexId,
}

struct Node {
    key: Key,
    spent: f64,
    logped: f64,
    parent: u32,
    acts: SmallVec<[Act; 2]>,
    alive: bool,
}

#[derive(Default)]
struct Layer {
    nodes: Vec<Node>,
    index: HashMap<Key, SmallVec<[u32; 2]>>,
}

impl Layer {
    fn insert(&mut self, node: Node) -> bool {
        let front = self.index.entry(node.key.clone()).or_default();
        for &j in front.iter() {
            let o = &self.nodes[j as usize];
            if o.spent <= node.spent + EPS && o.logped >= node.logped - EPS {
                return false;
            }
        }
        let nodes = &mut self.nodes;
        front.retain(|j| {
            let o = &mut nodes[*j as usize];
            let dominated = node.spent <= o.spent + EPS && node.logped >= o.logped - EPS;
            if dominated {
                o.alive = false;
            }
            !dominated
        });
        front.push(nodes.len() as u32);
        nodes.push(node);
        true
    }
}

struct Found {
    time: u32,
    logped: f64,
    /// Layers of `(positions, acts)` from t = 1 to `time`.
    steps: Vec<(Small<VertexId>, SmallVec<[Act; 2]>)>,
}

struct Shared<'a> {
    sc: &'a Scenario,
    tb: &'a DerivedTables,
    mask: Option<&'a ReductionMask>,
    /// Relevant sensors each vertex can knock out.
    knocks: Vec<Small<u16>>,
    dist_useful: Vec<u32>,
    dist_exit: Option<Vec<u32>>,
    exit_to_target: u32,
    ln_required: f64,
    nodes: u64,
    node_limit: u64,
    deadline: Option<Instant>,
}

impl Shared<'_> {
    fn over_limit(&self) -> Option<String> {
        if self.nodes > self.node_limit {
            return Some(format!("node limit of {} exceeded", self.node_limit));
        }
        if self.nodes % 4096 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    return Some("time limit exceeded".into());
                }
            }
        }
        None
    }

    /// Steps the arriver still needs from `v` (through the exit if not yet seen).
    fn to_go(&self, v: VertexId, flags: u8) -> u32 {
        let dn = self.tb.dist_to_target[v as usize];
        match &self.dist_exit {
            Some(dx) if flags & EXIT_SEEN == 0 => dx[v as usize].saturating_add(self.exit_to_target),
            _ => dn,
        }
    }
}

pub fn solve_exact(sc: &Scenario, tb: &DerivedTables, mask: Option<&ReductionMask>, cfg: &EngineConfig) -> Result<(Plan, u64)> {
    let mode = sc.mode;
    let n = sc.n();
    let knocks: Vec<Small<u16>> = (0..=n)
        .map(|v| tb.knock_sets[v].iter().filter(|&&s| tb.relevant[s]).map(|&s| s as u16).collect())
        .collect();
    let useful: Vec<VertexId> = (1..=n as VertexId).filter(|&v| !knocks[v as usize].is_empty()).collect();
    let dist_useful = sc.mesh.bfs(&useful, |_| true);
    let exit_to_target = sc.exit_target.map_or(0, |xi| tb.dist_to_target[xi as usize]);
    let mut sh = Shared {
        sc,
        tb,
        mask,
        knocks,
        dist_useful,
        dist_exit: tb.dist_to_exit.clone(),
        exit_to_target,
        ln_required: sc.required_ped.map_or(f64::NEG_INFINITY, |q| ln_floor(q) - 1e-9),
        nodes: 0,
        node_limit: cfg.node_limit.unwrap_or(u64::MAX),
        deadline: cfg.time_limit.map(|d| Instant::now() + d),
    };

    let a_count = sc.agents.len();
    let mut combos: Vec<(usize, Vec<usize>)> = Vec::new();
    for arriver in 0..a_count {
        let others: Vec<usize> = (0..a_count).filter(|&a| a != arriver).collect();
        for bits in 0u32..(1 << others.len()) {
            let helpers: Vec<usize> = others.iter().enumerate().filter(|(i, _)| bits & (1 << i) != 0).map(|(_, &a)| a).collect();
            if sc.single_agent && !helpers.is_empty() {
                continue;
            }
            let cost: f64 = helpers.iter().map(|&h| sc.agents[h].action_cost(mode)).sum();
            if cost > sc.budget + 1e-9 {
                continue;
            }
            combos.push((arriver, helpers));
        }
    }
    combos.sort_by_key(|(a, h)| (h.len(), *a));

    let mut best: Option<(Found, usize, Vec<usize>)> = None;
    for (arriver, helpers) in combos {
        let mut roles = vec![arriver];
        roles.extend(&helpers);
        let limit = match (&best, mode.minimises_time()) {
            (Some((f, _, _)), true) => f.time - 1,
            _ => sc.horizon,
        };
        if limit == 0 {
            break;
        }
        let incumbent = match &best {
            Some((f, _, _)) if mode == Mode::MaxPed => f.logped,
            _ => f64::NEG_INFINITY,
        };
        let outcome = search(&mut sh, &roles, limit, incumbent);
        match outcome {
            Ok(Some(found)) => {
                let better = match &best {
                    None => true,
                    Some((f, _, _)) => match mode {
                        Mode::MaxPed => found.logped > f.logped + EPS,
                        Mode::FeasibilityAtT => false,
                        _ => found.time < f.time,
                    },
                };
                if better {
                    best = Some((found, arriver, helpers));
                }
                if mode == Mode::FeasibilityAtT {
                    break;
                }
            }
            Ok(None) => {}
            Err(reason) => {
                let incumbent = best.map(|(f, a, h)| Box::new(build_plan(sc, tb, &f, a, &h)));
                return Err(Error::ResourceLimit { reason, incumbent });
            }
        }
    }
    let (found, arriver, helpers) = best.ok_or(Error::Infeasible)?;
    Ok((build_plan(sc, tb, &found, arriver, &helpers), sh.nodes))
}

fn build_plan(sc: &Scenario, tb: &DerivedTables, found: &Found, arriver: usize, helpers: &[usize]) -> Plan {
    let mut plan = Plan::idle(sc);
    let mut roles = vec![arriver];
    roles.extend_from_slice(helpers);
    for (t, (pos, acts)) in found.steps.iter().enumerate() {
        let t = t as u32 + 1;
        for (r, &a) in roles.iter().enumerate() {
            plan.trajectories[a][t as usize] = pos[r];
        }
        for act in acts {
            let a = roles[act.role as usize];
            if sc.mode.uses_knockouts() {
                plan.knockouts.push(Knockout { agent: a as u32 + 1, vertex: act.vertex, time: t });
            } else {
                plan.confusions.push(Confusion { agent: a as u32 + 1, time: t });
            }
        }
    }
    let wait = !sc.mode.minimises_time();
    for t in found.time + 1..=sc.horizon {
        for &a in &roles {
            let prev = plan.trajectories[a][t as usize - 1];
            plan.trajectories[a][t as usize] = if wait && a == arriver { prev } else { ABSORBING };
        }
    }
    plan.knockouts.sort();
    plan.confusions.sort();
    plan.with_metrics(sc, tb)
}

/// One role's candidate move: next vertex and whether it acts there.
#[derive(Clone, Copy)]
struct Move {
    next: VertexId,
    act: bool,
}

fn search(sh: &mut Shared, roles: &[usize], limit: u32, incumbent: f64) -> std::result::Result<Option<Found>, String> {
    let sc = sh.sc;
    let mode = sc.mode;
    let target = sc.target();
    let big_t = sc.horizon;
    let r_count = roles.len();

    let start = Key {
        pos: roles.iter().map(|&a| sc.agents[a].start).collect(),
        flags: std::iter::repeat(0).take(r_count).collect(),
        cool: std::iter::repeat(0).take(r_count).collect(),
        dwell: std::iter::repeat(0).take(r_count).collect(),
        knocked: SmallVec::new(),
        confused: 0,
    };
    let mut layers: Vec<Layer> = vec![Layer::default()];
    layers[0].insert(Node {
        key: start,
        spent: 0.0,
        logped: 0.0,
        parent: u32::MAX,
        acts: SmallVec::new(),
        alive: true,
    });
    let mut best: Option<(f64, u32, Key, SmallVec<[Act; 2]>)> = None;
    let mut best_ped = incumbent;

    for t in 0..limit {
        let t1 = t + 1;
        let rest = (big_t - t1) as u16;
        let mut next = Layer::default();
        for ni in 0..layers[t as usize].nodes.len() {
            let node = &layers[t as usize].nodes[ni];
            if !node.alive {
                continue;
            }
            let Some(options) = moves(sh, roles, node, t1, limit) else { continue };

            // Cartesian product over roles.
            let mut idx = vec![0usize; r_count];
            loop {
                let choice: Small<Move> = (0..r_count).map(|r| options[r][idx[r]]).collect();
                sh.nodes += 1;
                if let Some(reason) = sh.over_limit() {
                    return Err(reason);
                }
                if let Some((key, spent, logped, acts)) = expand(sh, roles, node, &choice, rest) {
                    let arrived = key.pos[0] == target;
                    let terminal = if mode.minimises_time() { arrived } else { t1 == big_t };
                    if terminal {
                        let engaged = (1..r_count).all(|r| key.flags[r] & ENGAGED != 0);
                        if arrived && engaged {
                            if mode != Mode::MaxPed {
                                return Ok(Some(trace(&layers, t1, (logped, ni as u32, key, acts))));
                            }
                            if logped > best_ped + EPS || (best.is_none() && logped >= best_ped - EPS) {
                                best_ped = best_ped.max(logped);
                                best = Some((logped, ni as u32, key, acts));
                            }
                        }
                    } else if !(mode == Mode::MaxPed && logped < best_ped - EPS) {
                        next.insert(Node {
                            key,
                            spent,
                            logped,
                            parent: ni as u32,
                            acts,
                            alive: true,
                        });
                    }
                }
                // Advance the odometer.
                let mut r = 0;
                while r < r_count {
                    idx[r] += 1;
                    if idx[r] < options[r].len() {
                        break;
                    }
                    idx[r] = 0;
                    r += 1;
                }
                if r == r_count {
                    break;
                }
            }
        }
        if next.nodes.is_empty() {
            break;
        }
        layers.push(next);
    }
    Ok(best.map(|b| trace(&layers, big_t, b)))
}

/// Candidate moves per role, or `None` if some role has none.
fn moves(sh: &Shared, roles: &[usize], node: &Node, t1: u32, limit: u32) -> Option<Vec<Small<Move>>> {
    let sc = sh.sc;
    let mode = sc.mode;
    let knock_mode = mode.uses_knockouts();
    let target = sc.target();
    let mut options: Vec<Small<Move>> = Vec::with_capacity(roles.len());
    for (r, &a) in roles.iter().enumerate() {
        let agent = &sc.agents[a];
        let v = node.key.pos[r];
        let flags = node.key.flags[r];
        let mut opts = Small::new();
        if v == ABSORBING {
            opts.push(Move { next: ABSORBING, act: false });
            options.push(opts);
            continue;
        }
        let helper = r > 0;
        let engaged = flags & ENGAGED != 0;
        let mut cands: Small<VertexId> = Small::new();
        cands.push(v);
        if node.key.dwell[r] == 0 {
            cands.extend(sc.mesh.neighbors(v).iter().copied());
        }
        for &u in &cands {
            if u == target && ((helper && mode.minimises_time()) || (sc.exit_target.is_some() && flags & EXIT_SEEN == 0)) {
                continue;
            }
            if sh.mask.is_some_and(|m| !m.x(a, u, t1)) {
                continue;
            }
            let nflags = if Some(u) == sc.exit_target { flags | EXIT_SEEN } else { flags };
            if !helper && t1.saturating_add(sh.to_go(u, nflags)) > limit {
                continue;
            }
            if helper && !engaged {
                let reach = if knock_mode { sh.dist_useful[u as usize] } else { 0 };
                if t1.saturating_add(reach) > limit {
                    continue;
                }
            }
            opts.push(Move { next: u, act: false });
            let can_act = node.key.cool[r] == 0
                && agent.action_cost(mode) <= sc.budget - node.spent + 1e-9
                && if knock_mode {
                    !sh.knocks[u as usize].is_empty() && sh.mask.map_or(true, |m| m.alpha(a, u, t1))
                } else {
                    sh.mask.map_or(true, |m| m.beta(a, t1))
                };
            if can_act {
                opts.push(Move { next: u, act: true });
            }
        }
        if helper && engaged {
            opts.push(Move { next: ABSORBING, act: false });
        }
        if opts.is_empty() {
            return None;
        }
        options.push(opts);
    }
    Some(options)
}

/// Applies one joint move; returns the child state or `None` if it breaks a rule.
#[allow(clippy::type_complexity)]
fn expand(sh: &Shared, roles: &[usize], node: &Node, choice: &[Move], rest: u16) -> Option<(Key, f64, f64, SmallVec<[Act; 2]>)> {
    let sc = sh.sc;
    let tb = sh.tb;
    let mode = sc.mode;
    let knock_mode = mode.uses_knockouts();
    let mut spent = node.spent;
    let mut acts: SmallVec<[Act; 2]> = SmallVec::new();
    for (r, m) in choice.iter().enumerate() {
        if m.act {
            spent += sc.agents[roles[r]].action_cost(mode);
            acts.push(Act { role: r as u8, vertex: m.next });
        }
    }
    if spent > sc.budget + 1e-9 {
        return None;
    }

    // Sensor timeline at t1.
    let mut knocked: Small<(u16, u16)> = Small::new();
    let mut active_now: Small<(u16, u16)> = node.key.knocked.iter().map(|&(s, r)| (s, r - 1)).collect();
    let mut z_now = node.key.confused >= 1;
    let mut confused = node.key.confused.saturating_sub(1);
    if knock_mode {
        let before = active_now.clone();
        for act in &acts {
            let dur = (sc.agents[roles[act.role as usize]].knockout_duration as u16).min(rest);
            // Skip actions that cannot change the timeline.
            let others = acts.iter().filter(|o| o.role != act.role);
            let mut useful = false;
            for &s in &sh.knocks[act.vertex as usize] {
                let existing = before.iter().find(|e| e.0 == s).map_or(-1, |e| e.1 as i32);
                let from_others = others
                    .clone()
                    .filter(|o| sh.knocks[o.vertex as usize].contains(&s))
                    .map(|o| (sc.agents[roles[o.role as usize]].knockout_duration as u16).min(rest) as i32)
                    .max()
                    .unwrap_or(-1);
                if existing.max(from_others) < dur as i32 {
                    useful = true;
                }
                match active_now.iter_mut().find(|e| e.0 == s) {
                    Some(e) => e.1 = e.1.max(dur),
                    None => active_now.push((s, dur)),
                }
            }
            if !useful {
                return None;
            }
        }
        for m in choice {
            let v = m.next;
            if v == ABSORBING || !tb.is_multi_covered(v) {
                continue;
            }
            let live = (0..tb.n_sensors)
                .filter(|&s| tb.coverage[s][v as usize] && !active_now.iter().any(|e| e.0 as usize == s))
                .count() as u32;
            if live >= sc.omega {
                return None;
            }
        }
        active_now.sort_unstable();
        knocked.extend(active_now.into_iter().filter(|e| e.1 >= 1));
    } else if !acts.is_empty() {
        if acts.len() > 1 || z_now {
            return None;
        }
        let dur = (sc.agents[roles[acts[0].role as usize]].confusion_duration as u16).min(rest);
        z_now = true;
        confused = dur;
    }

    let mut logped = node.logped;
    if mode.uses_confusion() {
        for m in choice {
            if m.next != ABSORBING {
                let q = tb.evade_at(m.next, z_now);
                if q < 1.0 {
                    logped += ln_floor(q);
                }
            }
        }
        if mode == Mode::MinTimeRequiredPed && logped < sh.ln_required {
            return None;
        }
    }

    let mut key = Key {
        pos: choice.iter().map(|m| m.next).collect(),
        flags: Small::new(),
        cool: Small::new(),
        dwell: Small::new(),
        knocked,
        confused,
    };
    for (r, m) in choice.iter().enumerate() {
        let agent = &sc.agents[roles[r]];
        let mut f = node.key.flags[r];
        if Some(m.next) == sc.exit_target {
            f |= EXIT_SEEN;
        }
        let mut c = node.key.cool[r].saturating_sub(1);
        let mut d = node.key.dwell[r].saturating_sub(1);
        if m.act {
            f |= ENGAGED;
            c = agent.action_cooldown(mode).map_or(0, |p| p.min(u16::MAX as u32) as u16);
            d = d.max(agent.action_dwell(mode).map_or(0, |p| p.min(u16::MAX as u32) as u16));
        }
        if m.next == ABSORBING {
            d = 0;
            c = 0;
        }
        key.flags.push(f);
        key.cool.push(c.min(rest));
        key.dwell.push(d.min(rest));
    }
    Some((key, spent, logped, acts))
}

fn trace(layers: &[Layer], t_end: u32, best: (f64, u32, Key, SmallVec<[Act; 2]>)) -> Found {
    let (logped, mut parent, key, acts) = best;
    let mut steps = vec![(key.pos.clone(), acts)];
    let mut t = t_end as usize - 1;
    while t > 0 {
        let node = &layers[t].nodes[parent as usize];
        steps.push((node.key.pos.clone(), node.acts.clone()));
        parent = node.parent;
        t -= 1;
    }
    steps.reverse();
    Found {
        time: t_end,
        logped,
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{validate_plan, ReductionPolicy};
    use crate::scenario::{cases, io};

    fn run(sc: &Scenario, reduce: bool) -> Plan {
        let tb = sc.derive_tables();
        let mask = reduce.then(|| ReductionMask::compute(sc, &tb, ReductionPolicy::Safe).unwrap());
        let (plan, _) = solve_exact(sc, &tb, mask.as_ref(), &EngineConfig::default()).unwrap();
        let report = validate_plan(sc, &tb, &plan);
        assert!(report.feasible, "{:?}", report.violations);
        plan
    }

    #[test]
    fn example_knockout_optimum() {
        let sc = cases::apply_case(&io::example(), 1, None).unwrap();
        let plan = run(&sc, true);
        assert_eq!(plan.time_to_target, Some(9));
        assert_eq!(plan.knockouts.len(), 1);
        let tb = sc.derive_tables();
        assert!(tb.knock_sets[plan.knockouts[0].vertex as usize].len() >= 2);
        assert_eq!(run(&sc, false).time_to_target, Some(9));
    }

    #[test]
    fn without_budget_matches_b0() {
        let sc = io::example();
        assert_eq!(run(&sc, false).time_to_target, Some(10));
    }

    #[test]
    fn example_max_ped() {
        let sc = cases::apply_case(&io::example(), 3, Some(10)).unwrap();
        assert!((run(&sc, true).ped.unwrap() - 1.0).abs() < 1e-9);
        let sc = cases::apply_case(&io::example(), 3, Some(9)).unwrap();
        assert!(run(&sc, true).ped.unwrap() < 0.01);
    }

    #[test]
    fn one_confusion() {
        let mut sc = cases::apply_case(&io::example(), 4, Some(9)).unwrap();
        sc.budget = 1.0;
        let ped = run(&sc, true).ped.unwrap();
        assert!((0.93..=0.97).contains(&ped), "{ped}");
    }
}
