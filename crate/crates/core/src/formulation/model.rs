//! The 0-1 integer program.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::VertexId;
use crate::scenario::{DerivedTables, Mode, Scenario};

use super::plan::Plan;
use super::reduce::ReductionMask;

/// Floor applied to probabilities before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

/// Model variables; agent and sensor indices are 0-based here and 1-based in names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X { a: u32, v: VertexId, t: u32 },
    Alpha { a: u32, v: VertexId, t: u32 },
    Lambda { s: u32, t: u32 },
    Y { s: u32, a: u32, t: u32 },
    Beta { a: u32, t: u32 },
    Z { t: u32 },
    Delta { a: u32, v: VertexId, t: u32 },
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::X { a, v, t } => write!(f, "x_{}_{v}_{t}", a + 1),
            Var::Alpha { a, v, t } => write!(f, "al_{}_{v}_{t}", a + 1),
            Var::Lambda { s, t } => write!(f, "lam_{}_{t}", s + 1),
            Var::Y { s, a, t } => write!(f, "y_{}_{}_{t}", s + 1, a + 1),
            Var::Beta { a, t } => write!(f, "b_{}_{t}", a + 1),
            Var::Z { t } => write!(f, "z_{t}"),
            Var::Delta { a, v, t } => write!(f, "d_{}_{v}_{t}", a + 1),
        }
    }
}

impl std::str::FromStr for Var {
    type Err = Error;

    fn from_str(name: &str) -> Result<Var> {
        let bad = || Error::InvalidSolution(format!("unrecognised variable name `{name}`"));
        let mut parts = name.split('_');
        let kind = parts.next().ok_or_else(bad)?;
        let nums: Vec<u32> = parts.map(|p| p.parse::<u32>().map_err(|_| bad())).collect::<Result<_>>()?;
        let one = |i: usize| -> Result<u32> { nums.get(i).copied().filter(|&n| n >= 1).map(|n| n - 1).ok_or_else(bad) };
        let raw = |i: usize| -> Result<u32> { nums.get(i).copied().ok_or_else(bad) };
        let want = |n: usize| if nums.len() == n { Ok(()) } else { Err(bad()) };
        match kind {
            "x" => want(3).and(Ok(Var::X { a: one(0)?, v: raw(1)?, t: raw(2)? })),
            "al" => want(3).and(Ok(Var::Alpha { a: one(0)?, v: raw(1)?, t: raw(2)? })),
            "lam" => want(2).and(Ok(Var::Lambda { s: one(0)?, t: raw(1)? })),
            "y" => want(3).and(Ok(Var::Y { s: one(0)?, a: one(1)?, t: raw(2)? })),
            "b" => want(2).and(Ok(Var::Beta { a: one(0)?, t: raw(1)? })),
            "z" => want(1).and(Ok(Var::Z { t: raw(0)? })),
            "d" => want(3).and(Ok(Var::Delta { a: one(0)?, v: raw(1)?, t: raw(2)? })),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
    /// Constant objective.
    Feasibility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub family: &'static str,
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub mode: Mode,
    pub vars: Vec<Var>,
    index: HashMap<Var, usize>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, f64)>,
    pub sense: ObjectiveSense,
    pub big_m: f64,
}

#[derive(Default)]
struct Expr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

struct Builder<'a> {
    sc: &'a Scenario,
    tb: &'a DerivedTables,
    mask: &'a ReductionMask,
    vars: Vec<Var>,
    index: HashMap<Var, usize>,
    constraints: Vec<Constraint>,
}

impl<'a> Builder<'a> {
    fn var(&mut self, v: Var) -> usize {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        self.vars.push(v);
        self.index.insert(v, self.vars.len() - 1);
        self.vars.len() - 1
    }

    fn lookup(&self, v: Var) -> Option<usize> {
        self.index.get(&v).copied()
    }

    /// Adds `coef * x(a, v, t)`; t = 0 values are constants and eliminated
    /// variables contribute nothing.
    fn x(&self, e: &mut Expr, coef: f64, a: usize, v: VertexId, t: u32) {
        if t == 0 {
            if self.sc.agents[a].start == v {
                e.constant += coef;
            }
        } else if let Some(i) = self.lookup(Var::X { a: a as u32, v, t }) {
            e.terms.push((i, coef));
        }
    }

    fn term(&self, e: &mut Expr, coef: f64, var: Var) {
        if let Some(i) = self.lookup(var) {
            e.terms.push((i, coef));
        }
    }

    fn push(&mut self, family: &'static str, name: String, e: Expr, sense: Sense, rhs: f64) -> Result<()> {
        let rhs = rhs - e.constant;
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, c) in e.terms {
            *merged.entry(i).or_insert(0.0) += c;
        }
        let terms: Vec<(usize, f64)> = merged.into_iter().filter(|&(_, c)| c != 0.0).collect();
        if terms.is_empty() {
            if sense.holds(0.0, rhs, 1e-9) {
                return Ok(());
            }
            return Err(Error::InfeasibleByReduction);
        }
        self.constraints.push(Constraint {
            family,
            name,
            terms,
            sense,
            rhs,
        });
        Ok(())
    }
}

fn ln(q: f64) -> f64 {
    q.max(LOG_FLOOR).ln()
}

impl Model {
    pub fn build(sc: &Scenario, tb: &DerivedTables, mask: &ReductionMask) -> Result<Model> {
        if sc.required_ped.is_some() != (sc.mode == Mode::MinTimeRequiredPed) {
            return Err(Error::Config(format!(
                "required PED {:?} does not match mode {}",
                sc.required_ped, sc.mode
            )));
        }
        sc.validate().map_err(|e| Error::Config(e.to_string()))?;
        let mut b = Builder {
            sc,
            tb,
            mask,
            vars: Vec::new(),
            index: HashMap::new(),
            constraints: Vec::new(),
        };
        let n = sc.n() as VertexId;
        let big_t = sc.horizon;
        let target = sc.target();
        let agents = sc.agents.len();
        let mode = sc.mode;

        for a in 0..agents {
            for t in 1..=big_t {
                for v in 0..=n {
                    if mask.x(a, v, t) {
                        b.var(Var::X { a: a as u32, v, t });
                    }
                }
            }
        }
        if mode.uses_knockouts() {
            for a in 0..agents {
                for t in 1..=big_t {
                    for v in 1..=n {
                        if mask.alpha(a, v, t) && mask.x(a, v, t) {
                            b.var(Var::Alpha { a: a as u32, v, t });
                        }
                    }
                }
            }
        } else {
            for a in 0..agents {
                for t in 1..=big_t {
                    if mask.beta(a, t) {
                        b.var(Var::Beta { a: a as u32, t });
                    }
                }
            }
        }

        // Movement.
        for a in 0..agents {
            let au = a as u32;
            for t in 1..=big_t {
                let mut e = Expr::default();
                for v in 0..=n {
                    b.x(&mut e, 1.0, a, v, t);
                }
                b.push("assign", format!("assign_{}_{t}", a + 1), e, Sense::Eq, 1.0)?;
            }
            for t in 0..big_t {
                for v in 1..=n {
                    if b.lookup(Var::X { a: au, v, t: t + 1 }).is_some() {
                        let mut e = Expr::default();
                        b.x(&mut e, 1.0, a, v, t + 1);
                        b.x(&mut e, -1.0, a, v, t);
                        for &k in sc.mesh.neighbors(v) {
                            b.x(&mut e, -1.0, a, k, t);
                        }
                        b.push("reach", format!("reach_{}_{v}_{t}", a + 1), e, Sense::Le, 0.0)?;
                    }
                    let here = if t == 0 { sc.agents[a].start == v } else { b.lookup(Var::X { a: au, v, t }).is_some() };
                    if here {
                        let mut e = Expr::default();
                        b.x(&mut e, 1.0, a, v, t + 1);
                        b.x(&mut e, 1.0, a, 0, t + 1);
                        for &k in sc.mesh.neighbors(v) {
                            b.x(&mut e, 1.0, a, k, t + 1);
                        }
                        b.x(&mut e, -1.0, a, v, t);
                        b.push("leave", format!("leave_{}_{v}_{t}", a + 1), e, Sense::Ge, 0.0)?;
                    }
                }
            }
            for t in 1..big_t {
                let mut e = Expr::default();
                b.x(&mut e, 1.0, a, 0, t + 1);
                b.x(&mut e, -1.0, a, 0, t);
                b.push("absorb", format!("absorb_{}_{t}", a + 1), e, Sense::Ge, 0.0)?;
            }
        }

        // Reaching the target.
        let mut e = Expr::default();
        for a in 0..agents {
            if mode.minimises_time() {
                for t in 1..=big_t {
                    b.x(&mut e, 1.0, a, target, t);
                }
            } else {
                b.x(&mut e, 1.0, a, target, big_t);
            }
        }
        b.push("target", "target".into(), e, Sense::Ge, 1.0)?;
        if mode.minimises_time() {
            for a in 0..agents {
                for t in 1..big_t {
                    let mut e = Expr::default();
                    b.x(&mut e, 1.0, a, 0, t + 1);
                    b.x(&mut e, -1.0, a, target, t);
                    b.push("finish", format!("finish_{}_{t}", a + 1), e, Sense::Ge, 0.0)?;
                }
            }
        }
        if let Some(xi) = sc.exit_target {
            let mut e = Expr::default();
            for a in 0..agents {
                for t in 1..=big_t {
                    b.x(&mut e, 1.0, a, xi, t);
                }
            }
            b.push("exit", "exit".into(), e, Sense::Ge, 1.0)?;
            for a in 0..agents {
                for t in 1..=big_t {
                    if b.lookup(Var::X { a: a as u32, v: target, t }).is_none() {
                        continue;
                    }
                    let mut e = Expr::default();
                    b.x(&mut e, 1.0, a, target, t);
                    for tau in 1..t {
                        b.x(&mut e, -1.0, a, xi, tau);
                    }
                    b.push("order", format!("order_{}_{t}", a + 1), e, Sense::Le, 0.0)?;
                }
            }
        }

        // Excess agents.
        for a in 0..agents {
            let au = a as u32;
            let mut e = Expr::default();
            b.x(&mut e, 1.0, a, 0, 1);
            for t in 1..=big_t {
                b.x(&mut e, 1.0, a, target, t);
                for v in 1..=n {
                    b.term(&mut e, 1.0, Var::Alpha { a: au, v, t });
                }
                b.term(&mut e, 1.0, Var::Beta { a: au, t });
            }
            b.push("excess", format!("excess_{}", a + 1), e, Sense::Ge, 1.0)?;
        }
        if sc.single_agent {
            let mut e = Expr::default();
            for a in 0..agents {
                b.x(&mut e, 1.0, a, 0, 1);
            }
            b.push("single", "single".into(), e, Sense::Eq, agents as f64 - 1.0)?;
        }

        let mut big_m = 1.0;
        if mode.uses_knockouts() {
            big_m = Self::knockout_rows(&mut b)?;
        } else {
            Self::confusion_rows(&mut b)?;
        }

        // Objective.
        let mut objective = Expr::default();
        let sense = match mode {
            Mode::FeasibilityAtT => ObjectiveSense::Feasibility,
            Mode::MinTime | Mode::MinTimeRequiredPed => {
                for a in 0..agents {
                    for t in 1..=big_t {
                        b.x(&mut objective, t as f64, a, target, t);
                    }
                }
                ObjectiveSense::Minimize
            }
            Mode::MaxPed => {
                objective = Self::ped_expr(&b);
                ObjectiveSense::Maximize
            }
        };
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, c) in objective.terms {
            *merged.entry(i).or_insert(0.0) += c;
        }
        Ok(Model {
            mode,
            vars: b.vars,
            index: b.index,
            constraints: b.constraints,
            objective: merged.into_iter().filter(|&(_, c)| c != 0.0).collect(),
            sense,
            big_m,
        })
    }

    fn knockout_rows(b: &mut Builder) -> Result<f64> {
        let sc = b.sc;
        let tb = b.tb;
        let n = sc.n() as VertexId;
        let big_t = sc.horizon;
        let agents = sc.agents.len();
        let any_alpha = b.vars.iter().any(|v| matches!(v, Var::Alpha { .. }));

        let costs: Vec<f64> = sc.agents.iter().map(|a| a.knockout_cost).collect();
        let big_m = if costs.iter().all(|&c| c > 0.0) {
            let min_c = costs.iter().copied().fold(f64::INFINITY, f64::min);
            (sc.budget / min_c).max(1.0)
        } else {
            sc.agents.iter().map(|a| a.knockout_duration as f64 + 1.0).sum()
        };

        for a in 0..agents {
            let au = a as u32;
            for t in 1..=big_t {
                for v in 1..=n {
                    if b.lookup(Var::Alpha { a: au, v, t }).is_some() {
                        let mut e = Expr::default();
                        b.term(&mut e, 1.0, Var::Alpha { a: au, v, t });
                        b.x(&mut e, -1.0, a, v, t);
                        b.push("ko_at", format!("ko_at_{}_{v}_{t}", a + 1), e, Sense::Le, 0.0)?;
                    }
                }
            }
        }
        if any_alpha {
            let mut e = Expr::default();
            for a in 0..agents {
                for t in 1..=big_t {
                    for v in 1..=n {
                        b.term(&mut e, costs[a], Var::Alpha { a: a as u32, v, t });
                    }
                }
            }
            b.push("budget", "budget".into(), e, Sense::Le, sc.budget)?;
        }

        // Knocked-out state.
        for s in 0..tb.n_sensors {
            for t in 1..=big_t {
                let mut window = Expr::default();
                for j in 1..=n {
                    if !tb.knockout[s][j as usize] {
                        continue;
                    }
                    for (a, agent) in sc.agents.iter().enumerate() {
                        let lo = t.saturating_sub(agent.knockout_duration).max(1);
                        for tau in lo..=t {
                            b.term(&mut window, 1.0, Var::Alpha { a: a as u32, v: j, t: tau });
                        }
                    }
                }
                if window.terms.is_empty() {
                    continue;
                }
                let lam = b.var(Var::Lambda { s: s as u32, t });
                let mut upper = Expr::default();
                upper.terms.push((lam, 1.0));
                upper.terms.extend(window.terms.iter().map(|&(i, c)| (i, -c)));
                b.push("lam_ub", format!("lam_ub_{}_{t}", s + 1), upper, Sense::Le, 0.0)?;
                let mut lower = Expr::default();
                lower.terms.push((lam, big_m));
                lower.terms.extend(window.terms.iter().map(|&(i, c)| (i, -c)));
                b.push("lam_lb", format!("lam_lb_{}_{t}", s + 1), lower, Sense::Ge, 0.0)?;
            }
        }

        // Detection by at most omega - 1 live sensors.
        for a in 0..agents {
            let au = a as u32;
            for t in 1..=big_t {
                let mut ys = Vec::new();
                for s in 0..tb.n_sensors {
                    let verts: Vec<VertexId> = tb
                        .multi_covered
                        .iter()
                        .copied()
                        .filter(|&v| tb.coverage[s][v as usize] && b.lookup(Var::X { a: au, v, t }).is_some())
                        .collect();
                    if verts.is_empty() {
                        continue;
                    }
                    let y = b.var(Var::Y { s: s as u32, a: au, t });
                    ys.push(y);
                    for v in verts {
                        let mut e = Expr::default();
                        e.terms.push((y, 1.0));
                        b.x(&mut e, -1.0, a, v, t);
                        b.term(&mut e, 1.0, Var::Lambda { s: s as u32, t });
                        b.push("detect", format!("detect_{}_{}_{v}_{t}", s + 1, a + 1), e, Sense::Ge, 0.0)?;
                    }
                }
                if !ys.is_empty() {
                    let e = Expr {
                        terms: ys.into_iter().map(|y| (y, 1.0)).collect(),
                        constant: 0.0,
                    };
                    b.push("omega", format!("omega_{}_{t}", a + 1), e, Sense::Le, sc.omega as f64 - 1.0)?;
                }
            }
        }

        for (a, agent) in sc.agents.iter().enumerate() {
            let au = a as u32;
            if let Some(phi) = agent.knockout_cooldown {
                for t in 1..=big_t.saturating_sub(phi).max(1) {
                    let mut e = Expr::default();
                    for tau in t..=(t + phi).min(big_t) {
                        for v in 1..=n {
                            b.term(&mut e, 1.0, Var::Alpha { a: au, v, t: tau });
                        }
                    }
                    if e.terms.len() > 1 {
                        b.push("cool", format!("cool_{}_{t}", a + 1), e, Sense::Le, 1.0)?;
                    }
                }
            }
            if let Some(psi) = agent.knockout_dwell {
                for t in 1..=big_t {
                    for v in 1..=n {
                        let Some(al) = b.lookup(Var::Alpha { a: au, v, t }) else { continue };
                        for tau in t..=(t + psi).min(big_t) {
                            let mut e = Expr::default();
                            b.x(&mut e, 1.0, a, v, tau);
                            b.x(&mut e, 1.0, a, 0, tau);
                            e.terms.push((al, -1.0));
                            b.push("dwell", format!("dwell_{}_{v}_{t}_{tau}", a + 1), e, Sense::Ge, 0.0)?;
                        }
                    }
                }
            }
        }
        Ok(big_m)
    }

    fn confusion_rows(b: &mut Builder) -> Result<()> {
        let sc = b.sc;
        let tb = b.tb;
        let n = sc.n() as VertexId;
        let big_t = sc.horizon;
        let agents = sc.agents.len();
        let target = sc.target();

        for t in 1..=big_t {
            let mut window = Expr::default();
            for (a, agent) in sc.agents.iter().enumerate() {
                let lo = t.saturating_sub(agent.confusion_duration).max(1);
                for tau in lo..=t {
                    b.term(&mut window, 1.0, Var::Beta { a: a as u32, t: tau });
                }
            }
            if window.terms.is_empty() {
                continue;
            }
            let z = b.var(Var::Z { t });
            let mut e = Expr::default();
            e.terms.push((z, 1.0));
            e.terms.extend(window.terms.iter().map(|&(i, c)| (i, -c)));
            b.push("conf", format!("conf_{t}"), e, Sense::Eq, 0.0)?;
        }
        let any_beta = b.vars.iter().any(|v| matches!(v, Var::Beta { .. }));
        for a in 0..agents {
            for t in 1..=big_t {
                if b.lookup(Var::Beta { a: a as u32, t }).is_some() {
                    let mut e = Expr::default();
                    b.term(&mut e, 1.0, Var::Beta { a: a as u32, t });
                    b.x(&mut e, 1.0, a, 0, t);
                    b.push("active", format!("active_{}_{t}", a + 1), e, Sense::Le, 1.0)?;
                }
            }
        }
        if any_beta {
            let mut e = Expr::default();
            for (a, agent) in sc.agents.iter().enumerate() {
                for t in 1..=big_t {
                    b.term(&mut e, agent.confusion_cost, Var::Beta { a: a as u32, t });
                }
            }
            b.push("budget", "budget".into(), e, Sense::Le, sc.budget)?;
        }
        for (a, agent) in sc.agents.iter().enumerate() {
            let au = a as u32;
            if let Some(phi) = agent.confusion_cooldown {
                for t in 1..=big_t.saturating_sub(phi).max(1) {
                    let mut e = Expr::default();
                    for tau in t..=(t + phi).min(big_t) {
                        b.term(&mut e, 1.0, Var::Beta { a: au, t: tau });
                    }
                    if e.terms.len() > 1 {
                        b.push("ccool", format!("ccool_{}_{t}", a + 1), e, Sense::Le, 1.0)?;
                    }
                }
            }
            if let Some(psi) = agent.confusion_dwell {
                for t in 1..=big_t {
                    let Some(beta) = b.lookup(Var::Beta { a: au, t }) else { continue };
                    for v in 1..=n {
                        if b.lookup(Var::X { a: au, v, t }).is_none() {
                            continue;
                        }
                        for tau in t..=(t + psi).min(big_t) {
                            let mut e = Expr::default();
                            b.x(&mut e, 1.0, a, v, tau);
                            b.x(&mut e, 1.0, a, 0, tau);
                            b.x(&mut e, -1.0, a, v, t);
                            e.terms.push((beta, -1.0));
                            b.push("cdwell", format!("cdwell_{}_{v}_{t}_{tau}", a + 1), e, Sense::Ge, -1.0)?;
                        }
                    }
                }
            }
        }

        // delta = x * z wherever confusion changes the score.
        for a in 0..agents {
            let au = a as u32;
            for t in 1..=big_t {
                let Some(z) = b.lookup(Var::Z { t }) else { continue };
                for v in 1..=n {
                    if v == target {
                        continue;
                    }
                    let Some(x) = b.lookup(Var::X { a: au, v, t }) else { continue };
                    if ln(tb.evade_confused[v as usize]) - ln(tb.evade[v as usize]) == 0.0 {
                        continue;
                    }
                    let d = b.var(Var::Delta { a: au, v, t });
                    let name = format!("{}_{v}_{t}", a + 1);
                    b.push("dlo", format!("dlo_{name}"), Expr { terms: vec![(x, 1.0), (z, 1.0), (d, -1.0)], constant: 0.0 }, Sense::Le, 1.0)?;
                    b.push("dx", format!("dx_{name}"), Expr { terms: vec![(d, 1.0), (x, -1.0)], constant: 0.0 }, Sense::Le, 0.0)?;
                    b.push("dz", format!("dz_{name}"), Expr { terms: vec![(d, 1.0), (z, -1.0)], constant: 0.0 }, Sense::Le, 0.0)?;
                }
            }
        }

        if sc.mode == Mode::MinTimeRequiredPed {
            let q_star = sc.required_ped.expect("checked above");
            for a in 0..agents {
                let au = a as u32;
                for t in 1..=big_t {
                    for v in 1..=n {
                        if !b.mask.needs_confusion[v as usize] || b.lookup(Var::X { a: au, v, t }).is_none() {
                            continue;
                        }
                        let mut e = Expr::default();
                        b.x(&mut e, 1.0, a, v, t);
                        b.term(&mut e, -1.0, Var::Z { t });
                        b.push("link", format!("link_{}_{v}_{t}", a + 1), e, Sense::Le, 0.0)?;
                    }
                }
            }
            let e = Self::ped_expr(b);
            b.push("ped_req", "ped_req".into(), e, Sense::Ge, ln(q_star))?;
        }
        Ok(())
    }

    fn ped_expr(b: &Builder) -> Expr {
        let sc = b.sc;
        let tb = b.tb;
        let mut e = Expr::default();
        for a in 0..sc.agents.len() {
            let au = a as u32;
            for t in 1..=sc.horizon {
                for v in 1..sc.n() as VertexId + 1 {
                    if v == sc.target() {
                        continue;
                    }
                    let q = ln(tb.evade[v as usize]);
                    if q != 0.0 {
                        b.x(&mut e, q, a, v, t);
                    }
                    let gain = ln(tb.evade_confused[v as usize]) - q;
                    if gain != 0.0 {
                        b.term(&mut e, gain, Var::Delta { a: au, v, t });
                    }
                }
            }
        }
        e
    }

    pub fn var_index(&self, v: Var) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Constraint counts per family, for reporting.
    pub fn family_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for c in &self.constraints {
            *m.entry(c.family).or_insert(0) += 1;
        }
        m
    }

    /// Variable counts per kind.
    pub fn kind_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for v in &self.vars {
            let k = match v {
                Var::X { .. } => "x",
                Var::Alpha { .. } => "al",
                Var::Lambda { .. } => "lam",
                Var::Y { .. } => "y",
                Var::Beta { .. } => "b",
                Var::Z { .. } => "z",
                Var::Delta { .. } => "d",
            };
            *m.entry(k).or_insert(0) += 1;
        }
        m
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(i, c)| c * values[i]).sum()
    }

    /// Names of constraints violated by `values` (tolerance 1e-6); the
    /// integrality of every value is checked too.
    pub fn check(&self, values: &[f64]) -> Vec<String> {
        let mut out = Vec::new();
        for (i, &x) in values.iter().enumerate() {
            if (x - x.round()).abs() > 1e-6 || !(-1e-6..=1.0 + 1e-6).contains(&x) {
                out.push(format!("binary {}", self.vars[i]));
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(i, k)| k * values[i]).sum();
            if !c.sense.holds(lhs, c.rhs, 1e-6) {
                out.push(c.name.clone());
            }
        }
        out
    }

    /// Encodes `plan` as a variable assignment with the minimal `λ` and `y`
    /// values the plan implies. Fails if the plan needs an eliminated variable.
    pub fn assignment_from_plan(&self, plan: &Plan, sc: &Scenario, tb: &DerivedTables) -> Result<Vec<f64>> {
        let mut values = vec![0.0; self.vars.len()];
        let set = |var: Var, values: &mut Vec<f64>| -> Result<()> {
            match self.var_index(var) {
                Some(i) => {
                    values[i] = 1.0;
                    Ok(())
                }
                None => Err(Error::InvalidSolution(format!("plan uses variable {var} which is not in the model"))),
            }
        };
        let horizon = sc.horizon;
        if plan.trajectories.len() != sc.agents.len() || plan.trajectories.iter().any(|t| t.len() != horizon as usize + 1) {
            return Err(Error::InvalidSolution("plan shape does not match the scenario".into()));
        }
        for (a, tr) in plan.trajectories.iter().enumerate() {
            for t in 1..=horizon {
                set(Var::X { a: a as u32, v: tr[t as usize], t }, &mut values)?;
            }
        }
        for k in &plan.knockouts {
            set(Var::Alpha { a: k.agent - 1, v: k.vertex, t: k.time }, &mut values)?;
        }
        for c in &plan.confusions {
            set(Var::Beta { a: c.agent - 1, t: c.time }, &mut values)?;
        }
        let z = plan.confusion_counts(sc);
        let lam = plan.knock_timeline(sc, tb);
        for t in 1..=horizon {
            if z[t as usize] > 0 {
                set(Var::Z { t }, &mut values)?;
            }
            for s in 0..tb.n_sensors {
                if lam[t as usize][s] {
                    if let Some(i) = self.var_index(Var::Lambda { s: s as u32, t }) {
                        values[i] = 1.0;
                    }
                }
            }
        }
        for (a, tr) in plan.trajectories.iter().enumerate() {
            for t in 1..=horizon {
                let v = tr[t as usize];
                for s in 0..tb.n_sensors {
                    if let Some(i) = self.var_index(Var::Y { s: s as u32, a: a as u32, t }) {
                        if tb.is_multi_covered(v) && tb.coverage[s][v as usize] && !lam[t as usize][s] {
                            values[i] = 1.0;
                        }
                    }
                }
                if z[t as usize] > 0 {
                    if let Some(i) = self.var_index(Var::Delta { a: a as u32, v, t }) {
                        values[i] = 1.0;
                    }
                }
            }
        }
        Ok(values)
    }
}
