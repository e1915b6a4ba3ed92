//! Reading solver output back into a plan.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::ABSORBING;
use crate::scenario::{DerivedTables, Scenario};

use super::model::{Model, Var};
use super::plan::{Confusion, Knockout, Plan};

const TOL: f64 = 1e-6;

/// Parses `name value` lines into a value vector indexed like `model.vars`.
/// Blank lines and lines starting with `#` are skipped; variables that are
/// not listed are zero.
pub fn parse_solution(model: &Model, text: &str) -> Result<Vec<f64>> {
    let mut values = vec![0.0; model.num_vars()];
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::InvalidSolution(format!("line {}: expected `name value`", k + 1)));
        };
        let var: Var = name.parse()?;
        let idx = model
            .var_index(var)
            .ok_or_else(|| Error::InvalidSolution(format!("line {}: `{name}` is not a model variable", k + 1)))?;
        let v: f64 = value
            .parse()
            .map_err(|_| Error::InvalidSolution(format!("line {}: bad value `{value}`", k + 1)))?;
        values[idx] = if v.abs() <= TOL {
            0.0
        } else if (v - 1.0).abs() <= TOL {
            1.0
        } else {
            return Err(Error::InvalidSolution(format!("line {}: `{name}` = {v} is not binary", k + 1)));
        };
    }
    Ok(values)
}

/// Decodes an assignment into a plan with metrics filled in.
pub fn plan_from_values(model: &Model, sc: &Scenario, tb: &DerivedTables, values: &[f64]) -> Result<Plan> {
    let horizon = sc.horizon;
    let agents = sc.agents.len();
    let mut pos: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut knockouts = Vec::new();
    let mut confusions = Vec::new();
    for (i, var) in model.vars.iter().enumerate() {
        if values[i] < 0.5 {
            continue;
        }
        match *var {
            Var::X { a, v, t } => pos.entry((a, t)).or_default().push(v),
            Var::Alpha { a, v, t } => knockouts.push(Knockout { agent: a + 1, vertex: v, time: t }),
            Var::Beta { a, t } => confusions.push(Confusion { agent: a + 1, time: t }),
            _ => {}
        }
    }
    let mut trajectories = Vec::with_capacity(agents);
    for (a, agent) in sc.agents.iter().enumerate() {
        let mut tr = vec![ABSORBING; horizon as usize + 1];
        tr[0] = agent.start;
        for t in 1..=horizon {
            match pos.get(&(a as u32, t)).map(Vec::as_slice) {
                Some([v]) => tr[t as usize] = *v,
                Some(many) => {
                    return Err(Error::InvalidSolution(format!(
                        "agent {} occupies {} vertices at t = {t}",
                        a + 1,
                        many.len()
                    )))
                }
                None => return Err(Error::InvalidSolution(format!("agent {} has no position at t = {t}", a + 1))),
            }
        }
        trajectories.push(tr);
    }
    knockouts.sort();
    confusions.sort();
    let mut plan = Plan::new(horizon, trajectories);
    plan.knockouts = knockouts;
    plan.confusions = confusions;
    Ok(plan.with_metrics(sc, tb))
}

pub fn import_solution(model: &Model, sc: &Scenario, tb: &DerivedTables, text: &str) -> Result<Plan> {
    let values = parse_solution(model, text)?;
    plan_from_values(model, sc, tb, &values)
}

/// Writes the assignment in the same `name value` format, non-zero values only.
pub fn format_solution(model: &Model, values: &[f64]) -> String {
    let mut out = String::new();
    for (i, var) in model.vars.iter().enumerate() {
        if values[i] > 0.5 {
            out.push_str(&format!("{var} 1\n"));
        }
    }
    out
}
