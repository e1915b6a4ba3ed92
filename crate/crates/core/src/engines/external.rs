//! Bridge to an external MIP solver through files.
//!
//! The command is run as `cmd <model.lp> <solution.txt>`; it must exit with
//! status 0 and leave `name value` lines in the solution file.

use std::process::{Command, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

use crate::error::{Error, Result};
use crate::formulation::{export_lp, parse_solution, plan_from_values, validate_plan, Model, Plan, ReductionMask, Var};
use crate::scenario::{DerivedTables, Scenario};

/// Sets the detection indicators to their tightest values so that solvers
/// that leave slack `y` at 1 do not produce spurious violations.
fn tighten_y(model: &Model, values: &mut [f64]) {
    for (i, var) in model.vars.iter().enumerate() {
        if matches!(var, Var::Y { .. }) {
            values[i] = 0.0;
        }
    }
    for c in model.constraints.iter().filter(|c| c.family == "detect") {
        let lhs: f64 = c.terms.iter().map(|&(i, k)| k * values[i]).sum();
        if lhs < c.rhs - 1e-9 {
            if let Some(&(i, _)) = c.terms.iter().find(|&&(i, _)| matches!(model.vars[i], Var::Y { .. })) {
                values[i] = 1.0;
            }
        }
    }
}

pub fn solve_external(sc: &Scenario, tb: &DerivedTables, mask: &ReductionMask, cmd: &str, timeout: Duration) -> Result<Plan> {
    let model = Model::build(sc, tb, mask)?;
    let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let lp_path = dir.path().join("model.lp");
    let sol_path = dir.path().join("solution.txt");
    std::fs::write(&lp_path, export_lp(&model)).map_err(|e| Error::io(&lp_path, e))?;

    let mut parts = cmd.split_whitespace();
    let program = parts.next().ok_or_else(|| Error::Config("empty solver command".into()))?;
    let mut child = Command::new(program)
        .args(parts)
        .arg(&lp_path)
        .arg(&sol_path)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::ExternalSolver(format!("could not start `{program}`: {e}")))?;
    let status = match child.wait_timeout(timeout).map_err(|e| Error::ExternalSolver(e.to_string()))? {
        Some(s) => s,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::ExternalSolver(format!("solver timed out after {} s", timeout.as_secs_f64())));
        }
    };
    if !status.success() {
        let mut err = String::new();
        if let Some(mut s) = child.stderr.take() {
            use std::io::Read;
            let _ = s.read_to_string(&mut err);
        }
        if status.code() == Some(2) {
            return Err(Error::Infeasible);
        }
        return Err(Error::ExternalSolver(format!("solver exited with {status}: {}", err.trim())));
    }
    let text = std::fs::read_to_string(&sol_path).map_err(|e| Error::io(&sol_path, e))?;
    let mut values = parse_solution(&model, &text)?;
    tighten_y(&model, &mut values);
    let violated = model.check(&values);
    if !violated.is_empty() {
        let shown: Vec<&str> = violated.iter().take(5).map(String::as_str).collect();
        return Err(Error::InvalidSolution(format!(
            "{} constraints violated, e.g. {}",
            violated.len(),
            shown.join(", ")
        )));
    }
    let plan = plan_from_values(&model, sc, tb, &values)?;
    let report = validate_plan(sc, tb, &plan);
    if !report.feasible {
        return Err(Error::InvalidSolution(format!("decoded plan fails validation: {}", report.violations[0].message)));
    }
    Ok(plan)
}
