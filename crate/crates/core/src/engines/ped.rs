use crate::formulation::Plan;
use crate::formulation::model::LOG_FLOOR;
use crate::scenario::{DerivedTables, Scenario};

/// Log of the probability of evading detection along the whole plan.
pub fn evaluate_log_ped(plan: &Plan, sc: &Scenario, tb: &DerivedTables) -> f64 {
    let z = plan.confusion_counts(sc);
    let mut total = 0.0;
    for tr in &plan.trajectories {
        for t in 1..=plan.horizon as usize {
            let Some(&v) = tr.get(t) else { break };
            let q = tb.evade_at(v, z.get(t).is_some_and(|&c| c > 0));
            if q < 1.0 {
                total += ln_floor(q);
            }
        }
    }
    total
}

pub fn evaluate_ped(plan: &Plan, sc: &Scenario, tb: &DerivedTables) -> f64 {
    evaluate_log_ped(plan, sc, tb).exp()
}

pub(crate) fn ln_floor(q: f64) -> f64 {
    q.max(LOG_FLOOR).ln()
}
