//! The five experiment presets.
//!
//! Durations and cooldowns the presets leave open default to 10 steps;
//! cooldowns are clamped to `T - 1` so that they stay in range on short horizons.

use crate::error::{Error, Result};

use super::{Mode, Scenario, DEFAULT_DURATION};

pub const CASES: [u8; 5] = [1, 2, 3, 4, 5];

pub fn describe(case: u8) -> &'static str {
    match case {
        1 => "minimise time to target, 1 knockout allowed (B=1, omega=2)",
        2 => "minimise time to target, 2 knockouts allowed (B=2, omega=2)",
        3 => "maximise PED at T = shortest start-target distance, no confusion (omega=2)",
        4 => "maximise PED at T = shortest start-target distance, 2 confusions allowed (B=2, omega=2)",
        5 => "minimise time to target with PED >= 0.95, 1 confusion allowed (B=1, omega=2)",
        _ => "unknown case",
    }
}

fn cooldown(t: u32) -> Option<u32> {
    (t >= 2).then(|| DEFAULT_DURATION.min(t - 1))
}

/// Applies preset `case` to a copy of `sc`. `horizon` overrides the preset's
/// horizon (cases 3 and 4 otherwise use the shortest sensor-free distance).
pub fn apply_case(sc: &Scenario, case: u8, horizon: Option<u32>) -> Result<Scenario> {
    let mut out = sc.clone();
    out.omega = 2;
    out.required_ped = None;
    out.horizon = match case {
        1 | 2 | 5 => horizon.unwrap_or(sc.horizon),
        3 | 4 => match horizon {
            Some(t) => t,
            None => sc
                .derive_tables()
                .min_start_distance(sc.target())
                .ok_or(Error::InfeasibleByReduction)?,
        },
        _ => return Err(Error::Config(format!("unknown case {case}; expected 1..5"))),
    };
    let t = out.horizon;
    match case {
        1 | 2 => {
            out.mode = Mode::MinTime;
            out.budget = case as f64;
            for a in &mut out.agents {
                a.knockout_cost = 1.0;
                a.knockout_duration = DEFAULT_DURATION;
                a.knockout_cooldown = cooldown(t);
            }
        }
        3 => {
            out.mode = Mode::MaxPed;
            out.budget = 0.0;
        }
        4 => {
            out.mode = Mode::MaxPed;
            out.budget = 2.0;
            for a in &mut out.agents {
                a.confusion_cost = 1.0;
                a.confusion_duration = DEFAULT_DURATION;
                a.confusion_cooldown = cooldown(t);
            }
        }
        5 => {
            out.mode = Mode::MinTimeRequiredPed;
            out.required_ped = Some(0.95);
            out.budget = 1.0;
            for a in &mut out.agents {
                a.confusion_cost = 1.0;
                a.confusion_duration = DEFAULT_DURATION;
            }
        }
        _ => unreachable!(),
    }
    for a in &mut out.agents {
        for v in [
            &mut a.knockout_cooldown,
            &mut a.confusion_cooldown,
            &mut a.knockout_dwell,
            &mut a.confusion_dwell,
        ] {
            if let Some(x) = *v {
                *v = cooldown(t).map(|c| c.min(x));
            }
        }
    }
    Ok(out)
}
