//! Shortest-path variable reductions.
//!
//! An `x(a, v, t)` variable is dropped when agent `a` cannot be at `v` at time
//! `t` in any solution that matters. The textbook rule also drops vertices
//! from which the target cannot be reached in time; that is only sound for the
//! agent that arrives, so [`ReductionPolicy::Safe`] keeps a vertex when the
//! agent could still act usefully from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{VertexId, UNREACHABLE};
use crate::scenario::{DerivedTables, Mode, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionPolicy {
    /// Shortest-path rules applied to every agent.
    Strict,
    /// Shortest-path rules for arriving agents, action reachability for helpers.
    #[default]
    Safe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionStats {
    /// `A * N * T`.
    pub total_x: usize,
    pub eliminated_x: usize,
    pub percent_excluded: f64,
    pub active_alpha: usize,
    pub active_beta: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionMask {
    pub policy: ReductionPolicy,
    n: usize,
    horizon: u32,
    agents: usize,
    x: Vec<bool>,
    alpha: Vec<bool>,
    beta: Vec<bool>,
    /// Vertices an agent may occupy only while sensors are confused.
    pub needs_confusion: Vec<bool>,
}

fn add(a: u32, b: u32) -> u32 {
    a.saturating_add(b)
}

impl ReductionMask {
    /// A mask that eliminates nothing apart from the action kinds the mode excludes.
    pub fn full(sc: &Scenario) -> ReductionMask {
        let (n, t, a_count) = (sc.n(), sc.horizon, sc.agents.len());
        let cells = a_count * (t as usize + 1) * (n + 1);
        ReductionMask {
            policy: ReductionPolicy::Safe,
            n,
            horizon: t,
            agents: a_count,
            x: vec![true; cells],
            alpha: vec![sc.mode.uses_knockouts(); cells],
            beta: vec![sc.mode.uses_confusion(); a_count * (t as usize + 1)],
            needs_confusion: vec![false; n + 1],
        }
    }

    pub fn compute(sc: &Scenario, tb: &DerivedTables, policy: ReductionPolicy) -> Result<ReductionMask> {
        let mut m = ReductionMask::full(sc);
        m.policy = policy;
        let (n, horizon) = (sc.n(), sc.horizon);
        let target = sc.target();
        let dn = &tb.dist_to_target;
        let knock_mode = sc.mode.uses_knockouts();

        let reachable = sc.agents.iter().enumerate().any(|(ai, _)| {
            let ds = &tb.dist_from_start[ai];
            match &tb.dist_to_exit {
                Some(dx) => {
                    let xi = sc.exit_target.expect("exit distances imply exit target") as usize;
                    add(ds[xi], dx[target as usize]) <= horizon
                }
                None => ds[target as usize] <= horizon,
            }
        });
        if !reachable {
            return Err(Error::InfeasibleByReduction);
        }

        let confusion_affordable = sc.agents.iter().any(|a| a.confusion_cost <= sc.budget);
        for (ai, agent) in sc.agents.iter().enumerate() {
            let ds = &tb.dist_from_start[ai];
            let can_act = agent.action_cost(sc.mode) <= sc.budget;
            for t in 1..=horizon {
                for v in 1..=n {
                    let dv = ds[v];
                    let mut keep = dv <= t;
                    if keep {
                        let arrive = match (&tb.dist_to_exit, sc.exit_target) {
                            (Some(dx), Some(xi)) => {
                                let via_before = add(ds[xi as usize], dx[v]) <= t && add(t, dn[v]) <= horizon;
                                let via_after = add(add(t, dx[v]), dx[target as usize]) <= horizon;
                                match policy {
                                    ReductionPolicy::Strict => via_after,
                                    ReductionPolicy::Safe => via_before || via_after,
                                }
                            }
                            _ => add(t, dn[v]) <= horizon,
                        };
                        let helper = match policy {
                            ReductionPolicy::Strict => false,
                            ReductionPolicy::Safe if knock_mode => can_act && add(t, tb.dist_to_knock[v]) <= horizon,
                            ReductionPolicy::Safe => can_act,
                        };
                        keep = arrive || helper;
                    }
                    if keep && sc.mode == Mode::MinTimeRequiredPed && v as VertexId != target {
                        let q_star = sc.required_ped.unwrap_or(0.0);
                        if tb.evade_confused[v] < q_star {
                            keep = false;
                        } else if tb.evade[v] < q_star {
                            if confusion_affordable {
                                m.needs_confusion[v] = true;
                            } else {
                                keep = false;
                            }
                        }
                    }
                    let i = m.idx(ai, v as VertexId, t);
                    m.x[i] = keep;
                    m.alpha[i] = knock_mode && keep && can_act && !tb.knock_sets[v].is_empty();
                }
                let bi = ai * (horizon as usize + 1) + t as usize;
                m.beta[bi] = sc.mode.uses_confusion() && can_act && (1..=n).any(|v| m.x[m.idx(ai, v as VertexId, t)]);
            }
        }
        Ok(m)
    }

    fn idx(&self, a: usize, v: VertexId, t: u32) -> usize {
        (a * (self.horizon as usize + 1) + t as usize) * (self.n + 1) + v as usize
    }

    /// Whether `x(a, v, t)` survives; the absorbing vertex is always kept.
    pub fn x(&self, a: usize, v: VertexId, t: u32) -> bool {
        if a >= self.agents || t > self.horizon || v as usize > self.n {
            return false;
        }
        v == 0 || self.x[self.idx(a, v, t)]
    }

    pub fn alpha(&self, a: usize, v: VertexId, t: u32) -> bool {
        if a >= self.agents || t == 0 || t > self.horizon || v == 0 || v as usize > self.n {
            return false;
        }
        self.alpha[self.idx(a, v, t)]
    }

    pub fn beta(&self, a: usize, t: u32) -> bool {
        if a >= self.agents || t == 0 || t > self.horizon {
            return false;
        }
        self.beta[a * (self.horizon as usize + 1) + t as usize]
    }

    pub fn stats(&self) -> ReductionStats {
        let mut eliminated = 0;
        let mut alpha = 0;
        let mut beta = 0;
        for a in 0..self.agents {
            for t in 1..=self.horizon {
                for v in 1..=self.n as VertexId {
                    eliminated += usize::from(!self.x(a, v, t));
                    alpha += usize::from(self.alpha(a, v, t));
                }
                beta += usize::from(self.beta(a, t));
            }
        }
        let total = self.agents * self.n * self.horizon as usize;
        ReductionStats {
            total_x: total,
            eliminated_x: eliminated,
            percent_excluded: if total == 0 { 0.0 } else { 100.0 * eliminated as f64 / total as f64 },
            active_alpha: alpha,
            active_beta: beta,
        }
    }
}

/// Earliest time `a` can be at `v`, or `UNREACHABLE`.
pub fn earliest(tb: &DerivedTables, a: usize, v: VertexId) -> u32 {
    tb.dist_from_start.get(a).map_or(UNREACHABLE, |d| d[v as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{cases, io};

    #[test]
    fn distance_rule() {
        let sc = cases::apply_case(&io::example(), 1, Some(10)).unwrap();
        let tb = sc.derive_tables();
        let m = ReductionMask::compute(&sc, &tb, ReductionPolicy::Strict).unwrap();
        let d = &tb.dist_from_start[0];
        let v = (1..=sc.n() as u32).find(|&v| d[v as usize] == 5).unwrap();
        assert!(!m.x(0, v, 3));
        assert!(!m.x(0, v, 4));
        for t in 1..=10 {
            assert!(m.x(0, 0, t));
        }
    }

    #[test]
    fn brute_force_exclusion_count() {
        let sc = cases::apply_case(&io::example(), 1, Some(10)).unwrap();
        let tb = sc.derive_tables();
        let m = ReductionMask::compute(&sc, &tb, ReductionPolicy::Strict).unwrap();
        let target = sc.target();
        let all = |src: &[u32]| sc.mesh.bfs(src, |_| true);
        let mut eliminated = 0;
        for a in &sc.agents {
            let from = all(&[a.start]);
            let to = all(&[target]);
            for t in 1..=10u32 {
                for v in 1..=sc.n() {
                    if from[v] > t || t + to[v] > 10 {
                        eliminated += 1;
                    }
                }
            }
        }
        let s = m.stats();
        assert_eq!(s.eliminated_x, eliminated);
        assert_eq!(s.total_x, 2 * 169 * 10);
        let again = ReductionMask::compute(&sc, &tb, ReductionPolicy::Strict).unwrap().stats();
        assert_eq!(s, again);
        let safe = ReductionMask::compute(&sc, &tb, ReductionPolicy::Safe).unwrap().stats();
        assert!(safe.eliminated_x <= s.eliminated_x);
    }

    #[test]
    fn required_ped_vertices() {
        let mut sc = cases::apply_case(&io::example(), 5, Some(10)).unwrap();
        let tb = sc.derive_tables();
        let v = (1..sc.n()).find(|&v| tb.evade_confused[v] < 1.0).unwrap();
        sc.required_ped = Some((tb.evade_confused[v] + 1.0) / 2.0);
        let m = ReductionMask::compute(&sc, &tb, ReductionPolicy::Safe).unwrap();
        for a in 0..2 {
            for t in 1..=10 {
                assert!(!m.x(a, v as u32, t));
            }
        }
    }

    #[test]
    fn unreachable_target() {
        let sc = cases::apply_case(&io::example(), 1, Some(5)).unwrap();
        let tb = sc.derive_tables();
        assert!(matches!(ReductionMask::compute(&sc, &tb, ReductionPolicy::Safe), Err(Error::InfeasibleByReduction)));
    }
}
