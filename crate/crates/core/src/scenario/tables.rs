//! Coverage, knockout reach and probability tables derived from a scenario.
//!
//! Vertex-indexed vectors have length `N + 1` so that they can be indexed by
//! vertex id directly; slot 0 is the absorbing vertex. Sensor-indexed tables
//! use 0-based indices (sensor id minus one).

use crate::mesh::{VertexId, ABSORBING, UNREACHABLE};

use super::probability::{detection_probability, evasion_probability};
use super::{dist, Scenario};

/// Slack for range comparisons; the bundled example puts some vertices exactly
/// on a sensor or knockout boundary.
pub const RANGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedTables {
    pub n_sensors: usize,
    pub n_vertices: usize,
    pub omega: u32,
    /// `d_sv`.
    pub coverage: Vec<Vec<bool>>,
    /// `K_sv`.
    pub knockout: Vec<Vec<bool>>,
    /// `1 - q_sv`.
    pub detect: Vec<Vec<f64>>,
    pub miss: Vec<Vec<f64>>,
    pub miss_confused: Vec<Vec<f64>>,
    pub cover_count: Vec<u32>,
    /// `Q_v(Ω)`.
    pub evade: Vec<f64>,
    /// `Q_v^c(Ω)`.
    pub evade_confused: Vec<f64>,
    pub in_v: Vec<bool>,
    /// The multi-covered set `V` in increasing id order.
    pub multi_covered: Vec<VertexId>,
    /// Sensors within knockout range of each vertex.
    pub knock_sets: Vec<Vec<usize>>,
    /// Sensors covering at least one vertex of `V`.
    pub relevant: Vec<bool>,
    pub dist_from_start: Vec<Vec<u32>>,
    pub dist_to_target: Vec<u32>,
    pub dist_to_exit: Option<Vec<u32>>,
    /// Hops to the nearest vertex with a non-empty knockout set.
    pub dist_to_knock: Vec<u32>,
}

impl DerivedTables {
    pub fn derive(sc: &Scenario) -> DerivedTables {
        let n = sc.n();
        let target = sc.target();
        let s_count = sc.sensors.len();
        let mut coverage = vec![vec![false; n + 1]; s_count];
        let mut knockout = vec![vec![false; n + 1]; s_count];
        let mut detect = vec![vec![0.0; n + 1]; s_count];
        for (si, s) in sc.sensors.iter().enumerate() {
            if sc.forced_knockouts.contains(&s.id) {
                continue;
            }
            for v in sc.mesh.vertices() {
                let d = dist((v.x, v.y), s.position);
                if v.id != target && d <= s.radius + RANGE_EPS {
                    coverage[si][v.id as usize] = true;
                    detect[si][v.id as usize] = detection_probability(d, s.radius);
                }
                if d <= sc.knockout_radius + RANGE_EPS {
                    knockout[si][v.id as usize] = true;
                }
            }
        }
        let kappa = sc.confusion_factor;
        let miss: Vec<Vec<f64>> = detect.iter().map(|row| row.iter().map(|p| 1.0 - p).collect()).collect();
        let miss_confused: Vec<Vec<f64>> = detect.iter().map(|row| row.iter().map(|p| 1.0 - kappa * p).collect()).collect();

        let mut cover_count = vec![0u32; n + 1];
        let mut evade = vec![1.0; n + 1];
        let mut evade_confused = vec![1.0; n + 1];
        let mut in_v = vec![false; n + 1];
        let mut knock_sets = vec![Vec::new(); n + 1];
        let mut p = Vec::with_capacity(s_count);
        let mut pc = Vec::with_capacity(s_count);
        for v in 1..=n {
            p.clear();
            pc.clear();
            for si in 0..s_count {
                if coverage[si][v] {
                    cover_count[v] += 1;
                    p.push(detect[si][v]);
                    pc.push(kappa * detect[si][v]);
                }
                if knockout[si][v] {
                    knock_sets[v].push(si);
                }
            }
            evade[v] = evasion_probability(&p, sc.omega);
            evade_confused[v] = evasion_probability(&pc, sc.omega).max(evade[v]);
            in_v[v] = v as VertexId != target && cover_count[v] >= sc.omega;
        }
        let multi_covered: Vec<VertexId> = (1..=n as VertexId).filter(|&v| in_v[v as usize]).collect();
        let relevant: Vec<bool> = (0..s_count)
            .map(|si| multi_covered.iter().any(|&v| coverage[si][v as usize]))
            .collect();

        let everywhere = |_: VertexId| true;
        let dist_from_start = sc.agents.iter().map(|a| sc.mesh.bfs(&[a.start], everywhere)).collect();
        let dist_to_target = sc.mesh.bfs(&[target], everywhere);
        let dist_to_exit = sc.exit_target.map(|xi| sc.mesh.bfs(&[xi], everywhere));
        let knock_vertices: Vec<VertexId> = (1..=n as VertexId).filter(|&v| !knock_sets[v as usize].is_empty()).collect();
        let dist_to_knock = sc.mesh.bfs(&knock_vertices, everywhere);

        DerivedTables {
            n_sensors: s_count,
            n_vertices: n,
            omega: sc.omega,
            coverage,
            knockout,
            detect,
            miss,
            miss_confused,
            cover_count,
            evade,
            evade_confused,
            in_v,
            multi_covered,
            knock_sets,
            relevant,
            dist_from_start,
            dist_to_target,
            dist_to_exit,
            dist_to_knock,
        }
    }

    pub fn is_multi_covered(&self, v: VertexId) -> bool {
        self.in_v.get(v as usize).copied().unwrap_or(false)
    }

    /// Evasion factor for an agent at `v`; 1 at the target and the absorbing vertex.
    pub fn evade_at(&self, v: VertexId, confused: bool) -> f64 {
        if v == ABSORBING || v as usize >= self.evade.len() {
            return 1.0;
        }
        if confused {
            self.evade_confused[v as usize]
        } else {
            self.evade[v as usize]
        }
    }

    /// Sensors covering `v` that are not in `knocked`.
    pub fn live_detections(&self, v: VertexId, knocked: impl Fn(usize) -> bool) -> u32 {
        (0..self.n_sensors)
            .filter(|&s| self.coverage[s][v as usize] && !knocked(s))
            .count() as u32
    }

    /// Minimum hop count from any start to the target, ignoring sensors.
    pub fn min_start_distance(&self, target: VertexId) -> Option<u32> {
        self.dist_from_start
            .iter()
            .map(|d| d[target as usize])
            .filter(|&d| d != UNREACHABLE)
            .min()
    }
}

#[cfg(test)]
mod tests {
    use crate::mesh::Cell;
    use crate::scenario::io;

    #[test]
    fn example_tables() {
        let sc = io::example();
        let tb = sc.derive_tables();
        let target = sc.target() as usize;
        for s in 0..tb.n_sensors {
            assert!(!tb.coverage[s][target]);
            assert!(!tb.coverage[s][0]);
        }
        for v in 1..=tb.n_vertices {
            assert!(tb.evade_confused[v] >= tb.evade[v]);
            for s in 0..tb.n_sensors {
                if !tb.coverage[s][v] {
                    assert_eq!(tb.miss[s][v], 1.0);
                }
                assert!(tb.miss_confused[s][v] >= tb.miss[s][v]);
            }
            let count = (0..tb.n_sensors).filter(|&s| tb.coverage[s][v]).count() as u32;
            assert_eq!(tb.in_v[v], v != target && count >= 2);
        }
        // The knockout cell next to the second agent reaches sensors 2 and 4.
        let ko = sc.mesh.id_of(Cell::new(5, 2)).unwrap();
        assert_eq!(tb.knock_sets[ko as usize], vec![1, 3]);
    }

    #[test]
    fn confusion_factor_extremes() {
        let mut sc = io::example();
        sc.confusion_factor = 1.0;
        let tb = sc.derive_tables();
        assert_eq!(tb.evade, tb.evade_confused);
        sc.confusion_factor = 0.0;
        let tb = sc.derive_tables();
        assert!(tb.evade_confused.iter().all(|&q| q == 1.0));
    }

    #[test]
    fn forced_knockout_shrinks_v() {
        let sc = io::example();
        let full = sc.derive_tables();
        let reduced = sc.with_forced_knockouts([2, 4]).derive_tables();
        assert!(reduced.multi_covered.len() < full.multi_covered.len());
        assert!(reduced.coverage[1].iter().all(|&c| !c));
        assert!(reduced.knockout[3].iter().all(|&c| !c));
        for v in 1..=full.n_vertices {
            assert!(reduced.evade[v] >= full.evade[v]);
        }
    }
}
