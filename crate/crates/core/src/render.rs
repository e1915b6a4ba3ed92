//! SVG drawings of a scenario and, optionally, a plan.
//!
//! Output depends only on the inputs: coordinates are printed with fixed
//! precision and elements are emitted in id order.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::formulation::Plan;
use crate::mesh::ABSORBING;
use crate::scenario::Scenario;

const SCALE: f64 = 40.0;
const MARGIN: f64 = 1.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub show_mesh: bool,
    /// Shade the vertices covered by at least omega sensors.
    pub show_coverage: bool,
    /// Leave out sensors that the plan knocks out (or that are forced off).
    pub hide_knocked: bool,
}

fn px(v: f64) -> f64 {
    ((v + MARGIN) * SCALE * 100.0).round() / 100.0
}

fn diamond(out: &mut String, x: f64, y: f64, colour: &str) {
    let (cx, cy, r) = (px(x), px(y), 0.3 * SCALE);
    let _ = writeln!(
        out,
        r#"<polygon class="action" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{colour}" stroke="black"/>"#,
        cx,
        cy - r,
        cx + r,
        cy,
        cx,
        cy + r,
        cx - r,
        cy
    );
}

pub fn render_svg(sc: &Scenario, plan: Option<&Plan>, spec: &RenderSpec) -> String {
    let tb = sc.derive_tables();
    let (w, h) = sc.mesh.extent();
    let width = px(w + MARGIN);
    let height = px(h + MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect class="box" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="black"/>"#,
        px(-0.5),
        px(-0.5),
        (w + 1.0) * SCALE,
        (h + 1.0) * SCALE
    );

    if spec.show_coverage {
        for &v in &tb.multi_covered {
            let (x, y) = sc.mesh.position(v);
            let _ = writeln!(out, r##"<circle class="covered" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#f4a6a6"/>"##, px(x), px(y), 0.45 * SCALE);
        }
    }
    if spec.show_mesh {
        for vx in sc.mesh.vertices() {
            for &u in sc.mesh.neighbors(vx.id) {
                if u > vx.id {
                    let (ux, uy) = sc.mesh.position(u);
                    let _ = writeln!(
                        out,
                        r##"<line class="edge" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#cccccc"/>"##,
                        px(vx.x),
                        px(vx.y),
                        px(ux),
                        px(uy)
                    );
                }
            }
        }
        for vx in sc.mesh.vertices() {
            let _ = writeln!(out, r##"<circle class="vertex" cx="{:.2}" cy="{:.2}" r="2.00" fill="#888888"/>"##, px(vx.x), px(vx.y));
        }
    }

    let mut knocked = vec![false; sc.sensors.len()];
    for (i, s) in sc.sensors.iter().enumerate() {
        knocked[i] = sc.forced_knockouts.contains(&s.id);
    }
    if let Some(p) = plan {
        for k in &p.knockouts {
            if let Some(set) = tb.knock_sets.get(k.vertex as usize) {
                for &s in set {
                    knocked[s] = true;
                }
            }
        }
    }
    for (i, s) in sc.sensors.iter().enumerate() {
        if knocked[i] && spec.hide_knocked {
            continue;
        }
        let dash = if knocked[i] { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<circle class="sensor" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="black"{dash}/>"#,
            px(s.position.0),
            px(s.position.1),
            s.radius * SCALE
        );
        let _ = writeln!(out, r#"<circle class="sensor-centre" cx="{:.2}" cy="{:.2}" r="3.00" fill="black"/>"#, px(s.position.0), px(s.position.1));
    }

    if let Some(p) = plan {
        for (a, tr) in p.trajectories.iter().enumerate() {
            let colour = COLOURS[a % COLOURS.len()];
            let mut pts = Vec::new();
            for &v in tr {
                if v == ABSORBING {
                    break;
                }
                let (x, y) = sc.mesh.position(v);
                let pt = format!("{:.2},{:.2}", px(x), px(y));
                if pts.last() != Some(&pt) {
                    pts.push(pt);
                }
            }
            if pts.len() > 1 {
                let _ = writeln!(
                    out,
                    r#"<polyline class="path" points="{}" fill="none" stroke="{colour}" stroke-width="3"/>"#,
                    pts.join(" ")
                );
            }
        }
        for k in &p.knockouts {
            let (x, y) = sc.mesh.position(k.vertex);
            diamond(&mut out, x, y, COLOURS[(k.agent as usize - 1) % COLOURS.len()]);
        }
        for c in &p.confusions {
            let v = p.position(c.agent as usize - 1, c.time);
            if v != ABSORBING {
                let (x, y) = sc.mesh.position(v);
                diamond(&mut out, x, y, COLOURS[(c.agent as usize - 1) % COLOURS.len()]);
            }
        }
    }

    for (a, agent) in sc.agents.iter().enumerate() {
        let (x, y) = sc.mesh.position(agent.start);
        let s = 0.35 * SCALE;
        let _ = writeln!(
            out,
            r#"<rect class="agent" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="black"/>"#,
            px(x) - s / 2.0,
            px(y) - s / 2.0,
            s,
            s,
            COLOURS[a % COLOURS.len()]
        );
    }
    let (x, y) = sc.mesh.position(sc.target());
    let _ = writeln!(out, r##"<circle class="target" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#ffd700" stroke="black"/>"##, px(x), px(y), 0.3 * SCALE);
    if let Some(xi) = sc.exit_target {
        let (x, y) = sc.mesh.position(xi);
        let _ = writeln!(out, r#"<circle class="exit" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="black" stroke-width="2"/>"#, px(x), px(y), 0.3 * SCALE);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::b0::solve_b0;
    use crate::scenario::io;

    #[test]
    fn deterministic_and_complete() {
        let sc = io::example();
        let plan = solve_b0(&sc, &sc.derive_tables()).unwrap();
        let spec = RenderSpec { show_mesh: true, show_coverage: true, hide_knocked: false };
        let a = render_svg(&sc, Some(&plan), &spec);
        assert_eq!(a, render_svg(&sc, Some(&plan), &spec));
        assert_eq!(a.matches(r#"class="sensor""#).count(), 4);
        assert_eq!(a.matches(r#"class="agent""#).count(), 2);
        assert_eq!(a.matches(r#"class="path""#).count(), 1);
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
    }

    #[test]
    fn knocked_sensors_hidden() {
        let sc = io::example().with_forced_knockouts([2, 4]);
        let spec = RenderSpec { hide_knocked: true, ..RenderSpec::default() };
        assert_eq!(render_svg(&sc, None, &spec).matches(r#"class="sensor""#).count(), 2);
        let shown = render_svg(&sc, None, &RenderSpec::default());
        assert_eq!(shown.matches("stroke-dasharray").count(), 2);
    }
}
