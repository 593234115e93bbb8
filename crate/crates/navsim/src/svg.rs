//! Static SVG rendering of a trajectory log over its scene.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use navsim_core::env::Scene;
use navsim_core::geom::{Aabb, Vec2};
use navsim_core::sim::{Obstacle, Status};

use crate::trajectory::StepRecord;

const PX_PER_M: f64 = 40.0;

fn color(i: usize) -> String {
    // Golden-angle hue spacing keeps neighbours distinguishable.
    format!("hsl({:.0},70%,45%)", (i as f64 * 137.508) % 360.0)
}

fn extent(scene: Option<&Scene>, records: &[StepRecord]) -> Aabb {
    if let Some(s) = scene {
        return s.config.bounds;
    }
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for r in records {
        for p in [Vec2::new(r.x, r.y), Vec2::new(r.goal[0], r.goal[1])] {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    if !lo.x.is_finite() {
        return Aabb::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
    }
    Aabb::new(lo - Vec2::new(1.0, 1.0), hi + Vec2::new(1.0, 1.0))
}

/// Renders one trial: obstacles, each robot's path, its goal and its
/// final pose (red when collided, grey when stuck).
pub fn render(scene: Option<&Scene>, records: &[StepRecord]) -> String {
    let b = extent(scene, records);
    let (w, h) = ((b.max.x - b.min.x) * PX_PER_M, (b.max.y - b.min.y) * PX_PER_M);
    let tx = |p: Vec2| ((p.x - b.min.x) * PX_PER_M, (b.max.y - p.y) * PX_PER_M);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white" stroke="black"/>"#);
    if let Some(sc) = scene {
        for o in &sc.config.obstacles {
            match o {
                Obstacle::Circle(c) => {
                    let (x, y) = tx(c.center);
                    let _ = writeln!(s, r##"<circle cx="{x:.1}" cy="{y:.1}" r="{:.1}" fill="#888"/>"##, c.radius * PX_PER_M);
                }
                Obstacle::Wall(wl) => {
                    let a = wl.aabb();
                    let (x, y) = tx(Vec2::new(a.min.x, a.max.y));
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="#555"/>"##,
                        (a.max.x - a.min.x) * PX_PER_M,
                        (a.max.y - a.min.y) * PX_PER_M
                    );
                }
            }
        }
    }
    let mut by_agent: BTreeMap<usize, Vec<&StepRecord>> = BTreeMap::new();
    for r in records {
        by_agent.entry(r.agent).or_default().push(r);
    }
    let radius = scene.map_or(0.25, |sc| sc.config.robot_radius) * PX_PER_M;
    for (agent, recs) in &by_agent {
        let c = color(*agent);
        let pts: Vec<String> = recs
            .iter()
            .map(|r| {
                let (x, y) = tx(Vec2::new(r.x, r.y));
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, pts.join(" "));
        let last = recs[recs.len() - 1];
        let (gx, gy) = tx(Vec2::new(last.goal[0], last.goal[1]));
        let _ = writeln!(s, r#"<rect x="{:.1}" y="{:.1}" width="6" height="6" fill="{c}"/>"#, gx - 3.0, gy - 3.0);
        let fill = match last.status {
            Status::Collided => "red".to_string(),
            Status::Stuck => "#bbb".to_string(),
            _ => c.clone(),
        };
        let (x, y) = tx(Vec2::new(last.x, last.y));
        let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="{radius:.1}" fill="{fill}" fill-opacity="0.6" stroke="{c}"/>"#);
    }
    s.push_str("</svg>\n");
    s
}
