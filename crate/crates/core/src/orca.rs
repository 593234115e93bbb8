//! Optimal reciprocal collision avoidance with a non-holonomic tracking
//! layer. Agent constraints follow the usual velocity-obstacle
//! construction with half the avoidance effort per agent; static obstacles
//! contribute one tangent half-plane each at their closest point.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, Vec2};
use crate::sim::{Action, Obstacle, RobotState, V_MAX, W_MAX};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrcaConfig {
    pub time_horizon_agents: f64,
    pub time_horizon_obstacles: f64,
    pub neighbor_range: f64,
    pub max_speed: f64,
    /// Radius enlargement covering the holonomic tracking error (m).
    pub epsilon_tracking: f64,
    /// Heading-error gain of the tracking layer (1/s).
    pub turn_gain: f64,
}

impl Default for OrcaConfig {
    fn default() -> Self {
        Self {
            time_horizon_agents: 5.0,
            time_horizon_obstacles: 1.3,
            neighbor_range: 3.5,
            max_speed: V_MAX,
            epsilon_tracking: 0.1,
            turn_gain: 2.0,
        }
    }
}

/// Holonomic view of a disc agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
    /// Whether the agent reacts. Non-reactive agents get no share of the
    /// avoidance effort.
    pub reactive: bool,
}

impl AgentState {
    pub fn of(r: &RobotState) -> Self {
        Self { position: r.position, velocity: r.velocity(), radius: r.radius, reactive: r.is_active() }
    }
}

/// Feasible side: `det(direction, point - v) <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub point: Vec2,
    pub direction: Vec2,
}

impl Line {
    pub fn violation(&self, v: Vec2) -> f64 {
        self.direction.cross(self.point - v)
    }
}

fn agent_line(me: &AgentState, other: &AgentState, radius_pad: f64, tau: f64, dt: f64) -> Line {
    let rel_pos = other.position - me.position;
    let rel_vel = me.velocity - other.velocity;
    let dist_sq = rel_pos.norm_sq();
    let r = me.radius + other.radius + 2.0 * radius_pad;
    let r_sq = r * r;
    let share = if other.reactive { 0.5 } else { 1.0 };
    let (direction, u);
    if dist_sq > r_sq {
        let inv_tau = 1.0 / tau;
        let w = rel_vel - rel_pos * inv_tau;
        let w_len_sq = w.norm_sq();
        let dot1 = w.dot(rel_pos);
        if dot1 < 0.0 && dot1 * dot1 > r_sq * w_len_sq {
            // cut-off circle
            let w_len = libm::sqrt(w_len_sq);
            let unit_w = w * (1.0 / w_len);
            direction = Vec2::new(unit_w.y, -unit_w.x);
            u = unit_w * (r * inv_tau - w_len);
        } else {
            let leg = libm::sqrt(dist_sq - r_sq);
            direction = if rel_pos.cross(w) > 0.0 {
                Vec2::new(rel_pos.x * leg - rel_pos.y * r, rel_pos.x * r + rel_pos.y * leg) * (1.0 / dist_sq)
            } else {
                -(Vec2::new(rel_pos.x * leg + rel_pos.y * r, -rel_pos.x * r + rel_pos.y * leg) * (1.0 / dist_sq))
            };
            u = direction * rel_vel.dot(direction) - rel_vel;
        }
    } else {
        // already overlapping: resolve within one step
        let inv_dt = 1.0 / dt;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.norm();
        let unit_w = if w_len > EPS { w * (1.0 / w_len) } else { -rel_pos.normalized_or_zero() };
        direction = Vec2::new(unit_w.y, -unit_w.x);
        u = unit_w * (r * inv_dt - w_len);
    }
    Line { point: me.velocity + u * share, direction }
}

fn obstacle_line(me: &AgentState, o: &Obstacle, radius_pad: f64, tau: f64, dt: f64) -> Option<(f64, Line)> {
    let sd = o.signed_distance(me.position);
    let mut n = (me.position - o.closest_point(me.position)).normalized_or_zero();
    if n == Vec2::ZERO {
        return None;
    }
    if sd < 0.0 {
        n = -n;
    }
    // approach speed along -n limited by clearance / tau; when already
    // penetrating, leave within one step
    let clearance = sd - me.radius - radius_pad;
    let bound = if clearance >= 0.0 { -clearance / tau } else { -clearance / dt };
    Some((sd, Line { point: n * bound, direction: Vec2::new(n.y, -n.x) }))
}

/// Half-planes for `me`: obstacle lines first, then agent lines.
pub fn constraints(
    me: &AgentState,
    neighbors: &[AgentState],
    obstacles: &[Obstacle],
    cfg: &OrcaConfig,
    dt: f64,
) -> (Vec<Line>, usize) {
    let mut lines = Vec::new();
    for o in obstacles {
        if let Some((d, line)) = obstacle_line(me, o, cfg.epsilon_tracking, cfg.time_horizon_obstacles, dt) {
            if d - me.radius <= cfg.neighbor_range {
                lines.push(line);
            }
        }
    }
    let n_obst = lines.len();
    let mut near: Vec<(f64, &AgentState)> = neighbors
        .iter()
        .map(|a| (a.position.dist(me.position) - a.radius - me.radius, a))
        .filter(|(d, _)| *d <= cfg.neighbor_range)
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, a) in near {
        lines.push(agent_line(me, a, cfg.epsilon_tracking, cfg.time_horizon_agents, dt));
    }
    (lines, n_obst)
}

fn lp1(lines: &[Line], line_no: usize, radius: f64, opt: Vec2, direction_opt: bool) -> Option<Vec2> {
    let l = lines[line_no];
    let dot = l.point.dot(l.direction);
    let disc = dot * dot + radius * radius - l.point.norm_sq();
    if disc < 0.0 {
        return None;
    }
    let sq = libm::sqrt(disc);
    let mut t_left = -dot - sq;
    let mut t_right = -dot + sq;
    for other in &lines[..line_no] {
        let denom = l.direction.cross(other.direction);
        let numer = other.direction.cross(l.point - other.point);
        if libm::fabs(denom) <= EPS {
            if numer < 0.0 {
                return None;
            }
            continue;
        }
        let t = numer / denom;
        if denom >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }
    let t = if direction_opt {
        if opt.dot(l.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        l.direction.dot(opt - l.point).clamp(t_left, t_right)
    };
    Some(l.point + l.direction * t)
}

/// Closest point to `opt` (or furthest along it when `direction_opt`)
/// inside the speed disc and all half-planes. Returns the index of the
/// first line that could not be satisfied, or `lines.len()`.
fn lp2(lines: &[Line], radius: f64, opt: Vec2, direction_opt: bool, result: &mut Vec2) -> usize {
    *result = if direction_opt {
        opt * radius
    } else if opt.norm_sq() > radius * radius {
        opt.normalized_or_zero() * radius
    } else {
        opt
    };
    for i in 0..lines.len() {
        if lines[i].violation(*result) > 0.0 {
            match lp1(lines, i, radius, opt, direction_opt) {
                Some(r) => *result = r,
                None => return i,
            }
        }
    }
    lines.len()
}

/// Minimizes the largest violation of the soft (agent) lines while keeping
/// the hard (obstacle) lines.
fn lp3(lines: &[Line], n_obst: usize, begin: usize, radius: f64, result: &mut Vec2) {
    let mut distance = 0.0;
    for i in begin..lines.len() {
        if lines[i].violation(*result) <= distance {
            continue;
        }
        let mut proj: Vec<Line> = lines[..n_obst].to_vec();
        for j in n_obst..i {
            let det = lines[i].direction.cross(lines[j].direction);
            let point = if libm::fabs(det) <= EPS {
                if lines[i].direction.dot(lines[j].direction) > 0.0 {
                    continue;
                }
                (lines[i].point + lines[j].point) * 0.5
            } else {
                lines[i].point + lines[i].direction * (lines[j].direction.cross(lines[i].point - lines[j].point) / det)
            };
            let direction = (lines[j].direction - lines[i].direction).normalized_or_zero();
            proj.push(Line { point, direction });
        }
        let saved = *result;
        let opt = Vec2::new(-lines[i].direction.y, lines[i].direction.x);
        if lp2(&proj, radius, opt, true, result) < proj.len() {
            *result = saved;
        }
        distance = lines[i].violation(*result);
    }
}

/// Solves the ORCA program over `lines` for the velocity nearest `preferred`.
pub fn solve(lines: &[Line], n_obst: usize, max_speed: f64, preferred: Vec2) -> Vec2 {
    let mut result = Vec2::ZERO;
    let fail = lp2(lines, max_speed, preferred, false, &mut result);
    if fail < lines.len() {
        lp3(lines, n_obst, fail, max_speed, &mut result);
    }
    result
}

/// Collision-avoiding holonomic velocity for `me`.
pub fn orca_velocity(
    me: &AgentState,
    neighbors: &[AgentState],
    obstacles: &[Obstacle],
    preferred: Vec2,
    cfg: &OrcaConfig,
    dt: f64,
) -> Vec2 {
    let (lines, n_obst) = constraints(me, neighbors, obstacles, cfg, dt);
    solve(&lines, n_obst, cfg.max_speed, preferred)
}

/// Maps a holonomic velocity onto unicycle commands: turn toward it with a
/// proportional law and drive at its speed scaled by the clamped cosine of
/// the heading error.
pub fn nh_track(desired: Vec2, state: &RobotState, cfg: &OrcaConfig) -> Action {
    let speed = desired.norm();
    if speed < EPS {
        return Action::STOP;
    }
    let alpha = normalize_angle(desired.angle() - state.heading);
    let w = (cfg.turn_gain * alpha).clamp(-W_MAX, W_MAX);
    let v = (speed * libm::cos(alpha).max(0.0)).min(V_MAX);
    Action::new(v, w)
}

/// Velocity toward `target` at up to `max_speed`, slowing only in the last
/// step before reaching it.
pub fn preferred_velocity(position: Vec2, target: Vec2, max_speed: f64, dt: f64) -> Vec2 {
    let d = target - position;
    let dist = d.norm();
    if dist < EPS {
        return Vec2::ZERO;
    }
    d * (max_speed.min(dist / dt) / dist)
}
