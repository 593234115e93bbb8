//! World state, differential-drive kinematics, collision checks and
//! synchronous multi-agent stepping.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{abs, cos, normalize_angle, sin, Aabb, Vec2};

/// Translational velocity bounds (m/s). Backward motion is not allowed.
pub const V_MIN: f64 = 0.0;
pub const V_MAX: f64 = 1.0;
/// Rotational velocity bound (rad/s), symmetric.
pub const W_MAX: f64 = 1.0;

pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_ROBOT_RADIUS: f64 = 0.25;
pub const DEFAULT_GOAL_TOLERANCE: f64 = 0.2;
pub const DEFAULT_MAX_EPISODE_TIME: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("action contains a non-finite component")]
    NonFiniteAction,
    #[error("expected {expected} actions, got {got}")]
    ActionArity { expected: usize, got: usize },
    #[error("invalid world config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    ReachedGoal,
    Collided,
    Stuck,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Active
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Active => "active",
            Status::ReachedGoal => "reached_goal",
            Status::Collided => "collided",
            Status::Stuck => "stuck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub v: f64,
    pub w: f64,
}

impl Action {
    pub const STOP: Action = Action { v: 0.0, w: 0.0 };

    pub const fn new(v: f64, w: f64) -> Self {
        Self { v, w }
    }
}

/// Clips a raw command into the admissible action box.
pub fn clamp_action(raw: Action) -> Result<Action, SimError> {
    if !raw.v.is_finite() || !raw.w.is_finite() {
        return Err(SimError::NonFiniteAction);
    }
    Ok(Action {
        v: raw.v.clamp(V_MIN, V_MAX),
        w: raw.w.clamp(-W_MAX, W_MAX),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec2,
    pub heading: f64,
    pub linear_velocity: f64,
    pub angular_velocity: f64,
    pub radius: f64,
    pub goal: Vec2,
    pub status: Status,
}

impl RobotState {
    pub fn new(position: Vec2, heading: f64, goal: Vec2, radius: f64) -> Self {
        Self {
            position,
            heading: normalize_angle(heading),
            linear_velocity: 0.0,
            angular_velocity: 0.0,
            radius,
            goal,
            status: Status::Active,
        }
    }

    /// World-frame velocity vector.
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * self.linear_velocity
    }

    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }
}

/// Exact unicycle arc integration over one step.
pub fn integrate(state: &RobotState, action: Action, dt: f64) -> RobotState {
    let mut next = *state;
    let (x, y, th) = (state.position.x, state.position.y, state.heading);
    let (v, w) = (action.v, action.w);
    if abs(w) < 1e-9 {
        next.position = Vec2::new(x + v * dt * cos(th), y + v * dt * sin(th));
        next.heading = normalize_angle(th + w * dt);
    } else {
        let th1 = th + w * dt;
        let r = v / w;
        next.position = Vec2::new(x + r * (sin(th1) - sin(th)), y - r * (cos(th1) - cos(th)));
        next.heading = normalize_angle(th1);
    }
    next.linear_velocity = v;
    next.angular_velocity = w;
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

/// Axis-aligned wall segment with thickness. The occupied region is the
/// segment swept by a square of side `thickness`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Vec2,
    pub b: Vec2,
    pub thickness: f64,
}

impl Wall {
    pub fn new(a: Vec2, b: Vec2, thickness: f64) -> Self {
        Self { a, b, thickness }
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.a.x == self.b.x || self.a.y == self.b.y
    }

    pub fn aabb(&self) -> Aabb {
        let h = 0.5 * self.thickness;
        Aabb::new(
            Vec2::new(self.a.x.min(self.b.x) - h, self.a.y.min(self.b.y) - h),
            Vec2::new(self.a.x.max(self.b.x) + h, self.a.y.max(self.b.y) + h),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Obstacle {
    Circle(Circle),
    Wall(Wall),
}

impl Obstacle {
    pub fn circle(center: Vec2, radius: f64) -> Self {
        Obstacle::Circle(Circle { center, radius })
    }

    pub fn wall(a: Vec2, b: Vec2, thickness: f64) -> Self {
        Obstacle::Wall(Wall::new(a, b, thickness))
    }

    /// Signed distance from `p` to the obstacle surface (negative inside).
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match self {
            Obstacle::Circle(c) => p.dist(c.center) - c.radius,
            Obstacle::Wall(w) => w.aabb().signed_distance(p),
        }
    }

    /// Closest surface point to `p` (for points outside the obstacle).
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        match self {
            Obstacle::Circle(c) => {
                let d = p - c.center;
                let n = d.norm();
                if n == 0.0 {
                    c.center + Vec2::new(c.radius, 0.0)
                } else {
                    c.center + d * (c.radius / n)
                }
            }
            Obstacle::Wall(w) => w.aabb().closest_point(p),
        }
    }

    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match self {
            Obstacle::Circle(c) => crate::geom::ray_circle(origin, dir, c.center, c.radius),
            Obstacle::Wall(w) => w.aabb().ray_hit(origin, dir),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub dt: f64,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub bounds: Aabb,
    pub max_episode_time: f64,
    pub rng_seed: u64,
    #[serde(default = "default_radius")]
    pub robot_radius: f64,
    #[serde(default = "default_goal_tolerance")]
    pub goal_tolerance: f64,
}

fn default_radius() -> f64 {
    DEFAULT_ROBOT_RADIUS
}

fn default_goal_tolerance() -> f64 {
    DEFAULT_GOAL_TOLERANCE
}

impl WorldConfig {
    pub fn new(bounds: Aabb, rng_seed: u64) -> Self {
        Self {
            dt: DEFAULT_DT,
            obstacles: Vec::new(),
            bounds,
            max_episode_time: DEFAULT_MAX_EPISODE_TIME,
            rng_seed,
            robot_radius: DEFAULT_ROBOT_RADIUS,
            goal_tolerance: DEFAULT_GOAL_TOLERANCE,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig("dt must be positive"));
        }
        if !(self.max_episode_time > 0.0) {
            return Err(SimError::InvalidConfig("max_episode_time must be positive"));
        }
        if !(self.robot_radius > 0.0) {
            return Err(SimError::InvalidConfig("robot_radius must be positive"));
        }
        if !(self.goal_tolerance >= 0.0) {
            return Err(SimError::InvalidConfig("goal_tolerance must be non-negative"));
        }
        if !(self.bounds.width() > 0.0 && self.bounds.height() > 0.0) {
            return Err(SimError::InvalidConfig("bounds must have positive area"));
        }
        for o in &self.obstacles {
            match o {
                Obstacle::Circle(c) if !(c.radius > 0.0) => {
                    return Err(SimError::InvalidConfig("circle radius must be positive"))
                }
                Obstacle::Wall(w) if !w.is_axis_aligned() => {
                    return Err(SimError::InvalidConfig("walls must be axis-aligned"))
                }
                Obstacle::Wall(w) if !(w.thickness > 0.0) => {
                    return Err(SimError::InvalidConfig("wall thickness must be positive"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Signed clearance from a robot centered at `p` to the nearest static
    /// obstacle surface.
    pub fn static_clearance(&self, p: Vec2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(p) - self.robot_radius)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Per-step outcome for every robot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub d_min: Vec<f64>,
    pub statuses: Vec<Status>,
    pub sim_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub robots: Vec<RobotState>,
    pub config: WorldConfig,
    steps: u64,
}

impl World {
    pub fn new(config: WorldConfig, robots: Vec<RobotState>) -> Result<Self, SimError> {
        config.validate()?;
        let mut robots = robots;
        for r in &mut robots {
            r.radius = config.robot_radius;
            r.heading = normalize_angle(r.heading);
        }
        Ok(Self { robots, config, steps: 0 })
    }

    pub fn sim_time(&self) -> f64 {
        self.steps as f64 * self.config.dt
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn num_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn all_terminal(&self) -> bool {
        self.robots.iter().all(|r| r.status.is_terminal())
    }

    /// Signed surface-to-surface distance from robot `agent` to the nearest
    /// other robot or static obstacle; `+∞` when there is nothing else.
    pub fn min_separation(&self, agent: usize) -> f64 {
        let me = &self.robots[agent];
        let mut d = self.config.static_clearance(me.position);
        for (j, other) in self.robots.iter().enumerate() {
            if j != agent {
                d = d.min(me.position.dist(other.position) - me.radius - other.radius);
            }
        }
        d
    }

    /// Advances every active robot simultaneously by one tick.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepReport, SimError> {
        if actions.len() != self.robots.len() {
            return Err(SimError::ActionArity {
                expected: self.robots.len(),
                got: actions.len(),
            });
        }
        let mut clamped = Vec::with_capacity(actions.len());
        for (r, a) in self.robots.iter().zip(actions) {
            clamped.push(if r.is_active() { clamp_action(*a)? } else { Action::STOP });
        }
        let dt = self.config.dt;
        let next: Vec<RobotState> = self
            .robots
            .iter()
            .zip(&clamped)
            .map(|(r, a)| if r.is_active() { integrate(r, *a, dt) } else { *r })
            .collect();
        self.robots = next;
        self.steps += 1;
        let sim_time = self.sim_time();

        let d_min: Vec<f64> = (0..self.robots.len()).map(|i| self.min_separation(i)).collect();
        for (r, &d) in self.robots.iter_mut().zip(&d_min) {
            if !r.is_active() {
                continue;
            }
            if d < 0.0 {
                r.status = Status::Collided;
            } else if r.position.dist(r.goal) < self.config.goal_tolerance {
                r.status = Status::ReachedGoal;
            } else if sim_time >= self.config.max_episode_time - 1e-9 {
                r.status = Status::Stuck;
            }
            if r.status.is_terminal() {
                r.linear_velocity = 0.0;
                r.angular_velocity = 0.0;
            }
        }
        Ok(StepReport {
            d_min,
            statuses: self.robots.iter().map(|r| r.status).collect(),
            sim_time,
        })
    }
}
