//! Parametric scene generators: the six training layouts plus an empty
//! arena, and the evaluation presets at 15 m scale.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Scene;
use crate::geom::{Aabb, Vec2};
use crate::planner::{astar, rasterize, DEFAULT_RESOLUTION};
use crate::sim::{Obstacle, RobotState, WorldConfig};

/// Extra spacing kept between spawned robots and obstacles (m).
pub const SPAWN_MARGIN: f64 = 0.1;
pub const WALL_THICKNESS: f64 = 0.1;
pub const EVAL_SCALE: f64 = 15.0;
const MAX_TRIES: usize = 2000;
const MAX_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Random,
    Circle,
    Plus,
    Doorway,
    Room,
    Hallway,
    /// Open arena without obstacles; goals at `0.6 × scale` from the start.
    Empty,
}

impl ScenarioKind {
    pub const TRAINING: [ScenarioKind; 6] = [
        ScenarioKind::Random,
        ScenarioKind::Circle,
        ScenarioKind::Plus,
        ScenarioKind::Doorway,
        ScenarioKind::Room,
        ScenarioKind::Hallway,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Random => "random",
            ScenarioKind::Circle => "circle",
            ScenarioKind::Plus => "plus",
            ScenarioKind::Doorway => "doorway",
            ScenarioKind::Room => "room",
            ScenarioKind::Hallway => "hallway",
            ScenarioKind::Empty => "empty",
        }
    }
}

impl core::str::FromStr for ScenarioKind {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "random" => ScenarioKind::Random,
            "circle" => ScenarioKind::Circle,
            "plus" => ScenarioKind::Plus,
            "doorway" => ScenarioKind::Doorway,
            "room" => ScenarioKind::Room,
            "hallway" => ScenarioKind::Hallway,
            "empty" => ScenarioKind::Empty,
            _ => return Err("unknown scenario kind"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Characteristic size (m): circle diameter, area side, corridor length.
    pub scale: f64,
    pub num_agents: usize,
    pub num_obstacles: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("could not place {0} agents without overlap after repeated attempts")]
    Overconstrained(usize),
    #[error("invalid scenario: {0}")]
    Invalid(&'static str),
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, scale: f64, num_agents: usize, rng_seed: u64) -> Self {
        let num_obstacles = match kind {
            ScenarioKind::Random => 8,
            ScenarioKind::Room => 10,
            _ => 0,
        };
        Self { kind, scale, num_agents, num_obstacles, rng_seed }
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self }
    }

    /// Training layouts at 10 m scale.
    pub fn training_set(seed: u64) -> Vec<ScenarioSpec> {
        let counts = [25, 24, 12, 10, 12, 12];
        ScenarioKind::TRAINING
            .iter()
            .zip(counts)
            .enumerate()
            .map(|(i, (k, n))| ScenarioSpec::new(*k, 10.0, n, seed.wrapping_add(i as u64)))
            .collect()
    }
}

/// Agent counts used for each evaluation scenario.
pub fn eval_agent_counts(kind: ScenarioKind) -> &'static [usize] {
    match kind {
        ScenarioKind::Circle | ScenarioKind::Random => &[10, 20, 40],
        ScenarioKind::Doorway => &[5, 10, 15],
        ScenarioKind::Hallway => &[8, 12, 16],
        _ => &[],
    }
}

/// Evaluation preset at 15 m scale. Counts outside the standard grid are
/// accepted; callers may warn using [`eval_agent_counts`].
pub fn eval_suite(kind: ScenarioKind, agent_count: usize) -> ScenarioSpec {
    ScenarioSpec::new(kind, EVAL_SCALE, agent_count, 0)
}

struct Builder {
    cfg: WorldConfig,
    starts: Vec<Vec2>,
    goals: Vec<Vec2>,
}

impl Builder {
    fn new(half_extent: Vec2, seed: u64) -> Self {
        let margin = Vec2::new(1.0, 1.0);
        let bounds = Aabb::new(-half_extent - margin, half_extent + margin);
        Self { cfg: WorldConfig::new(bounds, seed), starts: Vec::new(), goals: Vec::new() }
    }

    fn radius(&self) -> f64 {
        self.cfg.robot_radius
    }

    fn wall(&mut self, a: Vec2, b: Vec2) {
        self.cfg.obstacles.push(Obstacle::wall(a, b, WALL_THICKNESS));
    }

    /// Walls whose inner faces enclose `[-hx, hx] × [-hy, hy]`.
    fn boundary(&mut self, hx: f64, hy: f64) {
        let o = WALL_THICKNESS / 2.0;
        let (x, y) = (hx + o, hy + o);
        self.wall(Vec2::new(-x - o, -y), Vec2::new(x + o, -y));
        self.wall(Vec2::new(-x - o, y), Vec2::new(x + o, y));
        self.wall(Vec2::new(-x, -y), Vec2::new(-x, y));
        self.wall(Vec2::new(x, -y), Vec2::new(x, y));
    }

    fn clear_of_obstacles(&self, p: Vec2) -> bool {
        self.cfg.static_clearance(p) >= SPAWN_MARGIN
    }

    fn clear_of(&self, pts: &[Vec2], p: Vec2) -> bool {
        let min = 2.0 * self.radius() + SPAWN_MARGIN;
        pts.iter().all(|q| q.dist(p) >= min)
    }

    fn push(&mut self, start: Vec2, goal: Vec2) {
        self.starts.push(start);
        self.goals.push(goal);
    }

    fn finish(self) -> Result<Scene, ScenarioError> {
        let grid = rasterize(&self.cfg, DEFAULT_RESOLUTION, self.cfg.robot_radius);
        for (s, g) in self.starts.iter().zip(&self.goals) {
            if !grid.is_free_point(*s) || !grid.is_free_point(*g) || astar(&grid, *s, *g).is_err() {
                return Err(ScenarioError::Overconstrained(self.starts.len()));
            }
        }
        let r = self.cfg.robot_radius;
        let robots = self
            .starts
            .iter()
            .zip(&self.goals)
            .map(|(s, g)| RobotState::new(*s, (*g - *s).angle(), *g, r))
            .collect();
        Ok(Scene { config: self.cfg, robots })
    }
}

/// Samples a point in `area` that is clear of obstacles and of `taken`.
fn sample_free<R: Rng>(b: &Builder, rng: &mut R, area: Aabb, taken: &[Vec2]) -> Option<Vec2> {
    (0..MAX_TRIES).find_map(|_| {
        let p = Vec2::new(rng.random_range(area.min.x..=area.max.x), rng.random_range(area.min.y..=area.max.y));
        (b.clear_of_obstacles(p) && b.clear_of(taken, p)).then_some(p)
    })
}

fn random_pairs<R: Rng>(b: &mut Builder, rng: &mut R, n: usize, area: Aabb, min_travel: f64) -> bool {
    for _ in 0..n {
        let Some(s) = sample_free(b, rng, area, &b.starts) else { return false };
        let goal = (0..MAX_TRIES).find_map(|_| {
            let g = sample_free(b, rng, area, &b.goals)?;
            (g.dist(s) >= min_travel).then_some(g)
        });
        let Some(g) = goal else { return false };
        b.push(s, g);
    }
    true
}

fn square(h: f64) -> Aabb {
    Aabb::new(Vec2::new(-h, -h), Vec2::new(h, h))
}

fn circle(spec: &ScenarioSpec) -> Builder {
    let r = spec.scale / 2.0;
    let mut b = Builder::new(Vec2::new(r, r), spec.rng_seed);
    let n = spec.num_agents;
    for k in 0..n {
        let s = Vec2::from_angle(TAU * k as f64 / n as f64) * r;
        b.push(s, -s);
    }
    b
}

fn random<R: Rng>(spec: &ScenarioSpec, rng: &mut R) -> Option<Builder> {
    let h = spec.scale / 2.0;
    let mut b = Builder::new(Vec2::new(h, h), spec.rng_seed);
    let inner = square(h - 1.0);
    for _ in 0..spec.num_obstacles {
        let c = Vec2::new(rng.random_range(inner.min.x..=inner.max.x), rng.random_range(inner.min.y..=inner.max.y));
        let radius = rng.random_range(0.3..=0.7);
        b.cfg.obstacles.push(Obstacle::circle(c, radius));
    }
    random_pairs(&mut b, rng, spec.num_agents, square(h - 0.5), h).then_some(b)
}

fn room<R: Rng>(spec: &ScenarioSpec, rng: &mut R) -> Option<Builder> {
    let h = spec.scale / 2.0;
    let mut b = Builder::new(Vec2::new(h, h), spec.rng_seed);
    b.boundary(h, h);
    for _ in 0..spec.num_obstacles {
        let len = rng.random_range(1.0..=4.0);
        let horizontal = rng.random_bool(0.5);
        let lim = h - 0.5;
        let (a, d) = if horizontal { (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)) } else { (Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)) };
        let along = rng.random_range(-lim..=(lim - len).max(-lim));
        let across = rng.random_range(-lim..=lim);
        let p0 = a * along + d * across;
        b.wall(p0, p0 + a * len);
    }
    random_pairs(&mut b, rng, spec.num_agents, square(h - 0.4), h).then_some(b)
}

fn empty<R: Rng>(spec: &ScenarioSpec, rng: &mut R) -> Option<Builder> {
    let h = spec.scale / 2.0;
    let mut b = Builder::new(Vec2::new(h, h), spec.rng_seed);
    let travel = 0.6 * spec.scale;
    let area = square(h - 0.5);
    for _ in 0..spec.num_agents {
        let pair = (0..MAX_TRIES).find_map(|_| {
            let s = sample_free(&b, rng, area, &b.starts)?;
            let g = s + Vec2::from_angle(rng.random_range(-PI..PI)) * travel;
            (area.contains(g) && b.clear_of(&b.goals, g)).then_some((s, g))
        });
        let (s, g) = pair?;
        b.push(s, g);
    }
    Some(b)
}

/// Two `0.2·scale`-wide corridors of length `scale` crossing at the origin.
fn plus<R: Rng>(spec: &ScenarioSpec, rng: &mut R) -> Option<Builder> {
    let l = spec.scale / 2.0;
    let w = 0.1 * spec.scale;
    let mut b = Builder::new(Vec2::new(l, l), spec.rng_seed);
    let o = WALL_THICKNESS / 2.0;
    // arm end caps
    b.wall(Vec2::new(l + o, -w - o), Vec2::new(l + o, w + o));
    b.wall(Vec2::new(-l - o, -w - o), Vec2::new(-l - o, w + o));
    b.wall(Vec2::new(-w - o, l + o), Vec2::new(w + o, l + o));
    b.wall(Vec2::new(-w - o, -l - o), Vec2::new(w + o, -l - o));
    // side walls from the crossing to each arm end
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            b.wall(Vec2::new(sx * (w + o), sy * (w + o)), Vec2::new(sx * (w + o), sy * (l + 2.0 * o)));
            b.wall(Vec2::new(sx * (w + o), sy * (w + o)), Vec2::new(sx * (l + 2.0 * o), sy * (w + o)));
        }
    }
    let pitch = 2.0 * b.radius() + SPAWN_MARGIN + 0.2;
    let lanes = libm::floor((2.0 * w - 2.0 * (b.radius() + SPAWN_MARGIN)) / pitch) as i32 + 1;
    let arms = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-1.0, 0.0), Vec2::new(0.0, -1.0)];
    let mut slot = [0usize; 4];
    for k in 0..spec.num_agents {
        let arm = k % 4;
        let dir = arms[arm];
        let lateral = dir.perp();
        let s = slot[arm];
        slot[arm] += 1;
        let row = (s as i32 / lanes) as f64;
        let lane = (s as i32 % lanes) as f64 - (lanes - 1) as f64 / 2.0;
        let along = l - 0.5 - row * pitch;
        if along < w + 0.5 {
            return None;
        }
        let jitter = Vec2::new(rng.random_range(-0.05..=0.05), rng.random_range(-0.05..=0.05));
        let p = dir * along + lateral * (lane * pitch) + jitter;
        b.push(p, -p);
    }
    Some(b)
}

/// Robots start in a `scale × 0.4·scale` room and leave through a gap of
/// twice the robot diameter in its long wall to goals in an exit area of
/// the same size.
fn doorway<R: Rng>(spec: &ScenarioSpec, rng: &mut R) -> Option<Builder> {
    let hx = spec.scale / 2.0;
    let depth = 0.4 * spec.scale;
    let mut b = Builder::new(Vec2::new(hx, depth), spec.rng_seed);
    b.boundary(hx, depth);
    let gap = 4.0 * b.radius();
    let o = WALL_THICKNESS / 2.0;
    b.wall(Vec2::new(-hx, 0.0), Vec2::new(-gap / 2.0 - o, 0.0));
    b.wall(Vec2::new(gap / 2.0 + o, 0.0), Vec2::new(hx, 0.0));
    let room = Aabb::new(Vec2::new(-hx + 0.5, -depth + 0.5), Vec2::new(hx - 0.5, -0.5));
    let exit = Aabb::new(Vec2::new(-hx + 0.5, 0.5), Vec2::new(hx - 0.5, depth - 0.5));
    for _ in 0..spec.num_agents {
        let s = sample_free(&b, rng, room, &b.starts)?;
        let g = sample_free(&b, rng, exit, &b.goals)?;
        b.push(s, g);
    }
    Some(b)
}

/// Corridor `scale` long and 2.5 m wide; two groups at opposite ends swap.
fn hallway(spec: &ScenarioSpec) -> Option<Builder> {
    let hx = spec.scale / 2.0;
    let hy = 1.25;
    let mut b = Builder::new(Vec2::new(hx, hy), spec.rng_seed);
    b.boundary(hx, hy);
    let lanes = [-0.75, 0.0, 0.75];
    let pitch = 2.0 * b.radius() + SPAWN_MARGIN + 0.2;
    let mut count = [0usize; 2];
    for k in 0..spec.num_agents {
        let g = k % 2;
        let s = count[g];
        count[g] += 1;
        let col = (s / lanes.len()) as f64;
        let x = hx - 0.5 - col * pitch;
        if x < 0.5 {
            return None;
        }
        let sign = if g == 0 { -1.0 } else { 1.0 };
        let p = Vec2::new(sign * x, lanes[s % lanes.len()]);
        b.push(p, Vec2::new(-p.x, p.y));
    }
    Some(b)
}

pub fn generate(spec: &ScenarioSpec) -> Result<Scene, ScenarioError> {
    if !(spec.scale > 0.0) {
        return Err(ScenarioError::Invalid("scale must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    for _ in 0..MAX_ATTEMPTS {
        let built = match spec.kind {
            ScenarioKind::Circle => Some(circle(spec)),
            ScenarioKind::Random => random(spec, &mut rng),
            ScenarioKind::Room => room(spec, &mut rng),
            ScenarioKind::Plus => plus(spec, &mut rng),
            ScenarioKind::Doorway => doorway(spec, &mut rng),
            ScenarioKind::Hallway => hallway(spec),
            ScenarioKind::Empty => empty(spec, &mut rng),
        };
        let Some(b) = built else { continue };
        if let Ok(scene) = b.finish() {
            return Ok(scene);
        }
        if matches!(spec.kind, ScenarioKind::Circle | ScenarioKind::Hallway) {
            break;
        }
    }
    Err(ScenarioError::Overconstrained(spec.num_agents))
}
