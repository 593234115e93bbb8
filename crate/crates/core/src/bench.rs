//! Episode runner and team metrics: success, collision and stuck rates,
//! extra travel time over the path lower bound, and average speed.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::Controller;
use crate::env::{EnvConfig, EnvError, NavEnv, Scene, StepOutcome};
use crate::exec::Executor;
use crate::planner::GlobalPath;
use crate::scenarios::{generate, ScenarioError, ScenarioSpec};
use crate::sim::{Action, Status, V_MAX};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Collision,
    Stuck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub outcome: Outcome,
    /// Time until the robot stopped being active (s).
    pub travel_time: f64,
    pub distance: f64,
    /// Shortest collision-free travel time along the global path (s).
    pub lower_bound: f64,
}

impl AgentRecord {
    pub fn average_speed(&self) -> f64 {
        if self.travel_time > 0.0 {
            self.distance / self.travel_time
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub steps: u64,
    pub agents: Vec<AgentRecord>,
    /// The controller failed and the remaining robots were marked stuck.
    pub controller_failed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub robots: usize,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub stuck_rate: f64,
    /// Mean travel time minus mean lower bound over successful robots (s).
    pub extra_time: f64,
    /// `extra_time` divided by the mean lower bound of the same robots.
    pub extra_time_ratio: f64,
    /// Mean over all robots of distance over active time (m/s).
    pub average_speed: f64,
}

/// Lower bound on the travel time of robot `i`: the line-of-sight
/// shortcut of its global path from the true start, minus the goal
/// tolerance, at full speed.
pub fn lower_bound_time(env: &NavEnv, i: usize, start: crate::geom::Vec2) -> f64 {
    let mut pts = env.paths[i].waypoints.clone();
    pts[0] = start;
    let len = GlobalPath::new(pts).shortcut_length(&env.grid);
    (len - env.world.config.goal_tolerance).max(0.0) / V_MAX
}

pub fn summarize<'a>(records: impl IntoIterator<Item = &'a AgentRecord>) -> EpisodeMetrics {
    let mut m = EpisodeMetrics::default();
    let (mut succ, mut coll, mut stuck) = (0usize, 0usize, 0usize);
    let (mut travel, mut bound, mut speed) = (0.0, 0.0, 0.0);
    for r in records {
        m.robots += 1;
        speed += r.average_speed();
        match r.outcome {
            Outcome::Success => {
                succ += 1;
                travel += r.travel_time;
                bound += r.lower_bound;
            }
            Outcome::Collision => coll += 1,
            Outcome::Stuck => stuck += 1,
        }
    }
    assert_eq!(succ + coll + stuck, m.robots, "outcomes must be exhaustive");
    if m.robots == 0 {
        return m;
    }
    let n = m.robots as f64;
    m.success_rate = succ as f64 / n;
    m.collision_rate = coll as f64 / n;
    m.stuck_rate = stuck as f64 / n;
    m.average_speed = speed / n;
    if succ > 0 {
        let (t, b) = (travel / succ as f64, bound / succ as f64);
        m.extra_time = t - b;
        m.extra_time_ratio = if b > 0.0 { (t - b) / b } else { 0.0 };
    }
    m
}

/// Pools all robots of all trials, in seed order.
pub fn aggregate(trials: &[TrialResult]) -> EpisodeMetrics {
    let mut sorted: Vec<&TrialResult> = trials.iter().collect();
    sorted.sort_by_key(|t| t.seed);
    summarize(sorted.iter().flat_map(|t| t.agents.iter()))
}

/// Runs one episode to completion. `on_step` sees the environment after
/// every step together with the commanded actions.
pub fn run_episode(
    scene: Scene,
    controller: &Controller<'_>,
    env_cfg: EnvConfig,
    seed: u64,
    on_step: &mut dyn FnMut(&NavEnv, &[Action], &StepOutcome),
) -> Result<TrialResult, BenchError> {
    let starts: Vec<_> = scene.robots.iter().map(|r| r.position).collect();
    let mut env = NavEnv::new(scene, env_cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let mut controller_failed = false;
    while !env.is_done() {
        let actions = match controller.act(&mut env, &mut rng) {
            Ok(a) => a,
            Err(_) => {
                controller_failed = true;
                break;
            }
        };
        let out = env.step(&actions)?;
        on_step(&env, &actions, &out);
    }
    let end = env.world.sim_time();
    let agents = (0..env.num_agents())
        .map(|i| {
            let r = &env.world.robots[i];
            let outcome = match r.status {
                Status::ReachedGoal => Outcome::Success,
                Status::Collided => Outcome::Collision,
                Status::Stuck | Status::Active => Outcome::Stuck,
            };
            AgentRecord {
                outcome,
                travel_time: env.finish_time(i).unwrap_or(end),
                distance: env.distance_travelled(i),
                lower_bound: lower_bound_time(&env, i, starts[i]),
            }
        })
        .collect();
    Ok(TrialResult { seed, steps: env.world.steps(), agents, controller_failed })
}

/// Runs one trial per seed, each in its own world.
pub fn run_trials<E: Executor>(
    spec: &ScenarioSpec,
    controller: &Controller<'_>,
    env_cfg: &EnvConfig,
    seeds: &[u64],
    exec: &E,
) -> Result<Vec<TrialResult>, BenchError> {
    let cfg = EnvConfig { perception: controller.needs_perception(), ..env_cfg.clone() };
    let results = exec.map(seeds, &|&seed| {
        let scene = generate(&spec.with_seed(seed))?;
        run_episode(scene, controller, cfg.clone(), seed, &mut |_, _, _| {})
    });
    results.into_iter().collect()
}
