//! Navigation environment: a [`World`] plus static map, global paths,
//! per-robot LiDAR history and tracker, observation assembly and rewards.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::lidar::{apply_lidar_noise, raycast, LidarScan, ScanHistory};
use crate::obs::{apply_state_noise, build_observation, Ablation, NoiseConfig, NormalizedObs, Normalizer, ObsConfig, ObservationBundle};
use crate::planner::{astar, rasterize, running_target, GlobalPath, OccupancyGrid, PlanError, TargetPoint, DEFAULT_HORIZON, DEFAULT_RESOLUTION};
use crate::reward::{step_reward, RewardBreakdown, RewardConfig};
use crate::sim::{Action, RobotState, SimError, Status, StepReport, World, WorldConfig};
use crate::tracker::{Classification, Pose, Tracker, TrackerConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("no global path for robot {agent}: {source}")]
    Plan { agent: usize, source: PlanError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub noise: NoiseConfig,
    pub ablation: Ablation,
    pub obs: ObsConfig,
    pub reward: RewardConfig,
    pub tracker: TrackerConfig,
    pub grid_resolution: f64,
    pub horizon: usize,
    /// Run LiDAR and tracking. Controllers that read ground truth can turn
    /// this off.
    pub perception: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            noise: NoiseConfig::off(),
            ablation: Ablation::None,
            obs: ObsConfig::default(),
            reward: RewardConfig::default(),
            tracker: TrackerConfig::default(),
            grid_resolution: DEFAULT_RESOLUTION,
            horizon: DEFAULT_HORIZON,
            perception: true,
        }
    }
}

/// A world plus the robots placed in it; the unit of scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub config: WorldConfig,
    pub robots: Vec<RobotState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub report: StepReport,
    /// Reward for robots that were active before the step.
    pub rewards: Vec<Option<RewardBreakdown>>,
    /// Robots that became terminal during this step.
    pub done: Vec<bool>,
}

pub struct NavEnv {
    pub world: World,
    pub grid: OccupancyGrid,
    pub paths: Vec<GlobalPath>,
    cfg: EnvConfig,
    histories: Vec<ScanHistory>,
    trackers: Vec<Tracker>,
    targets: Vec<TargetPoint>,
    observations: Vec<ObservationBundle>,
    rng: ChaCha8Rng,
    distance: Vec<f64>,
    finish_time: Vec<Option<f64>>,
}

impl NavEnv {
    pub fn new(scene: Scene, cfg: EnvConfig) -> Result<Self, EnvError> {
        let world = World::new(scene.config, scene.robots)?;
        let grid = rasterize(&world.config, cfg.grid_resolution, world.config.robot_radius);
        let paths = world
            .robots
            .iter()
            .enumerate()
            .map(|(agent, r)| astar(&grid, r.position, r.goal).map_err(|source| EnvError::Plan { agent, source }))
            .collect::<Result<Vec<_>, _>>()?;
        let n = world.robots.len();
        let rng = ChaCha8Rng::seed_from_u64(world.config.rng_seed);
        let mut env = Self {
            grid,
            paths,
            histories: Vec::with_capacity(n),
            trackers: (0..n).map(|_| Tracker::new(cfg.tracker)).collect(),
            targets: Vec::with_capacity(n),
            observations: Vec::with_capacity(n),
            rng,
            distance: alloc::vec![0.0; n],
            finish_time: alloc::vec![None; n],
            world,
            cfg,
        };
        for i in 0..n {
            let scan = env.scan(i);
            env.histories.push(ScanHistory::new(scan.clone()));
            if env.cfg.perception {
                let pose = env.pose(i);
                let dt = env.world.config.dt;
                env.trackers[i].update(&scan, pose, &env.grid, dt);
            }
        }
        env.refresh();
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn num_agents(&self) -> usize {
        self.world.robots.len()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn pose(&self, i: usize) -> Pose {
        let r = &self.world.robots[i];
        Pose { position: r.position, heading: r.heading }
    }

    fn scan(&mut self, i: usize) -> LidarScan {
        if !self.cfg.perception {
            return LidarScan::empty(self.world.sim_time());
        }
        let clean = raycast(&self.world, i);
        apply_lidar_noise(&clean, &mut self.rng, self.cfg.noise.lidar_sigma)
    }

    fn refresh(&mut self) {
        let n = self.num_agents();
        self.targets.clear();
        for i in 0..n {
            let t = running_target(&self.paths[i], self.world.robots[i].position, self.cfg.horizon)
                .expect("paths are never empty");
            self.targets.push(t);
        }
        self.observations.clear();
        for i in 0..n {
            let r = &self.world.robots[i];
            let tracks = self.trackers[i]
                .tracks()
                .iter()
                .filter(|t| t.missed == 0 && (self.cfg.obs.include_static || t.classification == Classification::Dynamic));
            let clean = build_observation(r, &self.histories[i], tracks, Some(&self.targets[i]), self.cfg.ablation, &self.cfg.obs);
            let noisy = apply_state_noise(&clean, &mut self.rng, &self.cfg.noise);
            self.observations.push(noisy);
        }
    }

    pub fn observation(&self, i: usize) -> &ObservationBundle {
        &self.observations[i]
    }

    pub fn normalized(&self, i: usize, norm: &Normalizer) -> NormalizedObs {
        norm.normalize(&self.observations[i])
    }

    pub fn scans(&self, i: usize) -> &ScanHistory {
        &self.histories[i]
    }

    pub fn tracker(&self, i: usize) -> &Tracker {
        &self.trackers[i]
    }

    /// Running target on the global path at the current pose.
    pub fn target(&self, i: usize) -> &TargetPoint {
        &self.targets[i]
    }

    /// Point the progress reward measures against.
    pub fn reward_target(&self, i: usize) -> Vec2 {
        match self.cfg.ablation {
            Ablation::NoGlobalPath => self.world.robots[i].goal,
            _ => self.targets[i].position,
        }
    }

    pub fn distance_travelled(&self, i: usize) -> f64 {
        self.distance[i]
    }

    /// Time at which robot `i` became terminal.
    pub fn finish_time(&self, i: usize) -> Option<f64> {
        self.finish_time[i]
    }

    pub fn is_done(&self) -> bool {
        self.world.all_terminal()
    }

    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutcome, EnvError> {
        let n = self.num_agents();
        let before: Vec<(Status, Vec2)> = self.world.robots.iter().map(|r| (r.status, r.position)).collect();
        let report = self.world.step(actions)?;
        let dt = self.world.config.dt;
        for i in 0..n {
            if before[i].0.is_terminal() {
                continue;
            }
            let p = self.world.robots[i].position;
            self.distance[i] += p.dist(before[i].1);
            let scan = self.scan(i);
            if self.cfg.perception {
                let pose = self.pose(i);
                self.trackers[i].update(&scan, pose, &self.grid, dt);
            }
            self.histories[i].push(scan);
        }
        self.refresh();
        let mut rewards = Vec::with_capacity(n);
        let mut done = Vec::with_capacity(n);
        for i in 0..n {
            let (prev_status, prev_pos) = before[i];
            if prev_status.is_terminal() {
                rewards.push(None);
                done.push(false);
                continue;
            }
            let r = &self.world.robots[i];
            rewards.push(Some(step_reward(
                r.status,
                report.d_min[i],
                prev_pos,
                r.position,
                self.reward_target(i),
                &self.cfg.reward,
            )));
            let finished = r.status.is_terminal();
            if finished {
                self.finish_time[i] = Some(report.sim_time);
            }
            done.push(finished);
        }
        Ok(StepOutcome { report, rewards, done })
    }
}
