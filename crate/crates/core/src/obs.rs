//! Observation assembly: stacked LiDAR frames, goal and velocity, the running
//! target on the global path, and the graph of tracked dynamic neighbors.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, Vec2};
use crate::lidar::{ScanHistory, DEFAULT_RANGE_NOISE, MAX_RANGE, NUM_BEAMS};
use crate::planner::TargetPoint;
use crate::sim::{RobotState, V_MAX, W_MAX};
use crate::tracker::{to_polar, ClusterTrack, Pose};

pub const DEFAULT_MAX_NEIGHBORS: usize = 16;
/// Number of scalar features: goal (2), own velocity (2), path target (3).
pub const NUM_SCALARS: usize = 7;
pub const NODE_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    None,
    /// Drop the path observation; progress reward targets the final goal.
    #[serde(rename = "no-gp")]
    NoGlobalPath,
    /// Drop the neighbor graph.
    NoGnn,
}

impl Ablation {
    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::NoGlobalPath => "no-gp",
            Ablation::NoGnn => "no-gnn",
        }
    }
}

impl core::str::FromStr for Ablation {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Ablation::None),
            "no-gp" => Ok(Ablation::NoGlobalPath),
            "no-gnn" => Ok(Ablation::NoGnn),
            _ => Err("expected one of none, no-gp, no-gnn"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateNoiseKind {
    /// Uniform on `[-m, m]` per axis.
    Uniform,
    /// Gaussian with standard deviation `m` per axis.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Relative LiDAR range noise (one sigma).
    pub lidar_sigma: f64,
    /// Neighbor position perturbation magnitude (m).
    pub position: f64,
    /// Neighbor velocity perturbation magnitude (m/s).
    pub velocity: f64,
    pub kind: StateNoiseKind,
}

impl NoiseConfig {
    pub const fn off() -> Self {
        Self { lidar_sigma: 0.0, position: 0.0, velocity: 0.0, kind: StateNoiseKind::Uniform }
    }

    /// LiDAR 3.5 % Gaussian, neighbor states ±0.1 m and ±0.1 m/s.
    pub const fn evaluation() -> Self {
        Self {
            lidar_sigma: DEFAULT_RANGE_NOISE,
            position: 0.1,
            velocity: 0.1,
            kind: StateNoiseKind::Uniform,
        }
    }

    pub fn is_off(&self) -> bool {
        self.lidar_sigma == 0.0 && self.position == 0.0 && self.velocity == 0.0
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::off()
    }
}

/// Draws a 2D perturbation of magnitude parameter `m`.
pub fn perturbation<R: Rng + ?Sized>(rng: &mut R, m: f64, kind: StateNoiseKind) -> Vec2 {
    if m == 0.0 {
        return Vec2::ZERO;
    }
    match kind {
        StateNoiseKind::Uniform => Vec2::new(rng.random_range(-m..=m), rng.random_range(-m..=m)),
        StateNoiseKind::Gaussian => {
            let n = Normal::new(0.0, m).expect("finite noise magnitude");
            Vec2::new(n.sample(rng), n.sample(rng))
        }
    }
}

/// Body-frame features of one tracked neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborNode {
    /// Distance to the cluster's closest point (m).
    pub distance: f64,
    /// Bearing of the closest point (rad, left positive).
    pub bearing: f64,
    pub vx: f64,
    pub vy: f64,
}

impl NeighborNode {
    pub fn position(&self) -> Vec2 {
        Vec2::from_angle(self.bearing) * self.distance
    }
}

/// Neighbor graph. Edges are implicit: nodes are fully connected and every
/// node also connects to the ego agent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NeighborGraph {
    pub nodes: Vec<NeighborNode>,
}

impl NeighborGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationBundle {
    /// Three scans, oldest first, `NUM_BEAMS` ranges each (m).
    pub o_z: [Vec<f64>; 3],
    /// Goal distance (m) and bearing (rad).
    pub o_g: [f64; 2],
    /// Linear (m/s) and angular (rad/s) velocity.
    pub o_v: [f64; 2],
    /// Target distance (m), target bearing (rad), path direction relative
    /// to the heading (rad).
    pub o_gp: [f64; 3],
    pub o_c: NeighborGraph,
}

impl ObservationBundle {
    pub fn is_finite(&self) -> bool {
        self.o_z.iter().flatten().all(|v| v.is_finite())
            && self.o_g.iter().chain(&self.o_v).chain(&self.o_gp).all(|v| v.is_finite())
            && self
                .o_c
                .nodes
                .iter()
                .all(|n| n.distance.is_finite() && n.bearing.is_finite() && n.vx.is_finite() && n.vy.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObsConfig {
    pub max_neighbors: usize,
    /// Also feed static clusters to the graph.
    pub include_static: bool,
}

impl Default for ObsConfig {
    fn default() -> Self {
        Self { max_neighbors: DEFAULT_MAX_NEIGHBORS, include_static: false }
    }
}

fn pose_of(robot: &RobotState) -> Pose {
    Pose { position: robot.position, heading: robot.heading }
}

/// Builds the observation for `robot`. `tracks` should already be filtered
/// to the clusters that are fed to the graph.
pub fn build_observation<'a>(
    robot: &RobotState,
    history: &ScanHistory,
    tracks: impl IntoIterator<Item = &'a ClusterTrack>,
    target: Option<&TargetPoint>,
    ablation: Ablation,
    cfg: &ObsConfig,
) -> ObservationBundle {
    let pose = pose_of(robot);
    let frames = history.frames();
    let o_z = [frames[0].ranges.clone(), frames[1].ranges.clone(), frames[2].ranges.clone()];
    let (gd, gb) = to_polar(pose, robot.goal);
    let o_gp = match (ablation, target) {
        (Ablation::NoGlobalPath, _) | (_, None) => [0.0; 3],
        (_, Some(t)) => {
            let (td, tb) = to_polar(pose, t.position);
            [td, tb, normalize_angle(t.path_direction - robot.heading)]
        }
    };
    let mut nodes: Vec<NeighborNode> = if ablation == Ablation::NoGnn {
        Vec::new()
    } else {
        tracks
            .into_iter()
            .map(|t| {
                let (d, b) = to_polar(pose, t.closest_point);
                let v = t.velocity_estimate.rotate(-robot.heading);
                NeighborNode { distance: d, bearing: b, vx: v.x, vy: v.y }
            })
            .collect()
    };
    nodes.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    nodes.truncate(cfg.max_neighbors);
    ObservationBundle {
        o_z,
        o_g: [gd, gb],
        o_v: [robot.linear_velocity, robot.angular_velocity],
        o_gp,
        o_c: NeighborGraph { nodes },
    }
}

/// Perturbs neighbor positions and velocities. LiDAR noise is applied to
/// the scans themselves before tracking.
pub fn apply_state_noise<R: Rng + ?Sized>(bundle: &ObservationBundle, rng: &mut R, noise: &NoiseConfig) -> ObservationBundle {
    let mut out = bundle.clone();
    if noise.position == 0.0 && noise.velocity == 0.0 {
        return out;
    }
    for n in &mut out.o_c.nodes {
        let p = n.position() + perturbation(rng, noise.position, noise.kind);
        let v = Vec2::new(n.vx, n.vy) + perturbation(rng, noise.velocity, noise.kind);
        n.distance = p.norm();
        n.bearing = p.angle();
        n.vx = v.x;
        n.vy = v.y;
    }
    out.o_c.nodes.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    out
}

/// Scale constants mapping physical features onto roughly unit ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Normalizer {
    pub max_range: f64,
    /// Scenario diameter used for goal and target distances (m).
    pub distance_scale: f64,
    pub v_max: f64,
    pub w_max: f64,
    pub neighbor_speed: f64,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self { max_range: MAX_RANGE, distance_scale: 20.0, v_max: V_MAX, w_max: W_MAX, neighbor_speed: V_MAX }
    }
}

/// Network-ready features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedObs {
    /// `3 × NUM_BEAMS`, oldest frame first.
    pub scans: Vec<f64>,
    pub scalars: [f64; NUM_SCALARS],
    pub nodes: Vec<[f64; NODE_FEATURES]>,
}

impl NormalizedObs {
    pub fn current_scan(&self) -> &[f64] {
        &self.scans[2 * NUM_BEAMS..]
    }
}

impl Normalizer {
    /// Ranges and neighbor distances are divided by the LiDAR range, goal
    /// and target distances by `distance_scale`, angles by π, velocities by
    /// their bounds.
    pub fn normalize(&self, b: &ObservationBundle) -> NormalizedObs {
        let mut scans = Vec::with_capacity(3 * NUM_BEAMS);
        for frame in &b.o_z {
            scans.extend(frame.iter().map(|r| r / self.max_range));
        }
        let scalars = [
            b.o_g[0] / self.distance_scale,
            b.o_g[1] / PI,
            b.o_v[0] / self.v_max,
            b.o_v[1] / self.w_max,
            b.o_gp[0] / self.distance_scale,
            b.o_gp[1] / PI,
            b.o_gp[2] / PI,
        ];
        let nodes = b
            .o_c
            .nodes
            .iter()
            .map(|n| {
                [
                    n.distance / self.max_range,
                    n.bearing / PI,
                    n.vx / self.neighbor_speed,
                    n.vy / self.neighbor_speed,
                ]
            })
            .collect();
        NormalizedObs { scans, scalars, nodes }
    }

    pub fn denormalize(&self, n: &NormalizedObs) -> ObservationBundle {
        let frame = |k: usize| n.scans[k * NUM_BEAMS..(k + 1) * NUM_BEAMS].iter().map(|r| r * self.max_range).collect();
        let s = &n.scalars;
        ObservationBundle {
            o_z: [frame(0), frame(1), frame(2)],
            o_g: [s[0] * self.distance_scale, s[1] * PI],
            o_v: [s[2] * self.v_max, s[3] * self.w_max],
            o_gp: [s[4] * self.distance_scale, s[5] * PI, s[6] * PI],
            o_c: NeighborGraph {
                nodes: n
                    .nodes
                    .iter()
                    .map(|f| NeighborNode {
                        distance: f[0] * self.max_range,
                        bearing: f[1] * PI,
                        vx: f[2] * self.neighbor_speed,
                        vy: f[3] * self.neighbor_speed,
                    })
                    .collect(),
            },
        }
    }
}
