//! Simulated 360° planar LiDAR and its multiplicative Gaussian noise model.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::{ray_circle, Vec2};
use crate::sim::World;

pub const NUM_BEAMS: usize = 120;
pub const MAX_RANGE: f64 = 3.5;
/// Relative (one-sigma) range noise.
pub const DEFAULT_RANGE_NOISE: f64 = 0.035;
/// Smallest reportable range; keeps every range strictly positive.
pub const MIN_RANGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub ranges: Vec<f64>,
    pub timestamp: f64,
    pub max_range: f64,
}

impl LidarScan {
    pub fn empty(timestamp: f64) -> Self {
        Self {
            ranges: alloc::vec![MAX_RANGE; NUM_BEAMS],
            timestamp,
            max_range: MAX_RANGE,
        }
    }

    /// Body-frame bearing of beam `k` (beam 0 forward, counter-clockwise).
    pub fn beam_angle(k: usize) -> f64 {
        2.0 * PI * k as f64 / NUM_BEAMS as f64
    }

    pub fn is_hit(&self, k: usize) -> bool {
        self.ranges[k] < self.max_range
    }
}

/// The last three scans, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanHistory {
    frames: [LidarScan; 3],
}

impl ScanHistory {
    /// Starts a history by replicating the first scan.
    pub fn new(first: LidarScan) -> Self {
        Self { frames: [first.clone(), first.clone(), first] }
    }

    pub fn push(&mut self, scan: LidarScan) {
        self.frames.rotate_left(1);
        self.frames[2] = scan;
    }

    pub fn frames(&self) -> &[LidarScan; 3] {
        &self.frames
    }

    pub fn latest(&self) -> &LidarScan {
        &self.frames[2]
    }
}

/// Nearest surface hit along a world-frame ray, ignoring robot `skip`.
pub fn cast_ray(world: &World, origin: Vec2, dir: Vec2, skip: usize, max_range: f64) -> f64 {
    let mut best = max_range;
    for o in &world.config.obstacles {
        if let Some(t) = o.ray_hit(origin, dir) {
            best = best.min(t);
        }
    }
    for (j, r) in world.robots.iter().enumerate() {
        if j == skip {
            continue;
        }
        if let Some(t) = ray_circle(origin, dir, r.position, r.radius) {
            best = best.min(t);
        }
    }
    best.max(MIN_RANGE)
}

/// Casts all beams for robot `agent`. Other robots appear as discs.
pub fn raycast(world: &World, agent: usize) -> LidarScan {
    let me = &world.robots[agent];
    let ranges = (0..NUM_BEAMS)
        .map(|k| {
            let dir = Vec2::from_angle(me.heading + LidarScan::beam_angle(k));
            cast_ray(world, me.position, dir, agent, MAX_RANGE)
        })
        .collect();
    LidarScan { ranges, timestamp: world.sim_time(), max_range: MAX_RANGE }
}

/// Multiplies every range by `1 + ε`, `ε ~ N(0, sigma)`, then re-clips.
pub fn apply_lidar_noise<R: Rng + ?Sized>(scan: &LidarScan, rng: &mut R, sigma: f64) -> LidarScan {
    if sigma == 0.0 {
        return scan.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("noise sigma must be finite and non-negative");
    let ranges = scan
        .ranges
        .iter()
        .map(|&r| (r * (1.0 + normal.sample(rng))).clamp(MIN_RANGE, scan.max_range))
        .collect();
    LidarScan { ranges, ..scan.clone() }
}
