//! Model-free detection and tracking of dynamic clusters in LiDAR scans.
//!
//! Detection groups adjacent beam returns into clusters. Association is
//! hierarchical: a coarse stage separates clusters lying on the static map
//! from dynamic candidates and aligns candidates with existing tracks by
//! trimmed ICP; a fine stage rejects matches whose implied speed is not
//! physically plausible. Tracks carry a constant-velocity estimate.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, Vec2};
use crate::lidar::LidarScan;
use crate::planner::OccupancyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VelocitySource {
    /// Translation recovered by ICP between consecutive point sets.
    IcpTranslation,
    /// Displacement of the closest point.
    ClosestPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Max distance between returns of consecutive beams in one cluster.
    pub cluster_gap: f64,
    pub gating_radius: f64,
    pub v_max_gate: f64,
    pub grace_steps: u32,
    pub ema_beta: f64,
    /// Fraction of points on inflated static occupancy at or above which a
    /// cluster is classified static.
    pub static_fraction: f64,
    pub icp_iterations: usize,
    pub velocity_source: VelocitySource,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            cluster_gap: 0.3,
            gating_radius: 0.6,
            v_max_gate: 1.5,
            grace_steps: 3,
            ema_beta: 0.5,
            static_fraction: 0.5,
            icp_iterations: 30,
            velocity_source: VelocitySource::IcpTranslation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub points: Vec<Vec2>,
    pub centroid: Vec2,
    pub closest_point: Vec2,
}

impl Cluster {
    pub fn from_points(points: Vec<Vec2>, observer: Vec2) -> Self {
        assert!(!points.is_empty(), "clusters are non-empty");
        let mut sum = Vec2::ZERO;
        let mut closest = points[0];
        let mut best = f64::INFINITY;
        for &p in &points {
            sum += p;
            let d = p.dist(observer);
            if d < best {
                best = d;
                closest = p;
            }
        }
        let centroid = sum * (1.0 / points.len() as f64);
        Self { points, centroid, closest_point: closest }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTrack {
    pub id: u64,
    pub closest_point: Vec2,
    pub velocity_estimate: Vec2,
    /// Number of frames this track has been observed in.
    pub age: u32,
    pub classification: Classification,
    /// Consecutive frames without a match.
    pub missed: u32,
    pub points: Vec<Vec2>,
}

impl ClusterTrack {
    pub fn is_observed(&self) -> bool {
        self.missed == 0
    }
}

/// Observer pose used to place scan returns in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

/// Polar coordinates (distance, body-frame bearing) of `p` seen from `pose`.
pub fn to_polar(pose: Pose, p: Vec2) -> (f64, f64) {
    let d = p - pose.position;
    (d.norm(), normalize_angle(d.angle() - pose.heading))
}

pub fn from_polar(pose: Pose, dist: f64, bearing: f64) -> Vec2 {
    pose.position + Vec2::from_angle(pose.heading + bearing) * dist
}

/// Groups scan returns into clusters of consecutive beams whose endpoints
/// are at most `gap` apart. Max-range beams are not returns. The group
/// crossing beam `n-1 → 0` is merged.
pub fn cluster_scan(scan: &LidarScan, observer: Pose, gap: f64) -> Vec<Cluster> {
    let n = scan.ranges.len();
    let point = |k: usize| {
        observer.position + Vec2::from_angle(observer.heading + LidarScan::beam_angle(k)) * scan.ranges[k]
    };
    let mut groups: Vec<Vec<Vec2>> = Vec::new();
    let mut prev: Option<Vec2> = None;
    for k in 0..n {
        if !scan.is_hit(k) {
            prev = None;
            continue;
        }
        let p = point(k);
        match prev {
            Some(q) if q.dist(p) <= gap => groups.last_mut().expect("open group").push(p),
            _ => groups.push(alloc::vec![p]),
        }
        prev = Some(p);
    }
    if groups.len() > 1 && scan.is_hit(0) && scan.is_hit(n - 1) && point(n - 1).dist(point(0)) <= gap {
        let mut tail = groups.pop().expect("len > 1");
        tail.append(&mut groups[0]);
        groups[0] = tail;
    }
    groups
        .into_iter()
        .map(|pts| Cluster::from_points(pts, observer.position))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpResult {
    pub translation: Vec2,
    pub rms_residual: f64,
    pub inliers: usize,
}

/// Closest point to `p` on the polyline through `pts` (a single point is
/// its own polyline).
fn closest_on_polyline(pts: &[Vec2], p: Vec2) -> Vec2 {
    let mut best = pts[0];
    let mut bd = best.dist(p);
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ab = b - a;
        let len2 = ab.dot(ab);
        let s = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let q = a + ab * s;
        let d = q.dist(p);
        if d < bd {
            bd = d;
            best = q;
        }
    }
    best
}

/// Translation-only ICP from `src` onto the polyline through `dst`,
/// starting at `init`. Matching against segments rather than samples
/// removes most of the beam quantization. Correspondences beyond 3× the
/// median residual are dropped.
pub fn icp_translation(src: &[Vec2], dst: &[Vec2], init: Vec2, iterations: usize) -> IcpResult {
    let mut t = init;
    let mut rms = f64::INFINITY;
    let mut inliers = 0;
    if src.is_empty() || dst.is_empty() {
        return IcpResult { translation: t, rms_residual: rms, inliers };
    }
    let mut pairs: Vec<(Vec2, f64)> = Vec::with_capacity(src.len());
    let mut residuals: Vec<f64> = Vec::with_capacity(src.len());
    for _ in 0..iterations.max(1) {
        pairs.clear();
        for &s in src {
            let moved = s + t;
            let q = closest_on_polyline(dst, moved);
            pairs.push((q - moved, q.dist(moved)));
        }
        residuals.clear();
        residuals.extend(pairs.iter().map(|p| p.1));
        residuals.sort_by(f64::total_cmp);
        let median = residuals[residuals.len() / 2];
        let cutoff = 3.0 * median;
        let mut shift = Vec2::ZERO;
        let mut sq = 0.0;
        inliers = 0;
        for &(delta, r) in &pairs {
            if r <= cutoff {
                shift += delta;
                sq += r * r;
                inliers += 1;
            }
        }
        if inliers == 0 {
            break;
        }
        rms = libm::sqrt(sq / inliers as f64);
        let step = shift * (1.0 / inliers as f64);
        t += step;
        if step.norm() < 1e-10 {
            break;
        }
    }
    IcpResult { translation: t, rms_residual: rms, inliers }
}

/// Constant-velocity update from a displacement observed over `elapsed`
/// seconds. The second observation of a track initializes the estimate;
/// later ones blend with weight `beta`.
pub fn estimate_velocity(track: &ClusterTrack, displacement: Vec2, elapsed: f64, beta: f64) -> Vec2 {
    let measured = displacement * (1.0 / elapsed);
    if track.age <= 1 {
        measured
    } else {
        track.velocity_estimate * (1.0 - beta) + measured * beta
    }
}

fn static_share(cluster: &Cluster, grid: &OccupancyGrid) -> f64 {
    let on_map = cluster.points.iter().filter(|p| !grid.is_free_point(**p)).count();
    on_map as f64 / cluster.points.len() as f64
}

/// Per-observer track store.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    pub config: TrackerConfig,
    tracks: Vec<ClusterTrack>,
    next_id: u64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Self { config, tracks: Vec::new(), next_id: 0 }
    }

    pub fn tracks(&self) -> &[ClusterTrack] {
        &self.tracks
    }

    /// Dynamic tracks matched in the latest frame.
    pub fn dynamic_tracks(&self) -> impl Iterator<Item = &ClusterTrack> {
        self.tracks
            .iter()
            .filter(|t| t.classification == Classification::Dynamic && t.is_observed())
    }

    pub fn reset(&mut self) {
        self.tracks.clear();
        self.next_id = 0;
    }

    /// Clusters a scan and associates it with the current tracks.
    pub fn update(&mut self, scan: &LidarScan, observer: Pose, grid: &OccupancyGrid, dt: f64) {
        let clusters = cluster_scan(scan, observer, self.config.cluster_gap);
        self.associate(clusters, grid, dt);
    }

    pub fn associate(&mut self, clusters: Vec<Cluster>, grid: &OccupancyGrid, dt: f64) {
        assert!(dt > 0.0, "dt must be positive");
        let cfg = self.config;
        let prev = core::mem::take(&mut self.tracks);
        let classes: Vec<Classification> = clusters
            .iter()
            .map(|c| {
                if static_share(c, grid) >= cfg.static_fraction {
                    Classification::Static
                } else {
                    Classification::Dynamic
                }
            })
            .collect();

        // Candidate pairs inside the gate, cheapest first.
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in prev.iter().enumerate() {
            let elapsed = dt * (t.missed + 1) as f64;
            let predicted = t.closest_point + t.velocity_estimate * elapsed;
            for (ci, c) in clusters.iter().enumerate() {
                if classes[ci] != t.classification {
                    continue;
                }
                let d = predicted.dist(c.closest_point);
                if d <= cfg.gating_radius {
                    pairs.push((d, ti, ci));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut track_used = alloc::vec![false; prev.len()];
        let mut cluster_used = alloc::vec![false; clusters.len()];
        let mut next: Vec<ClusterTrack> = Vec::with_capacity(prev.len() + clusters.len());
        for &(_, ti, ci) in &pairs {
            if track_used[ti] || cluster_used[ci] {
                continue;
            }
            let t = &prev[ti];
            let c = &clusters[ci];
            let elapsed = dt * (t.missed + 1) as f64;
            let updated = match t.classification {
                Classification::Static => Some(ClusterTrack {
                    closest_point: c.closest_point,
                    velocity_estimate: Vec2::ZERO,
                    age: t.age + 1,
                    missed: 0,
                    points: c.points.clone(),
                    ..t.clone()
                }),
                Classification::Dynamic => {
                    let init = t.velocity_estimate * elapsed;
                    let icp = icp_translation(&t.points, &c.points, init, cfg.icp_iterations);
                    let displacement = match cfg.velocity_source {
                        VelocitySource::IcpTranslation => icp.translation,
                        VelocitySource::ClosestPoint => c.closest_point - t.closest_point,
                    };
                    // fine stage: spatiotemporal consistency
                    if displacement.norm() / elapsed > cfg.v_max_gate {
                        None
                    } else {
                        Some(ClusterTrack {
                            closest_point: c.closest_point,
                            velocity_estimate: estimate_velocity(t, displacement, elapsed, cfg.ema_beta),
                            age: t.age + 1,
                            missed: 0,
                            points: c.points.clone(),
                            ..t.clone()
                        })
                    }
                }
            };
            if let Some(u) = updated {
                track_used[ti] = true;
                cluster_used[ci] = true;
                next.push(u);
            }
        }
        for (ti, t) in prev.into_iter().enumerate() {
            if !track_used[ti] && t.missed < cfg.grace_steps {
                next.push(ClusterTrack { missed: t.missed + 1, ..t });
            }
        }
        for (ci, c) in clusters.into_iter().enumerate() {
            if cluster_used[ci] {
                continue;
            }
            next.push(ClusterTrack {
                id: self.next_id,
                closest_point: c.closest_point,
                velocity_estimate: Vec2::ZERO,
                age: 1,
                classification: classes[ci],
                missed: 0,
                points: c.points,
            });
            self.next_id += 1;
        }
        next.sort_by_key(|t| t.id);
        self.tracks = next;
    }
}
