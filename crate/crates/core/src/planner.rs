//! Occupancy-grid rasterization of the static map, 8-connected A*, and the
//! running target point that advances along the planned path.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};
use core::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{ceil, floor, sqrt, Vec2};
use crate::sim::WorldConfig;

pub const DEFAULT_RESOLUTION: f64 = 0.1;
pub const DEFAULT_HORIZON: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("start or goal lies in an occupied or out-of-bounds cell")]
    InvalidEndpoint,
    #[error("goal is unreachable from start")]
    Unreachable,
    #[error("global path is empty")]
    EmptyPath,
}

/// Integer grid coordinate (column, row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub ix: i32,
    pub iy: i32,
}

impl Cell {
    pub const fn new(ix: i32, iy: i32) -> Self {
        Self { ix, iy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub resolution: f64,
    /// World coordinates of the lower-left corner of cell (0, 0).
    pub origin: Vec2,
    pub width: usize,
    pub height: usize,
    pub inflation_radius: f64,
    /// Row-major, `cells[iy * width + ix]`; `true` is occupied.
    pub cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn free(width: usize, height: usize, resolution: f64, origin: Vec2) -> Self {
        Self {
            resolution,
            origin,
            width,
            height,
            inflation_radius: 0.0,
            cells: alloc::vec![false; width * height],
        }
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.ix >= 0 && c.iy >= 0 && (c.ix as usize) < self.width && (c.iy as usize) < self.height
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_occupied(&self, c: Cell) -> bool {
        !self.in_bounds(c) || self.cells[c.iy as usize * self.width + c.ix as usize]
    }

    pub fn set(&mut self, c: Cell, occupied: bool) {
        if self.in_bounds(c) {
            let w = self.width;
            self.cells[c.iy as usize * w + c.ix as usize] = occupied;
        }
    }

    pub fn cell_of(&self, p: Vec2) -> Cell {
        Cell::new(
            floor((p.x - self.origin.x) / self.resolution) as i32,
            floor((p.y - self.origin.y) / self.resolution) as i32,
        )
    }

    pub fn center(&self, c: Cell) -> Vec2 {
        Vec2::new(
            self.origin.x + (c.ix as f64 + 0.5) * self.resolution,
            self.origin.y + (c.iy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn is_free_point(&self, p: Vec2) -> bool {
        !self.is_occupied(self.cell_of(p))
    }

    /// True when the straight segment `a → b` crosses only free cells
    /// (sampled at a quarter cell).
    pub fn line_of_sight(&self, a: Vec2, b: Vec2) -> bool {
        let len = a.dist(b);
        let n = ceil(len / (0.25 * self.resolution)).max(1.0) as usize;
        (0..=n).all(|k| self.is_free_point(a + (b - a) * (k as f64 / n as f64)))
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }
}

/// Rasterizes static obstacles inflated by `inflation_radius`. A cell is
/// occupied when its center lies within the inflated obstacle.
pub fn rasterize(config: &WorldConfig, resolution: f64, inflation_radius: f64) -> OccupancyGrid {
    assert!(resolution > 0.0, "resolution must be positive");
    let b = config.bounds;
    let width = ceil(b.width() / resolution - 1e-9).max(1.0) as usize;
    let height = ceil(b.height() / resolution - 1e-9).max(1.0) as usize;
    let mut grid = OccupancyGrid::free(width, height, resolution, b.min);
    grid.inflation_radius = inflation_radius;
    for iy in 0..height {
        for ix in 0..width {
            let c = Cell::new(ix as i32, iy as i32);
            let p = grid.center(c);
            if config.obstacles.iter().any(|o| o.signed_distance(p) <= inflation_radius) {
                grid.cells[iy * width + ix] = true;
            }
        }
    }
    grid
}

/// Exact path cost `straight + diagonal·√2` in cell units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OctileCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl OctileCost {
    pub fn value(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }

    fn step(self, diagonal: bool) -> Self {
        if diagonal {
            Self { diagonal: self.diagonal + 1, ..self }
        } else {
            Self { straight: self.straight + 1, ..self }
        }
    }
}

impl Ord for OctileCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of ds + dd·√2, decided in integers
        let ds = self.straight as i64 - other.straight as i64;
        let dd = self.diagonal as i64 - other.diagonal as i64;
        let sign = |x: i64| x.cmp(&0);
        match (sign(ds), sign(dd)) {
            (a, b) if a == b => a,
            (a, Ordering::Equal) => a,
            (Ordering::Equal, b) => b,
            (Ordering::Greater, _) => (ds * ds).cmp(&(2 * dd * dd)),
            (_, _) => (2 * dd * dd).cmp(&(ds * ds)),
        }
    }
}

impl PartialOrd for OctileCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS: [(i32, i32); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Free 8-neighbors of `c`. Diagonal moves must not cut an occupied corner.
pub fn neighbors(grid: &OccupancyGrid, c: Cell) -> impl Iterator<Item = (Cell, bool)> + '_ {
    NEIGHBORS.iter().filter_map(move |&(dx, dy)| {
        let n = Cell::new(c.ix + dx, c.iy + dy);
        if grid.is_occupied(n) {
            return None;
        }
        let diagonal = dx != 0 && dy != 0;
        if diagonal
            && (grid.is_occupied(Cell::new(c.ix + dx, c.iy)) || grid.is_occupied(Cell::new(c.ix, c.iy + dy)))
        {
            return None;
        }
        Some((n, diagonal))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* between grid cells with a Euclidean heuristic and octile step costs.
///
/// Among paths of equal octile cost the one whose cells stay closest to the
/// start-goal line wins, so open-space paths interleave straight and
/// diagonal steps instead of taking a single long dogleg.
pub fn astar_cells(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<(Vec<Cell>, OctileCost), PlanError> {
    if grid.is_occupied(start) || grid.is_occupied(goal) {
        return Err(PlanError::InvalidEndpoint);
    }
    let idx = |c: Cell| c.iy as usize * grid.width + c.ix as usize;
    let h = |c: Cell| {
        let dx = (c.ix - goal.ix) as f64;
        let dy = (c.iy - goal.iy) as f64;
        sqrt(dx * dx + dy * dy)
    };
    let (lx, ly) = ((goal.ix - start.ix) as f64, (goal.iy - start.iy) as f64);
    let line_len = sqrt(lx * lx + ly * ly).max(1.0);
    let off_line = |c: Cell| (lx * (c.iy - start.iy) as f64 - ly * (c.ix - start.ix) as f64).abs() / line_len;
    let n = grid.width * grid.height;
    let mut g: Vec<Option<(OctileCost, f64)>> = alloc::vec![None; n];
    let mut parent: Vec<u32> = alloc::vec![u32::MAX; n];
    let mut open = BinaryHeap::new();
    let mut seq: u64 = 0;
    g[idx(start)] = Some((OctileCost::default(), 0.0));
    open.push(Reverse((Key(h(start)), Key(0.0), seq, start)));
    while let Some(Reverse((Key(f), Key(dev), _, c))) = open.pop() {
        let (gc, gdev) = g[idx(c)].expect("queued cells have a cost");
        if f > gc.value() + h(c) || dev > gdev {
            // stale entry superseded by a cheaper one
            continue;
        }
        if c == goal {
            let mut path = alloc::vec![goal];
            let mut cur = idx(goal);
            while parent[cur] != u32::MAX {
                cur = parent[cur] as usize;
                path.push(Cell::new((cur % grid.width) as i32, (cur / grid.width) as i32));
            }
            path.reverse();
            return Ok((path, gc));
        }
        for (nb, diag) in neighbors(grid, c) {
            let cand = gc.step(diag);
            let cand_dev = gdev + off_line(nb);
            let slot = &mut g[idx(nb)];
            let better = match *slot {
                None => true,
                Some((old, old_dev)) => cand < old || (cand == old && cand_dev < old_dev),
            };
            if better {
                *slot = Some((cand, cand_dev));
                parent[idx(nb)] = idx(c) as u32;
                seq += 1;
                open.push(Reverse((Key(cand.value() + h(nb)), Key(cand_dev), seq, nb)));
            }
        }
    }
    Err(PlanError::Unreachable)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalPath {
    pub waypoints: Vec<Vec2>,
    pub cumulative_length: Vec<f64>,
}

impl GlobalPath {
    pub fn new(waypoints: Vec<Vec2>) -> Self {
        let mut cumulative_length = Vec::with_capacity(waypoints.len());
        let mut acc = 0.0;
        for (i, w) in waypoints.iter().enumerate() {
            if i > 0 {
                acc += w.dist(waypoints[i - 1]);
            }
            cumulative_length.push(acc);
        }
        Self { waypoints, cumulative_length }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.cumulative_length.last().copied().unwrap_or(0.0)
    }

    /// Length after greedy line-of-sight shortcutting on `grid`.
    pub fn shortcut_length(&self, grid: &OccupancyGrid) -> f64 {
        if self.waypoints.len() < 2 {
            return 0.0;
        }
        let last = self.waypoints.len() - 1;
        let mut i = 0;
        let mut total = 0.0;
        while i < last {
            let mut j = last;
            while j > i + 1 && !grid.line_of_sight(self.waypoints[i], self.waypoints[j]) {
                j -= 1;
            }
            total += self.waypoints[i].dist(self.waypoints[j]);
            i = j;
        }
        total
    }
}

/// Plans a metric path: cell centers from start to goal, then the exact goal.
pub fn astar(grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<GlobalPath, PlanError> {
    let (cells, _) = astar_cells(grid, grid.cell_of(start), grid.cell_of(goal))?;
    let mut waypoints: Vec<Vec2> = cells.iter().map(|c| grid.center(*c)).collect();
    if waypoints.last() != Some(&goal) {
        waypoints.push(goal);
    }
    Ok(GlobalPath::new(waypoints))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPoint {
    pub position: Vec2,
    /// World-frame tangent angle of the path at `index`.
    pub path_direction: f64,
    pub index: usize,
}

/// Index of the waypoint nearest to `p`; the lowest index wins ties.
pub fn nearest_index(path: &GlobalPath, p: Vec2) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, w) in path.waypoints.iter().enumerate() {
        let d = w.dist(p);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Tangent angle of the path at waypoint `i`.
pub fn path_direction(path: &GlobalPath, i: usize) -> f64 {
    let n = path.waypoints.len();
    if n < 2 {
        return 0.0;
    }
    let (a, b) = if i + 1 < n { (i, i + 1) } else { (n - 2, n - 1) };
    (path.waypoints[b] - path.waypoints[a]).angle()
}

/// The waypoint `horizon` indices past the nearest one, clamped to the end.
pub fn running_target(path: &GlobalPath, agent_pos: Vec2, horizon: usize) -> Result<TargetPoint, PlanError> {
    let nearest = nearest_index(path, agent_pos).ok_or(PlanError::EmptyPath)?;
    let index = (nearest + horizon).min(path.waypoints.len() - 1);
    Ok(TargetPoint {
        position: path.waypoints[index],
        path_direction: path_direction(path, index),
        index,
    })
}
