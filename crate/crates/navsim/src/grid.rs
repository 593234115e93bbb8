//! Occupancy-grid export: binary PGM plus JSON metadata.

use std::io::Write;

use navsim_core::planner::OccupancyGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub resolution: f64,
    /// World coordinates of the lower-left corner of the bottom image row.
    pub origin: [f64; 2],
    pub width: usize,
    pub height: usize,
    pub inflation_radius: f64,
    pub occupied_cells: usize,
}

impl GridMeta {
    pub fn of(grid: &OccupancyGrid) -> Self {
        Self {
            resolution: grid.resolution,
            origin: [grid.origin.x, grid.origin.y],
            width: grid.width,
            height: grid.height,
            inflation_radius: grid.inflation_radius,
            occupied_cells: grid.occupied_count(),
        }
    }
}

/// Occupied cells are black, free cells white; the top image row is the
/// highest `y`.
pub fn write_pgm<W: Write>(mut w: W, grid: &OccupancyGrid) -> std::io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", grid.width, grid.height)?;
    let mut row = vec![0u8; grid.width];
    for iy in (0..grid.height).rev() {
        for (ix, px) in row.iter_mut().enumerate() {
            *px = if grid.cells[iy * grid.width + ix] { 0 } else { 255 };
        }
        w.write_all(&row)?;
    }
    Ok(())
}
