use std::collections::BinaryHeap;
use std::cmp::Reverse;

use navsim_core::geom::Vec2;
use navsim_core::planner::{astar, astar_cells, running_target, Cell, GlobalPath, OccupancyGrid, PlanError};
use proptest::prelude::*;

/// Plain Dijkstra over (straight, diagonal) step counts. Costs stay below
/// 400 steps, where distinct counts never round to the same f64 value.
fn dijkstra(occ: &[bool], w: usize, h: usize, s: (usize, usize), g: (usize, usize)) -> Option<(u32, u32)> {
    let blocked = |x: i64, y: i64| x < 0 || y < 0 || x >= w as i64 || y >= h as i64 || occ[y as usize * w + x as usize];
    let mut best: Vec<Option<(u32, u32)>> = vec![None; w * h];
    let mut heap = BinaryHeap::new();
    let key = |c: (u32, u32)| (c.0 as f64 + c.1 as f64 * std::f64::consts::SQRT_2).to_bits();
    best[s.1 * w + s.0] = Some((0, 0));
    heap.push(Reverse((key((0, 0)), s.0, s.1)));
    while let Some(Reverse((k, x, y))) = heap.pop() {
        let c = best[y * w + x].unwrap();
        if k != key(c) {
            continue;
        }
        if (x, y) == g {
            return Some(c);
        }
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if blocked(nx, ny) {
                    continue;
                }
                let diag = dx != 0 && dy != 0;
                if diag && (blocked(x as i64 + dx, y as i64) || blocked(x as i64, y as i64 + dy)) {
                    continue;
                }
                let n = if diag { (c.0, c.1 + 1) } else { (c.0 + 1, c.1) };
                let slot = &mut best[ny as usize * w + nx as usize];
                if slot.is_none_or(|o| key(n) < key(o)) {
                    *slot = Some(n);
                    heap.push(Reverse((key(n), nx as usize, ny as usize)));
                }
            }
        }
    }
    None
}

fn grid_from(occ: &[bool], w: usize, h: usize) -> OccupancyGrid {
    let mut g = OccupancyGrid::free(w, h, 1.0, Vec2::ZERO);
    for (i, o) in occ.iter().enumerate() {
        g.set(Cell::new((i % w) as i32, (i / w) as i32), *o);
    }
    g
}

fn scenario() -> impl Strategy<Value = (Vec<bool>, (usize, usize), (usize, usize))> {
    (prop::collection::vec(prop::bool::weighted(0.3), 400), (0..20usize, 0..20usize), (0..20usize, 0..20usize))
        .prop_map(|(mut occ, s, g)| {
            occ[s.1 * 20 + s.0] = false;
            occ[g.1 * 20 + g.0] = false;
            (occ, s, g)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn astar_cost_equals_dijkstra((occ, s, g) in scenario()) {
        let grid = grid_from(&occ, 20, 20);
        let res = astar_cells(&grid, Cell::new(s.0 as i32, s.1 as i32), Cell::new(g.0 as i32, g.1 as i32));
        match (res, dijkstra(&occ, 20, 20, s, g)) {
            (Ok((path, cost)), Some(oracle)) => {
                prop_assert_eq!((cost.straight, cost.diagonal), oracle);
                // the returned path realises the reported cost
                let (mut st, mut dg) = (0, 0);
                for pair in path.windows(2) {
                    let (dx, dy) = ((pair[1].ix - pair[0].ix).abs(), (pair[1].iy - pair[0].iy).abs());
                    prop_assert!(dx <= 1 && dy <= 1 && dx + dy > 0);
                    prop_assert!(!grid.is_occupied(pair[1]));
                    if dx + dy == 2 { dg += 1 } else { st += 1 }
                }
                prop_assert_eq!((st, dg), oracle);
            }
            (Err(PlanError::Unreachable), None) => {}
            (r, o) => prop_assert!(false, "astar {:?} vs dijkstra {:?}", r, o),
        }
    }

    #[test]
    fn running_target_index_rule(n in 2usize..30, h in 0usize..8, px in -5.0f64..35.0, py in -5.0f64..5.0) {
        let path = GlobalPath::new((0..n).map(|i| Vec2::new(i as f64, 0.0)).collect());
        let t = running_target(&path, Vec2::new(px, py), h).unwrap();
        let nearest = (0..n)
            .min_by(|a, b| Vec2::new(*a as f64, 0.0).dist(Vec2::new(px, py)).total_cmp(&Vec2::new(*b as f64, 0.0).dist(Vec2::new(px, py))))
            .unwrap();
        prop_assert_eq!(t.index, (nearest + h).min(n - 1));
        prop_assert_eq!(t.position, Vec2::new(t.index as f64, 0.0));
    }
}

#[test]
fn blocked_goal_is_rejected() {
    let mut g = OccupancyGrid::free(5, 5, 0.5, Vec2::ZERO);
    g.set(Cell::new(4, 4), true);
    assert!(astar(&g, Vec2::new(0.2, 0.2), Vec2::new(2.2, 2.2)).is_err());
}

proptest! {
    #[test]
    fn open_paths_hug_the_straight_line(sx in 0i32..60, sy in 0i32..60, gx in 0i32..60, gy in 0i32..60) {
        let grid = OccupancyGrid::free(60, 60, 0.1, Vec2::ZERO);
        let (cells, _) = astar_cells(&grid, Cell::new(sx, sy), Cell::new(gx, gy)).unwrap();
        let (lx, ly) = ((gx - sx) as f64, (gy - sy) as f64);
        let len = (lx * lx + ly * ly).sqrt().max(1.0);
        for c in cells {
            let off = (lx * (c.iy - sy) as f64 - ly * (c.ix - sx) as f64).abs() / len;
            prop_assert!(off <= 1.0, "cell {c:?} is {off} cells off the line");
        }
    }
}
