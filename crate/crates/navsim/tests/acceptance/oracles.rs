//! Reference computations written independently of the library code.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use navsim_core::geom::Vec2;

/// Dijkstra over 8-connected cells without corner cutting; returns the
/// optimal (straight, diagonal) step counts.
pub fn dijkstra(occ: &[bool], w: usize, h: usize, s: (usize, usize), g: (usize, usize)) -> Option<(u32, u32)> {
    let blocked = |x: i64, y: i64| x < 0 || y < 0 || x >= w as i64 || y >= h as i64 || occ[y as usize * w + x as usize];
    let key = |c: (u32, u32)| (c.0 as f64 + c.1 as f64 * std::f64::consts::SQRT_2).to_bits();
    let mut best: Vec<Option<(u32, u32)>> = vec![None; w * h];
    let mut heap = BinaryHeap::new();
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
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
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
    None
}

#[derive(Debug, Clone)]
pub enum Shape {
    Disc(Vec2, f64),
    Rect(Vec2, Vec2),
}

pub fn sdf(s: &Shape, p: Vec2) -> f64 {
    match s {
        Shape::Disc(c, r) => ((p.x - c.x).powi(2) + (p.y - c.y).powi(2)).sqrt() - r,
        Shape::Rect(lo, hi) => {
            let qx = (p.x - 0.5 * (lo.x + hi.x)).abs() - 0.5 * (hi.x - lo.x);
            let qy = (p.y - 0.5 * (lo.y + hi.y)).abs() - 0.5 * (hi.y - lo.y);
            (qx.max(0.0).powi(2) + qy.max(0.0).powi(2)).sqrt() + qx.max(qy).min(0.0)
        }
    }
}

/// Sphere-traced ray march to the first surface, capped at `max`.
pub fn march(shapes: &[Shape], o: Vec2, d: Vec2, max: f64) -> f64 {
    let mut t = 0.0;
    for _ in 0..2_000_000 {
        let p = Vec2::new(o.x + t * d.x, o.y + t * d.y);
        let s = shapes.iter().map(|s| sdf(s, p)).fold(f64::INFINITY, f64::min);
        if s < 1e-12 {
            return t.min(max);
        }
        t += s;
        if t >= max {
            return max;
        }
    }
    panic!("ray march did not converge");
}

/// Discounted return to the next terminal, bootstrapped at the stream end.
pub fn monte_carlo(r: &[f64], d: &[bool], boot: f64, gamma: f64, t: usize) -> f64 {
    let mut g = 0.0;
    let mut disc = 1.0;
    for k in t..r.len() {
        g += disc * r[k];
        if d[k] {
            return g;
        }
        disc *= gamma;
    }
    g + disc * boot
}

pub fn td_error(r: &[f64], v: &[f64], d: &[bool], boot: f64, gamma: f64, t: usize) -> f64 {
    let next = if d[t] {
        0.0
    } else if t + 1 < r.len() {
        v[t + 1]
    } else {
        boot
    };
    r[t] + gamma * next - v[t]
}
