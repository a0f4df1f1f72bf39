//! Reference implementations used to cross-check the library. None of these
//! call the library's planning, geometry or energy code.
#![allow(dead_code)]

use std::collections::VecDeque;

use myopic_cpp::costs::{CostWeights, DemScale, EnergyParams};
use myopic_cpp::metrics::EpisodeResult;
use myopic_cpp::terrain::HeightField;
use myopic_cpp::world::{CellState, GridWorld};
use myopic_cpp::{Cell, Direction, Disc, Point};

/// Clockwise compass table: (drow, dcol, degrees).
pub const COMPASS: [(i64, i64, f64); 8] = [
    (-1, 0, 0.0),
    (-1, 1, 45.0),
    (0, 1, 90.0),
    (1, 1, 135.0),
    (1, 0, 180.0),
    (1, -1, 225.0),
    (0, -1, 270.0),
    (-1, -1, 315.0),
];

pub fn compass_index(d: Direction) -> usize {
    (d.degrees() / 45.0).round() as usize % 8
}

fn neighbor(cell: Cell, k: usize, rows: usize, cols: usize) -> Option<Cell> {
    let (dr, dc, _) = COMPASS[k];
    let r = cell.row as i64 + dr;
    let c = cell.col as i64 + dc;
    (r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols).then(|| Cell::new(r as usize, c as usize))
}

fn step_len(k: usize) -> f64 {
    if k % 2 == 1 {
        2f64.sqrt()
    } else {
        1.0
    }
}

fn compass_of(from: Cell, to: Cell) -> usize {
    let dr = to.row as i64 - from.row as i64;
    let dc = to.col as i64 - from.col as i64;
    COMPASS
        .iter()
        .position(|&(r, c, _)| r == dr && c == dc)
        .expect("adjacent cells")
}

/// Exhaustive argmin over the 8 neighbors by the same rules the planner
/// promises: admissible = sensed Free/Visited and not steeper than the
/// limit; ties go to the smaller turn, then to the earlier cell in a
/// clockwise scan that starts at the heading.
pub fn brute_force_choice(
    world: &GridWorld,
    at: Cell,
    heading: Direction,
    w: &CostWeights,
    slope_limit: f64,
) -> Option<(Cell, f64)> {
    let field = world.field();
    let h = compass_index(heading);
    let cs = field.cell_size();
    let mut scored: Vec<(f64, usize, usize, Cell)> = Vec::new();
    for scan in 0..8 {
        let k = (h + scan) % 8;
        let Some(to) = neighbor(at, k, world.rows(), world.cols()) else {
            continue;
        };
        if !matches!(world.state(to), CellState::Free | CellState::Visited) {
            continue;
        }
        let dh = field.get(to).unwrap() - field.get(at).unwrap();
        let run = step_len(k) * cs;
        if (dh.abs() / run).atan().to_degrees() > slope_limit {
            continue;
        }
        let turn = scan.min(8 - scan);
        let dem = match w.dem_scale {
            DemScale::Raw => dh.abs(),
            DemScale::PerCellSize => dh.abs() / cs,
        };
        let v = world.visit_count(to) as f64;
        let cost = w.alpha * (step_len(k) + w.turn_weight * turn as f64 + w.mc_visited * v) + w.beta * dem;
        scored.push((cost, turn, scan, to));
    }
    scored
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))
        .map(|(c, _, _, cell)| (cell, c))
}

/// Per-step energies recomputed from the step log: `(forward, rotate)`.
pub fn replay_energy(result: &EpisodeResult, field: &HeightField, p: &EnergyParams) -> Vec<(f64, f64)> {
    result
        .steps
        .iter()
        .map(|s| {
            let k = compass_of(s.from_cell, s.to_cell);
            let h0 = compass_index(s.heading_before) as f64 * 45.0;
            let raw = (COMPASS[k].2 - h0).abs();
            let dtheta = raw.min(360.0 - raw);
            let rise = field.get(s.to_cell).unwrap() - field.get(s.from_cell).unwrap();
            let run = step_len(k) * field.cell_size();
            let grade = (rise / run).max(0.0);
            (p.e_forward * s.distance * (1.0 + p.k_grade * grade), p.e_rotate * dtheta)
        })
        .collect()
}

/// Legal cell-state changes.
pub fn legal(from: CellState, to: CellState) -> bool {
    use CellState::*;
    matches!(
        (from, to),
        (Unknown, Free) | (Unknown, Obstacle) | (Free, Visited) | (Visited, Visited) | (Free, Obstacle)
    )
}

/// Replays the transition log from an all-Unknown grid. Returns the final
/// states, or the index of the first illegal or inconsistent transition.
pub fn replay_states(result: &EpisodeResult) -> Result<Vec<CellState>, usize> {
    let snap = &result.final_states;
    let mut states = vec![CellState::Unknown; snap.rows * snap.cols];
    for (i, t) in result.transitions.iter().enumerate() {
        let idx = t.cell.row * snap.cols + t.cell.col;
        if states[idx] != t.from || !legal(t.from, t.to) {
            return Err(i);
        }
        states[idx] = t.to;
    }
    Ok(states)
}

/// Straight-line distance from `p` to the segment `a`–`b`.
pub fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let len2 = abx * abx + aby * aby;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.x + t * abx, a.y + t * aby);
    ((p.x - qx).powi(2) + (p.y - qy).powi(2)).sqrt()
}

/// Smallest distance from any polyline segment to any disc edge.
pub fn clearance(waypoints: &[Point], rocks: &[Disc]) -> f64 {
    let mut best = f64::INFINITY;
    for w in waypoints.windows(2) {
        for r in rocks {
            best = best.min(seg_dist(r.center, w[0], w[1]) - r.radius);
        }
    }
    best
}

/// Whether `target` can be reached from `start` without entering any of
/// the (already inflated) discs, by BFS over a fine 4-connected lattice.
pub fn lattice_reachable(discs: &[Disc], start: Point, target: Point, res: f64) -> bool {
    let pad = 1.0 + discs.iter().map(|d| d.radius).fold(0.0, f64::max);
    let xs = discs.iter().map(|d| d.center.x).chain([start.x, target.x]);
    let ys = discs.iter().map(|d| d.center.y).chain([start.y, target.y]);
    let x0 = xs.clone().fold(f64::INFINITY, f64::min) - pad;
    let x1 = xs.fold(f64::NEG_INFINITY, f64::max) + pad;
    let y0 = ys.clone().fold(f64::INFINITY, f64::min) - pad;
    let y1 = ys.fold(f64::NEG_INFINITY, f64::max) + pad;
    let nx = ((x1 - x0) / res).ceil() as usize + 1;
    let ny = ((y1 - y0) / res).ceil() as usize + 1;
    let free = |i: usize, j: usize| {
        let (x, y) = (x0 + i as f64 * res, y0 + j as f64 * res);
        discs
            .iter()
            .all(|d| ((x - d.center.x).powi(2) + (y - d.center.y).powi(2)).sqrt() > d.radius)
    };
    let node = |p: Point| (((p.x - x0) / res).round() as usize, ((p.y - y0) / res).round() as usize);
    let (s, t) = (node(start), node(target));
    assert!(free(s.0, s.1) && free(t.0, t.1), "endpoints must lie in free space");
    let mut seen = vec![false; nx * ny];
    let mut queue = VecDeque::from([s]);
    seen[s.1 * nx + s.0] = true;
    while let Some((i, j)) = queue.pop_front() {
        if (i, j) == t {
            return true;
        }
        let nbs = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        for (a, b) in nbs {
            if a < nx && b < ny && !seen[b * nx + a] && free(a, b) {
                seen[b * nx + a] = true;
                queue.push_back((a, b));
            }
        }
    }
    false
}

/// Whether a scene is safe to compare against a lattice: every pair of
/// discs either overlaps by a clear margin or leaves a clear gap, and both
/// endpoints sit well outside every disc.
pub fn non_degenerate(discs: &[Disc], start: Point, target: Point, margin: f64) -> bool {
    for (i, a) in discs.iter().enumerate() {
        for b in &discs[i + 1..] {
            let d = ((a.center.x - b.center.x).powi(2) + (a.center.y - b.center.y).powi(2)).sqrt();
            let sum = a.radius + b.radius;
            if d >= sum {
                if d - sum < margin {
                    return false;
                }
            } else if d > (a.radius - b.radius).abs() {
                // Half the chord through the two crossing points.
                let x = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
                let h2 = a.radius * a.radius - x * x;
                if h2 < (margin / 2.0).powi(2) {
                    return false;
                }
            } else if (a.radius - b.radius).abs() - d < margin {
                return false;
            }
        }
    }
    discs.iter().all(|d| {
        let far = |p: Point| ((p.x - d.center.x).powi(2) + (p.y - d.center.y).powi(2)).sqrt() > d.radius + margin;
        far(start) && far(target)
    })
}
