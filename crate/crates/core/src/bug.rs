//! Reactive obstacle avoidance for inter-cell legs (Bug-2).
//!
//! Rocks are discs inflated by a standoff distance. A leg drives straight
//! along its m-line (the segment from start to target) until it hits the
//! inflated union, then follows the union boundary until it meets the m-line
//! again at a point strictly closer to the target, and resumes.
//!
//! Boundary following is exact: the follower walks circle arcs and jumps
//! between discs at their computed intersection points, emitting waypoints
//! no further apart than `step_resolution`.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::geom::{point_segment_distance, polyline_length, Disc, Point};

const ANGLE_EPS: f64 = 1e-12;
const LENGTH_EPS: f64 = 1e-9;
const MAX_EVENTS: usize = 100_000;
const VERTEX_EPS: f64 = 1e-9;
const PROBE_ANGLE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BugParams {
    /// Clearance kept from every rock, in meters.
    pub standoff: f64,
    /// Maximum spacing of waypoints on detoured paths.
    pub step_resolution: f64,
    /// Give up on a single circumnavigation after this many perimeters of
    /// the obstacle cluster.
    pub max_circumnavigation: f64,
}

impl Default for BugParams {
    fn default() -> Self {
        Self {
            standoff: 0.3,
            step_resolution: 0.05,
            max_circumnavigation: 1.25,
        }
    }
}

impl BugParams {
    pub fn validate(&self, cell_size: f64) -> Result<(), String> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.standoff) && pos(self.step_resolution) && pos(self.max_circumnavigation)) {
            return Err("bug parameters must be positive".into());
        }
        if self.standoff >= cell_size / 2.0 {
            return Err(format!(
                "standoff {} must be below half the cell size {}",
                self.standoff,
                cell_size / 2.0
            ));
        }
        Ok(())
    }
}

/// The rover's initial swerve when it meets an obstacle. `Clockwise` passes
/// the obstacle with it on the rover's left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnSense {
    Clockwise,
    CounterClockwise,
}

impl TurnSense {
    /// Angular direction of travel around disc centers (+1 is increasing
    /// polar angle).
    fn orbit_sign(self) -> f64 {
        match self {
            TurnSense::Clockwise => 1.0,
            TurnSense::CounterClockwise => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPath {
    pub waypoints: Vec<Point>,
    pub total_length: f64,
    pub detoured: bool,
    /// Swerve chosen at each obstacle hit, in order.
    pub turns: Vec<TurnSense>,
}

impl ContinuousPath {
    pub fn straight(start: Point, target: Point) -> Self {
        Self {
            waypoints: vec![start, target],
            total_length: start.distance(target),
            detoured: false,
            turns: Vec::new(),
        }
    }

    pub fn start(&self) -> Point {
        self.waypoints[0]
    }

    pub fn end(&self) -> Point {
        *self.waypoints.last().expect("non-empty path")
    }
}

/// Polyline length of a path.
pub fn leg_length(path: &ContinuousPath) -> f64 {
    polyline_length(&path.waypoints)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LegError {
    #[error("target unreachable: boundary following from ({:.3}, {:.3}) found no leave point", hit.x, hit.y)]
    Unreachable { hit: Point },
    #[error("leg start and target coincide")]
    ZeroLength,
    #[error("leg starts inside an inflated obstacle")]
    StartInsideObstacle,
}

/// Plans a leg from `start` to `target` around `rocks`.
pub fn plan_leg(
    rocks: &[Disc],
    start: Point,
    target: Point,
    params: &BugParams,
) -> Result<ContinuousPath, LegError> {
    let total = start.distance(target);
    if total <= LENGTH_EPS {
        return Err(LegError::ZeroLength);
    }
    let discs: Vec<Disc> = rocks.iter().map(|r| r.inflated(params.standoff)).collect();
    if discs.iter().any(|d| start.distance(d.center) < d.radius) {
        return Err(LegError::StartInsideObstacle);
    }
    if discs.iter().all(|d| d.center_to_segment(start, target) >= d.radius) {
        return Ok(ContinuousPath::straight(start, target));
    }

    let mline = MLine {
        start,
        target,
        dir: (target - start) * (1.0 / total),
        len: total,
    };
    let mut follower = Follower {
        discs: &discs,
        mline,
        params,
        waypoints: vec![start],
        turns: Vec::new(),
        events: 0,
    };
    let mut pos = start;
    loop {
        match first_entry(&discs, pos, target) {
            None => {
                follower.line_to(target);
                break;
            }
            Some((k, hit)) => {
                follower.line_to(hit);
                pos = follower.circumnavigate(k, hit)?;
            }
        }
    }

    let waypoints = follower.waypoints;
    let detoured = waypoints
        .iter()
        .any(|&p| point_segment_distance(p, start, target) > params.standoff);
    Ok(ContinuousPath {
        total_length: polyline_length(&waypoints),
        waypoints,
        detoured,
        turns: follower.turns,
    })
}

#[derive(Debug, Clone, Copy)]
struct MLine {
    start: Point,
    target: Point,
    dir: Point,
    len: f64,
}

struct Follower<'a> {
    discs: &'a [Disc],
    mline: MLine,
    params: &'a BugParams,
    waypoints: Vec<Point>,
    turns: Vec<TurnSense>,
    events: usize,
}

enum Event {
    Enter { disc: usize, at: f64 },
    Leave { point: Point },
    BackAtHit,
}

impl Follower<'_> {
    fn push(&mut self, p: Point) {
        if self.waypoints.last().is_none_or(|&q| q.distance(p) > 0.0) {
            self.waypoints.push(p);
        }
    }

    /// Straight segment, subdivided to the waypoint resolution.
    fn line_to(&mut self, p: Point) {
        let from = *self.waypoints.last().expect("path has a start");
        let d = from.distance(p);
        let n = (d / self.params.step_resolution).ceil().max(1.0) as usize;
        for i in 1..n {
            self.push(from + (p - from) * (i as f64 / n as f64));
        }
        self.push(p);
    }

    /// Arc of disc `k` from polar angle `theta` advancing `delta` radians in
    /// orbit direction `sign`, ending exactly at `end`.
    fn arc(&mut self, k: usize, theta: f64, delta: f64, sign: f64, end: Point) {
        let d = self.discs[k];
        let n = (d.radius * delta / self.params.step_resolution).ceil().max(1.0) as usize;
        for i in 1..n {
            let a = theta + sign * delta * (i as f64 / n as f64);
            self.push(d.center + Point::from_polar(d.radius, a));
        }
        self.push(end);
    }

    /// Follows the inflated boundary starting at `hit` on disc `k`. Returns
    /// the leave point on the m-line.
    fn circumnavigate(&mut self, k_hit: usize, hit: Point) -> Result<Point, LegError> {
        let disc = self.discs[k_hit];
        let sense = if self.mline.dir.cross(disc.center - hit) > 0.0 {
            TurnSense::Clockwise
        } else {
            TurnSense::CounterClockwise
        };
        self.turns.push(sense);
        let sign = sense.orbit_sign();
        let hit_dist = hit.distance(self.mline.target);
        let budget = self.params.max_circumnavigation * cluster_perimeter(self.discs, k_hit);
        let theta_hit = (hit - disc.center).angle();

        let mut k = k_hit;
        let mut theta = theta_hit;
        let mut travelled = 0.0;
        loop {
            self.events += 1;
            if self.events > MAX_EVENTS {
                return Err(LegError::Unreachable { hit });
            }
            let (delta, event) = self.next_event(k, theta, sign, k_hit, theta_hit, hit_dist, travelled);
            let d = self.discs[k];
            if travelled + d.radius * delta > budget {
                return Err(LegError::Unreachable { hit });
            }
            let end = match &event {
                Event::Leave { point } => *point,
                Event::BackAtHit => hit,
                Event::Enter { at, .. } => d.center + Point::from_polar(d.radius, *at),
            };
            self.arc(k, theta, delta, sign, end);
            travelled += d.radius * delta;
            match event {
                Event::Leave { point } => return Ok(point),
                Event::BackAtHit => return Err(LegError::Unreachable { hit }),
                Event::Enter { disc, .. } => {
                    k = disc;
                    theta = (end - self.discs[k].center).angle();
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn next_event(
        &self,
        k: usize,
        theta: f64,
        sign: f64,
        k_hit: usize,
        theta_hit: f64,
        hit_dist: f64,
        travelled: f64,
    ) -> (f64, Event) {
        let d = self.discs[k];
        let ahead = |a: f64| wrap_angle(sign * (a - theta));

        // Full orbit of the current disc with nothing else happening.
        let mut best = (TAU, Event::BackAtHit);

        for (j, other) in self.discs.iter().enumerate() {
            if j == k {
                continue;
            }
            let sep = d.center.distance(other.center);
            if sep >= d.radius + other.radius || sep <= (d.radius - other.radius).abs() {
                continue;
            }
            let base = (other.center - d.center).angle();
            let cos_w = (d.radius * d.radius + sep * sep - other.radius * other.radius) / (2.0 * d.radius * sep);
            let half = cos_w.clamp(-1.0, 1.0).acos();
            let at = base - sign * half;
            let mut delta = ahead(at);
            if delta <= VERTEX_EPS || delta >= TAU - VERTEX_EPS {
                // At a vertex of the union: enter now only if the arc ahead
                // runs inside the other disc.
                let probe = d.center + Point::from_polar(d.radius, theta + sign * PROBE_ANGLE);
                delta = if probe.distance(other.center) < other.radius { 0.0 } else { TAU };
            }
            if delta < best.0 {
                best = (delta, Event::Enter { disc: j, at });
            }
        }

        for q in circle_line_points(&d, &self.mline) {
            let delta = ahead((q - d.center).angle());
            // Leaving wins ties so that a leave point sitting on a vertex of
            // the union is not skipped.
            let delta = if delta >= TAU - ANGLE_EPS { 0.0 } else { delta };
            if delta > best.0 + ANGLE_EPS {
                continue;
            }
            let closer = q.distance(self.mline.target) < hit_dist - LENGTH_EPS;
            let exits = self.mline.dir.dot(q - d.center) > 0.0;
            if closer && exits {
                best = (delta, Event::Leave { point: q });
            }
        }

        if k == k_hit {
            let mut delta = ahead(theta_hit);
            if delta <= ANGLE_EPS && travelled <= LENGTH_EPS {
                delta = TAU;
            }
            if delta <= best.0 {
                best = (delta, Event::BackAtHit);
            }
        }
        best
    }
}

/// Maps an angle to `[0, 2π)`.
fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Points where the circle of `d` meets the m-line segment.
fn circle_line_points(d: &Disc, m: &MLine) -> Vec<Point> {
    let Some((t1, t2)) = ray_circle(d, m.start, m.dir) else {
        return Vec::new();
    };
    [t1, t2]
        .into_iter()
        .filter(|t| (-LENGTH_EPS..=m.len + LENGTH_EPS).contains(t))
        .map(|t| m.start + m.dir * t)
        .collect()
}

/// Parameters `t1 ≤ t2` where `origin + t·dir` (unit `dir`) crosses the
/// circle, if it does so transversally.
fn ray_circle(d: &Disc, origin: Point, dir: Point) -> Option<(f64, f64)> {
    let oc = origin - d.center;
    let b = dir.dot(oc);
    let c = oc.dot(oc) - d.radius * d.radius;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

/// First disc the segment `pos → target` enters, and the entry point.
fn first_entry(discs: &[Disc], pos: Point, target: Point) -> Option<(usize, Point)> {
    let len = pos.distance(target);
    if len <= LENGTH_EPS {
        return None;
    }
    let dir = (target - pos) * (1.0 / len);
    let mut best: Option<(usize, f64)> = None;
    for (j, d) in discs.iter().enumerate() {
        let Some((t1, t2)) = ray_circle(d, pos, dir) else {
            continue;
        };
        if t2 <= LENGTH_EPS || t1 >= len {
            continue;
        }
        let t = t1.max(0.0);
        if best.is_none_or(|(_, bt)| t < bt) {
            best = Some((j, t));
        }
    }
    best.map(|(j, t)| (j, pos + dir * t))
}

/// Sum of circumferences of the overlap cluster containing disc `k`. Never
/// less than the cluster's boundary length.
fn cluster_perimeter(discs: &[Disc], k: usize) -> f64 {
    let mut seen = vec![false; discs.len()];
    let mut stack = vec![k];
    seen[k] = true;
    let mut total = 0.0;
    while let Some(i) = stack.pop() {
        total += 2.0 * PI * discs[i].radius;
        for (j, d) in discs.iter().enumerate() {
            if !seen[j] && discs[i].center.distance(d.center) < discs[i].radius + d.radius {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    total
}
