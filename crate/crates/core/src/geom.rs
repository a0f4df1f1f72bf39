//! Planar points and disc footprints in the continuous terrain frame.
//!
//! The frame has `x` along columns and `y` along rows, both in meters, with
//! cell `(row, col)` spanning `[col·s, (col+1)·s] × [row·s, (row+1)·s]`.

use std::ops::{Add, Mul, Sub};

use crate::direction::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is
    /// counterclockwise from `self`.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_polar(radius: f64, angle: f64) -> Point {
        Point::new(radius * angle.cos(), radius * angle.sin())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Center of `cell` in meters.
pub fn cell_center(cell: Cell, cell_size: f64) -> Point {
    Point::new(
        (cell.col as f64 + 0.5) * cell_size,
        (cell.row as f64 + 0.5) * cell_size,
    )
}

/// A rock footprint: a closed disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Point,
    pub radius: f64,
}

impl Disc {
    pub const fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn inflated(&self, by: f64) -> Disc {
        Disc::new(self.center, self.radius + by)
    }

    /// True when the disc overlaps the interior of `cell`. Tangency does not
    /// count.
    pub fn intersects_cell(&self, cell: Cell, cell_size: f64) -> bool {
        let x0 = cell.col as f64 * cell_size;
        let y0 = cell.row as f64 * cell_size;
        let nx = self.center.x.clamp(x0, x0 + cell_size);
        let ny = self.center.y.clamp(y0, y0 + cell_size);
        self.center.distance(Point::new(nx, ny)) < self.radius
    }

    /// Shortest distance from the disc center to the segment `a`–`b`.
    pub fn center_to_segment(&self, a: Point, b: Point) -> f64 {
        point_segment_distance(self.center, a, b)
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Length of a polyline.
pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}
