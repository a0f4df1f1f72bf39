//! Eight-way compass headings on the cell grid.
//!
//! Rows grow southward and columns grow eastward, so `N` is `(-1, 0)` in
//! `(row, col)` offsets. Angles are compass degrees measured clockwise from
//! north.

use std::fmt;
use std::str::FromStr;

/// A grid cell addressed as `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// The neighbor one step in `dir`, or `None` if it falls outside a
    /// `rows × cols` grid.
    pub fn step(self, dir: Direction, rows: usize, cols: usize) -> Option<Cell> {
        let (dr, dc) = dir.offset();
        let r = self.row as isize + dr;
        let c = self.col as isize + dc;
        if r < 0 || c < 0 || r as usize >= rows || c as usize >= cols {
            None
        } else {
            Some(Cell::new(r as usize, c as usize))
        }
    }

    /// Direction from `self` to an 8-adjacent `other`.
    pub fn direction_to(self, other: Cell) -> Option<Direction> {
        let dr = other.row as isize - self.row as isize;
        let dc = other.col as isize - self.col as isize;
        Direction::from_offset(dr, dc)
    }

    pub fn is_adjacent(self, other: Cell) -> bool {
        self.direction_to(other).is_some()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Direction {
    /// All directions in clockwise order starting at north.
    pub const ALL: [Direction; 8] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i % 8]
    }

    pub fn degrees(self) -> f64 {
        45.0 * self.index() as f64
    }

    /// Parses a multiple of 45° (any sign, any number of turns).
    pub fn from_degrees(deg: f64) -> Option<Direction> {
        let steps = deg / 45.0;
        if !steps.is_finite() || steps.fract() != 0.0 {
            return None;
        }
        Some(Self::from_index((steps as i64).rem_euclid(8) as usize))
    }

    /// `(d_row, d_col)`.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::N => (-1, 0),
            Direction::NE => (-1, 1),
            Direction::E => (0, 1),
            Direction::SE => (1, 1),
            Direction::S => (1, 0),
            Direction::SW => (1, -1),
            Direction::W => (0, -1),
            Direction::NW => (-1, -1),
        }
    }

    pub fn from_offset(dr: isize, dc: isize) -> Option<Direction> {
        Self::ALL.into_iter().find(|d| d.offset() == (dr, dc))
    }

    pub fn is_diagonal(self) -> bool {
        self.index() % 2 == 1
    }

    /// Step length in cell units: 1 for cardinal moves, √2 for diagonals.
    pub fn step_length(self) -> f64 {
        if self.is_diagonal() {
            std::f64::consts::SQRT_2
        } else {
            1.0
        }
    }

    /// Rotate clockwise by `steps` × 45°.
    pub fn rotated_cw(self, steps: usize) -> Direction {
        Self::from_index(self.index() + steps)
    }

    /// Shortest-way heading change in 45° increments, 0 to 4.
    pub fn turn_steps(self, other: Direction) -> u32 {
        let d = (other.index() + 8 - self.index()) % 8;
        d.min(8 - d) as u32
    }

    /// Shortest-way heading change in degrees, 0 to 180.
    pub fn turn_degrees(self, other: Direction) -> f64 {
        45.0 * self.turn_steps(other) as f64
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::N => "N",
            Direction::NE => "NE",
            Direction::E => "E",
            Direction::SE => "SE",
            Direction::S => "S",
            Direction::SW => "SW",
            Direction::W => "W",
            Direction::NW => "NW",
        };
        f.write_str(s)
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        if let Some(d) = Self::ALL.into_iter().find(|d| d.to_string() == upper) {
            return Ok(d);
        }
        upper
            .parse::<f64>()
            .ok()
            .and_then(Direction::from_degrees)
            .ok_or_else(|| format!("not a compass direction: {s}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turn_steps_is_shortest_way() {
        assert_eq!(Direction::N.turn_steps(Direction::N), 0);
        assert_eq!(Direction::N.turn_steps(Direction::NW), 1);
        assert_eq!(Direction::N.turn_steps(Direction::S), 4);
        assert_eq!(Direction::E.turn_steps(Direction::NW), 3);
        for a in Direction::ALL {
            for b in Direction::ALL {
                assert_eq!(a.turn_steps(b), b.turn_steps(a));
            }
        }
    }

    #[test]
    fn offsets_round_trip() {
        for d in Direction::ALL {
            let (dr, dc) = d.offset();
            assert_eq!(Direction::from_offset(dr, dc), Some(d));
        }
        assert_eq!(Direction::from_offset(0, 0), None);
        assert_eq!(Direction::from_offset(2, 0), None);
    }

    #[test]
    fn parse_names_and_degrees() {
        assert_eq!("ne".parse::<Direction>().unwrap(), Direction::NE);
        assert_eq!("270".parse::<Direction>().unwrap(), Direction::W);
        assert_eq!("-45".parse::<Direction>().unwrap(), Direction::NW);
        assert!("30".parse::<Direction>().is_err());
    }

    #[test]
    fn corner_steps_leave_grid() {
        let c = Cell::new(0, 0);
        assert_eq!(c.step(Direction::N, 3, 3), None);
        assert_eq!(c.step(Direction::SE, 3, 3), Some(Cell::new(1, 1)));
        assert_eq!(Cell::new(2, 2).step(Direction::E, 3, 3), None);
    }
}
