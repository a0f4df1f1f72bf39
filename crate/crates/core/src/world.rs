//! Grid decomposition, the four-state cell machine, myopic 8-neighbor
//! sensing, and coverage bookkeeping.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::direction::{Cell, Direction};
use crate::geom::{cell_center, Disc, Point};
use crate::terrain::HeightField;

pub const DEFAULT_SLOPE_LIMIT_DEG: f64 = 25.0;

/// Random rocks take a radius in this range, as a fraction of the cell size.
const ROCK_RADIUS_RANGE: (f64, f64) = (0.2, 0.4);
/// Clearance kept between a random rock and its cell's edges.
const ROCK_EDGE_MARGIN: f64 = 0.02;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("obstacle fraction {0} must lie in [0, 1)")]
    InvalidFraction(f64),
    #[error("cannot place {requested} obstacles on {available} free cells while keeping the start clear")]
    TooManyObstacles { requested: usize, available: usize },
    #[error("cell {0} is outside the grid")]
    OutOfBounds(Cell),
    #[error("start cell {0} is blocked")]
    StartBlocked(Cell),
    #[error("cannot visit {cell}: state is {state:?}")]
    IllegalVisit { cell: Cell, state: CellState },
    #[error("illegal transition {from:?} -> {to:?} at {cell}")]
    IllegalTransition {
        cell: Cell,
        from: CellState,
        to: CellState,
    },
    #[error("malformed snapshot at line {line}: {reason}")]
    MalformedSnapshot { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Unknown,
    Free,
    Obstacle,
    Visited,
}

impl CellState {
    /// Whether `self -> to` is a legal edge of the cell state machine.
    /// `Free -> Obstacle` is allowed for cells the obstacle-avoidance layer
    /// reports as unreachable.
    pub fn can_become(self, to: CellState) -> bool {
        use CellState::*;
        matches!(
            (self, to),
            (Unknown, Free) | (Unknown, Obstacle) | (Free, Visited) | (Visited, Visited) | (Free, Obstacle)
        )
    }

    pub fn symbol(self) -> char {
        match self {
            CellState::Unknown => '?',
            CellState::Free => '.',
            CellState::Obstacle => '#',
            CellState::Visited => '+',
        }
    }

    pub fn from_symbol(c: char) -> Option<CellState> {
        match c {
            '?' => Some(CellState::Unknown),
            '.' => Some(CellState::Free),
            '#' => Some(CellState::Obstacle),
            '+' => Some(CellState::Visited),
            _ => None,
        }
    }
}

/// Outcome of sensing one neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensedClass {
    Free,
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub cell: Cell,
    pub from: CellState,
    pub to: CellState,
}

/// Discrete cell, compass heading, and continuous pose `(x, y, theta°)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoverState {
    pub cell: Cell,
    pub heading: Direction,
    pub pose: Point,
    pub theta: f64,
}

impl RoverState {
    pub fn at(cell: Cell, heading: Direction, cell_size: f64) -> Self {
        Self {
            cell,
            heading,
            pose: cell_center(cell, cell_size),
            theta: heading.degrees(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    field: Arc<HeightField>,
    states: Vec<CellState>,
    visit_counts: Vec<u32>,
    rocks: Vec<Disc>,
    rock_cells: Vec<bool>,
    slope_limit: f64,
    rng_seed: u64,
    transitions: Vec<Transition>,
}

impl GridWorld {
    /// Decomposes `field` into cells and scatters `⌊fraction·n⌋` random rocks
    /// on distinct cells, never on `start`.
    pub fn decompose(
        field: Arc<HeightField>,
        obstacle_fraction: f64,
        seed: u64,
        start: Cell,
    ) -> Result<Self, WorldError> {
        Self::decompose_with(field, &[], obstacle_fraction, seed, start)
    }

    /// Like [`GridWorld::decompose`], with `fixed_rocks` (from the terrain
    /// description) placed first. Random rocks avoid cells they touch.
    pub fn decompose_with(
        field: Arc<HeightField>,
        fixed_rocks: &[Disc],
        obstacle_fraction: f64,
        seed: u64,
        start: Cell,
    ) -> Result<Self, WorldError> {
        if !(0.0..1.0).contains(&obstacle_fraction) {
            return Err(WorldError::InvalidFraction(obstacle_fraction));
        }
        if !field.contains(start) {
            return Err(WorldError::OutOfBounds(start));
        }
        let (rows, cols, cs) = (field.rows(), field.cols(), field.cell_size());
        let n = rows * cols;
        let mut rock_cells = vec![false; n];
        for rock in fixed_rocks {
            mark_rock_cells(&mut rock_cells, rock, rows, cols, cs);
        }

        let requested = (obstacle_fraction * n as f64 + 1e-9).floor() as usize;
        let candidates: Vec<usize> = (0..n)
            .filter(|&i| i != start.row * cols + start.col && !rock_cells[i])
            .collect();
        if requested > candidates.len() {
            return Err(WorldError::TooManyObstacles {
                requested,
                available: candidates.len(),
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen: Vec<usize> = sample(&mut rng, candidates.len(), requested)
            .into_iter()
            .map(|k| candidates[k])
            .collect();
        chosen.sort_unstable();

        let mut rocks = fixed_rocks.to_vec();
        for idx in chosen {
            let cell = Cell::new(idx / cols, idx % cols);
            let rock = random_rock_in(cell, cs, &mut rng);
            mark_rock_cells(&mut rock_cells, &rock, rows, cols, cs);
            rocks.push(rock);
        }

        Ok(Self {
            field,
            states: vec![CellState::Unknown; n],
            visit_counts: vec![0; n],
            rocks,
            rock_cells,
            slope_limit: DEFAULT_SLOPE_LIMIT_DEG,
            rng_seed: seed,
            transitions: Vec::new(),
        })
    }

    pub fn with_slope_limit(mut self, degrees: f64) -> Self {
        self.slope_limit = degrees;
        self
    }

    pub fn field(&self) -> &Arc<HeightField> {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.field.rows()
    }

    pub fn cols(&self) -> usize {
        self.field.cols()
    }

    pub fn cell_size(&self) -> f64 {
        self.field.cell_size()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn slope_limit(&self) -> f64 {
        self.slope_limit
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn rocks(&self) -> &[Disc] {
        &self.rocks
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.field.contains(cell)
    }

    fn idx(&self, cell: Cell) -> usize {
        cell.row * self.cols() + cell.col
    }

    pub fn state(&self, cell: Cell) -> CellState {
        self.states[self.idx(cell)]
    }

    pub fn visit_count(&self, cell: Cell) -> u32 {
        self.visit_counts[self.idx(cell)]
    }

    pub fn states(&self) -> &[CellState] {
        &self.states
    }

    pub fn visit_counts(&self) -> &[u32] {
        &self.visit_counts
    }

    /// Ground truth: does any rock footprint overlap this cell?
    pub fn has_rock(&self, cell: Cell) -> bool {
        self.rock_cells[self.idx(cell)]
    }

    pub fn rock_cell_count(&self) -> usize {
        self.rock_cells.iter().filter(|&&r| r).count()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn visited_count(&self) -> usize {
        self.states
            .iter()
            .filter(|&&s| s == CellState::Visited)
            .count()
    }

    pub fn unknown_count(&self) -> usize {
        self.states
            .iter()
            .filter(|&&s| s == CellState::Unknown)
            .count()
    }

    fn transition(&mut self, cell: Cell, to: CellState) -> Result<(), WorldError> {
        let i = self.idx(cell);
        let from = self.states[i];
        if !from.can_become(to) {
            return Err(WorldError::IllegalTransition { cell, from, to });
        }
        self.states[i] = to;
        self.transitions.push(Transition { cell, from, to });
        Ok(())
    }

    /// Classification a sensor at `from` would assign to the adjacent `to`.
    pub fn classify(&self, from: Cell, to: Cell) -> SensedClass {
        if self.has_rock(to) || self.too_steep(from, to) {
            SensedClass::Obstacle
        } else {
            SensedClass::Free
        }
    }

    /// Pitch of the move `from -> to` exceeds the slope limit.
    pub fn too_steep(&self, from: Cell, to: Cell) -> bool {
        self.field
            .pitch_between(from, to)
            .map(|p| p > self.slope_limit)
            .unwrap_or(true)
    }

    /// Senses the in-bounds 8-neighborhood of the rover and promotes any
    /// `Unknown` neighbor to `Free` or `Obstacle`. Known cells keep their
    /// state.
    pub fn sense(&mut self, rover: &RoverState) -> Vec<(Cell, SensedClass)> {
        let (rows, cols) = (self.rows(), self.cols());
        let mut out = Vec::with_capacity(8);
        for dir in Direction::ALL {
            let Some(nb) = rover.cell.step(dir, rows, cols) else {
                continue;
            };
            let class = self.classify(rover.cell, nb);
            if self.state(nb) == CellState::Unknown {
                let to = match class {
                    SensedClass::Free => CellState::Free,
                    SensedClass::Obstacle => CellState::Obstacle,
                };
                self.transition(nb, to).expect("Unknown promotes to any sensed class");
            }
            out.push((nb, class));
        }
        out
    }

    /// Marks the rover's own cell as sensed and entered: the start of an
    /// episode.
    pub fn occupy_start(&mut self, cell: Cell) -> Result<(), WorldError> {
        if !self.contains(cell) {
            return Err(WorldError::OutOfBounds(cell));
        }
        if self.has_rock(cell) || self.state(cell) == CellState::Obstacle {
            return Err(WorldError::StartBlocked(cell));
        }
        if self.state(cell) == CellState::Unknown {
            self.transition(cell, CellState::Free)?;
        }
        self.visit(cell)
    }

    /// Enters `cell`: it becomes `Visited` and its visit count grows by one.
    pub fn visit(&mut self, cell: Cell) -> Result<(), WorldError> {
        if !self.contains(cell) {
            return Err(WorldError::OutOfBounds(cell));
        }
        let state = self.state(cell);
        if !matches!(state, CellState::Free | CellState::Visited) {
            return Err(WorldError::IllegalVisit { cell, state });
        }
        self.transition(cell, CellState::Visited)?;
        let i = self.idx(cell);
        self.visit_counts[i] += 1;
        Ok(())
    }

    /// Reclassifies a sensed-free cell as an obstacle.
    pub fn mark_obstacle(&mut self, cell: Cell) -> Result<(), WorldError> {
        self.transition(cell, CellState::Obstacle)
    }

    /// Cells reachable from `start` over 8-connectivity, avoiding rock cells
    /// and moves steeper than the slope limit. Uses ground truth, not the
    /// rover's knowledge.
    pub fn reachable_free_cells(&self, start: Cell) -> Result<usize, WorldError> {
        if !self.contains(start) {
            return Err(WorldError::OutOfBounds(start));
        }
        if self.has_rock(start) {
            return Err(WorldError::StartBlocked(start));
        }
        let (rows, cols) = (self.rows(), self.cols());
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([start]);
        seen[self.idx(start)] = true;
        let mut count = 0;
        while let Some(c) = queue.pop_front() {
            count += 1;
            for dir in Direction::ALL {
                let Some(nb) = c.step(dir, rows, cols) else {
                    continue;
                };
                let i = self.idx(nb);
                if seen[i] || self.has_rock(nb) || self.too_steep(c, nb) {
                    continue;
                }
                seen[i] = true;
                queue.push_back(nb);
            }
        }
        Ok(count)
    }

    pub fn snapshot(&self) -> GridSnapshot {
        GridSnapshot {
            rows: self.rows(),
            cols: self.cols(),
            states: self.states.clone(),
        }
    }
}

fn mark_rock_cells(mask: &mut [bool], rock: &Disc, rows: usize, cols: usize, cs: f64) {
    let lo_c = ((rock.center.x - rock.radius) / cs).floor().max(0.0) as usize;
    let lo_r = ((rock.center.y - rock.radius) / cs).floor().max(0.0) as usize;
    let hi_c = ((rock.center.x + rock.radius) / cs).floor();
    let hi_r = ((rock.center.y + rock.radius) / cs).floor();
    if hi_c < 0.0 || hi_r < 0.0 {
        return;
    }
    let hi_c = (hi_c as usize).min(cols - 1);
    let hi_r = (hi_r as usize).min(rows - 1);
    for r in lo_r..=hi_r {
        for c in lo_c..=hi_c {
            if rock.intersects_cell(Cell::new(r, c), cs) {
                mask[r * cols + c] = true;
            }
        }
    }
}

/// A rock disc lying strictly inside `cell`.
fn random_rock_in(cell: Cell, cs: f64, rng: &mut ChaCha8Rng) -> Disc {
    let radius = cs * rng.gen_range(ROCK_RADIUS_RANGE.0..ROCK_RADIUS_RANGE.1);
    let margin = radius + ROCK_EDGE_MARGIN * cs;
    let ox = rng.gen_range(margin..=cs - margin);
    let oy = rng.gen_range(margin..=cs - margin);
    Disc::new(
        Point::new(cell.col as f64 * cs + ox, cell.row as f64 * cs + oy),
        radius,
    )
}

/// Replays a transition log from an all-`Unknown` grid, returning the final
/// states or the index of the first illegal or inconsistent entry.
pub fn replay_transitions(
    rows: usize,
    cols: usize,
    log: &[Transition],
) -> Result<Vec<CellState>, usize> {
    let mut states = vec![CellState::Unknown; rows * cols];
    for (k, t) in log.iter().enumerate() {
        if t.cell.row >= rows || t.cell.col >= cols {
            return Err(k);
        }
        let s = &mut states[t.cell.row * cols + t.cell.col];
        if *s != t.from || !t.from.can_become(t.to) {
            return Err(k);
        }
        *s = t.to;
    }
    Ok(states)
}

/// Text rendering of grid states: one symbol per cell, LF-terminated rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSnapshot {
    pub rows: usize,
    pub cols: usize,
    pub states: Vec<CellState>,
}

impl GridSnapshot {
    pub fn state(&self, cell: Cell) -> CellState {
        self.states[cell.row * self.cols + cell.col]
    }

    pub fn count(&self, state: CellState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.cols + 1) * self.rows);
        for row in self.states.chunks(self.cols) {
            s.extend(row.iter().map(|st| st.symbol()));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, WorldError> {
        let mut states = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (i, line) in text.lines().enumerate() {
            let before = states.len();
            for ch in line.chars() {
                let st = CellState::from_symbol(ch).ok_or_else(|| WorldError::MalformedSnapshot {
                    line: i + 1,
                    reason: format!("unexpected symbol {ch:?}"),
                })?;
                states.push(st);
            }
            let width = states.len() - before;
            match cols {
                None => cols = Some(width),
                Some(c) if c != width => {
                    return Err(WorldError::MalformedSnapshot {
                        line: i + 1,
                        reason: format!("row has {width} cells, expected {c}"),
                    })
                }
                _ => {}
            }
            rows += 1;
        }
        match cols {
            Some(cols) if cols > 0 => Ok(Self { rows, cols, states }),
            _ => Err(WorldError::MalformedSnapshot {
                line: 1,
                reason: "empty snapshot".into(),
            }),
        }
    }
}

impl fmt::Display for GridSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
