//! Episode evaluation: coverage, path length ratio, energy totals, maximum
//! pitch, and mean absolute error between trajectories.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::bug::ContinuousPath;
use crate::direction::Cell;
use crate::planner::StepRecord;
use crate::terrain::HeightField;
use crate::world::{GridSnapshot, GridWorld, Transition};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("episode has no steps")]
    EmptyEpisode,
    #[error("trajectories differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("trajectories are empty")]
    EmptyTrajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminatedBy {
    CoverageReached,
    BudgetExhausted,
    Stuck,
    /// The episode could not start (blocked or enclosed start, bad config).
    Failed,
}

impl fmt::Display for TerminatedBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminatedBy::CoverageReached => "CoverageReached",
            TerminatedBy::BudgetExhausted => "BudgetExhausted",
            TerminatedBy::Stuck => "Stuck",
            TerminatedBy::Failed => "Failed",
        })
    }
}

impl FromStr for TerminatedBy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CoverageReached" => Ok(TerminatedBy::CoverageReached),
            "BudgetExhausted" => Ok(TerminatedBy::BudgetExhausted),
            "Stuck" => Ok(TerminatedBy::Stuck),
            "Failed" => Ok(TerminatedBy::Failed),
            other => Err(format!("unknown termination `{other}`")),
        }
    }
}

/// Everything an episode produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub steps: Vec<StepRecord>,
    /// One path per step, in step order.
    pub trajectory: Vec<ContinuousPath>,
    pub final_states: GridSnapshot,
    pub visit_counts: Vec<u32>,
    pub transitions: Vec<Transition>,
    pub start_cell: Cell,
    pub reachable_cells: usize,
    pub coverage: f64,
    /// Meters.
    pub path_length: f64,
    pub path_length_ratio: f64,
    pub e_forward_total: f64,
    pub e_rotate_total: f64,
    pub e_total: f64,
    /// Degrees; 0 for an episode without moves.
    pub max_pitch: f64,
    pub terminated_by: TerminatedBy,
}

impl EpisodeResult {
    pub(crate) fn assemble(
        world: &GridWorld,
        steps: Vec<StepRecord>,
        trajectory: Vec<ContinuousPath>,
        reachable_cells: usize,
        coverage: f64,
        terminated_by: TerminatedBy,
    ) -> Self {
        let path_length: f64 = steps.iter().map(|s| s.distance).sum();
        let e_forward_total: f64 = steps.iter().map(|s| s.energy_forward).sum();
        let e_rotate_total: f64 = steps.iter().map(|s| s.energy_rotate).sum();
        let max_pitch = max_pitch(&steps, world.field()).unwrap_or(0.0);
        let start_cell = steps
            .first()
            .map(|s| s.from_cell)
            .unwrap_or_else(|| first_visited(world));
        Self {
            path_length_ratio: path_length_ratio(path_length, world.len(), world.cell_size()),
            final_states: world.snapshot(),
            visit_counts: world.visit_counts().to_vec(),
            transitions: world.transitions().to_vec(),
            start_cell,
            reachable_cells,
            coverage,
            path_length,
            e_forward_total,
            e_rotate_total,
            e_total: e_forward_total + e_rotate_total,
            max_pitch,
            terminated_by,
            steps,
            trajectory,
        }
    }

    /// Coverage after each step, starting with the start cell alone.
    pub fn coverage_timeline(&self) -> Vec<f64> {
        std::iter::once(1.0 / self.reachable_cells as f64)
            .chain(self.steps.iter().map(|s| s.coverage_after))
            .collect()
    }
}

fn first_visited(world: &GridWorld) -> Cell {
    let cols = world.cols();
    world
        .visit_counts()
        .iter()
        .position(|&v| v > 0)
        .map(|i| Cell::new(i / cols, i % cols))
        .unwrap_or(Cell::new(0, 0))
}

/// Distance travelled in cell lengths per grid cell.
pub fn path_length_ratio(total_path_length: f64, n_cells: usize, cell_size: f64) -> f64 {
    (total_path_length / cell_size) / n_cells as f64
}

/// Visited cells over the reachable-cell denominator.
pub fn coverage_percent(world: &GridWorld, denominator: usize) -> f64 {
    world.visited_count() as f64 / denominator as f64
}

pub fn max_pitch(steps: &[StepRecord], field: &HeightField) -> Result<f64, MetricsError> {
    if steps.is_empty() {
        return Err(MetricsError::EmptyEpisode);
    }
    Ok(steps
        .iter()
        .map(|s| field.pitch_between(s.from_cell, s.to_cell).unwrap_or(0.0))
        .fold(0.0, f64::max))
}

/// A position sample on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimedPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TimedPoint {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub fn distance(&self, o: &TimedPoint) -> f64 {
        let (dx, dy, dz) = (self.x - o.x, self.y - o.y, self.z - o.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Mean Euclidean distance between index-aligned samples.
pub fn mae(traj_a: &[TimedPoint], traj_b: &[TimedPoint]) -> Result<f64, MetricsError> {
    if traj_a.len() != traj_b.len() {
        return Err(MetricsError::LengthMismatch(traj_a.len(), traj_b.len()));
    }
    if traj_a.is_empty() {
        return Err(MetricsError::EmptyTrajectory);
    }
    // running mean: exact for constant error sequences
    let mut mean = 0.0;
    for (k, (a, b)) in traj_a.iter().zip(traj_b).enumerate() {
        mean += (a.distance(b) - mean) / (k + 1) as f64;
    }
    Ok(mean)
}

/// Column order of the per-episode results table.
pub const CSV_HEADER: [&str; 12] = [
    "seed",
    "alpha",
    "beta",
    "mc_visited",
    "coverage",
    "path_length_ratio",
    "e_forward_total",
    "e_rotate_total",
    "e_total",
    "max_pitch_deg",
    "steps",
    "terminated_by",
];

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub mc_visited: f64,
    pub coverage: f64,
    pub path_length_ratio: f64,
    pub e_forward_total: f64,
    pub e_rotate_total: f64,
    pub e_total: f64,
    pub max_pitch_deg: f64,
    pub steps: usize,
    pub terminated_by: TerminatedBy,
}

impl EpisodeRow {
    pub fn from_result(seed: u64, alpha: f64, beta: f64, mc_visited: f64, r: &EpisodeResult) -> Self {
        Self {
            seed,
            alpha,
            beta,
            mc_visited,
            coverage: r.coverage,
            path_length_ratio: r.path_length_ratio,
            e_forward_total: r.e_forward_total,
            e_rotate_total: r.e_rotate_total,
            e_total: r.e_total,
            max_pitch_deg: r.max_pitch,
            steps: r.steps.len(),
            terminated_by: r.terminated_by,
        }
    }

    /// Row for an episode that never ran.
    pub fn failed(seed: u64, alpha: f64, beta: f64, mc_visited: f64) -> Self {
        Self {
            seed,
            alpha,
            beta,
            mc_visited,
            coverage: 0.0,
            path_length_ratio: 0.0,
            e_forward_total: 0.0,
            e_rotate_total: 0.0,
            e_total: 0.0,
            max_pitch_deg: 0.0,
            steps: 0,
            terminated_by: TerminatedBy::Failed,
        }
    }

    fn fields(&self) -> [String; 12] {
        [
            self.seed.to_string(),
            self.alpha.to_string(),
            self.beta.to_string(),
            self.mc_visited.to_string(),
            self.coverage.to_string(),
            self.path_length_ratio.to_string(),
            self.e_forward_total.to_string(),
            self.e_rotate_total.to_string(),
            self.e_total.to_string(),
            self.max_pitch_deg.to_string(),
            self.steps.to_string(),
            self.terminated_by.to_string(),
        ]
    }
}

/// Writes the header and rows, LF-terminated.
pub fn write_csv<W: Write>(out: W, rows: &[EpisodeRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<EpisodeRow>, String> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err("unexpected CSV header".into());
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let f = |i: usize| -> Result<f64, String> { rec[i].parse().map_err(|e| format!("column {i}: {e}")) };
        rows.push(EpisodeRow {
            seed: rec[0].parse().map_err(|e| format!("seed: {e}"))?,
            alpha: f(1)?,
            beta: f(2)?,
            mc_visited: f(3)?,
            coverage: f(4)?,
            path_length_ratio: f(5)?,
            e_forward_total: f(6)?,
            e_rotate_total: f(7)?,
            e_total: f(8)?,
            max_pitch_deg: f(9)?,
            steps: rec[10].parse().map_err(|e| format!("steps: {e}"))?,
            terminated_by: rec[11].parse()?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::direction::Direction;
    use crate::world::RoverState;

    #[test]
    fn ratio_examples() {
        assert_eq!(path_length_ratio(0.0, 60, 1.0), 0.0);
        assert_eq!(path_length_ratio(90.0, 60, 1.0), 1.5);
        assert_eq!(path_length_ratio(180.0, 60, 2.0), 1.5);
        // boustrophedon over n cells takes n − 1 unit steps
        let n = 3600;
        let r = path_length_ratio((n - 1) as f64, n, 1.0);
        assert!((r - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coverage_examples() {
        let field = Arc::new(HeightField::flat(3, 3, 1.0, 0.0).unwrap());
        let mut w = GridWorld::decompose(field, 0.0, 0, Cell::new(1, 1)).unwrap();
        w.occupy_start(Cell::new(1, 1)).unwrap();
        assert_eq!(coverage_percent(&w, 9), 1.0 / 9.0);
        w.sense(&RoverState::at(Cell::new(1, 1), Direction::N, 1.0));
        for r in 0..3 {
            for c in 0..3 {
                if (r, c) != (1, 1) {
                    w.visit(Cell::new(r, c)).unwrap();
                }
            }
        }
        assert_eq!(coverage_percent(&w, 9), 1.0);
    }

    fn step(from: Cell, to: Cell) -> StepRecord {
        StepRecord {
            step_index: 0,
            from_cell: from,
            to_cell: to,
            heading_before: Direction::N,
            chosen_cost: 0.0,
            dtheta: 0.0,
            distance: 1.0,
            energy_forward: 0.0,
            energy_rotate: 0.0,
            coverage_after: 0.0,
            blocked: Vec::new(),
        }
    }

    #[test]
    fn max_pitch_examples() {
        let flat = HeightField::flat(2, 2, 1.0, 0.0).unwrap();
        let log = [step(Cell::new(0, 0), Cell::new(0, 1))];
        assert_eq!(max_pitch(&log, &flat).unwrap(), 0.0);
        assert_eq!(max_pitch(&[], &flat), Err(MetricsError::EmptyEpisode));
        let slope = HeightField::new(1, 3, 1.0, vec![0.0, 1.0, 1.2]).unwrap();
        let log = [step(Cell::new(0, 0), Cell::new(0, 1)), step(Cell::new(0, 1), Cell::new(0, 2))];
        assert!((max_pitch(&log, &slope).unwrap() - 45.0).abs() < 1e-12);
    }

    fn line(n: usize, dx: f64, dy: f64) -> Vec<TimedPoint> {
        (0..n).map(|i| TimedPoint::new(i as f64, dx, i as f64 * 0.7 + dy, 0.0)).collect()
    }

    #[test]
    fn mae_examples() {
        let a = line(50, 0.0, 0.0);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        let b = line(50, 0.41, 0.0);
        assert_eq!(mae(&a, &b).unwrap(), 0.41);
        assert_eq!(mae(&b, &a).unwrap(), 0.41);
        assert_eq!(mae(&a, &b[..10]), Err(MetricsError::LengthMismatch(50, 10)));
        assert_eq!(mae(&[], &[]), Err(MetricsError::EmptyTrajectory));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            EpisodeRow {
                seed: 3,
                alpha: 0.3,
                beta: 0.7,
                mc_visited: 1.1,
                coverage: 0.951,
                path_length_ratio: 1.25,
                e_forward_total: 1234.5,
                e_rotate_total: 99.0,
                e_total: 1333.5,
                max_pitch_deg: 12.25,
                steps: 4000,
                terminated_by: TerminatedBy::CoverageReached,
            },
            EpisodeRow::failed(4, 1.0, 0.0, 1.1),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "seed,alpha,beta,mc_visited,coverage,path_length_ratio,e_forward_total,e_rotate_total,e_total,max_pitch_deg,steps,terminated_by\n"
        ));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }
}
