//! The myopic coverage loop: sense the 8-neighborhood, score every admissible
//! neighbor, drive to the cheapest one (around rocks if needed), repeat.

use std::sync::Arc;

use thiserror::Error;

use crate::bug::{plan_leg, BugParams, ContinuousPath, LegError};
use crate::costs::{energy_forward_over, energy_rotate, total_cost, CostError, CostWeights, EnergyParams};
use crate::direction::{Cell, Direction};
use crate::geom::{cell_center, Disc};
use crate::metrics::{EpisodeResult, TerminatedBy};
use crate::terrain::{HeightField, TerrainError};
use crate::world::{CellState, GridWorld, RoverState, WorldError, DEFAULT_SLOPE_LIMIT_DEG};

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("no admissible neighbor around {0}")]
    NoCandidate(Cell),
    #[error("start cell {0} is blocked")]
    StartBlocked(Cell),
    #[error("rover is enclosed at the start cell {0}")]
    EpisodeStuck(Cell),
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Costs(#[from] CostError),
    #[error(transparent)]
    World(WorldError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error("leg planning failed: {0}")]
    Leg(LegError),
}

impl From<WorldError> for PlannerError {
    fn from(e: WorldError) -> Self {
        match e {
            WorldError::StartBlocked(c) => PlannerError::StartBlocked(c),
            other => PlannerError::World(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub weights: CostWeights,
    pub energy: EnergyParams,
    pub bug: BugParams,
    /// Fraction of reachable free cells to visit before stopping.
    pub coverage_target: f64,
    /// Maximum number of moves; `None` means `10·n`.
    pub step_budget: Option<usize>,
    pub start_cell: Cell,
    pub start_heading: Direction,
    /// Degrees; steeper neighbor moves are sensed as obstacles.
    pub slope_limit: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            weights: CostWeights::default(),
            energy: EnergyParams::default(),
            bug: BugParams::default(),
            coverage_target: 0.95,
            step_budget: None,
            start_cell: Cell::new(0, 0),
            start_heading: Direction::E,
            slope_limit: DEFAULT_SLOPE_LIMIT_DEG,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self, cell_size: f64) -> Result<(), PlannerError> {
        self.weights.validate()?;
        self.energy.validate()?;
        self.bug.validate(cell_size).map_err(PlannerError::InvalidConfig)?;
        if !(self.coverage_target > 0.0 && self.coverage_target <= 1.0) {
            return Err(PlannerError::InvalidConfig(format!(
                "coverage_target must lie in (0, 1], got {}",
                self.coverage_target
            )));
        }
        if self.step_budget == Some(0) {
            return Err(PlannerError::InvalidConfig("step_budget must be ≥ 1".into()));
        }
        if !(self.slope_limit > 0.0 && self.slope_limit <= 90.0) {
            return Err(PlannerError::InvalidConfig(format!(
                "slope_limit must lie in (0, 90], got {}",
                self.slope_limit
            )));
        }
        Ok(())
    }

    pub fn budget_for(&self, n_cells: usize) -> usize {
        self.step_budget.unwrap_or(10 * n_cells)
    }
}

/// The terrain and obstacle layout an episode runs on.
#[derive(Debug, Clone)]
pub struct EpisodeSetup {
    pub field: Arc<HeightField>,
    /// Rock footprints that belong to the terrain itself.
    pub fixed_rocks: Vec<Disc>,
    pub obstacle_fraction: f64,
    pub obstacle_seed: u64,
}

impl EpisodeSetup {
    pub fn new(field: Arc<HeightField>, obstacle_fraction: f64, obstacle_seed: u64) -> Self {
        Self {
            field,
            fixed_rocks: Vec::new(),
            obstacle_fraction,
            obstacle_seed,
        }
    }

    pub fn with_rocks(mut self, rocks: Vec<Disc>) -> Self {
        self.fixed_rocks = rocks;
        self
    }

    pub fn build_world(&self, config: &PlannerConfig) -> Result<GridWorld, PlannerError> {
        let world = GridWorld::decompose_with(
            Arc::clone(&self.field),
            &self.fixed_rocks,
            self.obstacle_fraction,
            self.obstacle_seed,
            config.start_cell,
        )?;
        Ok(world.with_slope_limit(config.slope_limit))
    }
}

/// One executed move.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step_index: usize,
    pub from_cell: Cell,
    pub to_cell: Cell,
    pub heading_before: Direction,
    pub chosen_cost: f64,
    /// Spot-turn angle before driving, degrees.
    pub dtheta: f64,
    /// Meters driven, including any detour.
    pub distance: f64,
    pub energy_forward: f64,
    pub energy_rotate: f64,
    pub coverage_after: f64,
    /// Cells rejected this step because the leg was unreachable.
    pub blocked: Vec<Cell>,
}

impl StepRecord {
    pub fn heading_after(&self) -> Direction {
        self.from_cell
            .direction_to(self.to_cell)
            .expect("executed moves are between adjacent cells")
    }
}

/// Whether the rover may move from its cell to the adjacent `to`.
pub fn is_admissible(world: &GridWorld, from: Cell, to: Cell) -> bool {
    matches!(world.state(to), CellState::Free | CellState::Visited) && !world.too_steep(from, to)
}

/// Cheapest admissible neighbor. Ties go to the smaller turn, then to the
/// first candidate in a clockwise scan from the current heading.
pub fn choose_next(world: &GridWorld, rover: &RoverState, weights: &CostWeights) -> Result<(Cell, f64), PlannerError> {
    choose_next_excluding(world, rover, weights, &[])
}

/// [`choose_next`], skipping the cells in `excluded`.
pub fn choose_next_excluding(
    world: &GridWorld,
    rover: &RoverState,
    weights: &CostWeights,
    excluded: &[Cell],
) -> Result<(Cell, f64), PlannerError> {
    let field = world.field();
    let mut best: Option<(f64, u32, Cell)> = None;
    for scan in 0..8 {
        let dir = rover.heading.rotated_cw(scan);
        let Some(to) = rover.cell.step(dir, world.rows(), world.cols()) else {
            continue;
        };
        if excluded.contains(&to) || !is_admissible(world, rover.cell, to) {
            continue;
        }
        let cost = total_cost(weights, field, rover.heading, rover.cell, to, world.visit_count(to))?;
        let turn = rover.heading.turn_steps(dir);
        let better = match best {
            None => true,
            Some((bc, bt, _)) => cost < bc || (cost == bc && turn < bt),
        };
        if better {
            best = Some((cost, turn, to));
        }
    }
    best.map(|(c, _, cell)| (cell, c))
        .ok_or(PlannerError::NoCandidate(rover.cell))
}

/// Handles a leg the avoidance layer reports as unreachable: a `Free` cell
/// becomes an `Obstacle`; any blocked cell is excluded for the rest of the
/// current step.
pub fn replan_on_block(
    world: &mut GridWorld,
    rover: &RoverState,
    blocked: Cell,
    excluded: &mut Vec<Cell>,
) -> Result<(), PlannerError> {
    debug_assert!(rover.cell.is_adjacent(blocked));
    if world.state(blocked) == CellState::Free {
        world.mark_obstacle(blocked)?;
    }
    if !excluded.contains(&blocked) {
        excluded.push(blocked);
    }
    Ok(())
}

/// Chooses the next cell and plans the leg to it, replanning around
/// unreachable targets.
pub fn plan_step(
    world: &mut GridWorld,
    rover: &RoverState,
    config: &PlannerConfig,
) -> Result<(Cell, f64, ContinuousPath, Vec<Cell>), PlannerError> {
    let mut excluded = Vec::new();
    loop {
        let (to, cost) = choose_next_excluding(world, rover, &config.weights, &excluded)?;
        let target = cell_center(to, world.cell_size());
        match plan_leg(world.rocks(), rover.pose, target, &config.bug) {
            Ok(path) => return Ok((to, cost, path, excluded)),
            Err(LegError::Unreachable { .. }) => replan_on_block(world, rover, to, &mut excluded)?,
            Err(e) => return Err(PlannerError::Leg(e)),
        }
    }
}

/// Runs one coverage episode. Deterministic in `(setup, config)`.
pub fn run_episode(setup: &EpisodeSetup, config: &PlannerConfig) -> Result<EpisodeResult, PlannerError> {
    config.validate(setup.field.cell_size())?;
    let mut world = setup.build_world(config)?;
    run_in_world(&mut world, config)
}

/// Runs an episode on a prepared world (all cells `Unknown`).
pub fn run_in_world(world: &mut GridWorld, config: &PlannerConfig) -> Result<EpisodeResult, PlannerError> {
    config.validate(world.cell_size())?;
    let start = config.start_cell;
    if !world.contains(start) {
        return Err(PlannerError::World(WorldError::OutOfBounds(start)));
    }
    let reachable = world.reachable_free_cells(start)?;
    world.occupy_start(start)?;
    let cs = world.cell_size();
    let budget = config.budget_for(world.len());

    let mut rover = RoverState::at(start, config.start_heading, cs);
    let mut visited = 1usize;
    let mut coverage = visited as f64 / reachable as f64;
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut trajectory: Vec<ContinuousPath> = Vec::new();

    let terminated_by = loop {
        if coverage >= config.coverage_target {
            break TerminatedBy::CoverageReached;
        }
        if steps.len() >= budget {
            break TerminatedBy::BudgetExhausted;
        }
        world.sense(&rover);
        let (to, cost, path, blocked) = match plan_step(world, &rover, config) {
            Ok(step) => step,
            Err(PlannerError::NoCandidate(c)) if steps.is_empty() => {
                return Err(PlannerError::EpisodeStuck(c));
            }
            Err(PlannerError::NoCandidate(_)) => break TerminatedBy::Stuck,
            Err(e) => return Err(e),
        };

        let dir = rover.cell.direction_to(to).expect("neighbors are adjacent");
        let dtheta = rover.heading.turn_degrees(dir);
        let distance = path.total_length;
        let e_fwd = energy_forward_over(&config.energy, world.field(), rover.cell, to, distance)?;
        let e_rot = energy_rotate(&config.energy, dtheta);

        if world.state(to) == CellState::Free {
            visited += 1;
        }
        world.visit(to)?;
        coverage = visited as f64 / reachable as f64;

        steps.push(StepRecord {
            step_index: steps.len(),
            from_cell: rover.cell,
            to_cell: to,
            heading_before: rover.heading,
            chosen_cost: cost,
            dtheta,
            distance,
            energy_forward: e_fwd,
            energy_rotate: e_rot,
            coverage_after: coverage,
            blocked,
        });
        trajectory.push(path);
        rover = RoverState::at(to, dir, cs);
    };

    Ok(EpisodeResult::assemble(world, steps, trajectory, reachable, coverage, terminated_by))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn flat(rows: usize, cols: usize) -> Arc<HeightField> {
        Arc::new(HeightField::flat(rows, cols, 1.0, 0.0).unwrap())
    }

    fn sensed_world(field: Arc<HeightField>, rocks: &[Disc], at: Cell, heading: Direction) -> (GridWorld, RoverState) {
        let mut w = GridWorld::decompose_with(field, rocks, 0.0, 0, at).unwrap();
        w.occupy_start(at).unwrap();
        let rover = RoverState::at(at, heading, w.cell_size());
        w.sense(&rover);
        (w, rover)
    }

    #[test]
    fn fresh_flat_neighborhood_goes_straight() {
        for heading in [Direction::N, Direction::E, Direction::S, Direction::W] {
            let (w, rover) = sensed_world(flat(5, 5), &[], Cell::new(2, 2), heading);
            let (cell, _) = choose_next(&w, &rover, &CostWeights::default()).unwrap();
            assert_eq!(Cell::new(2, 2).direction_to(cell), Some(heading));
        }
        // from a diagonal heading a 45° turn onto a cardinal step (1.1)
        // undercuts the straight diagonal (√2); clockwise wins the tie
        let (w, rover) = sensed_world(flat(5, 5), &[], Cell::new(2, 2), Direction::NE);
        let (cell, cost) = choose_next(&w, &rover, &CostWeights::default()).unwrap();
        assert_eq!(Cell::new(2, 2).direction_to(cell), Some(Direction::E));
        assert!((cost - 1.1).abs() < 1e-12);
    }

    #[test]
    fn equal_turns_break_clockwise() {
        // Straight ahead is blocked: the 90° cardinal turns (1.2) beat the
        // 45° diagonals (√2 + 0.1); east and west tie and east is scanned
        // first.
        let rock = [Disc::new(Point::new(2.5, 1.5), 0.3)];
        let (w, rover) = sensed_world(flat(5, 5), &rock, Cell::new(2, 2), Direction::N);
        let (cell, _) = choose_next(&w, &rover, &CostWeights::default()).unwrap();
        assert_eq!(cell, Cell::new(2, 3));
        let (w, rover) = sensed_world(flat(5, 5), &rock, Cell::new(2, 2), Direction::S);
        let (cell, _) = choose_next(&w, &rover, &CostWeights::default()).unwrap();
        assert_eq!(cell, Cell::new(3, 2));
    }

    #[test]
    fn lone_free_neighbor_beats_visited_ones() {
        let (mut w, rover) = sensed_world(flat(3, 3), &[], Cell::new(1, 1), Direction::N);
        for d in Direction::ALL {
            let c = Cell::new(1, 1).step(d, 3, 3).unwrap();
            if c != Cell::new(2, 0) {
                w.visit(c).unwrap();
            }
        }
        let (cell, cost) = choose_next(&w, &rover, &CostWeights::default()).unwrap();
        assert_eq!(cell, Cell::new(2, 0));
        assert!((cost - (std::f64::consts::SQRT_2 + 0.3)).abs() < 1e-12);
    }

    #[test]
    fn enclosed_start_has_no_candidate() {
        let ring: Vec<Disc> = Direction::ALL
            .iter()
            .map(|d| Disc::new(cell_center(Cell::new(1, 1).step(*d, 3, 3).unwrap(), 1.0), 0.3))
            .collect();
        let (w, rover) = sensed_world(flat(3, 3), &ring, Cell::new(1, 1), Direction::N);
        assert_eq!(
            choose_next(&w, &rover, &CostWeights::default()),
            Err(PlannerError::NoCandidate(Cell::new(1, 1)))
        );
        let setup = EpisodeSetup::new(flat(3, 3), 0.0, 0).with_rocks(ring);
        let config = PlannerConfig {
            start_cell: Cell::new(1, 1),
            ..PlannerConfig::default()
        };
        // only the start is reachable, so coverage is already complete
        let result = run_episode(&setup, &config).unwrap();
        assert_eq!(result.terminated_by, TerminatedBy::CoverageReached);
        assert!(result.steps.is_empty());
    }

    #[test]
    fn small_grid_full_coverage() {
        let setup = EpisodeSetup::new(flat(3, 3), 0.0, 0);
        let config = PlannerConfig {
            coverage_target: 1.0,
            ..PlannerConfig::default()
        };
        let result = run_episode(&setup, &config).unwrap();
        assert_eq!(result.terminated_by, TerminatedBy::CoverageReached);
        assert_eq!(result.final_states.count(CellState::Visited), 9);
        assert_eq!(result.coverage, 1.0);
    }

    #[test]
    fn rock_on_start_is_reported() {
        let rock = vec![Disc::new(Point::new(0.5, 0.5), 0.2)];
        let setup = EpisodeSetup::new(flat(4, 4), 0.0, 0).with_rocks(rock);
        assert_eq!(
            run_episode(&setup, &PlannerConfig::default()).unwrap_err(),
            PlannerError::StartBlocked(Cell::new(0, 0))
        );
    }

    #[test]
    fn config_validation() {
        let mut c = PlannerConfig::default();
        assert!(c.validate(1.0).is_ok());
        c.coverage_target = 0.0;
        assert!(c.validate(1.0).is_err());
        c.coverage_target = 1.0;
        c.step_budget = Some(0);
        assert!(c.validate(1.0).is_err());
        c.step_budget = None;
        c.weights.beta = 0.5;
        assert!(matches!(c.validate(1.0), Err(PlannerError::Costs(_))));
    }

    #[test]
    fn heading_follows_moves() {
        let setup = EpisodeSetup::new(flat(12, 9), 0.1, 4);
        let result = run_episode(&setup, &PlannerConfig::default()).unwrap();
        for pair in result.steps.windows(2) {
            assert_eq!(pair[1].heading_before, pair[0].heading_after());
            assert_eq!(pair[1].from_cell, pair[0].to_cell);
        }
    }
}
