//! Motion cost and energy models.
//!
//! The basic cost of a candidate move is `mc_static + mc_visited·V`, where
//! `mc_static` is the step length in cell units plus a turn penalty. The
//! terrain-aware cost blends it with the absolute height change:
//! `alpha·basic + beta·|Δh|`, with `alpha + beta = 1`.

use thiserror::Error;

use crate::direction::{Cell, Direction};
use crate::terrain::{HeightField, TerrainError};

pub const DEFAULT_MC_VISITED: f64 = 1.1;
pub const MIN_MC_VISITED: f64 = 1.1;
pub const DEFAULT_TURN_WEIGHT: f64 = 0.1;
const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("alpha + beta must equal 1 (got {alpha} + {beta})")]
    WeightSum { alpha: f64, beta: f64 },
    #[error("alpha and beta must be non-negative")]
    NegativeWeight,
    #[error("mc_visited must be ≥ 1.1 (got {0})")]
    VisitedPenaltyTooSmall(f64),
    #[error("turn_weight must be non-negative and finite")]
    BadTurnWeight,
    #[error("energy coefficients must be non-negative and finite")]
    NegativeEnergy,
}

/// How the height-difference term is scaled before weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemScale {
    /// Raw meters.
    #[default]
    Raw,
    /// Meters divided by the cell size.
    PerCellSize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub mc_visited: f64,
    /// Cost per 45° of heading change.
    pub turn_weight: f64,
    pub dem_scale: DemScale,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            mc_visited: DEFAULT_MC_VISITED,
            turn_weight: DEFAULT_TURN_WEIGHT,
            dem_scale: DemScale::Raw,
        }
    }
}

impl CostWeights {
    /// Default weights with `alpha = 1 − beta`.
    pub fn with_beta(beta: f64) -> Self {
        Self {
            alpha: 1.0 - beta,
            beta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(CostError::NegativeWeight);
        }
        if !((self.alpha + self.beta - 1.0).abs() <= WEIGHT_SUM_TOLERANCE) {
            return Err(CostError::WeightSum {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        if !(self.mc_visited >= MIN_MC_VISITED && self.mc_visited.is_finite()) {
            return Err(CostError::VisitedPenaltyTooSmall(self.mc_visited));
        }
        if !(self.turn_weight >= 0.0 && self.turn_weight.is_finite()) {
            return Err(CostError::BadTurnWeight);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Joules per meter on flat ground.
    pub e_forward: f64,
    /// Uphill multiplier coefficient on the grade.
    pub k_grade: f64,
    /// Joules per degree of spot turn.
    pub e_rotate: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            e_forward: 20.0,
            k_grade: 5.0,
            e_rotate: 0.5,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), CostError> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if ok(self.e_forward) && ok(self.k_grade) && ok(self.e_rotate) {
            Ok(())
        } else {
            Err(CostError::NegativeEnergy)
        }
    }
}

/// Step length plus turn penalty, in cell units.
pub fn static_cost(turn_weight: f64, heading: Direction, move_dir: Direction) -> f64 {
    move_dir.step_length() + turn_weight * heading.turn_steps(move_dir) as f64
}

pub fn basic_cost(weights: &CostWeights, heading: Direction, move_dir: Direction, visit_count: u32) -> f64 {
    static_cost(weights.turn_weight, heading, move_dir) + weights.mc_visited * visit_count as f64
}

/// `|h(to) − h(from)|` in meters.
pub fn dem_cost(field: &HeightField, from: Cell, to: Cell) -> Result<f64, TerrainError> {
    let (rise, _) = field.rise_and_run(from, to)?;
    Ok(rise.abs())
}

pub fn total_cost(
    weights: &CostWeights,
    field: &HeightField,
    heading: Direction,
    from: Cell,
    to: Cell,
    visit_count: u32,
) -> Result<f64, TerrainError> {
    let move_dir = from.direction_to(to).ok_or(TerrainError::NotAdjacent(from, to))?;
    let dem = match weights.dem_scale {
        DemScale::Raw => dem_cost(field, from, to)?,
        DemScale::PerCellSize => dem_cost(field, from, to)? / field.cell_size(),
    };
    Ok(weights.alpha * basic_cost(weights, heading, move_dir, visit_count) + weights.beta * dem)
}

/// Forward energy for a straight cell-to-cell step. Downhill is priced as
/// flat.
pub fn energy_forward(params: &EnergyParams, field: &HeightField, from: Cell, to: Cell) -> Result<f64, TerrainError> {
    let (_, run) = field.rise_and_run(from, to)?;
    energy_forward_over(params, field, from, to, run)
}

/// Forward energy for a step that drove `distance` meters between two
/// adjacent cells (a detour around rocks drives more than the straight run).
/// The grade is the cell-to-cell grade.
pub fn energy_forward_over(
    params: &EnergyParams,
    field: &HeightField,
    from: Cell,
    to: Cell,
    distance: f64,
) -> Result<f64, TerrainError> {
    let (rise, run) = field.rise_and_run(from, to)?;
    let grade = (rise / run).max(0.0);
    Ok(params.e_forward * distance * (1.0 + params.k_grade * grade))
}

/// Spot-turn energy; `dtheta` is the absolute heading change in degrees.
pub fn energy_rotate(params: &EnergyParams, dtheta: f64) -> f64 {
    params.e_rotate * dtheta
}
