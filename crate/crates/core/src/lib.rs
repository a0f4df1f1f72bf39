//! Myopic coverage path planning for sensor-limited rovers on raster terrain.
//!
//! The rover senses only its eight neighboring cells, scores each with a
//! motion cost that blends orientation, revisit count, and height change,
//! and drives to the cheapest one. Legs between cells avoid rock footprints
//! with a Bug-2 boundary follower. Episodes are fully deterministic given the
//! terrain, the configuration, and the obstacle seed.
//!
//! Modules, bottom-up:
//!
//! - [`terrain`]: heightfields, synthetic craters/hills/noise, HFLD text I/O
//! - [`world`]: cell grid, state machine, sensing, reachability
//! - [`costs`]: motion cost and energy models
//! - [`bug`]: continuous obstacle avoidance for single legs
//! - [`planner`]: the decision loop and episode runner
//! - [`metrics`]: episode evaluation and the results table
//! - [`experiment`]: config files, suites, snapshots, and map images

pub mod bug;
pub mod costs;
pub mod direction;
pub mod experiment;
pub mod geom;
pub mod metrics;
pub mod planner;
pub mod terrain;
pub mod world;

pub use direction::{Cell, Direction};
pub use geom::{Disc, Point};
