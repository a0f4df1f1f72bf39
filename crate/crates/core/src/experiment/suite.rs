//! Runs every (weights, seed) episode of a config and writes the artifacts.
//!
//! Layout under `output_dir`:
//!
//! ```text
//! results.csv
//! config.txt
//! terrain.hfld
//! episodes/<id>/snapshot.txt
//! episodes/<id>/trajectory.csv
//! episodes/<id>/map.ppm        (or error.txt for an episode that failed)
//! ```

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use super::config::{validate, ConfigError, ExperimentConfig, TerrainSource};
use super::render::{render_map, Image, RenderError, DEFAULT_BLOCK};
use crate::bug::ContinuousPath;
use crate::costs::CostWeights;
use crate::direction::Cell;
use crate::geom::{polyline_length, Disc, Point};
use crate::metrics::{write_csv, EpisodeResult, EpisodeRow, TerminatedBy};
use crate::planner::{run_episode, EpisodeSetup, PlannerConfig, PlannerError};
use crate::terrain::{generate_terrain, load_heightfield, HeightField, TerrainError};
use crate::world::GridSnapshot;

pub const RESULTS_FILE: &str = "results.csv";
pub const CONFIG_FILE: &str = "config.txt";
pub const TERRAIN_FILE: &str = "terrain.hfld";
pub const EPISODES_DIR: &str = "episodes";
pub const SNAPSHOT_FILE: &str = "snapshot.txt";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MAP_FILE: &str = "map.ppm";
pub const ERROR_FILE: &str = "error.txt";

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("{0}")]
    Malformed(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SuiteError + '_ {
    move |source| SuiteError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One scheduled episode and what came of it.
#[derive(Debug)]
pub struct EpisodeOutcome {
    pub id: String,
    pub seed: u64,
    pub weights: CostWeights,
    pub result: Result<EpisodeResult, PlannerError>,
}

impl EpisodeOutcome {
    pub fn row(&self) -> EpisodeRow {
        let (a, b, mc) = (self.weights.alpha, self.weights.beta, self.weights.mc_visited);
        match &self.result {
            Ok(r) => EpisodeRow::from_result(self.seed, a, b, mc, r),
            Err(_) => EpisodeRow::failed(self.seed, a, b, mc),
        }
    }
}

#[derive(Debug)]
pub struct SuiteSummary {
    pub rows: Vec<EpisodeRow>,
    pub episode_dirs: Vec<PathBuf>,
    pub outcomes: Vec<EpisodeOutcome>,
}

impl SuiteSummary {
    pub fn all_covered(&self) -> bool {
        self.rows.iter().all(|r| r.terminated_by == TerminatedBy::CoverageReached)
    }
}

/// The heightfield and the rocks that come with it.
pub fn load_terrain(source: &TerrainSource) -> Result<(Arc<HeightField>, Vec<Disc>), SuiteError> {
    match source {
        TerrainSource::File(path) => {
            let f = File::open(path).map_err(io_err(path))?;
            Ok((Arc::new(load_heightfield(BufReader::new(f))?), Vec::new()))
        }
        TerrainSource::Generated(spec) => Ok((Arc::new(generate_terrain(spec)?), spec.rocks.clone())),
    }
}

pub fn episode_id(index: usize, weights: &CostWeights, seed: u64) -> String {
    format!("{index:03}_a{}_b{}_seed{seed}", weights.alpha, weights.beta)
}

/// Runs all episodes (in parallel) without touching the filesystem beyond
/// loading the terrain. Outcomes come back in schedule order: weight sets
/// outer, seeds inner.
pub fn run_episodes(config: &ExperimentConfig) -> Result<(Arc<HeightField>, Vec<EpisodeOutcome>), SuiteError> {
    validate(config)?;
    let (field, rocks) = load_terrain(&config.terrain)?;
    config
        .planner
        .validate(field.cell_size())
        .map_err(|e| ConfigError::Validation(e.to_string()))?;

    let jobs: Vec<(CostWeights, u64)> = config
        .weight_sets()
        .into_iter()
        .flat_map(|w| config.seeds.iter().map(move |&s| (w, s)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(weights, seed))| {
            let setup = EpisodeSetup::new(Arc::clone(&field), config.obstacle_fraction, seed).with_rocks(rocks.clone());
            let planner = PlannerConfig {
                weights,
                ..config.planner.clone()
            };
            EpisodeOutcome {
                id: episode_id(i, &weights, seed),
                seed,
                weights,
                result: run_episode(&setup, &planner),
            }
        })
        .collect();
    Ok((field, outcomes))
}

/// Runs the suite and writes every artifact from this thread, in schedule
/// order.
pub fn run_suite(config: &ExperimentConfig) -> Result<SuiteSummary, SuiteError> {
    let (field, outcomes) = run_episodes(config)?;
    let out = &config.output_dir;
    let episodes_root = out.join(EPISODES_DIR);
    fs::create_dir_all(&episodes_root).map_err(io_err(&episodes_root))?;

    write_file(&out.join(CONFIG_FILE), config.to_config_string().as_bytes())?;
    write_file(&out.join(TERRAIN_FILE), field.to_hfld().as_bytes())?;

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut episode_dirs = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let dir = episodes_root.join(&o.id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        match &o.result {
            Ok(r) => write_episode(&dir, r, &field)?,
            Err(e) => write_file(&dir.join(ERROR_FILE), format!("{e}\n").as_bytes())?,
        }
        rows.push(o.row());
        episode_dirs.push(dir);
    }

    let csv_path = out.join(RESULTS_FILE);
    let f = File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_csv(BufWriter::new(f), &rows)?;
    Ok(SuiteSummary {
        rows,
        episode_dirs,
        outcomes,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), SuiteError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn write_episode(dir: &Path, r: &EpisodeResult, field: &HeightField) -> Result<(), SuiteError> {
    write_file(&dir.join(SNAPSHOT_FILE), r.final_states.to_text().as_bytes())?;
    let traj_path = dir.join(TRAJECTORY_FILE);
    let f = File::create(&traj_path).map_err(io_err(&traj_path))?;
    write_trajectory(BufWriter::new(f), &r.trajectory)?;
    let img = render_map(&r.final_states, &r.trajectory, field, r.start_cell, DEFAULT_BLOCK)?;
    write_file(&dir.join(MAP_FILE), &img.to_ppm())
}

/// `leg,x,y` rows, one per waypoint.
pub fn write_trajectory<W: io::Write>(out: W, legs: &[ContinuousPath]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["leg", "x", "y"])?;
    for (i, leg) in legs.iter().enumerate() {
        for p in &leg.waypoints {
            w.write_record([i.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads legs written by [`write_trajectory`]. Only the waypoints survive
/// the round trip; lengths are recomputed.
pub fn read_trajectory<R: io::Read>(input: R) -> Result<Vec<ContinuousPath>, SuiteError> {
    let mut r = csv::Reader::from_reader(input);
    let mut legs: Vec<Vec<Point>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || SuiteError::Malformed(format!("bad trajectory row {:?}", rec));
        if rec.len() != 3 {
            return Err(bad());
        }
        let leg: usize = rec[0].parse().map_err(|_| bad())?;
        let x: f64 = rec[1].parse().map_err(|_| bad())?;
        let y: f64 = rec[2].parse().map_err(|_| bad())?;
        if leg == legs.len() {
            legs.push(Vec::new());
        } else if leg + 1 != legs.len() {
            return Err(bad());
        }
        legs[leg].push(Point::new(x, y));
    }
    Ok(legs
        .into_iter()
        .map(|waypoints| ContinuousPath {
            total_length: polyline_length(&waypoints),
            waypoints,
            detoured: false,
            turns: Vec::new(),
        })
        .collect())
}

/// Re-renders an episode directory written by [`run_suite`] and returns the
/// image. The terrain is read from the suite root.
pub fn render_episode_dir(dir: &Path) -> Result<Image, SuiteError> {
    let snap_path = dir.join(SNAPSHOT_FILE);
    let text = fs::read_to_string(&snap_path).map_err(io_err(&snap_path))?;
    let snapshot = GridSnapshot::parse(&text).map_err(|e| SuiteError::Malformed(e.to_string()))?;

    let traj_path = dir.join(TRAJECTORY_FILE);
    let f = File::open(&traj_path).map_err(io_err(&traj_path))?;
    let legs = read_trajectory(BufReader::new(f))?;

    let terrain_path = dir
        .parent()
        .and_then(Path::parent)
        .map(|root| root.join(TERRAIN_FILE))
        .ok_or_else(|| SuiteError::Malformed(format!("{} is not inside a suite", dir.display())))?;
    let f = File::open(&terrain_path).map_err(io_err(&terrain_path))?;
    let field = load_heightfield(BufReader::new(f))?;

    let start = legs
        .first()
        .map(|l| l.start())
        .map(|p| point_cell(p, field.cell_size()))
        .ok_or_else(|| SuiteError::Malformed("empty trajectory".into()))?;
    Ok(render_map(&snapshot, &legs, &field, start, DEFAULT_BLOCK)?)
}

fn point_cell(p: Point, cell_size: f64) -> Cell {
    Cell::new((p.y / cell_size).floor() as usize, (p.x / cell_size).floor() as usize)
}
