//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments run to the end of the line
//! terrain.rows = 60
//! terrain.cols = 60
//! terrain.crater = 30 30 8 2        # center_x center_y radius depth
//! obstacle_fraction = 0.05
//! planner.coverage_target = 0.95
//! sweep = 1 0
//! sweep = 0.3 0.7
//! seeds = 0..10
//! output_dir = out
//! ```
//!
//! `terrain.crater`, `terrain.hill`, `terrain.rock` and `sweep` may repeat;
//! every other key may appear once. A terrain is either `terrain.file` or a
//! generated one described by `terrain.rows`/`terrain.cols` and friends.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::costs::{CostWeights, DemScale};
use crate::direction::Direction;
use crate::geom::{Disc, Point};
use crate::planner::PlannerConfig;
use crate::terrain::{Crater, Hill, TerrainSpec};

pub const DEFAULT_OBSTACLE_FRACTION: f64 = 0.05;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("reading config: {0}")]
    Io(String),
}

fn parse_err(line: usize, reason: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerrainSource {
    File(PathBuf),
    Generated(TerrainSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub terrain: TerrainSource,
    pub obstacle_fraction: f64,
    pub planner: PlannerConfig,
    /// `(alpha, beta)` pairs; `None` runs the planner weights only.
    pub sweep: Option<Vec<(f64, f64)>>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Weight sets the suite runs, in order.
    pub fn weight_sets(&self) -> Vec<CostWeights> {
        match &self.sweep {
            None => vec![self.planner.weights],
            Some(pairs) => pairs
                .iter()
                .map(|&(alpha, beta)| CostWeights {
                    alpha,
                    beta,
                    ..self.planner.weights
                })
                .collect(),
        }
    }

    /// Makes a relative terrain file and output directory relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let TerrainSource::File(p) = &mut self.terrain {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    /// Writes the config back in the accepted format.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.terrain {
            TerrainSource::File(p) => kv("terrain.file", p.display().to_string()),
            TerrainSource::Generated(t) => {
                kv("terrain.rows", t.rows.to_string());
                kv("terrain.cols", t.cols.to_string());
                kv("terrain.cell_size", t.cell_size.to_string());
                kv("terrain.base_height", t.base_height.to_string());
                for c in &t.craters {
                    kv("terrain.crater", format!("{} {} {} {}", c.center.x, c.center.y, c.radius, c.depth));
                }
                for h in &t.hills {
                    kv("terrain.hill", format!("{} {} {} {}", h.center.x, h.center.y, h.sigma, h.height));
                }
                for r in &t.rocks {
                    kv("terrain.rock", format!("{} {} {}", r.center.x, r.center.y, r.radius));
                }
                kv("terrain.noise_amplitude", t.noise_amplitude.to_string());
                kv("terrain.seed", t.seed.to_string());
            }
        }
        kv("obstacle_fraction", self.obstacle_fraction.to_string());
        let p = &self.planner;
        kv("planner.alpha", p.weights.alpha.to_string());
        kv("planner.beta", p.weights.beta.to_string());
        kv("planner.mc_visited", p.weights.mc_visited.to_string());
        kv("planner.turn_weight", p.weights.turn_weight.to_string());
        kv("planner.dem_scale", dem_scale_name(p.weights.dem_scale).into());
        kv("planner.coverage_target", p.coverage_target.to_string());
        if let Some(b) = p.step_budget {
            kv("planner.step_budget", b.to_string());
        }
        kv("planner.start_row", p.start_cell.row.to_string());
        kv("planner.start_col", p.start_cell.col.to_string());
        kv("planner.start_heading", p.start_heading.to_string());
        kv("planner.slope_limit", p.slope_limit.to_string());
        kv("energy.e_forward", p.energy.e_forward.to_string());
        kv("energy.k_grade", p.energy.k_grade.to_string());
        kv("energy.e_rotate", p.energy.e_rotate.to_string());
        kv("bug.standoff", p.bug.standoff.to_string());
        kv("bug.step_resolution", p.bug.step_resolution.to_string());
        kv("bug.max_circumnavigation", p.bug.max_circumnavigation.to_string());
        if let Some(pairs) = &self.sweep {
            for (a, b) in pairs {
                kv("sweep", format!("{a} {b}"));
            }
        }
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        kv("seeds", seeds.join(" "));
        kv("output_dir", self.output_dir.display().to_string());
        s
    }
}

fn dem_scale_name(s: DemScale) -> &'static str {
    match s {
        DemScale::Raw => "raw",
        DemScale::PerCellSize => "per_cell_size",
    }
}

/// Key-value lines with comments stripped: `(line number, key, value)`.
fn entries<R: BufRead>(source: R) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| ConfigError::Io(e.to_string()))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected `key = value`, got `{content}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(parse_err(line_no, "empty key"));
        }
        if v.is_empty() {
            return Err(parse_err(line_no, format!("missing value for `{k}`")));
        }
        out.push((line_no, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| parse_err(line, format!("`{key}`: cannot parse `{v}`")))
}

fn floats(line: usize, key: &str, v: &str, n: usize) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != n {
        return Err(parse_err(line, format!("`{key}` takes {n} numbers, got {}", parts.len())));
    }
    parts.iter().map(|p| num::<f64>(line, key, p)).collect()
}

fn parse_seeds(line: usize, v: &str) -> Result<Vec<u64>, ConfigError> {
    let mut seeds = Vec::new();
    for tok in v.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = tok.split_once("..") {
            let a: u64 = num(line, "seeds", a)?;
            let b: u64 = num(line, "seeds", b)?;
            if b <= a {
                return Err(parse_err(line, format!("empty seed range `{tok}`")));
            }
            seeds.extend(a..b);
        } else {
            seeds.push(num(line, "seeds", tok)?);
        }
    }
    Ok(seeds)
}

/// Keys of a generated terrain.
#[derive(Default)]
struct TerrainKeys {
    rows: Option<usize>,
    cols: Option<usize>,
    cell_size: Option<f64>,
    base_height: Option<f64>,
    noise_amplitude: Option<f64>,
    seed: Option<u64>,
    craters: Vec<Crater>,
    hills: Vec<Hill>,
    rocks: Vec<Disc>,
}

impl TerrainKeys {
    fn any(&self) -> bool {
        self.rows.is_some()
            || self.cols.is_some()
            || self.cell_size.is_some()
            || self.base_height.is_some()
            || self.noise_amplitude.is_some()
            || self.seed.is_some()
            || !self.craters.is_empty()
            || !self.hills.is_empty()
            || !self.rocks.is_empty()
    }

    /// Handles `name` (the part after `terrain.`). Returns false for an
    /// unknown key.
    fn accept(&mut self, line: usize, name: &str, v: &str, seen: &mut Vec<String>) -> Result<bool, ConfigError> {
        let key = format!("terrain.{name}");
        let once = |seen: &mut Vec<String>| {
            if seen.contains(&key) {
                Err(parse_err(line, format!("duplicate key `{key}`")))
            } else {
                seen.push(key.clone());
                Ok(())
            }
        };
        match name {
            "rows" => {
                once(seen)?;
                self.rows = Some(num(line, &key, v)?);
            }
            "cols" => {
                once(seen)?;
                self.cols = Some(num(line, &key, v)?);
            }
            "cell_size" => {
                once(seen)?;
                self.cell_size = Some(num(line, &key, v)?);
            }
            "base_height" => {
                once(seen)?;
                self.base_height = Some(num(line, &key, v)?);
            }
            "noise_amplitude" => {
                once(seen)?;
                self.noise_amplitude = Some(num(line, &key, v)?);
            }
            "seed" => {
                once(seen)?;
                self.seed = Some(num(line, &key, v)?);
            }
            "crater" => {
                let f = floats(line, &key, v, 4)?;
                self.craters.push(Crater {
                    center: Point::new(f[0], f[1]),
                    radius: f[2],
                    depth: f[3],
                });
            }
            "hill" => {
                let f = floats(line, &key, v, 4)?;
                self.hills.push(Hill {
                    center: Point::new(f[0], f[1]),
                    sigma: f[2],
                    height: f[3],
                });
            }
            "rock" => {
                let f = floats(line, &key, v, 3)?;
                self.rocks.push(Disc::new(Point::new(f[0], f[1]), f[2]));
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn build(self) -> Result<TerrainSpec, ConfigError> {
        let (Some(rows), Some(cols)) = (self.rows, self.cols) else {
            return Err(ConfigError::Validation(
                "a generated terrain needs terrain.rows and terrain.cols".into(),
            ));
        };
        let spec = TerrainSpec {
            rows,
            cols,
            cell_size: self.cell_size.unwrap_or(1.0),
            base_height: self.base_height.unwrap_or(0.0),
            craters: self.craters,
            hills: self.hills,
            rocks: self.rocks,
            noise_amplitude: self.noise_amplitude.unwrap_or(0.0),
            seed: self.seed.unwrap_or(0),
        };
        spec.validate().map_err(|e| ConfigError::Validation(e.to_string()))?;
        Ok(spec)
    }
}

/// Parses a terrain description made of `terrain.*` keys only.
pub fn parse_terrain_spec<R: BufRead>(source: R) -> Result<TerrainSpec, ConfigError> {
    let mut keys = TerrainKeys::default();
    let mut seen = Vec::new();
    for (line, k, v) in entries(source)? {
        let known = match k.strip_prefix("terrain.") {
            Some(name) if name != "file" => keys.accept(line, name, &v, &mut seen)?,
            _ => false,
        };
        if !known {
            return Err(parse_err(line, format!("unknown terrain key `{k}`")));
        }
    }
    keys.build()
}

pub fn parse_config<R: BufRead>(source: R) -> Result<ExperimentConfig, ConfigError> {
    let mut terrain = TerrainKeys::default();
    let mut terrain_file: Option<PathBuf> = None;
    let mut obstacle_fraction = DEFAULT_OBSTACLE_FRACTION;
    let mut planner = PlannerConfig::default();
    let mut sweep: Vec<(f64, f64)> = Vec::new();
    let mut seeds: Option<Vec<u64>> = None;
    let mut output_dir = PathBuf::from(DEFAULT_OUTPUT_DIR);
    let mut seen: Vec<String> = Vec::new();

    for (line, k, v) in entries(source)? {
        if let Some(name) = k.strip_prefix("terrain.") {
            if name == "file" {
                if terrain_file.is_some() {
                    return Err(parse_err(line, "duplicate key `terrain.file`"));
                }
                terrain_file = Some(PathBuf::from(&v));
                continue;
            }
            if terrain.accept(line, name, &v, &mut seen)? {
                continue;
            }
            return Err(parse_err(line, format!("unknown key `{k}`")));
        }
        if k == "sweep" {
            for pair in v.split(',') {
                let f = floats(line, "sweep", pair, 2)?;
                sweep.push((f[0], f[1]));
            }
            continue;
        }
        if seen.contains(&k) {
            return Err(parse_err(line, format!("duplicate key `{k}`")));
        }
        seen.push(k.clone());
        let w = &mut planner.weights;
        match k.as_str() {
            "obstacle_fraction" => obstacle_fraction = num(line, &k, &v)?,
            "seeds" => seeds = Some(parse_seeds(line, &v)?),
            "output_dir" => output_dir = PathBuf::from(&v),
            "planner.alpha" => w.alpha = num(line, &k, &v)?,
            "planner.beta" => w.beta = num(line, &k, &v)?,
            "planner.mc_visited" => w.mc_visited = num(line, &k, &v)?,
            "planner.turn_weight" => w.turn_weight = num(line, &k, &v)?,
            "planner.dem_scale" => {
                w.dem_scale = match v.as_str() {
                    "raw" => DemScale::Raw,
                    "per_cell_size" => DemScale::PerCellSize,
                    _ => return Err(parse_err(line, format!("`{k}` is `raw` or `per_cell_size`, got `{v}`"))),
                }
            }
            "planner.coverage_target" => planner.coverage_target = num(line, &k, &v)?,
            "planner.step_budget" => planner.step_budget = Some(num(line, &k, &v)?),
            "planner.start_row" => planner.start_cell.row = num(line, &k, &v)?,
            "planner.start_col" => planner.start_cell.col = num(line, &k, &v)?,
            "planner.start_heading" => {
                planner.start_heading = Direction::from_str(&v).map_err(|e| parse_err(line, e))?;
            }
            "planner.slope_limit" => planner.slope_limit = num(line, &k, &v)?,
            "energy.e_forward" => planner.energy.e_forward = num(line, &k, &v)?,
            "energy.k_grade" => planner.energy.k_grade = num(line, &k, &v)?,
            "energy.e_rotate" => planner.energy.e_rotate = num(line, &k, &v)?,
            "bug.standoff" => planner.bug.standoff = num(line, &k, &v)?,
            "bug.step_resolution" => planner.bug.step_resolution = num(line, &k, &v)?,
            "bug.max_circumnavigation" => planner.bug.max_circumnavigation = num(line, &k, &v)?,
            _ => return Err(parse_err(line, format!("unknown key `{k}`"))),
        }
    }

    let terrain = match (terrain_file, terrain.any()) {
        (Some(_), true) => {
            return Err(ConfigError::Validation(
                "terrain.file cannot be combined with generated terrain keys".into(),
            ))
        }
        (Some(p), false) => TerrainSource::File(p),
        (None, true) => TerrainSource::Generated(terrain.build()?),
        (None, false) => {
            return Err(ConfigError::Validation(
                "no terrain: set terrain.file or terrain.rows and terrain.cols".into(),
            ))
        }
    };
    let config = ExperimentConfig {
        terrain,
        obstacle_fraction,
        planner,
        sweep: (!sweep.is_empty()).then_some(sweep),
        seeds: seeds.unwrap_or_default(),
        output_dir,
    };
    validate(&config)?;
    Ok(config)
}

pub fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    let invalid = |m: String| Err(ConfigError::Validation(m));
    if config.seeds.is_empty() {
        return invalid("seeds must not be empty".into());
    }
    if !(0.0..1.0).contains(&config.obstacle_fraction) {
        return invalid(format!("obstacle_fraction must lie in [0, 1), got {}", config.obstacle_fraction));
    }
    if let Some(pairs) = &config.sweep {
        for (i, (&(a, b), w)) in pairs.iter().zip(config.weight_sets()).enumerate() {
            if (a + b - 1.0).abs() > 1e-12 {
                return invalid(format!("alpha + beta must equal 1 (sweep pair {}: {a} + {b})", i + 1));
            }
            w.validate()
                .map_err(|e| ConfigError::Validation(format!("sweep pair {}: {e}", i + 1)))?;
        }
    }
    // A file terrain's cell size is known only once it is loaded, so the
    // cell-size-dependent checks wait until then.
    let cell_size = match &config.terrain {
        TerrainSource::Generated(t) => {
            let start = config.planner.start_cell;
            if start.row >= t.rows || start.col >= t.cols {
                return invalid(format!("start cell {start} lies outside the {}x{} grid", t.rows, t.cols));
            }
            t.cell_size
        }
        TerrainSource::File(_) => f64::INFINITY,
    };
    config
        .planner
        .validate(cell_size)
        .map_err(|e| ConfigError::Validation(e.to_string()))
}
