//! Raster heightfields: synthetic lunar-like generation, HFLD text I/O, and
//! per-cell height and pitch queries.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::direction::Cell;
use crate::geom::{cell_center, Disc, Point};

/// Spacing of the value-noise lattice, in cells.
pub const NOISE_LATTICE_PITCH: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum TerrainError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-finite or unparsable value `{token}`")]
    NonFiniteValue { line: usize, token: String },
    #[error("invalid terrain spec: {0}")]
    InvalidSpec(String),
    #[error("cell {0} is outside the field")]
    OutOfBounds(Cell),
    #[error("cells {0} and {1} are not 8-adjacent")]
    NotAdjacent(Cell, Cell),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Row-major raster of elevations in meters. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    rows: usize,
    cols: usize,
    cell_size: f64,
    heights: Vec<f64>,
}

impl HeightField {
    pub fn new(
        rows: usize,
        cols: usize,
        cell_size: f64,
        heights: Vec<f64>,
    ) -> Result<Self, TerrainError> {
        if rows == 0 || cols == 0 {
            return Err(TerrainError::InvalidSpec("rows and cols must be ≥ 1".into()));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(TerrainError::InvalidSpec("cell_size must be > 0".into()));
        }
        if heights.len() != rows * cols {
            return Err(TerrainError::InvalidSpec(format!(
                "expected {} heights, got {}",
                rows * cols,
                heights.len()
            )));
        }
        if let Some(v) = heights.iter().find(|v| !v.is_finite()) {
            return Err(TerrainError::InvalidSpec(format!("non-finite height {v}")));
        }
        Ok(Self {
            rows,
            cols,
            cell_size,
            heights,
        })
    }

    pub fn flat(rows: usize, cols: usize, cell_size: f64, height: f64) -> Result<Self, TerrainError> {
        Self::new(rows, cols, cell_size, vec![height; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn get(&self, cell: Cell) -> Option<f64> {
        self.contains(cell).then(|| self.heights[self.index(cell)])
    }

    /// Elevation sampled at the center of `cell`.
    pub fn cell_height(&self, cell: Cell) -> Result<f64, TerrainError> {
        self.get(cell).ok_or(TerrainError::OutOfBounds(cell))
    }

    /// Signed height change and horizontal distance for a move between two
    /// 8-adjacent cells.
    pub fn rise_and_run(&self, from: Cell, to: Cell) -> Result<(f64, f64), TerrainError> {
        let h0 = self.cell_height(from)?;
        let h1 = self.cell_height(to)?;
        let dir = from
            .direction_to(to)
            .ok_or(TerrainError::NotAdjacent(from, to))?;
        Ok((h1 - h0, dir.step_length() * self.cell_size))
    }

    /// Unsigned inclination in degrees experienced moving between two
    /// 8-adjacent cells.
    pub fn pitch_between(&self, from: Cell, to: Cell) -> Result<f64, TerrainError> {
        let (rise, run) = self.rise_and_run(from, to)?;
        Ok((rise.abs() / run).atan().to_degrees())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.heights
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| {
                (lo.min(h), hi.max(h))
            })
    }

    /// Serializes to HFLD text.
    pub fn to_hfld(&self) -> String {
        let mut out = String::with_capacity(self.heights.len() * 8 + 32);
        let _ = writeln!(out, "{} {} {}", self.rows, self.cols, format_sig6(self.cell_size));
        for row in self.heights.chunks(self.cols) {
            let mut first = true;
            for &h in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                out.push_str(&format_sig6(h));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_hfld<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_hfld().as_bytes())
    }
}

/// Reads an HFLD stream: a `rows cols cell_size` header followed by `rows`
/// lines of `cols` values. `#` lines and blank lines are skipped.
pub fn load_heightfield<R: BufRead>(source: R) -> Result<HeightField, TerrainError> {
    let mut header: Option<(usize, usize, f64)> = None;
    let mut heights = Vec::new();
    let mut rows_read = 0usize;
    let mut last_line = 0usize;

    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line.map_err(|e| TerrainError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((rows, cols, _)) = header else {
            header = Some(parse_header(trimmed, lineno)?);
            continue;
        };
        if rows_read == rows {
            return Err(TerrainError::DimensionMismatch {
                line: lineno,
                expected: 0,
                found: trimmed.split_whitespace().count(),
            });
        }
        let before = heights.len();
        for tok in trimmed.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| TerrainError::NonFiniteValue {
                line: lineno,
                token: tok.to_string(),
            })?;
            if !v.is_finite() {
                return Err(TerrainError::NonFiniteValue {
                    line: lineno,
                    token: tok.to_string(),
                });
            }
            heights.push(v);
        }
        let found = heights.len() - before;
        if found != cols {
            return Err(TerrainError::DimensionMismatch {
                line: lineno,
                expected: cols,
                found,
            });
        }
        rows_read += 1;
    }

    let Some((rows, cols, cell_size)) = header else {
        return Err(TerrainError::MalformedHeader {
            line: last_line.max(1),
            reason: "missing header".into(),
        });
    };
    if rows_read != rows {
        return Err(TerrainError::DimensionMismatch {
            line: last_line + 1,
            expected: rows * cols,
            found: heights.len(),
        });
    }
    HeightField::new(rows, cols, cell_size, heights)
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize, f64), TerrainError> {
    let bad = |reason: &str| TerrainError::MalformedHeader {
        line: lineno,
        reason: reason.to_string(),
    };
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(bad("expected `rows cols cell_size`"));
    }
    let rows: usize = toks[0].parse().map_err(|_| bad("rows is not an integer"))?;
    let cols: usize = toks[1].parse().map_err(|_| bad("cols is not an integer"))?;
    let cell_size: f64 = toks[2].parse().map_err(|_| bad("cell_size is not a number"))?;
    if rows == 0 || cols == 0 {
        return Err(bad("rows and cols must be ≥ 1"));
    }
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(bad("cell_size must be a positive finite number"));
    }
    Ok((rows, cols, cell_size))
}

/// Formats like C's `%g`: six significant digits, trailing zeros removed,
/// scientific notation outside `1e-4 ≤ |v| < 1e6`.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.5e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".to_string()
    } else {
        t.to_string()
    }
}

/// Bowl-shaped depression: `depth·cos²(π·r/(2·radius))` below the surrounding
/// surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crater {
    pub center: Point,
    pub radius: f64,
    pub depth: f64,
}

impl Crater {
    pub fn profile(&self, p: Point) -> f64 {
        let r = p.distance(self.center);
        if r <= self.radius {
            let c = (std::f64::consts::PI * r / (2.0 * self.radius)).cos();
            -self.depth * c * c
        } else {
            0.0
        }
    }
}

/// Gaussian bump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hill {
    pub center: Point,
    pub sigma: f64,
    pub height: f64,
}

impl Hill {
    pub fn profile(&self, p: Point) -> f64 {
        let r2 = {
            let d = p - self.center;
            d.dot(d)
        };
        self.height * (-r2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainSpec {
    pub rows: usize,
    pub cols: usize,
    pub cell_size: f64,
    pub base_height: f64,
    pub craters: Vec<Crater>,
    pub hills: Vec<Hill>,
    /// Rock footprints. They leave the heightfield untouched and are handed
    /// to the grid world as obstacles.
    pub rocks: Vec<Disc>,
    pub noise_amplitude: f64,
    pub seed: u64,
}

impl TerrainSpec {
    pub fn flat(rows: usize, cols: usize, cell_size: f64) -> Self {
        Self {
            rows,
            cols,
            cell_size,
            base_height: 0.0,
            craters: Vec::new(),
            hills: Vec::new(),
            rocks: Vec::new(),
            noise_amplitude: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TerrainError> {
        let bad = |m: String| Err(TerrainError::InvalidSpec(m));
        if self.rows == 0 || self.cols == 0 {
            return bad("rows and cols must be ≥ 1".into());
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return bad("cell_size must be > 0".into());
        }
        if !self.base_height.is_finite() {
            return bad("base_height must be finite".into());
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return bad("noise_amplitude must be ≥ 0".into());
        }
        for (i, c) in self.craters.iter().enumerate() {
            if !(c.radius > 0.0) || !(c.depth >= 0.0) || !finite_point(c.center) {
                return bad(format!("crater {i}: radius must be > 0 and depth ≥ 0"));
            }
        }
        for (i, h) in self.hills.iter().enumerate() {
            if !(h.sigma > 0.0) || !(h.height >= 0.0) || !finite_point(h.center) {
                return bad(format!("hill {i}: sigma must be > 0 and height ≥ 0"));
            }
        }
        for (i, r) in self.rocks.iter().enumerate() {
            if !(r.radius > 0.0) || !finite_point(r.center) {
                return bad(format!("rock {i}: radius must be > 0"));
            }
        }
        Ok(())
    }

    /// Analytic surface (craters and hills, no noise) at a point.
    pub fn relief_at(&self, p: Point) -> f64 {
        let mut h = self.base_height;
        for c in &self.craters {
            h += c.profile(p);
        }
        for hill in &self.hills {
            h += hill.profile(p);
        }
        h
    }
}

fn finite_point(p: Point) -> bool {
    p.x.is_finite() && p.y.is_finite()
}

/// Seeded value noise on a coarse lattice, bilinearly interpolated.
struct ValueNoise {
    lattice_cols: usize,
    values: Vec<f64>,
}

impl ValueNoise {
    fn new(rows: usize, cols: usize, seed: u64) -> Self {
        let lattice_rows = rows / NOISE_LATTICE_PITCH + 2;
        let lattice_cols = cols / NOISE_LATTICE_PITCH + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..lattice_rows * lattice_cols)
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect();
        Self {
            lattice_cols,
            values,
        }
    }

    fn at(&self, row: usize, col: usize) -> f64 {
        let pitch = NOISE_LATTICE_PITCH;
        let (r0, c0) = (row / pitch, col / pitch);
        let fr = (row % pitch) as f64 / pitch as f64;
        let fc = (col % pitch) as f64 / pitch as f64;
        let v = |r: usize, c: usize| self.values[r * self.lattice_cols + c];
        let top = v(r0, c0) * (1.0 - fc) + v(r0, c0 + 1) * fc;
        let bottom = v(r0 + 1, c0) * (1.0 - fc) + v(r0 + 1, c0 + 1) * fc;
        top * (1.0 - fr) + bottom * fr
    }
}

/// Builds a heightfield from analytic features plus seeded noise. Pure in
/// `spec`.
pub fn generate_terrain(spec: &TerrainSpec) -> Result<HeightField, TerrainError> {
    spec.validate()?;
    let noise = ValueNoise::new(spec.rows, spec.cols, spec.seed);
    let mut heights = Vec::with_capacity(spec.rows * spec.cols);
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            let p = cell_center(Cell::new(row, col), spec.cell_size);
            let h = spec.relief_at(p) + spec.noise_amplitude * noise.at(row, col);
            heights.push(h);
        }
    }
    HeightField::new(spec.rows, spec.cols, spec.cell_size, heights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(s: &str) -> Result<HeightField, TerrainError> {
        load_heightfield(s.as_bytes())
    }

    #[test]
    fn loads_flat_field() {
        let f = load("2 2 1.0\n0 0\n0 0\n").unwrap();
        assert_eq!((f.rows(), f.cols(), f.cell_size()), (2, 2, 1.0));
        assert!(f.heights().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn comments_are_skipped() {
        let f = load("# dem\n1 2 0.5\n# row 0\n1.5 -2\n").unwrap();
        assert_eq!(f.heights(), &[1.5, -2.0]);
    }

    #[test]
    fn short_field_is_dimension_mismatch() {
        let err = load("2 3 1.0\n0 0 0\n0 0\n").unwrap_err();
        assert_eq!(
            err,
            TerrainError::DimensionMismatch {
                line: 3,
                expected: 3,
                found: 2
            }
        );
        assert!(matches!(
            load("2 3 1.0\n0 0 0\n").unwrap_err(),
            TerrainError::DimensionMismatch { line: 3, .. }
        ));
        assert!(matches!(
            load("1 1 1.0\n0\n0\n").unwrap_err(),
            TerrainError::DimensionMismatch { line: 3, .. }
        ));
    }

    #[test]
    fn header_and_value_errors_name_the_line() {
        assert!(matches!(
            load("2 2\n0 0\n0 0\n").unwrap_err(),
            TerrainError::MalformedHeader { line: 1, .. }
        ));
        assert!(matches!(
            load("#c\n2 x 1\n").unwrap_err(),
            TerrainError::MalformedHeader { line: 2, .. }
        ));
        assert!(matches!(
            load("1 1 -1\n0\n").unwrap_err(),
            TerrainError::MalformedHeader { line: 1, .. }
        ));
        assert_eq!(
            load("1 2 1\n0 NaN\n").unwrap_err(),
            TerrainError::NonFiniteValue {
                line: 2,
                token: "NaN".into()
            }
        );
        assert!(matches!(
            load("1 2 1\n0 inf\n").unwrap_err(),
            TerrainError::NonFiniteValue { line: 2, .. }
        ));
        assert!(matches!(
            load("").unwrap_err(),
            TerrainError::MalformedHeader { .. }
        ));
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(-0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(5.0), "5");
        assert_eq!(format_sig6(-2.5), "-2.5");
        assert_eq!(format_sig6(3.14159265), "3.14159");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(0.000123456), "0.000123456");
        assert_eq!(format_sig6(0.0000123456), "1.23456e-05");
        assert_eq!(format_sig6(99999.95), "99999.9");
        assert_eq!(format_sig6(999999.5), "1e+06");
        assert_eq!(format_sig6(-1e-7), "-1e-07");
    }

    #[test]
    fn flat_spec_is_uniform() {
        let mut spec = TerrainSpec::flat(4, 5, 1.0);
        spec.base_height = 5.0;
        let f = generate_terrain(&spec).unwrap();
        assert!(f.heights().iter().all(|&h| h == 5.0));
    }

    #[test]
    fn crater_center_is_base_minus_depth() {
        let mut spec = TerrainSpec::flat(21, 21, 1.0);
        spec.base_height = 3.0;
        spec.craters.push(Crater {
            center: Point::new(10.5, 10.5),
            radius: 8.0,
            depth: 2.0,
        });
        let f = generate_terrain(&spec).unwrap();
        assert_eq!(f.cell_height(Cell::new(10, 10)).unwrap(), 1.0);
        assert_eq!(f.cell_height(Cell::new(0, 0)).unwrap(), 3.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = TerrainSpec::flat(0, 5, 1.0);
        assert!(matches!(generate_terrain(&spec), Err(TerrainError::InvalidSpec(_))));
        spec.rows = 3;
        spec.cell_size = 0.0;
        assert!(generate_terrain(&spec).is_err());
        spec.cell_size = 1.0;
        spec.hills.push(Hill {
            center: Point::new(1.0, 1.0),
            sigma: 0.0,
            height: 1.0,
        });
        assert!(generate_terrain(&spec).is_err());
        spec.hills.clear();
        spec.noise_amplitude = -1.0;
        assert!(generate_terrain(&spec).is_err());
    }

    #[test]
    fn cell_height_out_of_bounds() {
        let f = HeightField::flat(2, 2, 1.0, 3.0).unwrap();
        assert_eq!(f.cell_height(Cell::new(1, 1)).unwrap(), 3.0);
        assert_eq!(
            f.cell_height(Cell::new(2, 0)),
            Err(TerrainError::OutOfBounds(Cell::new(2, 0)))
        );
    }

    #[test]
    fn pitch_examples() {
        let f = HeightField::new(2, 2, 1.0, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let a = Cell::new(0, 0);
        assert_eq!(f.pitch_between(a, Cell::new(1, 0)).unwrap(), 0.0);
        assert!((f.pitch_between(a, Cell::new(0, 1)).unwrap() - 45.0).abs() < 1e-12);
        let diag = f.pitch_between(a, Cell::new(1, 1)).unwrap();
        assert!((diag - (1.0 / 2f64.sqrt()).atan().to_degrees()).abs() < 1e-12);
        assert!((diag - 35.264389682754654).abs() < 1e-9);
        assert_eq!(
            f.pitch_between(a, a),
            Err(TerrainError::NotAdjacent(a, a))
        );
        let far = HeightField::flat(3, 3, 1.0, 0.0).unwrap();
        assert!(matches!(
            far.pitch_between(a, Cell::new(2, 2)),
            Err(TerrainError::NotAdjacent(..))
        ));
    }
}
