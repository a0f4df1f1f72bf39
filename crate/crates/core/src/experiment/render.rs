//! Trajectory maps as binary PPM (P6) images.
//!
//! Every cell is a `block × block` square colored by its state, darkened on
//! low ground. Trajectories are drawn on top in red and the start cell gets
//! a blue square marker.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::bug::ContinuousPath;
use crate::direction::Cell;
use crate::terrain::HeightField;
use crate::world::{CellState, GridSnapshot};

pub const DEFAULT_BLOCK: usize = 8;

pub type Rgb = [u8; 3];

pub const UNKNOWN_COLOR: Rgb = [64, 64, 64];
pub const FREE_COLOR: Rgb = [200, 200, 200];
pub const OBSTACLE_COLOR: Rgb = [0, 0, 0];
pub const VISITED_COLOR: Rgb = [46, 160, 67];
pub const TRAJECTORY_COLOR: Rgb = [220, 30, 30];
pub const START_COLOR: Rgb = [30, 70, 230];

/// Brightness of the lowest cell relative to the highest.
const MIN_SHADE: f64 = 0.6;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("dimension mismatch: snapshot is {snapshot_rows}x{snapshot_cols}, heightfield is {field_rows}x{field_cols}")]
    DimensionMismatch {
        snapshot_rows: usize,
        snapshot_cols: usize,
        field_rows: usize,
        field_cols: usize,
    },
    #[error("start cell {0} lies outside the grid")]
    StartOutOfBounds(Cell),
    #[error("block size must be ≥ 1")]
    ZeroBlock,
    #[error("malformed PPM: {0}")]
    MalformedPpm(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        if x < self.width && y < self.height {
            self.pixels[y * self.width + x] = c;
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn write_ppm<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&self.to_ppm())
    }

    /// Reads the P6 layout written by [`Image::to_ppm`] (no comments).
    pub fn read_ppm<R: Read>(mut r: R) -> Result<Self, RenderError> {
        let bad = |m: &str| RenderError::MalformedPpm(m.to_string());
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| bad(&e.to_string()))?;
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(bad("expected P6 with maxval 255"));
        }
        let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
        let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
        let data = bytes.get(pos..).unwrap_or(&[]);
        if data.len() != width * height * 3 {
            return Err(bad("pixel data length"));
        }
        let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Self { width, height, pixels })
    }
}

pub fn state_color(state: CellState) -> Rgb {
    match state {
        CellState::Unknown => UNKNOWN_COLOR,
        CellState::Free => FREE_COLOR,
        CellState::Obstacle => OBSTACLE_COLOR,
        CellState::Visited => VISITED_COLOR,
    }
}

/// Cell color at normalized height `t` in `[0, 1]`.
pub fn shaded(color: Rgb, t: f64) -> Rgb {
    let f = MIN_SHADE + (1.0 - MIN_SHADE) * t.clamp(0.0, 1.0);
    color.map(|c| (c as f64 * f).round() as u8)
}

/// Normalized height of each cell; a flat field is all `1.0`.
fn normalized_heights(field: &HeightField) -> Vec<f64> {
    let (lo, hi) = field.min_max();
    let span = hi - lo;
    field
        .heights()
        .iter()
        .map(|&h| if span > 0.0 { (h - lo) / span } else { 1.0 })
        .collect()
}

pub fn render_map(
    snapshot: &GridSnapshot,
    trajectory: &[ContinuousPath],
    field: &HeightField,
    start: Cell,
    block: usize,
) -> Result<Image, RenderError> {
    if snapshot.rows != field.rows() || snapshot.cols != field.cols() {
        return Err(RenderError::DimensionMismatch {
            snapshot_rows: snapshot.rows,
            snapshot_cols: snapshot.cols,
            field_rows: field.rows(),
            field_cols: field.cols(),
        });
    }
    if block == 0 {
        return Err(RenderError::ZeroBlock);
    }
    if !field.contains(start) {
        return Err(RenderError::StartOutOfBounds(start));
    }
    let mut img = Image::new(snapshot.cols * block, snapshot.rows * block, UNKNOWN_COLOR);
    let shade = normalized_heights(field);
    for row in 0..snapshot.rows {
        for col in 0..snapshot.cols {
            let cell = Cell::new(row, col);
            let c = shaded(state_color(snapshot.state(cell)), shade[field.index(cell)]);
            for y in row * block..(row + 1) * block {
                for x in col * block..(col + 1) * block {
                    img.set(x, y, c);
                }
            }
        }
    }

    let scale = block as f64 / field.cell_size();
    for path in trajectory {
        for w in path.waypoints.windows(2) {
            draw_line(&mut img, (w[0].x * scale, w[0].y * scale), (w[1].x * scale, w[1].y * scale));
        }
    }

    // Square marker kept inside the start cell.
    let m = (block / 4).max(1);
    let (x0, y0) = (start.col * block, start.row * block);
    let (cx, cy) = (x0 + block / 2, y0 + block / 2);
    for y in cy.saturating_sub(m).max(y0)..(cy + m).min(y0 + block) {
        for x in cx.saturating_sub(m).max(x0)..(cx + m).min(x0 + block) {
            img.set(x, y, START_COLOR);
        }
    }
    Ok(img)
}

/// Samples the segment every half pixel.
fn draw_line(img: &mut Image, a: (f64, f64), b: (f64, f64)) {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let n = (len * 2.0).ceil().max(1.0) as usize;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let x = a.0 + (b.0 - a.0) * t;
        let y = a.1 + (b.1 - a.1) * t;
        if x >= 0.0 && y >= 0.0 {
            img.set(x as usize, y as usize, TRAJECTORY_COLOR);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn snapshot(rows: usize, cols: usize, states: Vec<CellState>) -> GridSnapshot {
        GridSnapshot { rows, cols, states }
    }

    #[test]
    fn all_unknown_is_dark_with_a_start_marker() {
        let field = HeightField::flat(3, 4, 1.0, 0.0).unwrap();
        let snap = snapshot(3, 4, vec![CellState::Unknown; 12]);
        let img = render_map(&snap, &[], &field, Cell::new(1, 2), 8).unwrap();
        assert_eq!((img.width, img.height), (32, 24));
        let mut marker = 0;
        for y in 0..img.height {
            for x in 0..img.width {
                match img.pixel(x, y) {
                    UNKNOWN_COLOR => {}
                    START_COLOR => {
                        marker += 1;
                        assert!((16..24).contains(&x) && (8..16).contains(&y));
                    }
                    other => panic!("unexpected pixel {other:?} at ({x}, {y})"),
                }
            }
        }
        assert_eq!(marker, 16);
    }

    #[test]
    fn legend_colors_are_fixed() {
        assert_eq!(state_color(CellState::Unknown), [64, 64, 64]);
        assert_eq!(state_color(CellState::Free), [200, 200, 200]);
        assert_eq!(state_color(CellState::Obstacle), [0, 0, 0]);
        assert_eq!(state_color(CellState::Visited), [46, 160, 67]);
        assert_eq!(shaded(FREE_COLOR, 1.0), FREE_COLOR);
        assert_eq!(shaded(FREE_COLOR, 0.0), [120, 120, 120]);
    }

    #[test]
    fn trajectory_is_overdrawn() {
        let field = HeightField::flat(2, 2, 1.0, 0.0).unwrap();
        let snap = snapshot(2, 2, vec![CellState::Visited; 4]);
        let leg = ContinuousPath::straight(Point::new(0.5, 0.5), Point::new(1.5, 0.5));
        let img = render_map(&snap, &[leg], &field, Cell::new(1, 1), 10).unwrap();
        assert_eq!(img.pixel(10, 5), TRAJECTORY_COLOR);
        assert_eq!(img.pixel(10, 15), VISITED_COLOR);
    }

    #[test]
    fn dimension_mismatch() {
        let field = HeightField::flat(2, 2, 1.0, 0.0).unwrap();
        let snap = snapshot(2, 3, vec![CellState::Free; 6]);
        assert!(matches!(
            render_map(&snap, &[], &field, Cell::new(0, 0), 4),
            Err(RenderError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ppm_round_trip() {
        let mut img = Image::new(3, 2, FREE_COLOR);
        img.set(2, 1, [1, 2, 3]);
        let bytes = img.to_ppm();
        assert!(bytes.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(bytes.len(), 11 + 18);
        assert_eq!(Image::read_ppm(&bytes[..]).unwrap(), img);
        assert!(Image::read_ppm(&b"P6\n3 2\n255\nxx"[..]).is_err());
    }
}
