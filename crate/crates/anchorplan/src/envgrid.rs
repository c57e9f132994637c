//! Bathymetry grids, cell geometry, depth rules, and areas of interest.
//!
//! Everything downstream (propagation, coverage, optimization) works on a
//! regular grid of square cells loaded from an ESRI ASCII raster. The grid
//! stores water depth per cell (meters, positive down); cells without valid
//! water depth (land, the raster's nodata value, or non-positive values) are
//! masked out and never participate in coverage.
//!
//! Conventions used throughout the crate:
//!
//! * `x` grows east, `y` grows north, `z` grows up with `z = 0` at the sea
//!   surface, so everything underwater has negative `z`.
//! * Cell index `k` is the column (west → east), `l` is the row
//!   (south → north). The ESRI format stores its first data row at the
//!   *north* edge; the loader flips it so `l = 0` is the southernmost row.
//! * A cell's representative position is its center.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::{Error, Result};

// ---------- Positions and indices ----------

/// A point in grid coordinates (meters). `z` is negative underwater.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Horizontal (x, y) distance to `other`, ignoring depth.
    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Column/row index of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub k: usize,
    pub l: usize,
}

impl CellIndex {
    pub fn new(k: usize, l: usize) -> Self {
        CellIndex { k, l }
    }
}

// ---------- Depth rules ----------

/// How to turn a cell's water column into a deployment/swim depth.
///
/// Depths are given in positive meters; the resulting `z` is negative.
/// Results are clamped into the local water column `[-depth, 0]`; the
/// `clamped` flag on [`Placed`] reports when that happened.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthRule {
    /// Height above the local seabed, e.g. a receiver moored 0.5 m up.
    SeabedOffset(f64),
    /// Fixed depth below the surface, e.g. a tag swimming at 3 m.
    FixedDepth(f64),
}

/// A resolved position plus whether the depth rule had to be clamped into
/// the water column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placed {
    pub position: Position,
    pub clamped: bool,
}

impl DepthRule {
    /// Resolve the rule against a water column of `depth` meters.
    /// Returns the (negative) z and whether clamping was applied.
    pub fn resolve(&self, depth: f64) -> (f64, bool) {
        let raw = match self {
            DepthRule::SeabedOffset(h) => -depth + h,
            DepthRule::FixedDepth(d) => -d,
        };
        if raw < -depth {
            (-depth, true)
        } else if raw > 0.0 {
            (0.0, true)
        } else {
            (raw, false)
        }
    }
}

// ---------- Bathymetry grid ----------

/// A regular grid of square cells with water depth per cell.
///
/// Row-major storage with `l = 0` at the southern edge; `depth[l][k]` is
/// reached through [`BathymetryGrid::depth_at`]. Nodata cells answer `None`.
#[derive(Debug, Clone)]
pub struct BathymetryGrid {
    origin_x: f64,
    origin_y: f64,
    cell_size: f64,
    n_cols: usize,
    n_rows: usize,
    depths: Vec<f64>,
    nodata: Vec<bool>,
}

impl BathymetryGrid {
    /// Build a grid with uniform water depth everywhere (synthetic scenes).
    pub fn flat(
        origin_x: f64,
        origin_y: f64,
        cell_size: f64,
        n_cols: usize,
        n_rows: usize,
        depth: f64,
    ) -> Self {
        BathymetryGrid {
            origin_x,
            origin_y,
            cell_size,
            n_cols,
            n_rows,
            depths: vec![depth; n_cols * n_rows],
            nodata: vec![false; n_cols * n_rows],
        }
    }

    /// Build a grid from explicit per-cell depths (`None` = nodata), given in
    /// south-first row order (`l = 0` first).
    pub fn from_rows(
        origin_x: f64,
        origin_y: f64,
        cell_size: f64,
        n_cols: usize,
        rows: &[Vec<Option<f64>>],
    ) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Validation("grid must have at least one cell".into()));
        }
        let mut depths = Vec::with_capacity(n_cols * n_rows);
        let mut nodata = Vec::with_capacity(n_cols * n_rows);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::Shape(format!(
                    "row has {} values, expected {}",
                    row.len(),
                    n_cols
                )));
            }
            for v in row {
                match v {
                    Some(d) if *d > 0.0 => {
                        depths.push(*d);
                        nodata.push(false);
                    }
                    _ => {
                        depths.push(f64::NAN);
                        nodata.push(true);
                    }
                }
            }
        }
        Ok(BathymetryGrid {
            origin_x,
            origin_y,
            cell_size,
            n_cols,
            n_rows,
            depths,
            nodata,
        })
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn cell_count(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Lower-left (south-west) corner of the grid.
    pub fn origin(&self) -> (f64, f64) {
        (self.origin_x, self.origin_y)
    }

    /// `(min_x, min_y, max_x, max_y)` of the grid extent.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.origin_x,
            self.origin_y,
            self.origin_x + self.n_cols as f64 * self.cell_size,
            self.origin_y + self.n_rows as f64 * self.cell_size,
        )
    }

    #[inline]
    fn flat_index(&self, k: usize, l: usize) -> usize {
        l * self.n_cols + k
    }

    /// Water depth at a cell, `None` when the cell is nodata or out of range.
    pub fn depth_at(&self, k: usize, l: usize) -> Option<f64> {
        if k >= self.n_cols || l >= self.n_rows {
            return None;
        }
        let i = self.flat_index(k, l);
        if self.nodata[i] {
            None
        } else {
            Some(self.depths[i])
        }
    }

    pub fn is_nodata(&self, k: usize, l: usize) -> bool {
        k >= self.n_cols || l >= self.n_rows || self.nodata[self.flat_index(k, l)]
    }

    /// Center of cell `(k, l)` in grid coordinates (no bounds check on data).
    pub fn cell_center(&self, k: usize, l: usize) -> (f64, f64) {
        (
            self.origin_x + (k as f64 + 0.5) * self.cell_size,
            self.origin_y + (l as f64 + 0.5) * self.cell_size,
        )
    }

    /// True when `(x, y)` lies inside the grid extent (right/top exclusive).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (min_x, min_y, max_x, max_y) = self.extent();
        x >= min_x && x < max_x && y >= min_y && y < max_y
    }

    /// Map a horizontal position to the cell containing it.
    pub fn position_to_index(&self, x: f64, y: f64) -> Result<CellIndex> {
        if !self.contains(x, y) {
            return Err(Error::OutOfBounds { x, y });
        }
        let k = ((x - self.origin_x) / self.cell_size) as usize;
        let l = ((y - self.origin_y) / self.cell_size) as usize;
        // Guard the top/right edge against floating-point round-up.
        Ok(CellIndex::new(k.min(self.n_cols - 1), l.min(self.n_rows - 1)))
    }

    /// Resolve a cell plus depth rule into a 3-D position at the cell center.
    ///
    /// Fails with [`Error::NoData`] on nodata cells and
    /// [`Error::OutOfBounds`] outside the grid. Depths are clamped into the
    /// local water column; `Placed::clamped` reports when that happened.
    pub fn index_to_position(&self, k: usize, l: usize, rule: DepthRule) -> Result<Placed> {
        if k >= self.n_cols || l >= self.n_rows {
            let (x, y) = self.cell_center(k, l);
            return Err(Error::OutOfBounds { x, y });
        }
        let depth = self.depth_at(k, l).ok_or(Error::NoData { k, l })?;
        let (x, y) = self.cell_center(k, l);
        let (z, clamped) = rule.resolve(depth);
        Ok(Placed {
            position: Position::new(x, y, z),
            clamped,
        })
    }

    /// Iterate over all cell indices, row by row from the south.
    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.n_rows).flat_map(move |l| (0..self.n_cols).map(move |k| CellIndex::new(k, l)))
    }

    /// Nearest non-nodata cell to `(x, y)`, by center distance; ties broken
    /// by (l, k) order. `None` when the grid has no valid cells at all.
    pub fn nearest_valid_cell(&self, x: f64, y: f64) -> Option<CellIndex> {
        // Fast path: the containing cell itself.
        if let Ok(idx) = self.position_to_index(x, y) {
            if !self.is_nodata(idx.k, idx.l) {
                return Some(idx);
            }
        }
        let mut best: Option<(f64, CellIndex)> = None;
        for idx in self.cells() {
            if self.is_nodata(idx.k, idx.l) {
                continue;
            }
            let (cx, cy) = self.cell_center(idx.k, idx.l);
            let d2 = (cx - x) * (cx - x) + (cy - y) * (cy - y);
            let better = match best {
                None => true,
                Some((bd2, _)) => d2 < bd2 - 1e-12,
            };
            if better {
                best = Some((d2, idx));
            }
        }
        best.map(|(_, idx)| idx)
    }
}

// ---------- ESRI ASCII raster loading ----------

/// Parse an ESRI ASCII grid (`ncols`, `nrows`, `xllcorner`, `yllcorner`,
/// `cellsize`, optional `nodata_value`, then `nrows × ncols` values with the
/// *northernmost* row first).
///
/// Values equal to the nodata marker or non-positive are masked out as
/// nodata (dry land carries no water column).
pub fn parse_esri_ascii(text: &str, path: &str) -> Result<BathymetryGrid> {
    let mut lines = text.lines().enumerate().peekable();
    let mut header: HashMap<String, f64> = HashMap::new();

    // Header lines: `key value`, keys case-insensitive, order flexible.
    while let Some((lineno, line)) = lines.peek().copied() {
        let mut parts = line.split_whitespace();
        let key = match parts.next() {
            Some(k) => k.to_ascii_lowercase(),
            None => {
                lines.next();
                continue;
            }
        };
        if !matches!(
            key.as_str(),
            "ncols" | "nrows" | "xllcorner" | "yllcorner" | "cellsize" | "nodata_value"
        ) {
            break;
        }
        let value: f64 = parts
            .next()
            .ok_or_else(|| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("header '{key}' has no value"),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("header '{key}' value is not a number"),
            })?;
        header.insert(key, value);
        lines.next();
    }

    let require = |key: &str| -> Result<f64> {
        header.get(key).copied().ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 0,
            msg: format!("missing required header '{key}'"),
        })
    };
    let n_cols = require("ncols")? as usize;
    let n_rows = require("nrows")? as usize;
    let origin_x = require("xllcorner")?;
    let origin_y = require("yllcorner")?;
    let cell_size = require("cellsize")?;
    let nodata_value = header.get("nodata_value").copied().unwrap_or(-9999.0);

    if n_cols == 0 || n_rows == 0 {
        return Err(Error::Validation(format!(
            "{path}: grid must have at least one cell (ncols={n_cols}, nrows={n_rows})"
        )));
    }
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(Error::Validation(format!(
            "{path}: cellsize must be positive and finite (got {cell_size})"
        )));
    }
    if !origin_x.is_finite() || !origin_y.is_finite() {
        return Err(Error::Validation(format!("{path}: corner coordinates must be finite")));
    }

    // Data tokens: whitespace separated, north row first.
    let mut values = Vec::with_capacity(n_cols * n_rows);
    for (lineno, line) in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("bad depth value '{tok}'"),
            })?;
            values.push(v);
        }
    }
    if values.len() != n_cols * n_rows {
        return Err(Error::Validation(format!(
            "{path}: expected {} depth values, found {}",
            n_cols * n_rows,
            values.len()
        )));
    }

    // Flip so row 0 is the southernmost row.
    let mut depths = vec![f64::NAN; n_cols * n_rows];
    let mut nodata = vec![true; n_cols * n_rows];
    for (file_row, chunk) in values.chunks(n_cols).enumerate() {
        let l = n_rows - 1 - file_row;
        for (k, &v) in chunk.iter().enumerate() {
            let i = l * n_cols + k;
            let is_nodata = (v - nodata_value).abs() < 1e-9 || v <= 0.0 || !v.is_finite();
            if !is_nodata {
                depths[i] = v;
                nodata[i] = false;
            }
        }
    }

    Ok(BathymetryGrid {
        origin_x,
        origin_y,
        cell_size,
        n_cols,
        n_rows,
        depths,
        nodata,
    })
}

/// Load an ESRI ASCII bathymetry raster from disk.
pub fn load_bathymetry<P: AsRef<Path>>(path: P) -> Result<BathymetryGrid> {
    let text = std::fs::read_to_string(&path)?;
    parse_esri_ascii(&text, &path.as_ref().display().to_string())
}

// ---------- Cell masks and areas of interest ----------

/// A boolean mask over the grid cells (row-major, `l = 0` first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMask {
    n_cols: usize,
    n_rows: usize,
    bits: Vec<bool>,
}

impl CellMask {
    pub fn new(n_cols: usize, n_rows: usize) -> Self {
        CellMask {
            n_cols,
            n_rows,
            bits: vec![false; n_cols * n_rows],
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn same_shape(&self, other: &CellMask) -> bool {
        self.n_cols == other.n_cols && self.n_rows == other.n_rows
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> bool {
        self.bits[l * self.n_cols + k]
    }

    #[inline]
    pub fn set(&mut self, k: usize, l: usize, value: bool) {
        self.bits[l * self.n_cols + k] = value;
    }

    /// Number of set cells.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Number of cells set in both `self` and `other`.
    pub fn intersection_count(&self, other: &CellMask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a && **b)
            .count()
    }

    /// True when every set cell of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &CellMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    /// Iterate over set cell indices in (l, k) order.
    pub fn iter_set(&self) -> impl Iterator<Item = CellIndex> + '_ {
        self.bits.iter().enumerate().filter_map(move |(i, b)| {
            if *b {
                Some(CellIndex::new(i % self.n_cols, i / self.n_cols))
            } else {
                None
            }
        })
    }
}

/// Axis-aligned rectangle in grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

/// Mask of water cells whose centers fall inside `rect`.
///
/// Nodata cells are excluded — they can never be covered, so counting them
/// toward a coverage requirement would make the constraint unsatisfiable.
/// Fails with [`Error::EmptyAoi`] when no cell qualifies.
pub fn build_aoi_mask(grid: &BathymetryGrid, rect: &Rect) -> Result<CellMask> {
    let mut mask = CellMask::new(grid.n_cols(), grid.n_rows());
    let mut any = false;
    for idx in grid.cells() {
        if grid.is_nodata(idx.k, idx.l) {
            continue;
        }
        let (cx, cy) = grid.cell_center(idx.k, idx.l);
        if rect.contains(cx, cy) {
            mask.set(idx.k, idx.l, true);
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyAoi);
    }
    Ok(mask)
}

/// Mask covering every water cell of the grid.
pub fn full_aoi_mask(grid: &BathymetryGrid) -> Result<CellMask> {
    let mut mask = CellMask::new(grid.n_cols(), grid.n_rows());
    let mut any = false;
    for idx in grid.cells() {
        if !grid.is_nodata(idx.k, idx.l) {
            mask.set(idx.k, idx.l, true);
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyAoi);
    }
    Ok(mask)
}

// ---------- Sound velocity profiles ----------

/// One depth/speed sample of a sound-velocity profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvpSample {
    pub depth_m: f64,
    pub speed_mps: f64,
}

/// A water-column sound-velocity profile.
///
/// The isotropic and terrain-occlusion models do not bend rays, so the
/// profile is carried for validation and reporting; imported
/// transmission-loss fields are where profile-dependent physics enters.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundVelocityProfile {
    samples: Vec<SvpSample>,
}

impl SoundVelocityProfile {
    pub fn samples(&self) -> &[SvpSample] {
        &self.samples
    }

    /// Sound speed at `depth_m`, linearly interpolated and clamped to the
    /// profile ends.
    pub fn speed_at(&self, depth_m: f64) -> f64 {
        let s = &self.samples;
        if depth_m <= s[0].depth_m {
            return s[0].speed_mps;
        }
        for w in s.windows(2) {
            if depth_m <= w[1].depth_m {
                let t = (depth_m - w[0].depth_m) / (w[1].depth_m - w[0].depth_m);
                return w[0].speed_mps + t * (w[1].speed_mps - w[0].speed_mps);
            }
        }
        s[s.len() - 1].speed_mps
    }
}

/// Parse a two-column `depth_m,speed_mps` CSV. A non-numeric first line is
/// treated as an (optional) header and skipped.
pub fn parse_svp(text: &str, path: &str) -> Result<SoundVelocityProfile> {
    let mut samples = Vec::new();
    let mut first_data_line = true;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if first_data_line {
            first_data_line = false;
            let first_field = line.split(',').next().unwrap_or("").trim();
            if first_field.parse::<f64>().is_err() {
                continue; // header line
            }
        }
        let mut fields = line.split(',');
        let parse_field = |f: Option<&str>, what: &str| -> Result<f64> {
            f.and_then(|s| s.trim().parse().ok()).ok_or_else(|| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("bad {what}"),
            })
        };
        let depth_m = parse_field(fields.next(), "depth")?;
        let speed_mps = parse_field(fields.next(), "speed")?;
        samples.push(SvpSample { depth_m, speed_mps });
    }
    if samples.is_empty() {
        return Err(Error::Validation(format!("{path}: profile has no samples")));
    }
    for w in samples.windows(2) {
        if w[1].depth_m <= w[0].depth_m {
            return Err(Error::Validation(format!(
                "{path}: depths must be strictly increasing ({} then {})",
                w[0].depth_m, w[1].depth_m
            )));
        }
    }
    // Sound speeds far outside seawater's physical range point at unit
    // mix-ups (ft/s, km/s) rather than exotic oceans.
    if let Some(s) = samples
        .iter()
        .find(|s| !(1400.0..=1600.0).contains(&s.speed_mps))
    {
        return Err(Error::Validation(format!(
            "{path}: sound speed {} m/s at depth {} m is outside the plausible 1400-1600 m/s range",
            s.speed_mps, s.depth_m
        )));
    }
    Ok(SoundVelocityProfile { samples })
}

/// Load a sound-velocity profile CSV from disk.
pub fn load_svp<P: AsRef<Path>>(path: P) -> Result<SoundVelocityProfile> {
    let text = std::fs::read_to_string(&path)?;
    parse_svp(&text, &path.as_ref().display().to_string())
}

// ---------- Tests ----------
