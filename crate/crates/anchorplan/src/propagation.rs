//! Transmission loss, received SNR, and per-receiver detection masks.
//!
//! A tag at position `p` is detectable by a receiver when
//!
//! ```text
//! SNR = source_level − TL(p → receiver) − noise_level ≥ detection_threshold
//! ```
//!
//! with everything in dB. Three transmission-loss models are available:
//!
//! * [`PropagationModel::Isotropic`] — spherical-spreading log term plus
//!   linear absorption, `TL = 10·log10(R) + absorption·R/1000`.
//! * [`PropagationModel::TerrainOccluded`] — isotropic, except paths that
//!   dip below the seabed anywhere along the straight source→receiver
//!   segment are non-detectable (`TL = +∞`). A cheap stand-in for ray
//!   tracing: it captures shadowing by ridges, not refraction.
//! * [`PropagationModel::ImportedField`] — per-receiver, per-cell TL values
//!   computed offline by any external model and loaded from CSV.

use std::collections::HashMap;
use std::path::Path;

use crate::envgrid::{BathymetryGrid, CellMask, DepthRule, Position};
use crate::{Error, Result};

// ---------- Acoustic parameters ----------

/// System-level acoustic parameters, all in dB except absorption and
/// frequency. `frequency_khz` is carried for documentation/reporting only;
/// absorption is supplied directly rather than derived from frequency.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct AcousticParams {
    /// Source level, dB re 1 µPa @ 1 m.
    pub source_level_db: f64,
    /// Ambient noise level, dB (assumed constant).
    pub noise_level_db: f64,
    /// Minimum SNR for a detection, dB.
    pub detection_threshold_db: f64,
    /// Absorption coefficient, dB/km.
    pub absorption_db_per_km: f64,
    /// Carrier frequency, kHz (informational).
    pub frequency_khz: f64,
}

impl Default for AcousticParams {
    /// Defaults describe a 69 kHz tag whose detection range works out to
    /// exactly 1000 m: TL(1000 m) = 30 + 18 = 48 dB and
    /// 158 − 48 − 100 = 10 dB, right at the threshold.
    fn default() -> Self {
        AcousticParams {
            source_level_db: 158.0,
            noise_level_db: 100.0,
            detection_threshold_db: 10.0,
            absorption_db_per_km: 18.0,
            frequency_khz: 69.0,
        }
    }
}

impl AcousticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.absorption_db_per_km >= 0.0) {
            return Err(Error::Validation(format!(
                "absorption must be nonnegative, got {}",
                self.absorption_db_per_km
            )));
        }
        if !self.detection_threshold_db.is_finite() {
            return Err(Error::Validation(
                "detection threshold must be finite".into(),
            ));
        }
        if !self.source_level_db.is_finite() || !self.noise_level_db.is_finite() {
            return Err(Error::Validation(
                "source and noise levels must be finite".into(),
            ));
        }
        Ok(())
    }
}

// ---------- Receivers ----------

/// A moored receiver: stable identifier plus resolved 3-D position.
#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    pub id: usize,
    pub position: Position,
}

impl Receiver {
    /// Place receivers at exact horizontal positions, deriving each `z` from
    /// the depth rule applied to the containing cell's water column. IDs are
    /// assigned in input order starting from 0.
    ///
    /// Fails when a position falls outside the grid or on a nodata cell.
    pub fn place(
        grid: &BathymetryGrid,
        positions_xy: &[(f64, f64)],
        rule: DepthRule,
    ) -> Result<Vec<Receiver>> {
        positions_xy
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| {
                let idx = grid.position_to_index(x, y)?;
                let depth = grid
                    .depth_at(idx.k, idx.l)
                    .ok_or(Error::NoData { k: idx.k, l: idx.l })?;
                let (z, _clamped) = rule.resolve(depth);
                Ok(Receiver {
                    id,
                    position: Position::new(x, y, z),
                })
            })
            .collect()
    }
}

// ---------- Imported transmission-loss fields ----------

/// Externally computed per-receiver, per-cell transmission loss.
///
/// Cells without an entry are non-detectable for that receiver. Point
/// queries through [`transmission_loss`] instead report a
/// [`Error::MissingTl`] so silent gaps cannot masquerade as valid physics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TlTable {
    entries: HashMap<(usize, usize, usize), f64>,
}

impl TlTable {
    /// Parse the `receiver_id,k,l,tl_db` CSV format (header required).
    pub fn parse(text: &str, path: &str) -> Result<TlTable> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 1,
            msg: "empty transmission-loss table".into(),
        })?;
        if header.trim() != "receiver_id,k,l,tl_db" {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                msg: format!(
                    "expected header 'receiver_id,k,l,tl_db', found '{}'",
                    header.trim()
                ),
            });
        }
        let mut entries = HashMap::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("expected 4 fields, found {}", fields.len()),
                });
            }
            let bad = |what: &str| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("bad {what}"),
            };
            let receiver_id: usize = fields[0].parse().map_err(|_| bad("receiver_id"))?;
            let k: usize = fields[1].parse().map_err(|_| bad("k"))?;
            let l: usize = fields[2].parse().map_err(|_| bad("l"))?;
            let tl_db: f64 = fields[3].parse().map_err(|_| bad("tl_db"))?;
            entries.insert((receiver_id, k, l), tl_db);
        }
        Ok(TlTable { entries })
    }

    /// Load a transmission-loss table CSV from disk.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<TlTable> {
        let text = std::fs::read_to_string(&path)?;
        TlTable::parse(&text, &path.as_ref().display().to_string())
    }

    pub fn get(&self, receiver_id: usize, k: usize, l: usize) -> Option<f64> {
        self.entries.get(&(receiver_id, k, l)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

// ---------- Propagation models ----------

/// Pluggable transmission-loss model.
#[derive(Debug, Clone, PartialEq)]
pub enum PropagationModel {
    /// `TL = 10·log10(R) + absorption·R/1000`.
    Isotropic,
    /// Isotropic, with straight paths blocked by the seabed marked
    /// non-detectable.
    TerrainOccluded,
    /// Table lookup of externally computed TL per (receiver, cell).
    ImportedField(TlTable),
}

fn isotropic_tl(range_m: f64, absorption_db_per_km: f64) -> f64 {
    10.0 * range_m.log10() + absorption_db_per_km * range_m / 1000.0
}

/// Seabed depth at an arbitrary point, bilinearly interpolated between the
/// four surrounding cell-center samples (clamped to the grid margin).
/// `None` when the point leaves the grid or any contributing cell is nodata.
fn interpolated_depth(grid: &BathymetryGrid, x: f64, y: f64) -> Option<f64> {
    if !grid.contains(x, y) {
        return None;
    }
    let (ox, oy) = grid.origin();
    let cell = grid.cell_size();
    // Continuous cell coordinates with integer values at cell centers.
    let gx = (x - ox) / cell - 0.5;
    let gy = (y - oy) / cell - 0.5;
    let k0 = (gx.floor().max(0.0) as usize).min(grid.n_cols() - 1);
    let l0 = (gy.floor().max(0.0) as usize).min(grid.n_rows() - 1);
    let k1 = (k0 + 1).min(grid.n_cols() - 1);
    let l1 = (l0 + 1).min(grid.n_rows() - 1);
    let tx = (gx - k0 as f64).clamp(0.0, 1.0);
    let ty = (gy - l0 as f64).clamp(0.0, 1.0);
    let d00 = grid.depth_at(k0, l0)?;
    let d10 = grid.depth_at(k1, l0)?;
    let d01 = grid.depth_at(k0, l1)?;
    let d11 = grid.depth_at(k1, l1)?;
    let bottom = d00 + (d10 - d00) * tx;
    let top = d01 + (d11 - d01) * tx;
    Some(bottom + (top - bottom) * ty)
}

/// True when the straight segment `a → b` passes below the seabed.
///
/// The segment is sampled every `cell_size / 2` (endpoints included); at
/// each sample the segment depth is compared against the bilinearly
/// interpolated seabed. Samples over nodata terrain or outside the grid are
/// treated as occluded — unknown terrain cannot be certified clear.
fn segment_occluded(grid: &BathymetryGrid, a: &Position, b: &Position) -> bool {
    let length = a.distance(b);
    let step = grid.cell_size() / 2.0;
    let n_steps = ((length / step).ceil() as usize).max(1);
    for i in 0..=n_steps {
        let t = i as f64 / n_steps as f64;
        let x = a.x + (b.x - a.x) * t;
        let y = a.y + (b.y - a.y) * t;
        let z = a.z + (b.z - a.z) * t;
        match interpolated_depth(grid, x, y) {
            Some(depth) => {
                if z < -depth - 1e-9 {
                    return true;
                }
            }
            None => return true,
        }
    }
    false
}

// ---------- Core operations ----------

/// Transmission loss in dB from a source at `src` to `rcv`.
///
/// `+∞` means non-detectable (occluded path). Fails with
/// [`Error::DegenerateRange`] when the positions coincide, and with
/// [`Error::MissingTl`] when an imported field has no entry for the
/// queried cell.
pub fn transmission_loss(
    model: &PropagationModel,
    grid: &BathymetryGrid,
    src: &Position,
    rcv: &Receiver,
    params: &AcousticParams,
) -> Result<f64> {
    let range = src.distance(&rcv.position);
    if range == 0.0 {
        return Err(Error::DegenerateRange);
    }
    match model {
        PropagationModel::Isotropic => Ok(isotropic_tl(range, params.absorption_db_per_km)),
        PropagationModel::TerrainOccluded => {
            if segment_occluded(grid, src, &rcv.position) {
                Ok(f64::INFINITY)
            } else {
                Ok(isotropic_tl(range, params.absorption_db_per_km))
            }
        }
        PropagationModel::ImportedField(table) => {
            let idx = grid.position_to_index(src.x, src.y)?;
            table
                .get(rcv.id, idx.k, idx.l)
                .ok_or(Error::MissingTl {
                    receiver_id: rcv.id,
                    k: idx.k,
                    l: idx.l,
                })
        }
    }
}

/// Received SNR in dB for a given transmission loss; `−∞` for occluded
/// (`TL = +∞`) paths.
pub fn received_snr(params: &AcousticParams, tl_db: f64) -> f64 {
    params.source_level_db - tl_db - params.noise_level_db
}

/// Detection mask of one receiver: bit (k, l) is set when a tag at that
/// cell (placed by `tag_depth`) is detected. Nodata cells stay clear, as do
/// cells an imported field has no entry for.
pub fn detection_mask(
    model: &PropagationModel,
    grid: &BathymetryGrid,
    rcv: &Receiver,
    tag_depth: DepthRule,
    params: &AcousticParams,
) -> Result<CellMask> {
    if !grid.contains(rcv.position.x, rcv.position.y) {
        return Err(Error::OutOfBounds {
            x: rcv.position.x,
            y: rcv.position.y,
        });
    }
    let mut mask = CellMask::new(grid.n_cols(), grid.n_rows());
    for idx in grid.cells() {
        let placed = match grid.index_to_position(idx.k, idx.l, tag_depth) {
            Ok(p) => p,
            Err(Error::NoData { .. }) => continue,
            Err(e) => return Err(e),
        };
        let tag = placed.position;
        let detected = if tag.distance(&rcv.position) == 0.0 {
            true // co-located: zero path loss
        } else {
            let tl = match model {
                PropagationModel::ImportedField(table) => {
                    match table.get(rcv.id, idx.k, idx.l) {
                        Some(tl) => tl,
                        None => continue, // absent row = non-detectable
                    }
                }
                _ => transmission_loss(model, grid, &tag, rcv, params)?,
            };
            received_snr(params, tl) >= params.detection_threshold_db
        };
        if detected {
            mask.set(idx.k, idx.l, true);
        }
    }
    Ok(mask)
}

// ---------- Tests ----------
