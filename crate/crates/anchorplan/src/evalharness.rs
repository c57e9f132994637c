//! Deployment comparison metrics, synthetic tag tracks, and throughput
//! profiling against moving tags.
//!
//! The two headline metrics are ratios of coverage areas: [`eta_ratio`]
//! compares an optimized deployment against the common-practice baseline,
//! and [`theta_ratio`] measures how much of the geometry-free coverage
//! survives the GDOP filter. [`synth_track`] fabricates emission logs along
//! a waypoint route (standing in for a real tag tow), and
//! [`throughput_profile`] bins detection outcomes by range from the
//! receiver cluster, mirroring how field campaigns report reception rates.

use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::envgrid::{BathymetryGrid, DepthRule, Position};
use crate::propagation::{transmission_loss, AcousticParams, PropagationModel, Receiver};
use crate::{Error, Result};

// ---------- Area ratios ----------

/// Coverage gain of an optimized deployment over the common-practice
/// baseline: `c_optimized / c_baseline` (in cells or m², as long as both
/// use the same unit).
pub fn eta_ratio(c_optimized: f64, c_baseline: f64) -> Result<f64> {
    for (name, v) in [("optimized", c_optimized), ("baseline", c_baseline)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Validation(format!(
                "{name} coverage must be a nonnegative finite area, got {v}"
            )));
        }
    }
    if c_baseline == 0.0 {
        return Err(Error::Division("CP coverage empty".into()));
    }
    Ok(c_optimized / c_baseline)
}

/// Fraction of the geometry-free coverage that survives the GDOP filter:
/// `coverage / coverage_without_gdop`. In [0, 1] whenever the filtered
/// area is a subset of the unfiltered one.
pub fn theta_ratio(coverage: f64, coverage_without_gdop: f64) -> Result<f64> {
    for (name, v) in [
        ("filtered", coverage),
        ("unfiltered", coverage_without_gdop),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Validation(format!(
                "{name} coverage must be a nonnegative finite area, got {v}"
            )));
        }
    }
    if coverage_without_gdop == 0.0 {
        return Err(Error::Division(
            "coverage without the GDOP filter is empty".into(),
        ));
    }
    Ok(coverage / coverage_without_gdop)
}

// ---------- Emission logs ----------

/// One tag emission: when and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub time_s: f64,
    pub tag_id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Emission {
    pub fn position(&self) -> Position {
        Position::new(self.x, self.y, self.z)
    }
}

/// A time-ordered log of tag emissions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmissionLog {
    pub records: Vec<Emission>,
}

impl EmissionLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Check that times never decrease within each tag's record stream.
    pub fn validate(&self) -> Result<()> {
        let mut last: std::collections::HashMap<u32, f64> = std::collections::HashMap::new();
        for (i, rec) in self.records.iter().enumerate() {
            if !rec.time_s.is_finite() {
                return Err(Error::Validation(format!(
                    "record {i}: non-finite emission time"
                )));
            }
            if let Some(&prev) = last.get(&rec.tag_id) {
                if rec.time_s < prev {
                    return Err(Error::Validation(format!(
                        "record {i}: tag {} goes back in time ({} after {})",
                        rec.tag_id, rec.time_s, prev
                    )));
                }
            }
            last.insert(rec.tag_id, rec.time_s);
        }
        Ok(())
    }

    /// Parse the `time_s,tag_id,x,y,z` CSV format (header required).
    pub fn parse(text: &str, path: &str) -> Result<EmissionLog> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 1,
            msg: "empty emission log".into(),
        })?;
        if header.trim() != "time_s,tag_id,x,y,z" {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                msg: format!("expected header `time_s,tag_id,x,y,z`, got `{}`", header.trim()),
            });
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse {
                    path: path.into(),
                    line: i + 1,
                    msg: format!("expected 5 fields, got {}", fields.len()),
                });
            }
            let field = |j: usize, name: &str| -> Result<f64> {
                fields[j].trim().parse().map_err(|_| Error::Parse {
                    path: path.into(),
                    line: i + 1,
                    msg: format!("invalid {name}: `{}`", fields[j].trim()),
                })
            };
            let tag_id: u32 = fields[1].trim().parse().map_err(|_| Error::Parse {
                path: path.into(),
                line: i + 1,
                msg: format!("invalid tag_id: `{}`", fields[1].trim()),
            })?;
            records.push(Emission {
                time_s: field(0, "time_s")?,
                tag_id,
                x: field(2, "x")?,
                y: field(3, "y")?,
                z: field(4, "z")?,
            });
        }
        let log = EmissionLog { records };
        log.validate()?;
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<EmissionLog> {
        let text = std::fs::read_to_string(path)?;
        EmissionLog::parse(&text, &path.display().to_string())
    }

    /// Write the log in the same CSV format [`EmissionLog::parse`] reads.
    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "time_s,tag_id,x,y,z")?;
        for r in &self.records {
            writeln!(
                out,
                "{:.3},{},{:.3},{:.3},{:.3}",
                r.time_s, r.tag_id, r.x, r.y, r.z
            )?;
        }
        Ok(())
    }
}

// ---------- Synthetic tracks ----------

/// Generate an emission log for a tag towed at constant speed along a
/// waypoint polyline, emitting at intervals drawn uniformly from
/// `[interval.0, interval.1]` seconds (inclusive; equal bounds give a
/// fixed cadence). The first emission is at the start, time zero, and
/// emissions continue until the end of the route.
///
/// The tag depth comes from `depth_rule`; seabed-relative rules need
/// `grid` to look up the local water column (the tag must then stay on
/// valid cells). Deterministic for a given seed.
pub fn synth_track(
    waypoints: &[(f64, f64)],
    speed_mps: f64,
    interval: (f64, f64),
    depth_rule: DepthRule,
    seed: u64,
    tag_id: u32,
    grid: Option<&BathymetryGrid>,
) -> Result<EmissionLog> {
    if waypoints.len() < 2 {
        return Err(Error::Validation(format!(
            "a track needs at least 2 waypoints, got {}",
            waypoints.len()
        )));
    }
    if !(speed_mps > 0.0 && speed_mps.is_finite()) {
        return Err(Error::Validation(format!(
            "speed must be positive, got {speed_mps}"
        )));
    }
    let (s_min, s_max) = interval;
    if !(s_min > 0.0 && s_min.is_finite() && s_max.is_finite() && s_min <= s_max) {
        return Err(Error::Validation(format!(
            "emission interval must satisfy 0 < min ≤ max, got [{s_min}, {s_max}]"
        )));
    }

    // Cumulative arc length along the polyline.
    let mut cumulative = vec![0.0f64];
    for w in waypoints.windows(2) {
        let d = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
        cumulative.push(cumulative.last().unwrap() + d);
    }
    let total = *cumulative.last().unwrap();
    if total <= 0.0 {
        return Err(Error::Validation(
            "track waypoints are all coincident".into(),
        ));
    }
    let duration = total / speed_mps;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut t = 0.0f64;
    while t <= duration + 1e-9 {
        let along = (speed_mps * t).min(total);
        let (x, y) = point_along(waypoints, &cumulative, along);
        let z = resolve_depth(x, y, depth_rule, grid)?;
        records.push(Emission {
            time_s: t,
            tag_id,
            x,
            y,
            z,
        });
        t += if s_min == s_max {
            s_min
        } else {
            rng.gen_range(s_min..=s_max)
        };
    }
    Ok(EmissionLog { records })
}

fn point_along(waypoints: &[(f64, f64)], cumulative: &[f64], along: f64) -> (f64, f64) {
    for (i, w) in waypoints.windows(2).enumerate() {
        let (seg_start, seg_end) = (cumulative[i], cumulative[i + 1]);
        if along <= seg_end || i + 2 == waypoints.len() {
            let seg_len = seg_end - seg_start;
            let frac = if seg_len > 0.0 {
                ((along - seg_start) / seg_len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            return (
                w[0].0 + frac * (w[1].0 - w[0].0),
                w[0].1 + frac * (w[1].1 - w[0].1),
            );
        }
    }
    *waypoints.last().unwrap()
}

fn resolve_depth(
    x: f64,
    y: f64,
    rule: DepthRule,
    grid: Option<&BathymetryGrid>,
) -> Result<f64> {
    match (rule, grid) {
        (rule, Some(grid)) => {
            let idx = grid.position_to_index(x, y)?;
            let depth = grid
                .depth_at(idx.k, idx.l)
                .ok_or(Error::NoData { k: idx.k, l: idx.l })?;
            Ok(rule.resolve(depth).0)
        }
        (DepthRule::FixedDepth(d), None) => Ok(-d.abs()),
        (DepthRule::SeabedOffset(_), None) => Err(Error::Validation(
            "a seabed-relative tag depth needs a bathymetry grid".into(),
        )),
    }
}

// ---------- Throughput profiling ----------

/// Reception statistics for one range bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputBin {
    /// Lower edge of the bin, meters from the receiver centroid.
    pub range_m: f64,
    /// Fraction of the bin's emissions detected by exactly 1 or 2 receivers.
    pub xi2: f64,
    /// Fraction of the bin's emissions detected by 3 or more receivers.
    pub xi3: f64,
    /// Emissions whose range falls in this bin.
    pub count: usize,
}

/// Reception fractions binned by range from the receiver cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputProfile {
    pub bins: Vec<ThroughputBin>,
    pub bin_width: f64,
    pub total_emissions: usize,
}

impl ThroughputProfile {
    /// Write the profile as `range_m,xi2,xi3,count`.
    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "range_m,xi2,xi3,count")?;
        for b in &self.bins {
            writeln!(
                out,
                "{:.1},{:.6},{:.6},{}",
                b.range_m, b.xi2, b.xi3, b.count
            )?;
        }
        Ok(())
    }
}

/// Profile how many receivers hear each emission, binned by horizontal
/// range from the arithmetic centroid of the receiver positions.
///
/// An emission counts toward `xi2` when exactly one or two receivers
/// detect it and toward `xi3` when at least three do, so `xi2 + xi3 ≤ 1`
/// per bin. Bins run from zero through the farthest emission; empty bins
/// report zero fractions.
pub fn throughput_profile(
    log: &EmissionLog,
    receivers: &[Receiver],
    model: &PropagationModel,
    grid: &BathymetryGrid,
    params: &AcousticParams,
    bin_width: f64,
) -> Result<ThroughputProfile> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    if receivers.is_empty() {
        return Err(Error::Validation(
            "throughput profiling needs at least one receiver".into(),
        ));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Validation(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let cx = receivers.iter().map(|r| r.position.x).sum::<f64>() / receivers.len() as f64;
    let cy = receivers.iter().map(|r| r.position.y).sum::<f64>() / receivers.len() as f64;

    // (bin index, detecting receiver count) per emission; aggregation
    // below is order-independent, so this can run in parallel.
    let classified: Vec<(usize, usize)> = log
        .records
        .par_iter()
        .map(|rec| {
            let pos = rec.position();
            let bin = ((rec.x - cx).hypot(rec.y - cy) / bin_width).floor() as usize;
            let detected = receivers
                .iter()
                .filter(|r| detects(model, grid, &pos, r, params))
                .count();
            (bin, detected)
        })
        .collect();

    let max_bin = classified.iter().map(|&(b, _)| b).max().unwrap_or(0);
    let mut counts = vec![0usize; max_bin + 1];
    let mut n_12 = vec![0usize; max_bin + 1];
    let mut n_3plus = vec![0usize; max_bin + 1];
    for (bin, detected) in classified {
        counts[bin] += 1;
        match detected {
            0 => {}
            1 | 2 => n_12[bin] += 1,
            _ => n_3plus[bin] += 1,
        }
    }

    let bins = (0..=max_bin)
        .map(|b| ThroughputBin {
            range_m: b as f64 * bin_width,
            xi2: ratio(n_12[b], counts[b]),
            xi3: ratio(n_3plus[b], counts[b]),
            count: counts[b],
        })
        .collect();
    Ok(ThroughputProfile {
        bins,
        bin_width,
        total_emissions: log.len(),
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Point detection predicate: does this receiver hear an emission at
/// `pos`? Co-located source and receiver count as detected; cells missing
/// from an imported loss table do not.
fn detects(
    model: &PropagationModel,
    grid: &BathymetryGrid,
    pos: &Position,
    receiver: &Receiver,
    params: &AcousticParams,
) -> bool {
    match transmission_loss(model, grid, pos, receiver, params) {
        Ok(tl) => params.source_level_db - tl - params.noise_level_db
            >= params.detection_threshold_db,
        Err(Error::DegenerateRange) => true,
        Err(_) => false,
    }
}

// ---------- Tests ----------
