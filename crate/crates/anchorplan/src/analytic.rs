//! Closed-form geometry for three receivers on an equilateral triangle,
//! plus the numeric spacing scan it validates.
//!
//! With detection radius `R` and spacing `l`, the region seen by all three
//! receivers is a Reuleaux-style lens: an inner equilateral triangle of
//! side `D` plus three circular segments. The closed form drops from `πR²`
//! at `l = 0` to zero at `l = √3·R`, where the three detection circles
//! meet in a single point.
//!
//! [`spacing_scan`] rebuilds the same family of scenes cell by cell with
//! the full coverage chain, so the analytic curve doubles as an
//! independent oracle for the numeric machinery (and vice versa).

use rayon::prelude::*;

use crate::coverage::{coverage_report, CoverageParams, Scene};
use crate::envgrid::{full_aoi_mask, BathymetryGrid, DepthRule};
use crate::gdop::GdopFormula;
use crate::propagation::{AcousticParams, PropagationModel, Receiver};
use crate::{Error, Result};

// ---------- Circle-circle intersection ----------

/// Intersection of two circles in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleIntersections {
    /// No common point (separated, or one strictly inside the other).
    Disjoint,
    /// Exactly one common point (within a 1e-9 tolerance on the center
    /// distance).
    Tangent((f64, f64)),
    /// Two common points. The first lies on the positive side of the
    /// center-to-center axis (left of the direction from the first to the
    /// second center).
    Pair((f64, f64), (f64, f64)),
}

const TANGENT_TOL: f64 = 1e-9;

/// Intersect the circles `(c0, r0)` and `(c1, r1)`.
///
/// Coincident circles share every point and yield
/// [`Error::InfiniteIntersection`]; non-positive or non-finite inputs are
/// rejected outright.
pub fn circle_intersections(
    c0: (f64, f64),
    r0: f64,
    c1: (f64, f64),
    r1: f64,
) -> Result<CircleIntersections> {
    for v in [c0.0, c0.1, c1.0, c1.1, r0, r1] {
        if !v.is_finite() {
            return Err(Error::Validation(
                "circle parameters must be finite".into(),
            ));
        }
    }
    if r0 <= 0.0 || r1 <= 0.0 {
        return Err(Error::Validation(format!(
            "circle radii must be positive, got {r0} and {r1}"
        )));
    }

    let (dx, dy) = (c1.0 - c0.0, c1.1 - c0.1);
    let d = dx.hypot(dy);
    let scale = r0.max(r1).max(1.0);
    if d <= TANGENT_TOL * scale {
        if (r0 - r1).abs() <= TANGENT_TOL * scale {
            return Err(Error::InfiniteIntersection);
        }
        return Ok(CircleIntersections::Disjoint); // concentric
    }

    let (ux, uy) = (dx / d, dy / d);
    // Distance from c0 to the chord along the center axis.
    let a = (d * d + r0 * r0 - r1 * r1) / (2.0 * d);
    let tangent = (d - (r0 + r1)).abs() <= TANGENT_TOL * scale
        || (d - (r0 - r1).abs()).abs() <= TANGENT_TOL * scale;
    if tangent {
        return Ok(CircleIntersections::Tangent((c0.0 + a * ux, c0.1 + a * uy)));
    }
    if d > r0 + r1 || d < (r0 - r1).abs() {
        return Ok(CircleIntersections::Disjoint);
    }

    // Half chord length via the numerically stable Heron-style product:
    // (2·d·h)² = (r0+r1+d)(r0+r1−d)(d+r0−r1)(d−r0+r1).
    let p = (r0 + r1 + d) * (r0 + r1 - d) * (d + r0 - r1) * (d - r0 + r1);
    let h = p.max(0.0).sqrt() / (2.0 * d);
    let (mx, my) = (c0.0 + a * ux, c0.1 + a * uy);
    let (nx, ny) = (-uy, ux);
    Ok(CircleIntersections::Pair(
        (mx + h * nx, my + h * ny),
        (mx - h * nx, my - h * ny),
    ))
}

// ---------- Closed-form triple-overlap area ----------

/// Area seen by all three receivers of an equilateral triangle with side
/// `spacing` and common detection radius `radius`.
///
/// Valid for `0 ≤ spacing ≤ √3·radius`; outside that range the lens is
/// undefined (negative spacing) or empty by construction, and the function
/// returns [`Error::Domain`].
pub fn equilateral_coverage_area(radius: f64, spacing: f64) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Validation(format!(
            "detection radius must be positive and finite, got {radius}"
        )));
    }
    if !spacing.is_finite() || spacing < 0.0 || spacing > 3.0f64.sqrt() * radius {
        return Err(Error::Domain(format!(
            "spacing {spacing} outside [0, √3·{radius}]"
        )));
    }
    // Side of the inner triangle formed by the pairwise circle
    // intersection points closest to the centroid.
    let d = 0.5 * ((3.0 * (4.0 * radius * radius - spacing * spacing)).max(0.0).sqrt() - spacing);
    let triangle = 3.0f64.sqrt() / 4.0 * d * d;
    // One circular segment: sector minus its chord triangle.
    let half_angle_sin = (d / (2.0 * radius)).clamp(-1.0, 1.0);
    let segment = radius * radius * half_angle_sin.asin()
        - 0.25 * d * (4.0 * radius * radius - d * d).max(0.0).sqrt();
    Ok(triangle + 3.0 * segment)
}

// ---------- Numeric spacing scan ----------

/// One sample of a spacing scan, both axes nondimensionalized by the
/// detection radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    /// Receiver spacing divided by the detection radius.
    pub l_over_r: f64,
    /// Covered area divided by the squared detection radius.
    pub coverage_over_r2: f64,
}

/// Coverage-versus-spacing curve for an equilateral three-receiver layout.
#[derive(Debug, Clone)]
pub struct ScanCurve {
    pub points: Vec<ScanPoint>,
    pub detection_radius: f64,
    pub alpha: f64,
}

impl ScanCurve {
    /// The sample with the largest coverage (first one on ties).
    pub fn argmax(&self) -> &ScanPoint {
        self.points
            .iter()
            .reduce(|best, p| {
                if p.coverage_over_r2 > best.coverage_over_r2 {
                    p
                } else {
                    best
                }
            })
            .expect("scan curves are never empty")
    }
}

/// Sweep the spacing of an equilateral three-receiver layout from
/// `1.7·R/l_steps` to `1.7·R` and evaluate the full coverage chain at each
/// spacing.
///
/// Every sample uses a flat 30 m seabed sampled at `cell_size`, receivers
/// 3 m above the bottom, a tag pinned at 28 m, `beta = 3`, and the given
/// GDOP threshold `alpha` and formula. The 1 m receiver-to-tag depth
/// offset keeps the visibility matrix away from the exactly coplanar
/// degeneracy while staying negligible against horizontal ranges.
pub fn spacing_scan(
    detection_radius: f64,
    alpha: f64,
    l_steps: usize,
    cell_size: f64,
    formula: GdopFormula,
) -> Result<ScanCurve> {
    if !(detection_radius.is_finite() && detection_radius > 0.0) {
        return Err(Error::Validation(format!(
            "detection radius must be positive and finite, got {detection_radius}"
        )));
    }
    if l_steps < 10 {
        return Err(Error::Validation(format!(
            "a spacing scan needs at least 10 steps, got {l_steps}"
        )));
    }
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::Validation(format!(
            "cell size must be positive and finite, got {cell_size}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::Validation(format!(
            "alpha must be positive, got {alpha}"
        )));
    }

    let points: Vec<ScanPoint> = (1..=l_steps)
        .into_par_iter()
        .map(|i| -> Result<ScanPoint> {
            let l = 1.7 * detection_radius * (i as f64) / (l_steps as f64);
            let coverage = scan_coverage_cells(detection_radius, l, cell_size, alpha, formula)?;
            Ok(ScanPoint {
                l_over_r: 1.7 * (i as f64) / (l_steps as f64),
                coverage_over_r2: coverage as f64 * cell_size * cell_size
                    / (detection_radius * detection_radius),
            })
        })
        .collect::<Result<_>>()?;

    Ok(ScanCurve {
        points,
        detection_radius,
        alpha,
    })
}

/// Build one scan scene and return its covered cell count.
fn scan_coverage_cells(
    radius: f64,
    spacing: f64,
    cell_size: f64,
    alpha: f64,
    formula: GdopFormula,
) -> Result<usize> {
    let half_cells = ((2.0 * radius + spacing) / cell_size).ceil() as usize;
    let n = 2 * half_cells + 1;
    let origin = -((half_cells as f64) + 0.5) * cell_size;
    // Seabed depth and acoustic levels chosen so that the detection radius
    // is exactly `radius` for the 3 m-off-bottom receivers and the 28 m
    // tag: SNR = SL − TL(R) − NL with zero absorption, so the threshold is
    // hit exactly at slant range R.
    let grid = BathymetryGrid::flat(origin, origin, cell_size, n, n, 30.0);
    let aoi = full_aoi_mask(&grid)?;
    let acoustics = AcousticParams {
        source_level_db: 110.0 + 10.0 * radius.log10(),
        noise_level_db: 100.0,
        detection_threshold_db: 10.0,
        absorption_db_per_km: 0.0,
        frequency_khz: 69.0,
    };
    let scene = Scene {
        grid,
        model: PropagationModel::Isotropic,
        acoustics,
        tag_depth: DepthRule::FixedDepth(28.0),
        receiver_depth: DepthRule::SeabedOffset(3.0),
        coverage: CoverageParams {
            alpha,
            beta: 3,
            rho: 0.0,
            formula,
        },
        aoi,
    };
    let c = spacing / 3.0f64.sqrt();
    let receivers = Receiver::place(
        &scene.grid,
        &[
            (0.0, c),
            (-spacing / 2.0, -c / 2.0),
            (spacing / 2.0, -c / 2.0),
        ],
        DepthRule::SeabedOffset(3.0),
    )?;
    let report = coverage_report(&scene, &receivers)?;
    Ok(report.coverage_cells)
}

/// The closed-form curve on the same spacing grid as [`spacing_scan`],
/// for side-by-side export.
pub fn analytic_curve(detection_radius: f64, l_steps: usize) -> Result<Vec<ScanPoint>> {
    if l_steps < 10 {
        return Err(Error::Validation(format!(
            "a spacing scan needs at least 10 steps, got {l_steps}"
        )));
    }
    (1..=l_steps)
        .map(|i| {
            let ratio = 1.7 * (i as f64) / (l_steps as f64);
            let area =
                equilateral_coverage_area(detection_radius, ratio * detection_radius)?;
            Ok(ScanPoint {
                l_over_r: ratio,
                coverage_over_r2: area / (detection_radius * detection_radius),
            })
        })
        .collect()
}

/// Write a scan curve as `l_over_R,coverage_over_R2`.
pub fn write_scan_csv<W: std::io::Write>(points: &[ScanPoint], out: &mut W) -> Result<()> {
    writeln!(out, "l_over_R,coverage_over_R2")?;
    for p in points {
        writeln!(out, "{:.6},{:.6}", p.l_over_r, p.coverage_over_r2)?;
    }
    Ok(())
}

// ---------- Tests ----------
