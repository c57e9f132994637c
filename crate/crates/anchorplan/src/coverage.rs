//! The coverage chain: detection masks → localization mask → usable mask.
//!
//! A cell is *localizable* when at least `beta` receivers detect a tag
//! there, and *usable* when additionally the GDOP of the detecting receiver
//! set stays at or below `alpha`. The coverage area is the set of usable
//! cells; the planning constraint demands that at least a fraction `rho` of
//! the area of interest is covered.
//!
//! GDOP is evaluated once per cell over the *full* set of detecting
//! receivers — that set is what a localization solver would actually use.
//! Once four or more receivers already detect a cell, additional detectors
//! can only improve (or tie) the score; the jump from three detectors to
//! four can move either way, because a fourth receiver is what first makes
//! the depth/clock direction observable at all, however weakly.

use std::io::Write;

use rayon::prelude::*;

use crate::envgrid::{BathymetryGrid, CellIndex, CellMask, DepthRule, Position};
use crate::gdop::{gdop_value, GdopFormula};
use crate::propagation::{detection_mask, AcousticParams, PropagationModel, Receiver};
use crate::{Error, Result};

// ---------- Configuration ----------

/// Coverage thresholds: `beta` detecting receivers, GDOP at most `alpha`,
/// AOI covered to fraction `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageParams {
    /// GDOP threshold; `f64::INFINITY` disables the geometry filter.
    pub alpha: f64,
    /// Minimum number of simultaneously detecting receivers.
    pub beta: usize,
    /// Required covered fraction of the area of interest, in [0, 1].
    pub rho: f64,
    /// Which GDOP formula scores cell geometry.
    pub formula: GdopFormula,
}

impl Default for CoverageParams {
    fn default() -> Self {
        CoverageParams {
            alpha: 5.0,
            beta: 3,
            rho: 0.5,
            formula: GdopFormula::Trace,
        }
    }
}

impl CoverageParams {
    pub fn validate(&self) -> Result<()> {
        if self.beta < 2 {
            return Err(Error::Validation(format!(
                "beta must be at least 2, got {}",
                self.beta
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Validation(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Validation(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Everything fixed about an evaluation environment: the grid, propagation
/// physics, depth rules, coverage thresholds, and the area of interest.
/// Receiver positions — the thing being optimized — stay outside.
#[derive(Debug, Clone)]
pub struct Scene {
    pub grid: BathymetryGrid,
    pub model: PropagationModel,
    pub acoustics: AcousticParams,
    /// Depth rule for the tag being localized.
    pub tag_depth: DepthRule,
    /// Depth rule used when materializing receiver deployments.
    pub receiver_depth: DepthRule,
    pub coverage: CoverageParams,
    pub aoi: CellMask,
}

impl Scene {
    /// One detection mask per receiver, evaluated concurrently.
    pub fn detection_masks(&self, receivers: &[Receiver]) -> Result<Vec<CellMask>> {
        receivers
            .par_iter()
            .map(|r| detection_mask(&self.model, &self.grid, r, self.tag_depth, &self.acoustics))
            .collect()
    }
}

// ---------- Mask combinators ----------

/// Per-cell count of detecting receivers.
pub fn detect_counts(masks: &[CellMask]) -> Result<Vec<u32>> {
    let first = masks.first().ok_or_else(|| {
        Error::Shape("at least one detection mask is required".into())
    })?;
    let (n_cols, n_rows) = (first.n_cols(), first.n_rows());
    for m in masks {
        if !m.same_shape(first) {
            return Err(Error::Shape(format!(
                "detection mask is {}×{}, expected {}×{}",
                m.n_cols(),
                m.n_rows(),
                n_cols,
                n_rows
            )));
        }
    }
    let mut counts = vec![0u32; n_cols * n_rows];
    for m in masks {
        for idx in m.iter_set() {
            counts[idx.l * n_cols + idx.k] += 1;
        }
    }
    Ok(counts)
}

/// Cells detected by at least `beta` receivers.
pub fn localization_mask(masks: &[CellMask], beta: usize) -> Result<CellMask> {
    let counts = detect_counts(masks)?;
    let (n_cols, n_rows) = (masks[0].n_cols(), masks[0].n_rows());
    let mut out = CellMask::new(n_cols, n_rows);
    for (i, &c) in counts.iter().enumerate() {
        if c as usize >= beta {
            out.set(i % n_cols, i / n_cols, true);
        }
    }
    Ok(out)
}

/// Cells that are localizable *and* geometrically usable, plus the
/// per-cell GDOP map (`+∞` on cells that are not localizable or whose
/// geometry is degenerate).
pub fn usable_mask(
    grid: &BathymetryGrid,
    masks: &[CellMask],
    receivers: &[Receiver],
    tag_depth: DepthRule,
    params: &CoverageParams,
) -> Result<(CellMask, Vec<f64>)> {
    params.validate()?;
    if masks.len() != receivers.len() {
        return Err(Error::Shape(format!(
            "{} detection masks for {} receivers",
            masks.len(),
            receivers.len()
        )));
    }
    let localization = localization_mask(masks, params.beta)?;
    if localization.n_cols() != grid.n_cols() || localization.n_rows() != grid.n_rows() {
        return Err(Error::Shape(
            "detection masks do not match the grid dimensions".into(),
        ));
    }

    let cells: Vec<CellIndex> = localization.iter_set().collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|idx| cell_gdop(grid, masks, receivers, tag_depth, params.formula, *idx))
        .collect();

    let mut gdop = vec![f64::INFINITY; grid.cell_count()];
    let mut usable = CellMask::new(grid.n_cols(), grid.n_rows());
    for (idx, value) in cells.iter().zip(values) {
        gdop[idx.l * grid.n_cols() + idx.k] = value;
        // IEEE semantics make `∞ ≤ ∞` true, so alpha = ∞ disables the
        // geometry filter and usable == localizable, as intended.
        if value <= params.alpha {
            usable.set(idx.k, idx.l, true);
        }
    }
    Ok((usable, gdop))
}

/// GDOP at one cell over the full detecting receiver set. Geometry that
/// cannot be scored (fewer than three detectors, tag exactly on a
/// receiver) counts as `+∞`.
fn cell_gdop(
    grid: &BathymetryGrid,
    masks: &[CellMask],
    receivers: &[Receiver],
    tag_depth: DepthRule,
    formula: GdopFormula,
    idx: CellIndex,
) -> f64 {
    let placed = match grid.index_to_position(idx.k, idx.l, tag_depth) {
        Ok(p) => p,
        Err(_) => return f64::INFINITY,
    };
    let detecting: Vec<Position> = receivers
        .iter()
        .zip(masks)
        .filter(|(_, m)| m.get(idx.k, idx.l))
        .map(|(r, _)| r.position)
        .collect();
    match gdop_value(&placed.position, &detecting, formula) {
        Ok(g) => g.value,
        Err(_) => f64::INFINITY,
    }
}

// ---------- Reports ----------

/// Everything a coverage evaluation produces: masks, per-cell maps, sizes,
/// and the constraint verdict.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    /// Usable cells — the coverage area C.
    pub coverage_mask: CellMask,
    /// Cells with at least `beta` detecting receivers.
    pub localization_mask: CellMask,
    /// Row-major per-cell count of detecting receivers.
    pub detect_counts: Vec<u32>,
    /// Row-major per-cell GDOP (`+∞` outside the localization area).
    pub gdop: Vec<f64>,
    pub coverage_cells: usize,
    pub localization_cells: usize,
    pub aoi_cells: usize,
    pub coverage_in_aoi_cells: usize,
    /// Whether ‖C ∩ I‖ ≥ ρ·‖I‖.
    pub constraint_met: bool,
    pub cell_size: f64,
}

impl CoverageReport {
    pub fn coverage_area_m2(&self) -> f64 {
        self.coverage_cells as f64 * self.cell_size * self.cell_size
    }

    /// Covered fraction of the area of interest.
    pub fn aoi_coverage_fraction(&self) -> f64 {
        if self.aoi_cells == 0 {
            0.0
        } else {
            self.coverage_in_aoi_cells as f64 / self.aoi_cells as f64
        }
    }

    pub fn gdop_at(&self, k: usize, l: usize) -> f64 {
        self.gdop[l * self.coverage_mask.n_cols() + k]
    }

    pub fn detect_count_at(&self, k: usize, l: usize) -> u32 {
        self.detect_counts[l * self.coverage_mask.n_cols() + k]
    }
}

/// Full coverage evaluation from precomputed detection masks.
pub fn coverage_from_masks(
    scene: &Scene,
    receivers: &[Receiver],
    masks: &[CellMask],
) -> Result<CoverageReport> {
    let detect_counts = detect_counts(masks)?;
    let localization = localization_mask(masks, scene.coverage.beta)?;
    let (coverage, gdop) = usable_mask(
        &scene.grid,
        masks,
        receivers,
        scene.tag_depth,
        &scene.coverage,
    )?;
    if !scene.aoi.same_shape(&coverage) {
        return Err(Error::Shape(
            "area-of-interest mask does not match the grid dimensions".into(),
        ));
    }

    let coverage_cells = coverage.count();
    let aoi_cells = scene.aoi.count();
    let coverage_in_aoi_cells = coverage.intersection_count(&scene.aoi);
    let required = scene.coverage.rho * aoi_cells as f64;
    let constraint_met = coverage_in_aoi_cells as f64 + 1e-9 >= required;

    Ok(CoverageReport {
        localization_cells: localization.count(),
        coverage_mask: coverage,
        localization_mask: localization,
        detect_counts,
        gdop,
        coverage_cells,
        aoi_cells,
        coverage_in_aoi_cells,
        constraint_met,
        cell_size: scene.grid.cell_size(),
    })
}

/// Full coverage evaluation for a receiver set: computes the detection
/// masks, then delegates to [`coverage_from_masks`].
pub fn coverage_report(scene: &Scene, receivers: &[Receiver]) -> Result<CoverageReport> {
    let masks = scene.detection_masks(receivers)?;
    coverage_from_masks(scene, receivers, &masks)
}

// ---------- Exports ----------

fn format_gdop(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

/// Write the per-cell coverage map as `k,l,x,y,detect_count,gdop,usable`.
pub fn write_coverage_csv<W: Write>(
    report: &CoverageReport,
    grid: &BathymetryGrid,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "k,l,x,y,detect_count,gdop,usable")?;
    for idx in grid.cells() {
        let (x, y) = grid.cell_center(idx.k, idx.l);
        writeln!(
            out,
            "{},{},{:.3},{:.3},{},{},{}",
            idx.k,
            idx.l,
            x,
            y,
            report.detect_count_at(idx.k, idx.l),
            format_gdop(report.gdop_at(idx.k, idx.l)),
            u8::from(report.coverage_mask.get(idx.k, idx.l)),
        )?;
    }
    Ok(())
}

/// Write the per-cell GDOP map as `k,l,x,y,gdop`.
pub fn write_gdop_csv<W: Write>(
    report: &CoverageReport,
    grid: &BathymetryGrid,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "k,l,x,y,gdop")?;
    for idx in grid.cells() {
        let (x, y) = grid.cell_center(idx.k, idx.l);
        writeln!(
            out,
            "{},{},{:.3},{:.3},{}",
            idx.k,
            idx.l,
            x,
            y,
            format_gdop(report.gdop_at(idx.k, idx.l)),
        )?;
    }
    Ok(())
}

/// Write a quick-look portable graymap (ASCII PGM, north row first):
/// white = covered, light gray = localizable, dark gray = detected by at
/// least one receiver, black = nothing.
pub fn write_coverage_pgm<W: Write>(
    report: &CoverageReport,
    grid: &BathymetryGrid,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "P2")?;
    writeln!(out, "{} {}", grid.n_cols(), grid.n_rows())?;
    writeln!(out, "255")?;
    for l in (0..grid.n_rows()).rev() {
        let row: Vec<String> = (0..grid.n_cols())
            .map(|k| {
                let v = if report.coverage_mask.get(k, l) {
                    255
                } else if report.localization_mask.get(k, l) {
                    170
                } else if report.detect_count_at(k, l) > 0 {
                    85
                } else {
                    0
                };
                v.to_string()
            })
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

// ---------- Tests ----------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgrid::{build_aoi_mask, full_aoi_mask, Rect};

    fn mask_from(n_cols: usize, n_rows: usize, set: &[(usize, usize)]) -> CellMask {
        let mut m = CellMask::new(n_cols, n_rows);
        for &(k, l) in set {
            m.set(k, l, true);
        }
        m
    }

    fn full_mask(n_cols: usize, n_rows: usize) -> CellMask {
        let mut m = CellMask::new(n_cols, n_rows);
        for l in 0..n_rows {
            for k in 0..n_cols {
                m.set(k, l, true);
            }
        }
        m
    }

    fn flat_scene(n: usize, cell: f64, depth: f64, params: CoverageParams) -> Scene {
        let grid = BathymetryGrid::flat(0.0, 0.0, cell, n, n, depth);
        let aoi = full_aoi_mask(&grid).unwrap();
        Scene {
            grid,
            model: PropagationModel::Isotropic,
            acoustics: AcousticParams::default(),
            tag_depth: DepthRule::FixedDepth(3.0),
            receiver_depth: DepthRule::SeabedOffset(0.5),
            coverage: params,
            aoi,
        }
    }

    /// Scene matching the published two-triangle comparison: flat 20 m
    /// seabed on a 100 m grid, receivers 0.5 m up, tag at 3 m, receivers on
    /// an equilateral triangle with the centroid on a cell center.
    fn equilateral_scene(spacing: f64, params: CoverageParams) -> (Scene, Vec<Receiver>) {
        let r = 1000.0;
        let cell = 100.0;
        let half_cells = ((2.0 * r + spacing) / cell).ceil() as usize;
        let n = 2 * half_cells + 1;
        let origin = -((half_cells as f64) + 0.5) * cell;
        let grid = BathymetryGrid::flat(origin, origin, cell, n, n, 20.0);
        let aoi = full_aoi_mask(&grid).unwrap();
        let c = spacing / 3.0f64.sqrt();
        let receivers = Receiver::place(
            &grid,
            &[
                (0.0, c),
                (-spacing / 2.0, -c / 2.0),
                (spacing / 2.0, -c / 2.0),
            ],
            DepthRule::SeabedOffset(0.5),
        )
        .unwrap();
        let scene = Scene {
            grid,
            model: PropagationModel::Isotropic,
            acoustics: AcousticParams::default(),
            tag_depth: DepthRule::FixedDepth(3.0),
            receiver_depth: DepthRule::SeabedOffset(0.5),
            coverage: params,
            aoi,
        };
        (scene, receivers)
    }

    // ----- localization masks -----

    #[test]
    fn two_masks_cannot_reach_beta_three() {
        let masks = vec![full_mask(4, 4), full_mask(4, 4)];
        let loc = localization_mask(&masks, 3).unwrap();
        assert_eq!(loc.count(), 0);
    }

    #[test]
    fn beta_one_is_the_union() {
        let masks = vec![
            mask_from(3, 3, &[(0, 0), (1, 1)]),
            mask_from(3, 3, &[(2, 2), (1, 1)]),
        ];
        let loc = localization_mask(&masks, 1).unwrap();
        assert_eq!(loc.count(), 3);
        assert!(loc.get(0, 0) && loc.get(1, 1) && loc.get(2, 2));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let masks = vec![full_mask(3, 3), full_mask(4, 3)];
        assert!(matches!(localization_mask(&masks, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn four_discs_make_two_localization_lenses() {
        // Four receivers in a row, spacing 800 m, detection radius 1 km:
        // triples {0,1,2} and {1,2,3} each share a lens (end discs 1.6 km
        // apart), wider triples span too far, and the two lenses are
        // disjoint. Verified against per-cell counting with independent
        // distance arithmetic.
        let params = CoverageParams {
            alpha: f64::INFINITY,
            ..CoverageParams::default()
        };
        let scene = flat_scene(60, 100.0, 20.0, params);
        let receivers = Receiver::place(
            &scene.grid,
            &[
                (1200.0, 3000.0),
                (2000.0, 3000.0),
                (2800.0, 3000.0),
                (3600.0, 3000.0),
            ],
            DepthRule::SeabedOffset(0.5),
        )
        .unwrap();
        let masks = scene.detection_masks(&receivers).unwrap();
        let loc = localization_mask(&masks, 3).unwrap();
        assert!(loc.count() > 0, "triple-overlap lenses must exist");

        // Independent oracle: count in-range receivers per cell directly.
        let mut expected = 0usize;
        let mut saw_left_lens = false;
        let mut saw_right_lens = false;
        for idx in scene.grid.cells() {
            let tag = scene
                .grid
                .index_to_position(idx.k, idx.l, scene.tag_depth)
                .unwrap()
                .position;
            let n_in = receivers
                .iter()
                .filter(|r| tag.distance(&r.position) <= 1000.0)
                .count();
            assert_eq!(
                loc.get(idx.k, idx.l),
                n_in >= 3,
                "cell ({}, {})",
                idx.k,
                idx.l
            );
            if n_in >= 3 {
                expected += 1;
                if tag.x < 2400.0 {
                    saw_left_lens = true;
                } else {
                    saw_right_lens = true;
                }
            }
        }
        assert_eq!(loc.count(), expected);
        assert!(saw_left_lens && saw_right_lens, "both lenses populated");
    }

    // ----- usable masks -----

    #[test]
    fn coincident_detectors_are_never_usable() {
        // Three receivers on one mooring hear the whole small grid, so
        // everything is localizable by count — but a single bearing
        // direction supports no fix, so nothing is usable.
        let scene = flat_scene(10, 100.0, 20.0, CoverageParams::default());
        let receivers = Receiver::place(
            &scene.grid,
            &[(500.0, 500.0), (500.0, 500.0), (500.0, 500.0)],
            DepthRule::SeabedOffset(0.5),
        )
        .unwrap();
        let report = coverage_report(&scene, &receivers).unwrap();
        assert_eq!(report.localization_cells, 100, "count says everywhere");
        assert_eq!(
            report.coverage_cells, 0,
            "degenerate geometry must yield an empty usable area"
        );
    }

    #[test]
    fn usable_fraction_matches_published_two_spacings() {
        let params = CoverageParams {
            alpha: 5.0,
            beta: 3,
            rho: 0.0,
            formula: GdopFormula::Planar,
        };
        for (spacing, expected) in [(450.0, 0.86), (300.0, 0.37)] {
            let (scene, receivers) = equilateral_scene(spacing, params);
            let report = coverage_report(&scene, &receivers).unwrap();
            assert!(report.localization_cells > 0);
            let frac = report.coverage_cells as f64 / report.localization_cells as f64;
            assert!(
                (frac - expected).abs() <= 0.05,
                "spacing {spacing}: usable fraction {frac:.4} vs expected {expected}"
            );
        }
    }

    #[test]
    fn tighter_alpha_shrinks_coverage() {
        let mk = |alpha: f64| CoverageParams {
            alpha,
            beta: 3,
            rho: 0.0,
            formula: GdopFormula::Planar,
        };
        let (scene2, receivers) = equilateral_scene(450.0, mk(2.0));
        let (scene8, _) = equilateral_scene(450.0, mk(8.0));
        let r2 = coverage_report(&scene2, &receivers).unwrap();
        let r8 = coverage_report(&scene8, &receivers).unwrap();
        assert!(r2.coverage_mask.is_subset_of(&r8.coverage_mask));
        assert!(r2.coverage_cells < r8.coverage_cells);
    }

    #[test]
    fn extra_detectors_only_help_once_geometry_is_observable() {
        // Five well-spread receivers: every 4-subset already fixes all
        // four unknowns, so the full set must beat (or tie) each of them.
        // This is the regime where full-set scoring is conservative.
        let p = Position::new(50.0, -75.0, -5.0);
        let rcvs = [
            Position::new(900.0, 100.0, -40.0),
            Position::new(-200.0, 800.0, -15.0),
            Position::new(-700.0, -300.0, -60.0),
            Position::new(400.0, -600.0, -25.0),
            Position::new(100.0, 200.0, -80.0),
        ];
        let full = gdop_value(&p, &rcvs, GdopFormula::Trace).unwrap().value;
        assert!((full - 5.607_019_816_750_45).abs() < 1e-9);
        for skip in 0..5 {
            let subset: Vec<Position> = rcvs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, r)| *r)
                .collect();
            let sub = gdop_value(&p, &subset, GdopFormula::Trace).unwrap().value;
            assert!(
                full <= sub + 1e-9,
                "full set {full} must dominate subset without {skip} ({sub})"
            );
        }
    }

    // ----- reports -----

    #[test]
    fn empty_detection_means_empty_coverage() {
        let mut params = CoverageParams::default();
        params.rho = 0.5;
        let mut scene = flat_scene(10, 100.0, 20.0, params);
        scene.acoustics.detection_threshold_db = f64::INFINITY;
        let receivers = Receiver::place(
            &scene.grid,
            &[(300.0, 500.0), (500.0, 300.0), (700.0, 500.0)],
            DepthRule::SeabedOffset(0.5),
        )
        .unwrap();
        let report = coverage_report(&scene, &receivers).unwrap();
        assert_eq!(report.coverage_cells, 0);
        assert!(!report.constraint_met, "rho = 0.5 cannot be met by nothing");

        let mut vacuous = scene.clone();
        vacuous.coverage.rho = 0.0;
        let report = coverage_report(&vacuous, &receivers).unwrap();
        assert!(report.constraint_met, "rho = 0 is vacuously satisfied");
    }

    #[test]
    fn constraint_accounting_uses_the_aoi() {
        let params = CoverageParams {
            alpha: f64::INFINITY,
            beta: 3,
            rho: 0.9,
            formula: GdopFormula::Trace,
        };
        let grid = BathymetryGrid::flat(0.0, 0.0, 100.0, 40, 40, 20.0);
        // AOI in the far corner, receivers clustered in the opposite one.
        let aoi = build_aoi_mask(&grid, &Rect::new(3000.0, 3000.0, 4000.0, 4000.0)).unwrap();
        let scene = Scene {
            grid,
            model: PropagationModel::Isotropic,
            acoustics: AcousticParams::default(),
            tag_depth: DepthRule::FixedDepth(3.0),
            receiver_depth: DepthRule::SeabedOffset(0.5),
            coverage: params,
            aoi,
        };
        let receivers = Receiver::place(
            &scene.grid,
            &[(500.0, 500.0), (900.0, 500.0), (700.0, 850.0)],
            DepthRule::SeabedOffset(0.5),
        )
        .unwrap();
        let report = coverage_report(&scene, &receivers).unwrap();
        assert!(report.coverage_cells > 0, "the cluster covers its own lens");
        assert_eq!(report.coverage_in_aoi_cells, 0, "but none of the AOI");
        assert!(!report.constraint_met);
        assert_eq!(report.aoi_cells, 100);
    }

    #[test]
    fn coverage_is_inside_localization() {
        let (scene, receivers) = equilateral_scene(450.0, CoverageParams::default());
        let report = coverage_report(&scene, &receivers).unwrap();
        assert!(report.coverage_mask.is_subset_of(&report.localization_mask));
        assert_eq!(report.coverage_cells, report.coverage_mask.count());
        assert_eq!(report.localization_cells, report.localization_mask.count());
    }

    // ----- exports -----

    #[test]
    fn csv_export_round_trips_representative_cells() {
        let (scene, receivers) = equilateral_scene(450.0, CoverageParams::default());
        let report = coverage_report(&scene, &receivers).unwrap();
        let mut buf = Vec::new();
        write_coverage_csv(&report, &scene.grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,l,x,y,detect_count,gdop,usable"));
        let n_rows = text.lines().count() - 1;
        assert_eq!(n_rows, scene.grid.cell_count());
        // Spot-check one line against the report.
        let line = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        let (k, l): (usize, usize) = (fields[0].parse().unwrap(), fields[1].parse().unwrap());
        assert_eq!(
            fields[4].parse::<u32>().unwrap(),
            report.detect_count_at(k, l)
        );
        assert!(text.contains(",inf,"), "cells outside localization print inf");
    }

    #[test]
    fn pgm_export_has_correct_shape() {
        let (scene, receivers) = equilateral_scene(300.0, CoverageParams::default());
        let report = coverage_report(&scene, &receivers).unwrap();
        let mut buf = Vec::new();
        write_coverage_pgm(&report, &scene.grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("P2"));
        assert_eq!(
            lines.next(),
            Some(format!("{} {}", scene.grid.n_cols(), scene.grid.n_rows()).as_str())
        );
        assert_eq!(lines.next(), Some("255"));
        assert_eq!(text.lines().count(), 3 + scene.grid.n_rows());
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(CoverageParams { beta: 1, ..CoverageParams::default() }
            .validate()
            .is_err());
        assert!(CoverageParams { alpha: 0.0, ..CoverageParams::default() }
            .validate()
            .is_err());
        assert!(CoverageParams { rho: 1.5, ..CoverageParams::default() }
            .validate()
            .is_err());
        assert!(CoverageParams { alpha: f64::INFINITY, ..CoverageParams::default() }
            .validate()
            .is_ok());
    }
}
