//! Deployment solvers: the common-practice lattice baseline, a seeded
//! genetic optimizer, and an exhaustive search oracle for small instances.
//!
//! All three optimize the same objective, [`fitness`]: covered cells minus
//! a penalty for missing the area-of-interest constraint. The genetic
//! algorithm's initial population always contains the lattice baseline, so
//! its result can never fall below the baseline — comparisons between the
//! two are one-sided by construction.

use std::collections::HashMap;

use itertools::Itertools;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;

use crate::coverage::{coverage_from_masks, coverage_report, CoverageReport, Scene};
use crate::envgrid::{BathymetryGrid, CellIndex, CellMask};
use crate::propagation::{detection_mask, Receiver};
use crate::{Error, Result};

/// Hard cap on exhaustive-search size.
pub const BRUTE_FORCE_BUDGET: u128 = 10_000_000;

// ---------- Deployments ----------

/// An ordered list of receiver anchor positions (horizontal only — depths
/// come from the scene's receiver depth rule).
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub positions: Vec<(f64, f64)>,
}

impl Deployment {
    pub fn new(positions: Vec<(f64, f64)>) -> Self {
        Deployment { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Check that every position sits inside the grid on a valid cell.
    pub fn validate(&self, grid: &BathymetryGrid) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::Validation("deployment has no receivers".into()));
        }
        for &(x, y) in &self.positions {
            let idx = grid.position_to_index(x, y)?;
            if grid.is_nodata(idx.k, idx.l) {
                return Err(Error::NoData { k: idx.k, l: idx.l });
            }
        }
        Ok(())
    }

    /// Materialize receivers using the scene's depth rule.
    pub fn to_receivers(
        &self,
        grid: &BathymetryGrid,
        rule: crate::envgrid::DepthRule,
    ) -> Result<Vec<Receiver>> {
        Receiver::place(grid, &self.positions, rule)
    }
}

// ---------- Objective ----------

/// Objective value of a coverage report: covered cells minus
/// `penalty_weight` times the shortfall against `rho·‖AOI‖`, all in cells.
pub fn fitness_from_report(
    scene: &Scene,
    report: &CoverageReport,
    penalty_weight: f64,
) -> f64 {
    let required = scene.coverage.rho * report.aoi_cells as f64;
    let shortfall = (required - report.coverage_in_aoi_cells as f64).max(0.0);
    report.coverage_cells as f64 - penalty_weight * shortfall
}

/// Evaluate a deployment from scratch: place receivers, run the coverage
/// chain, and score it. Higher is better; a met constraint makes the
/// score exactly the covered cell count.
pub fn fitness(scene: &Scene, deployment: &Deployment, penalty_weight: f64) -> Result<f64> {
    let receivers = deployment.to_receivers(&scene.grid, scene.receiver_depth)?;
    let report = coverage_report(scene, &receivers)?;
    Ok(fitness_from_report(scene, &report, penalty_weight))
}

// ---------- Common-practice lattice baseline ----------

/// The common-practice layout: vertices of a triangular lattice with edge
/// `spacing`, centered on the centroid of the area of interest. Returns
/// the `n` lattice vertices nearest the centroid (ties broken by angle,
/// then insertion order), each snapped to the center of its containing
/// cell.
///
/// `n = 3` gives an equilateral triangle and `n = 4` two triangles sharing
/// an edge, up to cell-snap error.
pub fn cp_layout(
    grid: &BathymetryGrid,
    aoi: &CellMask,
    n: usize,
    spacing: f64,
) -> Result<Deployment> {
    if n < 3 {
        return Err(Error::Validation(format!(
            "a lattice layout needs at least 3 receivers, got {n}"
        )));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Validation(format!(
            "lattice spacing must be positive, got {spacing}"
        )));
    }
    let (cx, cy) = aoi_centroid(grid, aoi)?;
    let (min_x, min_y, max_x, max_y) = grid.extent();
    let pitch = spacing * 3.0f64.sqrt() / 2.0;

    struct Candidate {
        snapped: (f64, f64),
        cell: CellIndex,
        dist: f64,
        angle: f64,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    let j_lo = ((min_y - cy) / pitch).ceil() as i64;
    let j_hi = ((max_y - cy) / pitch).floor() as i64;
    for j in j_lo..=j_hi {
        let y = cy + j as f64 * pitch;
        if !(min_y..max_y).contains(&y) {
            continue;
        }
        let row_offset = if j.rem_euclid(2) == 1 { spacing / 2.0 } else { 0.0 };
        let i_lo = ((min_x - cx - row_offset) / spacing).ceil() as i64;
        let i_hi = ((max_x - cx - row_offset) / spacing).floor() as i64;
        for i in i_lo..=i_hi {
            let x = cx + row_offset + i as f64 * spacing;
            if !(min_x..max_x).contains(&x) {
                continue;
            }
            let Ok(cell) = grid.position_to_index(x, y) else {
                continue;
            };
            if grid.is_nodata(cell.k, cell.l) {
                continue;
            }
            let (dx, dy) = (x - cx, y - cy);
            candidates.push(Candidate {
                snapped: grid.cell_center(cell.k, cell.l),
                cell,
                dist: dx.hypot(dy),
                angle: dy.atan2(dx),
            });
        }
    }

    // Nearest-first, exact distance ties broken by bearing. Insertion
    // order is row-major over the lattice and settles anything left.
    let tol = 1e-9 * spacing;
    candidates.sort_by(|a, b| {
        if (a.dist - b.dist).abs() <= tol {
            a.angle.partial_cmp(&b.angle).unwrap()
        } else {
            a.dist.partial_cmp(&b.dist).unwrap()
        }
    });

    // Distinct cells only: two vertices snapping onto one cell would be
    // two receivers on the same mooring.
    let mut positions = Vec::with_capacity(n);
    let mut used = std::collections::HashSet::new();
    for c in &candidates {
        if used.insert(c.cell) {
            positions.push(c.snapped);
            if positions.len() == n {
                break;
            }
        }
    }
    if positions.len() < n {
        return Err(Error::Layout(format!(
            "lattice with spacing {spacing} m has only {} valid vertices inside the grid, need {n}",
            positions.len()
        )));
    }
    Ok(Deployment::new(positions))
}

/// Mean position of the AOI cell centers.
fn aoi_centroid(grid: &BathymetryGrid, aoi: &CellMask) -> Result<(f64, f64)> {
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut count = 0usize;
    for idx in aoi.iter_set() {
        let (x, y) = grid.cell_center(idx.k, idx.l);
        sx += x;
        sy += y;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Init("area of interest has no valid cells".into()));
    }
    Ok((sx / count as f64, sy / count as f64))
}

// ---------- Shared cached evaluation ----------

/// Detection masks per receiver cell, computed once and reused across
/// candidate deployments. Masks depend only on the receiver's cell (plus
/// scene constants), so the cell index is the whole key.
struct MaskCache {
    masks: HashMap<CellIndex, CellMask>,
}

impl MaskCache {
    fn new() -> Self {
        MaskCache {
            masks: HashMap::new(),
        }
    }

    /// Compute any masks missing for `cells`, in parallel, inserting in a
    /// deterministic order.
    fn ensure(&mut self, scene: &Scene, cells: &[CellIndex]) -> Result<()> {
        let mut missing: Vec<CellIndex> = cells
            .iter()
            .copied()
            .filter(|c| !self.masks.contains_key(c))
            .collect();
        missing.sort();
        missing.dedup();
        let computed: Vec<(CellIndex, CellMask)> = missing
            .par_iter()
            .map(|&cell| -> Result<(CellIndex, CellMask)> {
                let (x, y) = scene.grid.cell_center(cell.k, cell.l);
                let receiver =
                    Receiver::place(&scene.grid, &[(x, y)], scene.receiver_depth)?
                        .pop()
                        .expect("one position in, one receiver out");
                let mask = detection_mask(
                    &scene.model,
                    &scene.grid,
                    &receiver,
                    scene.tag_depth,
                    &scene.acoustics,
                )?;
                Ok((cell, mask))
            })
            .collect::<Result<_>>()?;
        for (cell, mask) in computed {
            self.masks.insert(cell, mask);
        }
        Ok(())
    }

    /// Score a deployment given as cell indices (must all be ensured).
    fn fitness(&self, scene: &Scene, cells: &[CellIndex], penalty_weight: f64) -> Result<f64> {
        let positions: Vec<(f64, f64)> = cells
            .iter()
            .map(|c| scene.grid.cell_center(c.k, c.l))
            .collect();
        let receivers = Receiver::place(&scene.grid, &positions, scene.receiver_depth)?;
        let masks: Vec<CellMask> = cells.iter().map(|c| self.masks[c].clone()).collect();
        let report = coverage_from_masks(scene, &receivers, &masks)?;
        Ok(fitness_from_report(scene, &report, penalty_weight))
    }
}

// ---------- Genetic algorithm ----------

/// Genetic-algorithm knobs. `mutation_sigma = None` defaults to twice the
/// grid cell size at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_sigma: Option<f64>,
    pub tournament_size: usize,
    pub elitism: usize,
    pub penalty_weight: f64,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 64,
            generations: 1000,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            mutation_sigma: None,
            tournament_size: 3,
            elitism: 2,
            penalty_weight: 10.0,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Validation(format!(
                "population must be at least 2, got {}",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(Error::Validation("generations must be at least 1".into()));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Validation(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        if let Some(sigma) = self.mutation_sigma {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::Validation(format!(
                    "mutation_sigma must be positive, got {sigma}"
                )));
            }
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return Err(Error::Validation(format!(
                "tournament_size must lie in [1, population], got {}",
                self.tournament_size
            )));
        }
        if !(self.penalty_weight >= 0.0) {
            return Err(Error::Validation(format!(
                "penalty_weight must be nonnegative, got {}",
                self.penalty_weight
            )));
        }
        Ok(())
    }
}

/// One generation's summary in a GA run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaTraceRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

/// Result of a GA run: the best deployment ever evaluated, its fitness,
/// and the per-generation trace.
#[derive(Debug, Clone)]
pub struct GaResult {
    pub deployment: Deployment,
    pub fitness: f64,
    pub trace: Vec<GaTraceRow>,
}

type Genome = Vec<(f64, f64)>;

/// Optimize `n` receiver positions with a seeded, deterministic genetic
/// algorithm.
///
/// The initial population holds one individual with every receiver at the
/// AOI centroid, one with the common-practice lattice at `cp_spacing`
/// (when given and constructible — otherwise another jittered individual),
/// and centroid-jittered individuals for the rest. Genes are continuous
/// coordinates; each evaluation snaps them to the nearest valid cell
/// center, so the returned deployment always sits on valid cells.
///
/// Fitness evaluations run concurrently, but selection, crossover, and
/// mutation consume one seeded random stream sequentially: results are
/// bit-identical for a given seed regardless of thread count.
pub fn ga_optimize(
    scene: &Scene,
    n: usize,
    params: &GaParams,
    cp_spacing: Option<f64>,
) -> Result<GaResult> {
    params.validate()?;
    if n < 3 {
        return Err(Error::Validation(format!(
            "need at least 3 receivers to localize, got {n}"
        )));
    }
    let centroid = aoi_centroid(&scene.grid, &scene.aoi)
        .map_err(|_| Error::Init("cannot initialize around an empty area of interest".into()))?;
    let sigma = params
        .mutation_sigma
        .unwrap_or(2.0 * scene.grid.cell_size());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let jitter = Normal::new(0.0, sigma).expect("sigma validated positive");

    // Initial population: centroid stack, lattice baseline, jittered rest.
    let mut population: Vec<Genome> = Vec::with_capacity(params.population);
    population.push(vec![centroid; n]);
    if population.len() < params.population {
        match cp_spacing.and_then(|s| cp_layout(&scene.grid, &scene.aoi, n, s).ok()) {
            Some(dep) => population.push(dep.positions),
            None => population.push(jittered_genome(scene, n, centroid, &jitter, &mut rng)),
        }
    }
    while population.len() < params.population {
        population.push(jittered_genome(scene, n, centroid, &jitter, &mut rng));
    }

    let mut cache = MaskCache::new();
    let mut best_fitness = f64::NEG_INFINITY;
    let mut best_cells: Vec<CellIndex> = Vec::new();
    let mut trace = Vec::with_capacity(params.generations);

    for generation in 0..params.generations {
        let snapped: Vec<Vec<CellIndex>> = population
            .iter()
            .map(|g| snap_genome(scene, g))
            .collect::<Result<_>>()?;
        let all_cells: Vec<CellIndex> = snapped.iter().flatten().copied().collect();
        cache.ensure(scene, &all_cells)?;
        let fitnesses: Vec<f64> = snapped
            .par_iter()
            .map(|cells| cache.fitness(scene, cells, params.penalty_weight))
            .collect::<Result<_>>()?;

        let mut gen_best = 0usize;
        let mut sum = 0.0;
        for (i, &f) in fitnesses.iter().enumerate() {
            sum += f;
            if f > fitnesses[gen_best] {
                gen_best = i;
            }
        }
        if fitnesses[gen_best] > best_fitness {
            best_fitness = fitnesses[gen_best];
            best_cells = snapped[gen_best].clone();
        }
        trace.push(GaTraceRow {
            generation,
            best_fitness: fitnesses[gen_best],
            mean_fitness: sum / fitnesses.len() as f64,
        });

        if generation + 1 == params.generations {
            break;
        }

        // Elites first (best fitness, then lower index), then offspring.
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| {
            fitnesses[b]
                .partial_cmp(&fitnesses[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut next: Vec<Genome> = order
            .iter()
            .take(params.elitism.min(params.population))
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < params.population {
            let a = tournament(&fitnesses, params.tournament_size, &mut rng);
            let b = tournament(&fitnesses, params.tournament_size, &mut rng);
            let mut child = if rng.gen::<f64>() < params.crossover_rate {
                (0..n)
                    .map(|i| {
                        if rng.gen::<bool>() {
                            population[a][i]
                        } else {
                            population[b][i]
                        }
                    })
                    .collect()
            } else {
                population[a].clone()
            };
            for gene in child.iter_mut() {
                if rng.gen::<f64>() < params.mutation_rate {
                    let (x, y) = (gene.0 + jitter.sample(&mut rng), gene.1 + jitter.sample(&mut rng));
                    *gene = clip_to_extent(&scene.grid, x, y);
                }
            }
            next.push(child);
        }
        population = next;
    }

    let positions: Vec<(f64, f64)> = best_cells
        .iter()
        .map(|c| scene.grid.cell_center(c.k, c.l))
        .collect();
    Ok(GaResult {
        deployment: Deployment::new(positions),
        fitness: best_fitness,
        trace,
    })
}

fn jittered_genome(
    scene: &Scene,
    n: usize,
    centroid: (f64, f64),
    jitter: &Normal<f64>,
    rng: &mut ChaCha8Rng,
) -> Genome {
    (0..n)
        .map(|_| {
            let x = centroid.0 + jitter.sample(rng);
            let y = centroid.1 + jitter.sample(rng);
            clip_to_extent(&scene.grid, x, y)
        })
        .collect()
}

/// Snap every gene to the nearest valid cell.
fn snap_genome(scene: &Scene, genome: &Genome) -> Result<Vec<CellIndex>> {
    genome
        .iter()
        .map(|&(x, y)| {
            scene
                .grid
                .nearest_valid_cell(x, y)
                .ok_or_else(|| Error::Init("grid has no valid cells".into()))
        })
        .collect()
}

fn clip_to_extent(grid: &BathymetryGrid, x: f64, y: f64) -> (f64, f64) {
    let (min_x, min_y, max_x, max_y) = grid.extent();
    let eps = grid.cell_size() * 1e-6;
    (x.clamp(min_x, max_x - eps), y.clamp(min_y, max_y - eps))
}

/// Index of the tournament winner (ties to the lower index).
fn tournament(fitnesses: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut winner = rng.gen_range(0..fitnesses.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..fitnesses.len());
        if fitnesses[challenger] > fitnesses[winner]
            || (fitnesses[challenger] == fitnesses[winner] && challenger < winner)
        {
            winner = challenger;
        }
    }
    winner
}

/// Write a GA trace as `generation,best_fitness,mean_fitness`.
pub fn write_ga_trace_csv<W: std::io::Write>(trace: &[GaTraceRow], out: &mut W) -> Result<()> {
    writeln!(out, "generation,best_fitness,mean_fitness")?;
    for row in trace {
        writeln!(
            out,
            "{},{:.6},{:.6}",
            row.generation, row.best_fitness, row.mean_fitness
        )?;
    }
    Ok(())
}

// ---------- Exhaustive search ----------

/// Result of an exhaustive search: the optimum, its fitness, and how many
/// combinations were scored.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub deployment: Deployment,
    pub fitness: f64,
    pub evaluated: usize,
}

/// Exhaustively evaluate every unordered `n`-combination of valid cells
/// (subsampled to every `stride`-th row and column) and return the best
/// deployment. Ties go to the lexicographically first combination in
/// (row, column) candidate order.
///
/// Refuses to start when the search space exceeds [`BRUTE_FORCE_BUDGET`],
/// suggesting the smallest workable stride instead.
pub fn brute_force_optimize(
    scene: &Scene,
    n: usize,
    stride: usize,
    penalty_weight: f64,
) -> Result<BruteForceResult> {
    if n < 3 {
        return Err(Error::Validation(format!(
            "need at least 3 receivers to localize, got {n}"
        )));
    }
    if stride == 0 {
        return Err(Error::Validation("stride must be at least 1".into()));
    }
    let candidates = strided_candidates(&scene.grid, stride);
    if candidates.len() < n {
        return Err(Error::Validation(format!(
            "{} candidate cells cannot seat {n} receivers",
            candidates.len()
        )));
    }
    let combinations = combinations_capped(candidates.len() as u128, n as u128, u128::MAX >> 1);
    if combinations > BRUTE_FORCE_BUDGET {
        return Err(Error::Budget {
            combinations,
            budget: BRUTE_FORCE_BUDGET,
            suggested_stride: suggest_stride(&scene.grid, n, stride),
        });
    }

    let mut cache = MaskCache::new();
    cache.ensure(scene, &candidates)?;

    let mut best: Option<(f64, Vec<CellIndex>)> = None;
    let mut evaluated = 0usize;
    for combo in candidates.iter().copied().combinations(n) {
        let f = cache.fitness(scene, &combo, penalty_weight)?;
        evaluated += 1;
        // Strictly-greater keeps the first (lexicographically smallest)
        // combination on ties.
        if best.as_ref().map_or(true, |(bf, _)| f > *bf) {
            best = Some((f, combo));
        }
    }
    let (fitness, cells) = best.expect("at least one combination evaluated");
    let positions = cells
        .iter()
        .map(|c| scene.grid.cell_center(c.k, c.l))
        .collect();
    Ok(BruteForceResult {
        deployment: Deployment::new(positions),
        fitness,
        evaluated,
    })
}

/// Valid cells on every `stride`-th row and column, in (row, column) order.
fn strided_candidates(grid: &BathymetryGrid, stride: usize) -> Vec<CellIndex> {
    grid.cells()
        .filter(|c| c.k % stride == 0 && c.l % stride == 0 && !grid.is_nodata(c.k, c.l))
        .collect()
}

/// C(m, n), saturating just above `cap`.
fn combinations_capped(m: u128, n: u128, cap: u128) -> u128 {
    if n > m {
        return 0;
    }
    let n = n.min(m - n);
    let mut acc: u128 = 1;
    for i in 0..n {
        acc = acc * (m - i) / (i + 1);
        if acc > cap {
            return cap.saturating_add(1);
        }
    }
    acc
}

/// Smallest stride above `stride` that brings the search under budget.
fn suggest_stride(grid: &BathymetryGrid, n: usize, stride: usize) -> usize {
    let max_stride = grid.n_cols().max(grid.n_rows()).max(stride + 1);
    for s in (stride + 1)..=max_stride {
        let count = strided_candidates(grid, s).len();
        if count >= n
            && combinations_capped(count as u128, n as u128, BRUTE_FORCE_BUDGET)
                <= BRUTE_FORCE_BUDGET
        {
            return s;
        }
    }
    max_stride
}

// ---------- Tests ----------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::CoverageParams;
    use crate::envgrid::{full_aoi_mask, DepthRule};
    use crate::gdop::GdopFormula;
    use crate::propagation::{AcousticParams, PropagationModel};

    /// Flat scene with an exact detection radius: levels chosen so the
    /// threshold is hit at slant range `radius` with zero absorption.
    fn radius_scene(
        n_cells: usize,
        cell: f64,
        radius: f64,
        coverage: CoverageParams,
    ) -> Scene {
        let grid = BathymetryGrid::flat(0.0, 0.0, cell, n_cells, n_cells, 20.0);
        let aoi = full_aoi_mask(&grid).unwrap();
        Scene {
            grid,
            model: PropagationModel::Isotropic,
            acoustics: AcousticParams {
                source_level_db: 110.0 + 10.0 * radius.log10(),
                noise_level_db: 100.0,
                detection_threshold_db: 10.0,
                absorption_db_per_km: 0.0,
                frequency_khz: 69.0,
            },
            tag_depth: DepthRule::FixedDepth(3.0),
            receiver_depth: DepthRule::SeabedOffset(0.5),
            coverage,
            aoi,
        }
    }

    fn relaxed() -> CoverageParams {
        CoverageParams {
            alpha: 5.0,
            beta: 3,
            rho: 0.0,
            formula: GdopFormula::Trace,
        }
    }

    // ----- objective -----

    #[test]
    fn fitness_reduces_to_coverage_when_constraint_met() {
        let scene = radius_scene(9, 100.0, 350.0, relaxed());
        let dep = Deployment::new(vec![(350.0, 450.0), (550.0, 450.0), (450.0, 620.0)]);
        let receivers = dep.to_receivers(&scene.grid, scene.receiver_depth).unwrap();
        let report = coverage_report(&scene, &receivers).unwrap();
        assert!(report.coverage_cells > 0, "triangle must cover something");
        let f = fitness(&scene, &dep, 10.0).unwrap();
        assert_eq!(f, report.coverage_cells as f64, "rho = 0 disables the penalty");
    }

    #[test]
    fn fitness_charges_exactly_the_shortfall() {
        // Detection threshold at infinity: nothing is covered, so the
        // penalty is the full rho·‖AOI‖.
        let mut scene = radius_scene(9, 100.0, 350.0, relaxed());
        scene.coverage.rho = 0.5;
        scene.acoustics.detection_threshold_db = f64::INFINITY;
        let dep = Deployment::new(vec![(350.0, 450.0), (550.0, 450.0), (450.0, 620.0)]);
        let f = fitness(&scene, &dep, 10.0).unwrap();
        assert_eq!(f, -10.0 * 0.5 * 81.0, "full violation costs w·rho·‖I‖");
    }

    #[test]
    fn violating_deployment_scores_strictly_lower() {
        // Same deployment and coverage; only rho differs. The shortfall
        // makes the constrained score strictly smaller.
        let scene_free = radius_scene(9, 100.0, 350.0, relaxed());
        let mut scene_tight = scene_free.clone();
        scene_tight.coverage.rho = 1.0;
        let dep = Deployment::new(vec![(350.0, 450.0), (550.0, 450.0), (450.0, 620.0)]);
        let f_free = fitness(&scene_free, &dep, 10.0).unwrap();
        let f_tight = fitness(&scene_tight, &dep, 10.0).unwrap();
        assert!(f_tight < f_free, "{f_tight} must be below {f_free}");
    }

    // ----- lattice baseline -----

    #[test]
    fn three_receivers_make_an_equilateral_triangle() {
        // Fine cells keep the snap error well under the lattice scale.
        let grid = BathymetryGrid::flat(0.0, 0.0, 10.0, 120, 120, 20.0);
        let aoi = full_aoi_mask(&grid).unwrap();
        let dep = cp_layout(&grid, &aoi, 3, 500.0).unwrap();
        let snap_tol = 2.0 * 10.0 * std::f64::consts::SQRT_2;
        let d = pairwise_distances(&dep);
        assert_eq!(d.len(), 3);
        for dist in d {
            assert!(
                (dist - 500.0).abs() <= snap_tol,
                "edge {dist} should be 500 ± snap error"
            );
        }
    }

    #[test]
    fn four_receivers_make_a_rhombus() {
        let grid = BathymetryGrid::flat(0.0, 0.0, 10.0, 120, 120, 20.0);
        let aoi = full_aoi_mask(&grid).unwrap();
        let dep = cp_layout(&grid, &aoi, 4, 500.0).unwrap();
        let snap_tol = 2.0 * 10.0 * std::f64::consts::SQRT_2;
        let mut d = pairwise_distances(&dep);
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(d.len(), 6);
        for dist in &d[..5] {
            assert!(
                (dist - 500.0).abs() <= snap_tol,
                "short edge {dist} should be 500 ± snap error"
            );
        }
        let long = 500.0 * 3.0f64.sqrt();
        assert!(
            (d[5] - long).abs() <= snap_tol,
            "long diagonal {} should be {long} ± snap error",
            d[5]
        );
    }

    #[test]
    fn oversized_spacing_fails_cleanly() {
        let grid = BathymetryGrid::flat(0.0, 0.0, 100.0, 10, 10, 20.0);
        let aoi = full_aoi_mask(&grid).unwrap();
        assert!(matches!(
            cp_layout(&grid, &aoi, 3, 5000.0),
            Err(Error::Layout(_))
        ));
    }

    fn pairwise_distances(dep: &Deployment) -> Vec<f64> {
        let p = &dep.positions;
        let mut out = Vec::new();
        for i in 0..p.len() {
            for j in (i + 1)..p.len() {
                out.push((p[i].0 - p[j].0).hypot(p[i].1 - p[j].1));
            }
        }
        out
    }

    // ----- exhaustive search -----

    #[test]
    fn five_by_five_stride_one_evaluates_2300_combinations() {
        let scene = radius_scene(5, 100.0, 250.0, relaxed());
        let result = brute_force_optimize(&scene, 3, 1, 10.0).unwrap();
        assert_eq!(result.evaluated, 2300, "C(25, 3)");
        assert!(result.fitness.is_finite());
        assert_eq!(result.deployment.len(), 3);
        result.deployment.validate(&scene.grid).unwrap();
    }

    #[test]
    fn optimum_matches_independent_scan_of_public_fitness() {
        // Dual route: the cached exhaustive search must agree with scoring
        // every combination through the from-scratch fitness path, in
        // reversed order.
        let scene = radius_scene(4, 100.0, 220.0, relaxed());
        let result = brute_force_optimize(&scene, 3, 1, 10.0).unwrap();
        let candidates: Vec<(f64, f64)> = scene
            .grid
            .cells()
            .map(|c| scene.grid.cell_center(c.k, c.l))
            .collect();
        let mut best = f64::NEG_INFINITY;
        for combo in candidates.iter().copied().combinations(3).collect::<Vec<_>>().into_iter().rev()
        {
            let f = fitness(&scene, &Deployment::new(combo), 10.0).unwrap();
            best = best.max(f);
        }
        assert_eq!(
            result.fitness, best,
            "cached and from-scratch evaluation orders must agree exactly"
        );
    }

    #[test]
    fn single_combination_is_returned_unconditionally() {
        // A 1×3 strip has exactly one 3-combination — colinear, hence
        // worthless, but still the optimum by default.
        let grid = BathymetryGrid::flat(0.0, 0.0, 100.0, 3, 1, 20.0);
        let aoi = full_aoi_mask(&grid).unwrap();
        let mut scene = radius_scene(3, 100.0, 250.0, relaxed());
        scene.grid = grid;
        scene.aoi = aoi;
        scene.coverage.rho = 0.5;
        let result = brute_force_optimize(&scene, 3, 1, 10.0).unwrap();
        assert_eq!(result.evaluated, 1);
        assert!(result.fitness < 0.0, "penalized but still returned");
    }

    #[test]
    fn over_budget_suggests_a_workable_stride() {
        let scene = radius_scene(50, 100.0, 400.0, relaxed());
        match brute_force_optimize(&scene, 3, 1, 10.0) {
            Err(Error::Budget {
                combinations,
                budget,
                suggested_stride,
            }) => {
                assert!(combinations > budget);
                assert_eq!(budget, BRUTE_FORCE_BUDGET);
                assert!(suggested_stride > 1);
                let count = strided_candidates(&scene.grid, suggested_stride).len() as u128;
                assert!(
                    combinations_capped(count, 3, BRUTE_FORCE_BUDGET) <= BRUTE_FORCE_BUDGET,
                    "suggested stride must actually fit the budget"
                );
            }
            other => panic!("expected a budget refusal, got {other:?}"),
        }
    }

    #[test]
    fn too_few_candidates_is_a_validation_error() {
        let scene = radius_scene(2, 100.0, 250.0, relaxed());
        assert!(matches!(
            brute_force_optimize(&scene, 5, 1, 10.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn combination_counts_are_exact_until_saturation() {
        assert_eq!(combinations_capped(25, 3, u128::MAX >> 1), 2300);
        assert_eq!(combinations_capped(49, 3, u128::MAX >> 1), 18_424);
        assert_eq!(combinations_capped(3, 5, u128::MAX >> 1), 0);
        assert!(combinations_capped(2500, 3, BRUTE_FORCE_BUDGET) > BRUTE_FORCE_BUDGET);
    }

    // ----- genetic algorithm -----

    fn small_ga_params(seed: u64) -> GaParams {
        GaParams {
            population: 16,
            generations: 30,
            seed,
            ..GaParams::default()
        }
    }

    #[test]
    fn same_seed_gives_identical_runs() {
        let scene = radius_scene(7, 100.0, 300.0, relaxed());
        let a = ga_optimize(&scene, 3, &small_ga_params(42), Some(300.0)).unwrap();
        let b = ga_optimize(&scene, 3, &small_ga_params(42), Some(300.0)).unwrap();
        assert_eq!(a.deployment, b.deployment);
        assert_eq!(a.fitness, b.fitness);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn seeded_lattice_is_never_beaten_downward() {
        let scene = radius_scene(20, 100.0, 700.0, relaxed());
        let cp = cp_layout(&scene.grid, &scene.aoi, 3, 500.0).unwrap();
        let cp_fitness = fitness(&scene, &cp, 10.0).unwrap();
        let params = GaParams {
            population: 8,
            generations: 3,
            ..GaParams::default()
        };
        let result = ga_optimize(&scene, 3, &params, Some(500.0)).unwrap();
        assert!(
            result.fitness >= cp_fitness,
            "GA {} must not fall below its lattice seed {}",
            result.fitness,
            cp_fitness
        );
    }

    #[test]
    fn ga_matches_the_exhaustive_optimum_on_a_small_grid() {
        // 7×7 grid, detection radius three cells: the search space is
        // C(49,3) = 18 424, small enough to enumerate, and the GA must
        // find the same optimum.
        let scene = radius_scene(7, 100.0, 300.0, relaxed());
        let bf = brute_force_optimize(&scene, 3, 1, 10.0).unwrap();
        // Frozen against an exhaustive re-enumeration of all 18 424
        // triples with a separately written evaluator: the best triple
        // yields exactly 8 usable cells (100 triples tie).
        assert_eq!(bf.fitness, 8.0, "exhaustive optimum drifted");
        let params = GaParams {
            population: 32,
            generations: 60,
            seed: 7,
            ..GaParams::default()
        };
        let ga = ga_optimize(&scene, 3, &params, Some(300.0)).unwrap();
        assert!(
            (ga.fitness - bf.fitness).abs() <= 1e-9,
            "GA {} vs exhaustive {}",
            ga.fitness,
            bf.fitness
        );
    }

    #[test]
    fn trace_covers_every_generation_and_is_exportable() {
        let scene = radius_scene(7, 100.0, 300.0, relaxed());
        let params = GaParams {
            population: 8,
            generations: 5,
            seed: 1,
            ..GaParams::default()
        };
        let result = ga_optimize(&scene, 3, &params, None).unwrap();
        assert_eq!(result.trace.len(), 5);
        for (i, row) in result.trace.iter().enumerate() {
            assert_eq!(row.generation, i);
            assert!(row.mean_fitness <= row.best_fitness + 1e-12);
        }
        let best_in_trace = result
            .trace
            .iter()
            .map(|r| r.best_fitness)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(result.fitness, best_in_trace);
        let mut buf = Vec::new();
        write_ga_trace_csv(&result.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("generation,best_fitness,mean_fitness\n"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn bad_ga_params_are_rejected() {
        let base = GaParams::default();
        assert!(GaParams { population: 1, ..base }.validate().is_err());
        assert!(GaParams { generations: 0, ..base }.validate().is_err());
        assert!(GaParams { crossover_rate: 1.5, ..base }.validate().is_err());
        assert!(GaParams { mutation_rate: -0.1, ..base }.validate().is_err());
        assert!(GaParams { tournament_size: 0, ..base }.validate().is_err());
        assert!(GaParams { mutation_sigma: Some(0.0), ..base }.validate().is_err());
        assert!(GaParams { penalty_weight: -1.0, ..base }.validate().is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn deployments_validate_against_the_grid() {
        let grid = BathymetryGrid::flat(0.0, 0.0, 100.0, 5, 5, 20.0);
        assert!(Deployment::new(vec![(50.0, 50.0)]).validate(&grid).is_ok());
        assert!(Deployment::new(vec![]).validate(&grid).is_err());
        assert!(Deployment::new(vec![(-10.0, 50.0)]).validate(&grid).is_err());
    }
}
