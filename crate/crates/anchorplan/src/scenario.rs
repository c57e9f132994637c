//! Scenario files: one JSON document that pins down everything a run
//! needs — bathymetry, physics, thresholds, solver knobs, and optional
//! fixed deployments or tag tracks — so results are reproducible from a
//! single artifact.
//!
//! Referenced files resolve relative to the scenario file's directory.
//! Every field beyond the bathymetry path is optional and falls back to
//! the module defaults; unknown keys are rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};

use crate::coverage::{CoverageParams, Scene};
use crate::envgrid::{
    build_aoi_mask, full_aoi_mask, load_bathymetry, load_svp, DepthRule, Rect,
    SoundVelocityProfile,
};
use crate::gdop::GdopFormula;
use crate::propagation::{AcousticParams, PropagationModel, TlTable};
use crate::solvers::{Deployment, GaParams};
use crate::{Error, Result};

// ---------- Raw file schema ----------

/// `alpha` accepts a number or the string `"inf"`.
fn deserialize_alpha<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum AlphaSpec {
        Number(f64),
        Text(String),
    }
    match AlphaSpec::deserialize(de)? {
        AlphaSpec::Number(v) => Ok(v),
        AlphaSpec::Text(s) => match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(f64::INFINITY),
            other => Err(serde::de::Error::custom(format!(
                "alpha must be a number or \"inf\", got \"{other}\""
            ))),
        },
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverageSpec {
    #[serde(default = "default_alpha", deserialize_with = "deserialize_alpha")]
    alpha: f64,
    #[serde(default = "default_beta")]
    beta: usize,
    #[serde(default = "default_rho")]
    rho: f64,
    #[serde(default)]
    formula: GdopFormula,
}

fn default_alpha() -> f64 {
    CoverageParams::default().alpha
}
fn default_beta() -> usize {
    CoverageParams::default().beta
}
fn default_rho() -> f64 {
    CoverageParams::default().rho
}

impl Default for CoverageSpec {
    fn default() -> Self {
        let d = CoverageParams::default();
        CoverageSpec {
            alpha: d.alpha,
            beta: d.beta,
            rho: d.rho,
            formula: d.formula,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaSpec {
    #[serde(default = "ga_default_population")]
    population: usize,
    #[serde(default = "ga_default_generations")]
    generations: usize,
    #[serde(default = "ga_default_crossover")]
    crossover_rate: f64,
    #[serde(default = "ga_default_mutation")]
    mutation_rate: f64,
    #[serde(default)]
    mutation_sigma: Option<f64>,
    #[serde(default = "ga_default_tournament")]
    tournament_size: usize,
    #[serde(default = "ga_default_elitism")]
    elitism: usize,
    #[serde(default = "ga_default_penalty")]
    penalty_weight: f64,
}

fn ga_default_population() -> usize {
    GaParams::default().population
}
fn ga_default_generations() -> usize {
    GaParams::default().generations
}
fn ga_default_crossover() -> f64 {
    GaParams::default().crossover_rate
}
fn ga_default_mutation() -> f64 {
    GaParams::default().mutation_rate
}
fn ga_default_tournament() -> usize {
    GaParams::default().tournament_size
}
fn ga_default_elitism() -> usize {
    GaParams::default().elitism
}
fn ga_default_penalty() -> f64 {
    GaParams::default().penalty_weight
}

impl Default for GaSpec {
    fn default() -> Self {
        let d = GaParams::default();
        GaSpec {
            population: d.population,
            generations: d.generations,
            crossover_rate: d.crossover_rate,
            mutation_rate: d.mutation_rate,
            mutation_sigma: d.mutation_sigma,
            tournament_size: d.tournament_size,
            elitism: d.elitism,
            penalty_weight: d.penalty_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum ModelKind {
    #[default]
    Isotropic,
    TerrainOccluded,
    ImportedField,
}

/// A synthetic tag tow for throughput profiling.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub waypoints: Vec<(f64, f64)>,
    pub speed_mps: f64,
    /// Inclusive [min, max] seconds between emissions.
    pub interval_s: (f64, f64),
    #[serde(default = "default_bin_width")]
    pub bin_width_m: f64,
    #[serde(default = "default_tag_id")]
    pub tag_id: u32,
}

fn default_bin_width() -> f64 {
    100.0
}
fn default_tag_id() -> u32 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    bathymetry: PathBuf,
    #[serde(default)]
    svp: Option<PathBuf>,
    #[serde(default)]
    tl_field: Option<PathBuf>,
    #[serde(default)]
    propagation: ModelKind,
    #[serde(default)]
    acoustics: Option<AcousticParams>,
    #[serde(default = "default_receiver_count")]
    receiver_count: usize,
    #[serde(default = "default_receiver_depth")]
    receiver_depth: DepthRule,
    #[serde(default = "default_tag_depth")]
    tag_depth: DepthRule,
    #[serde(default)]
    coverage: CoverageSpec,
    #[serde(default)]
    aoi: Option<Rect>,
    #[serde(default = "default_cp_spacing")]
    cp_spacing_m: f64,
    #[serde(default)]
    ga: GaSpec,
    #[serde(default = "default_stride")]
    brute_force_stride: usize,
    #[serde(default)]
    deployment: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    track: Option<TrackSpec>,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
    #[serde(default)]
    seed: u64,
}

fn default_receiver_count() -> usize {
    3
}
fn default_receiver_depth() -> DepthRule {
    DepthRule::SeabedOffset(0.5)
}
fn default_tag_depth() -> DepthRule {
    DepthRule::FixedDepth(3.0)
}
fn default_cp_spacing() -> f64 {
    500.0
}
fn default_stride() -> usize {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

// ---------- Loaded form ----------

/// A fully validated scenario: every file read, every parameter checked,
/// the scene assembled and ready to evaluate.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scene: Scene,
    /// Sound-velocity profile, when the scenario references one.
    pub svp: Option<SoundVelocityProfile>,
    pub receiver_count: usize,
    pub cp_spacing_m: f64,
    pub ga: GaParams,
    pub brute_force_stride: usize,
    /// Fixed deployment for evaluation-only commands.
    pub deployment: Option<Deployment>,
    pub track: Option<TrackSpec>,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl LoadedScenario {
    /// Load and validate a scenario file. Relative paths inside the file
    /// resolve against its parent directory.
    pub fn load(path: &Path) -> Result<LoadedScenario> {
        let text = std::fs::read_to_string(path)?;
        let raw: ScenarioFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &Path| -> PathBuf {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let grid = load_bathymetry(&resolve(&raw.bathymetry))?;
        let svp = raw.svp.as_deref().map(|p| load_svp(&resolve(p))).transpose()?;

        let model = match raw.propagation {
            ModelKind::Isotropic => PropagationModel::Isotropic,
            ModelKind::TerrainOccluded => PropagationModel::TerrainOccluded,
            ModelKind::ImportedField => {
                let tl_path = raw.tl_field.as_deref().ok_or_else(|| {
                    Error::Validation(
                        "imported_field propagation needs a tl_field path".into(),
                    )
                })?;
                PropagationModel::ImportedField(TlTable::load(&resolve(tl_path))?)
            }
        };

        let acoustics = raw.acoustics.unwrap_or_default();
        acoustics.validate()?;

        let coverage = CoverageParams {
            alpha: raw.coverage.alpha,
            beta: raw.coverage.beta,
            rho: raw.coverage.rho,
            formula: raw.coverage.formula,
        };
        coverage.validate()?;

        if raw.receiver_count < 3 {
            return Err(Error::Validation(format!(
                "receiver_count must be at least 3, got {}",
                raw.receiver_count
            )));
        }
        if raw.receiver_count < coverage.beta {
            return Err(Error::Validation(format!(
                "receiver_count {} cannot satisfy beta {}",
                raw.receiver_count, coverage.beta
            )));
        }
        if !(raw.cp_spacing_m > 0.0 && raw.cp_spacing_m.is_finite()) {
            return Err(Error::Validation(format!(
                "cp_spacing_m must be positive, got {}",
                raw.cp_spacing_m
            )));
        }
        if raw.brute_force_stride == 0 {
            return Err(Error::Validation(
                "brute_force_stride must be at least 1".into(),
            ));
        }

        let aoi = match &raw.aoi {
            Some(rect) => build_aoi_mask(&grid, rect)?,
            None => full_aoi_mask(&grid)?,
        };

        let scene = Scene {
            grid,
            model,
            acoustics,
            tag_depth: raw.tag_depth,
            receiver_depth: raw.receiver_depth,
            coverage,
            aoi,
        };

        let ga = GaParams {
            population: raw.ga.population,
            generations: raw.ga.generations,
            crossover_rate: raw.ga.crossover_rate,
            mutation_rate: raw.ga.mutation_rate,
            mutation_sigma: raw.ga.mutation_sigma,
            tournament_size: raw.ga.tournament_size,
            elitism: raw.ga.elitism,
            penalty_weight: raw.ga.penalty_weight,
            seed: raw.seed,
        };
        ga.validate()?;

        let deployment = match raw.deployment {
            Some(positions) => {
                if positions.len() != raw.receiver_count {
                    return Err(Error::Validation(format!(
                        "deployment lists {} positions but receiver_count is {}",
                        positions.len(),
                        raw.receiver_count
                    )));
                }
                let dep = Deployment::new(positions);
                dep.validate(&scene.grid)?;
                Some(dep)
            }
            None => None,
        };

        if let Some(track) = &raw.track {
            if track.waypoints.len() < 2 {
                return Err(Error::Validation(
                    "track needs at least 2 waypoints".into(),
                ));
            }
            if !(track.bin_width_m > 0.0) {
                return Err(Error::Validation(format!(
                    "bin_width_m must be positive, got {}",
                    track.bin_width_m
                )));
            }
        }

        Ok(LoadedScenario {
            scene,
            svp,
            receiver_count: raw.receiver_count,
            cp_spacing_m: raw.cp_spacing_m,
            ga,
            brute_force_stride: raw.brute_force_stride,
            deployment,
            track: raw.track,
            out_dir: raw.out_dir,
            seed: raw.seed,
        })
    }
}

// ---------- Tests ----------
