//! Coverage-driven deployment planning for bottom-moored acoustic telemetry
//! receivers.
//!
//! Acoustic fish tags emit pings; moored receivers detect them when the
//! received signal-to-noise ratio clears a detection threshold. A tag can be
//! localized where enough receivers detect it simultaneously *and* the
//! receiver geometry dilutes measurement error acceptably (GDOP). This crate
//! evaluates that coverage chain on a bathymetry grid and optimizes receiver
//! placement against it:
//!
//! * [`envgrid`] — bathymetry grids (ESRI ASCII), cell/position mapping,
//!   depth rules, areas of interest, sound-velocity profiles.
//! * [`propagation`] — transmission-loss models (isotropic absorption,
//!   terrain occlusion, imported per-receiver fields) and detection masks.
//! * [`gdop`] — geometric dilution of precision for a receiver set and its
//!   quality rating.
//! * [`coverage`] — detection → localization → usable-region masks and the
//!   area bookkeeping used everywhere else.
//! * [`analytic`] — closed-form coverage of three equal detection circles and
//!   the spacing scan that locates the best receiver separation.
//! * [`solvers`] — lattice baseline layout, genetic-algorithm optimizer, and
//!   an exhaustive reference optimizer.
//! * [`evalharness`] — synthetic tag tracks, emission logs, detection
//!   throughput profiles, and the η/θ comparison ratios.
//! * [`scenario`] — JSON scenario files tying the above together for the CLI.
//!
//! # Quick start
//!
//! ```
//! use anchorplan::envgrid::{BathymetryGrid, DepthRule};
//! use anchorplan::propagation::{AcousticParams, PropagationModel, Receiver};
//! use anchorplan::coverage::{coverage_report, CoverageParams, Scene};
//! use anchorplan::envgrid::Rect;
//!
//! // 3 km × 3 km of flat 20 m water on a 100 m grid.
//! let grid = BathymetryGrid::flat(0.0, 0.0, 100.0, 30, 30, 20.0);
//! let aoi = anchorplan::envgrid::build_aoi_mask(
//!     &grid, &Rect::new(500.0, 500.0, 2500.0, 2500.0)).unwrap();
//! let scene = Scene {
//!     grid,
//!     model: PropagationModel::Isotropic,
//!     acoustics: AcousticParams::default(),
//!     tag_depth: DepthRule::FixedDepth(3.0),
//!     receiver_depth: DepthRule::SeabedOffset(0.5),
//!     coverage: CoverageParams::default(),
//!     aoi,
//! };
//! let receivers = Receiver::place(
//!     &scene.grid,
//!     &[(1300.0, 1300.0), (1700.0, 1300.0), (1500.0, 1650.0)],
//!     DepthRule::SeabedOffset(0.5),
//! ).unwrap();
//! let report = coverage_report(&scene, &receivers).unwrap();
//! assert!(report.coverage_cells > 0);
//! ```

pub mod analytic;
pub mod coverage;
pub mod envgrid;
pub mod evalharness;
pub mod gdop;
pub mod propagation;
pub mod scenario;
pub mod solvers;

// ---------- Crate-wide error type ----------

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file could not be parsed (bad header, bad token, wrong row shape).
    #[error("parse error in {path} (line {line}): {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Parsed input violates a structural requirement.
    #[error("validation error: {0}")]
    Validation(String),

    /// The requested cell carries no data (land or masked out).
    #[error("cell ({k}, {l}) has no data")]
    NoData { k: usize, l: usize },

    /// A position or index lies outside the grid extent.
    #[error("position ({x}, {y}) is outside the grid extent")]
    OutOfBounds { x: f64, y: f64 },

    /// Source and receiver coincide; transmission loss is undefined.
    #[error("zero source-receiver range: transmission loss undefined")]
    DegenerateRange,

    /// An imported transmission-loss field has no entry for this query.
    #[error("no transmission-loss entry for receiver {receiver_id} at cell ({k}, {l})")]
    MissingTl {
        receiver_id: usize,
        k: usize,
        l: usize,
    },

    /// Receiver geometry does not admit the requested computation.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Fewer receivers than the operation requires.
    #[error("need at least {need} receivers, have {have}")]
    InsufficientReceivers { need: usize, have: usize },

    /// Mask or matrix dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A baseline layout cannot be constructed.
    #[error("layout error: {0}")]
    Layout(String),

    /// Exhaustive search would exceed the combination budget.
    #[error(
        "{combinations} candidate combinations exceed the budget of {budget}; \
         try stride {suggested_stride}"
    )]
    Budget {
        combinations: u128,
        budget: u128,
        suggested_stride: usize,
    },

    /// Optimizer initialization failed.
    #[error("initialization error: {0}")]
    Init(String),

    /// An emission log holds no rows.
    #[error("emission log is empty")]
    EmptyLog,

    /// A ratio has a zero denominator.
    #[error("division by zero: {0}")]
    Division(String),

    /// Arguments outside the mathematical domain of a closed form.
    #[error("domain error: {0}")]
    Domain(String),

    /// Coincident equal circles intersect everywhere.
    #[error("coincident circles of equal radius intersect in infinitely many points")]
    InfiniteIntersection,

    /// The area of interest contains no grid cells.
    #[error("area of interest contains no grid cells")]
    EmptyAoi,

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
