//! Geometric dilution of precision for a receiver set observing a point.
//!
//! GDOP maps ranging-measurement error into position-estimate error purely
//! through geometry: well-spread receivers give values near 1, receivers
//! bunched along a line give huge or infinite values.
//!
//! Two formulas are provided:
//!
//! * [`GdopFormula::Trace`] (default) — the standard navigation definition.
//!   Rows of the visibility matrix `H` are `(aₓ, a_y, a_z, 1)` with `a` the
//!   unit vector from the point toward each receiver; the value is
//!   `√trace((HᵀH)⁻¹)`, evaluated through the eigenvalues of `HᵀH`.
//!   Exactly-deficient directions (e.g. only three receivers, which can
//!   never span all four columns) are dropped pseudo-inverse style; at
//!   least three informative directions must remain.
//! * [`GdopFormula::Planar`] — a horizontal-only variant: rows are 2-D
//!   unit bearings, `G = (HᵀH)⁻¹` is 2×2, and the value is `√(g₁₁² + g₂₂²)`.
//!   It weights planar geometry more aggressively than the trace form; kept
//!   selectable because published coverage curves are frequently derived
//!   from it.
//!
//! Both treat near-singular geometry (condition number beyond 1e12) as
//! `+∞` — "never usable" — rather than returning enormous finite values
//! that would flicker in and out of usable-area masks.

use crate::envgrid::Position;
use crate::{Error, Result};

/// Relative eigenvalue cutoff below which a direction counts as exactly
/// deficient (pseudo-inverse style) instead of merely ill-conditioned.
const RANK_CUTOFF: f64 = 1e-13;

/// Condition-number cutoff beyond which geometry is reported as `+∞`.
const CONDITION_CUTOFF: f64 = 1e12;

/// Which GDOP formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GdopFormula {
    /// `√trace((HᵀH)⁻¹)` over the full 4-column visibility matrix.
    Trace,
    /// `√(g₁₁² + g₂₂²)` over the 2-D bearing matrix.
    Planar,
}

impl Default for GdopFormula {
    fn default() -> Self {
        GdopFormula::Trace
    }
}

impl std::str::FromStr for GdopFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace" => Ok(GdopFormula::Trace),
            "planar" => Ok(GdopFormula::Planar),
            other => Err(Error::Validation(format!(
                "unknown GDOP formula '{other}' (expected 'trace' or 'planar')"
            ))),
        }
    }
}

impl std::fmt::Display for GdopFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GdopFormula::Trace => write!(f, "trace"),
            GdopFormula::Planar => write!(f, "planar"),
        }
    }
}

/// The N×4 visibility matrix: row i is the unit vector from the observed
/// point toward receiver i, plus a constant clock column.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMatrix {
    rows: Vec<[f64; 4]>,
}

impl VisibilityMatrix {
    pub fn rows(&self) -> &[[f64; 4]] {
        &self.rows
    }

    pub fn n_receivers(&self) -> usize {
        self.rows.len()
    }
}

/// A GDOP evaluation: the value (possibly `+∞`) and whether `+∞` came from
/// ill-conditioned/deficient geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdopValue {
    pub value: f64,
    pub ill_conditioned: bool,
}

impl GdopValue {
    fn infinite() -> Self {
        GdopValue {
            value: f64::INFINITY,
            ill_conditioned: true,
        }
    }

    fn finite(value: f64) -> Self {
        GdopValue {
            value,
            ill_conditioned: false,
        }
    }
}

/// Qualitative GDOP rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GdopRating {
    Ideal,
    Excellent,
    Good,
    Moderate,
    Fair,
    Poor,
}

impl std::fmt::Display for GdopRating {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GdopRating::Ideal => "ideal",
            GdopRating::Excellent => "excellent",
            GdopRating::Good => "good",
            GdopRating::Moderate => "moderate",
            GdopRating::Fair => "fair",
            GdopRating::Poor => "poor",
        };
        write!(f, "{s}")
    }
}

/// Build the visibility matrix for point `p` and the given receivers.
///
/// Fails when fewer than 3 receivers are given or `p` coincides with a
/// receiver (the bearing is undefined there).
pub fn visibility_matrix(p: &Position, receivers: &[Position]) -> Result<VisibilityMatrix> {
    if receivers.len() < 3 {
        return Err(Error::InsufficientReceivers {
            need: 3,
            have: receivers.len(),
        });
    }
    let mut rows = Vec::with_capacity(receivers.len());
    for r in receivers {
        let dx = p.x - r.x;
        let dy = p.y - r.y;
        let dz = p.z - r.z;
        let range = (dx * dx + dy * dy + dz * dz).sqrt();
        if range == 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "point {p} coincides with a receiver"
            )));
        }
        rows.push([dx / range, dy / range, dz / range, 1.0]);
    }
    Ok(VisibilityMatrix { rows })
}

/// Evaluate GDOP at `p` for the given receiver positions.
///
/// `+∞` (with `ill_conditioned` set) reports geometry that cannot support a
/// position fix: fewer than three informative directions, a condition number
/// beyond 1e12, or receivers all at the observed point's depth (the
/// vertical column carries no information at all).
pub fn gdop_value(
    p: &Position,
    receivers: &[Position],
    formula: GdopFormula,
) -> Result<GdopValue> {
    let vis = visibility_matrix(p, receivers)?;
    Ok(match formula {
        GdopFormula::Trace => trace_gdop(&vis),
        GdopFormula::Planar => planar_gdop(p, receivers),
    })
}

fn trace_gdop(vis: &VisibilityMatrix) -> GdopValue {
    // All receivers exactly at the point's depth: the vertical column of H
    // is identically zero and depth is entirely unobservable. Reported as
    // unusable rather than silently solving the reduced problem.
    if vis.rows.iter().all(|row| row[2] == 0.0) {
        return GdopValue::infinite();
    }

    // M = HᵀH, symmetric 4×4.
    let mut m = [[0.0f64; 4]; 4];
    for row in &vis.rows {
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += row[i] * row[j];
            }
        }
    }

    let mut eigs = jacobi_eigenvalues(m);
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    let lambda_max = eigs[3];
    if !(lambda_max > 0.0) {
        return GdopValue::infinite();
    }
    let kept: Vec<f64> = eigs
        .iter()
        .copied()
        .filter(|&l| l > lambda_max * RANK_CUTOFF)
        .collect();
    // Fewer than three informative directions cannot pin down a position.
    if kept.len() < 3 {
        return GdopValue::infinite();
    }
    if lambda_max / kept[0] > CONDITION_CUTOFF {
        return GdopValue::infinite();
    }
    GdopValue::finite(kept.iter().map(|l| 1.0 / l).sum::<f64>().sqrt())
}

fn planar_gdop(p: &Position, receivers: &[Position]) -> GdopValue {
    // Accumulate M = Σ uuᵀ over 2-D unit bearings. Receivers straight
    // above/below the point have no horizontal bearing and contribute
    // nothing.
    let (mut m11, mut m12, mut m22) = (0.0f64, 0.0f64, 0.0f64);
    let mut effective = 0usize;
    for r in receivers {
        let dx = p.x - r.x;
        let dy = p.y - r.y;
        let rho = (dx * dx + dy * dy).sqrt();
        if rho == 0.0 {
            continue;
        }
        let (ux, uy) = (dx / rho, dy / rho);
        m11 += ux * ux;
        m12 += ux * uy;
        m22 += uy * uy;
        effective += 1;
    }
    if effective < 2 {
        return GdopValue::infinite();
    }
    // Eigenvalues of the symmetric 2×2 in closed form.
    let tr = m11 + m22;
    let det = m11 * m22 - m12 * m12;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let lambda_max = 0.5 * (tr + disc);
    let lambda_min = 0.5 * (tr - disc);
    if !(lambda_max > 0.0)
        || lambda_min <= lambda_max * RANK_CUTOFF
        || lambda_max / lambda_min > CONDITION_CUTOFF
    {
        return GdopValue::infinite();
    }
    let g11 = m22 / det;
    let g22 = m11 / det;
    GdopValue::finite((g11 * g11 + g22 * g22).sqrt())
}

/// Qualitative rating for a GDOP value; boundaries go to the better bin.
/// `+∞` rates as poor. Negative or NaN input is rejected.
pub fn gdop_rating(value: f64) -> Result<GdopRating> {
    if value.is_nan() || value < 0.0 {
        return Err(Error::Validation(format!(
            "GDOP must be a nonnegative number, got {value}"
        )));
    }
    Ok(if value <= 1.0 {
        GdopRating::Ideal
    } else if value <= 4.0 {
        GdopRating::Excellent
    } else if value <= 6.0 {
        GdopRating::Good
    } else if value <= 8.0 {
        GdopRating::Moderate
    } else if value <= 20.0 {
        GdopRating::Fair
    } else {
        GdopRating::Poor
    })
}

/// Eigenvalues of a symmetric 4×4 matrix by cyclic Jacobi rotations.
///
/// Plenty for this use: `HᵀH` is symmetric positive semidefinite and tiny,
/// and Jacobi converges quadratically on it. Returned in arbitrary order.
fn jacobi_eigenvalues(mut m: [[f64; 4]; 4]) -> [f64; 4] {
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                off += m[i][j] * m[i][j];
            }
        }
        let diag: f64 = (0..4).map(|i| m[i][i] * m[i][i]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Apply G(p,q,θ)ᵀ · M · G(p,q,θ) in place.
                for i in 0..4 {
                    let mip = m[i][p];
                    let miq = m[i][q];
                    m[i][p] = c * mip - s * miq;
                    m[i][q] = s * mip + c * miq;
                }
                for i in 0..4 {
                    let mpi = m[p][i];
                    let mqi = m[q][i];
                    m[p][i] = c * mpi - s * mqi;
                    m[q][i] = s * mpi + c * mqi;
                }
            }
        }
    }
    [m[0][0], m[1][1], m[2][2], m[3][3]]
}

// ---------- Tests ----------
