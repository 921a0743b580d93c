//! Crypt-mask matching with a two-dimensional Earth Mover's Distance.
//!
//! Every failure (pre-check rejection, solver breakdown) maps to the worst
//! score, 1.0.

use serde::{Deserialize, Serialize};

use crate::templates::CryptMaskTemplate;
use crate::transport::{self, TransportError, TransportProblem};

pub use crate::morphology::{
    area_open, connected_components, fill_holes, morph_reconstruct, Connectivity, LabeledMask,
};

/// Score reported for any failed comparison.
pub const FAILURE_SCORE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdConfig {
    /// Largest tolerated ratio between the two crypt areas.
    pub size_ratio_max: f64,
    /// Smallest tolerated intersection-over-union of the two masks.
    pub min_overlap: f64,
    /// Pivot budget for the transport solver; `None` picks a size-based default.
    pub max_pivots: Option<usize>,
    /// Largest `|A| * |B|` the dense solver accepts; bigger pairs fail.
    pub max_cells: usize,
}

/// Default cap on `|A| * |B|`, about 64 MB of solver state.
pub const DEFAULT_MAX_CELLS: usize = 4_000_000;

impl Default for EmdConfig {
    fn default() -> Self {
        Self {
            size_ratio_max: 2.0,
            min_overlap: 0.1,
            max_pivots: None,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

impl EmdConfig {
    /// Pre-check that only rejects empty masks.
    pub fn permissive() -> Self {
        Self {
            size_ratio_max: f64::INFINITY,
            min_overlap: 0.0,
            max_pivots: None,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

pub fn emd_pre_check(
    a: &CryptMaskTemplate,
    b: &CryptMaskTemplate,
    size_ratio_max: f64,
    min_overlap: f64,
) -> bool {
    if !a.same_dims(b) {
        return false;
    }
    let (area_a, area_b) = (a.count(), b.count());
    if area_a == 0 || area_b == 0 {
        return false;
    }
    let ratio = area_a.max(area_b) as f64 / area_a.min(area_b) as f64;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    ratio <= size_ratio_max && inter as f64 / union as f64 >= min_overlap
}

/// Minimum cost of moving unit total mass spread evenly over the cells of
/// `a` onto the cells of `b`, in pixels.
pub fn emd_raw(
    a: &CryptMaskTemplate,
    b: &CryptMaskTemplate,
    max_pivots: Option<usize>,
) -> Result<f64, TransportError> {
    let points = |m: &CryptMaskTemplate| {
        let mass = 1.0 / m.count() as f64;
        m.foreground()
            .map(|(x, y)| (y as f64, x as f64, mass))
            .collect::<Vec<_>>()
    };
    let (sa, sb) = (points(a), points(b));
    let problem = TransportProblem::from_points(&sa, &sb)?;
    let limit = max_pivots.unwrap_or_else(|| transport::default_pivot_limit(sa.len(), sb.len()));
    Ok(transport::solve_with_limit(&problem, limit)?.cost)
}

/// Length of the raster diagonal between the first and last pixel centres.
pub fn diagonal(m: &CryptMaskTemplate) -> f64 {
    ((m.height().max(1) - 1) as f64).hypot((m.width().max(1) - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmdStatus {
    Solved,
    PreCheckFailed,
    TooLarge,
    SolverFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdOutcome {
    pub score: f64,
    pub status: EmdStatus,
}

pub fn emd_2d_detailed(a: &CryptMaskTemplate, b: &CryptMaskTemplate, cfg: &EmdConfig) -> EmdOutcome {
    if !emd_pre_check(a, b, cfg.size_ratio_max, cfg.min_overlap) {
        return EmdOutcome {
            score: FAILURE_SCORE,
            status: EmdStatus::PreCheckFailed,
        };
    }
    if a.count().saturating_mul(b.count()) > cfg.max_cells {
        log::debug!("EMD problem {}x{} exceeds {} cells", a.count(), b.count(), cfg.max_cells);
        return EmdOutcome {
            score: FAILURE_SCORE,
            status: EmdStatus::TooLarge,
        };
    }
    match emd_raw(a, b, cfg.max_pivots) {
        Ok(raw) => {
            let diag = diagonal(a);
            let score = if diag > 0.0 { (raw / diag).clamp(0.0, 1.0) } else { 0.0 };
            EmdOutcome {
                score,
                status: EmdStatus::Solved,
            }
        }
        Err(e) => {
            log::debug!("EMD solver failed: {e}");
            EmdOutcome {
                score: FAILURE_SCORE,
                status: EmdStatus::SolverFailed,
            }
        }
    }
}

/// Normalized EMD in `[0, 1]`; exactly 1.0 on any failure.
pub fn emd_2d(a: &CryptMaskTemplate, b: &CryptMaskTemplate, cfg: &EmdConfig) -> f64 {
    emd_2d_detailed(a, b, cfg).score
}
