use serde::{Deserialize, Serialize};

use super::FlipError;
use crate::data::GroupStats;

/// Per-group flip proportions and the common integer flip count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipBudget {
    pub tau_w: f64,
    pub tau_b: f64,
    pub k_w: usize,
    pub k_b: usize,
    pub epsilon: f64,
    pub directional: bool,
    pub stats: GroupStats,
}

impl FlipBudget {
    pub fn total_flips(&self) -> usize {
        self.k_w + self.k_b
    }

    /// Residuals of (p_w/n_w − τ_w) − (p_b/n_b + τ_b) = ε and τ_w n_w = τ_b n_b.
    pub fn identity_residuals(&self) -> (f64, f64) {
        let s = &self.stats;
        let rate_w = s.p_w as f64 / s.n_w as f64;
        let rate_b = s.p_b as f64 / s.n_b as f64;
        (
            (rate_w - self.tau_w) - (rate_b + self.tau_b) - self.epsilon,
            self.tau_w * s.n_w as f64 - self.tau_b * s.n_b as f64,
        )
    }
}

pub fn compute_flip_budgets(stats: &GroupStats, epsilon: f64) -> Result<FlipBudget, FlipError> {
    compute_flip_budgets_with(stats, epsilon, true)
}

/// Closed-form flip proportions that move the group positive rates to a gap
/// of exactly `epsilon`, and the flip count k = ⌈(n_b p_w − p_b n_w − n_w n_b ε)/(n_w + n_b)⌉
/// shared by both groups.
pub fn compute_flip_budgets_with(
    stats: &GroupStats,
    epsilon: f64,
    directional: bool,
) -> Result<FlipBudget, FlipError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(FlipError::InvalidEpsilon(epsilon));
    }
    let GroupStats { n_w, n_b, p_w, p_b, .. } = *stats;
    if n_w == 0 || n_b == 0 {
        return Err(FlipError::Invalid("both groups must be non-empty".into()));
    }
    let cross = p_w as i128 * n_b as i128 - p_b as i128 * n_w as i128;
    if cross < 0 {
        return Err(FlipError::Orientation);
    }
    let (nw, nb) = (n_w as f64, n_b as f64);
    let numerator = cross as f64 - nw * nb * epsilon;
    let numerator = numerator.max(0.0);
    let tau_w = numerator / (nw * (nw + nb));
    let tau_b = numerator / (nb * (nw + nb));
    let exact = numerator / (nw + nb);
    let snapped = if (exact - exact.round()).abs() <= 1e-9 { exact.round() } else { exact };
    let k = snapped.ceil() as usize;

    let (cap_w, cap_b) = if directional { (p_w, n_b - p_b) } else { (n_w, n_b) };
    if k > cap_w || k > cap_b {
        let kmax = cap_w.min(cap_b) as f64;
        let minimal = ((cross as f64 - kmax * (nw + nb)) / (nw * nb)).max(0.0);
        return Err(FlipError::BudgetInfeasible {
            required: k,
            available: cap_w.min(cap_b),
            minimal_epsilon: minimal,
        });
    }
    Ok(FlipBudget {
        tau_w,
        tau_b,
        k_w: k,
        k_b: k,
        epsilon,
        directional,
        stats: *stats,
    })
}
