use serde::{Deserialize, Serialize};

use super::{FlipBudget, FlipError};
use crate::data::{merit_means, Group, LabeledDataset};
use crate::lp::{Constraint, Relation};

/// One side of |modified mean − x̄_j| ≤ δ written as Σ_i coeffs_i z_i ≤ rhs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeritRow {
    pub column: usize,
    pub upper: bool,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl MeritRow {
    pub fn activity(&self, z: &[u8]) -> f64 {
        self.coeffs.iter().zip(z).map(|(c, &zi)| c * f64::from(zi)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeritConstraint {
    pub delta: f64,
    pub columns: Vec<usize>,
    pub xbar: Vec<f64>,
    pub rows: Vec<MeritRow>,
    /// p_w + p_b of the unflipped labels.
    pub positives: usize,
}

impl MeritConstraint {
    pub fn is_active(&self) -> bool {
        !self.rows.is_empty()
    }

    pub fn satisfied(&self, z: &[u8], tol: f64) -> bool {
        self.rows.iter().all(|r| r.activity(z) <= r.rhs + tol)
    }
}

/// Linearized merit rows. With ỹ_i + 1 = (y_i + 1) − 2y_i z_i and
/// P = p_w + p_b, the upper side Σ x_ij(ỹ_i+1) ≤ (x̄_j+δ)Σ(ỹ_i+1) becomes
/// Σ_i [2(x̄_j+δ)y_i − 2x_ij y_i] z_i ≤ 2Pδ, and the lower side
/// Σ_i [2x_ij y_i − 2(x̄_j−δ)y_i] z_i ≤ 2Pδ. An infinite δ yields no rows.
pub fn merit_bounds(ds: &LabeledDataset, delta: f64) -> Result<MeritConstraint, FlipError> {
    if delta.is_nan() || delta < 0.0 {
        return Err(FlipError::Invalid(format!("delta must be non-negative, got {delta}")));
    }
    let positives = ds.labels().iter().filter(|&&y| y > 0).count();
    let columns = ds.merit_columns().to_vec();
    if columns.is_empty() {
        return Ok(MeritConstraint { delta, columns, xbar: Vec::new(), rows: Vec::new(), positives });
    }
    let xbar = merit_means(ds)?;
    let mut rows = Vec::new();
    if delta.is_finite() {
        let x = ds.features();
        let y: Vec<f64> = ds.labels().iter().map(|&v| f64::from(v)).collect();
        let rhs = 2.0 * positives as f64 * delta;
        for (k, &j) in columns.iter().enumerate() {
            let up = (0..ds.len())
                .map(|i| 2.0 * (xbar[k] + delta) * y[i] - 2.0 * x[(i, j)] * y[i])
                .collect();
            let low = (0..ds.len())
                .map(|i| 2.0 * x[(i, j)] * y[i] - 2.0 * (xbar[k] - delta) * y[i])
                .collect();
            rows.push(MeritRow { column: j, upper: true, coeffs: up, rhs });
            rows.push(MeritRow { column: j, upper: false, coeffs: low, rhs });
        }
    }
    Ok(MeritConstraint { delta, columns, xbar, rows, positives })
}

/// Rows that may be flipped: all rows, or only ADV positives and DIS
/// negatives when flips are directional.
pub fn flippable(ds: &LabeledDataset, directional: bool) -> Vec<bool> {
    ds.labels()
        .iter()
        .zip(ds.groups())
        .map(|(&y, &g)| !directional || (g == Group::Adv && y > 0) || (g == Group::Dis && y < 0))
        .collect()
}

/// Constraints on z alone: budget equalities, merit rows, and, for
/// non-directional flips with merit rows present, Σ(ỹ_i + 1) ≥ 2.
#[derive(Clone, Debug)]
pub(crate) struct SelectionRows {
    pub budget: Vec<Constraint>,
    pub merit: Vec<Constraint>,
    pub positivity: Vec<Constraint>,
    pub flippable: Vec<bool>,
}

impl SelectionRows {
    pub fn all(&self) -> impl Iterator<Item = &Constraint> {
        self.budget.iter().chain(&self.merit).chain(&self.positivity)
    }
}

pub(crate) fn selection_rows(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
) -> SelectionRows {
    let n = ds.len();
    let groups = ds.groups();
    let indicator = |g: Group| -> Vec<f64> {
        groups.iter().map(|&h| if h == g { 1.0 } else { 0.0 }).collect()
    };
    let budget_rows = vec![
        Constraint::new(indicator(Group::Adv), Relation::Eq, budget.k_w as f64),
        Constraint::new(indicator(Group::Dis), Relation::Eq, budget.k_b as f64),
    ];
    let merit_rows: Vec<Constraint> = merit
        .rows
        .iter()
        .map(|r| Constraint::new(r.coeffs.clone(), Relation::Le, r.rhs))
        .collect();
    let mut positivity = Vec::new();
    if !budget.directional && merit.is_active() {
        // Σ(ỹ_i+1) = 2P − 2Σ y_i z_i ≥ 2
        let coeffs = ds.labels().iter().map(|&y| 2.0 * f64::from(y)).collect();
        positivity.push(Constraint::new(coeffs, Relation::Le, 2.0 * merit.positives as f64 - 2.0));
    }
    debug_assert_eq!(budget_rows[0].coeffs.len(), n);
    SelectionRows {
        budget: budget_rows,
        merit: merit_rows,
        positivity,
        flippable: flippable(ds, budget.directional),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Group::{Adv as A, Dis as D};
    use nalgebra::DMatrix;

    fn toy() -> LabeledDataset {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, -0.5, 0.25, 2.0]);
        LabeledDataset::new(x, vec![1, -1, 1, -1], vec![A, A, D, D], vec!["m".into()], vec![0]).unwrap()
    }

    #[test]
    fn zero_flips_leave_slack_delta_times_two_p() {
        let m = merit_bounds(&toy(), 0.1).unwrap();
        assert_eq!(m.rows.len(), 2);
        for r in &m.rows {
            assert_eq!(r.activity(&[0, 0, 0, 0]), 0.0);
            assert!((r.rhs - 0.1 * 2.0 * 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn infinite_delta_has_no_rows() {
        assert!(!merit_bounds(&toy(), f64::INFINITY).unwrap().is_active());
    }

    #[test]
    fn linear_rows_match_nonlinear_definition() {
        let ds = toy();
        let m = merit_bounds(&ds, 0.1).unwrap();
        for mask in 0u8..16 {
            let z: Vec<u8> = (0..4).map(|i| (mask >> i) & 1).collect();
            let yt: Vec<i8> = ds.labels().iter().zip(&z).map(|(&y, &zi)| if zi == 1 { -y } else { y }).collect();
            let pos: Vec<usize> = (0..4).filter(|&i| yt[i] > 0).collect();
            if pos.is_empty() {
                continue;
            }
            let mean = pos.iter().map(|&i| ds.features()[(i, 0)]).sum::<f64>() / pos.len() as f64;
            let nonlinear = (mean - m.xbar[0]).abs() <= 0.1 + 1e-12;
            assert_eq!(m.satisfied(&z, 1e-12), nonlinear, "z = {z:?}");
        }
    }

    #[test]
    fn positivity_row_only_without_direction() {
        let ds = toy();
        let m = merit_bounds(&ds, 0.1).unwrap();
        let stats = ds.group_stats();
        let mut b = crate::flip::compute_flip_budgets(&stats, 0.0).unwrap();
        assert!(selection_rows(&ds, &b, &m).positivity.is_empty());
        b.directional = false;
        let rows = selection_rows(&ds, &b, &m);
        assert_eq!(rows.positivity.len(), 1);
        assert_eq!(rows.flippable, vec![true; 4]);
    }
}
