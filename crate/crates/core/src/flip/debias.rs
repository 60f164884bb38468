use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::budget::compute_flip_budgets_with;
use super::logistic::{solve_logistic, OaConfig};
use super::merit::merit_bounds;
use super::svm::{solve_svm, SvmConfig};
use super::{BoundPoint, FlipAssignment, FlipBudget, FlipError, SolveStatus};
use crate::classifiers::{Model, SPEC_VERSION};
use crate::data::{
    merit_means_for, standardize_by_group, GroupStats, LabeledDataset, StandardizationParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Svm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DebiasConfig {
    /// Restrict ADV flips to positive→negative and DIS flips to negative→positive.
    pub directional: bool,
    pub logistic: OaConfig,
    pub svm: SvmConfig,
}

impl Default for DebiasConfig {
    fn default() -> Self {
        Self { directional: true, logistic: OaConfig::default(), svm: SvmConfig::default() }
    }
}

/// Raw solver output before the result is assembled.
pub(crate) struct Outcome {
    pub z: Vec<u8>,
    pub objective: f64,
    pub model: Model,
    pub iterations: usize,
    pub bound_trace: Vec<BoundPoint>,
    pub round_objectives: Vec<f64>,
    pub status: SolveStatus,
    pub mode: &'static str,
    pub big_m: Option<f64>,
    pub escalations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DebiasResult {
    pub kind: ModelKind,
    pub assignment: FlipAssignment,
    pub model: Model,
    pub budget: FlipBudget,
    pub delta: f64,
    /// Solver mode actually run: "oa", "alternating" or "exact_enum".
    pub mode: String,
    pub status: SolveStatus,
    pub iterations: usize,
    pub bound_trace: Vec<BoundPoint>,
    /// Per-round objectives of the alternating modes.
    pub round_objectives: Vec<f64>,
    /// |rate_ADV(ỹ) − rate_DIS(ỹ)|.
    pub achieved_parity: f64,
    pub merit_columns: Vec<String>,
    /// Mean z-score among ỹ = +1 minus the same mean under the original labels.
    pub merit_deltas: Vec<f64>,
    pub big_m: Option<f64>,
    pub big_m_escalations: usize,
}

impl DebiasResult {
    /// Whether the returned flip vector is a proven global optimum.
    pub fn is_exact(&self) -> bool {
        self.status == SolveStatus::Optimal && self.mode != "alternating"
    }

    /// Relative gap of the last bound point; 0 when no bounds are tracked.
    pub fn final_gap(&self) -> f64 {
        self.bound_trace.last().map_or(0.0, |b| {
            if b.lower.is_finite() {
                (b.upper - b.lower).max(0.0) / b.upper.abs().max(1.0)
            } else {
                f64::INFINITY
            }
        })
    }

    pub fn to_json(&self) -> Result<serde_json::Value, FlipError> {
        let delta = if self.delta.is_finite() { json!(self.delta) } else { json!(null) };
        let gap = self.final_gap();
        let gap = if gap.is_finite() { json!(gap) } else { json!(null) };
        Ok(json!({
            "spec_version": SPEC_VERSION,
            "kind": self.kind,
            "mode": self.mode,
            "status": self.status,
            "exact": self.is_exact(),
            "epsilon": self.budget.epsilon,
            "delta": delta,
            "budget": self.budget,
            "iterations": self.iterations,
            "objective_value": self.assignment.objective_value,
            "final_gap": gap,
            "bound_trace": self.bound_trace,
            "round_objectives": self.round_objectives,
            "flips": self.assignment.flips(),
            "z": self.assignment.z,
            "achieved_parity": self.achieved_parity,
            "merit_columns": self.merit_columns,
            "merit_deltas": self.merit_deltas,
            "big_m": self.big_m,
            "big_m_escalations": self.big_m_escalations,
            "model": self.model.to_json()?,
        }))
    }
}

/// Flip-and-fit on the features as given, attaching `standardization` to the
/// returned model.
pub(crate) fn solve_prepared(
    ds: &LabeledDataset,
    epsilon: f64,
    delta: f64,
    kind: ModelKind,
    config: &DebiasConfig,
    standardization: Option<StandardizationParams>,
) -> Result<DebiasResult, FlipError> {
    let budget = compute_flip_budgets_with(&ds.group_stats(), epsilon, config.directional)?;
    let merit = merit_bounds(ds, delta)?;
    let out = match kind {
        ModelKind::Logistic => solve_logistic(ds, &budget, &merit, &config.logistic)?,
        ModelKind::Svm => solve_svm(ds, &budget, &merit, &config.svm)?,
    };
    let mut model = out.model;
    match &mut model {
        Model::Logistic(m) => m.standardization = standardization,
        Model::Svm(m) => m.standardization = standardization,
    }
    let assignment = FlipAssignment::new(ds.labels(), out.z, out.objective);
    let achieved_parity = GroupStats::from_labels(&assignment.y_tilde, ds.groups()).gap().abs();
    let merit_deltas = deltas(ds.features(), ds.labels(), &assignment.y_tilde, ds.merit_columns())?;
    Ok(DebiasResult {
        kind,
        assignment,
        model,
        budget,
        delta,
        mode: out.mode.to_string(),
        status: out.status,
        iterations: out.iterations,
        bound_trace: out.bound_trace,
        round_objectives: out.round_objectives,
        achieved_parity,
        merit_columns: ds.merit_column_names(),
        merit_deltas,
        big_m: out.big_m,
        big_m_escalations: out.escalations,
    })
}

fn deltas(
    x: &nalgebra::DMatrix<f64>,
    y: &[i8],
    y_tilde: &[i8],
    columns: &[usize],
) -> Result<Vec<f64>, FlipError> {
    if columns.is_empty() {
        return Ok(Vec::new());
    }
    let before = merit_means_for(x, y, columns)?;
    let after = merit_means_for(x, y_tilde, columns)?;
    Ok(after.iter().zip(&before).map(|(a, b)| a - b).collect())
}

/// Standardizes within groups, computes the flip budget, solves the flip
/// problem for the chosen model and returns the fitted model with the
/// flipped labels.
pub fn debias(
    ds: &LabeledDataset,
    epsilon: f64,
    delta: f64,
    kind: ModelKind,
    config: &DebiasConfig,
) -> Result<DebiasResult, FlipError> {
    let (std_ds, params) = standardize_by_group(ds)?;
    solve_prepared(&std_ds, epsilon, delta, kind, config, Some(params))
}

/// Change in the mean z-score of each merit column among positively labeled
/// rows, flipped labels against original labels.
pub fn price_of_diversity(ds: &LabeledDataset, result: &DebiasResult) -> Result<Vec<f64>, FlipError> {
    if result.assignment.y_tilde.len() != ds.len() {
        return Err(FlipError::Invalid(format!(
            "result has {} rows, dataset has {}",
            result.assignment.y_tilde.len(),
            ds.len()
        )));
    }
    let transformed;
    let x = match (ds.is_standardized(), result.model.standardization()) {
        (false, Some(params)) => {
            transformed = params.transform(ds.raw_features(), ds.groups());
            &transformed
        }
        _ => ds.features(),
    };
    deltas(x, ds.labels(), &result.assignment.y_tilde, ds.merit_columns())
}

/// One line of a trade-off sweep. Failed solves carry the error text in
/// `status` and no values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub merit_column: Option<String>,
    pub delta_change: Option<f64>,
    pub achieved_parity: Option<f64>,
    pub flips: Option<usize>,
    pub objective_value: Option<f64>,
    pub status: String,
}

/// `points` log-spaced values from α/100 up to α. A zero α gives `[0]`.
pub fn default_epsilon_grid(alpha: f64) -> Vec<f64> {
    default_grid_with(alpha, 10)
}

fn default_grid_with(alpha: f64, points: usize) -> Vec<f64> {
    if alpha <= 0.0 || points < 2 {
        return vec![alpha.max(0.0)];
    }
    let (lo, hi) = ((alpha / 100.0).ln(), alpha.ln());
    (0..points)
        .map(|k| {
            if k == points - 1 {
                alpha
            } else {
                (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Runs one debias per ε (in parallel) and emits rows in grid order, one per
/// merit column (or a single row when there are none).
pub fn tradeoff_sweep(
    ds: &LabeledDataset,
    epsilons: &[f64],
    delta: f64,
    kind: ModelKind,
    config: &DebiasConfig,
) -> Result<Vec<SweepRow>, FlipError> {
    if epsilons.is_empty() {
        return Err(FlipError::Invalid("epsilon grid is empty".into()));
    }
    let ascending = epsilons.windows(2).all(|w| w[0] < w[1]);
    let descending = epsilons.windows(2).all(|w| w[0] > w[1]);
    if !(ascending || descending) {
        return Err(FlipError::Invalid("epsilon grid must be sorted and distinct".into()));
    }
    let (std_ds, params) = standardize_by_group(ds)?;
    let names = std_ds.merit_column_names();
    let results: Vec<Result<DebiasResult, FlipError>> = epsilons
        .par_iter()
        .map(|&eps| solve_prepared(&std_ds, eps, delta, kind, config, Some(params.clone())))
        .collect();
    let mut rows = Vec::new();
    for (&eps, res) in epsilons.iter().zip(results) {
        match res {
            Ok(r) => {
                let status = serde_json::to_value(r.status)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                let base = SweepRow {
                    epsilon: eps,
                    merit_column: None,
                    delta_change: None,
                    achieved_parity: Some(r.achieved_parity),
                    flips: Some(r.assignment.flips()),
                    objective_value: Some(r.assignment.objective_value),
                    status,
                };
                for (name, d) in names.iter().zip(&r.merit_deltas) {
                    rows.push(SweepRow {
                        merit_column: Some(name.clone()),
                        delta_change: Some(*d),
                        ..base.clone()
                    });
                }
                if names.is_empty() {
                    rows.push(base);
                }
            }
            Err(e) => {
                let status = format!("ERROR: {e}");
                let blank = |col: Option<String>| SweepRow {
                    epsilon: eps,
                    merit_column: col,
                    delta_change: None,
                    achieved_parity: None,
                    flips: None,
                    objective_value: None,
                    status: status.clone(),
                };
                if names.is_empty() {
                    rows.push(blank(None));
                }
                for name in &names {
                    rows.push(blank(Some(name.clone())));
                }
            }
        }
    }
    Ok(rows)
}

/// Per-row flip report: row_index, group, original_label, new_label,
/// flipped, then the raw value of each merit column.
pub fn write_flip_report<W: Write>(
    ds: &LabeledDataset,
    result: &DebiasResult,
    out: W,
) -> Result<(), FlipError> {
    let a = &result.assignment;
    if a.z.len() != ds.len() {
        return Err(FlipError::Invalid("flip vector does not match the dataset".into()));
    }
    let csv_err = |e: csv::Error| FlipError::Data(e.into());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["row_index", "group", "original_label", "new_label", "flipped"].map(String::from).to_vec();
    header.extend(ds.merit_column_names());
    w.write_record(&header).map_err(csv_err)?;
    let raw = ds.raw_features();
    let meta = ds.meta();
    for i in 0..ds.len() {
        let mut rec = vec![
            i.to_string(),
            meta.group_value(ds.groups()[i]).to_string(),
            ds.labels()[i].to_string(),
            a.y_tilde[i].to_string(),
            a.z[i].to_string(),
        ];
        rec.extend(ds.merit_columns().iter().map(|&j| raw[(i, j)].to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| FlipError::Data(e.into()))?;
    Ok(())
}
