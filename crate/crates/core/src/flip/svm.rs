use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::debias::{solve_prepared, DebiasConfig, DebiasResult, ModelKind, Outcome};
use super::enumerate::enumerate_feasible_flips;
use super::merit::MeritConstraint;
use super::select::{multistart, Polish};
use super::{BoundPoint, FlipBudget, FlipError, SolveStatus};
use crate::classifiers::{fit_svm, Model, SvmModel, DEFAULT_C};
use crate::data::LabeledDataset;

/// Largest n accepted by the exhaustive SVM mode.
pub const SVM_ENUM_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvmMode {
    Alternating,
    ExactEnum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmConfig {
    pub mode: SvmMode,
    pub c: f64,
    pub max_rounds: usize,
    /// Refit budget for the swap search run after the alternation settles.
    pub swap_evals: usize,
    /// Extra descents started from seeded random feasible flip vectors.
    pub restarts: usize,
    /// Swap search and restarts only run up to this many rows.
    pub polish_max_rows: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            mode: SvmMode::Alternating,
            c: DEFAULT_C,
            max_rounds: 50,
            swap_evals: 500,
            restarts: 4,
            polish_max_rows: 200,
        }
    }
}

/// SVM flip model on the features as given (no standardization).
pub fn solve_dp_svm(
    ds: &LabeledDataset,
    epsilon: f64,
    delta: f64,
    config: &SvmConfig,
) -> Result<DebiasResult, FlipError> {
    let cfg = DebiasConfig { svm: config.clone(), ..DebiasConfig::default() };
    solve_prepared(ds, epsilon, delta, ModelKind::Svm, &cfg, None)
}

pub(crate) fn solve_svm(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    config: &SvmConfig,
) -> Result<Outcome, FlipError> {
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(FlipError::Invalid(format!("C must be positive, got {}", config.c)));
    }
    match config.mode {
        SvmMode::Alternating => alternating(ds, budget, merit, config),
        SvmMode::ExactEnum => exhaustive(ds, budget, merit, config),
    }
}

fn fit(x: &DMatrix<f64>, y: &[i8], z: &[u8], c: f64) -> Result<(SvmModel, f64), FlipError> {
    let yt: Vec<i8> = y.iter().zip(z).map(|(&v, &zi)| if zi == 1 { -v } else { v }).collect();
    let m = fit_svm(x, &yt, c)?;
    let obj = m.primal_objective(x, &yt)?;
    Ok((m, obj))
}

fn hinge(d: f64, label: f64) -> f64 {
    (1.0 - label * d).max(0.0)
}

fn alternating(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    config: &SvmConfig,
) -> Result<Outcome, FlipError> {
    let (x, y) = (ds.features(), ds.labels());
    let n = ds.len();
    let (plain, _) = fit(x, y, &vec![0; n], config.c)?;
    // cost of flipping row i under the current hyperplane: ξ_i(−y_i) − ξ_i(y_i)
    let costs_of = |m: &SvmModel| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                let d = m.decision(&row);
                let yi = f64::from(y[i]);
                hinge(d, -yi) - hinge(d, yi)
            })
            .collect()
    };
    let run = multistart(
        ds,
        budget,
        merit,
        plain,
        config.max_rounds,
        Polish { swap_evals: config.swap_evals, restarts: config.restarts, max_rows: config.polish_max_rows },
        |z| fit(x, y, z, config.c),
        costs_of,
    )?;
    Ok(Outcome {
        z: run.z,
        objective: run.value,
        model: Model::Svm(run.model),
        iterations: run.rounds.len(),
        bound_trace: Vec::new(),
        round_objectives: run.rounds,
        status: if run.converged { SolveStatus::Converged } else { SolveStatus::RoundLimit },
        mode: "alternating",
        big_m: None,
        escalations: 0,
    })
}

fn exhaustive(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    config: &SvmConfig,
) -> Result<Outcome, FlipError> {
    if ds.len() > SVM_ENUM_LIMIT {
        return Err(FlipError::TooLarge { n: ds.len(), limit: SVM_ENUM_LIMIT });
    }
    let (x, y) = (ds.features(), ds.labels());
    let mut best: Option<(Vec<u8>, f64, SvmModel)> = None;
    let mut count = 0;
    for a in enumerate_feasible_flips(ds, budget, merit)? {
        let (m, value) = fit(x, y, &a.z, config.c)?;
        count += 1;
        if best.as_ref().is_none_or(|b| value < b.1) {
            best = Some((a.z, value, m));
        }
    }
    let (z, value, model) = best.ok_or(FlipError::NoFeasibleFlip)?;
    Ok(Outcome {
        z,
        objective: value,
        model: Model::Svm(model),
        iterations: count,
        bound_trace: vec![BoundPoint { lower: value, upper: value }],
        round_objectives: Vec::new(),
        status: SolveStatus::Optimal,
        mode: "exact_enum",
        big_m: None,
        escalations: 0,
    })
}

