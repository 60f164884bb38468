//! Budgeted label flipping: flip budgets, merit rows, the logistic master
//! problem solved by outer approximation, the SVM decomposition, and the
//! end-to-end debiasing pipeline with its trade-off sweep.

mod budget;
mod debias;
mod enumerate;
mod logistic;
mod merit;
mod rmp;
mod select;
mod svm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::data::DataError;
use crate::lp::LpError;
use crate::milp::MilpError;

pub use budget::{compute_flip_budgets, compute_flip_budgets_with, FlipBudget};
pub use debias::{
    debias, default_epsilon_grid, price_of_diversity, tradeoff_sweep, write_flip_report,
    DebiasConfig, DebiasResult, ModelKind, SweepRow,
};
pub use enumerate::{enumerate_feasible_flips, FeasibleFlips, ENUMERATION_LIMIT};
pub use logistic::{solve_dp_lr_oa, LogisticMode, OaConfig, AUTO_OA_LIMIT};
pub use merit::{flippable, merit_bounds, MeritConstraint, MeritRow};
pub use rmp::{build_rmp, RmpFormulation, RmpLayout, RowCounts, DEFAULT_BIG_M};
pub use svm::{solve_dp_svm, SvmConfig, SvmMode};

#[derive(Debug, Error)]
pub enum FlipError {
    #[error("epsilon must lie in [0, 1], got {0}")]
    InvalidEpsilon(f64),
    #[error("groups are not oriented: the advantaged group must have the higher positive rate")]
    Orientation,
    #[error("flip budget of {required} per group exceeds the {available} flippable rows; smallest reachable epsilon is {minimal_epsilon:.6}")]
    BudgetInfeasible {
        required: usize,
        available: usize,
        minimal_epsilon: f64,
    },
    #[error("n = {n} exceeds the enumeration limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("no flip vector satisfies the budget and merit constraints")]
    NoFeasibleFlip,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Milp(#[from] MilpError),
}

impl From<LpError> for FlipError {
    fn from(e: LpError) -> Self {
        FlipError::Milp(MilpError::Lp(e))
    }
}

/// A flip vector z and the modified labels ỹ_i = y_i(1 − 2z_i).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipAssignment {
    pub z: Vec<u8>,
    pub y_tilde: Vec<i8>,
    /// Model loss on ỹ; NaN when not evaluated.
    pub objective_value: f64,
}

impl FlipAssignment {
    pub fn new(labels: &[i8], z: Vec<u8>, objective_value: f64) -> Self {
        let y_tilde = labels
            .iter()
            .zip(&z)
            .map(|(&y, &zi)| if zi == 1 { -y } else { y })
            .collect();
        Self { z, y_tilde, objective_value }
    }

    pub fn none(labels: &[i8], objective_value: f64) -> Self {
        Self::new(labels, vec![0; labels.len()], objective_value)
    }

    pub fn flips(&self) -> usize {
        self.z.iter().filter(|&&v| v == 1).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    /// Proven optimal within the gap tolerance (or by full enumeration).
    Optimal,
    /// Iteration or node limit reached before the gap closed.
    GapLimit,
    /// Alternating decomposition reached a fixed point.
    Converged,
    /// Alternating decomposition hit its round limit.
    RoundLimit,
}

/// Lower and upper bound after one fixed-z evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_neg_inf")]
    pub lower: f64,
    pub upper: f64,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn null_as_neg_inf<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}
