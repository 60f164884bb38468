//! Fixed-label model fitting: ridge logistic regression, linear soft-margin
//! SVM, the flip-objective gradient, prediction and AUC.

mod logistic;
mod svm;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ColumnStats, DatasetMeta, Group, StandardizationParams};

pub use logistic::{
    fit_logistic, flip_objective, logistic_flip_gradient, logistic_loss, FlipGradient,
    LogisticModel, DEFAULT_RIDGE,
};
pub(crate) use logistic::sigmoid;
pub use svm::{fit_svm, hinge_losses, SvmModel, DEFAULT_C};

pub const SPEC_VERSION: &str = "1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("SVM dual did not converge (duality gap {gap:.3e})")]
    NonConvergence { gap: f64 },
    #[error("unknown group category '{0}'")]
    UnknownGroup(String),
    #[error("model has no standardization parameters")]
    MissingStandardization,
    #[error("bad model file: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Logistic(LogisticModel),
    Svm(SvmModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Logistic(_) => "logistic",
            Model::Svm(_) => "svm",
        }
    }

    pub fn standardization(&self) -> Option<&StandardizationParams> {
        match self {
            Model::Logistic(m) => m.standardization.as_ref(),
            Model::Svm(m) => m.standardization.as_ref(),
        }
    }

    /// Score on an already standardized feature vector.
    pub fn score_standardized(&self, x: &[f64]) -> (f64, i8) {
        match self {
            Model::Logistic(m) => {
                let s = sigmoid(m.margin(x));
                (s, if s >= 0.5 { 1 } else { -1 })
            }
            Model::Svm(m) => {
                let s = m.decision(x);
                (s, if s >= 0.0 { 1 } else { -1 })
            }
        }
    }
}

/// Scores a raw feature vector after standardizing it with the stored
/// parameters of its group category.
pub fn predict(model: &Model, x: &[f64], group: &str) -> Result<(f64, i8), ClassifierError> {
    let params = model.standardization().ok_or(ClassifierError::MissingStandardization)?;
    let g = params
        .meta
        .group_of(group)
        .ok_or_else(|| ClassifierError::UnknownGroup(group.to_string()))?;
    if x.len() != params.columns.len() {
        return Err(ClassifierError::Shape(format!(
            "expected {} features, got {}",
            params.columns.len(),
            x.len()
        )));
    }
    Ok(model.score_standardized(&params.apply(g, x)))
}

/// Mann-Whitney estimate of the area under the ROC curve, ties counted ½.
pub fn auc(scores: &[f64], labels: &[i8]) -> Result<f64, ClassifierError> {
    if scores.len() != labels.len() {
        return Err(ClassifierError::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(ClassifierError::Degenerate("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y > 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ClassifierError::Degenerate("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks (1-based) over tied blocks
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] > 0 {
                rank_sum_pos += avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    Ok(u / (np * n_neg as f64))
}

#[derive(Serialize, Deserialize)]
struct GroupValuesDoc {
    #[serde(rename = "ADV")]
    adv: String,
    #[serde(rename = "DIS")]
    dis: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ModelDoc {
    Logistic {
        spec_version: String,
        beta0: f64,
        beta: Vec<f64>,
        lambda: f64,
        standardization: BTreeMap<String, BTreeMap<String, ColumnStats>>,
        columns: Vec<String>,
        group_values: GroupValuesDoc,
        group_column: String,
    },
    Svm {
        spec_version: String,
        b: f64,
        w: Vec<f64>,
        #[serde(rename = "C")]
        c: f64,
        standardization: BTreeMap<String, BTreeMap<String, ColumnStats>>,
        columns: Vec<String>,
        group_values: GroupValuesDoc,
        group_column: String,
    },
}

fn params_to_doc(
    p: &StandardizationParams,
) -> (BTreeMap<String, BTreeMap<String, ColumnStats>>, GroupValuesDoc) {
    let mut map = BTreeMap::new();
    for g in [Group::Adv, Group::Dis] {
        let cols = p
            .columns
            .iter()
            .cloned()
            .zip(p.stats(g).iter().copied())
            .collect();
        map.insert(p.meta.group_value(g).to_string(), cols);
    }
    (
        map,
        GroupValuesDoc { adv: p.meta.adv_value.clone(), dis: p.meta.dis_value.clone() },
    )
}

fn doc_to_params(
    map: BTreeMap<String, BTreeMap<String, ColumnStats>>,
    columns: Vec<String>,
    gv: GroupValuesDoc,
    group_column: String,
) -> Result<StandardizationParams, ClassifierError> {
    let take = |value: &str| -> Result<Vec<ColumnStats>, ClassifierError> {
        let per = map
            .get(value)
            .ok_or_else(|| ClassifierError::Format(format!("no standardization for group '{value}'")))?;
        columns
            .iter()
            .map(|c| {
                per.get(c)
                    .copied()
                    .ok_or_else(|| ClassifierError::Format(format!("no standardization for column '{c}'")))
            })
            .collect()
    };
    Ok(StandardizationParams {
        adv: take(&gv.adv)?,
        dis: take(&gv.dis)?,
        columns,
        meta: DatasetMeta {
            group_column,
            adv_value: gv.adv,
            dis_value: gv.dis,
            ..DatasetMeta::default()
        },
    })
}

impl Model {
    pub fn to_json(&self) -> Result<serde_json::Value, ClassifierError> {
        let params = self.standardization().ok_or(ClassifierError::MissingStandardization)?;
        let (standardization, group_values) = params_to_doc(params);
        let doc = match self {
            Model::Logistic(m) => ModelDoc::Logistic {
                spec_version: SPEC_VERSION.into(),
                beta0: m.beta0,
                beta: m.beta.clone(),
                lambda: m.ridge_lambda,
                standardization,
                columns: params.columns.clone(),
                group_values,
                group_column: params.meta.group_column.clone(),
            },
            Model::Svm(m) => ModelDoc::Svm {
                spec_version: SPEC_VERSION.into(),
                b: m.b,
                w: m.w.clone(),
                c: m.c,
                standardization,
                columns: params.columns.clone(),
                group_values,
                group_column: params.meta.group_column.clone(),
            },
        };
        serde_json::to_value(doc).map_err(|e| ClassifierError::Format(e.to_string()))
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, ClassifierError> {
        let doc: ModelDoc =
            serde_json::from_value(value.clone()).map_err(|e| ClassifierError::Format(e.to_string()))?;
        Ok(match doc {
            ModelDoc::Logistic {
                beta0,
                beta,
                lambda,
                standardization,
                columns,
                group_values,
                group_column,
                ..
            } => {
                if beta.len() != columns.len() {
                    return Err(ClassifierError::Format("beta length differs from columns".into()));
                }
                Model::Logistic(LogisticModel {
                    beta0,
                    beta,
                    ridge_lambda: lambda,
                    standardization: Some(doc_to_params(standardization, columns, group_values, group_column)?),
                    iterations: 0,
                    grad_norm: 0.0,
                })
            }
            ModelDoc::Svm { b, w, c, standardization, columns, group_values, group_column, .. } => {
                if w.len() != columns.len() {
                    return Err(ClassifierError::Format("w length differs from columns".into()));
                }
                Model::Svm(SvmModel {
                    b,
                    w,
                    c,
                    standardization: Some(doc_to_params(standardization, columns, group_values, group_column)?),
                    objective: f64::NAN,
                    duality_gap: f64::NAN,
                })
            }
        })
    }
}
