use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::debias::{solve_prepared, DebiasConfig, DebiasResult, ModelKind, Outcome};
use super::enumerate::enumerate_feasible_flips;
use super::merit::MeritConstraint;
use super::rmp::{build_rmp, RmpFormulation, DEFAULT_BIG_M};
use super::select::{multistart, Polish};
use super::{BoundPoint, FlipBudget, FlipError, SolveStatus};
use crate::classifiers::{
    fit_logistic, logistic_flip_gradient, logistic_loss, LogisticModel, Model, DEFAULT_RIDGE,
};
use crate::data::LabeledDataset;
use crate::lp::Constraint;
use crate::milp::{
    solve_milp_with, LazyCallback, LazyResponse, MilpError, MilpOptions, MilpStatus,
    MixedIntegerProgram, NodeInfo,
};

/// Largest n for which `Auto` runs outer approximation; larger problems use
/// the alternating decomposition.
pub const AUTO_OA_LIMIT: usize = 16;
const MAX_ESCALATIONS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogisticMode {
    Auto,
    Oa,
    Alternating,
    ExactEnum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OaConfig {
    pub gap_tol: f64,
    /// Maximum number of fixed-z fits (cut rounds).
    pub max_iter: usize,
    pub big_m: f64,
    pub ridge: f64,
    pub mode: LogisticMode,
    /// Round limit for the alternating mode.
    pub max_rounds: usize,
    /// Refit budget for the alternating mode's swap search.
    pub swap_evals: usize,
    /// Extra alternating descents from seeded random starts.
    pub restarts: usize,
    /// Swap search and restarts only run up to this many rows.
    pub polish_max_rows: usize,
    pub node_limit: usize,
}

impl Default for OaConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-4,
            max_iter: 200,
            big_m: DEFAULT_BIG_M,
            ridge: DEFAULT_RIDGE,
            mode: LogisticMode::Auto,
            max_rounds: 50,
            swap_evals: 500,
            restarts: 4,
            polish_max_rows: 200,
            node_limit: 1_000_000,
        }
    }
}

/// Logistic flip model on the features as given (no standardization).
pub fn solve_dp_lr_oa(
    ds: &LabeledDataset,
    epsilon: f64,
    delta: f64,
    config: &OaConfig,
) -> Result<DebiasResult, FlipError> {
    let cfg = DebiasConfig { logistic: config.clone(), ..DebiasConfig::default() };
    solve_prepared(ds, epsilon, delta, ModelKind::Logistic, &cfg, None)
}

pub(crate) fn resolve_mode(mode: LogisticMode, n: usize) -> LogisticMode {
    match mode {
        LogisticMode::Auto if n <= AUTO_OA_LIMIT => LogisticMode::Oa,
        LogisticMode::Auto => LogisticMode::Alternating,
        m => m,
    }
}

pub(crate) fn solve_logistic(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    config: &OaConfig,
) -> Result<Outcome, FlipError> {
    let mode = resolve_mode(config.mode, ds.len());
    let mode_name = match mode {
        LogisticMode::Oa => "oa",
        LogisticMode::Alternating => "alternating",
        _ => "exact_enum",
    };
    if budget.total_flips() == 0 {
        let model = fit_logistic(ds.features(), ds.labels(), config.ridge)?;
        let f = logistic_loss(&model, ds.features(), ds.labels())?;
        return Ok(Outcome {
            z: vec![0; ds.len()],
            objective: f,
            model: Model::Logistic(model),
            iterations: 1,
            bound_trace: vec![BoundPoint { lower: f, upper: f }],
            round_objectives: Vec::new(),
            status: SolveStatus::Optimal,
            mode: mode_name,
            big_m: None,
            escalations: 0,
        });
    }
    match mode {
        LogisticMode::Oa => outer_approximation(ds, budget, merit, config),
        LogisticMode::Alternating => alternating(ds, budget, merit, config),
        _ => exhaustive(ds, budget, merit, config),
    }
}

fn flipped(y: &[i8], z: &[u8]) -> Vec<i8> {
    y.iter().zip(z).map(|(&v, &zi)| if zi == 1 { -v } else { v }).collect()
}

struct FixedFit {
    value: f64,
    model: LogisticModel,
}

/// (β*, γ* = zβ*) in model-block order.
fn model_point(rmp: &RmpFormulation, z: &[u8], m: &LogisticModel) -> Vec<f64> {
    let l = rmp.layout;
    let mut v = vec![0.0; l.num_model_vars()];
    v[l.beta0()] = m.beta0;
    for j in 0..l.p {
        v[l.beta(j)] = m.beta[j];
    }
    for i in 0..l.n {
        if z[i] == 1 {
            v[l.gamma0(i)] = m.beta0;
            for j in 0..l.p {
                v[l.gamma(i, j)] = m.beta[j];
            }
        }
    }
    v
}

/// Gradient cut of the flip objective at (β*, zβ*).
fn epigraph_cut(
    x: &DMatrix<f64>,
    y: &[i8],
    rmp: &RmpFormulation,
    z: &[u8],
    fit: &FixedFit,
) -> Result<Constraint, FlipError> {
    let l = rmp.layout;
    let m = &fit.model;
    let gamma0: Vec<f64> = z.iter().map(|&zi| f64::from(zi) * m.beta0).collect();
    let gamma = DMatrix::from_fn(l.n, l.p, |i, j| f64::from(z[i]) * m.beta[j]);
    let g = logistic_flip_gradient(m.beta0, &m.beta, &gamma0, &gamma, x, y)?;
    let mut grad = vec![0.0; l.num_model_vars()];
    grad[l.beta0()] = g.d_beta0;
    for j in 0..l.p {
        grad[l.beta(j)] = g.d_beta[j];
    }
    for i in 0..l.n {
        grad[l.gamma0(i)] = g.d_gamma0[i];
        for j in 0..l.p {
            grad[l.gamma(i, j)] = g.d_gamma[(i, j)];
        }
    }
    Ok(rmp.epigraph_cut(&grad, &model_point(rmp, z, m), fit.value))
}

struct OaCallback<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [i8],
    rmp: &'a RmpFormulation,
    ridge: f64,
    max_iter: usize,
    /// Stop as soon as a fixed-z optimum leaves the big-M box.
    strict_box: bool,
    cache: HashMap<Vec<u8>, FixedFit>,
    best: Option<(Vec<u8>, f64)>,
    trace: Vec<BoundPoint>,
    fits: usize,
    out_of_box: bool,
    failure: Option<FlipError>,
}

impl OaCallback<'_> {
    fn in_box(&self, m: &LogisticModel) -> bool {
        let bm = &self.rmp.big_m;
        m.beta0.abs() <= bm[0] && m.beta.iter().enumerate().all(|(j, b)| b.abs() <= bm[j + 1])
    }

    fn model_point(&self, z: &[u8], m: &LogisticModel) -> Vec<f64> {
        model_point(self.rmp, z, m)
    }

    fn candidate(&self, z: &[u8], fit: &FixedFit) -> Option<Vec<f64>> {
        if !self.in_box(&fit.model) {
            return None;
        }
        let l = self.rmp.layout;
        let mut v = self.model_point(z, &fit.model);
        v.resize(l.num_vars(), 0.0);
        for i in 0..l.n {
            v[l.z(i)] = f64::from(z[i]);
        }
        v[l.eta()] = fit.value;
        Some(v)
    }

    fn cut(&self, z: &[u8], fit: &FixedFit) -> Result<Constraint, FlipError> {
        epigraph_cut(self.x, self.y, self.rmp, z, fit)
    }

    fn evaluate(&mut self, z: &[u8]) -> Result<(), FlipError> {
        let yt = flipped(self.y, z);
        let model = fit_logistic(self.x, &yt, self.ridge)?;
        let value = logistic_loss(&model, self.x, &yt)?;
        self.fits += 1;
        if !self.in_box(&model) {
            self.out_of_box = true;
        }
        if self.best.as_ref().is_none_or(|(_, b)| value < *b) {
            self.best = Some((z.to_vec(), value));
        }
        self.cache.insert(z.to_vec(), FixedFit { value, model });
        Ok(())
    }
}

impl LazyCallback for OaCallback<'_> {
    fn on_integral(&mut self, x: &[f64], info: &NodeInfo) -> Result<LazyResponse, MilpError> {
        let l = self.rmp.layout;
        let z: Vec<u8> = (0..l.n).map(|i| u8::from(x[l.z(i)] > 0.5)).collect();
        if let Some(fit) = self.cache.get(&z) {
            return Ok(LazyResponse { candidate: self.candidate(&z, fit), ..Default::default() });
        }
        if self.fits >= self.max_iter {
            return Ok(LazyResponse { stop: true, ..Default::default() });
        }
        if let Err(e) = self.evaluate(&z) {
            let msg = e.to_string();
            self.failure = Some(e);
            return Err(MilpError::Callback(msg));
        }
        let fit = &self.cache[&z];
        let upper = self.best.as_ref().map_or(fit.value, |b| b.1);
        self.trace.push(BoundPoint { lower: info.global_bound.min(upper), upper });
        if self.strict_box && !self.in_box(&fit.model) {
            return Ok(LazyResponse { stop: true, ..Default::default() });
        }
        let cut = match self.cut(&z, fit) {
            Ok(c) => c,
            Err(e) => {
                let msg = e.to_string();
                self.failure = Some(e);
                return Err(MilpError::Callback(msg));
            }
        };
        Ok(LazyResponse {
            cuts: vec![cut],
            candidate: self.candidate(&z, fit),
            stop: self.fits >= self.max_iter,
        })
    }
}

fn outer_approximation(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    config: &OaConfig,
) -> Result<Outcome, FlipError> {
    let (x, y) = (ds.features(), ds.labels());
    let mut big_m = config.big_m;
    let mut escalations = 0;
    loop {
        let rmp = build_rmp(ds, budget, merit, &[big_m])?;
        // Seed cut at the unflipped fit; f is jointly convex so it is valid everywhere.
        let plain = fit_logistic(x, y, config.ridge)?;
        let plain_fit = FixedFit { value: logistic_loss(&plain, x, y)?, model: plain };
        let seed = epigraph_cut(x, y, &rmp, &vec![0; ds.len()], &plain_fit)?;
        let rmp = RmpFormulation {
            mip: MixedIntegerProgram::new(rmp.lp().with_row(seed)?, rmp.mip.binaries().to_vec())?,
            ..rmp
        };
        let mut cb = OaCallback {
            x,
            y,
            rmp: &rmp,
            ridge: config.ridge,
            max_iter: config.max_iter.max(1),
            strict_box: escalations < MAX_ESCALATIONS,
            cache: HashMap::new(),
            best: None,
            trace: Vec::new(),
            fits: 0,
            out_of_box: false,
            failure: None,
        };
        let opts = MilpOptions {
            gap_tol: config.gap_tol,
            node_limit: config.node_limit,
            ..MilpOptions::default()
        };
        let res = solve_milp_with(&rmp.mip, &opts, Some(&mut cb), None);
        if let Some(e) = cb.failure.take() {
            return Err(e);
        }
        let sol = res?;
        if cb.out_of_box && escalations < MAX_ESCALATIONS {
            big_m *= 10.0;
            escalations += 1;
            continue;
        }
        let Some((z, value)) = cb.best.clone() else {
            return Err(FlipError::NoFeasibleFlip);
        };
        let status = match sol.status {
            MilpStatus::Optimal => SolveStatus::Optimal,
            MilpStatus::Infeasible if cb.fits == 0 => return Err(FlipError::NoFeasibleFlip),
            _ => SolveStatus::GapLimit,
        };
        let lower = sol.bound.min(value);
        let lower = cb.trace.last().map_or(lower, |p| lower.max(p.lower).min(value));
        let mut trace = std::mem::take(&mut cb.trace);
        trace.push(BoundPoint { lower, upper: value });
        let model = cb.cache.remove(&z).expect("best z was evaluated").model;
        return Ok(Outcome {
            z,
            objective: value,
            model: Model::Logistic(model),
            iterations: cb.fits,
            bound_trace: trace,
            round_objectives: Vec::new(),
            status,
            mode: "oa",
            big_m: Some(big_m),
            escalations,
        });
    }
}

fn alternating(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    config: &OaConfig,
) -> Result<Outcome, FlipError> {
    let (x, y) = (ds.features(), ds.labels());
    let plain = fit_logistic(x, y, config.ridge)?;
    let fit = |z: &[u8]| -> Result<(LogisticModel, f64), FlipError> {
        let yt = flipped(y, z);
        let m = fit_logistic(x, &yt, config.ridge)?;
        let v = logistic_loss(&m, x, &yt)?;
        Ok((m, v))
    };
    // softplus(y m) − softplus(−y m) = y m: the loss change from flipping row i
    let costs_of = |m: &LogisticModel| -> Vec<f64> {
        (0..ds.len())
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                f64::from(y[i]) * m.margin(&row)
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
        fit,
        costs_of,
    )?;
    Ok(Outcome {
        z: run.z,
        objective: run.value,
        model: Model::Logistic(run.model),
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
    config: &OaConfig,
) -> Result<Outcome, FlipError> {
    let x = ds.features();
    let mut best: Option<(Vec<u8>, f64, LogisticModel)> = None;
    let mut count = 0;
    for a in enumerate_feasible_flips(ds, budget, merit)? {
        let model = fit_logistic(x, &a.y_tilde, config.ridge)?;
        let value = logistic_loss(&model, x, &a.y_tilde)?;
        count += 1;
        if best.as_ref().is_none_or(|b| value < b.1) {
            best = Some((a.z, value, model));
        }
    }
    let (z, value, model) = best.ok_or(FlipError::NoFeasibleFlip)?;
    Ok(Outcome {
        z,
        objective: value,
        model: Model::Logistic(model),
        iterations: count,
        bound_trace: vec![BoundPoint { lower: value, upper: value }],
        round_objectives: Vec::new(),
        status: SolveStatus::Optimal,
        mode: "exact_enum",
        big_m: None,
        escalations: 0,
    })
}
