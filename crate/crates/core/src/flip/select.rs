use super::merit::{flippable, selection_rows, MeritConstraint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FlipBudget, FlipError};
use crate::data::LabeledDataset;
use crate::lp::LpBuilder;
use crate::milp::{solve_milp, MilpOptions, MilpStatus, MixedIntegerProgram};

pub(crate) const SELECT_NODE_LIMIT: usize = 20_000;
const RESTART_SEED: u64 = 0x5eed;

/// Cheapest flip vector under the budget, direction and merit rows:
/// min Σ costs_i z_i. Returns `None` when no vector is feasible or none was
/// found within the node limit.
pub(crate) fn select_flips(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    costs: &[f64],
) -> Result<Option<Vec<u8>>, FlipError> {
    let n = ds.len();
    let sel = selection_rows(ds, budget, merit);
    let mut b = LpBuilder::new(costs.to_vec());
    for i in 0..n {
        b.bounds(i, 0.0, if sel.flippable[i] { 1.0 } else { 0.0 });
    }
    for r in sel.all() {
        b.push(r.clone());
    }
    let mip = MixedIntegerProgram::new(b.build()?, (0..n).collect())?;
    let opts = MilpOptions { gap_tol: 1e-9, node_limit: SELECT_NODE_LIMIT, ..Default::default() };
    let sol = solve_milp(&mip, &opts)?;
    Ok(match sol.status {
        MilpStatus::Infeasible | MilpStatus::NodeLimit => None,
        MilpStatus::Optimal | MilpStatus::GapLimit => {
            Some(sol.x.iter().map(|v| u8::from(*v > 0.5)).collect())
        }
    })
}

pub(crate) fn assignment_cost(costs: &[f64], z: &[u8]) -> f64 {
    costs.iter().zip(z).map(|(c, &zi)| c * f64::from(zi)).sum()
}

/// One-for-one swap neighborhood search: within a group, unflip one row and
/// flip another, keeping per-group counts and merit rows. Candidates are tried
/// in order of the cost change under `costs` (most promising first) and the
/// first strict improvement is taken. Returns the improved z and its value,
/// or `None` when no swap within `max_evals` refits improves on `value`.
pub(crate) fn best_swap<F>(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    z: &[u8],
    value: f64,
    costs: &[f64],
    max_evals: &mut usize,
    mut eval: F,
) -> Result<Option<(Vec<u8>, f64)>, FlipError>
where
    F: FnMut(&[u8]) -> Result<f64, FlipError>,
{
    let allowed = flippable(ds, budget.directional);
    let groups = ds.groups();
    let mut moves: Vec<(f64, usize, usize)> = Vec::new();
    for i in (0..z.len()).filter(|&i| z[i] == 1) {
        for j in (0..z.len()).filter(|&j| z[j] == 0 && allowed[j] && groups[j] == groups[i]) {
            moves.push((costs[j] - costs[i], i, j));
        }
    }
    moves.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, i, j) in moves {
        if *max_evals == 0 {
            return Ok(None);
        }
        let mut cand = z.to_vec();
        cand[i] = 0;
        cand[j] = 1;
        if !merit.satisfied(&cand, 1e-9) {
            continue;
        }
        *max_evals -= 1;
        let v = eval(&cand)?;
        if v < value - 1e-9 * value.abs().max(1.0) {
            return Ok(Some((cand, v)));
        }
    }
    Ok(None)
}

/// Result of one alternating descent.
pub(crate) struct Descent<M> {
    pub z: Vec<u8>,
    pub value: f64,
    pub model: M,
    /// Objective after every accepted step; non-increasing.
    pub rounds: Vec<f64>,
    pub converged: bool,
}

/// Alternates a z-step (cheapest flips under `costs` of the current model)
/// with a refit until z repeats or the objective stops decreasing, then
/// tries improving swaps and resumes alternating after each one.
#[allow(clippy::too_many_arguments)]
pub(crate) fn descend<M, Fit, Cost>(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    start: M,
    max_rounds: usize,
    evals: &mut usize,
    fit: Fit,
    costs_of: Cost,
) -> Result<Descent<M>, FlipError>
where
    M: Clone,
    Fit: Fn(&[u8]) -> Result<(M, f64), FlipError>,
    Cost: Fn(&M) -> Vec<f64>,
{
    let mut model = start;
    let mut current: Option<(Vec<u8>, f64, M)> = None;
    let mut rounds = Vec::new();
    let mut alternations = 0;
    let mut converged;
    loop {
        converged = false;
        while alternations < max_rounds.max(1) {
            alternations += 1;
            let costs = costs_of(&model);
            let chosen = select_flips(ds, budget, merit, &costs)?;
            let z = match (chosen, &current) {
                // never move to a z that is worse for the current model
                (Some(z), Some((cz, _, _))) if assignment_cost(&costs, &z) > assignment_cost(&costs, cz) => cz.clone(),
                (Some(z), _) => z,
                (None, Some((cz, _, _))) => cz.clone(),
                (None, None) => return Err(FlipError::NoFeasibleFlip),
            };
            if current.as_ref().is_some_and(|(cz, _, _)| *cz == z) {
                converged = true;
                break;
            }
            let (next, value) = fit(&z)?;
            let stalled = current.as_ref().is_some_and(|(_, prev, _)| prev - value < 1e-8);
            if current.as_ref().is_none_or(|(_, prev, _)| value < *prev) {
                rounds.push(value);
                current = Some((z, value, next.clone()));
            }
            model = next;
            if stalled {
                converged = true;
                break;
            }
        }
        if !converged || *evals == 0 {
            break;
        }
        let (cz, cv, cm) = current.as_ref().expect("at least one round ran");
        let costs = costs_of(cm);
        let mut last = None;
        let swap = best_swap(ds, budget, merit, cz, *cv, &costs, evals, |z| {
            let (m, v) = fit(z)?;
            last = Some(m);
            Ok(v)
        })?;
        let Some((z, v)) = swap else { break };
        let m = last.expect("an improving swap was evaluated");
        rounds.push(v);
        model = m.clone();
        current = Some((z, v, m));
    }
    let (z, value, model) = current.expect("at least one round ran");
    Ok(Descent { z, value, model, rounds, converged })
}

/// Search effort spent beyond the plain alternation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Polish {
    /// Total refits available to the swap search, shared by all descents.
    pub swap_evals: usize,
    pub restarts: usize,
    /// Larger problems get the plain alternation only.
    pub max_rows: usize,
}

/// Runs [`descend`] from `start` and, on problems with at most
/// `polish.max_rows` rows, from seeded random feasible flip vectors with swap
/// search enabled; keeps the best run.
#[allow(clippy::too_many_arguments)]
pub(crate) fn multistart<M, Fit, Cost>(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    start: M,
    max_rounds: usize,
    polish: Polish,
    fit: Fit,
    costs_of: Cost,
) -> Result<Descent<M>, FlipError>
where
    M: Clone,
    Fit: Fn(&[u8]) -> Result<(M, f64), FlipError>,
    Cost: Fn(&M) -> Vec<f64>,
{
    let small = ds.len() <= polish.max_rows;
    let mut evals = if small { polish.swap_evals } else { 0 };
    let restarts = if small { polish.restarts } else { 0 };
    let mut best = descend(ds, budget, merit, start, max_rounds, &mut evals, &fit, &costs_of)?;
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    for _ in 0..restarts {
        let noise: Vec<f64> = (0..ds.len()).map(|_| rng.random::<f64>()).collect();
        let Some(z0) = select_flips(ds, budget, merit, &noise)? else { break };
        let (m0, _) = fit(&z0)?;
        let run = descend(ds, budget, merit, m0, max_rounds, &mut evals, &fit, &costs_of)?;
        if run.value < best.value - 1e-9 * best.value.abs().max(1.0) {
            best = run;
        }
    }
    Ok(best)
}
