//! Best-first branch-and-bound over binary variables.
//!
//! Node relaxations are solved with [`crate::lp`]. A [`LazyCallback`] is
//! consulted whenever a node relaxation comes back integral; it may append
//! globally valid cuts (the node is then re-solved) and may hand back a
//! repaired candidate point to use as the incumbent instead of the raw LP
//! vertex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::lp::{solve_with, Basis, Constraint, LinearProgram, LpError, LpStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("invalid mixed-integer program: {0}")]
    InvalidInput(String),
    #[error("relaxation is unbounded")]
    Unbounded,
    #[error("lazy cut {cut} cuts off the incumbent by {violation:.3e}")]
    ContractViolation { cut: usize, violation: f64 },
    #[error("lazy callback failed: {0}")]
    Callback(String),
}

#[derive(Clone, Debug)]
pub struct MixedIntegerProgram {
    base: LinearProgram,
    binaries: Vec<usize>,
}

impl MixedIntegerProgram {
    pub fn new(base: LinearProgram, mut binaries: Vec<usize>) -> Result<Self, MilpError> {
        binaries.sort_unstable();
        binaries.dedup();
        for &b in &binaries {
            if b >= base.num_vars() {
                return Err(MilpError::InvalidInput(format!(
                    "binary index {b} out of range"
                )));
            }
            if base.lower()[b] < 0.0 || base.upper()[b] > 1.0 {
                return Err(MilpError::InvalidInput(format!(
                    "binary variable {b} has bounds outside [0, 1]"
                )));
            }
        }
        Ok(Self { base, binaries })
    }

    pub fn base(&self) -> &LinearProgram {
        &self.base
    }

    pub fn binaries(&self) -> &[usize] {
        &self.binaries
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    /// Stopped early with an incumbent whose gap exceeds the tolerance.
    GapLimit,
    /// Stopped early without any incumbent.
    NodeLimit,
}

#[derive(Clone, Debug)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub bound: f64,
    pub node_count: usize,
}

impl MilpSolution {
    pub fn gap(&self) -> f64 {
        if self.x.is_empty() {
            return f64::INFINITY;
        }
        (self.objective_value - self.bound).max(0.0) / self.objective_value.abs().max(1.0)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MilpOptions {
    pub gap_tol: f64,
    pub node_limit: usize,
    pub int_tol: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            node_limit: 1_000_000,
            int_tol: 1e-6,
        }
    }
}

/// State handed to a lazy callback alongside the integral point.
#[derive(Clone, Copy, Debug)]
pub struct NodeInfo {
    pub node_id: usize,
    pub depth: usize,
    pub global_bound: f64,
    pub incumbent: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct LazyResponse {
    pub cuts: Vec<Constraint>,
    pub candidate: Option<Vec<f64>>,
    pub stop: bool,
}

/// Cut generator invoked at integral node solutions. Every returned cut must
/// be valid for all integral-feasible points of the true problem.
pub trait LazyCallback {
    fn on_integral(&mut self, x: &[f64], info: &NodeInfo) -> Result<LazyResponse, MilpError>;
}

/// One line of node trace output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeTrace {
    pub id: usize,
    pub bound: f64,
    pub depth: usize,
    pub fractional: usize,
}

impl std::fmt::Display for NodeTrace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "node {} bound {:.9e} depth {} fractional {}",
            self.id, self.bound, self.depth, self.fractional
        )
    }
}

pub fn solve_milp(mip: &MixedIntegerProgram, options: &MilpOptions) -> Result<MilpSolution, MilpError> {
    solve_milp_with::<NoCallback>(mip, options, None, None)
}

struct NoCallback;

impl LazyCallback for NoCallback {
    fn on_integral(&mut self, _: &[f64], _: &NodeInfo) -> Result<LazyResponse, MilpError> {
        Ok(LazyResponse::default())
    }
}

struct Node {
    id: usize,
    bound: f64,
    depth: usize,
    fixings: Vec<(usize, f64)>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound (then oldest id) wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Incumbent {
    x: Vec<f64>,
    value: f64,
}

pub fn solve_milp_with<C: LazyCallback>(
    mip: &MixedIntegerProgram,
    options: &MilpOptions,
    mut callback: Option<&mut C>,
    mut trace: Option<&mut dyn FnMut(&NodeTrace)>,
) -> Result<MilpSolution, MilpError> {
    let base = &mip.base;
    let gap_abs = |v: f64| options.gap_tol * v.abs().max(1.0);
    let mut cuts: Vec<Constraint> = Vec::new();
    let mut incumbent: Option<Incumbent> = None;
    let mut heap = BinaryHeap::new();
    let mut next_id = 1usize;
    heap.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        depth: 0,
        fixings: Vec::new(),
        basis: None,
    });
    let mut node_count = 0usize;
    let mut pruned_min = f64::INFINITY;
    let mut stopped = false;
    let mut frontier = f64::NEG_INFINITY;

    while let Some(node) = heap.pop() {
        if let Some(inc) = &incumbent {
            if node.bound >= inc.value - gap_abs(inc.value) {
                pruned_min = pruned_min.min(node.bound);
                // Best-first: every node left in the queue is at least as bad.
                for rest in heap.drain() {
                    pruned_min = pruned_min.min(rest.bound);
                }
                break;
            }
        }
        if node_count >= options.node_limit {
            frontier = node.bound;
            heap.push(node);
            stopped = true;
            break;
        }
        node_count += 1;
        frontier = node.bound;

        let mut lower = base.lower().to_vec();
        let mut upper = base.upper().to_vec();
        for &(j, v) in &node.fixings {
            lower[j] = v;
            upper[j] = v;
        }
        let mut basis = node.basis;
        let mut fractional = 0usize;
        loop {
            let sol = solve_with(base, &cuts, &lower, &upper, basis.as_ref())?;
            match sol.status {
                LpStatus::Infeasible => break,
                LpStatus::Unbounded => return Err(MilpError::Unbounded),
                LpStatus::Optimal => {}
            }
            let obj = sol.objective_value;
            if let Some(inc) = &incumbent {
                if obj >= inc.value - gap_abs(inc.value) {
                    pruned_min = pruned_min.min(obj);
                    break;
                }
            }
            let branch_var = most_fractional(&sol.x, &mip.binaries, options.int_tol);
            fractional = mip
                .binaries
                .iter()
                .filter(|&&j| frac_dist(sol.x[j]) > options.int_tol)
                .count();
            if let Some(j) = branch_var {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node {
                        id: next_id,
                        bound: obj,
                        depth: node.depth + 1,
                        fixings,
                        basis: Some(sol.basis.clone()),
                    });
                    next_id += 1;
                }
                break;
            }

            let mut x = sol.x;
            for &j in &mip.binaries {
                x[j] = x[j].round();
            }
            let Some(cb) = callback.as_deref_mut() else {
                offer(&mut incumbent, x, obj);
                break;
            };
            let heap_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
            let info = NodeInfo {
                node_id: node.id,
                depth: node.depth,
                global_bound: obj
                    .min(heap_min)
                    .min(pruned_min)
                    .min(incumbent.as_ref().map_or(f64::INFINITY, |i| i.value)),
                incumbent: incumbent.as_ref().map(|i| i.value),
            };
            let resp = cb.on_integral(&x, &info)?;
            if let Some(inc) = &incumbent {
                for (k, cut) in resp.cuts.iter().enumerate() {
                    if cut.coeffs.len() != base.num_vars() {
                        return Err(MilpError::InvalidInput("cut has wrong width".into()));
                    }
                    let v = cut.violation(&inc.x);
                    if v > 1e-7 * (1.0 + cut.rhs.abs()) {
                        return Err(MilpError::ContractViolation {
                            cut: cuts.len() + k,
                            violation: v,
                        });
                    }
                }
            }
            let added = !resp.cuts.is_empty();
            cuts.extend(resp.cuts);
            let had_candidate = resp.candidate.is_some();
            if let Some(cand) = resp.candidate {
                if candidate_feasible(mip, &cuts, &cand, options.int_tol) {
                    let value = base.objective_value(&cand);
                    offer(&mut incumbent, cand, value);
                }
            }
            if resp.stop {
                stopped = true;
                break;
            }
            if added {
                basis = Some(sol.basis);
                continue;
            }
            if !had_candidate {
                offer(&mut incumbent, x, obj);
            }
            break;
        }

        if let Some(t) = trace.as_deref_mut() {
            let heap_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
            let bound = heap_min
                .min(pruned_min)
                .min(incumbent.as_ref().map_or(f64::INFINITY, |i| i.value));
            let bound = if bound.is_finite() { bound } else { node.bound };
            t(&NodeTrace {
                id: node.id,
                bound,
                depth: node.depth,
                fractional,
            });
        }
        if stopped {
            break;
        }
    }

    let open_min = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let (status, x, objective_value, bound) = match incumbent {
        Some(inc) => {
            let bound = if stopped {
                open_min.min(frontier).min(pruned_min).min(inc.value)
            } else {
                pruned_min.min(inc.value)
            };
            let gap = (inc.value - bound).max(0.0) / inc.value.abs().max(1.0);
            let status = if stopped && gap > options.gap_tol {
                MilpStatus::GapLimit
            } else {
                MilpStatus::Optimal
            };
            (status, inc.x, inc.value, bound)
        }
        None if stopped => (
            MilpStatus::NodeLimit,
            Vec::new(),
            f64::INFINITY,
            open_min.min(frontier),
        ),
        None => (MilpStatus::Infeasible, Vec::new(), f64::INFINITY, f64::INFINITY),
    };
    Ok(MilpSolution {
        status,
        x,
        objective_value,
        bound,
        node_count,
    })
}

fn offer(incumbent: &mut Option<Incumbent>, x: Vec<f64>, value: f64) {
    if incumbent.as_ref().is_none_or(|inc| value < inc.value) {
        *incumbent = Some(Incumbent { x, value });
    }
}

fn frac_dist(v: f64) -> f64 {
    (v - v.round()).abs()
}

/// Most fractional binary, ties to the lowest index.
fn most_fractional(x: &[f64], binaries: &[usize], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in binaries {
        let d = frac_dist(x[j]);
        if d > tol && best.is_none_or(|(_, bd)| d > bd) {
            best = Some((j, d));
        }
    }
    best.map(|(j, _)| j)
}

fn candidate_feasible(mip: &MixedIntegerProgram, cuts: &[Constraint], x: &[f64], int_tol: f64) -> bool {
    if x.len() != mip.base.num_vars() {
        return false;
    }
    if mip.binaries.iter().any(|&j| frac_dist(x[j]) > int_tol) {
        return false;
    }
    let tol = |r: &Constraint| 1e-7 * (1.0 + r.rhs.abs());
    let bounds_ok = x
        .iter()
        .zip(mip.base.lower().iter().zip(mip.base.upper()))
        .all(|(&v, (&l, &u))| v >= l - 1e-9 && v <= u + 1e-9);
    bounds_ok
        && mip
            .base
            .constraints()
            .iter()
            .chain(cuts)
            .all(|r| r.violation(x) <= tol(r))
}
