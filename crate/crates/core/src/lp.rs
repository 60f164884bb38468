//! Dense two-phase primal simplex for small linear programs.
//!
//! The solver works on a row-major tableau over structural columns, one
//! slack per row and one artificial per row. Variable bounds are handled
//! natively: every nonbasic column sits at a finite bound (or at zero when
//! free), so `[0, 1]` boxes on thousands of binaries never become rows.
//!
//! Setting `FAIRFLIP_LP_TRACE` dumps the final tableau of every solve as TSV,
//! to stderr when the value is `-` or `1`, otherwise appended to the named
//! file.

use std::io::Write;

use thiserror::Error;

/// Magnitudes at or beyond this are treated as infinite bounds and rejected
/// as coefficients.
pub const INFINITY_SENTINEL: f64 = 1e30;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidInput(String),
    #[error("simplex stalled after {iterations} iterations even under Bland's rule")]
    Degenerate { iterations: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }

    fn validate(&self, m: usize) -> Result<(), LpError> {
        if self.coeffs.len() != m {
            return Err(LpError::InvalidInput(format!(
                "row has {} coefficients, expected {m}",
                self.coeffs.len()
            )));
        }
        for &a in self.coeffs.iter().chain(std::iter::once(&self.rhs)) {
            if !a.is_finite() || a.abs() >= INFINITY_SENTINEL {
                return Err(LpError::InvalidInput(format!(
                    "row coefficient {a} is not finite or exceeds 1e30"
                )));
            }
        }
        Ok(())
    }
}

/// `min c·x` subject to linear rows and per-variable bounds.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Incremental construction of a [`LinearProgram`]. Variables default to
/// `[0, +inf)`.
#[derive(Clone, Debug)]
pub struct LpBuilder {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LpBuilder {
    pub fn new(objective: Vec<f64>) -> Self {
        let m = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; m],
            upper: vec![f64::INFINITY; m],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
        self
    }

    pub fn push(&mut self, row: Constraint) -> &mut Self {
        self.constraints.push(row);
        self
    }

    pub fn build(self) -> Result<LinearProgram, LpError> {
        let m = self.objective.len();
        for &c in &self.objective {
            if !c.is_finite() || c.abs() >= INFINITY_SENTINEL {
                return Err(LpError::InvalidInput(format!(
                    "objective coefficient {c} is not finite or exceeds 1e30"
                )));
            }
        }
        for row in &self.constraints {
            row.validate(m)?;
        }
        let lower: Vec<f64> = self.lower.iter().map(|&v| normalize_bound(v)).collect();
        let upper: Vec<f64> = self.upper.iter().map(|&v| normalize_bound(v)).collect();
        check_bounds(&lower, &upper)?;
        Ok(LinearProgram {
            objective: self.objective,
            constraints: self.constraints,
            lower,
            upper,
        })
    }
}

fn normalize_bound(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else if v >= INFINITY_SENTINEL {
        f64::INFINITY
    } else if v <= -INFINITY_SENTINEL {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn check_bounds(lower: &[f64], upper: &[f64]) -> Result<(), LpError> {
    for (j, (&l, &u)) in lower.iter().zip(upper).enumerate() {
        if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
            return Err(LpError::InvalidInput(format!(
                "variable {j} has invalid bounds [{l}, {u}]"
            )));
        }
    }
    Ok(())
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|r| r.violation(x))
            .fold(0.0, f64::max);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Copy of this program with one more row.
    pub fn with_row(&self, row: Constraint) -> Result<Self, LpError> {
        row.validate(self.num_vars())?;
        let mut out = self.clone();
        out.constraints.push(row);
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Simplex basis: the basic column of each row (structural `j < m` or slack
/// `m + r`), and which nonbasic columns rest at their upper bound.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Basis {
    pub head: Vec<Option<usize>>,
    pub at_upper: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub basis: Basis,
    pub iterations: usize,
}

/// Solves `lp`, optionally starting from a basis returned by an earlier
/// solve of a program with the same columns (and possibly fewer rows).
pub fn solve_lp(lp: &LinearProgram, warm_basis: Option<&Basis>) -> Result<LpSolution, LpError> {
    solve_with(lp, &[], lp.lower(), lp.upper(), warm_basis)
}

/// Solves `lp` with `extra` rows appended and the variable bounds replaced.
pub(crate) fn solve_with(
    lp: &LinearProgram,
    extra: &[Constraint],
    lower: &[f64],
    upper: &[f64],
    warm_basis: Option<&Basis>,
) -> Result<LpSolution, LpError> {
    let m = lp.num_vars();
    if lower.len() != m || upper.len() != m {
        return Err(LpError::InvalidInput("bound vector length mismatch".into()));
    }
    check_bounds(lower, upper)?;
    let rows: Vec<&Constraint> = lp.constraints.iter().chain(extra.iter()).collect();
    let mut tab = Tableau::new(&lp.objective, &rows, lower, upper, warm_basis);
    let mut status = tab.run()?;

    if status == LpStatus::Optimal {
        // Refactor from the original data if drift crept into the tableau.
        let mut x = tab.primal();
        for _ in 0..2 {
            let resid = residual(&rows, lower, upper, &x);
            if resid <= 1e-9 * (1.0 + tab.scale) {
                break;
            }
            let basis = tab.basis();
            tab = Tableau::new(&lp.objective, &rows, lower, upper, Some(&basis));
            status = tab.run()?;
            x = tab.primal();
            if status != LpStatus::Optimal {
                break;
            }
        }
    }

    tab.trace();
    let x = tab.primal();
    let objective_value = if status == LpStatus::Optimal {
        lp.objective_value(&x)
    } else if status == LpStatus::Unbounded {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    Ok(LpSolution {
        status,
        x,
        objective_value,
        basis: tab.basis(),
        iterations: tab.iterations,
    })
}

fn residual(rows: &[&Constraint], lower: &[f64], upper: &[f64], x: &[f64]) -> f64 {
    let r = rows.iter().map(|c| c.violation(x)).fold(0.0, f64::max);
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0))
        .fold(r, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rest {
    Lower,
    Upper,
    Zero,
}

struct Tableau {
    m: usize,
    rows: usize,
    cols: usize,
    objective: Vec<f64>,
    t: Vec<f64>,
    rhs: Vec<f64>,
    xb: Vec<f64>,
    head: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rest: Vec<Rest>,
    cost: Vec<f64>,
    d: Vec<f64>,
    bland: bool,
    degenerate: usize,
    iterations: usize,
    scale: f64,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn new(
        objective: &[f64],
        rows: &[&Constraint],
        lower: &[f64],
        upper: &[f64],
        warm: Option<&Basis>,
    ) -> Self {
        let m = objective.len();
        let r = rows.len();
        let cols = m + 2 * r;
        let mut t = vec![0.0; r * cols];
        let mut rhs = vec![0.0; r];
        let mut lo = vec![0.0; cols];
        let mut up = vec![0.0; cols];
        lo[..m].copy_from_slice(lower);
        up[..m].copy_from_slice(upper);
        let mut scale: f64 = 0.0;
        for (i, row) in rows.iter().enumerate() {
            t[i * cols..i * cols + m].copy_from_slice(&row.coeffs);
            t[i * cols + m + i] = 1.0;
            rhs[i] = row.rhs;
            scale = scale.max(row.rhs.abs());
            let (l, u) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo[m + i] = l;
            up[m + i] = u;
        }
        let mut rest = vec![Rest::Lower; cols];
        for j in 0..m + r {
            rest[j] = default_rest(lo[j], up[j]);
        }
        let mut tab = Self {
            m,
            rows: r,
            cols,
            objective: objective.to_vec(),
            t,
            rhs,
            xb: vec![0.0; r],
            head: (m..m + r).collect(),
            basic_row: vec![None; cols],
            lower: lo,
            upper: up,
            rest,
            cost: vec![0.0; cols],
            d: vec![0.0; cols],
            bland: false,
            degenerate: 0,
            iterations: 0,
            scale,
        };
        for i in 0..r {
            tab.basic_row[m + i] = Some(i);
        }
        if let Some(b) = warm {
            tab.install_basis(b);
        }
        tab.recompute_xb();
        tab
    }

    fn install_basis(&mut self, basis: &Basis) {
        let limit = self.m + self.rows;
        for (j, &up) in basis.at_upper.iter().enumerate().take(limit) {
            if self.basic_row[j].is_none() && up && self.upper[j].is_finite() {
                self.rest[j] = Rest::Upper;
            }
        }
        let wanted: Vec<usize> = basis
            .head
            .iter()
            .take(self.rows)
            .filter_map(|h| *h)
            .filter(|&j| j < limit)
            .collect();
        let mut locked = vec![false; self.rows];
        let mut want = vec![false; limit];
        for &j in &wanted {
            want[j] = true;
        }
        for r in 0..self.rows {
            if want[self.head[r]] {
                locked[r] = true;
            }
        }
        for &j in &wanted {
            if self.basic_row[j].is_some() {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                if locked[r] {
                    continue;
                }
                let a = self.t[r * self.cols + j].abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, b)| a > b) {
                    best = Some((r, a));
                }
            }
            if let Some((r, _)) = best {
                let leaving = self.head[r];
                self.pivot(r, j, false);
                self.rest[leaving] = default_rest(self.lower[leaving], self.upper[leaving]);
                locked[r] = true;
            }
        }
    }

    fn value(&self, j: usize) -> f64 {
        match self.rest[j] {
            Rest::Lower => self.lower[j],
            Rest::Upper => self.upper[j],
            Rest::Zero => 0.0,
        }
    }

    fn recompute_xb(&mut self) {
        for r in 0..self.rows {
            let row = &self.t[r * self.cols..(r + 1) * self.cols];
            let mut v = self.rhs[r];
            for j in 0..self.cols {
                if self.basic_row[j].is_none() && row[j] != 0.0 {
                    let val = self.value(j);
                    if val != 0.0 {
                        v -= row[j] * val;
                    }
                }
            }
            self.xb[r] = v;
        }
    }

    fn pivot(&mut self, r: usize, q: usize, update_d: bool) {
        let cols = self.cols;
        let piv = self.t[r * cols + q];
        let inv = 1.0 / piv;
        for v in &mut self.t[r * cols..(r + 1) * cols] {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        let prhs = self.rhs[r];
        for (k, row) in before
            .chunks_exact_mut(cols)
            .enumerate()
            .chain(after.chunks_exact_mut(cols).enumerate().map(|(i, c)| (i + r + 1, c)))
        {
            let f = row[q];
            if f != 0.0 {
                for (a, &b) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
                row[q] = 0.0;
                self.rhs[k] -= f * prhs;
            }
        }
        if update_d {
            let f = self.d[q];
            if f != 0.0 {
                for (a, &b) in self.d.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
                self.d[q] = 0.0;
            }
        }
        let leaving = self.head[r];
        self.basic_row[leaving] = None;
        self.basic_row[q] = Some(r);
        self.head[r] = q;
    }

    fn reset_costs(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.d = self.cost.clone();
        for r in 0..self.rows {
            let cb = self.cost[self.head[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.cols..(r + 1) * self.cols];
                for (dj, &a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for r in 0..self.rows {
            self.d[self.head[r]] = 0.0;
        }
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        let art0 = self.m + self.rows;
        // Phase 1: replace every infeasible basic variable by an artificial.
        let mut any_art = false;
        for r in 0..self.rows {
            let h = self.head[r];
            let v = self.xb[r];
            let tol = FEAS_TOL * (1.0 + v.abs());
            let target = if v < self.lower[h] - tol {
                self.lower[h]
            } else if v > self.upper[h] + tol {
                self.upper[h]
            } else {
                continue;
            };
            let sigma = if v > target { 1.0 } else { -1.0 };
            if sigma < 0.0 {
                for a in &mut self.t[r * self.cols..(r + 1) * self.cols] {
                    *a = -*a;
                }
                self.rhs[r] = -self.rhs[r];
            }
            let a = art0 + r;
            self.t[r * self.cols + a] = 1.0;
            self.basic_row[h] = None;
            self.rest[h] = if target == self.lower[h] {
                Rest::Lower
            } else {
                Rest::Upper
            };
            self.basic_row[a] = Some(r);
            self.head[r] = a;
            self.lower[a] = 0.0;
            self.upper[a] = f64::INFINITY;
            self.xb[r] = (v - target).abs();
            any_art = true;
        }

        if any_art {
            let mut c1 = vec![0.0; self.cols];
            for c in c1.iter_mut().skip(art0) {
                *c = 1.0;
            }
            self.reset_costs(c1);
            loop {
                match self.step(true)? {
                    Step::Moved => continue,
                    Step::Optimal => break,
                    // Phase 1 is bounded below by zero; reaching this means the
                    // tableau has lost accuracy.
                    Step::Unbounded => {
                        return Err(LpError::Degenerate {
                            iterations: self.iterations,
                        })
                    }
                }
            }
            let infeas: f64 = (0..self.rows)
                .filter(|&r| self.head[r] >= art0)
                .map(|r| self.xb[r])
                .sum();
            if infeas > 1e-8 * (1.0 + self.scale) {
                return Ok(LpStatus::Infeasible);
            }
            self.drive_out_artificials();
        }
        for a in art0..self.cols {
            self.lower[a] = 0.0;
            self.upper[a] = 0.0;
            self.rest[a] = Rest::Lower;
        }
        let mut c2 = vec![0.0; self.cols];
        c2[..self.m].copy_from_slice(&self.objective);
        self.reset_costs(c2);
        self.degenerate = 0;
        loop {
            match self.step(false)? {
                Step::Moved => continue,
                Step::Optimal => return Ok(LpStatus::Optimal),
                Step::Unbounded => return Ok(LpStatus::Unbounded),
            }
        }
    }

    fn drive_out_artificials(&mut self) {
        let art0 = self.m + self.rows;
        for r in 0..self.rows {
            if self.head[r] < art0 {
                continue;
            }
            let row = &self.t[r * self.cols..(r + 1) * self.cols];
            let mut best: Option<(usize, f64)> = None;
            for (j, &a) in row.iter().enumerate().take(art0) {
                if self.basic_row[j].is_none() && a.abs() > PIVOT_TOL && best.is_none_or(|(_, b)| a.abs() > b) {
                    best = Some((j, a.abs()));
                }
            }
            if let Some((j, _)) = best {
                let xj = self.value(j);
                let a = self.head[r];
                self.pivot(r, j, true);
                self.rest[a] = Rest::Lower;
                self.xb[r] = xj;
            }
        }
    }

    fn step(&mut self, phase1: bool) -> Result<Step, LpError> {
        self.iterations += 1;
        let limit_free = 50 * (self.cols + self.rows) + 1000;
        if self.iterations > 4 * limit_free {
            return Err(LpError::Degenerate {
                iterations: self.iterations,
            });
        }
        if !self.bland && self.degenerate > 5 * (self.m + self.rows) {
            self.bland = true;
        }
        if !self.bland && self.iterations > limit_free {
            self.bland = true;
        }

        // Pricing.
        let art0 = self.m + self.rows;
        let mut entering: Option<(usize, f64, f64)> = None;
        let end = if phase1 { self.cols } else { art0 };
        for j in 0..end {
            if self.basic_row[j].is_some() || self.lower[j] == self.upper[j] {
                continue;
            }
            if j >= art0 && self.upper[j] == 0.0 {
                continue;
            }
            let dj = self.d[j];
            let dir = match self.rest[j] {
                Rest::Lower if dj < -OPT_TOL => 1.0,
                Rest::Upper if dj > OPT_TOL => -1.0,
                Rest::Zero if dj.abs() > OPT_TOL => -dj.signum(),
                _ => continue,
            };
            if self.bland {
                entering = Some((j, dir, dj.abs()));
                break;
            }
            if entering.is_none_or(|(_, _, s)| dj.abs() > s) {
                entering = Some((j, dir, dj.abs()));
            }
        }
        let Some((q, dir, _)) = entering else {
            return Ok(Step::Optimal);
        };

        // Ratio test.
        let mut theta = f64::INFINITY;
        let mut leave: Option<(usize, f64)> = None;
        if self.lower[q].is_finite() && self.upper[q].is_finite() {
            theta = self.upper[q] - self.lower[q];
        }
        for r in 0..self.rows {
            let alpha = dir * self.t[r * self.cols + q];
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let h = self.head[r];
            let limit = if alpha > 0.0 {
                if !self.lower[h].is_finite() {
                    continue;
                }
                ((self.xb[r] - self.lower[h]) / alpha).max(0.0)
            } else {
                if !self.upper[h].is_finite() {
                    continue;
                }
                ((self.upper[h] - self.xb[r]) / -alpha).max(0.0)
            };
            let better = match leave {
                None => limit < theta,
                Some((lr, la)) => {
                    if limit < theta - DEGENERATE_STEP {
                        true
                    } else if limit <= theta + DEGENERATE_STEP {
                        if self.bland {
                            h < self.head[lr]
                        } else {
                            alpha.abs() > la
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                theta = theta.min(limit);
                leave = Some((r, alpha.abs()));
            }
        }
        if theta == f64::INFINITY {
            return Ok(Step::Unbounded);
        }
        if theta <= DEGENERATE_STEP {
            self.degenerate += 1;
        }

        let entering_value = self.value(q) + dir * theta;
        for r in 0..self.rows {
            let a = self.t[r * self.cols + q];
            if a != 0.0 {
                self.xb[r] -= dir * theta * a;
            }
        }
        match leave {
            None => {
                self.rest[q] = match self.rest[q] {
                    Rest::Lower => Rest::Upper,
                    _ => Rest::Lower,
                };
            }
            Some((r, _)) => {
                let h = self.head[r];
                let alpha = dir * self.t[r * self.cols + q];
                if h >= self.m + self.rows {
                    // Artificials never re-enter once they leave.
                    self.upper[h] = 0.0;
                }
                self.rest[h] = if self.lower[h] == self.upper[h] {
                    Rest::Lower
                } else if alpha > 0.0 {
                    Rest::Lower
                } else {
                    Rest::Upper
                };
                self.pivot(r, q, true);
                self.xb[r] = entering_value;
            }
        }
        Ok(Step::Moved)
    }

    fn primal(&self) -> Vec<f64> {
        (0..self.m)
            .map(|j| match self.basic_row[j] {
                Some(r) => self.xb[r],
                None => self.value(j),
            })
            .collect()
    }

    fn basis(&self) -> Basis {
        let art0 = self.m + self.rows;
        Basis {
            head: self
                .head
                .iter()
                .map(|&h| if h < art0 { Some(h) } else { None })
                .collect(),
            at_upper: (0..art0)
                .map(|j| self.basic_row[j].is_none() && self.rest[j] == Rest::Upper)
                .collect(),
        }
    }

    fn trace(&self) {
        let Ok(target) = std::env::var("FAIRFLIP_LP_TRACE") else {
            return;
        };
        let mut out = String::new();
        out.push_str("row\thead\tvalue");
        for j in 0..self.m + self.rows {
            out.push_str(&format!("\tc{j}"));
        }
        out.push('\n');
        for r in 0..self.rows {
            out.push_str(&format!("{r}\t{}\t{}", self.head[r], self.xb[r]));
            for j in 0..self.m + self.rows {
                out.push_str(&format!("\t{}", self.t[r * self.cols + j]));
            }
            out.push('\n');
        }
        out.push('\n');
        if target == "-" || target == "1" {
            eprint!("{out}");
        } else if let Ok(mut f) = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&target)
        {
            let _ = f.write_all(out.as_bytes());
        }
    }
}

fn default_rest(lower: f64, upper: f64) -> Rest {
    if lower.is_finite() {
        Rest::Lower
    } else if upper.is_finite() {
        Rest::Upper
    } else {
        Rest::Zero
    }
}
