use serde::Serialize;

use super::merit::{selection_rows, MeritConstraint};
use super::{FlipBudget, FlipError};
use crate::data::{Group, LabeledDataset};
use crate::lp::{Constraint, LinearProgram, LpBuilder, Relation};
use crate::milp::MixedIntegerProgram;

pub const DEFAULT_BIG_M: f64 = 20.0;

/// Column positions of the master problem: [β0, β, γ_{·,0}, γ_{·,1..p}, z, η].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RmpLayout {
    pub n: usize,
    pub p: usize,
}

impl RmpLayout {
    pub fn beta0(&self) -> usize {
        0
    }

    pub fn beta(&self, j: usize) -> usize {
        1 + j
    }

    /// β column for coefficient slot `j`, where slot 0 is the intercept.
    pub fn coef(&self, j: usize) -> usize {
        j
    }

    pub fn gamma0(&self, i: usize) -> usize {
        1 + self.p + i
    }

    pub fn gamma(&self, i: usize, j: usize) -> usize {
        1 + self.p + self.n + i * self.p + j
    }

    /// γ column for row `i`, coefficient slot `j` (slot 0 is the intercept).
    pub fn gamma_slot(&self, i: usize, j: usize) -> usize {
        if j == 0 {
            self.gamma0(i)
        } else {
            self.gamma(i, j - 1)
        }
    }

    pub fn z(&self, i: usize) -> usize {
        1 + self.p + self.n + self.n * self.p + i
    }

    pub fn eta(&self) -> usize {
        1 + self.p + 2 * self.n + self.n * self.p
    }

    pub fn num_vars(&self) -> usize {
        self.eta() + 1
    }

    /// Width of the (β, γ) block that cuts are expressed in.
    pub fn num_model_vars(&self) -> usize {
        1 + self.p + self.n + self.n * self.p
    }
}

/// Static row counts by role.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RowCounts {
    pub budget: usize,
    pub big_m: usize,
    pub big_m_intercept: usize,
    pub linking: usize,
    pub linking_intercept: usize,
    pub merit: usize,
    pub positivity: usize,
}

/// Master problem of the logistic flip model with z and the γ = z·β products
/// linearized by big-M sandwiches. Cuts on η are added lazily by the solver.
#[derive(Clone, Debug)]
pub struct RmpFormulation {
    pub layout: RmpLayout,
    /// Bounds for coefficient slots; index 0 is the intercept.
    pub big_m: Vec<f64>,
    pub row_counts: RowCounts,
    pub mip: MixedIntegerProgram,
}

impl RmpFormulation {
    pub fn lp(&self) -> &LinearProgram {
        self.mip.base()
    }

    /// Extends a cut over (β, γ, η) written on the model block to full width.
    pub fn epigraph_cut(&self, grad: &[f64], point: &[f64], value: f64) -> Constraint {
        // η ≥ value + g·(v − v*)  ⇔  g·v − η ≤ g·v* − value
        let l = self.layout;
        let mut coeffs = vec![0.0; l.num_vars()];
        coeffs[..l.num_model_vars()].copy_from_slice(grad);
        coeffs[l.eta()] = -1.0;
        let rhs = grad.iter().zip(point).map(|(g, v)| g * v).sum::<f64>() - value;
        Constraint::new(coeffs, Relation::Le, rhs)
    }
}

/// Builds the master problem. `big_m` holds one bound per coefficient slot
/// (intercept first) or a single value applied to all.
pub fn build_rmp(
    ds: &LabeledDataset,
    budget: &FlipBudget,
    merit: &MeritConstraint,
    big_m: &[f64],
) -> Result<RmpFormulation, FlipError> {
    let (n, p) = (ds.len(), ds.num_features());
    let big_m: Vec<f64> = match big_m.len() {
        1 => vec![big_m[0]; p + 1],
        l if l == p + 1 => big_m.to_vec(),
        l => {
            return Err(FlipError::Invalid(format!(
                "big-M needs 1 or {} entries, got {l}",
                p + 1
            )))
        }
    };
    if big_m.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(FlipError::Invalid("big-M bounds must be positive and finite".into()));
    }
    let layout = RmpLayout { n, p };
    let width = layout.num_vars();
    let mut objective = vec![0.0; width];
    objective[layout.eta()] = 1.0;
    let mut b = LpBuilder::new(objective);
    for j in 0..=p {
        let m = big_m[j];
        b.bounds(layout.coef(j), -m, m);
        for i in 0..n {
            b.bounds(layout.gamma_slot(i, j), -m, m);
        }
    }
    let sel = selection_rows(ds, budget, merit);
    for i in 0..n {
        b.bounds(layout.z(i), 0.0, if sel.flippable[i] { 1.0 } else { 0.0 });
    }
    // The logistic loss is positive, so η ≥ 0 is valid before any cut.
    b.bounds(layout.eta(), 0.0, f64::INFINITY);

    let widen = |row: &Constraint| -> Constraint {
        let mut coeffs = vec![0.0; width];
        for (i, c) in row.coeffs.iter().enumerate() {
            coeffs[layout.z(i)] = *c;
        }
        Constraint::new(coeffs, row.relation, row.rhs)
    };
    let mut counts = RowCounts::default();
    for r in &sel.budget {
        b.push(widen(r));
        counts.budget += 1;
    }
    for j in 0..=p {
        let m = big_m[j];
        for i in 0..n {
            let g = layout.gamma_slot(i, j);
            let beta = layout.coef(j);
            let z = layout.z(i);
            let mut rows = [vec![0.0; width], vec![0.0; width], vec![0.0; width], vec![0.0; width]];
            // γ ≤ M z
            rows[0][g] = 1.0;
            rows[0][z] = -m;
            // −γ ≤ M z
            rows[1][g] = -1.0;
            rows[1][z] = -m;
            // γ − β ≤ M(1 − z)
            rows[2][g] = 1.0;
            rows[2][beta] = -1.0;
            rows[2][z] = m;
            // β − γ ≤ M(1 − z)
            rows[3][g] = -1.0;
            rows[3][beta] = 1.0;
            rows[3][z] = m;
            for (k, coeffs) in rows.into_iter().enumerate() {
                let rhs = if k < 2 { 0.0 } else { m };
                b.constraint(coeffs, Relation::Le, rhs);
            }
            if j == 0 {
                counts.big_m_intercept += 4;
            } else {
                counts.big_m += 4;
            }
        }
    }
    for j in 0..=p {
        for (g, k) in [(Group::Adv, budget.k_w), (Group::Dis, budget.k_b)] {
            // Σ_{i∈g} γ_{i,j} = k β_j
            let mut coeffs = vec![0.0; width];
            for i in 0..n {
                if ds.groups()[i] == g {
                    coeffs[layout.gamma_slot(i, j)] = 1.0;
                }
            }
            coeffs[layout.coef(j)] = -(k as f64);
            b.constraint(coeffs, Relation::Eq, 0.0);
            if j == 0 {
                counts.linking_intercept += 1;
            } else {
                counts.linking += 1;
            }
        }
    }
    for r in &sel.merit {
        b.push(widen(r));
        counts.merit += 1;
    }
    for r in &sel.positivity {
        b.push(widen(r));
        counts.positivity += 1;
    }
    let lp = b.build()?;
    let binaries = (0..n).map(|i| layout.z(i)).collect();
    let mip = MixedIntegerProgram::new(lp, binaries)?;
    Ok(RmpFormulation { layout, big_m, row_counts: counts, mip })
}
