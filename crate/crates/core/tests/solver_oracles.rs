//! Brute-force oracles for the simplex and branch-and-bound kernels.

use fairflip_core::lp::{
    solve_lp, Constraint, LinearProgram, LpBuilder, LpStatus, Relation,
};
use fairflip_core::milp::{
    solve_milp, solve_milp_with, LazyCallback, LazyResponse, MilpError, MilpOptions, MilpStatus,
    MixedIntegerProgram, NodeInfo, NodeTrace,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum of c·x over all basic feasible points, found by intersecting every
/// m-subset of the row and bound hyperplanes.
fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let m = lp.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = lp
        .constraints()
        .iter()
        .map(|c| (c.coeffs.clone(), c.rhs))
        .collect();
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        if lp.lower()[j].is_finite() {
            planes.push((e.clone(), lp.lower()[j]));
        }
        if lp.upper()[j].is_finite() {
            planes.push((e, lp.upper()[j]));
        }
    }
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..m).collect();
    loop {
        let a = DMatrix::from_fn(m, m, |r, c| planes[pick[r]].0[c]);
        let b = DVector::from_fn(m, |r, _| planes[pick[r]].1);
        if let Some(x) = a.lu().solve(&b) {
            let x: Vec<f64> = x.iter().copied().collect();
            if x.iter().all(|v| v.is_finite()) && lp.max_violation(&x) <= 1e-7 {
                let v = lp.objective_value(&x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // next combination
        let mut i = m;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < planes.len() - m + i {
                pick[i] += 1;
                for k in i + 1..m {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let m = rng.random_range(1..=6);
    let rows = rng.random_range(1..=8);
    let c: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut b = LpBuilder::new(c);
    let anchor: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    for j in 0..m {
        b.bounds(j, rng.random_range(-4.0..-2.0), rng.random_range(2.0..4.0));
    }
    let infeasible = rng.random_bool(0.1);
    for _ in 0..rows {
        let a: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let act: f64 = a.iter().zip(&anchor).map(|(x, y)| x * y).sum();
        let slack = rng.random_range(0.0..2.0);
        let (rel, rhs) = if rng.random_bool(0.5) {
            (Relation::Le, act + slack)
        } else {
            (Relation::Ge, act - slack)
        };
        let rhs = if infeasible { rhs + rng.random_range(-20.0..20.0) } else { rhs };
        b.constraint(a, rel, rhs);
    }
    b.build().unwrap()
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut infeasible = 0;
    for case in 0..250 {
        let lp = random_lp(&mut rng);
        let sol = solve_lp(&lp, None).unwrap();
        match vertex_enumeration(&lp) {
            Some(v) => {
                assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
                assert!((sol.objective_value - v).abs() <= 1e-7 * (1.0 + v.abs()), "case {case}: {} vs {v}", sol.objective_value);
                assert!(lp.max_violation(&sol.x) <= 1e-7);
            }
            None => {
                infeasible += 1;
                assert_eq!(sol.status, LpStatus::Infeasible, "case {case}");
            }
        }
    }
    assert!(infeasible > 0 && infeasible < 250);
}

#[test]
fn warm_start_matches_cold_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..100 {
        let lp = random_lp(&mut rng);
        let first = solve_lp(&lp, None).unwrap();
        let m = lp.num_vars();
        let row = Constraint::new(
            (0..m).map(|_| rng.random_range(-3.0..3.0)).collect(),
            Relation::Le,
            rng.random_range(-1.0..3.0),
        );
        let next = lp.with_row(row).unwrap();
        let cold = solve_lp(&next, None).unwrap();
        let warm = solve_lp(&next, Some(&first.basis)).unwrap();
        assert_eq!(cold.status, warm.status, "case {case}");
        if cold.status == LpStatus::Optimal {
            assert!((cold.objective_value - warm.objective_value).abs() <= 1e-7 * (1.0 + cold.objective_value.abs()));
        }
    }
}

#[test]
fn objective_scaling_scales_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let lp = random_lp(&mut rng);
        let base = solve_lp(&lp, None).unwrap();
        if base.status != LpStatus::Optimal {
            continue;
        }
        let lambda = rng.random_range(0.1..10.0);
        let mut b = LpBuilder::new(lp.objective().iter().map(|c| c * lambda).collect());
        for j in 0..lp.num_vars() {
            b.bounds(j, lp.lower()[j], lp.upper()[j]);
        }
        for c in lp.constraints() {
            b.push(c.clone());
        }
        let scaled = solve_lp(&b.build().unwrap(), None).unwrap();
        assert!((scaled.objective_value - lambda * base.objective_value).abs() <= 1e-7 * (1.0 + scaled.objective_value.abs()));
        let active = |x: &[f64]| -> Vec<bool> {
            lp.constraints().iter().map(|c| (c.activity(x) - c.rhs).abs() <= 1e-7).collect()
        };
        // Optimal faces can be non-unique; compare active sets only when the
        // optimum is the same point.
        if base.x.iter().zip(&scaled.x).all(|(a, b)| (a - b).abs() < 1e-7) {
            assert_eq!(active(&base.x), active(&scaled.x));
        }
    }
}

fn random_binary_program(rng: &mut ChaCha8Rng) -> (MixedIntegerProgram, usize) {
    let nb = rng.random_range(1..=12);
    let rows = rng.random_range(1..=10);
    let c: Vec<f64> = (0..nb).map(|_| rng.random_range(-9..=9) as f64).collect();
    let mut b = LpBuilder::new(c);
    for j in 0..nb {
        b.bounds(j, 0.0, 1.0);
    }
    for _ in 0..rows {
        let a: Vec<f64> = (0..nb).map(|_| rng.random_range(-4..=6) as f64).collect();
        let total: f64 = a.iter().filter(|v| **v > 0.0).sum();
        let rhs = (rng.random_range(0.2..0.8) * total).round();
        let rel = match rng.random_range(0..10) {
            0 => Relation::Ge,
            1 => Relation::Eq,
            _ => Relation::Le,
        };
        b.constraint(a, rel, rhs);
    }
    let lp = b.build().unwrap();
    (MixedIntegerProgram::new(lp, (0..nb).collect()).unwrap(), nb)
}

fn exhaustive(mip: &MixedIntegerProgram, nb: usize) -> Option<f64> {
    let lp = mip.base();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << nb) {
        let x: Vec<f64> = (0..nb).map(|j| ((mask >> j) & 1) as f64).collect();
        if lp.max_violation(&x) <= 1e-9 {
            let v = lp.objective_value(&x);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

#[test]
fn branch_and_bound_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut infeasible = 0;
    for case in 0..250 {
        let (mip, nb) = random_binary_program(&mut rng);
        let sol = solve_milp(&mip, &MilpOptions { gap_tol: 0.0, ..Default::default() }).unwrap();
        match exhaustive(&mip, nb) {
            Some(v) => {
                assert_eq!(sol.status, MilpStatus::Optimal, "case {case}");
                assert!((sol.objective_value - v).abs() <= 1e-7, "case {case}: {} vs {v}", sol.objective_value);
                assert!(sol.x.iter().all(|x| x.min(1.0 - x).abs() <= 1e-6));
            }
            None => {
                infeasible += 1;
                assert_eq!(sol.status, MilpStatus::Infeasible, "case {case}");
            }
        }
    }
    assert!(infeasible < 250);
}

#[test]
fn lower_bound_trace_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let (mip, _) = random_binary_program(&mut rng);
        let mut bounds = Vec::new();
        let mut sink = |t: &NodeTrace| bounds.push(t.bound);
        solve_milp_with::<Epigraph>(&mip, &MilpOptions::default(), None, Some(&mut sink)).unwrap();
        for w in bounds.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()), "{bounds:?}");
        }
    }
}

/// Epigraph cuts for the convex function f(x) = Σ (x_j - t_j)^2 over binaries.
struct Epigraph {
    target: Vec<f64>,
    cuts: Vec<Constraint>,
}

impl Epigraph {
    fn f(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.target).map(|(a, t)| (a - t).powi(2)).sum()
    }
}

impl LazyCallback for Epigraph {
    fn on_integral(&mut self, x: &[f64], _: &NodeInfo) -> Result<LazyResponse, MilpError> {
        let nb = self.target.len();
        let eta = x[nb];
        let fx = self.f(&x[..nb]);
        if eta >= fx - 1e-9 {
            return Ok(LazyResponse::default());
        }
        // η ≥ f(x̂) + ∇f(x̂)(x - x̂)  ⇔  ∇f·x - η ≤ ∇f·x̂ - f(x̂)
        let xr: Vec<f64> = x[..nb].iter().map(|v| v.round()).collect();
        let g: Vec<f64> = xr.iter().zip(&self.target).map(|(a, t)| 2.0 * (a - t)).collect();
        let mut coeffs = g.clone();
        coeffs.push(-1.0);
        let rhs = g.iter().zip(&xr).map(|(a, b)| a * b).sum::<f64>() - self.f(&xr);
        let cut = Constraint::new(coeffs, Relation::Le, rhs);
        self.cuts.push(cut.clone());
        Ok(LazyResponse { cuts: vec![cut], ..Default::default() })
    }
}

#[test]
fn epigraph_cuts_hold_at_final_incumbent() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..60 {
        let nb = rng.random_range(2..=8);
        let target: Vec<f64> = (0..nb).map(|_| rng.random_range(-0.5..1.5)).collect();
        let mut obj = vec![0.0; nb];
        obj.push(1.0);
        let mut b = LpBuilder::new(obj);
        for j in 0..nb {
            b.bounds(j, 0.0, 1.0);
        }
        b.bounds(nb, 0.0, f64::INFINITY);
        let k = rng.random_range(1..=nb) as f64;
        b.constraint([vec![1.0; nb], vec![0.0]].concat(), Relation::Le, k);
        let mip = MixedIntegerProgram::new(b.build().unwrap(), (0..nb).collect()).unwrap();
        let mut cb = Epigraph { target: target.clone(), cuts: Vec::new() };
        let sol = solve_milp_with(&mip, &MilpOptions { gap_tol: 0.0, ..Default::default() }, Some(&mut cb), None).unwrap();
        assert_eq!(sol.status, MilpStatus::Optimal);
        for cut in &cb.cuts {
            assert!(cut.violation(&sol.x) <= 1e-7, "case {case}");
        }
        let best = (0u32..1 << nb)
            .filter(|m| m.count_ones() as f64 <= k)
            .map(|m| {
                let x: Vec<f64> = (0..nb).map(|j| ((m >> j) & 1) as f64).collect();
                cb.f(&x)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((sol.objective_value - best).abs() <= 1e-7, "case {case}");
    }
}
