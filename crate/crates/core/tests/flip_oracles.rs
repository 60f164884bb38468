use fairflip_core::classifiers::{fit_logistic, fit_svm, logistic_loss, Model};
use fairflip_core::data::{
    generate_synthetic, merit_means, standardize_by_group, Group, GroupStats, LabeledDataset,
};
use fairflip_core::flip::{
    compute_flip_budgets, compute_flip_budgets_with, debias, default_epsilon_grid,
    enumerate_feasible_flips, merit_bounds, price_of_diversity, solve_dp_lr_oa, solve_dp_svm,
    tradeoff_sweep, DebiasConfig, FlipError, LogisticMode, ModelKind, OaConfig, SolveStatus,
    SvmConfig, SvmMode,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Half ADV, half DIS, ADV positives more frequent, both classes in each group.
fn instance(seed: u64, n: usize, p: usize, merit: bool) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Group> = (0..n).map(|i| if i < n / 2 { Group::Adv } else { Group::Dis }).collect();
    loop {
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
        let labels: Vec<i8> = groups
            .iter()
            .map(|g| {
                let rate = if *g == Group::Adv { 0.7 } else { 0.3 };
                if rng.random_bool(rate) { 1 } else { -1 }
            })
            .collect();
        let s = GroupStats::from_labels(&labels, &groups);
        let mixed = s.p_w > 0 && s.p_w < s.n_w && s.p_b > 0 && s.p_b < s.n_b;
        if mixed && s.p_w * s.n_b > s.p_b * s.n_w {
            let names = (0..p).map(|j| format!("x{j}")).collect();
            let merit_idx = if merit { vec![0] } else { vec![] };
            return LabeledDataset::new(x, labels, groups, names, merit_idx).unwrap();
        }
    }
}

fn flip(y: &[i8], z: &[u8]) -> Vec<i8> {
    y.iter().zip(z).map(|(&v, &zi)| if zi == 1 { -v } else { v }).collect()
}

fn logistic_oracle(ds: &LabeledDataset, eps: f64, delta: f64) -> Option<f64> {
    let b = compute_flip_budgets(&ds.group_stats(), eps).unwrap();
    let m = merit_bounds(ds, delta).unwrap();
    enumerate_feasible_flips(ds, &b, &m)
        .unwrap()
        .map(|a| {
            let fit = fit_logistic(ds.features(), &a.y_tilde, 1e-6).unwrap();
            logistic_loss(&fit, ds.features(), &a.y_tilde).unwrap()
        })
        .reduce(f64::min)
}

fn svm_oracle(ds: &LabeledDataset, eps: f64, delta: f64, c: f64) -> Option<f64> {
    let b = compute_flip_budgets(&ds.group_stats(), eps).unwrap();
    let m = merit_bounds(ds, delta).unwrap();
    enumerate_feasible_flips(ds, &b, &m)
        .unwrap()
        .map(|a| {
            let fit = fit_svm(ds.features(), &a.y_tilde, c).unwrap();
            fit.primal_objective(ds.features(), &a.y_tilde).unwrap()
        })
        .reduce(f64::min)
}

fn oa_config() -> OaConfig {
    OaConfig { mode: LogisticMode::Oa, ..OaConfig::default() }
}

#[test]
fn oa_matches_enumeration() {
    for seed in 0..30u64 {
        let n = [8, 10, 12][seed as usize % 3];
        let p = 1 + seed as usize % 3;
        let delta = if seed % 2 == 0 { f64::INFINITY } else { 0.2 };
        let ds = instance(seed, n, p, true);
        let oracle = logistic_oracle(&ds, 0.0, delta);
        match (solve_dp_lr_oa(&ds, 0.0, delta, &oa_config()), oracle) {
            (Ok(r), Some(best)) => {
                assert_eq!(r.status, SolveStatus::Optimal, "seed {seed}");
                let got = r.assignment.objective_value;
                assert!((got - best).abs() <= 1e-4 * best.abs().max(1.0), "seed {seed}: {got} vs {best}");
                for w in r.bound_trace.windows(2) {
                    assert!(w[1].lower >= w[0].lower - 1e-9, "seed {seed}: lower bound fell");
                    assert!(w[1].upper <= w[0].upper + 1e-12, "seed {seed}: upper bound rose");
                }
            }
            (Err(FlipError::NoFeasibleFlip), None) => {}
            (r, o) => panic!("seed {seed}: solver {:?} vs oracle {o:?}", r.map(|r| r.assignment.z)),
        }
    }
}

#[test]
fn oa_with_empty_budget_is_plain_fit() {
    let ds = instance(3, 10, 2, false);
    let alpha = ds.group_stats().gap();
    let r = solve_dp_lr_oa(&ds, alpha, f64::INFINITY, &oa_config()).unwrap();
    assert_eq!(r.assignment.flips(), 0);
    let plain = fit_logistic(ds.features(), ds.labels(), 1e-6).unwrap();
    let f = logistic_loss(&plain, ds.features(), ds.labels()).unwrap();
    assert!((r.assignment.objective_value - f).abs() < 1e-12);
}

#[test]
fn merit_rows_exclude_and_oa_respects_them() {
    // Tight δ removes some assignments; the solution must be merit-feasible
    // and can only be worse than the unconstrained optimum.
    let mut checked = 0;
    for seed in 100..140u64 {
        let ds = instance(seed, 12, 2, true);
        let b = compute_flip_budgets(&ds.group_stats(), 0.0).unwrap();
        let free = merit_bounds(&ds, f64::INFINITY).unwrap();
        let tight = merit_bounds(&ds, 0.1).unwrap();
        let all = enumerate_feasible_flips(&ds, &b, &free).unwrap().count();
        let kept = enumerate_feasible_flips(&ds, &b, &tight).unwrap().count();
        if kept == 0 || kept == all {
            continue;
        }
        let r = solve_dp_lr_oa(&ds, 0.0, 0.1, &oa_config()).unwrap();
        let unconstrained = logistic_oracle(&ds, 0.0, f64::INFINITY).unwrap();
        let xbar = merit_means(&ds).unwrap()[0];
        let pos: Vec<usize> = (0..12).filter(|&i| r.assignment.y_tilde[i] > 0).collect();
        let mean = pos.iter().map(|&i| ds.features()[(i, 0)]).sum::<f64>() / pos.len() as f64;
        assert!((mean - xbar).abs() <= 0.1 + 1e-9, "seed {seed}");
        assert!(r.assignment.objective_value >= unconstrained - 1e-4 * unconstrained.max(1.0));
        let best = logistic_oracle(&ds, 0.0, 0.1).unwrap();
        assert!((r.assignment.objective_value - best).abs() <= 1e-4 * best.max(1.0), "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 3, "only {checked} instances had binding merit rows");
}

#[test]
fn exact_enum_modes_agree_with_oracle() {
    for seed in 0..10u64 {
        let ds = instance(200 + seed, 10, 2, true);
        let delta = if seed % 2 == 0 { f64::INFINITY } else { 0.3 };
        let cfg = SvmConfig { mode: SvmMode::ExactEnum, ..SvmConfig::default() };
        match (solve_dp_svm(&ds, 0.0, delta, &cfg), svm_oracle(&ds, 0.0, delta, 1.0)) {
            (Ok(r), Some(best)) => assert!((r.assignment.objective_value - best).abs() < 1e-9),
            (Err(FlipError::NoFeasibleFlip), None) => {}
            (r, o) => panic!("seed {seed}: {:?} vs {o:?}", r.map(|r| r.assignment.objective_value)),
        }
        let lr = OaConfig { mode: LogisticMode::ExactEnum, ..OaConfig::default() };
        if let (Ok(r), Some(best)) = (solve_dp_lr_oa(&ds, 0.0, delta, &lr), logistic_oracle(&ds, 0.0, delta)) {
            assert!((r.assignment.objective_value - best).abs() < 1e-12);
        }
    }
}

#[test]
fn svm_exact_enum_rejects_large_n() {
    let ds = instance(7, 22, 1, false);
    let cfg = SvmConfig { mode: SvmMode::ExactEnum, ..SvmConfig::default() };
    assert!(matches!(solve_dp_svm(&ds, 0.0, f64::INFINITY, &cfg), Err(FlipError::TooLarge { .. })));
}

#[test]
fn svm_alternating_quality_and_monotonicity() {
    let mut close = 0;
    for seed in 0..50u64 {
        let n = [12, 14, 16][seed as usize % 3];
        let ds = instance(300 + seed, n, 2, false);
        let alt = solve_dp_svm(&ds, 0.0, f64::INFINITY, &SvmConfig::default()).unwrap();
        let exact = svm_oracle(&ds, 0.0, f64::INFINITY, 1.0).unwrap();
        let got = alt.assignment.objective_value;
        assert!(got >= exact - 1e-6 * exact.max(1.0), "seed {seed}: below the optimum");
        if got <= 1.05 * exact {
            close += 1;
        }
        for w in alt.round_objectives.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-6) + 1e-9, "seed {seed}: {:?}", alt.round_objectives);
        }
    }
    assert!(close >= 45, "{close}/50 within 5%");
}

#[test]
fn svm_prefers_violated_points() {
    // ADV: x = 3 and x = 0.2 both positive. Flipping the confident point costs
    // ξ(−y) − ξ(y) = 4, flipping the marginal one about 1.2.
    let x = DMatrix::from_column_slice(4, 1, &[3.0, 0.2, -3.0, -2.5]);
    let ds = LabeledDataset::new(x, vec![1, 1, -1, -1], vec![Group::Adv, Group::Adv, Group::Dis, Group::Dis], vec!["x".into()], vec![]).unwrap();
    let b = compute_flip_budgets(&ds.group_stats(), 0.0).unwrap();
    assert_eq!((b.k_w, b.k_b), (1, 1));
    let r = solve_dp_svm(&ds, 0.0, f64::INFINITY, &SvmConfig::default()).unwrap();
    assert_eq!(r.assignment.z[0], 0);
    assert_eq!(r.assignment.z[1], 1);
}

#[test]
fn empty_budget_svm_is_plain_fit() {
    let ds = instance(11, 12, 2, false);
    let alpha = ds.group_stats().gap();
    let r = solve_dp_svm(&ds, alpha, f64::INFINITY, &SvmConfig::default()).unwrap();
    assert_eq!(r.assignment.flips(), 0);
    let plain = fit_svm(ds.features(), ds.labels(), 1.0).unwrap();
    let Model::Svm(m) = &r.model else { panic!() };
    assert!((m.objective - plain.objective).abs() < 1e-9);
}

#[test]
fn enumeration_count_is_binomial() {
    fn choose(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }
    for seed in 0..20u64 {
        let ds = instance(400 + seed, 14, 1, false);
        let s = ds.group_stats();
        let b = compute_flip_budgets(&s, 0.0).unwrap();
        let m = merit_bounds(&ds, f64::INFINITY).unwrap();
        let count = enumerate_feasible_flips(&ds, &b, &m).unwrap().count();
        assert_eq!(count, choose(s.p_w, b.k_w) * choose(s.n_b - s.p_b, b.k_b));
    }
}

#[test]
fn synthetic_parity_within_ceiling_slack() {
    let (ds, _) = generate_synthetic(2000, 3, 0.3, 0.5, 5).unwrap();
    let ds = ds.with_merit_columns(&["x1".to_string()]).unwrap();
    let cfg = DebiasConfig::default();
    let r = debias(&ds, 0.01, 0.05, ModelKind::Logistic, &cfg).unwrap();
    let s = ds.group_stats();
    let slack = 1.0 / s.n_w as f64 + 1.0 / s.n_b as f64;
    let recomputed = GroupStats::from_labels(&r.assignment.y_tilde, ds.groups()).gap().abs();
    assert!((recomputed - r.achieved_parity).abs() < 1e-12);
    assert!(r.achieved_parity <= 0.01 + slack, "{}", r.achieved_parity);
    assert!(r.merit_deltas[0].abs() <= 0.05 + 1e-9);
    // deltas recomputed independently from the standardized features
    let (z, _) = standardize_by_group(&ds).unwrap();
    let mean = |labels: &[i8]| {
        let pos: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] > 0).collect();
        pos.iter().map(|&i| z.features()[(i, 0)]).sum::<f64>() / pos.len() as f64
    };
    let d = mean(&r.assignment.y_tilde) - mean(ds.labels());
    assert!((d - r.merit_deltas[0]).abs() < 1e-10);
    let pod = price_of_diversity(&ds, &r).unwrap();
    assert!((pod[0] - r.merit_deltas[0]).abs() < 1e-10);
}

#[test]
fn zero_delta_pins_merit_means() {
    for seed in 0..5u64 {
        let ds = instance(500 + seed, 14, 2, true);
        match solve_dp_lr_oa(&ds, 0.0, 0.0, &oa_config()) {
            Ok(r) => assert!(r.merit_deltas[0].abs() <= 1e-9, "{:?}", r.merit_deltas),
            Err(FlipError::NoFeasibleFlip) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn price_of_diversity_hand_example() {
    // merit values 1..6; ADV rows 0-2 (labels + + −), DIS rows 3-5 (+ − −).
    let x = DMatrix::from_column_slice(6, 1, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let ds = LabeledDataset::new(
        x,
        vec![1, 1, -1, 1, -1, -1],
        vec![Group::Adv, Group::Adv, Group::Adv, Group::Dis, Group::Dis, Group::Dis],
        vec!["m".into()],
        vec![0],
    )
    .unwrap();
    let cfg = OaConfig { mode: LogisticMode::ExactEnum, ..OaConfig::default() };
    let r = solve_dp_lr_oa(&ds, 0.0, f64::INFINITY, &cfg).unwrap();
    assert_eq!(r.assignment.flips(), 2);
    let pos: Vec<f64> = (0..6).filter(|&i| r.assignment.y_tilde[i] > 0).map(|i| (i + 1) as f64).collect();
    let expected = pos.iter().sum::<f64>() / pos.len() as f64 - (1.0 + 2.0 + 4.0) / 3.0;
    let pod = price_of_diversity(&ds, &r).unwrap();
    assert!((pod[0] - expected).abs() < 1e-12);
    // zero flips give a zero vector
    let none = solve_dp_lr_oa(&ds, 0.9, f64::INFINITY, &cfg).unwrap();
    assert_eq!(price_of_diversity(&ds, &none).unwrap(), vec![0.0]);
}

#[test]
fn sweep_rows_follow_grid_and_bounds() {
    let (ds, _) = generate_synthetic(300, 2, 0.3, 0.5, 9).unwrap();
    let ds = ds.with_merit_columns(&["x1".to_string(), "x2".to_string()]).unwrap();
    let alpha = ds.group_stats().gap();
    let grid = default_epsilon_grid(alpha);
    let cfg = DebiasConfig::default();
    let rows = tradeoff_sweep(&ds, &grid, 0.1, ModelKind::Logistic, &cfg).unwrap();
    assert_eq!(rows.len(), grid.len() * 2);
    for (k, eps) in grid.iter().enumerate() {
        assert_eq!(rows[2 * k].epsilon, *eps);
        assert_eq!(rows[2 * k].merit_column.as_deref(), Some("x1"));
        assert_eq!(rows[2 * k + 1].merit_column.as_deref(), Some("x2"));
    }
    for r in &rows {
        if let Some(d) = r.delta_change {
            assert!(d.abs() <= 0.1 + 1e-9, "{r:?}");
        }
    }
    // each row matches a standalone debias
    let single = debias(&ds, grid[3], 0.1, ModelKind::Logistic, &cfg).unwrap();
    assert_eq!(rows[6].delta_change, Some(single.merit_deltas[0]));
    let at_alpha = tradeoff_sweep(&ds, &[alpha], 0.1, ModelKind::Logistic, &cfg).unwrap();
    assert!(at_alpha.iter().all(|r| r.delta_change == Some(0.0)));
    assert!(tradeoff_sweep(&ds, &[0.2, 0.1, 0.15], 0.1, ModelKind::Logistic, &cfg).is_err());
}

#[test]
fn sweep_records_failures() {
    let ds = instance(42, 12, 1, false);
    let cfg = DebiasConfig::default();
    let rows = tradeoff_sweep(&ds, &[0.0, 2.0], f64::INFINITY, ModelKind::Svm, &cfg).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(!rows[0].status.starts_with("ERROR"));
    assert!(rows[1].status.starts_with("ERROR"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn budget_identities(n_w in 1usize..500, n_b in 1usize..500, fw in 0.0f64..1.0, fb in 0.0f64..1.0, t in 0.0f64..1.0) {
        let (mut n_w, mut n_b) = (n_w, n_b);
        let mut p_w = (fw * n_w as f64) as usize;
        let mut p_b = (fb * n_b as f64) as usize;
        if p_w * n_b < p_b * n_w {
            std::mem::swap(&mut n_w, &mut n_b);
            std::mem::swap(&mut p_w, &mut p_b);
        }
        let s = GroupStats::new(n_w, n_b, p_w, p_b);
        let gap = s.gap();
        let eps = t * gap;
        let b = compute_flip_budgets_with(&s, eps, true).unwrap();
        let (r1, r2) = b.identity_residuals();
        prop_assert!(r1.abs() <= 1e-12, "{r1}");
        prop_assert!(r2.abs() <= 1e-12 * (n_w + n_b) as f64, "{r2}");
        prop_assert_eq!(b.k_w, b.k_b);
        prop_assert!(b.k_w <= p_w && b.k_b <= n_b - p_b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Directional flips of exactly k per group land the gap in ε ± (1/n_w + 1/n_b).
    #[test]
    fn directional_parity_band(seed in 0u64..10_000, eps_frac in 0.0f64..1.0) {
        let ds = instance(seed, 40, 1, false);
        let s = ds.group_stats();
        let eps = eps_frac * s.gap();
        let r = solve_dp_svm(&ds, eps, f64::INFINITY, &SvmConfig::default()).unwrap();
        let slack = 1.0 / s.n_w as f64 + 1.0 / s.n_b as f64;
        let g = GroupStats::from_labels(&flip(ds.labels(), &r.assignment.z), ds.groups()).gap();
        prop_assert!(g >= eps - slack - 1e-12 && g <= eps + slack + 1e-12, "{g} vs {eps}");
        let adv = (0..40).filter(|&i| ds.groups()[i] == Group::Adv && r.assignment.z[i] == 1).count();
        prop_assert_eq!(adv, r.budget.k_w);
        prop_assert_eq!(r.assignment.flips() - adv, r.budget.k_b);
    }
}
