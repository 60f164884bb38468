use std::io::Write;
use std::path::Path;

use fairflip_core::classifiers::{auc, predict, Model, SPEC_VERSION};
use fairflip_core::data::{alpha_bias, generate_synthetic, parity_gap, write_csv, DataError, Group, LabeledDataset};
use fairflip_core::explain::{
    cross_validate_depth, fit_tree, flip_classes, optimal_depth2, render, stratified_split, summarize,
    tree_features, FlipClass,
};
use fairflip_core::flip::{
    debias as run_debias, default_epsilon_grid, tradeoff_sweep, write_flip_report, DebiasConfig, LogisticMode,
    ModelKind, SolveStatus, SvmMode,
};
use serde_json::{json, Value};

use crate::output::{read_json, write_atomic, write_json, CliError};
use crate::schema::{load, resolve, Loaded, Resolved, SchemaArgs};
use crate::{
    Command, DebiasArgs, EvaluateArgs, ExplainArgs, MeasureArgs, ModeArg, ModelArg, SolverArgs, SynthArgs,
    TradeoffArgs,
};

macro_rules! info {
    ($v:expr, $($arg:tt)*) => {
        if $v > 0 {
            eprintln!($($arg)*);
        }
    };
}

fn echo_config(dir: &Path, command: &Command, schema: Option<&Resolved>) -> Result<(), CliError> {
    write_json(
        &dir.join("config.json"),
        &json!({
            "spec_version": SPEC_VERSION,
            "command": command,
            "resolved_schema": schema,
        }),
    )
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn status_name(s: SolveStatus) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn check_unit(name: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must lie in [0, 1], got {v}")))
    }
}

fn solver_config(s: &SolverArgs) -> Result<(ModelKind, DebiasConfig, f64), CliError> {
    let delta = s.delta.unwrap_or(f64::INFINITY);
    if delta.is_nan() || delta < 0.0 {
        return Err(CliError::Usage(format!("--delta must be non-negative, got {delta}")));
    }
    if !(s.c > 0.0 && s.c.is_finite()) {
        return Err(CliError::Usage(format!("--c must be positive, got {}", s.c)));
    }
    if !(s.lambda >= 0.0 && s.lambda.is_finite()) {
        return Err(CliError::Usage(format!("--lambda must be non-negative, got {}", s.lambda)));
    }
    let mut cfg = DebiasConfig { directional: !s.no_directional, ..DebiasConfig::default() };
    cfg.logistic.ridge = s.lambda;
    cfg.logistic.restarts = s.restarts;
    cfg.svm.c = s.c;
    cfg.svm.restarts = s.restarts;
    let kind = match s.model {
        ModelArg::Logistic => {
            cfg.logistic.mode = match s.mode {
                ModeArg::Auto => LogisticMode::Auto,
                ModeArg::Oa => LogisticMode::Oa,
                ModeArg::Alternating => LogisticMode::Alternating,
                ModeArg::ExactEnum => LogisticMode::ExactEnum,
            };
            ModelKind::Logistic
        }
        ModelArg::Svm => {
            cfg.svm.mode = match s.mode {
                ModeArg::Auto | ModeArg::Alternating => SvmMode::Alternating,
                ModeArg::ExactEnum => SvmMode::ExactEnum,
                ModeArg::Oa => return Err(CliError::Usage("--mode oa applies to logistic models only".into())),
            };
            ModelKind::Svm
        }
    };
    Ok((kind, cfg, delta))
}

fn open(args: &SchemaArgs) -> Result<(Resolved, Loaded), CliError> {
    let schema = resolve(args)?;
    let loaded = load(&schema, &args.input)?;
    Ok((schema, loaded))
}

fn bias_json(loaded: &Loaded) -> Value {
    let ds = &loaded.dataset;
    let report = alpha_bias(ds);
    let meta = ds.meta();
    json!({
        "spec_version": SPEC_VERSION,
        "alpha": report.alpha,
        "gap_direction": report.gap_direction,
        "group_column": meta.group_column,
        "adv_value": meta.adv_value,
        "dis_value": meta.dis_value,
        "group_stats": report.group_stats,
        "rows": ds.len(),
        "dropped_rows": ds.dropped_rows(),
        "excluded_rows": ds.excluded_rows(),
        "filtered_rows": loaded.filtered_rows,
    })
}

pub fn measure(a: &MeasureArgs, command: &Command) -> Result<(), CliError> {
    let (schema, loaded) = open(&a.schema)?;
    let report = bias_json(&loaded);
    if let Some(dir) = &a.out_dir {
        write_json(&dir.join("bias.json"), &report)?;
        echo_config(dir, command, Some(&schema))?;
    }
    emit(&format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")));
    Ok(())
}

pub fn debias(a: &DebiasArgs, command: &Command, verbose: u8) -> Result<(), CliError> {
    check_unit("--epsilon", a.epsilon)?;
    let (kind, cfg, delta) = solver_config(&a.solver)?;
    let (schema, loaded) = open(&a.schema)?;
    let ds = &loaded.dataset;
    info!(verbose, "loaded {} rows, alpha {:.4}", ds.len(), alpha_bias(ds).alpha);
    let r = run_debias(ds, a.epsilon, delta, kind, &cfg)?;
    info!(verbose, "{} mode, status {}, {} flips", r.mode, status_name(r.status), r.assignment.flips());

    let mut result = r.to_json()?;
    result["alpha"] = json!(alpha_bias(ds).alpha);
    result["rows"] = json!(ds.len());
    write_json(&a.out_dir.join("model.json"), &r.model.to_json()?)?;
    write_json(&a.out_dir.join("result.json"), &result)?;
    let mut csv = Vec::new();
    write_flip_report(ds, &r, &mut csv)?;
    write_atomic(&a.out_dir.join("flips.csv"), &csv)?;
    echo_config(&a.out_dir, command, Some(&schema))?;
    match r.status {
        SolveStatus::GapLimit | SolveStatus::RoundLimit => Err(CliError::NotConverged(format!(
            "solver stopped at {} after {} iterations; outputs hold the best assignment found",
            status_name(r.status),
            r.iterations
        ))),
        _ => Ok(()),
    }
}

fn opt_cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn tradeoff(a: &TradeoffArgs, command: &Command, verbose: u8) -> Result<(), CliError> {
    for &e in &a.grid {
        check_unit("grid epsilon", e)?;
    }
    let (kind, cfg, delta) = solver_config(&a.solver)?;
    let (schema, loaded) = open(&a.schema)?;
    let ds = &loaded.dataset;
    let grid = if a.grid.is_empty() { default_epsilon_grid(alpha_bias(ds).alpha) } else { a.grid.clone() };
    info!(verbose, "sweeping {} epsilon values", grid.len());
    let rows = tradeoff_sweep(ds, &grid, delta, kind, &cfg)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Data(DataError::from(e));
    w.write_record(["epsilon", "column", "delta_change", "achieved_parity", "flips", "objective_value", "status"])
        .map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.epsilon.to_string(),
            opt_cell(&r.merit_column),
            opt_cell(&r.delta_change),
            opt_cell(&r.achieved_parity),
            opt_cell(&r.flips),
            opt_cell(&r.objective_value),
            r.status.clone(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Failed(e.to_string()))?;
    write_atomic(&a.out_dir.join("tradeoff.csv"), &bytes)?;
    echo_config(&a.out_dir, command, Some(&schema))?;
    let limited = [SolveStatus::GapLimit, SolveStatus::RoundLimit].map(status_name);
    let stopped = rows.iter().filter(|r| limited.contains(&r.status)).count();
    if stopped > 0 {
        return Err(CliError::NotConverged(format!("{stopped} sweep rows stopped at an iteration limit")));
    }
    Ok(())
}

/// Reads original and flipped labels from a flip report and checks them
/// against the dataset.
fn read_flip_classes(path: &Path, ds: &LabeledDataset) -> Result<Vec<FlipClass>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(DataError::from)?;
    let headers = r.headers().map_err(DataError::from)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(DataError::Schema(format!("flip report lacks column '{name}'"))))
    };
    let (orig, new) = (col("original_label")?, col("new_label")?);
    let (mut y, mut yt) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(DataError::from)?;
        let parse = |c: usize| -> Result<i8, CliError> {
            let s = rec.get(c).unwrap_or("");
            match s.trim() {
                "1" => Ok(1),
                "-1" => Ok(-1),
                _ => Err(CliError::Data(DataError::Invalid(format!("flip report label '{s}' is not ±1")))),
            }
        };
        y.push(parse(orig)?);
        yt.push(parse(new)?);
    }
    if y.as_slice() != ds.labels() {
        return Err(CliError::Data(DataError::Invalid(format!(
            "flip report ({} rows) does not match the dataset ({} rows) label for label",
            y.len(),
            ds.len()
        ))));
    }
    Ok(flip_classes(&y, &yt)?)
}

pub fn explain(a: &ExplainArgs, command: &Command, verbose: u8) -> Result<(), CliError> {
    if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
        return Err(CliError::Usage(format!("--test-fraction must lie in (0, 1), got {}", a.test_fraction)));
    }
    if a.folds < 2 {
        return Err(CliError::Usage("--folds must be at least 2".into()));
    }
    let (schema, loaded) = open(&a.schema)?;
    let ds = &loaded.dataset;
    let classes = read_flip_classes(&a.flips, ds)?;
    let (x, names) = tree_features(ds);
    let (train, test) = stratified_split(&classes, a.test_fraction, a.seed);
    let xt = x.select_rows(&train);
    let ct: Vec<FlipClass> = train.iter().map(|&i| classes[i]).collect();

    let mut cv = None;
    let (tree, chosen_by) = if a.optimal {
        (optimal_depth2(&xt, &ct, a.min_leaf)?, "optimal")
    } else if let Some(d) = a.depth {
        (fit_tree(&xt, &ct, d, a.min_leaf)?, "flag")
    } else {
        let report = cross_validate_depth(&xt, &ct, a.folds, a.seed, a.min_leaf)?;
        info!(verbose, "cv accuracies {:?}, depth {}", report.accuracies, report.chosen_depth);
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        let t = fit_tree(&xt, &ct, report.chosen_depth, a.min_leaf)?;
        cv = Some(report);
        (t, "cv")
    };
    let summary = summarize(ds, &tree, &x, &classes, train.len(), &test)?;
    let (text, tree_json) = render(&tree, &names);

    write_json(&a.out_dir.join("tree.json"), &tree_json)?;
    write_atomic(&a.out_dir.join("tree.txt"), text.as_bytes())?;
    if let Some(report) = &cv {
        let mut v = serde_json::to_value(report).expect("serializable");
        v["spec_version"] = json!(SPEC_VERSION);
        write_json(&a.out_dir.join("cv.json"), &v)?;
    }
    let mut s = serde_json::to_value(&summary).expect("serializable");
    s["spec_version"] = json!(SPEC_VERSION);
    s["depth"] = json!(tree.depth());
    s["leaves"] = json!(tree.num_leaves());
    s["chosen_by"] = json!(chosen_by);
    write_json(&a.out_dir.join("summary.json"), &s)?;
    echo_config(&a.out_dir, command, Some(&schema))?;
    emit(&text);
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs, command: &Command) -> Result<(), CliError> {
    let model = Model::from_json(&read_json(&a.model)?)?;
    let params = model
        .standardization()
        .ok_or_else(|| CliError::Failed("model file has no standardization".into()))?
        .clone();
    // group roles default to the ones the model was trained with
    let mut sargs = a.schema.clone();
    if sargs.group_col.is_none() {
        sargs.group_col = Some(params.meta.group_column.clone());
    }
    if sargs.groups.is_empty() {
        sargs.groups = vec![params.meta.adv_value.clone(), params.meta.dis_value.clone()];
    }
    let (schema, loaded) = open(&sargs)?;
    let ds = &loaded.dataset;
    let idx: Vec<usize> = params
        .columns
        .iter()
        .map(|c| {
            ds.column_index(c)
                .ok_or_else(|| CliError::Data(DataError::Schema(format!("model column '{c}' missing from input"))))
        })
        .collect::<Result<_, _>>()?;
    let raw = ds.raw_features();
    let mut scores = Vec::with_capacity(ds.len());
    let mut preds = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let row: Vec<f64> = idx.iter().map(|&j| raw[(i, j)]).collect();
        let (s, p) = predict(&model, &row, ds.meta().group_value(ds.groups()[i]))?;
        scores.push(s);
        preds.push(p);
    }
    let y = ds.labels();
    let count = |want_y: i8, want_p: i8| y.iter().zip(&preds).filter(|(&a, &b)| a == want_y && b == want_p).count();
    let (tp, fp, tn, fneg) = (count(1, 1), count(-1, 1), count(-1, -1), count(1, -1));
    let auc_value = match auc(&scores, y) {
        Ok(v) => json!(v),
        Err(e) => {
            eprintln!("warning: {e}");
            json!(null)
        }
    };
    let rate = |g: Group| {
        let rows: Vec<usize> = (0..ds.len()).filter(|&i| ds.groups()[i] == g).collect();
        rows.iter().filter(|&&i| preds[i] > 0).count() as f64 / rows.len() as f64
    };
    let metrics = json!({
        "spec_version": SPEC_VERSION,
        "kind": model.kind(),
        "rows": ds.len(),
        "auc": auc_value,
        "accuracy": (tp + tn) as f64 / ds.len() as f64,
        "parity_gap": parity_gap(&preds, ds.groups())?,
        "positive_rate": { "adv": rate(Group::Adv), "dis": rate(Group::Dis) },
        "confusion": { "tp": tp, "fp": fp, "tn": tn, "fn": fneg },
    });
    if let Some(dir) = &a.out_dir {
        write_json(&dir.join("metrics.json"), &metrics)?;
        echo_config(dir, command, Some(&schema))?;
    }
    emit(&format!("{}\n", serde_json::to_string_pretty(&metrics).expect("serializable")));
    Ok(())
}

pub fn synth(a: &SynthArgs, command: &Command) -> Result<(), CliError> {
    let (ds, truth) = generate_synthetic(a.n, a.p, a.alpha, a.group_fraction, a.seed).map_err(|e| match e {
        DataError::Invalid(m) => CliError::Usage(m),
        other => CliError::Data(other),
    })?;
    let mut csv = Vec::new();
    write_csv(&ds, &mut csv)?;
    write_atomic(&a.out_dir.join("data.csv"), &csv)?;
    let meta = ds.meta();
    let mut t = serde_json::to_value(&truth).expect("serializable");
    t["spec_version"] = json!(SPEC_VERSION);
    t["schema"] = json!({
        "group_column": meta.group_column,
        "group_values": [meta.adv_value, meta.dis_value],
        "label_column": meta.label_column,
        "positive_value": meta.positive_value,
    });
    write_json(&a.out_dir.join("truth.json"), &t)?;
    echo_config(&a.out_dir, command, None)?;
    Ok(())
}
