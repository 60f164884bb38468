//! Three-class decision trees over flip outcomes: which rows were flipped up,
//! flipped down, or left alone, explained by axis-aligned rules.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::classifiers::SPEC_VERSION;
use crate::data::{merit_means_for, standardize_by_group, DataError, Group, GroupStats, LabeledDataset};
use crate::flip::DebiasResult;

pub const MAX_DEPTH: usize = 5;
pub const DEFAULT_MIN_LEAF: usize = 5;
/// Row limit for [`optimal_depth2`].
pub const OPTIMAL_DEPTH2_LIMIT: usize = 2000;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("need at least {need} rows, got {n}")]
    TooFewRows { n: usize, need: usize },
    #[error("depth must be between 1 and {MAX_DEPTH}, got {0}")]
    InvalidDepth(usize),
    #[error("bad tree file: {0}")]
    Format(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FlipClass {
    /// Label changed to +1.
    Positive,
    /// Label changed to −1.
    Negative,
    NoChange,
}

impl FlipClass {
    pub const ALL: [FlipClass; 3] = [FlipClass::Positive, FlipClass::Negative, FlipClass::NoChange];

    /// Position in count arrays: [positive, negative, no_change].
    pub fn index(self) -> usize {
        match self {
            FlipClass::Positive => 0,
            FlipClass::Negative => 1,
            FlipClass::NoChange => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FlipClass::Positive => "POSITIVE",
            FlipClass::Negative => "NEGATIVE",
            FlipClass::NoChange => "NO_CHANGE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn from_labels(y: i8, y_tilde: i8) -> Self {
        match (y, y_tilde) {
            (-1, 1) => FlipClass::Positive,
            (1, -1) => FlipClass::Negative,
            _ => FlipClass::NoChange,
        }
    }

    /// The label a row ends up with when this class is applied to `y`.
    pub fn apply(self, y: i8) -> i8 {
        match self {
            FlipClass::Positive => 1,
            FlipClass::Negative => -1,
            FlipClass::NoChange => y,
        }
    }
}

pub fn flip_classes(y: &[i8], y_tilde: &[i8]) -> Result<Vec<FlipClass>, ExplainError> {
    if y.len() != y_tilde.len() {
        return Err(ExplainError::LengthMismatch(format!(
            "{} labels but {} flipped labels",
            y.len(),
            y_tilde.len()
        )));
    }
    Ok(y.iter().zip(y_tilde).map(|(&a, &b)| FlipClass::from_labels(a, b)).collect())
}

pub fn build_flip_labels(ds: &LabeledDataset, result: &DebiasResult) -> Result<Vec<FlipClass>, ExplainError> {
    flip_classes(ds.labels(), &result.assignment.y_tilde)
}

/// Raw features plus a 0/1 indicator for the disadvantaged group, with names.
pub fn tree_features(ds: &LabeledDataset) -> (DMatrix<f64>, Vec<String>) {
    let raw = ds.raw_features();
    let p = raw.ncols();
    let x = DMatrix::from_fn(ds.len(), p + 1, |i, j| {
        if j < p {
            raw[(i, j)]
        } else if ds.groups()[i] == Group::Dis {
            1.0
        } else {
            0.0
        }
    });
    let meta = ds.meta();
    let mut names = ds.column_names().to_vec();
    let group_col = if meta.group_column.is_empty() { "group" } else { meta.group_column.as_str() };
    names.push(format!("{group_col}={}", meta.dis_value));
    (x, names)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Rows with x[feature] < threshold go left.
    Split {
        feature: usize,
        threshold: f64,
        counts: [usize; 3],
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf { class: FlipClass, counts: [usize; 3] },
}

impl Node {
    pub fn counts(&self) -> [usize; 3] {
        match self {
            Node::Split { counts, .. } | Node::Leaf { counts, .. } => *counts,
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a Node>) {
        match self {
            Node::Leaf { .. } => out.push(self),
            Node::Split { left, right, .. } => {
                left.leaves(out);
                right.leaves(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    pub root: Node,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl DecisionTree {
    pub fn predict_row(&self, x: &[f64]) -> FlipClass {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class, .. } => return *class,
                Node::Split { feature, threshold, left, right, .. } => {
                    node = if x[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<FlipClass> {
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                self.predict_row(&row)
            })
            .collect()
    }

    pub fn accuracy(&self, x: &DMatrix<f64>, classes: &[FlipClass]) -> f64 {
        accuracy(&self.predict(x), classes)
    }

    /// Depth of the fitted tree (0 for a single leaf).
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn num_leaves(&self) -> usize {
        let mut v = Vec::new();
        self.root.leaves(&mut v);
        v.len()
    }

    /// Row-weighted Gini impurity of the training leaves.
    pub fn training_impurity(&self) -> f64 {
        let mut v = Vec::new();
        self.root.leaves(&mut v);
        let n: usize = self.root.counts().iter().sum();
        v.iter()
            .map(|l| {
                let c = l.counts();
                c.iter().sum::<usize>() as f64 * gini(&c)
            })
            .sum::<f64>()
            / n.max(1) as f64
    }
}

fn accuracy(pred: &[FlipClass], truth: &[FlipClass]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

pub fn gini(counts: &[usize; 3]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Majority class; ties go to NO_CHANGE, then POSITIVE.
pub fn majority(counts: &[usize; 3]) -> FlipClass {
    let mut best = FlipClass::NoChange;
    for c in [FlipClass::Positive, FlipClass::Negative] {
        if counts[c.index()] > counts[best.index()] {
            best = c;
        }
    }
    best
}

fn count(classes: &[FlipClass], rows: &[usize]) -> [usize; 3] {
    let mut c = [0; 3];
    for &i in rows {
        c[classes[i].index()] += 1;
    }
    c
}

/// Midpoint strictly above `a` and at most `b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m > a { m } else { b }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Best split of `rows` by weighted Gini, or by misclassification count when
/// `by_errors` is set. Ties go to the lower feature, then the lower threshold.
fn best_split(
    x: &DMatrix<f64>,
    classes: &[FlipClass],
    rows: &[usize],
    min_leaf: usize,
    by_errors: bool,
) -> Option<Candidate> {
    let total = count(classes, rows);
    let n = rows.len();
    if n < 2 * min_leaf {
        return None;
    }
    let score = |l: &[usize; 3], r: &[usize; 3]| -> f64 {
        if by_errors {
            let err = |c: &[usize; 3]| c.iter().sum::<usize>() - c[majority(c).index()];
            (err(l) + err(r)) as f64
        } else {
            let (nl, nr) = (l.iter().sum::<usize>() as f64, r.iter().sum::<usize>() as f64);
            (nl * gini(l) + nr * gini(r)) / (nl + nr)
        }
    };
    let mut best: Option<Candidate> = None;
    let mut order = rows.to_vec();
    for j in 0..x.ncols() {
        order.sort_by(|&a, &b| x[(a, j)].total_cmp(&x[(b, j)]).then(a.cmp(&b)));
        let mut left = [0usize; 3];
        for k in 0..n - 1 {
            left[classes[order[k]].index()] += 1;
            let (a, b) = (x[(order[k], j)], x[(order[k + 1], j)]);
            if a == b || k + 1 < min_leaf || n - k - 1 < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
            let s = score(&left, &right);
            if best.as_ref().is_none_or(|c| s < c.score - 1e-12) {
                best = Some(Candidate { feature: j, threshold: midpoint(a, b), score: s });
            }
        }
    }
    best
}

fn grow(
    x: &DMatrix<f64>,
    classes: &[FlipClass],
    rows: &[usize],
    depth_left: usize,
    min_leaf: usize,
) -> Node {
    let counts = count(classes, rows);
    let leaf = Node::Leaf { class: majority(&counts), counts };
    if depth_left == 0 {
        return leaf;
    }
    let parent = gini(&counts);
    let Some(c) = best_split(x, classes, rows, min_leaf, false) else { return leaf };
    if c.score >= parent - 1e-12 {
        return leaf;
    }
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[(i, c.feature)] < c.threshold);
    Node::Split {
        feature: c.feature,
        threshold: c.threshold,
        counts,
        left: Box::new(grow(x, classes, &l, depth_left - 1, min_leaf)),
        right: Box::new(grow(x, classes, &r, depth_left - 1, min_leaf)),
    }
}

/// Greedy Gini tree. Splits are made on midpoints between consecutive
/// distinct values and only when both children keep `min_leaf` rows and the
/// weighted impurity strictly drops.
pub fn fit_tree(
    x: &DMatrix<f64>,
    classes: &[FlipClass],
    max_depth: usize,
    min_leaf: usize,
) -> Result<DecisionTree, ExplainError> {
    if x.nrows() != classes.len() {
        return Err(ExplainError::LengthMismatch(format!(
            "{} rows but {} classes",
            x.nrows(),
            classes.len()
        )));
    }
    if !(1..=MAX_DEPTH).contains(&max_depth) {
        return Err(ExplainError::InvalidDepth(max_depth));
    }
    let min_leaf = min_leaf.max(1);
    if x.nrows() < 2 * min_leaf {
        return Err(ExplainError::TooFewRows { n: x.nrows(), need: 2 * min_leaf });
    }
    let rows: Vec<usize> = (0..x.nrows()).collect();
    Ok(DecisionTree { root: grow(x, classes, &rows, max_depth, min_leaf), max_depth, min_leaf })
}

/// Depth-2 tree minimizing training misclassifications by exhaustive search
/// over the root split and the best split (or leaf) of each child.
pub fn optimal_depth2(
    x: &DMatrix<f64>,
    classes: &[FlipClass],
    min_leaf: usize,
) -> Result<DecisionTree, ExplainError> {
    if x.nrows() != classes.len() {
        return Err(ExplainError::LengthMismatch(format!(
            "{} rows but {} classes",
            x.nrows(),
            classes.len()
        )));
    }
    let n = x.nrows();
    if n > OPTIMAL_DEPTH2_LIMIT {
        return Err(ExplainError::LengthMismatch(format!(
            "exhaustive depth-2 search is limited to {OPTIMAL_DEPTH2_LIMIT} rows, got {n}"
        )));
    }
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return Err(ExplainError::TooFewRows { n, need: 2 * min_leaf });
    }
    let all: Vec<usize> = (0..n).collect();
    let errors = |c: &[usize; 3]| c.iter().sum::<usize>() - c[majority(c).index()];
    let subtree = |rows: &[usize]| -> (usize, Node) {
        let counts = count(classes, rows);
        let leaf_err = errors(&counts);
        let leaf = Node::Leaf { class: majority(&counts), counts };
        match best_split(x, classes, rows, min_leaf, true) {
            Some(c) if (c.score as usize) < leaf_err => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| x[(i, c.feature)] < c.threshold);
                let (lc, rc) = (count(classes, &l), count(classes, &r));
                let node = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    counts,
                    left: Box::new(Node::Leaf { class: majority(&lc), counts: lc }),
                    right: Box::new(Node::Leaf { class: majority(&rc), counts: rc }),
                };
                (c.score as usize, node)
            }
            _ => (leaf_err, leaf),
        }
    };
    let root_counts = count(classes, &all);
    let mut best = (errors(&root_counts), Node::Leaf { class: majority(&root_counts), counts: root_counts });
    let mut order = all.clone();
    for j in 0..x.ncols() {
        order.sort_by(|&a, &b| x[(a, j)].total_cmp(&x[(b, j)]).then(a.cmp(&b)));
        for k in min_leaf.saturating_sub(1)..n.saturating_sub(min_leaf) {
            let (a, b) = (x[(order[k], j)], x[(order[k + 1], j)]);
            if a == b {
                continue;
            }
            let (l, r) = order.split_at(k + 1);
            let ((le, ln), (re, rn)) = (subtree(l), subtree(r));
            if le + re < best.0 {
                let t = midpoint(a, b);
                best = (
                    le + re,
                    Node::Split {
                        feature: j,
                        threshold: t,
                        counts: root_counts,
                        left: Box::new(ln),
                        right: Box::new(rn),
                    },
                );
            }
        }
    }
    Ok(DecisionTree { root: best.1, max_depth: 2, min_leaf })
}

/// Mean k-fold accuracy per depth 1..=5 and the chosen depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    /// Entry d − 1 holds the mean accuracy at depth d.
    pub accuracies: Vec<f64>,
    pub chosen_depth: usize,
    pub warnings: Vec<String>,
}

/// Stratified fold assignment: each class is shuffled with the seeded RNG and
/// dealt round-robin, continuing where the previous class stopped.
pub fn stratified_folds(classes: &[FlipClass], k: usize, seed: u64) -> (Vec<usize>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; classes.len()];
    let mut warnings = Vec::new();
    let mut next = 0;
    for c in FlipClass::ALL {
        let mut members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == c).collect();
        if !members.is_empty() && members.len() < k {
            warnings.push(format!(
                "class {} has {} rows, fewer than {k} folds",
                c.as_str(),
                members.len()
            ));
        }
        members.shuffle(&mut rng);
        for i in members {
            fold[i] = next % k;
            next += 1;
        }
    }
    (fold, warnings)
}

pub fn cross_validate_depth(
    x: &DMatrix<f64>,
    classes: &[FlipClass],
    k: usize,
    seed: u64,
    min_leaf: usize,
) -> Result<CvReport, ExplainError> {
    if x.nrows() != classes.len() {
        return Err(ExplainError::LengthMismatch(format!(
            "{} rows but {} classes",
            x.nrows(),
            classes.len()
        )));
    }
    let k = k.max(2);
    if x.nrows() < k * min_leaf.max(1) {
        return Err(ExplainError::TooFewRows { n: x.nrows(), need: k * min_leaf.max(1) });
    }
    let (fold, warnings) = stratified_folds(classes, k, seed);
    let mut sums = vec![0.0; MAX_DEPTH];
    for f in 0..k {
        let train: Vec<usize> = (0..x.nrows()).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..x.nrows()).filter(|&i| fold[i] == f).collect();
        let xt = x.select_rows(&train);
        let ct: Vec<FlipClass> = train.iter().map(|&i| classes[i]).collect();
        let xv = x.select_rows(&test);
        let cv: Vec<FlipClass> = test.iter().map(|&i| classes[i]).collect();
        for d in 1..=MAX_DEPTH {
            let tree = fit_tree(&xt, &ct, d, min_leaf)?;
            sums[d - 1] += tree.accuracy(&xv, &cv);
        }
    }
    let accuracies: Vec<f64> = sums.iter().map(|s| s / k as f64).collect();
    let mut chosen = 1;
    for d in 2..=MAX_DEPTH {
        if accuracies[d - 1] > accuracies[chosen - 1] + 1e-12 {
            chosen = d;
        }
    }
    Ok(CvReport { folds: k, seed, accuracies, chosen_depth: chosen, warnings })
}

/// Stratified train/test split; returns (train, test) row indices, sorted.
pub fn stratified_split(classes: &[FlipClass], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in FlipClass::ALL {
        let mut members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == c).collect();
        members.shuffle(&mut rng);
        let cut = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..cut]);
        train.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Held-out accuracy of a tree, plus the parity gap and the largest merit
/// drift obtained by applying its predicted flips to every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainSummary {
    pub accuracy: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub train_rows: usize,
    pub test_rows: usize,
}

pub fn summarize(
    ds: &LabeledDataset,
    tree: &DecisionTree,
    x: &DMatrix<f64>,
    classes: &[FlipClass],
    train_rows: usize,
    test: &[usize],
) -> Result<ExplainSummary, ExplainError> {
    if x.nrows() != ds.len() || classes.len() != ds.len() {
        return Err(ExplainError::LengthMismatch("tree features do not match the dataset".into()));
    }
    let pred = tree.predict(x);
    let tp: Vec<FlipClass> = test.iter().map(|&i| pred[i]).collect();
    let tc: Vec<FlipClass> = test.iter().map(|&i| classes[i]).collect();
    let labels: Vec<i8> = pred.iter().zip(ds.labels()).map(|(c, &y)| c.apply(y)).collect();
    let epsilon = GroupStats::from_labels(&labels, ds.groups()).gap().abs();
    let delta = if ds.merit_columns().is_empty() {
        None
    } else {
        let zx = if ds.is_standardized() {
            ds.features().clone()
        } else {
            standardize_by_group(ds)?.0.features().clone()
        };
        let before = merit_means_for(&zx, ds.labels(), ds.merit_columns())?;
        let after = merit_means_for(&zx, &labels, ds.merit_columns())?;
        Some(after.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    };
    Ok(ExplainSummary { accuracy: accuracy(&tp, &tc), epsilon, delta, train_rows, test_rows: test.len() })
}

fn node_json(node: &Node, names: &[String]) -> Value {
    match node {
        Node::Leaf { class, counts } => json!({
            "feature": null, "threshold": null, "left": null, "right": null,
            "class": class.as_str(), "counts": counts,
        }),
        Node::Split { feature, threshold, counts, left, right } => json!({
            "feature": names.get(*feature).cloned().unwrap_or_else(|| format!("f{feature}")),
            "threshold": threshold,
            "left": node_json(left, names),
            "right": node_json(right, names),
            "class": null,
            "counts": counts,
        }),
    }
}

fn node_from_json(v: &Value, names: &[String]) -> Result<Node, ExplainError> {
    let bad = |m: &str| ExplainError::Format(m.to_string());
    let counts: [usize; 3] = serde_json::from_value(v.get("counts").cloned().ok_or_else(|| bad("missing counts"))?)
        .map_err(|e| ExplainError::Format(e.to_string()))?;
    match v.get("feature") {
        Some(Value::String(name)) => {
            let feature = names.iter().position(|n| n == name).ok_or_else(|| bad(&format!("unknown feature {name}")))?;
            let threshold = v.get("threshold").and_then(Value::as_f64).ok_or_else(|| bad("missing threshold"))?;
            let left = node_from_json(v.get("left").ok_or_else(|| bad("missing left"))?, names)?;
            let right = node_from_json(v.get("right").ok_or_else(|| bad("missing right"))?, names)?;
            Ok(Node::Split { feature, threshold, counts, left: Box::new(left), right: Box::new(right) })
        }
        Some(Value::Null) | None => {
            let class = v
                .get("class")
                .and_then(Value::as_str)
                .and_then(FlipClass::parse)
                .ok_or_else(|| bad("leaf without a valid class"))?;
            Ok(Node::Leaf { class, counts })
        }
        Some(_) => Err(bad("feature must be a string or null")),
    }
}

impl DecisionTree {
    pub fn to_json(&self, names: &[String]) -> Value {
        json!({
            "spec_version": SPEC_VERSION,
            "columns": names,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "root": node_json(&self.root, names),
        })
    }

    /// Parses [`DecisionTree::to_json`] output; returns the tree and its
    /// column names.
    pub fn from_json(v: &Value) -> Result<(Self, Vec<String>), ExplainError> {
        let bad = |m: &str| ExplainError::Format(m.to_string());
        let names: Vec<String> = serde_json::from_value(v.get("columns").cloned().ok_or_else(|| bad("missing columns"))?)
            .map_err(|e| ExplainError::Format(e.to_string()))?;
        let max_depth = v.get("max_depth").and_then(Value::as_u64).ok_or_else(|| bad("missing max_depth"))? as usize;
        let min_leaf = v.get("min_leaf").and_then(Value::as_u64).ok_or_else(|| bad("missing min_leaf"))? as usize;
        let root = node_from_json(v.get("root").ok_or_else(|| bad("missing root"))?, &names)?;
        Ok((DecisionTree { root, max_depth, min_leaf }, names))
    }
}

fn render_node(node: &Node, names: &[String], indent: usize, prefix: &str, out: &mut Vec<String>) {
    let pad = "  ".repeat(indent);
    let fmt_counts = |c: &[usize; 3]| format!("[pos {}, neg {}, none {}]", c[0], c[1], c[2]);
    match node {
        Node::Leaf { class, counts } => {
            out.push(format!("{pad}{prefix}→ {} {}", class.as_str(), fmt_counts(counts)));
        }
        Node::Split { feature, threshold, left, right, .. } => {
            let name = names.get(*feature).cloned().unwrap_or_else(|| format!("f{feature}"));
            out.push(format!("{pad}{prefix}{name} < {threshold:.3}"));
            render_node(left, names, indent + 1, "yes: ", out);
            render_node(right, names, indent + 1, "no: ", out);
        }
    }
}

/// Indented rules, one line per node, and the JSON mirror.
pub fn render(tree: &DecisionTree, names: &[String]) -> (String, Value) {
    let mut lines = Vec::new();
    render_node(&tree.root, names, 0, "", &mut lines);
    let mut text = lines.join("\n");
    text.push('\n');
    (text, tree.to_json(names))
}
