//! Labeled datasets with a two-group partition, CSV I/O, per-group
//! standardization, bias metrics and a synthetic generator.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}, column '{column}': cannot parse '{value}' as a finite number")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },
    #[error("label column '{column}' has more than two distinct values; unexpected: {}", .offending.join(", "))]
    LabelValues { column: String, offending: Vec<String> },
    #[error("group '{0}' has no rows")]
    DegeneratePartition(String),
    #[error("column '{column}' is constant within group {group}")]
    ConstantColumn { column: String, group: String },
    #[error("no positively labeled rows")]
    NoPositives,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("could not calibrate group shift: achieved alpha {achieved:.4} for target {target:.4}")]
    Calibration { achieved: f64, target: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DataError {
    /// True for errors caused by the user's column/flag choices rather than
    /// the data values themselves.
    pub fn is_schema(&self) -> bool {
        matches!(self, DataError::Schema(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "ADV")]
    Adv,
    #[serde(rename = "DIS")]
    Dis,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Adv => "ADV",
            Group::Dis => "DIS",
        })
    }
}

/// Names used to read and write a dataset: which columns hold the group and
/// label, and which category strings map to ADV/DIS and to ±1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub group_column: String,
    pub adv_value: String,
    pub dis_value: String,
    pub label_column: String,
    pub positive_value: String,
    pub negative_value: String,
}

impl Default for DatasetMeta {
    fn default() -> Self {
        Self {
            group_column: "group".into(),
            adv_value: "ADV".into(),
            dis_value: "DIS".into(),
            label_column: "label".into(),
            positive_value: "1".into(),
            negative_value: "0".into(),
        }
    }
}

impl DatasetMeta {
    pub fn group_value(&self, g: Group) -> &str {
        match g {
            Group::Adv => &self.adv_value,
            Group::Dis => &self.dis_value,
        }
    }

    pub fn group_of(&self, value: &str) -> Option<Group> {
        if value == self.adv_value {
            Some(Group::Adv)
        } else if value == self.dis_value {
            Some(Group::Dis)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug)]
pub struct LabeledDataset {
    features: DMatrix<f64>,
    labels: Vec<i8>,
    groups: Vec<Group>,
    column_names: Vec<String>,
    merit_columns: Vec<usize>,
    standardized: bool,
    raw: Option<DMatrix<f64>>,
    meta: DatasetMeta,
    dropped_rows: usize,
    excluded_rows: usize,
}

impl LabeledDataset {
    pub fn new(
        features: DMatrix<f64>,
        labels: Vec<i8>,
        groups: Vec<Group>,
        column_names: Vec<String>,
        merit_columns: Vec<usize>,
    ) -> Result<Self, DataError> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(DataError::LengthMismatch { expected: n, actual: labels.len() });
        }
        if groups.len() != n {
            return Err(DataError::LengthMismatch { expected: n, actual: groups.len() });
        }
        if column_names.len() != features.ncols() {
            return Err(DataError::LengthMismatch {
                expected: features.ncols(),
                actual: column_names.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(DataError::Invalid(format!("label {bad} is not ±1")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite feature value".into()));
        }
        let mut seen = BTreeSet::new();
        for &j in &merit_columns {
            if j >= features.ncols() || !seen.insert(j) {
                return Err(DataError::Invalid(format!("bad merit column index {j}")));
            }
        }
        for g in [Group::Adv, Group::Dis] {
            if !groups.contains(&g) {
                return Err(DataError::DegeneratePartition(g.to_string()));
            }
        }
        Ok(Self {
            features,
            labels,
            groups,
            column_names,
            merit_columns,
            standardized: false,
            raw: None,
            meta: DatasetMeta::default(),
            dropped_rows: 0,
            excluded_rows: 0,
        })
    }

    pub fn with_meta(mut self, meta: DatasetMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Designates merit columns by name.
    pub fn with_merit_columns(mut self, names: &[String]) -> Result<Self, DataError> {
        let mut idx = Vec::with_capacity(names.len());
        for name in names {
            let j = self
                .column_index(name)
                .ok_or_else(|| DataError::Schema(format!("merit column '{name}' not found")))?;
            if idx.contains(&j) {
                return Err(DataError::Schema(format!("merit column '{name}' listed twice")));
            }
            idx.push(j);
        }
        self.merit_columns = idx;
        Ok(self)
    }

    /// Same rows and features with replacement labels.
    pub fn with_labels(&self, labels: Vec<i8>) -> Result<Self, DataError> {
        if labels.len() != self.len() {
            return Err(DataError::LengthMismatch { expected: self.len(), actual: labels.len() });
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(DataError::Invalid("labels must be ±1".into()));
        }
        Ok(Self { labels, ..self.clone() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn merit_columns(&self) -> &[usize] {
        &self.merit_columns
    }

    pub fn merit_column_names(&self) -> Vec<String> {
        self.merit_columns.iter().map(|&j| self.column_names[j].clone()).collect()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Unstandardized features: the stored raw copy after standardization,
    /// otherwise the features themselves.
    pub fn raw_features(&self) -> &DMatrix<f64> {
        self.raw.as_ref().unwrap_or(&self.features)
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    /// Rows discarded during loading because a designated value was missing.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    /// Rows whose group value matched neither configured category.
    pub fn excluded_rows(&self) -> usize {
        self.excluded_rows
    }

    pub fn group_stats(&self) -> GroupStats {
        GroupStats::from_labels(&self.labels, &self.groups)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n_w: usize,
    pub n_b: usize,
    pub p_w: usize,
    pub p_b: usize,
    pub pos_rate_w: f64,
    pub pos_rate_b: f64,
}

impl GroupStats {
    pub fn new(n_w: usize, n_b: usize, p_w: usize, p_b: usize) -> Self {
        assert!(p_w <= n_w && p_b <= n_b, "positive counts exceed group sizes");
        Self {
            n_w,
            n_b,
            p_w,
            p_b,
            pos_rate_w: ratio(p_w, n_w),
            pos_rate_b: ratio(p_b, n_b),
        }
    }

    pub fn from_labels(labels: &[i8], groups: &[Group]) -> Self {
        let (mut n_w, mut n_b, mut p_w, mut p_b) = (0, 0, 0, 0);
        for (&y, &g) in labels.iter().zip(groups) {
            match g {
                Group::Adv => {
                    n_w += 1;
                    p_w += usize::from(y > 0);
                }
                Group::Dis => {
                    n_b += 1;
                    p_b += usize::from(y > 0);
                }
            }
        }
        Self::new(n_w, n_b, p_w, p_b)
    }

    /// |p_w/n_w − p_b/n_b| from the integer cross-difference.
    pub fn gap(&self) -> f64 {
        if self.n_w == 0 || self.n_b == 0 {
            return 0.0;
        }
        let cross = self.p_w as i128 * self.n_b as i128 - self.p_b as i128 * self.n_w as i128;
        cross.unsigned_abs() as f64 / (self.n_w as f64 * self.n_b as f64)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapDirection {
    AdvHigher,
    DisHigher,
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub alpha: f64,
    pub gap_direction: GapDirection,
    pub group_stats: GroupStats,
}

pub fn alpha_bias(ds: &LabeledDataset) -> BiasReport {
    let s = ds.group_stats();
    let cross = s.p_w as i128 * s.n_b as i128 - s.p_b as i128 * s.n_w as i128;
    let gap_direction = match cross.cmp(&0) {
        std::cmp::Ordering::Greater => GapDirection::AdvHigher,
        std::cmp::Ordering::Less => GapDirection::DisHigher,
        std::cmp::Ordering::Equal => GapDirection::Equal,
    };
    BiasReport { alpha: s.gap(), gap_direction, group_stats: s }
}

/// Absolute difference between the positive-prediction rates of the groups.
pub fn parity_gap(predictions: &[i8], groups: &[Group]) -> Result<f64, DataError> {
    if predictions.len() != groups.len() {
        return Err(DataError::LengthMismatch { expected: groups.len(), actual: predictions.len() });
    }
    let s = GroupStats::from_labels(predictions, groups);
    if s.n_w == 0 || s.n_b == 0 {
        return Err(DataError::DegeneratePartition(
            if s.n_w == 0 { Group::Adv } else { Group::Dis }.to_string(),
        ));
    }
    Ok(s.gap())
}

/// Mean of each merit column over positively labeled rows.
pub fn merit_means(ds: &LabeledDataset) -> Result<Vec<f64>, DataError> {
    merit_means_for(ds.features(), ds.labels(), ds.merit_columns())
}

pub(crate) fn merit_means_for(
    x: &DMatrix<f64>,
    labels: &[i8],
    columns: &[usize],
) -> Result<Vec<f64>, DataError> {
    let positives = labels.iter().filter(|&&y| y > 0).count();
    if positives == 0 {
        return Err(DataError::NoPositives);
    }
    Ok(columns
        .iter()
        .map(|&j| {
            let s: f64 = labels
                .iter()
                .enumerate()
                .map(|(i, &y)| x[(i, j)] * f64::from(y + 1))
                .sum();
            s / (2.0 * positives as f64)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
}

/// Per-group column means and sample standard deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardizationParams {
    pub columns: Vec<String>,
    pub adv: Vec<ColumnStats>,
    pub dis: Vec<ColumnStats>,
    pub meta: DatasetMeta,
}

impl StandardizationParams {
    pub fn stats(&self, g: Group) -> &[ColumnStats] {
        match g {
            Group::Adv => &self.adv,
            Group::Dis => &self.dis,
        }
    }

    pub fn apply(&self, g: Group, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.stats(g))
            .map(|(v, s)| (v - s.mean) / s.std)
            .collect()
    }

    pub fn invert(&self, g: Group, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.stats(g))
            .map(|(v, s)| v * s.std + s.mean)
            .collect()
    }

    /// Standardizes a raw matrix row by row using each row's group.
    pub fn transform(&self, raw: &DMatrix<f64>, groups: &[Group]) -> DMatrix<f64> {
        let mut out = raw.clone();
        for (i, &g) in groups.iter().enumerate() {
            for (j, s) in self.stats(g).iter().enumerate() {
                out[(i, j)] = (raw[(i, j)] - s.mean) / s.std;
            }
        }
        out
    }
}

/// Z-scores every column within each group using the sample standard
/// deviation (divisor n_g − 1).
pub fn standardize_by_group(
    ds: &LabeledDataset,
) -> Result<(LabeledDataset, StandardizationParams), DataError> {
    let raw = ds.raw_features();
    let p = raw.ncols();
    let mut per_group = Vec::with_capacity(2);
    for g in [Group::Adv, Group::Dis] {
        let rows: Vec<usize> = (0..ds.len()).filter(|&i| ds.groups[i] == g).collect();
        let name = ds.meta.group_value(g).to_string();
        if rows.len() < 2 {
            return Err(DataError::Invalid(format!(
                "group {name} needs at least two rows to standardize"
            )));
        }
        let mut stats = Vec::with_capacity(p);
        for j in 0..p {
            let m = rows.len() as f64;
            let mean = rows.iter().map(|&i| raw[(i, j)]).sum::<f64>() / m;
            let ss: f64 = rows.iter().map(|&i| (raw[(i, j)] - mean).powi(2)).sum();
            let std = (ss / (m - 1.0)).sqrt();
            let spread = rows
                .iter()
                .map(|&i| (raw[(i, j)] - raw[(rows[0], j)]).abs())
                .fold(0.0, f64::max);
            if spread == 0.0 || std <= 1e-12 * mean.abs().max(1.0) {
                return Err(DataError::ConstantColumn {
                    column: ds.column_names[j].clone(),
                    group: name,
                });
            }
            stats.push(ColumnStats { mean, std });
        }
        per_group.push(stats);
    }
    let dis = per_group.pop().unwrap();
    let adv = per_group.pop().unwrap();
    let params = StandardizationParams {
        columns: ds.column_names.clone(),
        adv,
        dis,
        meta: ds.meta.clone(),
    };
    let features = params.transform(raw, &ds.groups);
    let out = LabeledDataset {
        features,
        raw: Some(raw.clone()),
        standardized: true,
        ..ds.clone()
    };
    Ok((out, params))
}

/// Column roles for [`load_csv`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub group_column: String,
    /// The two group categories, in user order (ties in positive rate go to
    /// the first).
    pub group_values: [String; 2],
    pub label_column: String,
    pub positive_value: String,
    #[serde(default)]
    pub merit_columns: Vec<String>,
    #[serde(default)]
    pub ignore_columns: Vec<String>,
}

fn is_missing(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("null")
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LabeledDataset, DataError> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(input: R, schema: &CsvSchema) -> Result<LabeledDataset, DataError> {
    if schema.group_values[0] == schema.group_values[1] {
        return Err(DataError::Schema("the two group values must differ".into()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::Schema(format!("missing column '{name}'")))
    };
    let gcol = find(&schema.group_column)?;
    let ycol = find(&schema.label_column)?;
    for c in &schema.ignore_columns {
        find(c)?;
    }
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != gcol && c != ycol && !schema.ignore_columns.contains(&headers[c]))
        .collect();
    if feature_cols.is_empty() {
        return Err(DataError::Schema("no feature columns".into()));
    }
    let names: Vec<String> = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    for m in &schema.merit_columns {
        if !names.contains(m) {
            return Err(DataError::Schema(format!("missing merit column '{m}'")));
        }
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut cats = Vec::new();
    let mut negative: Option<String> = None;
    let mut offending: BTreeSet<String> = BTreeSet::new();
    let (mut dropped, mut excluded) = (0usize, 0usize);
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k as u64 + 2, |p| p.line());
        let gv = record.get(gcol).unwrap_or("").trim();
        let yv = record.get(ycol).unwrap_or("").trim();
        if is_missing(gv) || is_missing(yv) {
            dropped += 1;
            continue;
        }
        let cat = if gv == schema.group_values[0] {
            0u8
        } else if gv == schema.group_values[1] {
            1u8
        } else {
            excluded += 1;
            continue;
        };
        let mut row = Vec::with_capacity(feature_cols.len());
        let mut missing = false;
        for &c in &feature_cols {
            let cell = record.get(c).unwrap_or("");
            if is_missing(cell) {
                missing = true;
                break;
            }
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(DataError::Parse {
                        line,
                        column: headers[c].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        if missing {
            dropped += 1;
            continue;
        }
        let y = if yv == schema.positive_value {
            1
        } else {
            match &negative {
                None => {
                    negative = Some(yv.to_string());
                    -1
                }
                Some(neg) if neg == yv => -1,
                Some(_) => {
                    offending.insert(yv.to_string());
                    -1
                }
            }
        };
        values.extend(row);
        labels.push(y);
        cats.push(cat);
    }
    if !offending.is_empty() {
        return Err(DataError::LabelValues {
            column: schema.label_column.clone(),
            offending: offending.into_iter().collect(),
        });
    }
    let counts = |c: u8| {
        let n = cats.iter().filter(|&&v| v == c).count();
        let p = cats.iter().zip(&labels).filter(|(&v, &y)| v == c && y > 0).count();
        (n, p)
    };
    let (n0, p0) = counts(0);
    let (n1, p1) = counts(1);
    for (n, value) in [(n0, &schema.group_values[0]), (n1, &schema.group_values[1])] {
        if n == 0 {
            return Err(DataError::DegeneratePartition(value.clone()));
        }
    }
    // Higher positive rate is the advantaged group; equal rates keep user order.
    let first_is_adv = p0 as i128 * n1 as i128 >= p1 as i128 * n0 as i128;
    let groups: Vec<Group> = cats
        .iter()
        .map(|&c| if (c == 0) == first_is_adv { Group::Adv } else { Group::Dis })
        .collect();
    let (adv_value, dis_value) = if first_is_adv {
        (schema.group_values[0].clone(), schema.group_values[1].clone())
    } else {
        (schema.group_values[1].clone(), schema.group_values[0].clone())
    };
    let n = labels.len();
    let x = DMatrix::from_row_slice(n, feature_cols.len(), &values);
    let meta = DatasetMeta {
        group_column: schema.group_column.clone(),
        adv_value,
        dis_value,
        label_column: schema.label_column.clone(),
        positive_value: schema.positive_value.clone(),
        negative_value: negative.unwrap_or_else(|| default_negative(&schema.positive_value)),
    };
    let mut ds = LabeledDataset::new(x, labels, groups, names, Vec::new())?
        .with_meta(meta)
        .with_merit_columns(&schema.merit_columns)?;
    ds.dropped_rows = dropped;
    ds.excluded_rows = excluded;
    Ok(ds)
}

fn default_negative(positive: &str) -> String {
    match positive {
        "1" => "0".into(),
        "0" => "1".into(),
        "+1" => "-1".into(),
        _ => format!("not_{positive}"),
    }
}

/// Writes raw features followed by the group and label columns.
pub fn write_csv<W: std::io::Write>(ds: &LabeledDataset, out: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = ds.column_names.iter().map(String::as_str).collect();
    header.push(&ds.meta.group_column);
    header.push(&ds.meta.label_column);
    w.write_record(&header)?;
    let x = ds.raw_features();
    for i in 0..ds.len() {
        // Display for f64 is the shortest string that parses back exactly.
        let mut row: Vec<String> = (0..x.ncols()).map(|j| x[(i, j)].to_string()).collect();
        row.push(ds.meta.group_value(ds.groups[i]).to_string());
        row.push(if ds.labels[i] > 0 {
            ds.meta.positive_value.clone()
        } else {
            ds.meta.negative_value.clone()
        });
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Planted generating parameters for a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Logit shift: +shift/2 for ADV rows, −shift/2 for DIS rows.
    pub group_shift: f64,
    pub alpha_target: f64,
    pub alpha_realized: f64,
    pub seed: u64,
}

/// Draws a dataset whose labels follow a planted logistic model with a
/// group-dependent intercept shift, calibrated so the realized bias lands
/// within 0.02 of `alpha_target`.
pub fn generate_synthetic(
    n: usize,
    p: usize,
    alpha_target: f64,
    group_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, PlantedTruth), DataError> {
    if n < 4 || p < 1 {
        return Err(DataError::Invalid("need n >= 4 and p >= 1".into()));
    }
    if !(0.0..1.0).contains(&alpha_target) {
        return Err(DataError::Invalid("alpha_target must lie in [0, 1)".into()));
    }
    if !(group_fraction > 0.0 && group_fraction < 1.0) {
        return Err(DataError::Invalid("group_fraction must lie in (0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_adv = ((n as f64 * group_fraction).round() as usize).clamp(2, n - 2);
    let mut groups: Vec<Group> = (0..n).map(|i| if i < n_adv { Group::Adv } else { Group::Dis }).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        groups.swap(i, j);
    }
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let coefficients: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let uniforms: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let logits: Vec<f64> = (0..n)
        .map(|i| (0..p).map(|j| coefficients[j] * x[(i, j)]).sum())
        .collect();
    let labels_at = |shift: f64| -> Vec<i8> {
        (0..n)
            .map(|i| {
                let s = if groups[i] == Group::Adv { shift / 2.0 } else { -shift / 2.0 };
                let prob = 1.0 / (1.0 + (-(logits[i] + s)).exp());
                if uniforms[i] < prob { 1 } else { -1 }
            })
            .collect()
    };
    let signed_gap = |shift: f64| {
        let s = GroupStats::from_labels(&labels_at(shift), &groups);
        s.pos_rate_w - s.pos_rate_b
    };
    let mut shift = 0.0;
    if alpha_target > 0.0 {
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        let mut best = (f64::INFINITY, 0.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let d = signed_gap(mid);
            if (d - alpha_target).abs() < best.0 {
                best = ((d - alpha_target).abs(), mid);
            }
            if d < alpha_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if best.0 > 0.02 {
            return Err(DataError::Calibration {
                achieved: signed_gap(best.1).abs(),
                target: alpha_target,
            });
        }
        shift = best.1;
    }
    let labels = labels_at(shift);
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    let ds = LabeledDataset::new(x, labels, groups, names, Vec::new())?.with_meta(DatasetMeta {
        adv_value: "majority".into(),
        dis_value: "minority".into(),
        ..DatasetMeta::default()
    });
    let alpha_realized = alpha_bias(&ds).alpha;
    Ok((
        ds,
        PlantedTruth {
            coefficients,
            intercept: 0.0,
            group_shift: shift,
            alpha_target,
            alpha_realized,
            seed,
        },
    ))
}
