//! Schema flags, dataset presets and the optional row preprocessing they
//! describe.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use fairflip_core::data::{load_csv, read_csv, CsvSchema, DataError, LabeledDataset};
use serde::{Deserialize, Serialize};

use crate::output::CliError;

const BUILTIN: &[(&str, &str)] = &[
    ("lsac-race", include_str!("../presets/lsac-race.toml")),
    ("lsac-gender", include_str!("../presets/lsac-gender.toml")),
    ("compas", include_str!("../presets/compas.toml")),
    ("credit", include_str!("../presets/credit.toml")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct SchemaArgs {
    /// Input CSV file.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Built-in preset (lsac-race, lsac-gender, compas, credit) or a preset TOML path.
    #[arg(long)]
    pub preset: Option<String>,
    /// Column holding the protected attribute.
    #[arg(long)]
    pub group_col: Option<String>,
    /// The two group categories, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub groups: Vec<String>,
    #[arg(long)]
    pub label_col: Option<String>,
    /// Label value treated as +1; the other value becomes −1.
    #[arg(long)]
    pub positive: Option<String>,
    /// Merit columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub merit: Vec<String>,
    /// Columns to drop before training, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ignore: Vec<String>,
    /// Keep only these feature columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
}

/// Row filters and recodings applied before the CSV reaches the loader.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prep {
    /// Keep a row only when the column's value is one of the listed strings.
    #[serde(default)]
    pub require: BTreeMap<String, Vec<String>>,
    /// Keep a row only when the numeric column lies in [lo, hi].
    #[serde(default)]
    pub ranges: BTreeMap<String, [f64; 2]>,
    /// Replace the column by 1 where it equals the value and 0 elsewhere.
    #[serde(default)]
    pub indicators: BTreeMap<String, String>,
    /// Label values mapped to +1; every other non-missing value maps to −1.
    #[serde(default)]
    pub positive_labels: Vec<String>,
}

impl Prep {
    fn is_empty(&self) -> bool {
        self == &Prep::default()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Preset {
    group_column: Option<String>,
    group_values: Option<[String; 2]>,
    label_column: Option<String>,
    positive_value: Option<String>,
    #[serde(default)]
    merit_columns: Vec<String>,
    #[serde(default)]
    ignore_columns: Vec<String>,
    #[serde(default)]
    features: Vec<String>,
    #[serde(default)]
    prep: Prep,
}

fn load_preset(name: &str) -> Result<Preset, CliError> {
    let text = match BUILTIN.iter().find(|(n, _)| *n == name) {
        Some((_, t)) => (*t).to_string(),
        None => std::fs::read_to_string(name).map_err(|e| {
            CliError::Usage(format!(
                "preset '{name}' is neither built in ({}) nor a readable file: {e}",
                builtin_names().join(", ")
            ))
        })?,
    };
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("preset '{name}': {e}")))
}

/// A validated schema: the loader's view plus preprocessing.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub csv: CsvSchema,
    pub features: Vec<String>,
    pub prep: Prep,
}

/// Merges the preset with explicit flags (flags win) and checks that every
/// required role is named. Touches no data file.
pub fn resolve(args: &SchemaArgs) -> Result<Resolved, CliError> {
    let preset = match &args.preset {
        Some(p) => load_preset(p)?,
        None => Preset::default(),
    };
    let pick = |flag: &[String], preset: Vec<String>| if flag.is_empty() { preset } else { flag.to_vec() };
    let group_column = args
        .group_col
        .clone()
        .or(preset.group_column)
        .ok_or_else(|| CliError::Usage("missing --group-col".into()))?;
    let group_values = if args.groups.is_empty() {
        preset.group_values.ok_or_else(|| CliError::Usage("missing --groups".into()))?
    } else {
        match args.groups.as_slice() {
            [a, b] => [a.clone(), b.clone()],
            _ => return Err(CliError::Usage("--groups takes exactly two values".into())),
        }
    };
    let label_column = args
        .label_col
        .clone()
        .or(preset.label_column)
        .ok_or_else(|| CliError::Usage("missing --label-col".into()))?;
    let prep = preset.prep;
    let positive_value = if prep.positive_labels.is_empty() {
        args.positive
            .clone()
            .or(preset.positive_value)
            .ok_or_else(|| CliError::Usage("missing --positive".into()))?
    } else {
        "1".to_string()
    };
    Ok(Resolved {
        csv: CsvSchema {
            group_column,
            group_values,
            label_column,
            positive_value,
            merit_columns: pick(&args.merit, preset.merit_columns),
            ignore_columns: pick(&args.ignore, preset.ignore_columns),
        },
        features: pick(&args.features, preset.features),
        prep,
    })
}

/// Dataset plus the number of rows removed by preset filters.
pub struct Loaded {
    pub dataset: LabeledDataset,
    pub filtered_rows: usize,
}

pub fn load(schema: &Resolved, path: &Path) -> Result<Loaded, CliError> {
    if schema.prep.is_empty() && schema.features.is_empty() {
        return Ok(Loaded { dataset: load_csv(path, &schema.csv)?, filtered_rows: 0 });
    }
    let mut reader = csv::Reader::from_path(path).map_err(DataError::from)?;
    let headers: Vec<String> = reader.headers().map_err(DataError::from)?.iter().map(|h| h.trim().to_string()).collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(DataError::Schema(format!("missing column '{name}'"))))
    };
    let require: Vec<(usize, &Vec<String>)> =
        schema.prep.require.iter().map(|(c, v)| Ok((col(c)?, v))).collect::<Result<_, CliError>>()?;
    let ranges: Vec<(usize, [f64; 2])> =
        schema.prep.ranges.iter().map(|(c, r)| Ok((col(c)?, *r))).collect::<Result<_, CliError>>()?;
    let indicators: Vec<(usize, &String)> =
        schema.prep.indicators.iter().map(|(c, v)| Ok((col(c)?, v))).collect::<Result<_, CliError>>()?;
    let label = col(&schema.csv.label_column)?;
    let group = col(&schema.csv.group_column)?;
    for f in &schema.features {
        col(f)?;
    }
    let keep: Vec<usize> = (0..headers.len())
        .filter(|&c| {
            schema.features.is_empty()
                || c == label
                || c == group
                || schema.features.contains(&headers[c])
        })
        .collect();

    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(keep.iter().map(|&c| &headers[c])).map_err(DataError::from)?;
    let mut filtered = 0;
    for record in reader.records() {
        let record = record.map_err(DataError::from)?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |c: usize| record.get(c).unwrap_or("").trim();
        let mut ok = require.iter().all(|(c, vals)| vals.iter().any(|v| v == cell(*c)));
        for (c, [lo, hi]) in &ranges {
            let v: f64 = cell(*c).parse().map_err(|_| DataError::Parse {
                line,
                column: headers[*c].clone(),
                value: cell(*c).to_string(),
            })?;
            ok &= (*lo..=*hi).contains(&v);
        }
        if !ok {
            filtered += 1;
            continue;
        }
        let row: Vec<String> = keep
            .iter()
            .map(|&c| {
                let v = cell(c);
                if let Some((_, target)) = indicators.iter().find(|(i, _)| *i == c) {
                    if v.is_empty() { String::new() } else { u8::from(v == target.as_str()).to_string() }
                } else if c == label && !schema.prep.positive_labels.is_empty() && !v.is_empty() {
                    u8::from(schema.prep.positive_labels.iter().any(|p| p == v)).to_string()
                } else {
                    v.to_string()
                }
            })
            .collect();
        out.write_record(&row).map_err(DataError::from)?;
    }
    let bytes = out.into_inner().map_err(|e| CliError::Failed(e.to_string()))?;
    let mut csv = schema.csv.clone();
    csv.ignore_columns.retain(|c| keep.iter().any(|&k| &headers[k] == c));
    Ok(Loaded { dataset: read_csv(bytes.as_slice(), &csv)?, filtered_rows: filtered })
}
