use std::fmt::Write as _;

use super::{check_label, fmt_real, parse_real};
use crate::classifier::LabeledSet;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;

const FORMAT: &str = "features";
const LAYOUT_PREFIX: &str = "# feature_layout_id=";

/// A feature matrix with its layout and optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub layout_id: String,
    pub rows: Vec<Vec<f64>>,
    /// One label per row, or `None` when the file has no `label` column.
    pub labels: Option<Vec<String>>,
}

impl FeatureTable {
    pub fn config(&self) -> Result<FeatureConfig> {
        FeatureConfig::from_layout_id(&self.layout_id)
    }

    /// Labeled view for training; fails when labels are absent.
    pub fn to_labeled(&self) -> Result<LabeledSet> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("feature table has no label column".into()))?;
        LabeledSet::from_names(self.rows.clone(), labels)
    }
}

pub fn write_features(table: &FeatureTable) -> Result<String> {
    let cfg = table.config()?;
    let names = cfg.feature_names();
    let mut out = String::new();
    let _ = writeln!(out, "{LAYOUT_PREFIX}{}", table.layout_id);
    out.push_str(&names.join(","));
    if table.labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    if let Some(labels) = &table.labels {
        if labels.len() != table.rows.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} labels",
                table.rows.len(),
                labels.len()
            )));
        }
    }
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != names.len() {
            return Err(Error::LayoutMismatch {
                expected: format!("{} features", names.len()),
                found: format!("{} features in row {i}", row.len()),
            });
        }
        let cells: Vec<String> = row.iter().map(|v| fmt_real(*v)).collect();
        out.push_str(&cells.join(","));
        if let Some(labels) = &table.labels {
            check_label(&labels[i])?;
            out.push(',');
            out.push_str(&labels[i]);
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn read_features(text: &str) -> Result<FeatureTable> {
    let err = |line: usize, message: String| Error::Parse {
        format: FORMAT,
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (no, first) = lines
        .next()
        .ok_or_else(|| Error::EmptyInput("feature file is empty".into()))?;
    let layout_id = first
        .strip_prefix(LAYOUT_PREFIX)
        .ok_or_else(|| err(no, format!("first line must be `{LAYOUT_PREFIX}<id>`")))?
        .to_string();
    let cfg = FeatureConfig::from_layout_id(&layout_id).map_err(|e| err(no, e.to_string()))?;
    let names = cfg.feature_names();

    let (no, header) = lines
        .next()
        .ok_or_else(|| err(no + 1, "missing header line".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let labeled = match columns.len() {
        n if n == names.len() => false,
        n if n == names.len() + 1 && columns[n - 1] == "label" => true,
        _ => {
            return Err(err(
                no,
                format!("header has {} columns; layout expects {}", columns.len(), names.len()),
            ))
        }
    };
    for (got, want) in columns.iter().zip(&names) {
        if got != want {
            return Err(err(no, format!("column `{got}` where `{want}` was expected")));
        }
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(err(
                no,
                format!("expected {} columns, found {}", columns.len(), fields.len()),
            ));
        }
        let row = names
            .iter()
            .zip(&fields)
            .map(|(name, f)| parse_real(f, FORMAT, no, name))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        if labeled {
            let l = fields[names.len()].trim();
            check_label(l).map_err(|e| err(no, e.to_string()))?;
            labels.push(l.to_string());
        }
    }
    Ok(FeatureTable {
        layout_id,
        rows,
        labels: labeled.then_some(labels),
    })
}
