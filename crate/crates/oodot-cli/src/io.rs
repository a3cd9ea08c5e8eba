//! File formats: prediction CSVs (`s_0,...,s_{k-1}[,label]`), marginal CSVs
//! (`class,mass`), and the JSON report types.
//!
//! Parse errors carry 1-based line numbers. There is no format sniffing: the
//! caller states whether a prediction file holds logits or probabilities.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use oodot::{LabelMarginal, PredictionSet, ScoreKind};

use crate::{CliError, CliResult};

const ROW_SUM_TOLERANCE: f64 = 1e-6;
const MARGINAL_SUM_TOLERANCE: f64 = 1e-9;

fn data_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}:{line}: {msg}", path.display()))
}

/// Parse a prediction CSV. The header must read `s_0,...,s_{k-1}` with an
/// optional trailing `label` column; the kind flag decides the row checks.
pub fn parse_predictions(path: &Path, kind: ScoreKind) -> CliResult<PredictionSet> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();

    let Some((_, header)) = lines.next() else {
        return Err(data_err(path, 1, "missing header"));
    };
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_label = columns.last() == Some(&"label");
    let k = if has_label {
        columns.len() - 1
    } else {
        columns.len()
    };
    if k < 2 {
        return Err(data_err(
            path,
            1,
            "header must name at least two score columns (s_0,s_1,...)",
        ));
    }
    for (i, col) in columns[..k].iter().enumerate() {
        if *col != format!("s_{i}") {
            return Err(data_err(
                path,
                1,
                format!("missing or malformed header: expected 's_{i}', found '{col}'"),
            ));
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (index, line) in lines {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(data_err(
                path,
                line_no,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let mut row = Vec::with_capacity(k);
        for (i, field) in fields[..k].iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                data_err(path, line_no, format!("invalid number '{}' in s_{i}", field.trim()))
            })?;
            if !value.is_finite() {
                return Err(data_err(
                    path,
                    line_no,
                    format!("non-finite score '{}' in s_{i}", field.trim()),
                ));
            }
            row.push(value);
        }
        if kind == ScoreKind::Probabilities {
            let sum: f64 = row.iter().sum();
            let in_range = row.iter().all(|&p| (0.0..=1.0).contains(&p));
            if !in_range || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(data_err(
                    path,
                    line_no,
                    format!("row is not a probability vector (sum {sum})"),
                ));
            }
        }
        if has_label {
            let field = fields[k].trim();
            let label: usize = field.parse().map_err(|_| {
                data_err(path, line_no, format!("invalid label '{field}'"))
            })?;
            if label >= k {
                return Err(data_err(
                    path,
                    line_no,
                    format!("label {label} out of range for {k} classes"),
                ));
            }
            labels.push(label);
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(data_err(path, 1, "no data rows"));
    }
    let labels = has_label.then_some(labels);
    PredictionSet::from_rows(rows, kind, labels)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn format_predictions(p: &PredictionSet) -> String {
    let mut out = String::new();
    for i in 0..p.k() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "s_{i}");
    }
    if p.labels().is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for (i, row) in p.rows().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        if let Some(labels) = p.labels() {
            let _ = write!(out, ",{}", labels[i]);
        }
        out.push('\n');
    }
    out
}

/// Parse a marginal CSV: header `class,mass`, one row per class in order
/// `0..k-1`, masses non-negative and summing to 1 within 1e-9.
pub fn parse_marginal(path: &Path) -> CliResult<LabelMarginal> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(data_err(path, 1, "missing header"));
    };
    if header.trim() != "class,mass" {
        return Err(data_err(
            path,
            1,
            format!("missing or malformed header: expected 'class,mass', found '{header}'"),
        ));
    }
    let mut mass = Vec::new();
    for (index, line) in lines {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(data_err(
                path,
                line_no,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        let class: usize = fields[0].trim().parse().map_err(|_| {
            data_err(path, line_no, format!("invalid class '{}'", fields[0].trim()))
        })?;
        if class != mass.len() {
            return Err(data_err(
                path,
                line_no,
                format!("classes must be consecutive from 0; expected {}, found {class}", mass.len()),
            ));
        }
        let m: f64 = fields[1].trim().parse().map_err(|_| {
            data_err(path, line_no, format!("invalid mass '{}'", fields[1].trim()))
        })?;
        if !m.is_finite() || m < 0.0 {
            return Err(data_err(path, line_no, format!("mass {m} must be non-negative")));
        }
        mass.push(m);
    }
    let sum: f64 = mass.iter().sum();
    if mass.len() < 2 || (sum - 1.0).abs() > MARGINAL_SUM_TOLERANCE {
        return Err(CliError::Data(format!(
            "{}: marginal must cover at least two classes and sum to 1 within 1e-9 (sum {sum})",
            path.display()
        )));
    }
    LabelMarginal::new(mass).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn format_marginal(m: &LabelMarginal) -> String {
    let mut out = String::from("class,mass\n");
    for (c, mass) in m.mass().iter().enumerate() {
        let _ = writeln!(out, "{c},{mass}");
    }
    out
}

/// JSON report for `estimate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: String,
    pub value: f64,
    pub n: usize,
    pub k: usize,
    pub batch_count: usize,
    pub seed: Option<u64>,
    pub temperature: Option<f64>,
    pub threshold: Option<f64>,
    pub elapsed_ms: u64,
}

/// JSON report for `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateReport {
    pub temperature: f64,
    pub nll: f64,
    pub clamped: bool,
}

/// JSON summary for `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateSummary {
    pub method: String,
    pub mae: f64,
    pub files: usize,
}
