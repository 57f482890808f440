use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::dataset::{Matrix, UpliftDataset};
use crate::error::{Result, UpliftError};

/// Columns named `__true_effect_<k>` carry ground truth for arm `k` and are
/// never read as features.
pub const TRUE_EFFECT_PREFIX: &str = "__true_effect_";

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("cannot open {}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let s = raw.trim();
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse::<f64>().map_err(|_| UpliftError::Parse {
        row,
        column: column.to_string(),
        message: format!("`{s}` is not a number"),
    })
}

/// Reads a header-first, comma-separated file.
///
/// Treatment values must be non-negative integers with `0` meaning control;
/// the remaining distinct values are renumbered `1..=K` in ascending order.
/// Rows are numbered from 1 in error messages, excluding the header.
pub fn load_csv(path: impl AsRef<Path>, outcome_col: &str, treatment_col: &str) -> Result<UpliftDataset> {
    let mut reader = open(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let find = |name: &str, key: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| UpliftError::config(key, format!("column `{name}` not found in header")))
    };
    let y_col = find(outcome_col, "outcome")?;
    let w_col = find(treatment_col, "treatment")?;

    let mut truth_cols = Vec::new();
    let mut feature_cols = Vec::new();
    for (j, h) in headers.iter().enumerate() {
        if j == y_col || j == w_col {
            continue;
        }
        match h.strip_prefix(TRUE_EFFECT_PREFIX).map(str::parse::<usize>) {
            Some(Ok(k)) => truth_cols.push((k, j)),
            _ => feature_cols.push(j),
        }
    }
    truth_cols.sort_unstable();

    let mut features = Vec::new();
    let mut outcome = Vec::new();
    let mut raw_treatment = Vec::new();
    let mut truth = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        for &j in &feature_cols {
            features.push(parse_cell(&record[j], row, &headers[j])?);
        }
        for &(_, j) in &truth_cols {
            truth.push(parse_cell(&record[j], row, &headers[j])?);
        }
        let y = parse_cell(&record[y_col], row, outcome_col)?;
        if y.is_nan() {
            return Err(UpliftError::Parse {
                row,
                column: outcome_col.to_string(),
                message: "missing outcome".into(),
            });
        }
        outcome.push(y);
        let w = parse_cell(&record[w_col], row, treatment_col)?;
        if !(w >= 0.0 && w.fract() == 0.0 && w <= u32::MAX as f64) {
            return Err(UpliftError::Parse {
                row,
                column: treatment_col.to_string(),
                message: format!("treatment must be a non-negative integer, got `{}`", record[w_col].trim()),
            });
        }
        raw_treatment.push(w as u64);
    }

    let labels: BTreeSet<u64> = raw_treatment.iter().copied().collect();
    if !labels.contains(&0) {
        return Err(UpliftError::Validation("no control rows".into()));
    }
    let arm_of: Vec<u64> = labels.into_iter().collect();
    let treatment = raw_treatment
        .iter()
        .map(|w| arm_of.binary_search(w).expect("label collected above"))
        .collect();

    let n = outcome.len();
    let names = feature_cols.iter().map(|&j| headers[j].clone()).collect();
    let data = UpliftDataset::new(Matrix::new(n, feature_cols.len(), features)?, outcome, treatment, names)?;
    if truth_cols.is_empty() {
        Ok(data)
    } else {
        data.with_true_effect(Matrix::new(n, truth_cols.len(), truth)?)
    }
}

/// Reads the named columns, in the given order, as a feature matrix.
/// Other columns are ignored.
pub fn load_features(path: impl AsRef<Path>, names: &[String]) -> Result<Matrix> {
    let mut reader = open(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let cols: Vec<Option<usize>> = names.iter().map(|n| headers.iter().position(|h| h == n)).collect();
    let missing: Vec<&str> = names
        .iter()
        .zip(&cols)
        .filter(|(_, c)| c.is_none())
        .map(|(n, _)| n.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(UpliftError::Validation(format!(
            "expected {} features, found {}; missing columns: {}",
            names.len(),
            names.len() - missing.len(),
            missing.join(", ")
        )));
    }
    let cols: Vec<usize> = cols.into_iter().flatten().collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        for &j in &cols {
            let x = parse_cell(&record[j], i + 1, &headers[j])?;
            if x.is_infinite() {
                return Err(UpliftError::Parse {
                    row: i + 1,
                    column: headers[j].clone(),
                    message: "infinite value".into(),
                });
            }
            values.push(x);
        }
        rows += 1;
    }
    Matrix::new(rows, cols.len(), values)
}

fn fmt_value(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        // `Display` for f64 is the shortest string that parses back exactly
        x.to_string()
    }
}

/// Writes features, outcome and treatment columns, plus
/// `__true_effect_<k>` columns when `with_truth` is set and truth exists.
pub fn write_csv(
    data: &UpliftDataset,
    path: impl AsRef<Path>,
    outcome_col: &str,
    treatment_col: &str,
    with_truth: bool,
) -> Result<()> {
    let truth = data.true_effect().filter(|_| with_truth);
    let path = path.as_ref();
    let file = File::create(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("cannot create {}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    let mut header: Vec<String> = data.feature_names().to_vec();
    header.push(outcome_col.to_string());
    header.push(treatment_col.to_string());
    if let Some(t) = truth {
        header.extend((1..=t.ncols()).map(|k| format!("{TRUE_EFFECT_PREFIX}{k}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.len() {
        let mut cells: Vec<String> = data.features().row(i).iter().map(|&x| fmt_value(x)).collect();
        cells.push(fmt_value(data.outcome()[i]));
        cells.push(data.treatment()[i].to_string());
        if let Some(t) = truth {
            cells.extend(t.row(i).iter().map(|&x| fmt_value(x)));
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}
