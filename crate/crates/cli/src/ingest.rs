//! Strict CSV ingestion of date-major return files.
//!
//! Layout: a header `date,<ticker>,<ticker>,...` followed by one row per
//! period. Every cell must parse as a finite number; nothing is imputed.

use std::collections::HashSet;
use std::fs::File;
use std::path::Path;

use doubleshrink::{Panel, Weights};
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult};

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Reads a returns file into an assets × periods panel.
pub fn ingest_returns(path: &Path) -> CliResult<Panel> {
    let mut rdr = reader(path)?;
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| CliError::parse(path, e.to_string()))?,
        None => return Err(CliError::parse(path, "file is empty")),
    };
    if header.len() < 3 {
        return Err(CliError::parse(
            path,
            "header needs a date column and at least two tickers",
        ));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut seen = HashSet::new();
    for (j, t) in tickers.iter().enumerate() {
        if t.is_empty() {
            return Err(CliError::parse(
                path,
                format!("row 1, column {}: empty ticker", j + 2),
            ));
        }
        if !seen.insert(t.as_str()) {
            return Err(CliError::parse(
                path,
                format!("row 1, column {}: duplicate ticker `{t}`", j + 2),
            ));
        }
    }

    let p = tickers.len();
    let mut dates = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::parse(path, format!("row {row}: {e}")))?;
        if rec.len() != p + 1 {
            return Err(CliError::parse(
                path,
                format!("row {row}: expected {} fields, found {}", p + 1, rec.len()),
            ));
        }
        dates.push(rec[0].to_string());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let col = j + 2;
            let value: f64 = cell.parse().map_err(|_| {
                let what = if cell.is_empty() {
                    "missing value".to_string()
                } else {
                    format!("`{cell}` is not a number")
                };
                CliError::parse(
                    path,
                    format!("row {row}, column {col} ({}): {what}", tickers[j]),
                )
            })?;
            if !value.is_finite() {
                return Err(CliError::parse(
                    path,
                    format!("row {row}, column {col} ({}): non-finite value", tickers[j]),
                ));
            }
            data.push(value);
        }
    }
    let n = dates.len();
    if n < 3 {
        return Err(CliError::parse(
            path,
            format!("need at least 3 periods, found {n}"),
        ));
    }
    // Row-major periods × assets read as column-major assets × periods.
    let values = DMatrix::from_column_slice(p, n, &data);
    Ok(Panel::new(values, tickers, Some(dates))?)
}

/// Writes a panel back in the ingestion layout.
pub fn export_returns(panel: &Panel, path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e.into()))?;
    let io = |e: csv::Error| CliError::io(path, e.into());
    let mut header = vec!["date".to_string()];
    header.extend(panel.asset_labels().iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (t, col) in panel.values().column_iter().enumerate() {
        let mut row = vec![panel.time_labels()[t].clone()];
        row.extend(col.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads `asset,weight` rows and orders them like `assets`.
pub fn ingest_weights(path: &Path, assets: &[String]) -> CliResult<Weights> {
    let mut rdr = reader(path)?;
    let mut found = std::collections::HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CliError::parse(path, format!("row {row}: {e}")))?;
        if rec.len() != 2 {
            return Err(CliError::parse(
                path,
                format!("row {row}: expected `asset,weight`"),
            ));
        }
        match rec[1].parse::<f64>() {
            Ok(w) if w.is_finite() => {
                if found.insert(rec[0].to_string(), w).is_some() {
                    return Err(CliError::parse(
                        path,
                        format!("row {row}: duplicate asset `{}`", &rec[0]),
                    ));
                }
            }
            // A non-numeric first row is a header.
            _ if row == 1 => {}
            _ => {
                return Err(CliError::parse(
                    path,
                    format!("row {row}, column 2: `{}` is not a number", &rec[1]),
                ));
            }
        }
    }
    let w = assets
        .iter()
        .map(|a| {
            found
                .get(a)
                .copied()
                .ok_or_else(|| CliError::parse(path, format!("no weight for asset `{a}`")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if found.len() != assets.len() {
        return Err(CliError::parse(
            path,
            "weights listed for assets not in the panel",
        ));
    }
    Ok(Weights::new(DVector::from_vec(w), "custom")?)
}
