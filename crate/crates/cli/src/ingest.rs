use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hetfx::{Covariates, ExperimentSample};
use serde::Serialize;

/// Which CSV columns hold the outcome, the treatment and the covariates.
#[derive(Debug, Clone)]
pub struct Bindings {
    pub outcome: String,
    pub treatment: String,
    pub covariates: Vec<String>,
}

/// What happened to the rows of the input file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestSummary {
    pub rows_read: usize,
    pub rows_used: usize,
    pub rows_dropped: usize,
    /// Missing cells per bound column, counted over all rows read.
    pub missing: BTreeMap<String, usize>,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || ["na", "nan", "null"].contains(&cell.to_ascii_lowercase().as_str())
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| anyhow!("column {name:?} not found in header"))
}

fn number(cell: &str, name: &str, line: u64) -> Result<f64> {
    let v: f64 = cell
        .parse()
        .map_err(|_| anyhow!("line {line}: column {name:?}: cannot parse {cell:?} as a number"))?;
    if !v.is_finite() {
        bail!("line {line}: column {name:?}: value {cell:?} is not finite");
    }
    Ok(v)
}

/// Reads a headed CSV into a sample. Rows with a missing value in any bound
/// column are dropped and counted; malformed values are errors that name
/// their line.
pub fn ingest_csv(path: &Path, bindings: &Bindings) -> Result<(ExperimentSample, IngestSummary)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = reader.headers().context("cannot read the header row")?.clone();
    let y_col = column(&headers, &bindings.outcome)?;
    let d_col = column(&headers, &bindings.treatment)?;
    let x_cols: Vec<usize> = bindings.covariates.iter().map(|c| column(&headers, c)).collect::<Result<_>>()?;

    let mut names = vec![bindings.outcome.as_str(), bindings.treatment.as_str()];
    names.extend(bindings.covariates.iter().map(String::as_str));
    let cols: Vec<usize> = [y_col, d_col].into_iter().chain(x_cols.iter().copied()).collect();

    let mut summary = IngestSummary::default();
    for name in &names {
        summary.missing.insert((*name).to_string(), 0);
    }
    let (mut y, mut d, mut x) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.context("malformed CSV")?;
        let line = record.position().map_or(0, |p| p.line());
        summary.rows_read += 1;
        let mut complete = true;
        for (name, &c) in names.iter().zip(&cols) {
            if is_missing(record.get(c).unwrap_or("")) {
                *summary.missing.get_mut(*name).expect("bound column") += 1;
                complete = false;
            }
        }
        if !complete {
            summary.rows_dropped += 1;
            continue;
        }
        let outcome = number(&record[y_col], &bindings.outcome, line)?;
        let treated = match number(&record[d_col], &bindings.treatment, line)? {
            1.0 => true,
            0.0 => false,
            v => bail!("line {line}: treatment column {:?} must be 0 or 1, got {v}", bindings.treatment),
        };
        for (&c, name) in x_cols.iter().zip(&bindings.covariates) {
            x.push(number(&record[c], name, line)?);
        }
        y.push(outcome);
        d.push(treated);
    }
    summary.rows_used = y.len();
    if y.is_empty() {
        bail!("no usable rows in {} ({} read, all dropped)", path.display(), summary.rows_read);
    }
    let n = y.len();
    let sample = if x_cols.is_empty() {
        ExperimentSample::new(y, d)?
    } else {
        ExperimentSample::with_covariates(y, d, Covariates::from_row_major(n, x_cols.len(), x)?)?
    };
    Ok((sample, summary))
}
