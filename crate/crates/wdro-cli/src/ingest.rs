//! CSV ingestion: header row, numeric feature columns, optional trailing
//! label column. Structural faults (unreadable file, ragged or unparseable
//! rows) are config errors carrying the 1-based data-row number; value
//! faults (non-finite cells, a label alphabet other than ±1) are domain
//! errors.

use std::path::Path;

use wdro::error::{Error, Result};
use wdro::Data;

pub struct Schema {
    /// Last column is the response.
    pub labeled: bool,
    /// Labels must come from {-1, 1}.
    pub classification: bool,
}

pub fn ingest_dataset(path: &Path, schema: &Schema) -> Result<Data> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot read dataset {}: {e}", path.display())))?;
    let width = rdr
        .headers()
        .map_err(|e| Error::Config(format!("{}: bad header: {e}", path.display())))?
        .len();
    if schema.labeled && width < 2 {
        return Err(Error::Config(
            "a labeled dataset needs at least one feature column plus the label".into(),
        ));
    }
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Config(format!("row {row}: {e}")))?;
        let mut z = Vec::with_capacity(rec.len());
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Config(format!(
                    "row {row}, column {}: cannot parse {cell:?} as a number",
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "row {row}, column {}: non-finite value {v}",
                    col + 1
                )));
            }
            z.push(v);
        }
        points.push(z);
    }
    if points.is_empty() {
        return Err(Error::Config(format!(
            "dataset {} has a header but no rows",
            path.display()
        )));
    }
    if schema.labeled && schema.classification {
        let mut bad: Vec<f64> = Vec::new();
        for z in &points {
            let y = *z.last().unwrap();
            if y != 1.0 && y != -1.0 && !bad.contains(&y) {
                bad.push(y);
            }
        }
        if !bad.is_empty() {
            bad.truncate(3);
            let shown: Vec<String> = bad.iter().map(|b| b.to_string()).collect();
            return Err(Error::Domain(format!(
                "classification labels must be -1 or 1; the last column also contains {{{}}}",
                shown.join(", ")
            )));
        }
    }
    Data::uniform(points)
}
