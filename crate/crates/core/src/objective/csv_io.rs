use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

/// Writes one sample per row: `s0..s{dim-1}` followed by `y0..y{outputs-1}`.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..ds.sample_dim()).map(|j| format!("s{j}")).collect();
    header.extend((0..ds.outputs()).map(|k| format!("y{k}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..ds.n() {
        row.clear();
        row.extend(ds.sample(i).iter().map(|v| v.to_string()));
        row.extend(ds.target(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset_csv`]. The trailing `outputs`
/// columns are targets; the ridge weight is not stored in the file.
pub fn read_dataset_csv(path: &Path, outputs: usize, ridge_lambda: f64) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len();
    if outputs == 0 || width <= outputs {
        return Err(Error::Shape(format!(
            "{}: {width} columns cannot hold {outputs} target column(s) plus samples",
            path.display()
        )));
    }
    let dim = width - outputs;
    let mut samples = Vec::new();
    let mut targets = Vec::new();
    let mut n = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "{}: row {}, column {}: cannot parse {field:?} as a number",
                    path.display(),
                    line + 2,
                    col + 1
                ))
            })?;
            if col < dim {
                samples.push(v);
            } else {
                targets.push(v);
            }
        }
        n += 1;
    }
    Dataset::from_flat(n, dim, outputs, samples, targets, ridge_lambda)
}
