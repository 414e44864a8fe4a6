use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::survival::{Observation, Status, SurvivalDataset};

fn cell_error(row: usize, column: &str, message: String) -> Error {
    Error::Dataset {
        row,
        column: column.to_string(),
        message,
    }
}

/// Reads a survival dataset from CSV text. Lines starting with `#` are
/// comments. Required columns are `time` (positive) and `status` (1 for an
/// event, 0 for censoring); an optional `group` column holds labels and
/// every other column is a numeric covariate. Rows are numbered from 1
/// after the header.
pub fn read_dataset<R: Read>(reader: R, time_unit: &str) -> Result<SurvivalDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let time_col = find("time").ok_or_else(|| cell_error(0, "time", "missing required column".into()))?;
    let status_col = find("status").ok_or_else(|| cell_error(0, "status", "missing required column".into()))?;
    let group_col = find("group");
    let covariates: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != time_col && *i != status_col && Some(*i) != group_col)
        .map(|(i, h)| (i, h.clone()))
        .collect();

    let mut observations = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| cell_error(row, "", e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let raw = field(time_col);
        let time: f64 = raw
            .parse()
            .map_err(|_| cell_error(row, "time", format!("cannot parse '{raw}' as a number")))?;
        if !(time.is_finite() && time > 0.0) {
            return Err(cell_error(row, "time", format!("time must be positive and finite, got {raw}")));
        }
        let status = match field(status_col) {
            "1" => Status::Event,
            "0" => Status::Censored,
            other => {
                return Err(cell_error(row, "status", format!("expected 1 or 0, got '{other}'")));
            }
        };
        let mut z = Vec::with_capacity(covariates.len());
        for (i, name) in &covariates {
            let raw = field(*i);
            let v: f64 = raw
                .parse()
                .map_err(|_| cell_error(row, name, format!("cannot parse '{raw}' as a number")))?;
            if !v.is_finite() {
                return Err(cell_error(row, name, format!("non-finite value {raw}")));
            }
            z.push(v);
        }
        let group = group_col.map(field).filter(|g| !g.is_empty()).map(str::to_string);
        observations.push(Observation {
            time,
            status,
            group,
            covariates: z,
        });
    }
    if observations.is_empty() {
        return Err(cell_error(0, "", "no data rows".into()));
    }
    SurvivalDataset::with_covariates(observations, covariates.into_iter().map(|(_, n)| n).collect(), time_unit)
}

/// Loads a dataset file; see [`read_dataset`] for the format.
pub fn load_dataset_csv(path: &Path) -> Result<SurvivalDataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(std::io::BufReader::new(file), "")
}

/// Writes a dataset in the format read by [`read_dataset`], times at full
/// precision, after a `# seed=` comment line.
pub fn write_dataset<W: Write>(mut out: W, data: &SurvivalDataset, seed: u64) -> Result<()> {
    writeln!(out, "# seed={seed}")?;
    let grouped = data.observations().iter().any(|o| o.group.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string(), "status".to_string()];
    if grouped {
        header.push("group".into());
    }
    header.extend(data.covariate_names().iter().cloned());
    w.write_record(&header)?;
    for o in data.observations() {
        let mut rec = vec![o.time.to_string(), if o.status.is_event() { "1" } else { "0" }.to_string()];
        if grouped {
            rec.push(o.group.clone().unwrap_or_default());
        }
        rec.extend(o.covariates.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_csv(path: &Path, data: &SurvivalDataset, seed: u64) -> Result<()> {
    write_dataset(std::fs::File::create(path)?, data, seed)
}
