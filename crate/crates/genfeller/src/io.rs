//! File formats: tabulated interaction functions, CSV artifacts, JSON
//! reports.

use std::fs;
use std::path::{Path, PathBuf};

use genfeller_core::InteractionFunction;
use serde::Serialize;

use crate::error::{CliError, UsageError};

/// Relative tolerance on the spacing of a tabulated grid.
const GRID_TOLERANCE: f64 = 1e-9;

/// Loads `f` from a two-column CSV `(z, f(z))`. The `z` column must be a
/// uniform grid starting at 0; a header row is optional.
pub fn read_table(path: &Path) -> Result<InteractionFunction, UsageError> {
    let fail = |reason: String| UsageError::Table { path: path.to_path_buf(), reason };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let mut zs = Vec::new();
    let mut vs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        if rec.len() != 2 {
            return Err(fail(format!("row {} has {} columns, expected 2", i + 1, rec.len())));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(z), Ok(v)) => {
                zs.push(z);
                vs.push(v);
            }
            // header
            _ if i == 0 => continue,
            _ => return Err(fail(format!("row {} is not numeric", i + 1))),
        }
    }
    if zs.len() < 2 {
        return Err(fail("need at least two rows".into()));
    }
    if zs[0] != 0.0 {
        return Err(fail("grid must start at z = 0".into()));
    }
    let step = zs[1] - zs[0];
    for (i, z) in zs.iter().enumerate() {
        let expected = step * i as f64;
        if (z - expected).abs() > GRID_TOLERANCE * expected.max(step) {
            return Err(fail(format!("grid is not uniform at row for z = {z}")));
        }
    }
    Ok(InteractionFunction::tabulated(step, vs)?)
}

/// Formats a float with the shortest representation that round-trips, so
/// reruns produce byte-identical files.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Collects the files an experiment writes into its output directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)?;
        fs::write(self.dir.join(name), text + "\n")?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Reads a numeric column of a CSV file with a header row.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let idx = headers.iter().position(|h| h == column).ok_or_else(|| {
        UsageError::Config(format!("{} has no column named {column:?}", path.display()))
    })?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let v: f64 = rec[idx].parse().map_err(|_| {
            UsageError::Config(format!("{}: non-numeric value {:?}", path.display(), &rec[idx]))
        })?;
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_uniform_tables() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        fs::write(&p, "z,f\n0,0\n0.5,0.25\n1,0\n").unwrap();
        let f = read_table(&p).unwrap();
        assert_eq!(f.value(0.75).unwrap(), 0.125);
        fs::write(&p, "0,0\n0.5,0.25\n1.2,0\n").unwrap();
        assert!(read_table(&p).is_err());
        fs::write(&p, "0,1\n0.5,0.25\n").unwrap();
        assert!(read_table(&p).is_err());
    }

    #[test]
    fn shortest_float_format() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(1e-7), "0.0000001");
    }
}
