//! CSV and JSON artifacts.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::shooting::RadialSolution;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes equally long columns under `header`. Floats use the shortest
/// round-trip representation, so reruns are byte-identical.
pub fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() {
        return Err(Error::Domain("header and column count differ".into()));
    }
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Domain("columns have different lengths".into()));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for i in 0..n {
        w.write_record(columns.iter().map(|c| c[i].to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_solution(path: &Path, sol: &RadialSolution) -> Result<()> {
    write_columns(path, &["r", "u", "du"], &[&sol.r, &sol.u, &sol.du])
}

/// Reads the `r`, `u`, `du` columns of a solution CSV.
pub fn read_solution(path: &Path, dim: usize) -> Result<RadialSolution> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let headers = rd.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column '{name}'", path.display())))
    };
    let (ir, iu, idu) = (col("r")?, col("u")?, col("du")?);
    let (mut r, mut u, mut du) = (vec![], vec![], vec![]);
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("{}: bad number on data line {}", path.display(), line + 1)))
        };
        r.push(get(ir)?);
        u.push(get(iu)?);
        du.push(get(idu)?);
    }
    RadialSolution::from_samples(r, u, du, dim)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let sol = RadialSolution::from_samples(vec![1.0, 2.0], vec![0.1 + 0.2, 4.0], vec![1e-300, -3.5], 3).unwrap();
        write_solution(&path, &sol).unwrap();
        let back = read_solution(&path, 3).unwrap();
        assert_eq!(back.r, sol.r);
        assert_eq!(back.u, sol.u);
        assert_eq!(back.du, sol.du);
    }

    #[test]
    fn missing_column_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, "r,u\n1,2\n").unwrap();
        assert!(matches!(read_solution(&path, 3), Err(Error::Parse(_))));
    }
}
