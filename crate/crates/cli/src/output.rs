//! CSV/JSON writers and the strict CSV schema checker.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use zrp_core::empirical::GeneralizedYoungMeasure;

use crate::CliError;

/// Shortest round-trip text for a float; infinities print as `inf` / `-inf`.
pub fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

/// Output directory with helpers that create it lazily.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        for row in rows {
            w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Int,
    Float,
    Text,
}

/// Expected header and column types of every CSV the CLI writes, keyed by file name.
pub fn schema_for(file_name: &str) -> Option<Vec<(&'static str, Column)>> {
    use Column::*;
    let stem = file_name.strip_suffix(".csv")?;
    Some(match stem {
        "thermo" => vec![("phi", Float), ("Z", Float), ("R", Float)],
        "phibar" => vec![("rho", Float), ("phibar", Float)],
        "canonical_samples" => vec![("sample", Int), ("site", Int), ("occupancy", Int)],
        "canonical_marginal" => vec![("k", Int), ("exact", Float), ("empirical", Float)],
        "pde" => vec![("t", Float), ("u_index", Int), ("rho", Float)],
        s if s.starts_with("fields_") => vec![
            ("t", Float),
            ("site", Int),
            ("u_1", Float),
            ("u_2", Float),
            ("density", Float),
            ("jump_rate", Float),
            ("current_1", Float),
            ("current_2", Float),
        ],
        "one_block" | "eoe" | "continuity" | "qv" | "jump_bound" | "double_block" | "energy" | "hydro" => {
            vec![("statistic", Text), ("field", Text), ("index", Int), ("value", Float)]
        }
        _ => return None,
    })
}

/// Checks a CSV file against its schema: exact header, row width, and column types.
///
/// Young-measure files carry `#` metadata and two sections; they are checked by
/// parsing them back.
pub fn check_csv(path: &Path) -> Result<usize, CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let fail = |msg: String| CliError::Schema(format!("{name}: {msg}"));
    if name.starts_with("young_") && name.ends_with(".csv") {
        GeneralizedYoungMeasure::from_csv(&text).map_err(|e| fail(e.to_string()))?;
        return Ok(text.lines().filter(|l| !l.starts_with('#')).count());
    }
    let schema = schema_for(&name).ok_or_else(|| fail("no schema for this file name".into()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| fail(e.to_string()))?.clone();
    let expected: Vec<&str> = schema.iter().map(|(h, _)| *h).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(fail(format!("header {:?}, expected {:?}", header.iter().collect::<Vec<_>>(), expected)));
    }
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        for ((field, (col, kind)), line) in record.iter().zip(&schema).zip(std::iter::repeat(i + 2)) {
            let ok = match kind {
                Column::Int => field.parse::<i64>().is_ok(),
                Column::Float => field.parse::<f64>().is_ok_and(|v| !v.is_nan()),
                Column::Text => !field.is_empty(),
            };
            if !ok {
                return Err(fail(format!("line {line}, column {col}: bad value {field:?}")));
            }
        }
        rows += 1;
    }
    Ok(rows)
}

/// Checks every `.csv` file directly inside `dir`, in name order.
pub fn check_dir(dir: &Path) -> Result<Vec<(PathBuf, usize)>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    files.into_iter().map(|p| check_csv(&p).map(|n| (p, n))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.0, 0.1, 1e-20, 3.5e300, -2.25] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
    }

    #[test]
    fn checker_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        let good = out.write_csv("phibar.csv", &["rho", "phibar"], [vec![num(0.5), num(0.25)]]).unwrap();
        assert_eq!(check_csv(&good).unwrap(), 1);

        out.write_text("thermo.csv", "phi,Z\n0.1,1.0\n").unwrap();
        out.write_text("pde.csv", "t,u_index,rho\n0.0,1.5,0.2\n").unwrap();
        out.write_text("eoe.csv", "statistic,field,index,value\neoe,x,1\n").unwrap();
        out.write_text("other.csv", "a\n1\n").unwrap();
        for name in ["thermo.csv", "pde.csv", "eoe.csv", "other.csv"] {
            assert!(matches!(check_csv(&out.path(name)), Err(CliError::Schema(_))), "{name}");
        }
    }
}
