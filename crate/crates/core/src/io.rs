//! CSV input for datasets and number formatting for CSV output.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::glm::{Dataset, Family, GlmError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: missing or non-numeric value `{value}`")]
    BadValue { row: usize, column: String, value: String },
    #[error("no data rows")]
    Empty,
    #[error(transparent)]
    Dataset(#[from] GlmError),
    #[error("{0}")]
    Schema(String),
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Read a dataset from CSV. `predictors` defaults to every non-outcome column.
/// No intercept column is added.
pub fn read_dataset_csv(
    path: &Path,
    outcome: &str,
    predictors: Option<&[String]>,
    family: Family,
) -> Result<Dataset, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    read_dataset(file, outcome, predictors, family)
}

pub fn read_dataset<R: std::io::Read>(
    input: R,
    outcome: &str,
    predictors: Option<&[String]>,
    family: Family,
) -> Result<Dataset, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::MissingColumn(name.to_string()))
    };
    let y_idx = find(outcome)?;
    let names: Vec<String> = match predictors {
        Some(p) => p.to_vec(),
        None => headers.iter().filter(|h| *h != outcome).cloned().collect(),
    };
    let x_idx = names.iter().map(|n| find(n)).collect::<Result<Vec<_>, _>>()?;
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64, IoError> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IoError::BadValue {
                    row: r + 1,
                    column: headers[i].clone(),
                    value: raw.to_string(),
                })
        };
        ys.push(get(y_idx)?);
        for &i in &x_idx {
            xs.push(get(i)?);
        }
    }
    if ys.is_empty() {
        return Err(IoError::Empty);
    }
    let n = ys.len();
    let x = DMatrix::from_row_slice(n, names.len(), &xs);
    Ok(Dataset::new(x, DVector::from_vec(ys), family, names)?)
}

/// Write a dataset (outcome `y` first) with 10 significant digits.
pub fn write_dataset<W: std::io::Write>(d: &Dataset, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend(d.names().iter().cloned());
    w.write_record(&header)?;
    for i in 0..d.n() {
        let mut row = vec![fmt_g10(d.y()[i])];
        row.extend(d.x().row(i).iter().map(|v| fmt_g10(*v)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| IoError::Io {
        path: "<csv>".into(),
        source: e,
    })?;
    Ok(())
}

/// `%.10g` formatting: ten significant digits, trailing zeros removed.
pub fn fmt_g10(v: f64) -> String {
    fmt_g(v, 10)
}

pub fn fmt_g(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parse a float that may be written as `inf`, `-inf` or `nan`.
pub fn parse_f64(s: &str) -> Option<f64> {
    crate::bf::sentinel::parse_text(s.trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_formatting() {
        assert_eq!(fmt_g10(0.0), "0");
        assert_eq!(fmt_g10(1.5), "1.5");
        assert_eq!(fmt_g10(2f64.ln()), "0.6931471806");
        assert_eq!(fmt_g10(-123456.789), "-123456.789");
        assert_eq!(fmt_g10(1e-7), "1e-07");
        assert_eq!(fmt_g10(12345678901.0), "1.23456789e+10");
        assert_eq!(fmt_g10(9.9999999999), "10");
        assert_eq!(fmt_g10(0.0001), "0.0001");
        assert_eq!(fmt_g10(f64::NEG_INFINITY), "-inf");
        assert_eq!(parse_f64("-inf"), Some(f64::NEG_INFINITY));
    }

    #[test]
    fn csv_round_trip() {
        let src = "y,a,b\n1.0,0.5,2\n0,1.5,-1\n2,3,4\n";
        let d = read_dataset(src.as_bytes(), "y", None, Family::Gaussian).unwrap();
        assert_eq!(d.names(), ["a", "b"]);
        assert_eq!(d.x()[(1, 0)], 1.5);
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice(), "y", None, Family::Gaussian).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn missing_values_are_errors() {
        let src = "y,a\n1,\n0,2\n";
        assert!(matches!(
            read_dataset(src.as_bytes(), "y", None, Family::Gaussian),
            Err(IoError::BadValue { row: 1, .. })
        ));
        assert!(matches!(
            read_dataset("y,a\n1,2\n".as_bytes(), "z", None, Family::Gaussian),
            Err(IoError::MissingColumn(_))
        ));
        let sel = vec!["a".to_string()];
        assert!(read_dataset("y,a,b\n1,2,x\n0,1,y\n".as_bytes(), "y", Some(&sel), Family::Gaussian).is_ok());
    }
}
