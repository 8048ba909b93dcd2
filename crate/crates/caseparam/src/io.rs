//! CSV ingestion and export.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use caseparam_core::{Dataset, ResponseKind};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("file has no response column named {0:?}")]
    MissingResponse(String),
    #[error("row {row}: missing cell in column {column:?}")]
    MissingCell { row: usize, column: String },
    #[error("row {row}: column {column:?} holds non-numeric value {value:?}")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("column {0:?} is constant")]
    ConstantColumn(String),
    #[error("row {row}: label {value} is not valid for --labels {mode}")]
    BadLabel { row: usize, value: f64, mode: &'static str },
    #[error("{0}")]
    Data(#[from] caseparam_core::Error),
}

/// How the response column is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Continuous response, used as is.
    Continuous,
    /// Labels in {0, 1}, mapped to −1/+1.
    ZeroOne,
    /// Labels already in {−1, +1}.
    PlusMinusOne,
}

impl LabelMode {
    fn name(self) -> &'static str {
        match self {
            Self::Continuous => "none",
            Self::ZeroOne => "01",
            Self::PlusMinusOne => "pm1",
        }
    }
}

/// A loaded table: standardized dataset plus column names.
#[derive(Debug, Clone)]
pub struct Table {
    pub data: Dataset,
    pub covariates: Vec<String>,
    pub response: String,
}

pub fn load_csv(path: &Path, response: &str, labels: LabelMode, intercept: bool) -> Result<Table, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    read_csv(file, response, labels, intercept)
}

pub fn read_csv<R: io::Read>(reader: R, response: &str, labels: LabelMode, intercept: bool) -> Result<Table, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let resp_col = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| IngestError::MissingResponse(response.to_owned()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let mut values = Vec::with_capacity(header.len());
        for (c, name) in header.iter().enumerate() {
            let cell = record.get(c).unwrap_or("");
            if cell.is_empty() {
                return Err(IngestError::MissingCell { row, column: name.clone() });
            }
            let v: f64 = cell.parse().map_err(|_| IngestError::NonNumeric {
                row,
                column: name.clone(),
                value: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonNumeric { row, column: name.clone(), value: cell.to_owned() });
            }
            values.push(v);
        }
        rows.push(values);
    }
    let covariates: Vec<String> = header.iter().enumerate().filter(|(c, _)| *c != resp_col).map(|(_, h)| h.clone()).collect();
    let n = rows.len();
    let p = covariates.len();
    let cov_idx: Vec<usize> = (0..header.len()).filter(|&c| c != resp_col).collect();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][cov_idx[j]]);
    let mut y = DVector::from_fn(n, |i, _| rows[i][resp_col]);
    let kind = match labels {
        LabelMode::Continuous => ResponseKind::Continuous,
        LabelMode::ZeroOne | LabelMode::PlusMinusOne => {
            for (i, v) in y.iter_mut().enumerate() {
                *v = match (labels, *v) {
                    (LabelMode::ZeroOne, 0.0) => -1.0,
                    (LabelMode::ZeroOne, 1.0) => 1.0,
                    (LabelMode::PlusMinusOne, l) if l == 1.0 || l == -1.0 => l,
                    (_, value) => return Err(IngestError::BadLabel { row: i + 1, value, mode: labels.name() }),
                };
            }
            ResponseKind::BinaryPM1
        }
    };
    for (j, col) in x.column_iter().enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(IngestError::ConstantColumn(covariates[j].clone()));
        }
    }
    let data = Dataset::standardized(x, y, intercept, kind)?;
    Ok(Table { data, covariates, response: response.to_owned() })
}

/// Raw-scale covariates of a dataset, undoing any stored standardization.
pub fn raw_covariates(data: &Dataset) -> DMatrix<f64> {
    match data.standardization() {
        Some(st) => {
            let mut x = data.x().clone();
            for (j, mut col) in x.column_iter_mut().enumerate() {
                col *= st.scales[j];
                col.add_scalar_mut(st.means[j]);
            }
            x
        }
        None => data.x().clone(),
    }
}

/// Writes covariates on the raw scale followed by the response.
pub fn write_csv<W: Write>(writer: W, table: &Table) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = table.covariates.clone();
    header.push(table.response.clone());
    w.write_record(&header)?;
    let x = raw_covariates(&table.data);
    for i in 0..table.data.n() {
        let mut rec: Vec<String> = x.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(format!("{:?}", table.data.y()[i]));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| IngestError::Io { path: "<output>".into(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_file_loads() {
        let t = read_csv("x,y\n1,2\n2,3\n4,1\n".as_bytes(), "y", LabelMode::Continuous, true).unwrap();
        assert_eq!((t.data.n(), t.data.p()), (3, 1));
        assert_eq!(t.covariates, vec!["x".to_string()]);
    }

    #[test]
    fn constant_column_is_named() {
        let err = read_csv("a,b,y\n1,5,2\n2,5,3\n4,5,1\n".as_bytes(), "y", LabelMode::Continuous, true).unwrap_err();
        assert!(err.to_string().contains("\"b\""), "{err}");
    }

    #[test]
    fn non_numeric_and_missing_cells() {
        let err = read_csv("a,y\n1,2\nfoo,3\n".as_bytes(), "y", LabelMode::Continuous, true).unwrap_err();
        assert!(matches!(err, IngestError::NonNumeric { row: 2, .. }));
        let err = read_csv("a,y\n1,2\n,3\n".as_bytes(), "y", LabelMode::Continuous, true).unwrap_err();
        assert!(matches!(err, IngestError::MissingCell { row: 2, .. }));
    }

    #[test]
    fn zero_one_labels_map_to_signs() {
        let t = read_csv("a,y\n1,0\n2,1\n3,1\n".as_bytes(), "y", LabelMode::ZeroOne, true).unwrap();
        assert_eq!(t.data.y().as_slice(), &[-1.0, 1.0, 1.0]);
        assert!(read_csv("a,y\n1,0\n2,2\n".as_bytes(), "y", LabelMode::ZeroOne, true).is_err());
        assert!(read_csv("a,y\n1,0\n2,1\n".as_bytes(), "y", LabelMode::PlusMinusOne, true).is_err());
    }

    #[test]
    fn round_trip() {
        let src = "a,b,y\n1.5,-2,0.25\n2,7.125,3\n-4,1,1\n0.1,0.2,0.3\n";
        let t = read_csv(src.as_bytes(), "y", LabelMode::Continuous, true).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &t).unwrap();
        let back = read_csv(buf.as_slice(), "y", LabelMode::Continuous, true).unwrap();
        assert!((t.data.x() - back.data.x()).amax() <= 1e-12);
        assert_eq!(t.data.y(), back.data.y());
        assert_eq!(t.covariates, back.covariates);
    }
}
