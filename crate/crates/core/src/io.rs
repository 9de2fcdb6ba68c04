//! File formats.
//!
//! Matrices are either CSV (one row per line) or JSON
//! `{"rows": n, "cols": m, "data": [row-major]}`; the format is chosen by
//! file extension, `.csv` for CSV and anything else for JSON.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{NonnegFactorization, StochasticFactorization};
use crate::matcore::{array_from_rows, validate, CommMatrix, Tolerances};
use crate::shared::{SRPart, SRProtocol};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Json,
}

impl MatrixFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&Array2<f64>> for MatrixJson {
    fn from(m: &Array2<f64>) -> Self {
        Self { rows: m.nrows(), cols: m.ncols(), data: m.iter().copied().collect() }
    }
}

impl MatrixJson {
    pub fn to_array(&self) -> Result<Array2<f64>> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::EmptyMatrix { rows: self.rows, cols: self.cols });
        }
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "{}x{} matrix needs {} entries, found {}",
                self.rows,
                self.cols,
                self.rows * self.cols,
                self.data.len()
            )));
        }
        Ok(Array2::from_shape_vec((self.rows, self.cols), self.data.clone()).expect("length checked"))
    }
}

pub fn parse_matrix_json(text: &str) -> Result<Array2<f64>> {
    serde_json::from_str::<MatrixJson>(text)?.to_array()
}

pub fn parse_matrix_csv(text: &str) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: cannot parse {field:?}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    array_from_rows(&rows)
}

pub fn format_matrix_json(m: &Array2<f64>) -> String {
    let mut s = serde_json::to_string_pretty(&MatrixJson::from(m)).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn format_matrix_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn format_matrix(m: &Array2<f64>, format: MatrixFormat) -> String {
    match format {
        MatrixFormat::Csv => format_matrix_csv(m),
        MatrixFormat::Json => format_matrix_json(m),
    }
}

pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<Array2<f64>> {
    match format {
        MatrixFormat::Csv => parse_matrix_csv(text),
        MatrixFormat::Json => parse_matrix_json(text),
    }
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    parse_matrix(&fs::read_to_string(path)?, MatrixFormat::from_path(path))
}

pub fn read_comm_matrix(path: &Path, tol: &Tolerances) -> Result<CommMatrix> {
    validate(read_matrix(path)?, tol)
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    fs::write(path, format_matrix(m, MatrixFormat::from_path(path)))?;
    Ok(())
}

pub fn read_tolerances(path: &Path) -> Result<Tolerances> {
    let tol: Tolerances = serde_json::from_str(&fs::read_to_string(path)?)?;
    tol.check()?;
    Ok(tol)
}

/// `{"W": matrix, "H": matrix, "residual": x, "seed": s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationJson {
    #[serde(rename = "W")]
    pub w: MatrixJson,
    #[serde(rename = "H")]
    pub h: MatrixJson,
    pub residual: f64,
    pub seed: u64,
}

impl From<&NonnegFactorization> for FactorizationJson {
    fn from(f: &NonnegFactorization) -> Self {
        Self { w: (&f.w).into(), h: (&f.h).into(), residual: f.residual, seed: f.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartJson {
    pub weight: f64,
    #[serde(rename = "L")]
    pub l: MatrixJson,
    #[serde(rename = "R")]
    pub r: MatrixJson,
}

/// `{"d": 2, "parts": [{"weight": 0.5, "L": matrix, "R": matrix}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolJson {
    pub d: usize,
    pub parts: Vec<PartJson>,
}

impl ProtocolJson {
    pub fn into_protocol(self, tol: &Tolerances) -> Result<SRProtocol> {
        let parts = self
            .parts
            .into_iter()
            .map(|p| {
                Ok(SRPart {
                    weight: p.weight,
                    implementation: StochasticFactorization::new(p.l.to_array()?, p.r.to_array()?, tol)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SRProtocol::new(self.d, parts, tol)
    }

    pub fn from_protocol(p: &SRProtocol) -> Self {
        Self {
            d: p.d(),
            parts: p
                .parts()
                .iter()
                .map(|part| PartJson {
                    weight: part.weight,
                    l: (&part.implementation.l).into(),
                    r: (&part.implementation.r).into(),
                })
                .collect(),
        }
    }
}

pub fn read_protocol(path: &Path, tol: &Tolerances) -> Result<SRProtocol> {
    let json: ProtocolJson = serde_json::from_str(&fs::read_to_string(path)?)?;
    json.into_protocol(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::antidist_matrix;
    use ndarray::array;

    #[test]
    fn csv_parses_with_whitespace_and_comments() {
        let m = parse_matrix_csv("# ambiguous third label\n1, 0\n0,1\n0.5 , 0.5\n").unwrap();
        assert_eq!(m, array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]);
    }

    #[test]
    fn csv_rejects_garbage_and_ragged_rows() {
        assert!(matches!(parse_matrix_csv("1,x\n"), Err(Error::Format(_))));
        assert!(matches!(parse_matrix_csv("1,0\n1\n"), Err(Error::RaggedMatrix { row: 2, .. })));
        assert!(matches!(parse_matrix_csv(""), Err(Error::EmptyMatrix { .. })));
    }

    #[test]
    fn json_checks_length() {
        assert!(matches!(
            parse_matrix_json(r#"{"rows": 2, "cols": 2, "data": [1, 0, 0]}"#),
            Err(Error::Format(_))
        ));
        let m = parse_matrix_json(r#"{"rows": 1, "cols": 2, "data": [0.25, 0.75]}"#).unwrap();
        assert_eq!(m, array![[0.25, 0.75]]);
    }

    #[test]
    fn a7_reemits_identical_bytes() {
        let a7 = antidist_matrix(7).unwrap().into_array();
        for fmt in [MatrixFormat::Csv, MatrixFormat::Json] {
            let text = format_matrix(&a7, fmt);
            let back = parse_matrix(&text, fmt).unwrap();
            assert_eq!(back, a7);
            assert_eq!(format_matrix(&back, fmt), text);
        }
    }

    #[test]
    fn format_by_extension() {
        assert_eq!(MatrixFormat::from_path(Path::new("x.CSV")), MatrixFormat::Csv);
        assert_eq!(MatrixFormat::from_path(Path::new("x.json")), MatrixFormat::Json);
        assert_eq!(MatrixFormat::from_path(Path::new("x")), MatrixFormat::Json);
    }

    #[test]
    fn protocol_json_round_trip() {
        let text = r#"{"d": 1, "parts": [
            {"weight": 0.5, "L": {"rows": 2, "cols": 1, "data": [1, 1]},
                            "R": {"rows": 1, "cols": 2, "data": [1, 0]}},
            {"weight": 0.5, "L": {"rows": 2, "cols": 1, "data": [1, 1]},
                            "R": {"rows": 1, "cols": 2, "data": [0, 1]}}]}"#;
        let tol = Tolerances::default();
        let json: ProtocolJson = serde_json::from_str(text).unwrap();
        let p = json.clone().into_protocol(&tol).unwrap();
        assert_eq!(p.k(), 2);
        assert_eq!(ProtocolJson::from_protocol(&p), json);
    }
}
