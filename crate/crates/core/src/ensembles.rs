//! Named communication matrices: the antidistinguishability family `A_n`
//! and the small gate examples.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{array, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::CommMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    #[serde(rename = "NOT")]
    Not,
    #[serde(rename = "XOR")]
    Xor,
    /// Two perfectly transmitted labels and a third that lands on either.
    #[serde(rename = "AMBIG3")]
    Ambig3,
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NOT" => Ok(Gate::Not),
            "XOR" => Ok(Gate::Xor),
            "AMBIG3" => Ok(Gate::Ambig3),
            _ => Err(Error::UnknownName(s.to_string())),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gate::Not => "NOT",
            Gate::Xor => "XOR",
            Gate::Ambig3 => "AMBIG3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixName {
    Antidist(usize),
    Gate(Gate),
}

impl fmt::Display for MatrixName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixName::Antidist(n) => write!(f, "ANTIDIST({n})"),
            MatrixName::Gate(g) => g.fmt(f),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NamedMatrix {
    pub name: MatrixName,
    pub matrix: CommMatrix,
}

impl NamedMatrix {
    pub fn build(name: MatrixName) -> Result<Self> {
        let matrix = match name {
            MatrixName::Antidist(n) => antidist_matrix(n)?,
            MatrixName::Gate(g) => gate_matrix(g),
        };
        Ok(Self { name, matrix })
    }
}

/// Entry of `A_n` at circulant offset `offset = (b - a) mod n`.
///
/// The offset is folded to `min(offset, n - offset)` so that the matrix is
/// bitwise symmetric and circulant; offset 0 is an exact zero.
pub fn antidist_entry(n: usize, offset: usize) -> f64 {
    let offset = offset % n;
    if offset == 0 {
        return 0.0;
    }
    let k = offset.min(n - offset);
    let s = (k as f64 * PI / n as f64).sin();
    2.0 / n as f64 * s * s
}

/// The `n x n` antidistinguishability matrix with entries
/// `(2/n) sin^2((a - b) pi / n)`.
pub fn antidist_matrix(n: usize) -> Result<CommMatrix> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    let data = Array2::from_shape_fn((n, n), |(a, b)| antidist_entry(n, (b + n - a) % n));
    Ok(CommMatrix::from_array_unchecked(data))
}

pub fn gate_matrix(gate: Gate) -> CommMatrix {
    let data = match gate {
        Gate::Not => array![[0.0, 1.0], [1.0, 0.0]],
        Gate::Xor => array![[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [1.0, 0.0]],
        Gate::Ambig3 => array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]],
    };
    CommMatrix::from_array_unchecked(data)
}
