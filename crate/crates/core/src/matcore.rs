//! Core matrix types: tolerances, validated communication matrices,
//! numerical rank, and reduction to canonical form.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub row_sum_tol: f64,
    pub nonneg_tol: f64,
    /// Entrywise equality, used for duplicate rows and 0/1 detection.
    pub entry_eq_tol: f64,
    /// Relative singular-value cutoff.
    pub rank_rel_tol: f64,
    /// Max-entry residual accepted for an exact factorization.
    pub recon_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            row_sum_tol: 1e-9,
            nonneg_tol: 1e-12,
            entry_eq_tol: 1e-9,
            rank_rel_tol: 1e-9,
            recon_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn check(&self) -> Result<()> {
        let fields = [
            ("row_sum_tol", self.row_sum_tol),
            ("nonneg_tol", self.nonneg_tol),
            ("entry_eq_tol", self.entry_eq_tol),
            ("rank_rel_tol", self.rank_rel_tol),
            ("recon_tol", self.recon_tol),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }
}

/// A row-stochastic `n x m` matrix of conditional probabilities.
///
/// Row `a` is the output distribution for input `a`. Construction goes
/// through [`validate`], so every value of this type has nonnegative entries
/// and rows summing to one within the tolerances it was checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct CommMatrix {
    data: Array2<f64>,
}

impl CommMatrix {
    pub fn new(raw: Array2<f64>, tol: &Tolerances) -> Result<Self> {
        validate(raw, tol)
    }

    pub fn from_rows(rows: &[Vec<f64>], tol: &Tolerances) -> Result<Self> {
        validate(array_from_rows(rows)?, tol)
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "identity needs n >= 1");
        Self { data: linalg::identity(n) }
    }

    /// Wraps an array the caller has already checked.
    pub(crate) fn from_array_unchecked(data: Array2<f64>) -> Self {
        Self { data }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn max_abs_diff(&self, other: &CommMatrix) -> Option<f64> {
        (self.shape() == other.shape())
            .then(|| linalg::max_abs_diff(self.view(), other.view()))
    }

    /// True if every entry is within `entry_eq_tol` of 0 or 1.
    pub fn is_deterministic(&self, tol: &Tolerances) -> bool {
        self.first_non_binary(tol).is_none()
    }

    fn first_non_binary(&self, tol: &Tolerances) -> Option<(usize, usize, f64)> {
        self.data
            .indexed_iter()
            .find(|(_, &v)| v.abs() > tol.entry_eq_tol && (v - 1.0).abs() > tol.entry_eq_tol)
            .map(|((r, c), &v)| (r, c, v))
    }

    fn rows_equal(&self, a: usize, b: usize, tol: f64) -> bool {
        self.data
            .row(a)
            .iter()
            .zip(self.data.row(b).iter())
            .all(|(x, y)| (x - y).abs() <= tol)
    }
}

pub fn array_from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(Error::EmptyMatrix { rows: n, cols: m });
    }
    let mut flat = Vec::with_capacity(n * m);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(Error::RaggedMatrix { row: i + 1, len: row.len(), expected: m });
        }
        flat.extend_from_slice(row);
    }
    Ok(Array2::from_shape_vec((n, m), flat).expect("shape checked above"))
}

/// Checks nonnegativity and row sums, clipping entries in `[-nonneg_tol, 0)`
/// to zero. Error positions are 1-indexed.
pub fn validate(mut raw: Array2<f64>, tol: &Tolerances) -> Result<CommMatrix> {
    tol.check()?;
    let (n, m) = raw.dim();
    if n == 0 || m == 0 {
        return Err(Error::EmptyMatrix { rows: n, cols: m });
    }
    for ((r, c), v) in raw.indexed_iter_mut() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row: r + 1, col: c + 1 });
        }
        if *v < 0.0 {
            if *v < -tol.nonneg_tol {
                return Err(Error::NegativeEntry { row: r + 1, col: c + 1, value: *v });
            }
            *v = 0.0;
        }
    }
    for (r, row) in raw.axis_iter(Axis(0)).enumerate() {
        let sum = row.sum();
        if (sum - 1.0).abs() > tol.row_sum_tol {
            return Err(Error::RowSumViolation { row: r + 1, sum });
        }
    }
    Ok(CommMatrix { data: raw })
}

/// Count of singular values above `rank_rel_tol` times the largest.
pub fn numerical_rank(c: &CommMatrix, tol: &Tolerances) -> usize {
    linalg::rank_with_cutoff(c.view(), tol.rank_rel_tol)
}

/// Canonical form of a communication matrix: zero columns and duplicate
/// rows removed, plus the 0/1 matrices that undo the reduction.
#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub reduced: CommMatrix,
    /// `n x n'`; row `a` has a single 1 in the column of its representative.
    pub row_selector: Array2<f64>,
    /// `m' x m`; reinserts the removed zero columns.
    pub col_injector: Array2<f64>,
    /// 0-based indices of the representative rows, in original order.
    pub kept_rows: Vec<usize>,
    /// 0-based indices of the surviving columns, in original order.
    pub kept_cols: Vec<usize>,
}

impl ReductionResult {
    /// `row_selector * reduced * col_injector`.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.row_selector.dot(self.reduced.as_array()).dot(&self.col_injector)
    }
}

/// Removes zero columns, then keeps the lowest-index row of every
/// duplicate-row class.
pub fn reduce(c: &CommMatrix, tol: &Tolerances) -> ReductionResult {
    let (n, m) = c.shape();
    let kept_cols: Vec<usize> = (0..m)
        .filter(|&j| c.data.column(j).iter().any(|&v| v >= tol.nonneg_tol))
        .collect();

    let mut kept_rows: Vec<usize> = Vec::new();
    let mut class_of = vec![0usize; n];
    for a in 0..n {
        match kept_rows
            .iter()
            .position(|&rep| c.rows_equal(rep, a, tol.entry_eq_tol))
        {
            Some(class) => class_of[a] = class,
            None => {
                class_of[a] = kept_rows.len();
                kept_rows.push(a);
            }
        }
    }

    let reduced = Array2::from_shape_fn((kept_rows.len(), kept_cols.len()), |(i, j)| {
        c.data[[kept_rows[i], kept_cols[j]]]
    });
    let mut row_selector = Array2::zeros((n, kept_rows.len()));
    for (a, &class) in class_of.iter().enumerate() {
        row_selector[[a, class]] = 1.0;
    }
    let mut col_injector = Array2::zeros((kept_cols.len(), m));
    for (j, &orig) in kept_cols.iter().enumerate() {
        col_injector[[j, orig]] = 1.0;
    }

    ReductionResult {
        reduced: CommMatrix::from_array_unchecked(reduced),
        row_selector,
        col_injector,
        kept_rows,
        kept_cols,
    }
}

/// Size `d` of the permuted identity a deterministic matrix reduces to.
pub fn deterministic_dimension(c: &CommMatrix, tol: &Tolerances) -> Result<usize> {
    if let Some((row, col, value)) = c.first_non_binary(tol) {
        return Err(Error::NotDeterministic { row: row + 1, col: col + 1, value });
    }
    let red = reduce(c, tol);
    let (d, d_cols) = red.reduced.shape();
    if d != d_cols {
        return Err(Error::NotPermutation);
    }
    let is_one = |v: f64| (v - 1.0).abs() <= tol.entry_eq_tol;
    let view = red.reduced.view();
    let rows_ok = view
        .axis_iter(Axis(0))
        .all(|row| row.iter().filter(|&&v| is_one(v)).count() == 1);
    let cols_ok = view
        .axis_iter(Axis(1))
        .all(|col| col.iter().filter(|&&v| is_one(v)).count() == 1);
    if rows_ok && cols_ok {
        Ok(d)
    } else {
        Err(Error::NotPermutation)
    }
}
