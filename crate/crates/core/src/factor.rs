//! Nonnegative factorization.
//!
//! [`nmf`] is a multi-restart hierarchical alternating least squares (HALS)
//! search used to certify upper bounds on the nonnegative rank. A failed
//! search is evidence only; it never becomes a lower bound.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::antidist_entry;
use crate::error::{Error, Result};
use crate::linalg;
use crate::matcore::{CommMatrix, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmfConfig {
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Max-entry residual that counts as an exact factorization.
    pub target_residual: f64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        Self { max_iter: 5000, restarts: 32, seed: 42, target_residual: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegFactorization {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
    /// `max |C - W H|`.
    pub residual: f64,
    pub inner_dim: usize,
    pub seed: u64,
    /// Iterations spent by the winning restart.
    pub iterations: usize,
    pub restarts_used: usize,
    /// 0-based index of the winning restart.
    pub best_restart: usize,
}

/// Random stream for restart `t`: ChaCha8 keyed by `seed`, stream `t`.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

struct RestartOutcome {
    w: Array2<f64>,
    h: Array2<f64>,
    residual: f64,
    iterations: usize,
}

const CHECK_EVERY: usize = 100;
const STALL_REL: f64 = 1e-12;
const DEGENERATE: f64 = 1e-24;

/// Uniform on `(0, 1]`.
fn unit_open_closed(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

fn init_factors(c: ArrayView2<f64>, r: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Array2<f64>) {
    let (n, m) = c.dim();
    let row_norms: Vec<f64> = c.axis_iter(Axis(0)).map(|row| row.dot(&row).sqrt()).collect();
    let mut w = Array2::zeros((n, r));
    for a in 0..n {
        for l in 0..r {
            w[[a, l]] = unit_open_closed(rng) * row_norms[a];
        }
    }
    let mut h = Array2::zeros((r, m));
    for v in h.iter_mut() {
        *v = unit_open_closed(rng);
    }
    // least-squares optimal global scale
    let wh = w.dot(&h);
    let num: f64 = c.iter().zip(wh.iter()).map(|(x, y)| x * y).sum();
    let den = linalg::frobenius_sq(wh.view());
    if den > 0.0 && num > 0.0 {
        w.mapv_inplace(|x| x * num / den);
    }
    (w, h)
}

/// One HALS pass over the rows of `h` given `w`; shared by both halves of
/// the alternation (the `w` update runs it on the transposed problem).
fn hals_update(
    target: &mut Array2<f64>,
    gram: &mut Array2<f64>,
    cross: &mut Array2<f64>,
    other: &mut Array2<f64>,
    c_for_cross: ArrayView2<f64>,
    floor: f64,
) {
    let r = target.nrows();
    let cols = target.ncols();
    for l in 0..r {
        if gram[[l, l]] <= DEGENERATE {
            // dead component: revive the partner column and take a
            // multiplicative step on this row instead
            other.column_mut(l).fill(floor);
            let partner = other.column(l);
            for k in 0..r {
                let g = partner.dot(&other.column(k));
                gram[[l, k]] = g;
                gram[[k, l]] = g;
            }
            let new_cross = partner.dot(&c_for_cross);
            cross.row_mut(l).assign(&new_cross);
            for b in 0..cols {
                let cur = target[[l, b]].max(floor);
                let denom: f64 = (0..r).map(|k| gram[[l, k]] * target[[k, b]]).sum::<f64>() + floor;
                target[[l, b]] = cur * cross[[l, b]] / denom;
            }
            continue;
        }
        let inv = 1.0 / gram[[l, l]];
        for b in 0..cols {
            let mut acc = cross[[l, b]];
            for k in 0..r {
                acc -= gram[[l, k]] * target[[k, b]];
            }
            target[[l, b]] = (target[[l, b]] + acc * inv).max(0.0);
        }
    }
}

fn hals_restart(c: ArrayView2<f64>, r: usize, cfg: &NmfConfig, rng: &mut ChaCha8Rng) -> RestartOutcome {
    let (mut w, mut h) = init_factors(c, r, rng);
    let ct = c.t().to_owned();
    let floor = 1e-8 * c.iter().fold(0.0_f64, |a, &b| a.max(b)).max(f64::MIN_POSITIVE);
    let mut last_obj = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=cfg.max_iter {
        iterations = it;
        // H rows given W
        let mut wtw = w.t().dot(&w);
        let mut wtc = w.t().dot(&c);
        hals_update(&mut h, &mut wtw, &mut wtc, &mut w, c, floor);

        // W columns given H, as rows of W^T
        let mut wt = w.t().to_owned();
        let mut hht = h.dot(&h.t());
        let mut hct = h.dot(&ct);
        let mut ht = h.t().to_owned();
        hals_update(&mut wt, &mut hht, &mut hct, &mut ht, ct.view(), floor);
        h = ht.t().to_owned();
        w = wt.t().to_owned();

        if it % CHECK_EVERY == 0 {
            let diff = &c - &w.dot(&h);
            let obj = linalg::frobenius_sq(diff.view());
            if obj <= 1e-30 || (last_obj.is_finite() && last_obj - obj <= STALL_REL * last_obj) {
                break;
            }
            last_obj = obj;
        }
    }
    let residual = linalg::max_entry_residual(c, w.view(), h.view());
    RestartOutcome { w, h, residual, iterations }
}

/// Searches for `C = W H` with `W` `n x r`, `H` `r x m`, both nonnegative.
///
/// Restarts run in parallel; restart `t` draws from [`restart_rng`]`(seed, t)`
/// and the winner is the lowest residual, ties broken by lowest index, so the
/// result does not depend on scheduling.
pub fn nmf(c: &CommMatrix, r: usize, cfg: &NmfConfig) -> Result<NonnegFactorization> {
    nmf_array(c.view(), r, cfg)
}

pub(crate) fn nmf_array(c: ArrayView2<f64>, r: usize, cfg: &NmfConfig) -> Result<NonnegFactorization> {
    let (n, m) = c.dim();
    if r == 0 || r > n.min(m) {
        return Err(Error::InvalidParams(format!(
            "inner dimension {r} outside [1, {}]",
            n.min(m)
        )));
    }
    if cfg.restarts == 0 || cfg.max_iter == 0 {
        return Err(Error::InvalidParams("restarts and max_iter must be positive".into()));
    }
    if r == n || r == m {
        // C = I C = C I; no search needed at full inner dimension
        let (w, h) = if r == n {
            (Array2::eye(n), c.to_owned())
        } else {
            (c.to_owned(), Array2::eye(m))
        };
        return Ok(NonnegFactorization {
            w,
            h,
            residual: 0.0,
            inner_dim: r,
            seed: cfg.seed,
            iterations: 0,
            restarts_used: 0,
            best_restart: 0,
        });
    }
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|t| hals_restart(c, r, cfg, &mut restart_rng(cfg.seed, t)))
        .collect();
    let (best_restart, best) = outcomes
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.residual.total_cmp(&b.residual).then(ia.cmp(ib)))
        .expect("at least one restart");
    if best.residual <= cfg.target_residual {
        Ok(NonnegFactorization {
            w: best.w,
            h: best.h,
            residual: best.residual,
            inner_dim: r,
            seed: cfg.seed,
            iterations: best.iterations,
            restarts_used: cfg.restarts,
            best_restart,
        })
    } else {
        Err(Error::NmfFailed { best_residual: best.residual })
    }
}

/// Smallest `r` in `[r_lo, r_hi]` (capped at `min(n, m)`) for which [`nmf`]
/// succeeds, scanning upward.
pub fn nmf_rank_search(
    c: &CommMatrix,
    r_lo: usize,
    r_hi: usize,
    cfg: &NmfConfig,
) -> Result<NonnegFactorization> {
    if r_lo == 0 || r_lo > r_hi {
        return Err(Error::InvalidRange { lo: r_lo, hi: r_hi });
    }
    let cap = r_hi.min(c.rows().min(c.cols()));
    for r in r_lo..=cap {
        match nmf(c, r, cfg) {
            Ok(f) => return Ok(f),
            Err(Error::NmfFailed { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NotFound { lo: r_lo, hi: r_hi })
}

/// A factorization `C = L R` with both factors row-stochastic: a classical
/// implementation through a `d`-symbol channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticFactorization {
    pub l: Array2<f64>,
    pub r: Array2<f64>,
}

fn check_row_stochastic(m: ArrayView2<f64>, what: &str, tol: &Tolerances) -> Result<()> {
    for ((i, j), &v) in m.indexed_iter() {
        if !(v >= -tol.nonneg_tol) {
            return Err(Error::InvalidParams(format!(
                "{what}[{}, {}] = {v} is negative",
                i + 1,
                j + 1
            )));
        }
    }
    for (i, row) in m.axis_iter(Axis(0)).enumerate() {
        let s = row.sum();
        if (s - 1.0).abs() > tol.row_sum_tol {
            return Err(Error::InvalidParams(format!("row {} of {what} sums to {s}", i + 1)));
        }
    }
    Ok(())
}

impl StochasticFactorization {
    pub fn new(l: Array2<f64>, r: Array2<f64>, tol: &Tolerances) -> Result<Self> {
        if l.ncols() != r.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "L is {}x{} but R is {}x{}",
                l.nrows(),
                l.ncols(),
                r.nrows(),
                r.ncols()
            )));
        }
        check_row_stochastic(l.view(), "L", tol)?;
        check_row_stochastic(r.view(), "R", tol)?;
        Ok(Self { l, r })
    }

    pub fn inner_dim(&self) -> usize {
        self.l.ncols()
    }

    pub fn outer_shape(&self) -> (usize, usize) {
        (self.l.nrows(), self.r.ncols())
    }

    pub fn product(&self) -> Array2<f64> {
        self.l.dot(&self.r)
    }
}

/// Rescales a nonnegative factorization of a row-stochastic matrix into
/// row-stochastic factors, dropping inner components whose `H` row is zero.
pub fn stochastic_normalize(
    w: ArrayView2<f64>,
    h: ArrayView2<f64>,
    tol: &Tolerances,
) -> Result<StochasticFactorization> {
    if w.ncols() != h.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "W has {} columns but H has {} rows",
            w.ncols(),
            h.nrows()
        )));
    }
    if let Some(v) = w.iter().chain(h.iter()).find(|&&v| !(v >= -tol.nonneg_tol)) {
        return Err(Error::NotStochasticProduct(format!("negative factor entry {v}")));
    }
    let product = w.dot(&h);
    for (i, row) in product.axis_iter(Axis(0)).enumerate() {
        let s = row.sum();
        if (s - 1.0).abs() > tol.row_sum_tol {
            return Err(Error::NotStochasticProduct(format!("row {} sums to {s}", i + 1)));
        }
    }

    let sums: Vec<f64> = h.axis_iter(Axis(0)).map(|row| row.sum()).collect();
    let keep: Vec<usize> = (0..h.nrows()).filter(|&l| sums[l] >= tol.nonneg_tol).collect();
    let l = Array2::from_shape_fn((w.nrows(), keep.len()), |(a, j)| {
        (w[[a, keep[j]]] * sums[keep[j]]).max(0.0)
    });
    let r = Array2::from_shape_fn((keep.len(), h.ncols()), |(j, b)| {
        (h[[keep[j], b]] / sums[keep[j]]).max(0.0)
    });
    Ok(StochasticFactorization { l, r })
}

/// The explicit 6-term factorization `A_7 = W H` (`W` is 7x6, `H` 6x7).
///
/// Cells written as "one minus the rest of the row" are filled in last, so
/// every row of `W` sums to one.
pub fn a7_explicit() -> (Array2<f64>, Array2<f64>) {
    let i = antidist_entry(7, 1);
    let j = antidist_entry(7, 2);
    let k = antidist_entry(7, 3);
    let q = k - j;
    let w_ = 2.0 * (i + j) - 2.0 * i * k / q;
    let h1 = (j - 0.5 * (k - i * i / q)) / w_;
    let h2 = (j - i * k / q) / w_;
    let a = 2.0 * i * k / q;
    let b = 2.0 * k * (j - i) / q;
    let c = 2.0 * (k - i * i / q);

    // NaN marks a "1 - rest of row" cell
    let x = f64::NAN;
    let mut w = ndarray::array![
        [2.0 * k, 2.0 * j, 0.0, 0.0, 2.0 * i, 0.0],
        [0.0, 2.0 * k, 0.0, 0.0, a, w_],
        [0.0, 2.0 * j, 2.0 * k, 0.0, 2.0 * i, 0.0],
        [0.0, 2.0 * i, b, x, 0.0, 0.0],
        [0.0, 0.0, a, c, x, w_],
        [a, 0.0, 0.0, c, x, w_],
        [b, 2.0 * i, 0.0, x, 0.0, 0.0],
    ];
    for mut row in w.axis_iter_mut(Axis(0)) {
        let rest: f64 = row.iter().filter(|v| !v.is_nan()).sum();
        for v in row.iter_mut().filter(|v| v.is_nan()) {
            *v = 1.0 - rest;
        }
    }

    let t = 2.0 * k;
    let h = ndarray::array![
        [0.0, i / t, j / t, (k - i) / t, (k - j) / t, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0],
        [j / t, i / t, 0.0, 0.0, 0.0, (k - j) / t, (k - i) / t],
        [0.25, 0.5, 0.25, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5],
        [h1, 0.0, h1, h2, 0.0, 0.0, h2],
    ];
    (w, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorName {
    W,
    H,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeEntry {
    pub factor: FactorName,
    /// 1-based.
    pub row: usize,
    /// 1-based.
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub residual: f64,
    pub tolerance: f64,
    pub residual_ok: bool,
    pub negative_entries: Vec<NegativeEntry>,
    pub pass: bool,
}

/// Checks `W, H >= 0` and `max |C - W H| <= tolerance`.
pub fn verify_factorization(
    c: ArrayView2<f64>,
    w: ArrayView2<f64>,
    h: ArrayView2<f64>,
    tolerance: f64,
) -> Result<FactorizationReport> {
    if w.nrows() != c.nrows() || h.ncols() != c.ncols() || w.ncols() != h.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "C is {:?}, W is {:?}, H is {:?}",
            c.dim(),
            w.dim(),
            h.dim()
        )));
    }
    let mut negative_entries = Vec::new();
    for (factor, m) in [(FactorName::W, w), (FactorName::H, h)] {
        for ((row, col), &value) in m.indexed_iter() {
            if value < 0.0 {
                negative_entries.push(NegativeEntry { factor, row: row + 1, col: col + 1, value });
            }
        }
    }
    let residual = linalg::max_entry_residual(c, w, h);
    let residual_ok = residual <= tolerance;
    Ok(FactorizationReport {
        residual,
        tolerance,
        residual_ok,
        pass: residual_ok && negative_entries.is_empty(),
        negative_entries,
    })
}
