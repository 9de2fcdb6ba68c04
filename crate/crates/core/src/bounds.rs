//! Lower and upper bounds on the nonnegative rank.
//!
//! Lower bounds come from the linear rank and, for rank-three square
//! matrices whose columns have pairwise incomparable zero sets, from the
//! restricted nonnegative rank (which then equals `n`) combined with the
//! cyclic-polytope face counts below. Upper bounds come from the matrix
//! size, NMF searches, and the built-in factorization of `A_7`.

use serde::{Deserialize, Serialize};

use crate::ensembles::antidist_matrix;
use crate::error::{Error, Result};
use crate::factor::{a7_explicit, nmf_rank_search, verify_factorization, NmfConfig};
use crate::matcore::{numerical_rank, CommMatrix, Tolerances};

/// `(n, d, k)`: `k`-faces of a `d`-polytope with `n` vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceCountParams {
    pub n_vertices: usize,
    pub dim: usize,
    pub face_dim: usize,
}

impl FaceCountParams {
    pub fn check(&self) -> Result<()> {
        let Self { n_vertices, dim, face_dim } = *self;
        if dim == 0 || n_vertices < dim + 1 || face_dim + 1 > dim {
            return Err(Error::InvalidParams(format!(
                "faces({n_vertices}, {dim}, {face_dim}) needs n >= d + 1 >= 2 and 0 <= k <= d - 1"
            )));
        }
        Ok(())
    }
}

/// Exact binomial coefficient; zero outside `0 <= q <= p`.
pub fn binomial(p: i64, q: i64) -> Result<u128> {
    if p < 0 || q < 0 || q > p {
        return Ok(0);
    }
    let q = q.min(p - q) as u128;
    let p = p as u128;
    let mut acc: u128 = 1;
    for i in 0..q {
        // acc * (p - i) is divisible by (i + 1) at every step
        acc = acc
            .checked_mul(p - i)
            .ok_or(Error::Overflow("binomial"))?
            / (i + 1);
    }
    Ok(acc)
}

/// Maximum number of `k`-faces of a `d`-polytope with `n` vertices (attained
/// by the cyclic polytope).
///
/// Sums `(C(d-i, k+1-i) + C(i, k+1-d+i)) * C(n-d-1+i, i)` for
/// `i = 0..=floor(d/2)`; for even `d` the `i = d/2` term enters with weight
/// one half.
pub fn faces(n: usize, d: usize, k: usize) -> Result<u128> {
    FaceCountParams { n_vertices: n, dim: d, face_dim: k }.check()?;
    let (n, d, k) = (n as i64, d as i64, k as i64);
    let last = d / 2;
    let mut twice: u128 = 0;
    for i in 0..=last {
        let t = binomial(d - i, k + 1 - i)?
            .checked_add(binomial(i, k + 1 - d + i)?)
            .and_then(|s| s.checked_mul(binomial(n - d - 1 + i, i).ok()?))
            .ok_or(Error::Overflow("faces"))?;
        let weight = if d % 2 == 0 && i == last { 1 } else { 2 };
        twice = t
            .checked_mul(weight)
            .and_then(|x| twice.checked_add(x))
            .ok_or(Error::Overflow("faces"))?;
    }
    if !twice.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("faces({n}, {d}, {k}) is not an integer")));
    }
    Ok(twice / 2)
}

/// [`faces`] extended with the whole polytope as its single `d`-face.
fn faces_total(n: usize, d: usize, k: usize) -> Result<u128> {
    if k == d && n > d {
        Ok(1)
    } else {
        faces(n, d, k)
    }
}

/// `max_{r <= r_u <= r_plus} faces(r_plus, r_u - 1, r_u - r)`: an upper bound
/// on the restricted nonnegative rank given rank `r` and nonnegative rank
/// `r_plus`.
pub fn phi_r(r_plus: usize, r: usize) -> Result<u128> {
    if r == 0 || r > r_plus {
        return Err(Error::InvalidParams(format!("phi_r needs 1 <= r <= r_plus, got r = {r}, r_plus = {r_plus}")));
    }
    let mut best = 0;
    for r_u in r..=r_plus {
        best = best.max(faces_total(r_plus, r_u - 1, r_u - r)?);
    }
    Ok(best)
}

/// The sharper rank-three bound
/// `max_{3 <= r_u <= r_plus} min_{i = 0, 1} faces(r_plus, r_u - 1, r_u - 3 + i)`.
pub fn phi_prime(r_plus: usize) -> Result<u128> {
    if r_plus < 3 {
        return Err(Error::InvalidParams(format!("phi_prime needs r_plus >= 3, got {r_plus}")));
    }
    let mut best = 0;
    for r_u in 3..=r_plus {
        let lo = faces_total(r_plus, r_u - 1, r_u - 3)?;
        let hi = faces_total(r_plus, r_u - 1, r_u - 2)?;
        best = best.max(lo.min(hi));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiRow {
    pub r_plus: usize,
    pub phi_prime: u128,
    pub phi_3: u128,
}

/// Rows `(r_plus, phi_prime, phi_3)` for `r_plus` in `r_lo..=r_hi`.
pub fn phi_table(r_lo: usize, r_hi: usize) -> Result<Vec<PhiRow>> {
    if r_lo < 3 || r_lo > r_hi {
        return Err(Error::InvalidRange { lo: r_lo, hi: r_hi });
    }
    (r_lo..=r_hi)
        .map(|r_plus| {
            Ok(PhiRow { r_plus, phi_prime: phi_prime(r_plus)?, phi_3: phi_r(r_plus, 3)? })
        })
        .collect()
}

/// True iff no column's zero set is contained in another's.
pub fn column_sparsity_disjoint(c: &CommMatrix, tol: &Tolerances) -> bool {
    let v = c.view();
    let zero_sets: Vec<Vec<bool>> = v
        .columns()
        .into_iter()
        .map(|col| col.iter().map(|&x| x < tol.nonneg_tol).collect())
        .collect();
    let subset = |a: &[bool], b: &[bool]| a.iter().zip(b).all(|(&x, &y)| !x || y);
    for i in 0..zero_sets.len() {
        for j in 0..zero_sets.len() {
            if i != j && subset(&zero_sets[i], &zero_sets[j]) {
                return false;
            }
        }
    }
    true
}

/// Restricted nonnegative rank of a rank-three square matrix with disjoint
/// column sparsity, which equals its size.
pub fn rnrank_rank3_disjoint(c: &CommMatrix, tol: &Tolerances) -> Result<usize> {
    let (n, m) = c.shape();
    if n != m {
        return Err(Error::PreconditionFailed(format!("matrix is {n}x{m}, not square")));
    }
    let rank = numerical_rank(c, tol);
    if rank != 3 {
        return Err(Error::PreconditionFailed(format!("numerical rank is {rank}, not 3")));
    }
    if !column_sparsity_disjoint(c, tol) {
        return Err(Error::PreconditionFailed(
            "column sparsity patterns are not disjoint".into(),
        ));
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    /// [`phi_prime`]; valid for rank three.
    Prime,
    /// [`phi_r`] at the given rank.
    Rank(usize),
}

impl PhiKind {
    fn eval(self, r_plus: usize) -> Result<u128> {
        match self {
            PhiKind::Prime => phi_prime(r_plus),
            PhiKind::Rank(r) => phi_r(r_plus, r),
        }
    }
}

/// Smallest `r_plus >= start` with `phi(r_plus) >= rnrank`, capped at
/// `rnrank` (the nonnegative rank never exceeds the restricted one).
pub fn smallest_r_plus(kind: PhiKind, start: usize, rnrank: usize) -> Result<usize> {
    for r_plus in start..rnrank {
        if kind.eval(r_plus)? >= rnrank as u128 {
            return Ok(r_plus);
        }
    }
    Ok(rnrank.max(start))
}

/// Nonnegative-rank lower bound implied by a restricted nonnegative rank,
/// using [`phi_prime`] at rank three and [`phi_r`] otherwise.
pub fn nrank_lb_from_rnrank(rnrank: usize, rank: usize) -> Result<usize> {
    if rank == 0 || rnrank < rank {
        return Err(Error::InvalidParams(format!(
            "need rnrank >= rank >= 1, got rnrank = {rnrank}, rank = {rank}"
        )));
    }
    let kind = if rank == 3 { PhiKind::Prime } else { PhiKind::Rank(rank) };
    smallest_r_plus(kind, rank, rnrank)
}

/// `ceil(log2(rnrank))`, from `rnrank <= 2^nrank`.
pub fn nrank_lb_log(rnrank: usize) -> usize {
    assert!(rnrank >= 1, "rnrank must be positive");
    (usize::BITS - (rnrank - 1).leading_zeros()) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LowerSource {
    Rank,
    FacesPhiPrime,
    FacesPhiR,
    Log2Rnrank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UpperSource {
    Size,
    Nmf,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bound<S> {
    pub value: usize,
    pub source: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rank: usize,
    pub rnrank: Option<usize>,
    pub lower_bounds: Vec<Bound<LowerSource>>,
    pub upper_bounds: Vec<Bound<UpperSource>>,
    pub lb: usize,
    pub ub: usize,
    /// Seed of the NMF search, when one ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmf_seed: Option<u64>,
}

impl BoundReport {
    /// The lower bound that attains `lb` (first listed on ties).
    pub fn best_lower(&self) -> Bound<LowerSource> {
        *self
            .lower_bounds
            .iter()
            .rev()
            .max_by_key(|b| b.value)
            .expect("rank bound always present")
    }
}

/// True if `c` is `A_7` and the built-in factors reproduce it.
fn explicit_a7_applies(c: &CommMatrix, tol: &Tolerances) -> bool {
    if c.shape() != (7, 7) {
        return false;
    }
    let a7 = antidist_matrix(7).expect("n = 7 is valid");
    if c.max_abs_diff(&a7).is_none_or(|d| d > tol.entry_eq_tol) {
        return false;
    }
    let (w, h) = a7_explicit();
    verify_factorization(c.view(), w.view(), h.view(), tol.recon_tol).is_ok_and(|r| r.pass)
}

/// Brackets the nonnegative rank (classical dimension) of `c`.
///
/// With `nmf` set, an NMF search runs from the best lower bound up to the
/// best non-heuristic upper bound.
pub fn classical_dim_bounds(c: &CommMatrix, tol: &Tolerances, nmf: Option<&NmfConfig>) -> Result<BoundReport> {
    let rank = numerical_rank(c, tol);
    let mut lower_bounds = vec![Bound { value: rank.max(1), source: LowerSource::Rank }];
    let rnrank = rnrank_rank3_disjoint(c, tol).ok();
    if let Some(rn) = rnrank {
        lower_bounds.push(Bound {
            value: nrank_lb_from_rnrank(rn, 3)?,
            source: LowerSource::FacesPhiPrime,
        });
        lower_bounds.push(Bound {
            value: smallest_r_plus(PhiKind::Rank(3), 3, rn)?,
            source: LowerSource::FacesPhiR,
        });
        lower_bounds.push(Bound { value: nrank_lb_log(rn), source: LowerSource::Log2Rnrank });
    }
    let lb = lower_bounds.iter().map(|b| b.value).max().expect("non-empty");

    let (n, m) = c.shape();
    let mut upper_bounds = vec![Bound { value: n.min(m), source: UpperSource::Size }];
    if explicit_a7_applies(c, tol) {
        upper_bounds.push(Bound { value: 6, source: UpperSource::Explicit });
    }
    let mut nmf_seed = None;
    if let Some(cfg) = nmf {
        nmf_seed = Some(cfg.seed);
        let hi = upper_bounds.iter().map(|b| b.value).min().expect("non-empty");
        if let Ok(f) = nmf_rank_search(c, lb.min(hi), hi, cfg) {
            upper_bounds.push(Bound { value: f.inner_dim, source: UpperSource::Nmf });
        }
    }
    let ub = upper_bounds.iter().map(|b| b.value).min().expect("non-empty");

    Ok(BoundReport { rank, rnrank, lower_bounds, upper_bounds, lb, ub, nmf_seed })
}
