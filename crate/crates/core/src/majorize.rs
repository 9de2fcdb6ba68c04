//! Ultraweak matrix majorization: `C <= D` iff `C = L D R` with `L` and `R`
//! row-stochastic.
//!
//! Only two answers are ever proven: `Yes` comes with a witness that
//! re-verifies, and `No` is only produced by [`uw_leq_identity`] from a
//! nonnegative-rank lower bound. Everything else is `Unknown`.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{classical_dim_bounds, Bound, LowerSource};
use crate::error::{Error, Result};
use crate::factor::{nmf, restart_rng, stochastic_normalize, NmfConfig};
use crate::linalg;
use crate::matcore::{deterministic_dimension, CommMatrix, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationWitness {
    pub l: Array2<f64>,
    pub r: Array2<f64>,
    /// `max |C - L D R|`.
    pub residual: f64,
}

impl MajorizationWitness {
    /// Recomputes the residual against `(c, d)` and checks both factors are
    /// row-stochastic.
    pub fn verify(&self, c: &CommMatrix, d: ArrayView2<f64>, tol: &Tolerances) -> Result<f64> {
        if self.l.nrows() != c.rows()
            || self.l.ncols() != d.nrows()
            || self.r.nrows() != d.ncols()
            || self.r.ncols() != c.cols()
        {
            return Err(Error::ShapeMismatch(format!(
                "L {:?}, D {:?}, R {:?} do not compose to C {:?}",
                self.l.dim(),
                d.dim(),
                self.r.dim(),
                c.shape()
            )));
        }
        for (name, m) in [("L", &self.l), ("R", &self.r)] {
            if m.iter().any(|&v| v < -tol.nonneg_tol) {
                return Err(Error::InvalidParams(format!("{name} has a negative entry")));
            }
            if m.rows().into_iter().any(|row| (row.sum() - 1.0).abs() > tol.row_sum_tol) {
                return Err(Error::InvalidParams(format!("{name} is not row-stochastic")));
            }
        }
        Ok(linalg::max_abs_diff(c.view(), self.l.dot(&d).dot(&self.r).view()))
    }

    /// Witness for `C <= E` from witnesses of `C <= D` and `D <= E`.
    pub fn compose(&self, next: &MajorizationWitness) -> MajorizationWitness {
        MajorizationWitness {
            l: self.l.dot(&next.l),
            r: next.r.dot(&self.r),
            residual: self.residual + next.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoReason {
    pub lower_bound: usize,
    pub source: LowerSource,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Answer {
    Yes { witness: MajorizationWitness },
    No { reason: NoReason },
    Unknown { best_residual: Option<f64> },
}

impl Answer {
    pub fn is_yes(&self) -> bool {
        matches!(self, Answer::Yes { .. })
    }
}

fn identity_witness_trivial(c: &CommMatrix, d: usize) -> Option<MajorizationWitness> {
    let (n, m) = c.shape();
    // Pad rows of R for symbols that are never sent.
    let pad_row = |r: &mut Array2<f64>, from: usize| {
        for j in from..r.nrows() {
            r[[j, 0]] = 1.0;
        }
    };
    if m <= d {
        let mut l = Array2::zeros((n, d));
        l.slice_mut(ndarray::s![.., ..m]).assign(c.as_array());
        let mut r = Array2::zeros((d, m));
        r.slice_mut(ndarray::s![..m, ..]).assign(&Array2::eye(m));
        pad_row(&mut r, m);
        return Some(MajorizationWitness { l, r, residual: 0.0 });
    }
    if n <= d {
        let mut l = Array2::zeros((n, d));
        l.slice_mut(ndarray::s![.., ..n]).assign(&Array2::eye(n));
        let mut r = Array2::zeros((d, m));
        r.slice_mut(ndarray::s![..n, ..]).assign(c.as_array());
        pad_row(&mut r, n);
        return Some(MajorizationWitness { l, r, residual: 0.0 });
    }
    None
}

/// Decides `C <= 1_d` where a proof is available.
///
/// `Yes` when `C` fits through `d` symbols trivially or an NMF at inner
/// dimension `d` succeeds; `No` when a nonnegative-rank lower bound exceeds
/// `d`; `Unknown` otherwise.
pub fn uw_leq_identity(c: &CommMatrix, d: usize, tol: &Tolerances, cfg: &NmfConfig) -> Result<Answer> {
    if d == 0 {
        return Err(Error::InvalidParams("d must be at least 1".into()));
    }
    if let Some(witness) = identity_witness_trivial(c, d) {
        return Ok(Answer::Yes { witness });
    }
    let report = classical_dim_bounds(c, tol, None)?;
    if report.lb > d {
        let Bound { value, source } = report.best_lower();
        return Ok(Answer::No { reason: NoReason { lower_bound: value, source, d } });
    }
    match nmf(c, d, cfg) {
        Ok(mut f) => {
            // an approximate W H has row sums off by up to m * residual;
            // rescale rows of W so the product is exactly stochastic
            let sums = f.w.dot(&f.h).sum_axis(ndarray::Axis(1));
            for (mut row, s) in f.w.rows_mut().into_iter().zip(sums.iter()) {
                if *s > 0.0 {
                    row.mapv_inplace(|x| x / s);
                }
            }
            let s = stochastic_normalize(f.w.view(), f.h.view(), tol)?;
            // keep exactly d symbols; dropped components become unused symbols
            let kept = s.inner_dim();
            let mut l = Array2::zeros((c.rows(), d));
            l.slice_mut(ndarray::s![.., ..kept]).assign(&s.l);
            let mut r = Array2::zeros((d, c.cols()));
            r.slice_mut(ndarray::s![..kept, ..]).assign(&s.r);
            for j in kept..d {
                r[[j, 0]] = 1.0;
            }
            let residual = linalg::max_abs_diff(c.view(), l.dot(&r).view());
            if residual > cfg.target_residual {
                return Ok(Answer::Unknown { best_residual: Some(residual) });
            }
            Ok(Answer::Yes { witness: MajorizationWitness { l, r, residual } })
        }
        Err(Error::NmfFailed { best_residual }) => Ok(Answer::Unknown { best_residual: Some(best_residual) }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MajorizeConfig {
    pub max_alternations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Projected-gradient steps per half-alternation.
    pub inner_iters: usize,
}

impl Default for MajorizeConfig {
    fn default() -> Self {
        Self { max_alternations: 200, restarts: 8, seed: 42, inner_iters: 200 }
    }
}

/// Projected gradient on `min ||A X B - C||_F^2` with every row of `X` in
/// the probability simplex.
fn solve_row_simplex(
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    c: ArrayView2<f64>,
    x: &mut Array2<f64>,
    iters: usize,
) {
    let lip = linalg::spectral_norm_sq(a) * linalg::spectral_norm_sq(b);
    if lip <= 0.0 {
        return;
    }
    let step = 1.0 / lip;
    let at = a.t();
    let bt = b.t();
    for _ in 0..iters {
        let resid = a.dot(x).dot(&b) - c;
        let grad = at.dot(&resid).dot(&bt);
        let before = x.clone();
        x.zip_mut_with(&grad, |xi, g| *xi -= step * g);
        for row in x.rows_mut() {
            linalg::project_simplex(row);
        }
        if linalg::max_abs_diff(before.view(), x.view()) < 1e-16 {
            break;
        }
    }
}

fn random_stochastic(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((rows, cols), |_| 1.0 - rng.random::<f64>());
    for mut row in m.rows_mut() {
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    m
}

fn alternate(c: &CommMatrix, d: ArrayView2<f64>, mut r: Array2<f64>, cfg: &MajorizeConfig, tol: &Tolerances) -> MajorizationWitness {
    let (n, m) = c.shape();
    let (p, _) = d.dim();
    let eye_n = Array2::<f64>::eye(n);
    let eye_m = Array2::<f64>::eye(m);
    let mut l = Array2::from_elem((n, p), 1.0 / p as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_alternations {
        let dr = d.dot(&r);
        solve_row_simplex(eye_n.view(), dr.view(), c.view(), &mut l, cfg.inner_iters);
        let ld = l.dot(&d);
        solve_row_simplex(ld.view(), eye_m.view(), c.view(), &mut r, cfg.inner_iters);
        residual = linalg::max_abs_diff(c.view(), l.dot(&d).dot(&r).view());
        if residual <= tol.recon_tol {
            break;
        }
    }
    MajorizationWitness { l, r, residual }
}

/// Heuristic search for `C = L D R`. Answers `Yes` with a verified witness
/// or `Unknown`; never `No`.
///
/// Restart 0 starts from uniform rows of `R`, later restarts from random
/// row-stochastic `R` drawn from the same seeded streams as the NMF.
pub fn uw_leq(c: &CommMatrix, d: &CommMatrix, tol: &Tolerances, cfg: &MajorizeConfig) -> Answer {
    if c.shape() == d.shape() && c.max_abs_diff(d).is_some_and(|x| x <= tol.recon_tol) {
        let witness = MajorizationWitness {
            l: Array2::eye(c.rows()),
            r: Array2::eye(c.cols()),
            residual: c.max_abs_diff(d).unwrap_or(0.0),
        };
        return Answer::Yes { witness };
    }
    let (q, m) = (d.cols(), c.cols());
    let runs: Vec<MajorizationWitness> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|t| {
            let r0 = if t == 0 {
                Array2::from_elem((q, m), 1.0 / m as f64)
            } else {
                random_stochastic(q, m, &mut restart_rng(cfg.seed, t))
            };
            alternate(c, d.view(), r0, cfg, tol)
        })
        .collect();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("at least one restart");
    match best.verify(c, d.view(), tol) {
        Ok(res) if res <= tol.recon_tol => Answer::Yes { witness: MajorizationWitness { residual: res, ..best } },
        _ => Answer::Unknown { best_residual: Some(best.residual) },
    }
}

/// Exact equivalence test for deterministic matrices: both reduce to
/// permuted identities of the same size.
pub fn uw_equivalent_deterministic(c: &CommMatrix, d: &CommMatrix, tol: &Tolerances) -> Result<bool> {
    Ok(deterministic_dimension(c, tol)? == deterministic_dimension(d, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{antidist_matrix, gate_matrix, Gate};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn expect_yes(ans: Answer) -> MajorizationWitness {
        match ans {
            Answer::Yes { witness } => witness,
            other => panic!("expected Yes, got {other:?}"),
        }
    }

    #[test]
    fn ambig3_through_two_symbols() {
        let c = gate_matrix(Gate::Ambig3);
        let w = expect_yes(uw_leq_identity(&c, 2, &tol(), &NmfConfig::default()).unwrap());
        assert_eq!(&w.l, c.as_array());
        assert_eq!(w.r, Array2::<f64>::eye(2));
        assert_eq!(w.verify(&c, Array2::<f64>::eye(2).view(), &tol()).unwrap(), 0.0);
    }

    #[test]
    fn a7_not_through_five_symbols() {
        let a7 = antidist_matrix(7).unwrap();
        let ans = uw_leq_identity(&a7, 5, &tol(), &NmfConfig::default()).unwrap();
        assert_eq!(
            ans,
            Answer::No { reason: NoReason { lower_bound: 6, source: LowerSource::FacesPhiPrime, d: 5 } }
        );
    }

    #[test]
    fn identity_reflexive_and_dimension_obstruction() {
        let i3 = CommMatrix::identity(3);
        assert!(uw_leq_identity(&i3, 3, &tol(), &NmfConfig::default()).unwrap().is_yes());
        let ans = uw_leq_identity(&i3, 2, &tol(), &NmfConfig::default()).unwrap();
        assert!(matches!(ans, Answer::No { reason: NoReason { lower_bound: 3, source: LowerSource::Rank, .. } }));
    }

    #[test]
    fn identity_padding_monotone() {
        let c = gate_matrix(Gate::Ambig3);
        for d in 2..6 {
            let w = expect_yes(uw_leq_identity(&c, d, &tol(), &NmfConfig::default()).unwrap());
            let res = w.verify(&c, Array2::<f64>::eye(d).view(), &tol()).unwrap();
            assert!(res <= 1e-10);
        }
    }

    #[test]
    fn nmf_route_witness_verifies() {
        // 4x4, rank 2 and nonnegative rank 2: neither trivial route applies
        let c = CommMatrix::from_rows(
            &[
                vec![0.5, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 0.5, 0.5],
                vec![0.25, 0.25, 0.25, 0.25],
                vec![0.5, 0.5, 0.0, 0.0],
            ],
            &tol(),
        )
        .unwrap();
        let w = expect_yes(uw_leq_identity(&c, 2, &tol(), &NmfConfig::default()).unwrap());
        let res = w.verify(&c, Array2::<f64>::eye(2).view(), &tol()).unwrap();
        assert!(res <= 1e-6, "{res}");
    }

    #[test]
    fn not_xor_equivalent() {
        let not = gate_matrix(Gate::Not);
        let xor = gate_matrix(Gate::Xor);
        let cfg = MajorizeConfig::default();
        let w1 = expect_yes(uw_leq(&not, &xor, &tol(), &cfg));
        let w2 = expect_yes(uw_leq(&xor, &not, &tol(), &cfg));
        assert!(w1.verify(&not, xor.view(), &tol()).unwrap() <= 1e-10);
        assert!(w2.verify(&xor, not.view(), &tol()).unwrap() <= 1e-10);
        // transitivity: NOT <= XOR <= NOT
        let composed = w1.compose(&w2);
        assert!(composed.verify(&not, not.view(), &tol()).unwrap() <= 2e-10);
    }

    #[test]
    fn reflexive_heuristic() {
        let c = gate_matrix(Gate::Ambig3);
        let w = expect_yes(uw_leq(&c, &c, &tol(), &MajorizeConfig::default()));
        assert_eq!(w.l, Array2::<f64>::eye(3));
        assert_eq!(w.r, Array2::<f64>::eye(2));
    }

    #[test]
    fn heuristic_never_says_no() {
        let ans = uw_leq(&CommMatrix::identity(3), &CommMatrix::identity(2), &tol(), &MajorizeConfig::default());
        assert!(matches!(ans, Answer::Unknown { .. }));
    }

    #[test]
    fn deterministic_equivalence() {
        let not = gate_matrix(Gate::Not);
        let xor = gate_matrix(Gate::Xor);
        assert!(uw_equivalent_deterministic(&not, &xor, &tol()).unwrap());
        assert!(uw_equivalent_deterministic(&xor, &CommMatrix::identity(2), &tol()).unwrap());
        assert!(!uw_equivalent_deterministic(&CommMatrix::identity(2), &CommMatrix::identity(3), &tol()).unwrap());
        assert!(matches!(
            uw_equivalent_deterministic(&gate_matrix(Gate::Ambig3), &not, &tol()),
            Err(Error::NotDeterministic { .. })
        ));
    }
}
