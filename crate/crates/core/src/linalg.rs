use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2, ArrayViewMut1};

pub(crate) fn singular_values(m: ArrayView2<f64>) -> Vec<f64> {
    let (rows, cols) = m.dim();
    let dm = DMatrix::from_fn(rows, cols, |i, j| m[[i, j]]);
    let mut sv: Vec<f64> = dm.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rel_tol` times the largest one.
pub(crate) fn rank_with_cutoff(m: ArrayView2<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let Some(&top) = sv.first() else { return 0 };
    if top <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

pub(crate) fn max_abs_diff(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub(crate) fn max_entry_residual(c: ArrayView2<f64>, w: ArrayView2<f64>, h: ArrayView2<f64>) -> f64 {
    max_abs_diff(c, w.dot(&h).view())
}

pub(crate) fn frobenius_sq(m: ArrayView2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Euclidean projection of `v` onto the probability simplex (sort-based).
pub(crate) fn project_simplex(mut v: ArrayViewMut1<f64>) {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.mapv_inplace(|x| (x - theta).max(0.0));
}

/// Squared spectral norm.
pub(crate) fn spectral_norm_sq(m: ArrayView2<f64>) -> f64 {
    let sv = singular_values(m);
    sv.first().map_or(0.0, |s| s * s)
}

pub(crate) fn identity(n: usize) -> Array2<f64> {
    Array2::eye(n)
}
