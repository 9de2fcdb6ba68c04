#![allow(dead_code)]

use commdim::factor::StochasticFactorization;
use commdim::shared::{SRPart, SRProtocol};
use commdim::Tolerances;
use ndarray::Array2;
use rand::Rng;

/// Random row-stochastic matrix; each entry is zeroed with probability
/// `sparsity` before normalizing (at least one entry per row survives).
pub fn random_stochastic(rng: &mut impl Rng, rows: usize, cols: usize, sparsity: f64) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((rows, cols), |_| {
        if rng.random::<f64>() < sparsity {
            0.0
        } else {
            1.0 - rng.random::<f64>()
        }
    });
    for mut row in m.rows_mut() {
        if row.sum() == 0.0 {
            let j = rng.random_range(0..cols);
            row[j] = 1.0;
        }
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    m
}

pub fn random_protocol(rng: &mut impl Rng, k: usize, d: usize, n: usize, m: usize) -> SRProtocol {
    let tol = Tolerances::default();
    let raw: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let parts = raw
        .iter()
        .map(|w| SRPart {
            weight: w / total,
            implementation: StochasticFactorization::new(
                random_stochastic(rng, n, d, 0.3),
                random_stochastic(rng, d, m, 0.3),
                &tol,
            )
            .expect("random factors are stochastic"),
        })
        .collect();
    SRProtocol::new(d, parts, &tol).expect("random protocol is valid")
}
