//! Shared randomness: a protocol that picks classical implementation `k`
//! with probability `weight_k` realizes the mixture `sum_k weight_k L_k R_k`,
//! and stacking the parts gives a factorization with inner dimension `d k`.

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::StochasticFactorization;
use crate::matcore::{validate, CommMatrix, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SRPart {
    pub weight: f64,
    pub implementation: StochasticFactorization,
}

/// Weighted classical implementations sharing inner dimension `d` and
/// outer shape `n x m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SRProtocol {
    d: usize,
    parts: Vec<SRPart>,
}

impl SRProtocol {
    /// Weights must be nonnegative and sum to one; they are never rescaled.
    pub fn new(d: usize, parts: Vec<SRPart>, tol: &Tolerances) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::InvalidProtocol("no parts".into()));
        };
        if d == 0 {
            return Err(Error::InvalidProtocol("d must be positive".into()));
        }
        let shape = first.implementation.outer_shape();
        for (k, part) in parts.iter().enumerate() {
            if !(part.weight >= 0.0 && part.weight <= 1.0) {
                return Err(Error::InvalidProtocol(format!(
                    "part {} has weight {} outside [0, 1]",
                    k + 1,
                    part.weight
                )));
            }
            if part.implementation.inner_dim() != d {
                return Err(Error::ShapeMismatch(format!(
                    "part {} has inner dimension {}, expected {d}",
                    k + 1,
                    part.implementation.inner_dim()
                )));
            }
            if part.implementation.outer_shape() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "part {} is {:?}, expected {shape:?}",
                    k + 1,
                    part.implementation.outer_shape()
                )));
            }
            // re-check stochasticity so deserialized parts are held to the same bar
            StochasticFactorization::new(
                part.implementation.l.clone(),
                part.implementation.r.clone(),
                tol,
            )?;
        }
        let total: f64 = parts.iter().map(|p| p.weight).sum();
        if (total - 1.0).abs() > tol.row_sum_tol {
            return Err(Error::InvalidProtocol(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { d, parts })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn parts(&self) -> &[SRPart] {
        &self.parts
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn outer_shape(&self) -> (usize, usize) {
        self.parts[0].implementation.outer_shape()
    }
}

/// The communication matrix realized by the protocol.
pub fn mix(p: &SRProtocol, tol: &Tolerances) -> Result<CommMatrix> {
    let mut acc = Array2::<f64>::zeros(p.outer_shape());
    for part in p.parts() {
        acc.scaled_add(part.weight, &part.implementation.product());
    }
    validate(acc, tol)
}

/// `L = [w_1 L_1 | ... | w_k L_k]`, `R = [R_1; ...; R_k]`.
pub fn block_factorization(p: &SRProtocol) -> StochasticFactorization {
    let ls: Vec<Array2<f64>> = p
        .parts()
        .iter()
        .map(|part| &part.implementation.l * part.weight)
        .collect();
    let rs: Vec<_> = p.parts().iter().map(|part| part.implementation.r.view()).collect();
    let l = concatenate(Axis(1), &ls.iter().map(|m| m.view()).collect::<Vec<_>>())
        .expect("parts share row count");
    let r = concatenate(Axis(0), &rs).expect("parts share column count");
    StochasticFactorization { l, r }
}

/// Fewest coordinated actions `k` not ruled out by `nrank <= d k`.
pub fn min_coordinated_actions(nrank_lb: usize, d: usize) -> Result<usize> {
    if nrank_lb == 0 || d == 0 {
        return Err(Error::InvalidParams("nrank_lb and d must be positive".into()));
    }
    Ok(nrank_lb.div_ceil(d))
}
