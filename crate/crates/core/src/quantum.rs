//! Qubit realization of `A_n` with states and effects in the XZ plane of
//! the Bloch sphere.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{validate, CommMatrix, Tolerances};

type Dense2 = [[f64; 2]; 2];

/// The real operator `id * 1 + x * sigma_x + z * sigma_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochOperator {
    pub coeff_id: f64,
    pub coeff_x: f64,
    pub coeff_z: f64,
}

impl BlochOperator {
    pub fn new(coeff_id: f64, coeff_x: f64, coeff_z: f64) -> Self {
        Self { coeff_id, coeff_x, coeff_z }
    }

    /// The pure state `(1 + r . sigma) / 2` for a Bloch vector `(x, 0, z)`.
    pub fn state(x: f64, z: f64) -> Self {
        Self::new(0.5, 0.5 * x, 0.5 * z)
    }

    pub fn dense(&self) -> Dense2 {
        [
            [self.coeff_id + self.coeff_z, self.coeff_x],
            [self.coeff_x, self.coeff_id - self.coeff_z],
        ]
    }

    pub fn trace(&self) -> f64 {
        let d = self.dense();
        d[0][0] + d[1][1]
    }

    pub fn det(&self) -> f64 {
        let d = self.dense();
        d[0][0] * d[1][1] - d[0][1] * d[1][0]
    }

    /// 2x2 symmetric PSD test: trace and determinant both nonnegative.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.trace() >= -tol && self.det() >= -tol
    }

    pub fn complement(&self) -> Self {
        Self::new(1.0 - self.coeff_id, -self.coeff_x, -self.coeff_z)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.coeff_id * factor, self.coeff_x * factor, self.coeff_z * factor)
    }
}

fn trace_product(a: &Dense2, b: &Dense2) -> f64 {
    (0..2)
        .map(|i| (0..2).map(|j| a[i][j] * b[j][i]).sum::<f64>())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitEnsemble {
    pub states: Vec<BlochOperator>,
    pub effects: Vec<BlochOperator>,
}

/// States at Bloch angles `2 a pi / n` and effects `(1 - r_b . sigma) / n`,
/// for `a, b = 1..=n`.
pub fn qubit_implementation(n: usize) -> Result<QubitEnsemble> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    let inv_n = 1.0 / n as f64;
    let bloch = |a: usize| {
        let angle = 2.0 * a as f64 * PI / n as f64;
        (angle.cos(), angle.sin())
    };
    let states = (1..=n)
        .map(|a| {
            let (x, z) = bloch(a);
            BlochOperator::state(x, z)
        })
        .collect();
    let effects = (1..=n)
        .map(|b| {
            let (x, z) = bloch(b);
            BlochOperator::new(inv_n, -inv_n * x, -inv_n * z)
        })
        .collect();
    Ok(QubitEnsemble { states, effects })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCheck {
    /// 1-based.
    pub index: usize,
    pub trace_one: bool,
    pub psd: bool,
    pub pure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectCheck {
    /// 1-based.
    pub index: usize,
    pub psd: bool,
    pub complement_psd: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub states: Vec<StateCheck>,
    pub effects: Vec<EffectCheck>,
    pub povm_complete: bool,
    /// Largest entrywise deviation of the summed effects from the identity.
    pub povm_deviation: f64,
    pub pass: bool,
}

pub fn verify_ensemble(ens: &QubitEnsemble, tol: &Tolerances) -> VerificationReport {
    let states: Vec<StateCheck> = ens
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| StateCheck {
            index: i + 1,
            trace_one: (s.trace() - 1.0).abs() <= tol.row_sum_tol,
            psd: s.is_psd(tol.nonneg_tol),
            pure: s.det().abs() <= tol.nonneg_tol,
        })
        .collect();
    let effects: Vec<EffectCheck> = ens
        .effects
        .iter()
        .enumerate()
        .map(|(i, m)| EffectCheck {
            index: i + 1,
            psd: m.is_psd(tol.nonneg_tol),
            complement_psd: m.complement().is_psd(tol.nonneg_tol),
        })
        .collect();

    let mut total = [[0.0; 2]; 2];
    for m in &ens.effects {
        let d = m.dense();
        for i in 0..2 {
            for j in 0..2 {
                total[i][j] += d[i][j];
            }
        }
    }
    let mut povm_deviation = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { 1.0 } else { 0.0 };
            povm_deviation = povm_deviation.max((total[i][j] - target).abs());
        }
    }
    let povm_complete = !ens.effects.is_empty() && povm_deviation <= tol.nonneg_tol;

    let pass = povm_complete
        && states.iter().all(|s| s.trace_one && s.psd && s.pure)
        && effects.iter().all(|e| e.psd && e.complement_psd);
    VerificationReport { states, effects, povm_complete, povm_deviation, pass }
}

/// Matrix of `tr(s_a M_b)` computed with dense 2x2 products.
///
/// The ensemble must pass [`verify_ensemble`]; purity is not required here,
/// but every state must be a density operator and the effects a POVM.
pub fn gram(ens: &QubitEnsemble, tol: &Tolerances) -> Result<CommMatrix> {
    let report = verify_ensemble(ens, tol);
    if !report.povm_complete {
        return Err(Error::InvalidEnsemble("effects do not sum to the identity".into()));
    }
    if let Some(s) = report.states.iter().find(|s| !(s.trace_one && s.psd)) {
        return Err(Error::InvalidEnsemble(format!("state {} is not a density operator", s.index)));
    }
    if let Some(e) = report.effects.iter().find(|e| !(e.psd && e.complement_psd)) {
        return Err(Error::InvalidEnsemble(format!("effect {} is not in [0, 1]", e.index)));
    }
    let states: Vec<Dense2> = ens.states.iter().map(BlochOperator::dense).collect();
    let effects: Vec<Dense2> = ens.effects.iter().map(BlochOperator::dense).collect();
    let data = Array2::from_shape_fn((states.len(), effects.len()), |(a, b)| {
        trace_product(&states[a], &effects[b])
    });
    validate(data, tol)
}

/// 1 when every row is identical (a trivial system suffices), otherwise 2.
///
/// This is the only PSD-rank lower bound offered; it is tight for `A_n`.
pub fn quantum_dim_lower_bound(c: &CommMatrix, tol: &Tolerances) -> usize {
    let v = c.view();
    let first = v.row(0);
    let all_equal = v
        .rows()
        .into_iter()
        .all(|row| row.iter().zip(first.iter()).all(|(x, y)| (x - y).abs() <= tol.entry_eq_tol));
    if all_equal {
        1
    } else {
        2
    }
}
