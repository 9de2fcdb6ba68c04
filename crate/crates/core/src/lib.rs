//! Classical and quantum dimensions of one-way communication matrices.
//!
//! A communication matrix `C` is row-stochastic: `C[a][b]` is the probability
//! that the receiver outputs `b` when the sender was given input `a`. Its
//! classical dimension is the nonnegative rank, its quantum dimension the
//! PSD rank. This crate builds the antidistinguishability family `A_n`,
//! certifies its qubit realization, and brackets the nonnegative rank between
//! face-counting lower bounds and factorization upper bounds.
//!
//! Modules:
//!
//! - [`matcore`]: tolerances, validated matrices, numerical rank, reduction
//!   to canonical form
//! - [`ensembles`]: `A_n` and the small gate matrices
//! - [`quantum`]: XZ-plane qubit states and effects realizing `A_n`
//! - [`bounds`]: cyclic-polytope face counts and nonnegative-rank bounds
//! - [`factor`]: HALS nonnegative factorization and the explicit `A_7` factors
//! - [`majorize`]: the ultraweak majorization preorder `C = L D R`
//! - [`shared`]: mixtures of classical protocols and their block factorization
//! - [`io`]: CSV / JSON matrix files

pub mod bounds;
pub mod ensembles;
pub mod error;
pub mod factor;
pub mod io;
pub mod majorize;
pub mod matcore;
pub mod quantum;
pub mod shared;

mod linalg;

pub use error::{Error, Result};
pub use matcore::{CommMatrix, Tolerances};
