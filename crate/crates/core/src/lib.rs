//! Second-order theta nullwerte on the Siegel upper half-space and the two
//! canonical (1,1)-forms they compare: the Fubini-Study pullback along the
//! nullwert map and the Siegel metric.
//!
//! Modules, bottom up:
//! * [`linalg`]: small dense complex matrices (LU, Hermitian eigenvalues).
//! * [`siegel`]: `H_g`, `Sp(2g, Z)` and its actions.
//! * [`theta`]: certified lattice sums and their derivatives.
//! * [`nullwert`]: characteristics mod 2, the nullwert maps, the addition matrix.
//! * [`forms`]: the Hermitian coefficient matrices and the genus-one analysis.
//! * [`cli`]: command-line front end and verification suites.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod nullwert;
pub mod siegel;
pub mod theta;

pub use error::{Error, Result};
pub use linalg::C64;
