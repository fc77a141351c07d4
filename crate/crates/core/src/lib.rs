//! Entropy production of finite-dimensional quantum Markov semigroups.
//!
//! The crate starts from a GKSL generator `L(x) = G*x + Σ L_l* x L_l + xG`
//! on `n × n` matrices together with a faithful invariant state `ρ` and
//! provides:
//!
//! * [`gksl`]: generator validation, special-form normalization, superoperators,
//!   invariant states, time evolution and the KMS dual;
//! * [`twopoint`]: the deformed maximally entangled vector `r`, the two-point
//!   densities `D`, `D→_t`, `D←_t` and the completely positive images `Φ→(D)`, `Φ←(D)`;
//! * [`entropy`]: relative entropies, the closed-form entropy-production
//!   value and the difference-quotient estimator `S(t)/t`;
//! * [`balance`]: standard quantum detailed balance (with and without time
//!   reversal) certificates and the derivation gap;
//! * [`support`]: reachable subspaces, support projections of evolved states
//!   and the support gate used by the entropy-production formula;
//! * [`models`]: the cycle, generic and two-level model families, the
//!   classical entropy-production formula and the θ-invariant eigenbasis.
//!
//! All logarithms are natural, so entropies are in nats.

pub mod balance;
pub mod entropy;
pub mod error;
pub mod gksl;
pub mod matops;
pub mod models;
pub mod support;
pub mod twopoint;

pub use error::{Error, Result};
pub use matops::{CMatrix, CVector, C64, DEFAULT_TOL};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(test)]
pub(crate) mod test_util;
