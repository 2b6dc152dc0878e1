//! Exact transition probabilities of four Bethe-ansatz solvable particle
//! systems on `Z`: ASEP, two-sided PushASEP, ASAP and AZRP.
//!
//! The [`bethe_engine`] evaluates the multidimensional contour integrals,
//! [`ctmc_oracle`] provides an independent truncated Markov chain reference
//! and a Gillespie sampler, and [`verification`] turns the analytic
//! identities into numeric pass/fail checks.

pub mod bethe_engine;
pub mod ctmc_oracle;
pub mod error;
pub mod models;
pub mod verification;

pub use error::{Error, Result};
pub use models::{Configuration, Model, ModelKind, ModelParams};
