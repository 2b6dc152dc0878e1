//! Numeric checks of the engine against the oracle and against the
//! identities the integral formula has to satisfy.

pub mod identities;
pub mod lemmas;
pub mod oracle_checks;
pub mod performance;
pub mod report;
pub mod sampling;
pub mod subject;
pub mod suite;

pub use identities::{
    boundary_residual, check_asap_geometric_boundary, check_bijection, check_boundary_conditions,
    check_forward_equation, check_mth_marginal, check_substitution_probability,
    check_substitution_s_matrix,
};
pub use lemmas::{check_inversion_monomial, check_lemmas};
pub use oracle_checks::{
    check_delta, check_monte_carlo, check_normalization, check_oracle_agreement,
    check_single_particle,
};
pub use performance::check_performance;
pub use report::{CheckReport, Tracker};
pub use sampling::DEFAULT_SEED;
pub use subject::{walk_probability, Subject};
pub use suite::{run_all, run_check, CheckName, SuiteOptions};
