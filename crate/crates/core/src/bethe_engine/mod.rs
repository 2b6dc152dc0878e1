//! Contour-integral evaluation of transition probabilities.

pub mod contour;
pub mod distribution;
pub mod maps;
pub mod marginal;
pub mod permutations;
pub mod quadrature;
pub mod transition;

pub use contour::{
    certify, choose_marginal_radius, choose_marginal_radius_at, choose_radius, choose_radius_at,
    ContourCache, ContourMode, ContourSpec,
};
pub use distribution::Distribution;
pub use maps::{azrp_asep_maps, to_asep, to_azrp, MapDirection};
pub use marginal::{azrp_mth_particle_distribution, q_binomial, Bracket};
pub use permutations::{a_sigma, permutations_with_inversions, PermutationTerm};
pub use transition::{
    auto_contour, i_sigma_at_t0, time_derivative, transition_probability,
    transition_probability_auto, transition_probability_auto_tol, transition_probability_cached,
    transition_probability_with_s, IntegralResult, ProbabilityResult,
};
