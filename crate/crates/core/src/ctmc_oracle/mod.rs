//! Independent reference: the chain restricted to a finite window, solved
//! by uniformization, plus an exact Gillespie sampler.

pub mod dynamics;
pub mod generator;
pub mod gillespie;
pub mod window;

pub use dynamics::{moves, resolve_avalanche, AvalancheOutcome, Move};
pub use generator::{
    build_generator, oracle_distribution, uniformization_distribution, SparseGenerator, Uniformized,
};
pub use gillespie::{
    empirical_distribution, gillespie_sample, gillespie_samples, gillespie_trajectory, Trajectory,
};
pub use window::{window_for, TruncationWindow};
