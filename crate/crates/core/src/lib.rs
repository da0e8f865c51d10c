//! Multi-agent imitation learning in two-player zero-sum finite-horizon
//! Markov games with linear features.
//!
//! The crate is generic over the floating point type through [`Scalar`];
//! the aliases at the crate root fix it to `f64`, which is what the
//! experiment harness and all file formats use.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envs;
pub mod equilibrium;
mod error;
pub mod exploration;
pub mod features;
mod fmt;
pub mod game;
pub mod imitation;
pub mod linalg;
mod sampling;
mod scalar;

pub use error::{Error, Result};
pub use scalar::{log_sum_exp, softmax_into, Scalar};

pub use game::PlayerId;

pub type Game = game::MarkovGame<f64>;
pub type Policy = game::StagePolicy<f64>;
pub type Profile = (Policy, Policy);
pub type Occupancy = game::OccupancyTable<f64>;
pub type Values = game::ValueTable<f64>;
pub type Equilibrium = equilibrium::EquilibriumProfile<f64>;
pub type MatrixSolution = equilibrium::MatrixGameSolution<f64>;
pub type Features = features::FeatureMap<f64>;
pub type Covariance = features::CovarianceState<f64>;
pub type SoftLin = imitation::SoftLinPolicy<f64>;
pub type Dataset = imitation::ExpertDataset;
pub type Trace = exploration::ExplorationTrace<f64>;
