//! Stochastic monotone submodular maximization over matroids.
//!
//! Elements are independent random variables with finite support; an
//! objective `f` maps realizations to nonnegative reals. The crate provides
//! exact and Monte Carlo evaluators ([`model`]), matroids ([`matroid`]),
//! adaptive and non-adaptive policies with exact brute-force oracles
//! ([`policies`]), the scenario-LP upper bound and its certificate chain
//! ([`bounds`]), and the experiment harness ([`experiments`]).

pub mod bounds;
pub mod error;
pub mod cli;
pub mod experiments;
pub mod format;
pub mod lp;
pub mod matroid;
pub mod model;
pub mod policies;

pub use error::{Error, Result};
pub use matroid::{Matroid, MatroidSpec};
pub use model::{
    DiscreteDistribution, FractionalPoint, Instance, ObjectiveSpec, OutcomePayload,
    PartialRealization, PiecewiseConcave, Scenario, StochasticElement,
};
