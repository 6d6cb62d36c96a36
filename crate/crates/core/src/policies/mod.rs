//! Adaptive and non-adaptive policies, plus brute-force optimal solvers.
//!
//! Every argmax breaks ties toward the lowest element id, so each policy is
//! a deterministic function of the outcomes it observes.

mod adaptive;
mod continuous;
mod exact;
mod greedy;
mod trace;

pub use adaptive::{
    evaluate_adaptive_exact, run_adaptive, run_myopic, AdaptiveEvaluation, AdaptiveRule,
    Decision, Myopic, OutcomeSource, PolicyState,
};
pub use continuous::{continuous_greedy, pipage_round, ContinuousGreedy};
pub use exact::{
    optimal_adaptive_exact, optimal_nonadaptive_exact, DecisionTreeValue, NonAdaptiveOptimum,
    OptimalAdaptive,
};
pub use greedy::greedy_nonadaptive;
pub use trace::{PolicyTrace, TraceStep};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::model::{FractionalPoint, Instance};

/// Two values closer than this are tied.
pub(crate) const TIE_EPS: f64 = 1e-12;

/// How non-adaptive routines evaluate `F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpectationMode {
    /// Exact enumeration (closed form for coverage).
    Exact,
    /// Sample means; every evaluation restarts the stream at `seed`, so
    /// comparisons share random numbers.
    MonteCarlo { samples: usize, seed: u64 },
}

impl ExpectationMode {
    pub(crate) fn set_value(&self, instance: &Instance, set: &[usize]) -> Result<f64> {
        match *self {
            ExpectationMode::Exact => instance.expected_value(set),
            ExpectationMode::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(instance.expected_value_mc(set, samples, &mut rng)?.estimate)
            }
        }
    }

    pub(crate) fn point_values(
        &self,
        instance: &Instance,
        points: &[&FractionalPoint],
    ) -> Result<Vec<f64>> {
        match *self {
            ExpectationMode::Exact => points
                .iter()
                .map(|y| {
                    if instance.is_coverage() {
                        instance.coverage_closed_form_at(y)
                    } else {
                        instance.multilinear_exact(y)
                    }
                })
                .collect(),
            ExpectationMode::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(instance
                    .paired_multilinear_mc(points, samples.max(2), &mut rng)?
                    .iter()
                    .map(|s| s.mean())
                    .collect())
            }
        }
    }
}

pub(crate) fn check_ground(instance: &Instance, matroid: &Matroid) -> Result<()> {
    if instance.n() != matroid.n() {
        return Err(Error::InvalidArgument(format!(
            "instance has {} elements but the matroid ground set has {}",
            instance.n(),
            matroid.n()
        )));
    }
    Ok(())
}

/// Index of the largest value; ties within [`TIE_EPS`] go to the earliest.
pub(crate) fn argmax_lowest<I: IntoIterator<Item = (usize, f64)>>(items: I) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in items {
        match best {
            Some((_, b)) if v <= b + TIE_EPS => {}
            _ => best = Some((i, v)),
        }
    }
    best
}
