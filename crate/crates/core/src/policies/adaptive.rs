//! Adaptive policy execution: simulation against an outcome source and exact
//! expectation over the full outcome tree.

use rand::RngCore;
use serde::Serialize;

use super::trace::{PolicyTrace, TraceStep};
use super::{argmax_lowest, check_ground};
use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::model::{Instance, PartialRealization, Scenario};

/// What an adaptive policy has done so far.
#[derive(Clone, Debug)]
pub struct PolicyState {
    slots: Vec<Option<usize>>,
    chosen: Vec<usize>,
    discarded: Vec<bool>,
}

impl PolicyState {
    fn new(n: usize) -> Self {
        PolicyState {
            slots: vec![None; n],
            chosen: Vec::new(),
            discarded: vec![false; n],
        }
    }

    pub fn slots(&self) -> &[Option<usize>] {
        &self.slots
    }

    /// Accepted elements in acceptance order.
    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn is_open(&self, i: usize) -> bool {
        self.slots[i].is_none() && !self.discarded[i]
    }
}

/// One outer iteration of a policy: elements rejected for infeasibility,
/// then the accepted element (if any) with its conditional marginal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Decision {
    pub discarded: Vec<(usize, f64)>,
    pub accepted: Option<(usize, f64)>,
}

/// A deterministic adaptive decision rule.
pub trait AdaptiveRule {
    fn decide(&self, instance: &Instance, matroid: &Matroid, state: &PolicyState) -> Result<Decision>;
}

/// The myopic policy: repeatedly take the open element with the largest
/// conditional expected marginal; if it does not fit the matroid, discard
/// it and try the next best.
#[derive(Clone, Copy, Debug, Default)]
pub struct Myopic;

impl AdaptiveRule for Myopic {
    fn decide(&self, instance: &Instance, matroid: &Matroid, state: &PolicyState) -> Result<Decision> {
        let mut slots = state.slots.clone();
        let mut open: Vec<(usize, f64)> = (0..instance.n())
            .filter(|&i| state.is_open(i))
            .map(|i| (i, instance.marginal_in_place(&mut slots, i)))
            .collect();
        let mut decision = Decision::default();
        while let Some((i, m)) = argmax_lowest(open.iter().copied()) {
            open.retain(|&(j, _)| j != i);
            if matroid.can_add_unchecked(&state.chosen, i) {
                decision.accepted = Some((i, m));
                break;
            }
            decision.discarded.push((i, m));
        }
        Ok(decision)
    }
}

/// Where an adaptive run reads outcomes from.
pub enum OutcomeSource<'a> {
    /// Draw each outcome when the element is chosen.
    Sample(&'a mut dyn RngCore),
    /// Read outcomes from a pre-drawn full realization.
    Fixed(&'a Scenario),
}

impl OutcomeSource<'_> {
    fn observe(&mut self, instance: &Instance, i: usize) -> usize {
        match self {
            OutcomeSource::Sample(rng) => instance.dist(i).sample_index(&mut **rng),
            OutcomeSource::Fixed(s) => s.outcome(i),
        }
    }
}

pub fn run_adaptive<R: AdaptiveRule + ?Sized>(
    rule: &R,
    instance: &Instance,
    matroid: &Matroid,
    mut source: OutcomeSource<'_>,
) -> Result<PolicyTrace> {
    check_ground(instance, matroid)?;
    if let OutcomeSource::Fixed(s) = &source {
        if s.0.len() != instance.n() || s.0.iter().enumerate().any(|(i, &x)| x >= instance.dist(i).len()) {
            return Err(Error::InvalidRealization("scenario does not fit the instance".into()));
        }
    }
    let mut state = PolicyState::new(instance.n());
    let mut steps = Vec::new();
    loop {
        let decision = rule.decide(instance, matroid, &state)?;
        for (i, m) in decision.discarded {
            state.discarded[i] = true;
            steps.push(TraceStep {
                element: i,
                accepted: false,
                outcome: None,
                marginal: m,
            });
        }
        let Some((i, m)) = decision.accepted else {
            break;
        };
        let x = source.observe(instance, i);
        state.slots[i] = Some(x);
        state.chosen.push(i);
        steps.push(TraceStep {
            element: i,
            accepted: true,
            outcome: Some(x),
            marginal: m,
        });
    }
    let value = instance.value_of(&state.slots);
    Ok(PolicyTrace {
        steps,
        realization: PartialRealization::from_slots(state.slots),
        value,
    })
}

/// Runs the myopic policy once.
pub fn run_myopic(instance: &Instance, matroid: &Matroid, source: OutcomeSource<'_>) -> Result<PolicyTrace> {
    run_adaptive(&Myopic, instance, matroid, source)
}

/// Exact expectation of an adaptive rule over its outcome tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdaptiveEvaluation {
    pub value: f64,
    /// Leaves of the outcome tree.
    pub paths: u64,
    /// Minimum over reachable states of `Δ_j - E[Δ_{j+1} | s_{j-1}]`
    /// (`Δ_{k+1} = 0`); `+inf` when nothing is ever accepted.
    pub min_marginal_drop: f64,
}

pub fn evaluate_adaptive_exact<R: AdaptiveRule + ?Sized>(
    rule: &R,
    instance: &Instance,
    matroid: &Matroid,
) -> Result<AdaptiveEvaluation> {
    check_ground(instance, matroid)?;
    let mut walk = Walk {
        rule,
        instance,
        matroid,
        paths: 0,
        min_drop: f64::INFINITY,
    };
    let mut state = PolicyState::new(instance.n());
    let (value, _) = walk.expand(&mut state)?;
    Ok(AdaptiveEvaluation {
        value,
        paths: walk.paths,
        min_marginal_drop: walk.min_drop,
    })
}

struct Walk<'a, R: ?Sized> {
    rule: &'a R,
    instance: &'a Instance,
    matroid: &'a Matroid,
    paths: u64,
    min_drop: f64,
}

impl<R: AdaptiveRule + ?Sized> Walk<'_, R> {
    /// Returns (expected final value, marginal of the next accepted element).
    fn expand(&mut self, state: &mut PolicyState) -> Result<(f64, f64)> {
        let decision = self.rule.decide(self.instance, self.matroid, state)?;
        for &(i, _) in &decision.discarded {
            state.discarded[i] = true;
        }
        let result = match decision.accepted {
            None => {
                self.paths += 1;
                let cap = self.instance.cap();
                if self.paths > cap {
                    return Err(Error::EnumerationTooLarge {
                        required: self.paths,
                        cap,
                        hint: "evaluate the policy by Monte Carlo simulation instead",
                    });
                }
                (self.instance.value_of(&state.slots), 0.0)
            }
            Some((i, marginal)) => {
                state.chosen.push(i);
                let (mut value, mut next) = (0.0, 0.0);
                for (x, (_, p)) in self.instance.dist(i).iter().enumerate() {
                    if p > 0.0 {
                        state.slots[i] = Some(x);
                        let (v, m) = self.expand(state)?;
                        value += p * v;
                        next += p * m;
                    }
                }
                state.slots[i] = None;
                state.chosen.pop();
                self.min_drop = self.min_drop.min(marginal - next);
                (value, marginal)
            }
        };
        for &(i, _) in &decision.discarded {
            state.discarded[i] = false;
        }
        Ok(result)
    }
}
