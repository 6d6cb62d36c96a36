//! Brute-force optimal policies for small instances.

use std::collections::HashMap;

use serde::Serialize;

use super::adaptive::{AdaptiveRule, Decision, PolicyState};
use super::{argmax_lowest, check_ground, TIE_EPS};
use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::model::{Instance, PartialRealization};

/// Memoized optimal continuation values keyed by realization code.
#[derive(Clone, Debug)]
pub struct DecisionTreeValue {
    values: HashMap<u64, f64>,
    place: Vec<u64>,
    /// States where stopping beats every continuation by more than `TIE_EPS`.
    pub early_stop_gains: u64,
}

impl DecisionTreeValue {
    fn code(&self, slots: &[Option<usize>]) -> u64 {
        slots
            .iter()
            .zip(&self.place)
            .map(|(s, p)| s.map_or(0, |x| x as u64 + 1) * p)
            .sum()
    }

    pub fn root(&self) -> f64 {
        self.values[&0]
    }

    /// Optimal continuation value at a state reachable by the optimal
    /// search; `None` for states never expanded.
    pub fn value(&self, r: &PartialRealization) -> Option<f64> {
        if r.n() != self.place.len() {
            return None;
        }
        self.values.get(&self.code(r.slots())).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

struct Search<'a> {
    instance: &'a Instance,
    matroid: &'a Matroid,
    tree: DecisionTreeValue,
}

impl Search<'_> {
    fn value(&mut self, slots: &mut Vec<Option<usize>>, chosen: &mut Vec<usize>) -> Result<f64> {
        let code = self.tree.code(slots);
        if let Some(&v) = self.tree.values.get(&code) {
            return Ok(v);
        }
        let stop = self.instance.value_of(slots);
        let mut best_go = f64::NEG_INFINITY;
        for i in 0..slots.len() {
            if slots[i].is_some() || !self.matroid.can_add_unchecked(chosen, i) {
                continue;
            }
            let go = self.continuation(slots, chosen, i)?;
            best_go = best_go.max(go);
        }
        if best_go.is_finite() && stop > best_go + TIE_EPS {
            self.tree.early_stop_gains += 1;
        }
        let v = stop.max(best_go);
        self.tree.values.insert(code, v);
        let cap = self.instance.cap();
        if self.tree.values.len() as u64 > cap {
            return Err(Error::EnumerationTooLarge {
                required: self.tree.values.len() as u64,
                cap,
                hint: "the optimal adaptive solver is only for small instances",
            });
        }
        Ok(v)
    }

    fn continuation(
        &mut self,
        slots: &mut Vec<Option<usize>>,
        chosen: &mut Vec<usize>,
        i: usize,
    ) -> Result<f64> {
        let instance = self.instance;
        chosen.push(i);
        let mut go = 0.0;
        for (x, (_, p)) in instance.dist(i).iter().enumerate() {
            if p > 0.0 {
                slots[i] = Some(x);
                go += p * self.value(slots, chosen)?;
            }
        }
        slots[i] = None;
        chosen.pop();
        Ok(go)
    }
}

/// Optimal adaptive value by memoized recursion over partial realizations,
/// `V(s) = max(f(s), max_i sum_x g_i(x) V(s + {i -> x}))`.
pub fn optimal_adaptive_exact(instance: &Instance, matroid: &Matroid) -> Result<(f64, DecisionTreeValue)> {
    check_ground(instance, matroid)?;
    let mut place = Vec::with_capacity(instance.n());
    let mut p = 1u64;
    for i in 0..instance.n() {
        place.push(p);
        p = p.checked_mul(instance.dist(i).len() as u64 + 1).ok_or(Error::EnumerationTooLarge {
            required: u64::MAX,
            cap: instance.cap(),
            hint: "the optimal adaptive solver is only for small instances",
        })?;
    }
    let mut search = Search {
        instance,
        matroid,
        tree: DecisionTreeValue {
            values: HashMap::new(),
            place,
            early_stop_gains: 0,
        },
    };
    let mut slots = vec![None; instance.n()];
    let value = search.value(&mut slots, &mut Vec::new())?;
    Ok((value, search.tree))
}

/// Follows a solved decision tree: takes the addable element with the best
/// continuation (lowest id on ties) and stops only when stopping is strictly
/// better.
pub struct OptimalAdaptive<'a> {
    tree: &'a DecisionTreeValue,
}

impl<'a> OptimalAdaptive<'a> {
    pub fn new(tree: &'a DecisionTreeValue) -> Self {
        OptimalAdaptive { tree }
    }
}

impl AdaptiveRule for OptimalAdaptive<'_> {
    fn decide(&self, instance: &Instance, matroid: &Matroid, state: &PolicyState) -> Result<Decision> {
        let mut slots = state.slots().to_vec();
        let mut options = Vec::new();
        for i in 0..instance.n() {
            if slots[i].is_some() || !matroid.can_add_unchecked(state.chosen(), i) {
                continue;
            }
            let mut go = 0.0;
            for (x, (_, p)) in instance.dist(i).iter().enumerate() {
                if p > 0.0 {
                    slots[i] = Some(x);
                    let v = self.tree.values.get(&self.tree.code(&slots)).copied().ok_or_else(|| {
                        Error::InvalidArgument("decision tree does not belong to this instance".into())
                    })?;
                    go += p * v;
                }
            }
            slots[i] = None;
            options.push((i, go));
        }
        let stop = instance.value_of(&slots);
        let accepted = argmax_lowest(options)
            .filter(|&(_, go)| go + TIE_EPS >= stop)
            .map(|(i, _)| (i, instance.marginal_in_place(&mut slots, i)));
        Ok(Decision {
            discarded: Vec::new(),
            accepted,
        })
    }
}

/// Best fixed set, searched over every independent set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonAdaptiveOptimum {
    pub value: f64,
    pub set: Vec<usize>,
    /// Best value restricted to bases; equals `value` for monotone objectives.
    pub best_basis_value: f64,
    pub best_basis: Vec<usize>,
}

pub fn optimal_nonadaptive_exact(instance: &Instance, matroid: &Matroid) -> Result<NonAdaptiveOptimum> {
    check_ground(instance, matroid)?;
    let sets = matroid.independent_sets(instance.cap())?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut best_basis: Option<(f64, Vec<usize>)> = None;
    for set in sets {
        let v = instance.expected_value(&set)?;
        if best.as_ref().is_none_or(|(b, _)| v > b + TIE_EPS) {
            best = Some((v, set.clone()));
        }
        if set.len() == matroid.rank() && best_basis.as_ref().is_none_or(|(b, _)| v > b + TIE_EPS) {
            best_basis = Some((v, set));
        }
    }
    // the empty set is always independent and every matroid has a basis
    let (value, set) = best.expect("empty set is independent");
    let (best_basis_value, best_basis) = best_basis.expect("a basis exists");
    Ok(NonAdaptiveOptimum {
        value,
        set,
        best_basis_value,
        best_basis,
    })
}
