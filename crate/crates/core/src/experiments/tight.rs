//! The max k-cover family with an adaptivity gap approaching `e/(e-1)`:
//! `n` collections of `n²` copies, copy `j` of collection `i` covering item
//! `i` with probability `1/n`, budget `n²`. Elements are addressed as
//! `(collection, copy)` and never materialized at full size.

use rand::{Rng, RngCore};
use serde::Serialize;
use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::model::{DiscreteDistribution, Instance, ObjectiveSpec, OutcomePayload, Scenario, StochasticElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TightExample {
    pub n: usize,
}

impl TightExample {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("tight example needs n >= 2, got {n}")));
        }
        Ok(TightExample { n })
    }

    pub fn copies(&self) -> usize {
        self.n * self.n
    }

    pub fn budget(&self) -> usize {
        self.n * self.n
    }

    pub fn success_prob(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `(1 - (1 - 1/n)^n) n`, the best non-adaptive value (`n` copies per
    /// collection).
    pub fn nonadaptive_value(&self) -> f64 {
        let n = self.n as f64;
        (1.0 - (1.0 - 1.0 / n).powi(self.n as i32)) * n
    }

    /// `E[min(n, Bin(n², 1/n))]`, the scanning policy's exact value.
    pub fn adaptive_oracle(&self) -> f64 {
        let trials = (self.n * self.n) as u64;
        let bin = Binomial::new(self.success_prob(), trials).expect("valid binomial parameters");
        (0..=trials).map(|k| (k.min(self.n as u64)) as f64 * bin.pmf(k)).sum()
    }

    /// One run of the scanning policy: spend copies of collection `i` until
    /// item `i` is covered (or its copies run out), then move on.
    pub fn simulate_scanning(&self, rng: &mut dyn RngCore) -> usize {
        self.scan(self.copies(), self.budget(), |_, _| rng.gen_bool(self.success_prob()))
    }

    /// Scanning policy over a capped variant with `copies` per collection and
    /// the given budget; `success(collection, copy)` reads the outcome.
    pub fn scan(&self, copies: usize, budget: usize, mut success: impl FnMut(usize, usize) -> bool) -> usize {
        let mut left = budget;
        let mut covered = 0;
        for i in 0..self.n {
            for j in 0..copies {
                if left == 0 {
                    return covered;
                }
                left -= 1;
                if success(i, j) {
                    covered += 1;
                    break;
                }
            }
        }
        covered
    }

    /// Exact expected value of [`scan`](Self::scan) on the capped variant.
    pub fn scanning_value(&self, copies: usize, budget: usize) -> f64 {
        let p = self.success_prob();
        // value[b] = expected coverage from the current collection onward with b picks left
        let mut value = vec![0.0; budget + 1];
        for _ in 0..self.n {
            let mut next = vec![0.0; budget + 1];
            for (b, slot) in next.iter_mut().enumerate() {
                let mut fail = 1.0;
                let mut total = 0.0;
                for j in 0..copies.min(b) {
                    total += fail * p * (1.0 + value[b - j - 1]);
                    fail *= 1.0 - p;
                }
                total += fail * value[b.saturating_sub(copies)];
                *slot = total;
            }
            value = next;
        }
        value[budget]
    }

    /// Capped variant as a generic instance: element `i * copies + j` is copy
    /// `j` of collection `i`; uniform matroid of rank `budget`.
    pub fn materialize(&self, copies: usize, budget: usize) -> Result<(Instance, Matroid)> {
        let p = self.success_prob();
        let elements = (0..self.n * copies)
            .map(|id| {
                Ok(StochasticElement {
                    id,
                    dist: DiscreteDistribution::new(vec![
                        (OutcomePayload::Subset(vec![]), 1.0 - p),
                        (OutcomePayload::Subset(vec![id / copies]), p),
                    ])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let instance = Instance::new(self.n, ObjectiveSpec::Coverage { weights: None }, elements)?;
        let matroid = Matroid::uniform(self.n * copies, budget)?;
        Ok((instance, matroid))
    }

    /// Scanning on a materialized variant, reading outcomes from `scenario`.
    pub fn scan_scenario(&self, copies: usize, budget: usize, scenario: &Scenario) -> usize {
        self.scan(copies, budget, |i, j| scenario.outcome(i * copies + j) == 1)
    }
}
