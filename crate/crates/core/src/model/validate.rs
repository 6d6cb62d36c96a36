//! Exhaustive (or sampled) monotonicity and diminishing-returns check of `f`.
//!
//! For a fixed full realization, `f` restricted to subsets is a set
//! function. It is monotone submodular iff for every partial realization
//! `s` and unchosen `i != j` (with any outcomes `x_i`, `x_j`):
//!
//! ```text
//! f(s + x_j) >= f(s)
//! f(s + x_i + x_j) - f(s + x_i) <= f(s + x_j) - f(s)
//! ```
//!
//! Iterating over every partial realization `s` covers every full
//! realization and every `S`, so the local checks suffice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Instance, PartialRealization};

const TOLERANCE: f64 = 1e-9;
const SPOT_CHECKS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Monotonicity,
    DiminishingReturns,
}

/// A witness `(S, T, j, realization)` with `S ⊆ T`, `j ∉ T`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub smaller: Vec<usize>,
    pub larger: Vec<usize>,
    pub element: usize,
    pub realization: PartialRealization,
    /// How far the inequality fails.
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    /// True when the realization space exceeded the cap and only random spot checks ran.
    pub partial: bool,
    pub checks: u64,
    pub violation: Option<Violation>,
}

impl Instance {
    pub fn validate_objective(&self) -> ValidationReport {
        if self.realization_space() <= self.cap() {
            self.validate_exhaustive()
        } else {
            self.validate_sampled(SPOT_CHECKS, 0)
        }
    }

    fn validate_exhaustive(&self) -> ValidationReport {
        let n = self.n();
        let mut slots = vec![None; n];
        let mut checks = 0u64;
        // odometer over all partial realizations
        loop {
            if let Some(v) = self.check_local(&mut slots, &mut checks) {
                return ValidationReport {
                    valid: false,
                    partial: false,
                    checks,
                    violation: Some(v),
                };
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    return ValidationReport {
                        valid: true,
                        partial: false,
                        checks,
                        violation: None,
                    };
                }
                let next = slots[pos].map_or(0, |x| x + 1);
                if next < self.dist(pos).len() {
                    slots[pos] = Some(next);
                    break;
                }
                slots[pos] = None;
                pos += 1;
            }
        }
    }

    /// Random partial realizations, each checked locally.
    pub fn validate_sampled(&self, samples: usize, seed: u64) -> ValidationReport {
        let n = self.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checks = 0u64;
        let mut slots = vec![None; n];
        for _ in 0..samples {
            for (i, slot) in slots.iter_mut().enumerate() {
                let choose = rng.gen_range(0..=self.dist(i).len());
                *slot = choose.checked_sub(1);
            }
            if let Some(j) = (n > 0).then(|| rng.gen_range(0..n)) {
                if let Some(v) = self.check_pair_sampled(&mut slots, j, &mut rng, &mut checks) {
                    return ValidationReport {
                        valid: false,
                        partial: true,
                        checks,
                        violation: Some(v),
                    };
                }
            }
        }
        ValidationReport {
            valid: true,
            partial: true,
            checks,
            violation: None,
        }
    }

    fn check_pair_sampled(
        &self,
        slots: &mut [Option<usize>],
        j: usize,
        rng: &mut ChaCha8Rng,
        checks: &mut u64,
    ) -> Option<Violation> {
        let n = slots.len();
        slots[j] = None;
        let i = rng.gen_range(0..n);
        if i != j {
            slots[i] = None;
        }
        let xj = rng.gen_range(0..self.dist(j).len());
        let xi = rng.gen_range(0..self.dist(i).len());
        self.check_triple(slots, (i != j).then_some((i, xi)), (j, xj), checks)
    }

    fn check_local(&self, slots: &mut [Option<usize>], checks: &mut u64) -> Option<Violation> {
        let n = slots.len();
        for j in 0..n {
            if slots[j].is_some() {
                continue;
            }
            for xj in 0..self.dist(j).len() {
                if let Some(v) = self.check_triple(slots, None, (j, xj), checks) {
                    return Some(v);
                }
                for i in 0..n {
                    if i == j || slots[i].is_some() {
                        continue;
                    }
                    for xi in 0..self.dist(i).len() {
                        if let Some(v) = self.check_triple(slots, Some((i, xi)), (j, xj), checks) {
                            return Some(v);
                        }
                    }
                }
            }
        }
        None
    }

    /// With `i` absent only monotonicity of adding `j` is checked; otherwise
    /// diminishing returns of `j` from `s` to `s + i`.
    fn check_triple(
        &self,
        slots: &mut [Option<usize>],
        extra: Option<(usize, usize)>,
        (j, xj): (usize, usize),
        checks: &mut u64,
    ) -> Option<Violation> {
        *checks += 1;
        let base = self.value_of(slots);
        slots[j] = Some(xj);
        let with_j = self.value_of(slots);
        slots[j] = None;
        let witness = |slots: &[Option<usize>], kind, amount, larger_extra: Option<usize>| {
            let realization = {
                let mut full = slots.to_vec();
                full[j] = Some(xj);
                if let Some((i, xi)) = extra {
                    full[i] = Some(xi);
                }
                PartialRealization::from_slots(full)
            };
            let smaller: Vec<usize> = (0..slots.len()).filter(|&k| slots[k].is_some()).collect();
            let mut larger = smaller.clone();
            if let Some(i) = larger_extra {
                larger.push(i);
                larger.sort_unstable();
            }
            Violation {
                kind,
                smaller,
                larger,
                element: j,
                realization,
                amount,
            }
        };
        match extra {
            None => {
                if with_j < base - TOLERANCE {
                    return Some(witness(slots, ViolationKind::Monotonicity, base - with_j, None));
                }
                None
            }
            Some((i, xi)) => {
                slots[i] = Some(xi);
                let with_i = self.value_of(slots);
                slots[j] = Some(xj);
                let with_both = self.value_of(slots);
                slots[j] = None;
                slots[i] = None;
                let excess = (with_both - with_i) - (with_j - base);
                if excess > TOLERANCE {
                    return Some(witness(
                        slots,
                        ViolationKind::DiminishingReturns,
                        excess,
                        Some(i),
                    ));
                }
                None
            }
        }
    }
}
