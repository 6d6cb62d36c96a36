#![allow(dead_code)]

use stochsub::experiments::{gen_random_instance, GenSpec, MatroidKind, ObjectiveKind};
use stochsub::{Instance, Matroid, PartialRealization};

pub fn random_instance(
    seed: u64,
    n: usize,
    support: usize,
    objective: ObjectiveKind,
    matroid: MatroidKind,
) -> (Instance, Matroid) {
    let spec = GenSpec {
        n,
        support,
        objective,
        matroid,
        max_rank: 3,
    };
    gen_random_instance(&spec, seed).expect("generator accepts small specs")
}

/// Every subset of `0..n`, each sorted.
pub fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
        .collect()
}

/// Every partial realization of the instance: each element absent or at one
/// of its outcomes.
pub fn all_partials(inst: &Instance) -> Vec<PartialRealization> {
    let mut out = vec![PartialRealization::empty(inst.n())];
    for i in 0..inst.n() {
        let mut next = Vec::new();
        for r in &out {
            next.push(r.clone());
            for x in 0..inst.dist(i).len() {
                next.push(r.with(i, x).unwrap());
            }
        }
        out = next;
    }
    out
}

pub fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|i| big.contains(i))
}
