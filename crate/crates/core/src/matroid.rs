//! Uniform, partition, and explicitly listed matroids over element ids `0..n`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearConstraint, Relation};

/// Largest ground set accepted for explicitly listed matroids.
pub const MAX_EXPLICIT_GROUND: usize = 24;

/// The matroid block of the instance file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatroidSpec {
    Uniform {
        k: usize,
    },
    Partition {
        parts: Vec<usize>,
        capacities: Vec<usize>,
    },
    Explicit {
        independent_sets: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Uniform {
        k: usize,
    },
    Partition {
        parts: Vec<usize>,
        capacities: Vec<usize>,
        /// min(capacity, part size)
        effective: Vec<usize>,
    },
    Explicit {
        family: HashSet<u64>,
        /// sorted listing, for output
        sets: Vec<u64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matroid {
    n: usize,
    kind: Kind,
    rank: usize,
}

/// Linear description of the base polytope `B(M)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasePolytope {
    pub n: usize,
    pub constraints: Vec<LinearConstraint>,
}

impl BasePolytope {
    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        y.len() == self.n && self.constraints.iter().all(|c| c.is_satisfied(y, tol))
    }
}

fn mask_of(set: &[usize]) -> u64 {
    set.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

fn ids_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

impl Matroid {
    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidMatroid(format!(
                "uniform rank {k} exceeds ground set size {n}"
            )));
        }
        Ok(Matroid {
            n,
            kind: Kind::Uniform { k },
            rank: k,
        })
    }

    /// `parts[i]` is element `i`'s part; `capacities[p]` bounds part `p`.
    pub fn partition(parts: Vec<usize>, capacities: Vec<usize>) -> Result<Self> {
        let mut sizes = vec![0usize; capacities.len()];
        for (i, &p) in parts.iter().enumerate() {
            if p >= capacities.len() {
                return Err(Error::InvalidMatroid(format!(
                    "element {i} assigned to part {p}, but only {} capacities given",
                    capacities.len()
                )));
            }
            sizes[p] += 1;
        }
        let effective: Vec<usize> = sizes
            .iter()
            .zip(&capacities)
            .map(|(s, c)| (*s).min(*c))
            .collect();
        let rank = effective.iter().sum();
        Ok(Matroid {
            n: parts.len(),
            kind: Kind::Partition {
                parts,
                capacities,
                effective,
            },
            rank,
        })
    }

    /// Checks downward closure and the exchange axiom exhaustively.
    pub fn explicit(n: usize, independent_sets: &[Vec<usize>]) -> Result<Self> {
        if n > MAX_EXPLICIT_GROUND {
            return Err(Error::InvalidMatroid(format!(
                "explicit matroids are limited to {MAX_EXPLICIT_GROUND} elements, got {n}"
            )));
        }
        let mut family = HashSet::new();
        for set in independent_sets {
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMatroid(format!("unknown element id {bad}")));
            }
            let mask = mask_of(set);
            if mask.count_ones() as usize != set.len() {
                return Err(Error::InvalidMatroid(format!("set {set:?} repeats an element")));
            }
            family.insert(mask);
        }
        if !family.contains(&0) {
            return Err(Error::InvalidMatroid("the empty set must be independent".into()));
        }
        let mut by_size: Vec<Vec<u64>> = vec![Vec::new(); n + 1];
        for &m in &family {
            for i in ids_of(m) {
                let sub = m & !(1u64 << i);
                if !family.contains(&sub) {
                    return Err(Error::InvalidMatroid(format!(
                        "not downward closed: {:?} is listed but {:?} is not",
                        ids_of(m),
                        ids_of(sub)
                    )));
                }
            }
            by_size[m.count_ones() as usize].push(m);
        }
        for level in by_size.iter_mut() {
            level.sort_unstable();
        }
        for s in 0..n {
            for &a in &by_size[s] {
                for &b in &by_size[s + 1] {
                    let ok = ids_of(b & !a)
                        .into_iter()
                        .any(|x| family.contains(&(a | 1u64 << x)));
                    if !ok {
                        return Err(Error::InvalidMatroid(format!(
                            "exchange axiom fails for {:?} and {:?}",
                            ids_of(a),
                            ids_of(b)
                        )));
                    }
                }
            }
        }
        let rank = family.iter().map(|m| m.count_ones() as usize).max().unwrap_or(0);
        let mut sets: Vec<u64> = family.iter().copied().collect();
        sets.sort_unstable_by_key(|m| (m.count_ones(), ids_of(*m)));
        Ok(Matroid {
            n,
            kind: Kind::Explicit { family, sets },
            rank,
        })
    }

    pub fn from_spec(spec: &MatroidSpec, n: usize) -> Result<Self> {
        match spec {
            MatroidSpec::Uniform { k } => Self::uniform(n, *k),
            MatroidSpec::Partition { parts, capacities } => {
                if parts.len() != n {
                    return Err(Error::InvalidMatroid(format!(
                        "partition assigns {} elements, instance has {n}",
                        parts.len()
                    )));
                }
                Self::partition(parts.clone(), capacities.clone())
            }
            MatroidSpec::Explicit { independent_sets } => Self::explicit(n, independent_sets),
        }
    }

    pub fn to_spec(&self) -> MatroidSpec {
        match &self.kind {
            Kind::Uniform { k } => MatroidSpec::Uniform { k: *k },
            Kind::Partition {
                parts, capacities, ..
            } => MatroidSpec::Partition {
                parts: parts.clone(),
                capacities: capacities.clone(),
            },
            Kind::Explicit { sets, .. } => MatroidSpec::Explicit {
                independent_sets: sets.iter().map(|m| ids_of(*m)).collect(),
            },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Uniform { .. } => "uniform",
            Kind::Partition { .. } => "partition",
            Kind::Explicit { .. } => "explicit",
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, Kind::Uniform { .. })
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.kind, Kind::Explicit { .. })
    }

    fn check_ids(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&i| i >= self.n) {
            Some(bad) => Err(Error::InvalidArgument(format!("unknown element id {bad}"))),
            None => Ok(()),
        }
    }

    pub fn is_independent(&self, set: &[usize]) -> Result<bool> {
        self.check_ids(set)?;
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        Ok(self.independent_unchecked(&sorted))
    }

    /// `set` must be duplicate-free with valid ids.
    pub(crate) fn independent_unchecked(&self, set: &[usize]) -> bool {
        match &self.kind {
            Kind::Uniform { k } => set.len() <= *k,
            Kind::Partition {
                parts, capacities, ..
            } => {
                let mut used = vec![0usize; capacities.len()];
                for &i in set {
                    used[parts[i]] += 1;
                    if used[parts[i]] > capacities[parts[i]] {
                        return false;
                    }
                }
                true
            }
            Kind::Explicit { family, .. } => family.contains(&mask_of(set)),
        }
    }

    /// `independent` must already be independent and not contain `i`.
    pub(crate) fn can_add_unchecked(&self, independent: &[usize], i: usize) -> bool {
        match &self.kind {
            Kind::Uniform { k } => independent.len() < *k,
            Kind::Partition {
                parts, capacities, ..
            } => {
                let p = parts[i];
                independent.iter().filter(|&&j| parts[j] == p).count() < capacities[p]
            }
            Kind::Explicit { family, .. } => {
                family.contains(&(mask_of(independent) | 1u64 << i))
            }
        }
    }

    fn require_independent(&self, set: &[usize]) -> Result<Vec<usize>> {
        self.check_ids(set)?;
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if !self.independent_unchecked(&sorted) {
            return Err(Error::InvalidArgument(format!("{set:?} is not independent")));
        }
        Ok(sorted)
    }

    /// Whether `set + i` is independent; `set` itself must be independent.
    pub fn can_add(&self, set: &[usize], i: usize) -> Result<bool> {
        let sorted = self.require_independent(set)?;
        self.check_ids(&[i])?;
        if sorted.binary_search(&i).is_ok() {
            return Ok(true);
        }
        Ok(self.can_add_unchecked(&sorted, i))
    }

    pub fn is_basis(&self, set: &[usize]) -> Result<bool> {
        let sorted = self.require_independent(set)?;
        Ok(sorted.len() == self.rank)
    }

    /// Matroid greedy: heaviest first, ties to the lowest id. Always returns
    /// a basis, even when some weights are negative.
    pub fn max_weight_basis(&self, weights: &[f64]) -> Result<Vec<usize>> {
        if weights.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} elements",
                weights.len(),
                self.n
            )));
        }
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        let mut basis = Vec::with_capacity(self.rank);
        for i in order {
            if basis.len() == self.rank {
                break;
            }
            if self.can_add_unchecked(&basis, i) {
                basis.push(i);
            }
        }
        basis.sort_unstable();
        Ok(basis)
    }

    /// Groups of elements whose coordinates sum to a fixed integer on `B(M)`.
    pub(crate) fn tight_groups(&self) -> Result<Vec<(Vec<usize>, usize)>> {
        match &self.kind {
            Kind::Uniform { k } => Ok(vec![((0..self.n).collect(), *k)]),
            Kind::Partition {
                parts, effective, ..
            } => Ok(effective
                .iter()
                .enumerate()
                .map(|(p, &cap)| ((0..self.n).filter(|&i| parts[i] == p).collect(), cap))
                .collect()),
            Kind::Explicit { .. } => Err(Error::UnsupportedMatroid(
                "explicit matroids have no closed-form base polytope".into(),
            )),
        }
    }

    /// `0 <= y <= 1` plus the tight group sums.
    pub fn base_polytope(&self) -> Result<BasePolytope> {
        let groups = self.tight_groups()?;
        let mut constraints = Vec::new();
        for (members, target) in groups {
            let mut coeffs = vec![0.0; self.n];
            for i in members {
                coeffs[i] = 1.0;
            }
            constraints.push(LinearConstraint::new(coeffs, Relation::Eq, target as f64));
        }
        for i in 0..self.n {
            let mut coeffs = vec![0.0; self.n];
            coeffs[i] = 1.0;
            constraints.push(LinearConstraint::new(coeffs.clone(), Relation::Ge, 0.0));
            constraints.push(LinearConstraint::new(coeffs, Relation::Le, 1.0));
        }
        Ok(BasePolytope {
            n: self.n,
            constraints,
        })
    }

    /// All independent sets (each sorted), in depth-first order.
    pub fn independent_sets(&self, cap: u64) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        self.collect_independent(0, &mut current, &mut out, cap)?;
        Ok(out)
    }

    fn collect_independent(
        &self,
        start: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: u64,
    ) -> Result<()> {
        if out.len() as u64 >= cap {
            return Err(Error::EnumerationTooLarge {
                required: cap.saturating_add(1),
                cap,
                hint: "too many independent sets for exhaustive search",
            });
        }
        out.push(current.clone());
        for i in start..self.n {
            if self.can_add_unchecked(current, i) {
                current.push(i);
                self.collect_independent(i + 1, current, out, cap)?;
                current.pop();
            }
        }
        Ok(())
    }
}
