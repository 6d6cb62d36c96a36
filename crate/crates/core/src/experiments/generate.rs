//! Seeded random instances for property suites.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::model::{
    DiscreteDistribution, Instance, ObjectiveSpec, OutcomePayload, PiecewiseConcave,
    StochasticElement,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Coverage,
    ConcaveSum,
    /// Explicit table filled in from a random coverage objective.
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatroidKind {
    Uniform,
    Partition,
    /// Linear matroid over GF(2), listed set by set.
    Explicit,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [ObjectiveKind::Coverage, ObjectiveKind::ConcaveSum, ObjectiveKind::Table];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Coverage => "coverage",
            ObjectiveKind::ConcaveSum => "concave_sum",
            ObjectiveKind::Table => "table",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coverage" => Ok(ObjectiveKind::Coverage),
            "concave_sum" | "concave" => Ok(ObjectiveKind::ConcaveSum),
            "table" => Ok(ObjectiveKind::Table),
            _ => Err(Error::InvalidArgument(format!("unknown objective kind {s:?}"))),
        }
    }
}

impl MatroidKind {
    pub const ALL: [MatroidKind; 3] = [MatroidKind::Uniform, MatroidKind::Partition, MatroidKind::Explicit];

    pub fn name(self) -> &'static str {
        match self {
            MatroidKind::Uniform => "uniform",
            MatroidKind::Partition => "partition",
            MatroidKind::Explicit => "explicit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(MatroidKind::Uniform),
            "partition" => Ok(MatroidKind::Partition),
            "explicit" => Ok(MatroidKind::Explicit),
            _ => Err(Error::InvalidArgument(format!("unknown matroid kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    /// Outcomes per element.
    pub support: usize,
    pub objective: ObjectiveKind,
    pub matroid: MatroidKind,
    pub max_rank: usize,
}

impl GenSpec {
    pub fn new(n: usize, support: usize) -> Self {
        GenSpec {
            n,
            support,
            objective: ObjectiveKind::Coverage,
            matroid: MatroidKind::Uniform,
            max_rank: 3,
        }
    }
}

/// Seeded random `(instance, matroid)`. Coverage payloads live on a universe
/// of `2n` items.
pub fn gen_random_instance(spec: &GenSpec, seed: u64) -> Result<(Instance, Matroid)> {
    if spec.n == 0 || spec.n > 20 {
        return Err(Error::InvalidArgument(format!("n = {} must be in 1..=20", spec.n)));
    }
    if spec.support == 0 || spec.support > 8 {
        return Err(Error::InvalidArgument(format!("support = {} must be in 1..=8", spec.support)));
    }
    if spec.max_rank == 0 {
        return Err(Error::InvalidArgument("max_rank must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instance = match spec.objective {
        ObjectiveKind::Coverage => random_coverage(spec, &mut rng)?,
        ObjectiveKind::ConcaveSum => random_concave(spec, &mut rng)?,
        ObjectiveKind::Table => tabulate(&random_coverage(spec, &mut rng)?)?,
    };
    let matroid = match spec.matroid {
        MatroidKind::Uniform => {
            let k = rng.gen_range(1..=spec.max_rank.min(spec.n));
            Matroid::uniform(spec.n, k)?
        }
        MatroidKind::Partition => random_partition(spec, &mut rng)?,
        MatroidKind::Explicit => random_linear(spec, &mut rng)?,
    };
    Ok((instance, matroid))
}

/// Probabilities bounded away from zero, summing to one within rounding.
fn random_probs(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = probs[..k - 1].iter().sum();
    probs[k - 1] = 1.0 - head;
    probs
}

fn random_coverage(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let universe = 2 * spec.n;
    let mut elements = Vec::with_capacity(spec.n);
    for id in 0..spec.n {
        let mut payloads: Vec<Vec<usize>> = Vec::with_capacity(spec.support);
        while payloads.len() < spec.support {
            let size = rng.gen_range(0..=3.min(universe));
            let mut items: Vec<usize> = (0..universe).collect::<Vec<_>>().choose_multiple(rng, size).copied().collect();
            items.sort_unstable();
            if !payloads.contains(&items) {
                payloads.push(items);
            }
        }
        let probs = random_probs(spec.support, rng);
        let dist = DiscreteDistribution::new(
            payloads.into_iter().map(OutcomePayload::Subset).zip(probs).collect(),
        )?;
        elements.push(StochasticElement { id, dist });
    }
    let weights = if rng.gen_bool(0.5) {
        Some((0..universe).map(|_| (rng.gen_range(0.5..2.0) * 100.0f64).round() / 100.0).collect())
    } else {
        None
    };
    Instance::new(universe, ObjectiveSpec::Coverage { weights }, elements)
}

fn random_concave(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let mut elements = Vec::with_capacity(spec.n);
    for id in 0..spec.n {
        let mut values: Vec<f64> = Vec::with_capacity(spec.support);
        while values.len() < spec.support {
            let v = (rng.gen_range(0.0..2.0f64) * 100.0).round() / 100.0;
            if !values.contains(&v) {
                values.push(v);
            }
        }
        let probs = random_probs(spec.support, rng);
        let dist = DiscreteDistribution::new(
            values.into_iter().map(OutcomePayload::Scalar).zip(probs).collect(),
        )?;
        elements.push(StochasticElement { id, dist });
    }
    let mut slope = rng.gen_range(1.0..3.0);
    let mut breakpoints = vec![(0.0, 0.0)];
    let (mut x, mut u) = (0.0, 0.0);
    for _ in 0..3 {
        let dx = rng.gen_range(0.5..2.0);
        x += dx;
        u += slope * dx;
        breakpoints.push((x, u));
        slope *= rng.gen_range(0.2..0.9);
    }
    let curve = PiecewiseConcave::new(breakpoints, slope)?;
    Instance::new(0, ObjectiveSpec::ConcaveOfSum(curve), elements)
}

/// Same elements and values as `source`, with `f` stored as a table.
pub fn tabulate(source: &Instance) -> Result<Instance> {
    let n = source.n();
    let space = source.realization_space();
    crate::error::check_cap(space, source.cap(), "too many realizations to tabulate")?;
    let mut values = Vec::with_capacity(space as usize);
    let mut slots = vec![None; n];
    for _ in 0..space {
        values.push(source.value_of(&slots));
        for (i, slot) in slots.iter_mut().enumerate() {
            let next = slot.map_or(0, |x| x + 1);
            if next < source.dist(i).len() {
                *slot = Some(next);
                break;
            }
            *slot = None;
        }
    }
    let elements = source
        .elements()
        .iter()
        .map(|e| {
            let dist = DiscreteDistribution::new(
                e.dist.iter().enumerate().map(|(x, (_, p))| (OutcomePayload::Index(x as u64), p)).collect(),
            )?;
            Ok(StochasticElement { id: e.id, dist })
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(0, ObjectiveSpec::ExplicitTable { values }, elements)
}

fn random_partition(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Matroid> {
    let parts_count = rng.gen_range(1..=3.min(spec.n));
    let mut parts: Vec<usize> = (0..spec.n).map(|i| i % parts_count).collect();
    parts.shuffle(rng);
    let sizes: Vec<usize> = (0..parts_count).map(|p| parts.iter().filter(|&&q| q == p).count()).collect();
    let mut capacities: Vec<usize> = sizes.iter().map(|&s| rng.gen_range(0..=s.min(2))).collect();
    // rank between 1 and max_rank
    while capacities.iter().zip(&sizes).map(|(c, s)| c.min(s)).sum::<usize>() > spec.max_rank {
        let p = rng.gen_range(0..parts_count);
        capacities[p] = capacities[p].saturating_sub(1);
    }
    if capacities.iter().all(|&c| c == 0) {
        capacities[rng.gen_range(0..parts_count)] = 1;
    }
    Matroid::partition(parts, capacities)
}

/// Column vectors in GF(2)^r; independent sets are linearly independent
/// column subsets. Zero columns become loops.
fn random_linear(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Matroid> {
    let r = rng.gen_range(1..=spec.max_rank.min(spec.n));
    let mut columns: Vec<u32> = (0..spec.n).map(|_| rng.gen_range(0..1u32 << r)).collect();
    if columns.iter().all(|&c| c == 0) {
        columns[rng.gen_range(0..spec.n)] = 1;
    }
    let mut family = Vec::new();
    for mask in 0u32..1 << spec.n {
        let set: Vec<usize> = (0..spec.n).filter(|&i| mask >> i & 1 == 1).collect();
        if gf2_independent(set.iter().map(|&i| columns[i])) {
            family.push(set);
        }
    }
    Matroid::explicit(spec.n, &family)
}

fn gf2_independent(vectors: impl Iterator<Item = u32>) -> bool {
    let mut basis: Vec<u32> = Vec::new();
    for mut v in vectors {
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v == 0 {
            return false;
        }
        basis.push(v);
        basis.sort_unstable_by(|a, b| b.cmp(a));
    }
    true
}
