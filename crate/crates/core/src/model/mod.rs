//! Stochastic elements, objectives, and (partial) realizations.
//!
//! An [`Instance`] bundles `n` independent random elements with a
//! deterministic objective `f` over realizations. A realization assigns each
//! element either a support index or nothing ("not chosen"). Evaluation of
//! `f`, its expectation `F(S)`, the conditional `F(S, t)`, and the
//! multilinear extension `F(y)` live in [`eval`]; the exhaustive
//! monotonicity/submodularity check lives in [`validate`].

pub mod eval;
pub mod validate;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{saturating_product, Error, Result};

/// Default cap on the number of scenarios any exact enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Probabilities must sum to one within this tolerance.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// One possible outcome of a stochastic element.
#[derive(Clone, Debug, PartialEq)]
pub enum OutcomePayload {
    /// Sorted, duplicate-free universe item ids (coverage objectives).
    Subset(Vec<usize>),
    /// Nonnegative scalar (concave-of-sum objectives).
    Scalar(f64),
    /// Opaque index (explicit-table objectives).
    Index(u64),
}

impl OutcomePayload {
    fn kind(&self) -> &'static str {
        match self {
            OutcomePayload::Subset(_) => "subset",
            OutcomePayload::Scalar(_) => "scalar",
            OutcomePayload::Index(_) => "index",
        }
    }
}

/// Finite outcome distribution `g_i` of a single element.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    outcomes: Vec<(OutcomePayload, f64)>,
}

impl DiscreteDistribution {
    pub fn new(outcomes: Vec<(OutcomePayload, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut total = 0.0;
        for (payload, p) in &outcomes {
            if !p.is_finite() || *p < 0.0 || *p > 1.0 {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} outside [0, 1]"
                )));
            }
            total += p;
            match payload {
                OutcomePayload::Subset(items) => {
                    if items.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::InvalidDistribution(format!(
                            "subset payload {items:?} is not sorted and duplicate-free"
                        )));
                    }
                }
                OutcomePayload::Scalar(v) => {
                    if !v.is_finite() || *v < 0.0 {
                        return Err(Error::InvalidDistribution(format!(
                            "scalar payload {v} must be finite and nonnegative"
                        )));
                    }
                }
                OutcomePayload::Index(_) => {}
            }
        }
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let kind = outcomes[0].0.kind();
        for (i, (a, _)) in outcomes.iter().enumerate() {
            if a.kind() != kind {
                return Err(Error::InvalidDistribution(
                    "payload kinds are mixed within one support".into(),
                ));
            }
            if outcomes[..i].iter().any(|(b, _)| a == b) {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate payload {a:?}"
                )));
            }
        }
        Ok(DiscreteDistribution { outcomes })
    }

    /// Distribution with a single certain outcome.
    pub fn certain(payload: OutcomePayload) -> Result<Self> {
        Self::new(vec![(payload, 1.0)])
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn prob(&self, idx: usize) -> f64 {
        self.outcomes[idx].1
    }

    pub fn payload(&self, idx: usize) -> &OutcomePayload {
        &self.outcomes[idx].0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OutcomePayload, f64)> {
        self.outcomes.iter().map(|(o, p)| (o, *p))
    }

    /// Inverse-CDF draw of a support index from a uniform in `[0, 1)`.
    pub fn index_for_uniform(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (idx, (_, p)) in self.outcomes.iter().enumerate() {
            if *p > 0.0 {
                acc += p;
                last_positive = idx;
                if u < acc {
                    return idx;
                }
            }
        }
        last_positive
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index_for_uniform(rng.gen::<f64>())
    }
}

/// A random variable `X_i` of the instance.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticElement {
    pub id: usize,
    pub dist: DiscreteDistribution,
}

/// Piecewise-linear concave `u` with `u(0) = 0`.
///
/// Breakpoints are `(x, u(x))` pairs starting at `(0, 0)` with strictly
/// increasing `x`; beyond the last breakpoint `u` continues with `tail_slope`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConcave {
    breakpoints: Vec<(f64, f64)>,
    tail_slope: f64,
}

impl PiecewiseConcave {
    pub fn new(breakpoints: Vec<(f64, f64)>, tail_slope: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if breakpoints.first() != Some(&(0.0, 0.0)) {
            return bad("concave function must start at breakpoint (0, 0)".into());
        }
        if !tail_slope.is_finite() || tail_slope < 0.0 {
            return bad(format!("tail slope {tail_slope} must be finite and >= 0"));
        }
        let mut prev_slope = f64::INFINITY;
        for w in breakpoints.windows(2) {
            let ((x0, u0), (x1, u1)) = (w[0], w[1]);
            if !(x1.is_finite() && u1.is_finite()) || x1 <= x0 {
                return bad(format!("breakpoint x values must increase (at {x1})"));
            }
            let slope = (u1 - u0) / (x1 - x0);
            if slope > prev_slope || slope < 0.0 {
                return bad(format!(
                    "slopes must be nonnegative and non-increasing (slope {slope} after {prev_slope})"
                ));
            }
            prev_slope = slope;
        }
        if tail_slope > prev_slope {
            return bad(format!(
                "tail slope {tail_slope} exceeds the last segment slope {prev_slope}"
            ));
        }
        Ok(PiecewiseConcave {
            breakpoints,
            tail_slope,
        })
    }

    /// `u(x) = min(x, cap)`.
    pub fn capped_linear(cap: f64) -> Result<Self> {
        Self::new(vec![(0.0, 0.0), (cap, cap)], 0.0)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    pub fn eval(&self, x: f64) -> f64 {
        for w in self.breakpoints.windows(2) {
            let ((x0, u0), (x1, u1)) = (w[0], w[1]);
            if x <= x1 {
                return u0 + (x - x0) * (u1 - u0) / (x1 - x0);
            }
        }
        let (xl, ul) = *self.breakpoints.last().expect("non-empty");
        ul + (x - xl) * self.tail_slope
    }
}

/// The deterministic objective `f` over realizations.
#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveSpec {
    /// Total weight of the union of realized subsets; unit weights when `None`.
    Coverage { weights: Option<Vec<f64>> },
    /// `u(sum of realized scalars)`.
    ConcaveOfSum(PiecewiseConcave),
    /// Value per realization, indexed by [`Instance::realization_code`].
    ExplicitTable { values: Vec<f64> },
}

impl ObjectiveSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ObjectiveSpec::Coverage { .. } => "coverage",
            ObjectiveSpec::ConcaveOfSum(_) => "concave_sum",
            ObjectiveSpec::ExplicitTable { .. } => "table",
        }
    }

    fn payload_kind(&self) -> &'static str {
        match self {
            ObjectiveSpec::Coverage { .. } => "subset",
            ObjectiveSpec::ConcaveOfSum(_) => "scalar",
            ObjectiveSpec::ExplicitTable { .. } => "index",
        }
    }
}

/// A problem instance: `n` independent elements plus the objective.
///
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct Instance {
    elements: Vec<StochasticElement>,
    objective: ObjectiveSpec,
    universe_size: usize,
    cap: u64,
    // coverage: bitmask per (element, outcome)
    masks: Vec<Vec<Vec<u64>>>,
    // table: mixed-radix place value per element
    radix: Vec<u64>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements
            && self.objective == other.objective
            && self.universe_size == other.universe_size
    }
}

impl Instance {
    pub fn new(
        universe_size: usize,
        objective: ObjectiveSpec,
        elements: Vec<StochasticElement>,
    ) -> Result<Self> {
        for (pos, e) in elements.iter().enumerate() {
            if e.id != pos {
                return Err(Error::InvalidInstance(format!(
                    "element ids must be 0..n-1 in order; found id {} at position {pos}",
                    e.id
                )));
            }
            let want = objective.payload_kind();
            if let Some((p, _)) = e.dist.iter().find(|(p, _)| p.kind() != want) {
                return Err(Error::InvalidInstance(format!(
                    "element {} has a {} payload but the objective is {}",
                    e.id,
                    p.kind(),
                    objective.kind_name()
                )));
            }
        }
        let words = universe_size.div_ceil(64).max(1);
        let mut masks = Vec::new();
        let mut radix = Vec::new();
        match &objective {
            ObjectiveSpec::Coverage { weights } => {
                if let Some(w) = weights {
                    if w.len() != universe_size {
                        return Err(Error::InvalidInstance(format!(
                            "{} weights given for a universe of {universe_size}",
                            w.len()
                        )));
                    }
                    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                        return Err(Error::InvalidInstance(
                            "coverage weights must be finite and >= 0".into(),
                        ));
                    }
                }
                for e in &elements {
                    let mut per_outcome = Vec::with_capacity(e.dist.len());
                    for (payload, _) in e.dist.iter() {
                        let OutcomePayload::Subset(items) = payload else {
                            unreachable!("payload kind checked above")
                        };
                        let mut mask = vec![0u64; words];
                        for &item in items {
                            if item >= universe_size {
                                return Err(Error::InvalidInstance(format!(
                                    "element {} covers item {item} outside universe of {universe_size}",
                                    e.id
                                )));
                            }
                            mask[item / 64] |= 1u64 << (item % 64);
                        }
                        per_outcome.push(mask);
                    }
                    masks.push(per_outcome);
                }
            }
            ObjectiveSpec::ConcaveOfSum(_) => {}
            ObjectiveSpec::ExplicitTable { values } => {
                let mut place = 1u64;
                for e in &elements {
                    radix.push(place);
                    place = place.checked_mul(e.dist.len() as u64 + 1).ok_or_else(|| {
                        Error::InvalidInstance("table realization space overflows".into())
                    })?;
                }
                if values.len() as u64 != place {
                    return Err(Error::InvalidInstance(format!(
                        "table has {} values, realization space has {place}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidInstance(
                        "table values must be finite and >= 0".into(),
                    ));
                }
            }
        }
        Ok(Instance {
            elements,
            objective,
            universe_size,
            cap: DEFAULT_ENUMERATION_CAP,
            masks,
            radix,
        })
    }

    /// Same instance with a different enumeration cap.
    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[StochasticElement] {
        &self.elements
    }

    pub fn dist(&self, i: usize) -> &DiscreteDistribution {
        &self.elements[i].dist
    }

    pub fn objective(&self) -> &ObjectiveSpec {
        &self.objective
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn is_coverage(&self) -> bool {
        matches!(self.objective, ObjectiveSpec::Coverage { .. })
    }

    /// Number of partial realizations, `prod (|support_i| + 1)`.
    pub fn realization_space(&self) -> u64 {
        saturating_product(self.elements.iter().map(|e| e.dist.len() as u64 + 1))
    }

    /// Mixed-radix code of a realization: digit `0` is "absent", digit
    /// `1 + idx` is support index `idx`; element 0 is least significant.
    pub fn realization_code(&self, r: &PartialRealization) -> Result<u64> {
        self.check_realization(r)?;
        let mut code = 0u64;
        let mut place = 1u64;
        for (i, slot) in r.slots.iter().enumerate() {
            let digit = slot.map_or(0, |x| x as u64 + 1);
            code = digit
                .checked_mul(place)
                .and_then(|d| code.checked_add(d))
                .ok_or_else(|| Error::InvalidArgument("realization code overflows u64".into()))?;
            place = place.saturating_mul(self.dist(i).len() as u64 + 1);
        }
        Ok(code)
    }

    pub fn check_realization(&self, r: &PartialRealization) -> Result<()> {
        if r.slots.len() != self.n() {
            return Err(Error::InvalidRealization(format!(
                "realization covers {} elements, instance has {}",
                r.slots.len(),
                self.n()
            )));
        }
        for (i, slot) in r.slots.iter().enumerate() {
            if let Some(x) = slot {
                if *x >= self.dist(i).len() {
                    return Err(Error::InvalidRealization(format!(
                        "support index {x} out of range for element {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn check_set(&self, set: &[usize]) -> Result<Vec<usize>> {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&bad) = sorted.last().filter(|&&i| i >= self.n()) {
            return Err(Error::InvalidArgument(format!("unknown element id {bad}")));
        }
        Ok(sorted)
    }

    /// `f` on a slot vector known to be valid.
    pub(crate) fn value_of(&self, slots: &[Option<usize>]) -> f64 {
        match &self.objective {
            ObjectiveSpec::Coverage { weights } => {
                let words = self.universe_size.div_ceil(64).max(1);
                if words == 1 {
                    let mut acc = 0u64;
                    for (i, slot) in slots.iter().enumerate() {
                        if let Some(x) = slot {
                            acc |= self.masks[i][*x][0];
                        }
                    }
                    weigh(&[acc], weights.as_deref())
                } else {
                    let mut acc = vec![0u64; words];
                    for (i, slot) in slots.iter().enumerate() {
                        if let Some(x) = slot {
                            for (a, m) in acc.iter_mut().zip(&self.masks[i][*x]) {
                                *a |= m;
                            }
                        }
                    }
                    weigh(&acc, weights.as_deref())
                }
            }
            ObjectiveSpec::ConcaveOfSum(u) => {
                let total: f64 = slots
                    .iter()
                    .enumerate()
                    .filter_map(|(i, s)| {
                        s.map(|x| match self.dist(i).payload(x) {
                            OutcomePayload::Scalar(v) => *v,
                            _ => unreachable!("payload kind checked at construction"),
                        })
                    })
                    .sum();
                u.eval(total)
            }
            ObjectiveSpec::ExplicitTable { values } => {
                let code: u64 = slots
                    .iter()
                    .zip(&self.radix)
                    .map(|(s, place)| s.map_or(0, |x| x as u64 + 1) * place)
                    .sum();
                values[code as usize]
            }
        }
    }

    /// Draws a full realization of every element.
    pub fn sample_scenario<R: Rng + ?Sized>(&self, rng: &mut R) -> Scenario {
        Scenario(self.elements.iter().map(|e| e.dist.sample_index(rng)).collect())
    }
}

fn weigh(bits: &[u64], weights: Option<&[f64]>) -> f64 {
    match weights {
        None => bits.iter().map(|w| w.count_ones() as f64).sum(),
        Some(w) => {
            let mut total = 0.0;
            for (word_idx, &word) in bits.iter().enumerate() {
                let mut rest = word;
                while rest != 0 {
                    let bit = rest.trailing_zeros() as usize;
                    total += w[word_idx * 64 + bit];
                    rest &= rest - 1;
                }
            }
            total
        }
    }
}

/// Outcomes for the chosen elements; unchosen elements are absent.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialRealization {
    slots: Vec<Option<usize>>,
}

impl PartialRealization {
    /// The empty realization over `n` elements.
    pub fn empty(n: usize) -> Self {
        PartialRealization {
            slots: vec![None; n],
        }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut r = Self::empty(n);
        for &(id, idx) in pairs {
            r.set(id, idx)?;
        }
        Ok(r)
    }

    pub(crate) fn from_slots(slots: Vec<Option<usize>>) -> Self {
        PartialRealization { slots }
    }

    pub fn set(&mut self, id: usize, idx: usize) -> Result<()> {
        match self.slots.get_mut(id) {
            Some(slot) => {
                *slot = Some(idx);
                Ok(())
            }
            None => Err(Error::InvalidRealization(format!("unknown element id {id}"))),
        }
    }

    pub fn with(&self, id: usize, idx: usize) -> Result<Self> {
        let mut r = self.clone();
        r.set(id, idx)?;
        Ok(r)
    }

    pub fn get(&self, id: usize) -> Option<usize> {
        self.slots.get(id).copied().flatten()
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(Option::is_none)
    }

    /// Ids of the chosen (present) elements, ascending.
    pub fn domain(&self) -> Vec<usize> {
        self.pairs().into_iter().map(|(i, _)| i).collect()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|x| (i, x)))
            .collect()
    }

    /// Keeps only the coordinates in `set`.
    pub fn restrict(&self, set: &[usize]) -> Self {
        let mut r = Self::empty(self.n());
        for &i in set {
            if i < self.n() {
                r.slots[i] = self.slots[i];
            }
        }
        r
    }

    pub fn slots(&self) -> &[Option<usize>] {
        &self.slots
    }
}

impl Serialize for PartialRealization {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let pairs = self.pairs();
        let mut map = s.serialize_map(Some(pairs.len()))?;
        for (i, x) in pairs {
            map.serialize_entry(&i.to_string(), &x)?;
        }
        map.end()
    }
}

/// A full realization: one support index for every element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario(pub Vec<usize>);

impl Scenario {
    pub fn outcome(&self, i: usize) -> usize {
        self.0[i]
    }

    /// The realization this scenario induces on `set`.
    pub fn restrict(&self, set: &[usize]) -> PartialRealization {
        let mut r = PartialRealization::empty(self.0.len());
        for &i in set {
            r.slots[i] = Some(self.0[i]);
        }
        r
    }
}

/// A point `y in [0, 1]^n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FractionalPoint(Vec<f64>);

impl FractionalPoint {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if let Some(bad) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidPoint(format!("coordinate {bad} outside [0, 1]")));
        }
        Ok(FractionalPoint(y))
    }

    /// Clamps coordinates that drifted outside `[0, 1]` by at most `tol`.
    pub fn clamped(y: Vec<f64>, tol: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(y.len());
        for v in y {
            if !v.is_finite() || v < -tol || v > 1.0 + tol {
                return Err(Error::InvalidPoint(format!("coordinate {v} outside [0, 1]")));
            }
            out.push(v.clamp(0.0, 1.0));
        }
        Ok(FractionalPoint(out))
    }

    pub fn zeros(n: usize) -> Self {
        FractionalPoint(vec![0.0; n])
    }

    pub fn indicator(n: usize, set: &[usize]) -> Self {
        let mut y = vec![0.0; n];
        for &i in set {
            y[i] = 1.0;
        }
        FractionalPoint(y)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Ids with `y_i > 0`.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }
}
