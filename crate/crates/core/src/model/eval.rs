//! Exact and sampled evaluation of `f`, `F(S)`, `F(S, t)`, and `F(y)`.

use rand::Rng;
use serde::Serialize;

use super::{FractionalPoint, Instance, ObjectiveSpec, PartialRealization};
use crate::error::{check_cap, saturating_product, Error, Result};

/// Two-sided normal quantile for 95% confidence.
pub const Z95: f64 = 1.959_963_984_540_054;

const MC_HINT: &str = "use the Monte Carlo evaluator instead";

/// A sample mean with its 95% normal-approximation half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub ci_halfwidth_95: f64,
}

/// Welford accumulator; a constant stream keeps its mean exact.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation (n - 1 denominator).
    pub fn std_dev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> McEstimate {
        let half = if self.count < 2 {
            0.0
        } else {
            Z95 * self.std_dev() / (self.count as f64).sqrt()
        };
        McEstimate {
            estimate: self.mean,
            ci_halfwidth_95: half,
        }
    }
}

impl Instance {
    /// `f(r)`.
    pub fn eval_f(&self, r: &PartialRealization) -> Result<f64> {
        self.check_realization(r)?;
        Ok(self.value_of(r.slots()))
    }

    /// Visits every joint outcome of `free` (other slots untouched) with its probability.
    pub(crate) fn for_each_outcome(
        &self,
        free: &[usize],
        slots: &mut [Option<usize>],
        prob: f64,
        visit: &mut impl FnMut(&[Option<usize>], f64),
    ) {
        match free.split_first() {
            None => visit(slots, prob),
            Some((&i, rest)) => {
                let saved = slots[i];
                for (idx, (_, p)) in self.dist(i).iter().enumerate() {
                    if p > 0.0 {
                        slots[i] = Some(idx);
                        self.for_each_outcome(rest, slots, prob * p, visit);
                    }
                }
                slots[i] = saved;
            }
        }
    }

    fn outcome_count(&self, free: &[usize]) -> u64 {
        saturating_product(free.iter().map(|&i| self.dist(i).len() as u64))
    }

    /// `F(S)` by full enumeration of the product distribution over `S`.
    pub fn expected_value_exact(&self, set: &[usize]) -> Result<f64> {
        let set = self.check_set(set)?;
        check_cap(self.outcome_count(&set), self.cap(), MC_HINT)?;
        let mut slots = vec![None; self.n()];
        let mut total = 0.0;
        self.for_each_outcome(&set, &mut slots, 1.0, &mut |s, p| {
            total += p * self.value_of(s)
        });
        Ok(total)
    }

    /// `F(S)` through the cheapest exact route: the closed form for
    /// coverage, enumeration otherwise.
    pub fn expected_value(&self, set: &[usize]) -> Result<f64> {
        if self.is_coverage() {
            self.coverage_closed_form(set)
        } else {
            self.expected_value_exact(set)
        }
    }

    /// Sample mean of `f` over `samples` independent realizations of `S`.
    pub fn expected_value_mc<R: Rng + ?Sized>(
        &self,
        set: &[usize],
        samples: usize,
        rng: &mut R,
    ) -> Result<McEstimate> {
        let set = self.check_set(set)?;
        if samples < 2 {
            return Err(Error::InvalidArgument("need at least 2 samples".into()));
        }
        let mut slots = vec![None; self.n()];
        let mut stats = RunningStats::default();
        for _ in 0..samples {
            for &i in &set {
                slots[i] = Some(self.dist(i).sample_index(rng));
            }
            stats.push(self.value_of(&slots));
        }
        Ok(stats.estimate())
    }

    /// `F(S, t)`: members of `S` realized in `t` are fixed, the remaining
    /// members of `S` are integrated out, everything else is absent.
    pub fn conditional_expected_value(&self, set: &[usize], t: &PartialRealization) -> Result<f64> {
        self.check_realization(t)?;
        let set = self.check_set(set)?;
        let mut slots = vec![None; self.n()];
        let mut free = Vec::new();
        for &i in &set {
            match t.get(i) {
                Some(x) => slots[i] = Some(x),
                None => free.push(i),
            }
        }
        check_cap(self.outcome_count(&free), self.cap(), MC_HINT)?;
        let mut total = 0.0;
        self.for_each_outcome(&free, &mut slots, 1.0, &mut |s, p| {
            total += p * self.value_of(s)
        });
        Ok(total)
    }

    /// `E[f(s + X_i)] - f(s)` given the observed `s`; one pass over `i`'s support.
    pub fn marginal_conditional(&self, s: &PartialRealization, i: usize) -> Result<f64> {
        self.check_realization(s)?;
        if i >= self.n() {
            return Err(Error::InvalidArgument(format!("unknown element id {i}")));
        }
        if s.get(i).is_some() {
            return Err(Error::InvalidArgument(format!("element {i} is already chosen")));
        }
        let mut slots = s.slots().to_vec();
        Ok(self.marginal_in_place(&mut slots, i))
    }

    pub(crate) fn marginal_in_place(&self, slots: &mut [Option<usize>], i: usize) -> f64 {
        let base = self.value_of(slots);
        let mut gain = 0.0;
        for (idx, (_, p)) in self.dist(i).iter().enumerate() {
            if p > 0.0 {
                slots[i] = Some(idx);
                gain += p * (self.value_of(slots) - base);
            }
        }
        slots[i] = None;
        gain
    }

    fn check_point(&self, y: &FractionalPoint) -> Result<()> {
        if y.len() != self.n() {
            return Err(Error::InvalidPoint(format!(
                "point has {} coordinates, instance has {} elements",
                y.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Exact `F(y)`: every element is absent with weight `1 - y_i` or shows
    /// outcome `x` with weight `y_i g_i(x)`. Summing by subset first gives the
    /// textbook `sum_Y prod y prod (1 - y) F(Y)`.
    pub fn multilinear_exact(&self, y: &FractionalPoint) -> Result<f64> {
        self.check_point(y)?;
        let y = y.as_slice();
        let required = saturating_product((0..self.n()).map(|i| {
            let k = self.dist(i).len() as u64;
            match y[i] {
                0.0 => 1,
                1.0 => k,
                _ => k + 1,
            }
        }));
        check_cap(required, self.cap(), MC_HINT)?;
        let mut slots = vec![None; self.n()];
        let mut total = 0.0;
        self.multilinear_rec(y, 0, &mut slots, 1.0, &mut total);
        Ok(total)
    }

    fn multilinear_rec(
        &self,
        y: &[f64],
        i: usize,
        slots: &mut [Option<usize>],
        prob: f64,
        total: &mut f64,
    ) {
        if i == y.len() {
            *total += prob * self.value_of(slots);
            return;
        }
        if y[i] < 1.0 {
            slots[i] = None;
            self.multilinear_rec(y, i + 1, slots, prob * (1.0 - y[i]), total);
        }
        if y[i] > 0.0 {
            for (idx, (_, p)) in self.dist(i).iter().enumerate() {
                if p > 0.0 {
                    slots[i] = Some(idx);
                    self.multilinear_rec(y, i + 1, slots, prob * (y[i] * p), total);
                }
            }
            slots[i] = None;
        }
    }

    /// Sampled `F(y)`: draw the random set `Y`, then its realization.
    pub fn multilinear_mc<R: Rng + ?Sized>(
        &self,
        y: &FractionalPoint,
        samples: usize,
        rng: &mut R,
    ) -> Result<McEstimate> {
        if samples < 2 {
            return Err(Error::InvalidArgument("need at least 2 samples".into()));
        }
        let stats = self.paired_multilinear_mc(&[y], samples, rng)?;
        Ok(stats[0].estimate())
    }

    /// Estimates `F` at several points from one shared stream of draws, so
    /// differences between the points have low variance.
    pub(crate) fn paired_multilinear_mc<R: Rng + ?Sized>(
        &self,
        points: &[&FractionalPoint],
        samples: usize,
        rng: &mut R,
    ) -> Result<Vec<RunningStats>> {
        for y in points {
            self.check_point(y)?;
        }
        let n = self.n();
        let mut stats = vec![RunningStats::default(); points.len()];
        let mut inclusion = vec![0.0; n];
        let mut outcome = vec![0usize; n];
        let mut slots = vec![None; n];
        for _ in 0..samples {
            for i in 0..n {
                inclusion[i] = rng.gen::<f64>();
                outcome[i] = self.dist(i).sample_index(rng);
            }
            for (y, acc) in points.iter().zip(stats.iter_mut()) {
                for i in 0..n {
                    slots[i] = (inclusion[i] < y.as_slice()[i]).then_some(outcome[i]);
                }
                acc.push(self.value_of(&slots));
            }
        }
        Ok(stats)
    }

    fn coverage_item_probs(&self, i: usize) -> Vec<f64> {
        let mut probs = vec![0.0; self.universe_size()];
        for (payload, p) in self.dist(i).iter() {
            if let super::OutcomePayload::Subset(items) = payload {
                for &u in items {
                    probs[u] += p;
                }
            }
        }
        probs
    }

    fn coverage_weights(&self) -> Result<Option<&[f64]>> {
        match self.objective() {
            ObjectiveSpec::Coverage { weights } => Ok(weights.as_deref()),
            _ => Err(Error::WrongObjective {
                expected: "coverage",
            }),
        }
    }

    /// `sum_u w_u (1 - prod_{i in S} Pr[u not in X_i])`.
    pub fn coverage_closed_form(&self, set: &[usize]) -> Result<f64> {
        let set = self.check_set(set)?;
        let mut y = vec![0.0; self.n()];
        for i in set {
            y[i] = 1.0;
        }
        self.coverage_fractional(&y)
    }

    /// Coverage multilinear extension:
    /// `sum_u w_u (1 - prod_i (1 - y_i Pr[u in X_i]))`.
    pub fn coverage_closed_form_at(&self, y: &FractionalPoint) -> Result<f64> {
        self.check_point(y)?;
        self.coverage_fractional(y.as_slice())
    }

    fn coverage_fractional(&self, y: &[f64]) -> Result<f64> {
        let weights = self.coverage_weights()?;
        let mut miss = vec![1.0; self.universe_size()];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (u, p) in self.coverage_item_probs(i).into_iter().enumerate() {
                miss[u] *= 1.0 - yi * p;
            }
        }
        Ok(miss
            .iter()
            .enumerate()
            .map(|(u, m)| weights.map_or(1.0, |w| w[u]) * (1.0 - m))
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiscreteDistribution, OutcomePayload, PiecewiseConcave, StochasticElement};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn subset(items: &[usize]) -> OutcomePayload {
        OutcomePayload::Subset(items.to_vec())
    }

    fn coverage(universe: usize, supports: Vec<Vec<(Vec<usize>, f64)>>) -> Instance {
        let elements = supports
            .into_iter()
            .enumerate()
            .map(|(id, s)| StochasticElement {
                id,
                dist: DiscreteDistribution::new(s.into_iter().map(|(p, q)| (subset(&p), q)).collect())
                    .unwrap(),
            })
            .collect();
        Instance::new(universe, ObjectiveSpec::Coverage { weights: None }, elements).unwrap()
    }

    fn bernoulli(universe: usize, items: &[usize], p: f64) -> Vec<(Vec<usize>, f64)> {
        let _ = universe;
        vec![(vec![], 1.0 - p), (items.to_vec(), p)]
    }

    #[test]
    fn eval_f_coverage_examples() {
        let inst = coverage(2, vec![vec![(vec![0], 1.0)], vec![(vec![0, 1], 1.0)]]);
        assert_eq!(inst.eval_f(&PartialRealization::empty(2)).unwrap(), 0.0);
        let r = PartialRealization::from_pairs(2, &[(0, 0), (1, 0)]).unwrap();
        assert_eq!(inst.eval_f(&r).unwrap(), 2.0);
        let bad = PartialRealization::from_pairs(2, &[(0, 3)]).unwrap();
        assert!(matches!(inst.eval_f(&bad), Err(Error::InvalidRealization(_))));
        assert!(inst.eval_f(&PartialRealization::empty(3)).is_err());
    }

    #[test]
    fn eval_f_concave_cap_reached() {
        let el = |id, v| StochasticElement {
            id,
            dist: DiscreteDistribution::certain(OutcomePayload::Scalar(v)).unwrap(),
        };
        let inst = Instance::new(
            0,
            ObjectiveSpec::ConcaveOfSum(PiecewiseConcave::capped_linear(1.0).unwrap()),
            vec![el(0, 0.6), el(1, 0.7)],
        )
        .unwrap();
        let r = PartialRealization::from_pairs(2, &[(0, 0), (1, 0)]).unwrap();
        assert_eq!(inst.eval_f(&r).unwrap(), 1.0);
    }

    #[test]
    fn weighted_coverage_crosses_word_boundary() {
        let mut w = vec![0.0; 70];
        w[3] = 2.0;
        w[66] = 0.5;
        let el = StochasticElement {
            id: 0,
            dist: DiscreteDistribution::certain(subset(&[3, 66, 69])).unwrap(),
        };
        let inst = Instance::new(70, ObjectiveSpec::Coverage { weights: Some(w) }, vec![el]).unwrap();
        assert_eq!(inst.expected_value_exact(&[0]).unwrap(), 2.5);
        assert_eq!(inst.coverage_closed_form(&[0]).unwrap(), 2.5);
    }

    #[test]
    fn expected_value_small_examples() {
        let inst = coverage(1, vec![bernoulli(1, &[0], 0.5)]);
        assert_eq!(inst.expected_value_exact(&[]).unwrap(), 0.0);
        assert_eq!(inst.expected_value_exact(&[0]).unwrap(), 0.5);
        assert!(inst.expected_value_exact(&[1]).is_err());
    }

    #[test]
    fn enumeration_cap_is_an_error() {
        let inst = coverage(1, vec![bernoulli(1, &[0], 0.5); 4]).with_cap(8);
        let err = inst.expected_value_exact(&[0, 1, 2, 3]).unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { required: 16, cap: 8, .. }));
        assert!(err.to_string().contains("Monte Carlo"));
        assert!(inst.expected_value_exact(&[0, 1, 2]).is_ok());
    }

    #[test]
    fn mc_on_deterministic_instance_is_exact() {
        let inst = coverage(3, vec![vec![(vec![0, 1], 1.0)], vec![(vec![2], 1.0)]]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = inst.expected_value_mc(&[0, 1], 50, &mut rng).unwrap();
        assert_eq!(est.estimate, inst.expected_value_exact(&[0, 1]).unwrap());
        assert_eq!(est.ci_halfwidth_95, 0.0);
        assert!(inst.expected_value_mc(&[0], 1, &mut rng).is_err());
    }

    #[test]
    fn mc_bernoulli_law_of_large_numbers_and_determinism() {
        let inst = coverage(1, vec![bernoulli(1, &[0], 0.5)]);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            inst.expected_value_mc(&[0], 100_000, &mut rng).unwrap()
        };
        let a = run(11);
        assert!((a.estimate - 0.5).abs() < 0.01);
        let b = run(11);
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.ci_halfwidth_95.to_bits(), b.ci_halfwidth_95.to_bits());
    }

    #[test]
    fn conditional_reduces_to_f_and_to_unconditioned() {
        let inst = coverage(
            3,
            vec![
                vec![(vec![0], 0.3), (vec![1, 2], 0.7)],
                vec![(vec![], 0.5), (vec![2], 0.5)],
                vec![(vec![0, 1], 0.9), (vec![2], 0.1)],
            ],
        );
        let t = PartialRealization::from_pairs(3, &[(0, 1), (1, 0), (2, 0)]).unwrap();
        assert_eq!(
            inst.conditional_expected_value(&[0, 2], &t).unwrap(),
            inst.eval_f(&t.restrict(&[0, 2])).unwrap()
        );
        let empty = PartialRealization::empty(3);
        for set in [vec![], vec![0], vec![0, 1], vec![0, 1, 2]] {
            assert_eq!(
                inst.conditional_expected_value(&set, &empty).unwrap(),
                inst.expected_value_exact(&set).unwrap()
            );
        }
    }

    #[test]
    fn conditional_mixed_case_matches_independent_enumeration() {
        let inst = coverage(
            3,
            vec![
                vec![(vec![0], 0.3), (vec![1, 2], 0.7)],
                vec![(vec![], 0.5), (vec![2], 0.5)],
                vec![(vec![0, 1], 0.9), (vec![2], 0.1)],
            ],
        );
        // element 0 fixed to {1,2}; 1 and 2 free; hand enumeration of 4 joint outcomes
        let t = PartialRealization::from_pairs(3, &[(0, 1)]).unwrap();
        let mut oracle = 0.0;
        for (a, pa) in [(&[][..], 0.5), (&[2][..], 0.5)] {
            for (b, pb) in [(&[0, 1][..], 0.9), (&[2][..], 0.1)] {
                let mut covered = vec![1, 2];
                covered.extend_from_slice(a);
                covered.extend_from_slice(b);
                covered.sort();
                covered.dedup();
                oracle += pa * pb * covered.len() as f64;
            }
        }
        let got = inst.conditional_expected_value(&[0, 1, 2], &t).unwrap();
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn marginal_examples() {
        let mut w = vec![1.0; 3];
        w[2] = 4.0;
        let el = |id, items: &[usize]| StochasticElement {
            id,
            dist: DiscreteDistribution::certain(subset(items)).unwrap(),
        };
        let inst = Instance::new(3, ObjectiveSpec::Coverage { weights: Some(w) }, vec![el(0, &[0]), el(1, &[2])]).unwrap();
        let s = PartialRealization::from_pairs(2, &[(0, 0)]).unwrap();
        assert_eq!(inst.marginal_conditional(&s, 1).unwrap(), 4.0);
        assert!(inst.marginal_conditional(&s, 0).is_err());

        // identical element whose outcomes are already covered
        let inst = coverage(2, vec![vec![(vec![0, 1], 0.5), (vec![0], 0.5)]; 2]);
        let s = PartialRealization::from_pairs(2, &[(0, 0)]).unwrap();
        assert_eq!(inst.marginal_conditional(&s, 1).unwrap(), 0.0);
    }

    #[test]
    fn marginal_matches_finite_difference_of_conditional() {
        let inst = coverage(
            2,
            vec![
                vec![(vec![0], 0.4), (vec![1], 0.6)],
                vec![(vec![], 0.2), (vec![0, 1], 0.3), (vec![1], 0.5)],
            ],
        );
        for x in 0..2 {
            let s = PartialRealization::from_pairs(2, &[(0, x)]).unwrap();
            let diff = inst.conditional_expected_value(&[0, 1], &s).unwrap()
                - inst.conditional_expected_value(&[0], &s).unwrap();
            assert!((inst.marginal_conditional(&s, 1).unwrap() - diff).abs() < 1e-12);
        }
    }

    #[test]
    fn multilinear_examples() {
        let inst = coverage(1, vec![bernoulli(1, &[0], 0.5), bernoulli(1, &[0], 0.5)]);
        assert_eq!(inst.multilinear_exact(&FractionalPoint::zeros(2)).unwrap(), 0.0);
        for set in [vec![], vec![0], vec![1], vec![0, 1]] {
            let y = FractionalPoint::indicator(2, &set);
            assert_eq!(
                inst.multilinear_exact(&y).unwrap(),
                inst.expected_value_exact(&set).unwrap()
            );
        }
        // Hand enumeration: Y in {}, {0}, {1}, {0,1} each w.p. 1/4; F = 0, .5, .5, .75
        let y = FractionalPoint::new(vec![0.5, 0.5]).unwrap();
        let oracle = 0.25 * (0.0 + 0.5 + 0.5 + 0.75);
        assert!((inst.multilinear_exact(&y).unwrap() - oracle).abs() < 1e-15);
        assert!((inst.coverage_closed_form_at(&y).unwrap() - oracle).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let est = inst.multilinear_mc(&y, 50_000, &mut rng).unwrap();
        assert!((est.estimate - oracle).abs() <= est.ci_halfwidth_95 * 1.5);
        assert!(inst.multilinear_exact(&FractionalPoint::zeros(3)).is_err());
    }

    #[test]
    fn closed_form_independence_algebra() {
        let inst = coverage(1, vec![bernoulli(1, &[0], 0.5), bernoulli(1, &[0], 0.5)]);
        assert!((inst.coverage_closed_form(&[0, 1]).unwrap() - 0.75).abs() < 1e-15);
        let concave = Instance::new(
            0,
            ObjectiveSpec::ConcaveOfSum(PiecewiseConcave::capped_linear(1.0).unwrap()),
            vec![StochasticElement {
                id: 0,
                dist: DiscreteDistribution::certain(OutcomePayload::Scalar(1.0)).unwrap(),
            }],
        )
        .unwrap();
        assert!(matches!(
            concave.coverage_closed_form(&[0]),
            Err(Error::WrongObjective { .. })
        ));
    }
}
