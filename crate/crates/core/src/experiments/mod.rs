//! Generators, the tight example, replicated experiments, and the
//! verification suite.
//!
//! Replicate `r` of an experiment with seed `s` draws from the ChaCha8
//! stream `(s, r)`: `seed_from_u64(s)` followed by `set_stream(r)`. Results
//! are gathered by replicate index, so they do not depend on thread count.

mod generate;
mod report;
mod tight;
mod verify;

pub use generate::{gen_random_instance, tabulate, GenSpec, MatroidKind, ObjectiveKind};
pub use report::{format_float, ExperimentReport, ReportRow, CSV_HEADER};
pub use tight::TightExample;
pub use verify::{small_suite, verify_suite, CheckSummary, SuiteInstance, VerificationReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::model::eval::{McEstimate, RunningStats};
use crate::model::Instance;
use crate::policies::{
    continuous_greedy, evaluate_adaptive_exact, greedy_nonadaptive, optimal_adaptive_exact,
    optimal_nonadaptive_exact, pipage_round, run_adaptive, AdaptiveRule, ExpectationMode, Myopic,
    OptimalAdaptive, OutcomeSource,
};

pub const MIN_REPLICATES: usize = 30;

/// Stream reserved for randomness that is not tied to one replicate.
const SHARED_STREAM: u64 = u64::MAX;

pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_REPLICATES} replicates are required, got {replicates}"
        )));
    }
    Ok(())
}

fn summarize(values: &[f64]) -> McEstimate {
    let mut stats = RunningStats::default();
    for &v in values {
        stats.push(v);
    }
    stats.estimate()
}

/// Mean covered count of the scanning policy on the tight example.
pub fn run_tight_adaptive(n: usize, replicates: usize, seed: u64) -> Result<McEstimate> {
    check_replicates(replicates)?;
    let tight = TightExample::new(n)?;
    let values: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| tight.simulate_scanning(&mut replicate_rng(seed, r)) as f64)
        .collect();
    Ok(summarize(&values))
}

/// One row per `n`: scanning-policy mean against the analytic non-adaptive
/// optimum, `ratio = mean / analytic`.
pub fn gap_experiment(ns: &[usize], replicates: usize, seed: u64) -> Result<ExperimentReport> {
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let tight = TightExample::new(n)?;
        let est = run_tight_adaptive(n, replicates, seed)?;
        let analytic = tight.nonadaptive_value();
        rows.push(ReportRow {
            config_id: format!("tight-n{n}"),
            n,
            policy: "scanning".into(),
            analytic_value: Some(analytic),
            mc_mean: est.estimate,
            mc_ci95: est.ci_halfwidth_95,
            replicates,
            seed,
            ratio: Some(est.estimate / analytic),
        });
    }
    Ok(ExperimentReport::new(rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Myopic,
    Greedy,
    ContinuousGreedy,
    OptimalAdaptive,
    OptimalNonadaptive,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Myopic,
        PolicyKind::Greedy,
        PolicyKind::ContinuousGreedy,
        PolicyKind::OptimalAdaptive,
        PolicyKind::OptimalNonadaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Myopic => "myopic",
            PolicyKind::Greedy => "greedy",
            PolicyKind::ContinuousGreedy => "continuous_greedy",
            PolicyKind::OptimalAdaptive => "optimal_adaptive",
            PolicyKind::OptimalNonadaptive => "optimal_nonadaptive",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = PolicyKind::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidArgument(format!("unknown policy {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompareOptions {
    /// How greedy evaluates `F` and pipage compares endpoints.
    pub mode: ExpectationMode,
    /// Continuous greedy rounds.
    pub steps: u32,
    /// Continuous greedy draws per round.
    pub samples: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            mode: ExpectationMode::Exact,
            steps: 100,
            samples: 200,
        }
    }
}

enum Prepared<'a> {
    Adaptive(Box<dyn AdaptiveRule + Sync + 'a>),
    Fixed(Vec<usize>),
}

/// Runs each policy on the same realization per replicate. The analytic
/// column holds the policy's exact expected value when it is within caps.
pub fn compare_policies(
    config_id: &str,
    instance: &Instance,
    matroid: &Matroid,
    policies: &[PolicyKind],
    replicates: usize,
    seed: u64,
    options: CompareOptions,
) -> Result<ExperimentReport> {
    check_replicates(replicates)?;
    if instance.n() != matroid.n() {
        return Err(Error::InvalidArgument("instance and matroid ground sets differ".into()));
    }
    let mut policies = policies.to_vec();
    policies.sort();
    policies.dedup();
    let needs_tree = policies.contains(&PolicyKind::OptimalAdaptive);
    let tree = if needs_tree {
        Some(optimal_adaptive_exact(instance, matroid)?)
    } else {
        None
    };
    let mut prepared = Vec::with_capacity(policies.len());
    let mut analytic = Vec::with_capacity(policies.len());
    for &policy in &policies {
        match policy {
            PolicyKind::Myopic => {
                prepared.push(Prepared::Adaptive(Box::new(Myopic)));
                analytic.push(exact_or_none(evaluate_adaptive_exact(&Myopic, instance, matroid).map(|e| e.value))?);
            }
            PolicyKind::OptimalAdaptive => {
                let (value, tree) = tree.as_ref().expect("solved above");
                prepared.push(Prepared::Adaptive(Box::new(OptimalAdaptive::new(tree))));
                analytic.push(Some(*value));
            }
            PolicyKind::Greedy => {
                let set = greedy_nonadaptive(instance, matroid, options.mode)?;
                analytic.push(exact_or_none(instance.expected_value(&set))?);
                prepared.push(Prepared::Fixed(set));
            }
            PolicyKind::ContinuousGreedy => {
                let mut rng = replicate_rng(seed, SHARED_STREAM);
                let cg = continuous_greedy(instance, matroid, options.steps, options.samples, &mut rng)?;
                let set = pipage_round(instance, matroid, &cg.point, options.mode)?;
                analytic.push(exact_or_none(instance.expected_value(&set))?);
                prepared.push(Prepared::Fixed(set));
            }
            PolicyKind::OptimalNonadaptive => {
                let opt = optimal_nonadaptive_exact(instance, matroid)?;
                analytic.push(Some(opt.value));
                prepared.push(Prepared::Fixed(opt.set));
            }
        }
    }
    let per_replicate: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let scenario = instance.sample_scenario(&mut replicate_rng(seed, r));
            prepared
                .iter()
                .map(|p| match p {
                    Prepared::Adaptive(rule) => {
                        run_adaptive(rule.as_ref(), instance, matroid, OutcomeSource::Fixed(&scenario))
                            .map(|t| t.value)
                    }
                    Prepared::Fixed(set) => instance.eval_f(&scenario.restrict(set)),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = policies
        .iter()
        .enumerate()
        .map(|(k, policy)| {
            let values: Vec<f64> = per_replicate.iter().map(|v| v[k]).collect();
            let est = summarize(&values);
            let exact = analytic[k];
            ReportRow {
                config_id: config_id.to_string(),
                n: instance.n(),
                policy: policy.name().to_string(),
                analytic_value: exact,
                mc_mean: est.estimate,
                mc_ci95: est.ci_halfwidth_95,
                replicates,
                seed,
                ratio: exact.filter(|&a| a > 0.0).map(|a| est.estimate / a),
            }
        })
        .collect();
    Ok(ExperimentReport::new(rows))
}

fn exact_or_none(value: Result<f64>) -> Result<Option<f64>> {
    match value {
        Ok(v) => Ok(Some(v)),
        Err(Error::EnumerationTooLarge { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiscreteDistribution, ObjectiveSpec, OutcomePayload, StochasticElement};

    #[test]
    fn tight_run_needs_thirty_replicates() {
        assert!(run_tight_adaptive(5, 29, 0).is_err());
        let est = run_tight_adaptive(5, 30, 0).unwrap();
        assert!(est.estimate > 0.0);
    }

    #[test]
    fn gap_rows_are_reproducible() {
        let a = gap_experiment(&[10, 3], 40, 9).unwrap();
        let b = gap_experiment(&[3, 10], 40, 9).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows[0].n, 3);
        let row = a.row("tight-n10", "scanning").unwrap();
        assert!((row.analytic_value.unwrap() - 6.51322).abs() < 1e-5);
    }

    #[test]
    fn deterministic_instance_has_zero_spread() {
        let elements = (0..4)
            .map(|id| StochasticElement {
                id,
                dist: DiscreteDistribution::certain(OutcomePayload::Subset(if id == 3 {
                    vec![0, 3]
                } else {
                    vec![id, id + 1]
                }))
                .unwrap(),
            })
            .collect();
        let inst = Instance::new(4, ObjectiveSpec::Coverage { weights: None }, elements).unwrap();
        let m = Matroid::uniform(4, 2).unwrap();
        let report = compare_policies("det", &inst, &m, &PolicyKind::ALL, 30, 1, CompareOptions::default()).unwrap();
        assert_eq!(report.rows.len(), 5);
        for row in &report.rows {
            assert_eq!(row.mc_ci95, 0.0, "{row:?}");
            assert_eq!(row.analytic_value, Some(row.mc_mean));
            if row.policy != "continuous_greedy" {
                assert_eq!(row.mc_mean, 4.0, "{row:?}");
            }
        }
    }

    #[test]
    fn unknown_policy_name() {
        assert!(PolicyKind::parse("random").is_err());
        assert_eq!(PolicyKind::parse("myopic").unwrap(), PolicyKind::Myopic);
    }
}
