//! Exhaustive checks of the guarantees on a seeded suite of small instances.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::generate::{gen_random_instance, GenSpec, MatroidKind, ObjectiveKind};
use super::replicate_rng;
use crate::bounds::{f_plus, gap_constant, verify_gap_chain, DEFAULT_SCENARIO_CAP};
use crate::error::Result;
use crate::matroid::Matroid;
use crate::model::{FractionalPoint, Instance};
use crate::policies::{
    evaluate_adaptive_exact, greedy_nonadaptive, optimal_adaptive_exact, optimal_nonadaptive_exact,
    ExpectationMode, Myopic,
};

const TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SuiteInstance {
    pub label: String,
    pub spec: GenSpec,
    pub seed: u64,
    pub instance: Instance,
    pub matroid: Matroid,
}

/// `count` instances cycling through every objective and matroid kind with
/// `n` in 2..=6, support in 1..=3 and rank at most 3.
pub fn small_suite(seed: u64, count: usize) -> Result<Vec<SuiteInstance>> {
    (0..count)
        .map(|idx| {
            let spec = GenSpec {
                n: 2 + (idx / 9) % 5,
                support: 1 + (idx / 45) % 3,
                objective: ObjectiveKind::ALL[idx % 3],
                matroid: MatroidKind::ALL[(idx / 3) % 3],
                max_rank: 3,
            };
            let instance_seed = replicate_rng(seed, idx as u64).gen::<u64>();
            let (instance, matroid) = gen_random_instance(&spec, instance_seed)?;
            Ok(SuiteInstance {
                label: format!(
                    "#{idx} {}/{} n={} support={} rank={}",
                    spec.objective.name(),
                    spec.matroid.name(),
                    spec.n,
                    spec.support,
                    matroid.rank()
                ),
                spec,
                seed: instance_seed,
                instance,
                matroid,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckSummary {
    pub evaluated: u64,
    pub violations: u64,
    /// Largest amount by which an inequality failed.
    pub worst: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub instances: usize,
    pub checks: BTreeMap<String, CheckSummary>,
    /// One line per violation, capped at 50.
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.values().all(|c| c.violations == 0)
    }
}

struct Outcome {
    check: &'static str,
    /// Positive when the inequality fails.
    excess: f64,
}

/// Runs every check on every instance; `seed` drives the random points used
/// for the `f⁺` checks.
pub fn verify_suite(suite: &[SuiteInstance], seed: u64) -> Result<VerificationReport> {
    let results: Vec<Vec<Outcome>> = suite
        .par_iter()
        .enumerate()
        .map(|(idx, item)| check_instance(item, seed, idx as u64))
        .collect::<Result<Vec<_>>>()?;
    let mut report = VerificationReport {
        instances: suite.len(),
        ..Default::default()
    };
    for (item, outcomes) in suite.iter().zip(results) {
        for o in outcomes {
            let entry = report.checks.entry(o.check.to_string()).or_default();
            entry.evaluated += 1;
            if o.excess > TOL {
                entry.violations += 1;
                entry.worst = entry.worst.max(o.excess);
                if report.failures.len() < 50 {
                    report.failures.push(format!("{}: {} off by {:e}", item.label, o.check, o.excess));
                }
            }
        }
    }
    Ok(report)
}

fn check_instance(item: &SuiteInstance, seed: u64, idx: u64) -> Result<Vec<Outcome>> {
    let (inst, m) = (&item.instance, &item.matroid);
    let mut out = Vec::new();
    let mut push = |check, excess: f64| out.push(Outcome { check, excess });
    let c = gap_constant();

    push("objective_valid", if inst.validate_objective().valid { 0.0 } else { f64::INFINITY });

    let (a, tree) = optimal_adaptive_exact(inst, m)?;
    let myopic = evaluate_adaptive_exact(&Myopic, inst, m)?;
    let opt = optimal_nonadaptive_exact(inst, m)?;
    push("myopic_half_of_adaptive", 0.5 * a - myopic.value);
    if m.is_uniform() && m.rank() > 0 {
        let k = m.rank() as f64;
        push("myopic_uniform_bound", (1.0 - (1.0 - 1.0 / k).powf(k)) * a - myopic.value);
    }
    push("adaptivity_gap", a - c * opt.value);
    push("nonadaptive_below_adaptive", opt.value - a);
    push("bases_suffice", (opt.value - opt.best_basis_value).abs());
    push("no_early_stop_gain", tree.early_stop_gains as f64);
    push("marginals_nonincreasing", -myopic.min_marginal_drop);

    let greedy = greedy_nonadaptive(inst, m, ExpectationMode::Exact)?;
    push("greedy_half_of_nonadaptive", 0.5 * opt.value - inst.expected_value(&greedy)?);

    if !m.is_explicit() {
        let cert = verify_gap_chain(inst, m, DEFAULT_SCENARIO_CAP)?;
        for link in &cert.links {
            push(chain_check(&link.name), link.lhs - link.rhs);
        }
    }

    let mut rng = replicate_rng(seed, idx);
    let y = FractionalPoint::new((0..inst.n()).map(|_| rng.gen::<f64>()).collect())?;
    let fy = ExpectationMode::Exact.point_values(inst, &[&y])?[0];
    let fp = f_plus(inst, &y, DEFAULT_SCENARIO_CAP)?;
    push("f_plus_above_multilinear", fy - fp);
    push("f_plus_within_gap", fp - c * fy);

    if inst.is_coverage() {
        let full: Vec<usize> = (0..inst.n()).collect();
        for set in [&greedy, &opt.set, &full] {
            let exact = inst.expected_value_exact(set)?;
            let closed = inst.coverage_closed_form(set)?;
            let at_indicator = inst.multilinear_exact(&FractionalPoint::indicator(inst.n(), set))?;
            push("evaluators_agree", (exact - closed).abs().max((exact - at_indicator).abs()));
        }
    }
    Ok(out)
}

fn chain_check(name: &str) -> &'static str {
    match name {
        "A <= U" => "chain_adaptive_below_bound",
        "U <= e/(e-1) M" => "chain_bound_within_gap",
        "M <= F(rounded)" => "chain_rounding_no_loss",
        "F(rounded) <= N" => "chain_rounded_below_optimum",
        _ => "chain_overall_gap",
    }
}
