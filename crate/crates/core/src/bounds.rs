//! The `f⁺` relaxation: the best joint distribution over scenarios whose
//! per-element marginals match `y`, its maximum over the base polytope (an
//! upper bound on every adaptive policy), and the certificate chain tying
//! adaptive and non-adaptive optima together.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{check_cap, saturating_product, Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::matroid::Matroid;
use crate::model::{FractionalPoint, Instance};
use crate::policies::{optimal_adaptive_exact, optimal_nonadaptive_exact, pipage_round, ExpectationMode};

pub const DEFAULT_SCENARIO_CAP: u64 = 100_000;
const CHAIN_TOL: f64 = 1e-9;

/// `e / (e - 1)`.
pub fn gap_constant() -> f64 {
    E / (E - 1.0)
}

/// Scenario columns of the `f⁺` LP. A scenario fixes every element to
/// "absent" or one of its positive-probability outcomes.
#[derive(Clone, Debug)]
pub struct ScenarioLp {
    scenarios: Vec<Vec<Option<usize>>>,
    values: Vec<f64>,
    /// `(element, outcome, probability)` for each marginal row.
    rows: Vec<(usize, usize, f64)>,
}

impl ScenarioLp {
    pub fn new(instance: &Instance, scenario_cap: u64) -> Result<Self> {
        let n = instance.n();
        let choices: Vec<Vec<Option<usize>>> = (0..n)
            .map(|i| {
                std::iter::once(None)
                    .chain(
                        instance
                            .dist(i)
                            .iter()
                            .enumerate()
                            .filter(|(_, (_, p))| *p > 0.0)
                            .map(|(x, _)| Some(x)),
                    )
                    .collect()
            })
            .collect();
        let count = saturating_product(choices.iter().map(|c| c.len() as u64));
        check_cap(count, scenario_cap, "reduce the instance or raise the scenario cap")?;
        let mut scenarios = Vec::with_capacity(count as usize);
        let mut digits = vec![0usize; n];
        loop {
            scenarios.push((0..n).map(|i| choices[i][digits[i]]).collect::<Vec<_>>());
            let mut pos = 0;
            while pos < n {
                digits[pos] += 1;
                if digits[pos] < choices[pos].len() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
        let values = scenarios.iter().map(|s| instance.value_of(s)).collect();
        let rows = (0..n)
            .flat_map(|i| {
                instance
                    .dist(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, p))| *p > 0.0)
                    .map(move |(x, (_, p))| (i, x, p))
            })
            .collect();
        Ok(ScenarioLp {
            scenarios,
            values,
            rows,
        })
    }

    pub fn scenario_count(&self) -> usize {
        self.scenarios.len()
    }

    /// The marginal rows over the scenario columns, padded with `extra`
    /// trailing zero columns.
    fn marginal_rows(&self, extra: usize) -> Vec<(usize, Vec<f64>)> {
        self.rows
            .iter()
            .map(|&(i, x, _)| {
                let mut coeffs = vec![0.0; self.scenarios.len() + extra];
                for (col, s) in self.scenarios.iter().enumerate() {
                    if s[i] == Some(x) {
                        coeffs[col] = 1.0;
                    }
                }
                (i, coeffs)
            })
            .collect()
    }

    /// `f⁺(y)`.
    pub fn solve_at(&self, y: &FractionalPoint) -> Result<f64> {
        let mut lp = LinearProgram::new(self.values.clone());
        lp.add(vec![1.0; self.scenarios.len()], Relation::Eq, 1.0);
        for ((i, coeffs), &(_, _, p)) in self.marginal_rows(0).into_iter().zip(&self.rows) {
            let yi = *y.as_slice().get(i).ok_or_else(|| Error::InvalidPoint("point is too short".into()))?;
            lp.add(coeffs, Relation::Eq, yi * p);
        }
        match lp.solve()? {
            LpOutcome::Optimal(sol) => Ok(sol.objective),
            other => Err(Error::Lp(format!("scenario LP should be feasible and bounded, got {other:?}"))),
        }
    }

    /// `max_{y in B(M)} f⁺(y)` as one LP over `(alpha, y)`.
    pub fn maximize_over(&self, matroid: &Matroid) -> Result<(f64, FractionalPoint)> {
        let n = matroid.n();
        let polytope = matroid.base_polytope()?;
        let cols = self.scenarios.len();
        let mut objective = self.values.clone();
        objective.extend(std::iter::repeat_n(0.0, n));
        let mut lp = LinearProgram::new(objective);
        let mut sum = vec![1.0; cols];
        sum.extend(std::iter::repeat_n(0.0, n));
        lp.add(sum, Relation::Eq, 1.0);
        for ((i, mut coeffs), &(_, _, p)) in self.marginal_rows(n).into_iter().zip(&self.rows) {
            coeffs[cols + i] = -p;
            lp.add(coeffs, Relation::Eq, 0.0);
        }
        for c in &polytope.constraints {
            // y >= 0 is implicit in the LP
            if c.relation == Relation::Ge && c.bound == 0.0 {
                continue;
            }
            let mut coeffs = vec![0.0; cols];
            coeffs.extend_from_slice(&c.coeffs);
            lp.add(coeffs, c.relation, c.bound);
        }
        match lp.solve()? {
            LpOutcome::Optimal(sol) => {
                let y = FractionalPoint::clamped(sol.x[cols..].to_vec(), 1e-7)?;
                Ok((sol.objective, y))
            }
            other => Err(Error::Lp(format!("joint LP should be feasible and bounded, got {other:?}"))),
        }
    }
}

/// `f⁺(y)`: the largest expected `f` over joint scenario distributions whose
/// marginals are `Pr[i shows x] = y_i g_i(x)`.
pub fn f_plus(instance: &Instance, y: &FractionalPoint, scenario_cap: u64) -> Result<f64> {
    if y.len() != instance.n() {
        return Err(Error::InvalidPoint(format!(
            "point has {} coordinates, instance has {} elements",
            y.len(),
            instance.n()
        )));
    }
    ScenarioLp::new(instance, scenario_cap)?.solve_at(y)
}

/// `max_{y in B(M)} f⁺(y)` with a maximizer.
pub fn adaptive_upper_bound(instance: &Instance, matroid: &Matroid, scenario_cap: u64) -> Result<(f64, FractionalPoint)> {
    if instance.n() != matroid.n() {
        return Err(Error::InvalidArgument("instance and matroid ground sets differ".into()));
    }
    matroid.base_polytope()?;
    ScenarioLp::new(instance, scenario_cap)?.maximize_over(matroid)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainLink {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

impl ChainLink {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        ChainLink {
            name: name.to_string(),
            lhs,
            rhs,
            ok: lhs <= rhs + CHAIN_TOL,
        }
    }

    pub fn violation(&self) -> f64 {
        (self.lhs - self.rhs).max(0.0)
    }
}

/// `A <= U <= e/(e-1) M`, `M <= F(rounded) <= N`, hence `A <= e/(e-1) N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapCertificate {
    /// Optimal adaptive value.
    #[serde(rename = "A")]
    pub a: f64,
    /// `max f⁺` over the base polytope.
    #[serde(rename = "U")]
    pub u: f64,
    /// `F(y*)`.
    #[serde(rename = "M")]
    pub m: f64,
    /// Optimal non-adaptive value.
    #[serde(rename = "N")]
    pub n: f64,
    pub y_star: FractionalPoint,
    pub rounded: Vec<usize>,
    pub rounded_value: f64,
    pub links: Vec<ChainLink>,
}

impl GapCertificate {
    pub fn holds(&self) -> bool {
        self.links.iter().all(|l| l.ok)
    }

    pub fn failures(&self) -> Vec<&ChainLink> {
        self.links.iter().filter(|l| !l.ok).collect()
    }
}

pub fn verify_gap_chain(instance: &Instance, matroid: &Matroid, scenario_cap: u64) -> Result<GapCertificate> {
    let (u, y_star) = adaptive_upper_bound(instance, matroid, scenario_cap)?;
    let (a, _) = optimal_adaptive_exact(instance, matroid)?;
    let n = optimal_nonadaptive_exact(instance, matroid)?.value;
    let m = ExpectationMode::Exact.point_values(instance, &[&y_star])?[0];
    let rounded = pipage_round(instance, matroid, &y_star, ExpectationMode::Exact)?;
    let rounded_value = instance.expected_value(&rounded)?;
    let c = gap_constant();
    let links = vec![
        ChainLink::new("A <= U", a, u),
        ChainLink::new("U <= e/(e-1) M", u, c * m),
        ChainLink::new("M <= F(rounded)", m, rounded_value),
        ChainLink::new("F(rounded) <= N", rounded_value, n),
        ChainLink::new("A <= e/(e-1) N", a, c * n),
    ];
    Ok(GapCertificate {
        a,
        u,
        m,
        n,
        y_star,
        rounded,
        rounded_value,
        links,
    })
}
