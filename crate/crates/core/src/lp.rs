//! Dense two-phase simplex for small linear programs.
//!
//! Maximizes `c·x` subject to linear constraints and `x >= 0`. Pricing is
//! Dantzig's rule, switching to Bland's rule after a run of degenerate pivots
//! so the scenario LPs (which are highly degenerate) cannot cycle.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub bound: f64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, bound: f64) -> Self {
        LinearConstraint {
            coeffs,
            relation,
            bound,
        }
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        match self.relation {
            Relation::Le => lhs <= self.bound + tol,
            Relation::Eq => (lhs - self.bound).abs() <= tol,
            Relation::Ge => lhs >= self.bound - tol,
        }
    }
}

/// `max objective·x  s.t.  constraints, x >= 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

const PIVOT_EPS: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-11;
const RESIDUAL_TOL: f64 = 1e-8;
const COST_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 64;
const MAX_PIVOTS: usize = 200_000;

struct Tableau {
    rows: usize,
    width: usize, // columns + rhs
    cells: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize, cost: &mut [f64]) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.cells[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.cells[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.cells[r * w + pc];
            if factor != 0.0 {
                for (v, p) in self.cells[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                self.cells[r * w + pc] = 0.0;
            }
        }
        let factor = cost[pc];
        if factor != 0.0 {
            for (v, p) in cost.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex on `cost` (reduced costs, last entry = -objective value).
    /// Columns with `allowed[c] == false` never enter.
    fn optimize(&mut self, cost: &mut [f64], allowed: &[bool]) -> Result<bool> {
        let ncols = self.width - 1;
        let mut streak = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = streak >= DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = COST_EPS;
            for c in 0..ncols {
                if allowed[c] && cost[c] > best {
                    entering = Some(c);
                    if bland {
                        break;
                    }
                    best = cost[c];
                }
            }
            let Some(pc) = entering else {
                return Ok(true);
            };
            // Harris-style ratio test: find the tolerant minimum ratio, then
            // take the largest pivot among rows within it (lowest basic
            // index under Bland's rule)
            let mut bound = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    bound = bound.min((self.rhs(r).max(0.0) + RATIO_TOL) / a);
                }
            }
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                if ratio > bound {
                    continue;
                }
                let better = match leaving {
                    None => true,
                    Some((lr, _)) if bland => self.basis[r] < self.basis[lr],
                    Some((lr, _)) => a > self.at(lr, pc),
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            let Some((pr, ratio)) = leaving else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                streak += 1;
            } else {
                streak = 0;
            }
            self.pivot(pr, pc, cost);
        }
        Err(Error::Lp(format!("no convergence within {MAX_PIVOTS} pivots")))
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, bound: f64) {
        self.constraints
            .push(LinearConstraint::new(coeffs, relation, bound));
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let nvars = self.objective.len();
        for c in &self.constraints {
            if c.coeffs.len() != nvars {
                return Err(Error::Lp(format!(
                    "constraint has {} coefficients for {nvars} variables",
                    c.coeffs.len()
                )));
            }
            if !c.bound.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Lp("non-finite constraint data".into()));
            }
        }
        // normalize to nonnegative right-hand sides
        let rows: Vec<(Vec<f64>, Relation, f64)> = self
            .constraints
            .iter()
            .map(|c| {
                if c.bound < 0.0 {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), flipped, -c.bound)
                } else {
                    (c.coeffs.clone(), c.relation, c.bound)
                }
            })
            .collect();
        let m = rows.len();
        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let art_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let ncols = nvars + slack_count + art_count;
        let width = ncols + 1;
        let mut t = Tableau {
            rows: m,
            width,
            cells: vec![0.0; m * width],
            basis: vec![0; m],
        };
        let mut is_art = vec![false; ncols];
        let (mut slack, mut art) = (nvars, nvars + slack_count);
        for (r, (coeffs, rel, bound)) in rows.iter().enumerate() {
            t.cells[r * width..r * width + nvars].copy_from_slice(coeffs);
            t.cells[r * width + ncols] = *bound;
            match rel {
                Relation::Le => {
                    t.cells[r * width + slack] = 1.0;
                    t.basis[r] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    t.cells[r * width + slack] = -1.0;
                    slack += 1;
                    t.cells[r * width + art] = 1.0;
                    is_art[art] = true;
                    t.basis[r] = art;
                    art += 1;
                }
                Relation::Eq => {
                    t.cells[r * width + art] = 1.0;
                    is_art[art] = true;
                    t.basis[r] = art;
                    art += 1;
                }
            }
        }

        // phase 1: maximize -sum(artificials)
        if art_count > 0 {
            let mut cost = vec![0.0; width];
            for r in 0..m {
                if is_art[t.basis[r]] {
                    for (c, v) in cost.iter_mut().enumerate() {
                        *v += t.at(r, c);
                    }
                }
            }
            for (c, a) in is_art.iter().enumerate() {
                if *a {
                    cost[c] = 0.0;
                }
            }
            let allowed = vec![true; ncols];
            t.optimize(&mut cost, &allowed)?;
            let infeasibility: f64 = (0..m)
                .filter(|&r| is_art[t.basis[r]])
                .map(|r| t.rhs(r))
                .sum();
            if infeasibility > FEASIBILITY_EPS {
                return Ok(LpOutcome::Infeasible);
            }
            // drive zero-level artificials out of the basis; drop redundant rows
            let mut r = 0;
            while r < t.rows {
                if is_art[t.basis[r]] {
                    let col = (0..ncols)
                        .filter(|&c| !is_art[c])
                        .max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()))
                        .filter(|&c| t.at(r, c).abs() > 1e-7);
                    match col {
                        Some(c) => {
                            let mut scratch = vec![0.0; width];
                            t.pivot(r, c, &mut scratch);
                        }
                        None => {
                            t.cells.drain(r * width..(r + 1) * width);
                            t.basis.remove(r);
                            t.rows -= 1;
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }

        // phase 2
        let mut cost = vec![0.0; width];
        cost[..nvars].copy_from_slice(&self.objective);
        for r in 0..t.rows {
            let cb = if t.basis[r] < nvars {
                self.objective[t.basis[r]]
            } else {
                0.0
            };
            if cb != 0.0 {
                for (c, slot) in cost.iter_mut().enumerate().take(width) {
                    *slot -= cb * t.at(r, c);
                }
            }
        }
        let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
        if !t.optimize(&mut cost, &allowed)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; nvars];
        for r in 0..t.rows {
            if t.basis[r] < nvars {
                x[t.basis[r]] = t.rhs(r).max(0.0);
            }
        }
        if let Some(bad) = self.constraints.iter().position(|c| !c.is_satisfied(&x, RESIDUAL_TOL)) {
            return Err(Error::Lp(format!("solution violates constraint {bad} beyond {RESIDUAL_TOL:e}")));
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal(LpSolution { x, objective }))
    }
}
