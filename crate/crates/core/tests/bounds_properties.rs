mod common;

use common::random_instance;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use stochsub::bounds::{adaptive_upper_bound, f_plus, gap_constant, DEFAULT_SCENARIO_CAP};
use stochsub::experiments::{MatroidKind, ObjectiveKind};
use stochsub::{FractionalPoint, Instance, Matroid, PartialRealization};

fn objective(idx: usize) -> ObjectiveKind {
    ObjectiveKind::ALL[idx % 3]
}

/// Scenarios (each element absent or at a positive-probability outcome) with
/// their `f` values.
fn scenarios(inst: &Instance) -> Vec<(Vec<Option<usize>>, f64)> {
    let mut out: Vec<Vec<Option<usize>>> = vec![vec![]];
    for i in 0..inst.n() {
        let choices: Vec<Option<usize>> = std::iter::once(None)
            .chain(inst.dist(i).iter().enumerate().filter(|(_, (_, p))| *p > 0.0).map(|(x, _)| Some(x)))
            .collect();
        out = out
            .into_iter()
            .flat_map(|s| {
                choices.iter().map(move |&c| {
                    let mut s = s.clone();
                    s.push(c);
                    s
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|s| {
            let pairs: Vec<(usize, usize)> = s.iter().enumerate().filter_map(|(i, c)| c.map(|x| (i, x))).collect();
            let value = inst.eval_f(&PartialRealization::from_pairs(inst.n(), &pairs).unwrap()).unwrap();
            (s, value)
        })
        .collect()
}

/// `f⁺(y)` by enumerating every basic feasible solution of the scenario LP.
fn f_plus_by_vertices(inst: &Instance, y: &[f64]) -> f64 {
    let cols = scenarios(inst);
    let mut rows: Vec<(Vec<f64>, f64)> = vec![(vec![1.0; cols.len()], 1.0)];
    for i in 0..inst.n() {
        for (x, (_, p)) in inst.dist(i).iter().enumerate().filter(|(_, (_, p))| *p > 0.0) {
            let coeffs = cols.iter().map(|(s, _)| if s[i] == Some(x) { 1.0 } else { 0.0 }).collect();
            rows.push((coeffs, y[i] * p));
        }
    }
    let (m, k) = (rows.len(), cols.len());
    let mut best = f64::NEG_INFINITY;
    let mut pick: Vec<usize> = (0..m).collect();
    loop {
        let a = DMatrix::from_fn(m, m, |r, c| rows[r].0[pick[c]]);
        let b = DVector::from_fn(m, |r, _| rows[r].1);
        if let Some(alpha) = a.lu().solve(&b) {
            let residual = (DMatrix::from_fn(m, m, |r, c| rows[r].0[pick[c]]) * &alpha - &b).amax();
            if alpha.iter().all(|&v| v >= -1e-9) && residual < 1e-9 {
                let value: f64 = pick.iter().zip(alpha.iter()).map(|(&c, &w)| w * cols[c].1).sum();
                best = best.max(value);
            }
        }
        let mut j = m;
        while j > 0 && pick[j - 1] == k - m + j - 1 {
            j -= 1;
        }
        if j == 0 {
            return best;
        }
        pick[j - 1] += 1;
        for t in j..m {
            pick[t] = pick[t - 1] + 1;
        }
    }
}

#[test]
fn simplex_matches_vertex_enumeration() {
    for seed in 0..24u64 {
        // keeps the column count small enough to try every basis
        let (n, support) = if seed % 2 == 0 { (2, 2) } else { (3, 1) };
        let (inst, _) = random_instance(seed, n, support, objective(seed as usize), MatroidKind::Uniform);
        for (k, y) in [[0.5, 0.5, 0.5], [0.2, 0.9, 0.4], [1.0, 0.3, 0.0], [0.77, 0.01, 0.63]].iter().enumerate() {
            let y = &y[..n];
            let lp = f_plus(&inst, &FractionalPoint::new(y.to_vec()).unwrap(), DEFAULT_SCENARIO_CAP).unwrap();
            let oracle = f_plus_by_vertices(&inst, y);
            assert!((lp - oracle).abs() < 1e-9, "seed {seed} point {k}: {lp} vs {oracle}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_plus_is_sandwiched_and_concave(seed in any::<u64>(), n in 2usize..=4, support in 1usize..=2, obj in 0usize..3, a in prop::collection::vec(0.0f64..=1.0, 4), b in prop::collection::vec(0.0f64..=1.0, 4)) {
        let (inst, _) = random_instance(seed, n, support, objective(obj), MatroidKind::Uniform);
        let point = |v: &[f64]| FractionalPoint::new(v[..n].to_vec()).unwrap();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let fa = f_plus(&inst, &point(&a), DEFAULT_SCENARIO_CAP).unwrap();
        let fb = f_plus(&inst, &point(&b), DEFAULT_SCENARIO_CAP).unwrap();
        let fm = f_plus(&inst, &point(&mid), DEFAULT_SCENARIO_CAP).unwrap();
        prop_assert!(fm >= 0.5 * (fa + fb) - 1e-9);
        let multilinear = inst.multilinear_exact(&point(&a)).unwrap();
        prop_assert!(multilinear - 1e-9 <= fa);
        prop_assert!(fa <= gap_constant() * multilinear + 1e-9);
    }
}

fn check_against_grid(inst: &Instance, m: &Matroid, grid: &[Vec<f64>], step: f64) {
    let (u, y_star) = adaptive_upper_bound(inst, m, DEFAULT_SCENARIO_CAP).unwrap();
    let at_star = f_plus(inst, &y_star, DEFAULT_SCENARIO_CAP).unwrap();
    assert!((at_star - u).abs() < 1e-9);
    let fmax = scenarios(inst).iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let grid_best = grid
        .iter()
        .map(|y| f_plus(inst, &FractionalPoint::new(y.clone()).unwrap(), DEFAULT_SCENARIO_CAP).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(grid_best <= u + 1e-9, "{grid_best} > {u}");
    assert!(u - grid_best <= 2.0 * fmax * step * inst.n() as f64, "{u} vs {grid_best}");
}

#[test]
fn upper_bound_is_the_maximum_over_a_grid() {
    let steps = 200;
    let line: Vec<Vec<f64>> = (0..=steps)
        .map(|t| {
            let t = t as f64 / steps as f64;
            vec![t, 1.0 - t]
        })
        .collect();
    let coarse = 40;
    let mut plane: Vec<Vec<f64>> = Vec::new();
    for p in 0..=coarse {
        for q in 0..=coarse {
            let (y0, y1) = (p as f64 / coarse as f64, q as f64 / coarse as f64);
            let y2 = 2.0 - y0 - y1;
            if (-1e-12..=1.0 + 1e-12).contains(&y2) {
                plane.push(vec![y0, y1, y2.clamp(0.0, 1.0)]);
            }
        }
    }
    for seed in 0..6u64 {
        let (inst, _) = random_instance(seed, 2, 2, objective(seed as usize), MatroidKind::Uniform);
        check_against_grid(&inst, &Matroid::uniform(2, 1).unwrap(), &line, 1.0 / steps as f64);
        let (inst, _) = random_instance(seed, 3, 2, objective(seed as usize), MatroidKind::Uniform);
        check_against_grid(&inst, &Matroid::uniform(3, 2).unwrap(), &plane, 1.0 / coarse as f64);
    }
}
