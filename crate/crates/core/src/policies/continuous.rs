//! Continuous greedy on the multilinear extension and pipage rounding, for
//! uniform and partition matroids.

use rand::{Rng, RngCore};
use serde::Serialize;

use super::{check_ground, ExpectationMode};
use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::model::{FractionalPoint, Instance};

const POLYTOPE_TOL: f64 = 1e-9;

/// Output of [`continuous_greedy`]; `point[i] == counts[i] / steps`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuousGreedy {
    pub point: FractionalPoint,
    pub counts: Vec<u32>,
    pub steps: u32,
}

/// Runs `steps` rounds; each estimates `w_i = E[F(Y + i) - F(Y)]` from
/// `samples` fresh draws of `Y ~ y` and of a full realization, then moves
/// `1/steps` toward the max-weight basis.
pub fn continuous_greedy(
    instance: &Instance,
    matroid: &Matroid,
    steps: u32,
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<ContinuousGreedy> {
    check_ground(instance, matroid)?;
    matroid.base_polytope()?;
    if steps == 0 || samples == 0 {
        return Err(Error::InvalidArgument("steps and samples must be positive".into()));
    }
    let n = instance.n();
    let mut counts = vec![0u32; n];
    let mut weights = vec![0.0; n];
    let mut slots = vec![None; n];
    for _ in 0..steps {
        weights.iter_mut().for_each(|w| *w = 0.0);
        for _ in 0..samples {
            let scenario = instance.sample_scenario(rng);
            for (i, slot) in slots.iter_mut().enumerate() {
                let include = rng.gen::<f64>() * f64::from(steps) < f64::from(counts[i]);
                *slot = include.then_some(scenario.outcome(i));
            }
            let base = instance.value_of(&slots);
            for i in 0..n {
                if slots[i].is_none() {
                    slots[i] = Some(scenario.outcome(i));
                    weights[i] += instance.value_of(&slots) - base;
                    slots[i] = None;
                }
            }
        }
        for b in matroid.max_weight_basis(&weights)? {
            counts[b] += 1;
        }
    }
    let point = FractionalPoint::new(counts.iter().map(|&c| c as f64 / steps as f64).collect())?;
    Ok(ContinuousGreedy {
        point,
        counts,
        steps,
    })
}

fn snap(v: f64) -> f64 {
    if v.abs() <= POLYTOPE_TOL {
        0.0
    } else if (1.0 - v).abs() <= POLYTOPE_TOL {
        1.0
    } else {
        v
    }
}

fn is_fractional(v: f64) -> bool {
    v != 0.0 && v != 1.0
}

/// Rounds `y in B(M)` to a basis without decreasing `F(y)`: within a tight
/// group, pushes the two lowest-id fractional coordinates along
/// `e_i - e_j` to whichever endpoint has the larger value.
pub fn pipage_round(
    instance: &Instance,
    matroid: &Matroid,
    y: &FractionalPoint,
    mode: ExpectationMode,
) -> Result<Vec<usize>> {
    check_ground(instance, matroid)?;
    let polytope = matroid.base_polytope()?;
    if !polytope.contains(y.as_slice(), POLYTOPE_TOL) {
        return Err(Error::InvalidPoint("point is not in the base polytope".into()));
    }
    let groups = matroid.tight_groups()?;
    let mut y: Vec<f64> = y.as_slice().iter().map(|&v| snap(v)).collect();
    for (members, _) in &groups {
        loop {
            let frac: Vec<usize> = members.iter().copied().filter(|&i| is_fractional(y[i])).collect();
            match frac.as_slice() {
                [] => break,
                // leftover drift from a group sum that was only integral within tolerance
                [i] => {
                    y[*i] = y[*i].round();
                    break;
                }
                [i, j, ..] => {
                    let (i, j) = (*i, *j);
                    let up = (1.0 - y[i]).min(y[j]);
                    let down = y[i].min(1.0 - y[j]);
                    let mut a = y.clone();
                    a[i] = snap(a[i] + up);
                    a[j] = snap(a[j] - up);
                    let mut b = y.clone();
                    b[i] = snap(b[i] - down);
                    b[j] = snap(b[j] + down);
                    let pa = FractionalPoint::clamped(a, POLYTOPE_TOL)?;
                    let pb = FractionalPoint::clamped(b, POLYTOPE_TOL)?;
                    let values = mode.point_values(instance, &[&pa, &pb])?;
                    let next = if values[0] >= values[1] { pa } else { pb };
                    y = next.as_slice().to_vec();
                }
            }
        }
    }
    let set: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1.0).collect();
    debug_assert!(matroid.is_basis(&set).unwrap_or(false));
    Ok(set)
}
