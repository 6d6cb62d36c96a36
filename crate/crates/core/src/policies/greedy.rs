use super::{argmax_lowest, check_ground, ExpectationMode};
use crate::error::Result;
use crate::matroid::Matroid;
use crate::model::Instance;

/// Non-adaptive greedy on `F`: add the feasible element with the largest
/// `F(S + i) - F(S)` until nothing fits. Returns the set sorted.
pub fn greedy_nonadaptive(instance: &Instance, matroid: &Matroid, mode: ExpectationMode) -> Result<Vec<usize>> {
    check_ground(instance, matroid)?;
    let mut chosen: Vec<usize> = Vec::new();
    let mut current = mode.set_value(instance, &chosen)?;
    loop {
        let mut gains = Vec::new();
        for i in 0..instance.n() {
            if chosen.contains(&i) || !matroid.can_add_unchecked(&chosen, i) {
                continue;
            }
            chosen.push(i);
            let v = mode.set_value(instance, &chosen)?;
            chosen.pop();
            gains.push((i, v - current));
        }
        let Some((i, gain)) = argmax_lowest(gains) else {
            break;
        };
        chosen.push(i);
        current += gain;
    }
    chosen.sort_unstable();
    Ok(chosen)
}
