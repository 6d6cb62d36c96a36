use serde::Serialize;

use crate::model::PartialRealization;

/// One element considered by an adaptive policy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub element: usize,
    pub accepted: bool,
    /// Observed support index; `None` for discarded elements.
    pub outcome: Option<usize>,
    /// Conditional expected marginal value when the element was considered.
    pub marginal: f64,
}

/// Ordered record of one policy run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyTrace {
    pub steps: Vec<TraceStep>,
    pub realization: PartialRealization,
    pub value: f64,
}

impl PolicyTrace {
    /// Accepted elements in acceptance order.
    pub fn accepted(&self) -> Vec<usize> {
        self.steps.iter().filter(|s| s.accepted).map(|s| s.element).collect()
    }

    pub fn discarded(&self) -> Vec<usize> {
        self.steps.iter().filter(|s| !s.accepted).map(|s| s.element).collect()
    }

    /// Marginals of the accepted elements, `Δ_1, ..., Δ_k`.
    pub fn deltas(&self) -> Vec<f64> {
        self.steps.iter().filter(|s| s.accepted).map(|s| s.marginal).collect()
    }

    /// `(S_t, U_t)` after each accepted element.
    pub fn prefixes(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let (mut chosen, mut discarded) = (Vec::new(), Vec::new());
        let mut out = Vec::new();
        for s in &self.steps {
            if s.accepted {
                chosen.push(s.element);
                out.push((chosen.clone(), discarded.clone()));
            } else {
                discarded.push(s.element);
            }
        }
        out
    }

    /// One JSON object per step, newline-terminated.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (t, step) in self.steps.iter().enumerate() {
            let line = serde_json::json!({
                "step": t,
                "element": step.element,
                "accepted": step.accepted,
                "outcome": step.outcome,
                "marginal": step.marginal,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}
