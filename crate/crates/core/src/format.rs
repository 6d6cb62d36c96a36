//! Instance files.
//!
//! ```json
//! {
//!   "universe_size": 2,
//!   "objective": {"kind": "coverage", "weights": [1.0, 2.0]},
//!   "elements": [{"id": 0, "support": [{"payload": [0, 1], "prob": 1.0}]}],
//!   "matroid": {"kind": "uniform", "k": 1}
//! }
//! ```
//!
//! Payloads are sorted item arrays for `coverage`, floats for `concave_sum`
//! and integers for `table`. `concave_sum` objectives carry `breakpoints`
//! (`[[x, u], ...]` starting at `[0, 0]`) and `tail_slope`; `table`
//! objectives carry `values` indexed by realization code. `weights` and
//! `matroid` are optional.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matroid::{Matroid, MatroidSpec};
use crate::model::{
    DiscreteDistribution, Instance, ObjectiveSpec, OutcomePayload, PiecewiseConcave,
    StochasticElement,
};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    universe_size: usize,
    objective: ObjectiveFile,
    elements: Vec<ElementFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matroid: Option<MatroidSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ObjectiveFile {
    Coverage {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    ConcaveSum {
        breakpoints: Vec<(f64, f64)>,
        tail_slope: f64,
    },
    Table {
        values: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementFile {
    id: usize,
    support: Vec<OutcomeFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeFile {
    payload: Value,
    prob: f64,
}

/// An instance plus the matroid stored alongside it, if any.
#[derive(Clone, Debug)]
pub struct LoadedInstance {
    pub instance: Instance,
    pub matroid: Option<MatroidSpec>,
}

pub fn parse_instance(text: &str) -> Result<LoadedInstance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    let objective = match file.objective {
        ObjectiveFile::Coverage { weights } => ObjectiveSpec::Coverage { weights },
        ObjectiveFile::ConcaveSum {
            breakpoints,
            tail_slope,
        } => ObjectiveSpec::ConcaveOfSum(PiecewiseConcave::new(breakpoints, tail_slope)?),
        ObjectiveFile::Table { values } => ObjectiveSpec::ExplicitTable { values },
    };
    for (pos, e) in file.elements.iter().enumerate() {
        if pos > 0 && e.id <= file.elements[pos - 1].id {
            return Err(Error::Format(format!(
                "element ids must be sorted and distinct (id {} after {})",
                e.id,
                file.elements[pos - 1].id
            )));
        }
    }
    let elements = file
        .elements
        .into_iter()
        .map(|e| {
            let outcomes = e
                .support
                .into_iter()
                .map(|o| {
                    if !o.prob.is_finite() || o.prob < 0.0 {
                        return Err(Error::Format(format!(
                            "element {}: probability {} must be finite and nonnegative",
                            e.id, o.prob
                        )));
                    }
                    Ok((payload_of(&objective, &o.payload, e.id)?, o.prob))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(StochasticElement {
                id: e.id,
                dist: DiscreteDistribution::new(outcomes)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let instance = Instance::new(file.universe_size, objective, elements)?;
    if let Some(spec) = &file.matroid {
        Matroid::from_spec(spec, instance.n())?;
    }
    Ok(LoadedInstance {
        instance,
        matroid: file.matroid,
    })
}

fn payload_of(objective: &ObjectiveSpec, value: &Value, id: usize) -> Result<OutcomePayload> {
    let bad = |what: &str| Error::Format(format!("element {id}: payload {value} is not {what}"));
    match objective {
        ObjectiveSpec::Coverage { .. } => {
            let items = value.as_array().ok_or_else(|| bad("an item array"))?;
            items
                .iter()
                .map(|v| v.as_u64().map(|u| u as usize).ok_or_else(|| bad("an array of item ids")))
                .collect::<Result<Vec<_>>>()
                .map(OutcomePayload::Subset)
        }
        ObjectiveSpec::ConcaveOfSum(_) => value.as_f64().map(OutcomePayload::Scalar).ok_or_else(|| bad("a number")),
        ObjectiveSpec::ExplicitTable { .. } => value.as_u64().map(OutcomePayload::Index).ok_or_else(|| bad("an integer")),
    }
}

pub fn load_instance(path: &Path) -> Result<LoadedInstance> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

/// Pretty-printed JSON with a trailing newline; identical inputs give
/// identical bytes.
pub fn instance_to_json(instance: &Instance, matroid: Option<&Matroid>) -> Result<String> {
    let objective = match instance.objective() {
        ObjectiveSpec::Coverage { weights } => ObjectiveFile::Coverage {
            weights: weights.clone(),
        },
        ObjectiveSpec::ConcaveOfSum(u) => ObjectiveFile::ConcaveSum {
            breakpoints: u.breakpoints().to_vec(),
            tail_slope: u.tail_slope(),
        },
        ObjectiveSpec::ExplicitTable { values } => ObjectiveFile::Table {
            values: values.clone(),
        },
    };
    let elements = instance
        .elements()
        .iter()
        .map(|e| ElementFile {
            id: e.id,
            support: e
                .dist
                .iter()
                .map(|(payload, prob)| OutcomeFile {
                    payload: match payload {
                        OutcomePayload::Subset(items) => Value::from(items.clone()),
                        OutcomePayload::Scalar(x) => Value::from(*x),
                        OutcomePayload::Index(k) => Value::from(*k),
                    },
                    prob,
                })
                .collect(),
        })
        .collect();
    let file = InstanceFile {
        universe_size: instance.universe_size(),
        objective,
        elements,
        matroid: matroid.map(Matroid::to_spec),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    Ok(text)
}
