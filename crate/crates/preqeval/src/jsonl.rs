//! JSONL dataset files: one metadata object, then one example per line, in
//! transmission order. The format round-trips a [`Dataset`] exactly,
//! ordering seed included.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use preqeval_core::{Dataset, Example, FeatureSpec, FeatureVector, LabelSpace};
use serde::{Deserialize, Serialize};

use crate::{AppError, AppResult};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaLine {
    num_classes: u32,
    features: FeatureSpec,
    task_id: String,
    ordering_seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExampleLine {
    label: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dense: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sparse: Option<BTreeMap<String, u32>>,
}

fn data_err(line: usize, msg: impl fmt::Display) -> AppError {
    AppError::Data(format!("{msg} on line {line}"))
}

pub fn save_jsonl(dataset: &Dataset, path: &Path) -> AppResult<()> {
    let mut out = String::new();
    let meta = MetaLine {
        num_classes: dataset.label_space().num_classes(),
        features: dataset.feature_spec(),
        task_id: dataset.task_id().to_string(),
        ordering_seed: dataset.ordering_seed(),
    };
    out.push_str(&serde_json::to_string(&meta).expect("metadata serializes"));
    out.push('\n');
    for ex in dataset.examples() {
        let line = match &ex.features {
            FeatureVector::Dense(values) => ExampleLine {
                label: ex.label,
                dense: Some(values.clone()),
                sparse: None,
            },
            FeatureVector::Sparse(pairs) => ExampleLine {
                label: ex.label,
                dense: None,
                sparse: Some(
                    pairs
                        .iter()
                        .map(|&(index, count)| (index.to_string(), count))
                        .collect(),
                ),
            },
        };
        out.push_str(&serde_json::to_string(&line).expect("example serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| AppError::io(path, e))
}

pub fn load_jsonl(path: &Path) -> AppResult<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, first) = lines
        .next()
        .filter(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| AppError::Data(format!("{}: missing metadata line", path.display())))?;
    let meta: MetaLine = serde_json::from_str(first).map_err(|e| data_err(1, e))?;
    let label_space = LabelSpace::new(meta.num_classes)?;

    let mut examples = Vec::new();
    for (line, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let parsed: ExampleLine = serde_json::from_str(raw).map_err(|e| data_err(line, e))?;
        let features = match (parsed.dense, parsed.sparse) {
            (Some(values), None) => FeatureVector::Dense(values),
            (None, Some(map)) => {
                let mut pairs = Vec::with_capacity(map.len());
                for (key, count) in map {
                    let index: u32 = key
                        .parse()
                        .map_err(|_| data_err(line, format_args!("bad sparse index {key:?}")))?;
                    pairs.push((index, count));
                }
                pairs.sort_unstable();
                FeatureVector::Sparse(pairs)
            }
            _ => {
                return Err(data_err(line, "need exactly one of `dense` or `sparse`"));
            }
        };
        features
            .conforms(&meta.features)
            .map_err(|e| data_err(line, e))?;
        if parsed.label >= meta.num_classes {
            return Err(data_err(
                line,
                format_args!(
                    "label {} out of range for {} classes",
                    parsed.label, meta.num_classes
                ),
            ));
        }
        examples.push(Example { features, label: parsed.label });
    }

    Dataset::new(
        examples,
        label_space,
        meta.features,
        meta.task_id,
        meta.ordering_seed,
    )
    .map_err(AppError::from)
}
