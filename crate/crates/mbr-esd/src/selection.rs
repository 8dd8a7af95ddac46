// Copyright 2026 The mbr-esd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Decoding a dataset into per-instance selections, and joining selections
//! back to the dataset.

use std::collections::{BTreeSet, HashMap};

use mbr_esd_core::{select, Annotation, DecisionRule, DecodeError, Instance, MbrOptions, UtilityConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_annotation, span_records, Origin, SpanRecord};
use crate::error::{Error, Result};

/// One decoded instance, as written to the selections JSONL.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub id: String,
    pub system: String,
    pub lang_pair: String,
    pub rule: String,
    pub selected: usize,
    pub tie_broken: bool,
    /// Per-candidate decision scores (log-likelihood, MBR or oracle utility).
    pub scores: Vec<f64>,
    pub spans: Vec<SpanRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

impl SelectionRecord {
    pub fn key(&self) -> (&str, &str) {
        (&self.system, &self.id)
    }
}

fn invalid(inst: &Instance, source: DecodeError) -> Error {
    Error::Validation { id: inst.id.clone(), system: inst.system.clone(), source }
}

/// Checks rule requirements on every instance before any decoding, so a
/// bad dataset fails on its first offending instance.
pub fn validate_for_rule(instances: &[Instance], rule: DecisionRule) -> Result<()> {
    for inst in instances {
        if inst.candidates.is_empty() {
            return Err(invalid(inst, DecodeError::NoCandidates));
        }
        match rule {
            DecisionRule::Greedy if inst.candidates.len() != 1 => {
                return Err(invalid(inst, DecodeError::GreedyNeedsOneCandidate { count: inst.candidates.len() }));
            }
            DecisionRule::Map => {
                for (index, h) in inst.candidates.iter().enumerate() {
                    match h.log_likelihood {
                        None => return Err(invalid(inst, DecodeError::MissingLikelihood { index })),
                        Some(v) if !v.is_finite() => {
                            return Err(invalid(inst, DecodeError::NonFiniteLikelihood { index }))
                        }
                        _ => {}
                    }
                }
            }
            DecisionRule::OracleMbr(_) if inst.human.is_none() => {
                return Err(invalid(inst, DecodeError::MissingHumanAnnotation));
            }
            DecisionRule::Mbr(_) if inst.support.as_ref().is_some_and(|s| s.is_empty()) => {
                return Err(invalid(inst, DecodeError::NoSupport));
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn decode_instance(
    inst: &Instance,
    rule: DecisionRule,
    cfg: &UtilityConfig,
    opts: MbrOptions,
) -> Result<SelectionRecord> {
    let result = select(rule, &inst.candidates, inst.support.as_deref(), inst.human.as_ref(), cfg, opts)
        .map_err(|e| invalid(inst, e))?;
    let chosen = &inst.candidates[result.selected];
    Ok(SelectionRecord {
        id: inst.id.clone(),
        system: inst.system.clone(),
        lang_pair: inst.lang_pair.clone(),
        rule: rule.to_string(),
        selected: result.selected,
        tie_broken: result.tie_broken,
        scores: result.scores,
        spans: span_records(&chosen.annotation),
        raw: chosen.raw_text.clone(),
    })
}

/// Decodes every instance in parallel; output order follows the input.
pub fn decode_all(
    instances: &[Instance],
    rule: DecisionRule,
    cfg: &UtilityConfig,
    opts: MbrOptions,
) -> Result<Vec<SelectionRecord>> {
    validate_for_rule(instances, rule)?;
    instances.par_iter().map(|inst| decode_instance(inst, rule, cfg, opts)).collect()
}

/// A selection paired with its dataset instance.
pub struct Joined<'a> {
    pub instance: &'a Instance,
    pub selection: &'a SelectionRecord,
    pub selected: Annotation,
}

fn key_label(system: &str, id: &str) -> String {
    format!("{system}/{id}")
}

/// Joins selections to instances on `(system, id)`. Every selection must
/// match an instance; dataset instances without a selection are ignored.
pub fn join<'a>(instances: &'a [Instance], selections: &'a [SelectionRecord]) -> Result<Vec<Joined<'a>>> {
    let by_key: HashMap<(&str, &str), &Instance> =
        instances.iter().map(|i| ((i.system.as_str(), i.id.as_str()), i)).collect();
    let unmatched: Vec<String> =
        selections.iter().filter(|s| !by_key.contains_key(&s.key())).map(|s| key_label(&s.system, &s.id)).collect();
    if !unmatched.is_empty() || selections.is_empty() {
        return Err(Error::Join(unmatched.len(), unmatched));
    }
    selections
        .iter()
        .enumerate()
        .map(|(i, sel)| {
            let instance = by_key[&sel.key()];
            let origin = Origin { source_name: "selections", line: i + 1 };
            let selected = build_annotation(&sel.spans, instance.translation_len(), &sel.id, &sel.system, origin)?;
            Ok(Joined { instance, selection: sel, selected })
        })
        .collect()
}

/// Fails unless both selection sets cover the same `(system, id)` keys.
pub fn check_coverage(baseline: &[SelectionRecord], candidate: &[SelectionRecord]) -> Result<()> {
    let a: BTreeSet<String> = baseline.iter().map(|s| key_label(&s.system, &s.id)).collect();
    let b: BTreeSet<String> = candidate.iter().map(|s| key_label(&s.system, &s.id)).collect();
    if a != b || a.len() != baseline.len() || b.len() != candidate.len() {
        return Err(Error::CoverageMismatch {
            only_baseline: a.difference(&b).cloned().collect(),
            only_candidate: b.difference(&a).cloned().collect(),
        });
    }
    Ok(())
}
