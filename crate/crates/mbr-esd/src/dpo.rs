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

//! Preference-pair export for MBR distillation (DPO training data).

use mbr_esd_core::{build_pairs, DistillError, Instance, UtilityConfig, UtilityKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One training example: the prompt fields plus the raw model outputs of
/// the preferred and rejected candidates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpoRecord {
    pub id: String,
    pub system: String,
    pub lang_pair: String,
    pub src: String,
    pub tgt: String,
    pub preferred: String,
    pub rejected: String,
    pub preferred_index: usize,
    pub rejected_index: usize,
    pub utility_gap: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DpoExport {
    pub train: Vec<DpoRecord>,
    pub valid: Vec<DpoRecord>,
    /// Instances whose best and worst MBR scores were within `min_gap`.
    pub skipped_ties: usize,
    /// Instances with fewer than two candidates.
    pub skipped_too_few: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct DpoOptions {
    pub kind: UtilityKind,
    pub min_gap: f64,
    pub valid_fraction: f64,
    pub seed: u64,
}

impl Default for DpoOptions {
    fn default() -> Self {
        DpoOptions { kind: UtilityKind::SoftF1, min_gap: 0.0, valid_fraction: 0.1, seed: 0x5EED }
    }
}

fn raw_of(inst: &Instance, index: usize) -> Result<String> {
    inst.candidates[index].raw_text.clone().ok_or_else(|| Error::MissingRawText {
        id: inst.id.clone(),
        system: inst.system.clone(),
        index,
    })
}

enum Outcome {
    Pair(Box<DpoRecord>),
    Tie,
    TooFew,
}

/// Builds pairs for every instance and splits them into train and
/// validation sets. The split shuffles pair positions with `seed` and moves
/// `round(valid_fraction * n)` of them to validation; both sets keep
/// dataset order.
pub fn export_dpo_pairs(instances: &[Instance], cfg: &UtilityConfig, opts: &DpoOptions) -> Result<DpoExport> {
    let outcomes: Vec<Outcome> = instances
        .par_iter()
        .map(|inst| match build_pairs(inst, opts.kind, cfg, opts.min_gap) {
            Ok(Some(p)) => Ok(Outcome::Pair(Box::new(DpoRecord {
                id: inst.id.clone(),
                system: inst.system.clone(),
                lang_pair: inst.lang_pair.clone(),
                src: inst.source.clone(),
                tgt: inst.translation.clone(),
                preferred: raw_of(inst, p.preferred)?,
                rejected: raw_of(inst, p.rejected)?,
                preferred_index: p.preferred,
                rejected_index: p.rejected,
                utility_gap: p.utility_gap,
            }))),
            Ok(None) => Ok(Outcome::Tie),
            Err(DistillError::TooFewCandidates { .. }) => Ok(Outcome::TooFew),
            Err(e) => Err(Error::from(e)),
        })
        .collect::<Result<_>>()?;

    let mut export = DpoExport::default();
    let mut pairs = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Pair(p) => pairs.push(*p),
            Outcome::Tie => export.skipped_ties += 1,
            Outcome::TooFew => export.skipped_too_few += 1,
        }
    }

    let n_valid = (opts.valid_fraction * pairs.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    let mut in_valid = vec![false; pairs.len()];
    for &i in &order[..n_valid] {
        in_valid[i] = true;
    }
    for (pair, valid) in pairs.into_iter().zip(in_valid) {
        if valid {
            export.valid.push(pair);
        } else {
            export.train.push(pair);
        }
    }
    Ok(export)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mbr_esd_core::{utility, Annotation, ErrorSpan, Hypothesis};

    fn instance(id: usize, anns: Vec<Annotation>, raw: bool) -> Instance {
        Instance {
            id: id.to_string(),
            system: "S".into(),
            lang_pair: "en-de".into(),
            source: format!("src {id}"),
            translation: "x".repeat(anns[0].translation_len()),
            human: None,
            candidates: anns
                .into_iter()
                .enumerate()
                .map(|(i, a)| {
                    let h = Hypothesis::new(a);
                    if raw {
                        h.with_raw_text(format!("raw {i}"))
                    } else {
                        h
                    }
                })
                .collect(),
            support: None,
        }
    }

    fn varied(k: usize) -> Vec<Annotation> {
        vec![
            Annotation::new(10, [ErrorSpan::major(0, 1 + k % 5)]).unwrap(),
            Annotation::new(10, [ErrorSpan::major(0, 2)]).unwrap(),
            Annotation::new(10, [ErrorSpan::minor(6, 10)]).unwrap(),
        ]
    }

    #[test]
    fn ten_instances_one_in_validation() {
        let ds: Vec<Instance> = (0..10).map(|k| instance(k, varied(k), true)).collect();
        let out = export_dpo_pairs(&ds, &UtilityConfig::default(), &DpoOptions::default()).unwrap();
        assert_eq!((out.train.len(), out.valid.len()), (9, 1));
        let again = export_dpo_pairs(&ds, &UtilityConfig::default(), &DpoOptions::default()).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn ties_and_singletons_are_skipped() {
        let same = Annotation::new(4, [ErrorSpan::minor(0, 1)]).unwrap();
        let ds = vec![
            instance(0, vec![same.clone(), same.clone()], true),
            instance(1, vec![same], true),
            instance(2, varied(0), true),
        ];
        let out =
            export_dpo_pairs(&ds, &UtilityConfig::default(), &DpoOptions { valid_fraction: 0.0, ..Default::default() })
                .unwrap();
        assert_eq!((out.skipped_ties, out.skipped_too_few, out.train.len()), (1, 1, 1));
    }

    #[test]
    fn pairs_rescore_strictly() {
        let cfg = UtilityConfig::default();
        let ds: Vec<Instance> = (0..10).map(|k| instance(k, varied(k), true)).collect();
        let out = export_dpo_pairs(&ds, &cfg, &DpoOptions::default()).unwrap();
        for rec in out.train.iter().chain(&out.valid) {
            let inst = ds.iter().find(|i| i.id == rec.id).unwrap();
            let anns: Vec<&Annotation> = inst.candidates.iter().map(|h| &h.annotation).collect();
            let mean = |i: usize| {
                anns.iter().map(|s| utility(UtilityKind::SoftF1, anns[i], s, &cfg)).sum::<f64>() / anns.len() as f64
            };
            assert!(mean(rec.preferred_index) > mean(rec.rejected_index));
            assert_eq!(rec.preferred, format!("raw {}", rec.preferred_index));
        }
    }

    #[test]
    fn missing_raw_text() {
        let ds = vec![instance(0, varied(0), false)];
        assert!(matches!(
            export_dpo_pairs(&ds, &UtilityConfig::default(), &DpoOptions::default()),
            Err(Error::MissingRawText { .. })
        ));
    }
}
