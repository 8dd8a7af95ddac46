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

//! Evaluation reports and significance tests over selection files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use mbr_esd_core::metrics::{acc_eq_star, spa, ScoredSegment};
use mbr_esd_core::{
    evaluate, mqm_score, paired_bootstrap, perm_both, soft_f1, EvalRecord, EvalReport, Instance, LevelScores,
    MetricsError, SigConfig, UtilityConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::{check_coverage, join, Joined, SelectionRecord};

fn human_of<'a>(j: &Joined<'a>) -> Result<&'a mbr_esd_core::Annotation> {
    j.instance.human.as_ref().ok_or_else(|| Error::Validation {
        id: j.instance.id.clone(),
        system: j.instance.system.clone(),
        source: mbr_esd_core::DecodeError::MissingHumanAnnotation,
    })
}

/// Joins selections to the dataset and scores them against the humans.
pub fn evaluate_selections(
    instances: &[Instance],
    selections: &[SelectionRecord],
    cfg: &UtilityConfig,
    spa_cfg: &SigConfig,
) -> Result<EvalReport> {
    let joined = join(instances, selections)?;
    let humans = joined.iter().map(human_of).collect::<Result<Vec<_>>>()?;
    let records: Vec<EvalRecord<'_>> = joined
        .iter()
        .zip(&humans)
        .map(|(j, h)| EvalRecord {
            id: &j.instance.id,
            system: &j.instance.system,
            lang_pair: &j.instance.lang_pair,
            selected: &j.selected,
            human: h,
        })
        .collect();
    Ok(evaluate(&records, cfg, spa_cfg)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn table_row(out: &mut String, name: &str, l: &LevelScores) {
    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9} {:>7}",
        name,
        fmt_opt(l.spa),
        fmt_opt(l.acc_eq_star),
        fmt_opt(l.epsilon_star),
        format!("{:.4}", l.soft_f1),
        format!("{:.4}", l.f1),
        l.instances,
        l.systems
    );
}

/// Plain-text rendering of a report for the terminal.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9} {:>7}",
        "direction", "SPA", "Acc_eq*", "eps*", "SoftF1", "F1", "instances", "systems"
    );
    for (dir, level) in &report.by_lang_pair {
        table_row(&mut out, dir, level);
    }
    table_row(&mut out, "overall", &report.overall);
    table_row(&mut out, "pooled", &report.pooled);
    let dist = |name: &str, d: &mbr_esd_core::SpanDistribution, out: &mut String| {
        let _ = writeln!(out, "{name}: {} major, {} minor, major/minor = {}", d.major, d.minor, fmt_opt(d.ratio));
    };
    out.push('\n');
    dist("selected spans", &report.span_distribution, &mut out);
    dist("human spans", &report.human_span_distribution, &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub baseline: f64,
    pub candidate: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionTests {
    pub instances: usize,
    /// PERM-BOTH; absent when the direction has no comparable system pair.
    pub spa: Option<TestResult>,
    /// PERM-BOTH; absent when no segment is shared by two systems.
    pub acc_eq_star: Option<TestResult>,
    /// Paired bootstrap over per-instance SoftF1 against the human.
    pub soft_f1: TestResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllDirections {
    pub spa: bool,
    pub acc_eq_star: bool,
    pub soft_f1: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub baseline_rule: String,
    pub candidate_rule: String,
    pub resamples: usize,
    pub seed: u64,
    pub alpha: f64,
    pub by_lang_pair: BTreeMap<String, DirectionTests>,
    /// Significant iff p < alpha in every direction.
    pub all_directions: AllDirections,
}

struct Side<'a> {
    joined: Vec<Joined<'a>>,
}

fn rule_name(selections: &[SelectionRecord]) -> String {
    let mut names: Vec<&str> = selections.iter().map(|s| s.rule.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    names.join(",")
}

fn perm_test<F>(base_scores: &[f64], cand_scores: &[f64], statistic: F, sig: &SigConfig) -> Result<Option<TestResult>>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let (Some(baseline), Some(candidate)) = (statistic(base_scores), statistic(cand_scores)) else {
        return Ok(None);
    };
    let p_value = perm_both(cand_scores, base_scores, |x| statistic(x).unwrap_or(f64::NAN), sig)?;
    Ok(Some(TestResult { baseline, candidate, p_value, significant: p_value < sig.alpha }))
}

fn segments_with(template: &[ScoredSegment], metric: &[f64]) -> Vec<ScoredSegment> {
    template.iter().zip(metric).map(|(s, &m)| ScoredSegment { metric_score: m, ..s.clone() }).collect()
}

fn optional<T>(r: std::result::Result<T, MetricsError>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(
            MetricsError::InsufficientSystems(_) | MetricsError::UnpairedSegments | MetricsError::NoComparablePairs,
        ) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Compares a candidate run against a baseline run, per direction.
pub fn significance(
    instances: &[Instance],
    baseline: &[SelectionRecord],
    candidate: &[SelectionRecord],
    cfg: &UtilityConfig,
    sig: &SigConfig,
    spa_cfg: &SigConfig,
) -> Result<SignificanceReport> {
    sig.validate()?;
    check_coverage(baseline, candidate)?;
    let base = Side { joined: join(instances, baseline)? };
    let cand_by_key: BTreeMap<(&str, &str), &SelectionRecord> = candidate.iter().map(|s| (s.key(), s)).collect();
    // Reorder the candidate run to the baseline's order.
    let cand_sorted: Vec<SelectionRecord> =
        base.joined.iter().map(|j| cand_by_key[&j.selection.key()].clone()).collect();
    let cand = Side { joined: join(instances, &cand_sorted)? };

    let mut dirs: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, j) in base.joined.iter().enumerate() {
        dirs.entry(j.instance.lang_pair.as_str()).or_default().push(i);
    }

    let mut by_lang_pair = BTreeMap::new();
    for (dir, idx) in dirs {
        let mut template = Vec::with_capacity(idx.len());
        let (mut base_mqm, mut cand_mqm, mut base_soft, mut cand_soft) = (vec![], vec![], vec![], vec![]);
        for &i in &idx {
            let (b, c) = (&base.joined[i], &cand.joined[i]);
            let human = human_of(b)?;
            template.push(ScoredSegment {
                id: b.instance.id.clone(),
                system: b.instance.system.clone(),
                metric_score: 0.0,
                human_score: mqm_score(human, cfg),
            });
            base_mqm.push(mqm_score(&b.selected, cfg));
            cand_mqm.push(mqm_score(&c.selected, cfg));
            base_soft.push(soft_f1(&b.selected, human, cfg));
            cand_soft.push(soft_f1(&c.selected, human, cfg));
        }
        let spa_stat = |m: &[f64]| optional(spa(&segments_with(&template, m), spa_cfg)).ok().flatten();
        let acc_stat =
            |m: &[f64]| optional(acc_eq_star(&segments_with(&template, m))).ok().flatten().map(|t| t.accuracy);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let soft = if idx.len() >= 2 {
            let p_value = paired_bootstrap(&cand_soft, &base_soft, sig)?;
            TestResult {
                baseline: mean(&base_soft),
                candidate: mean(&cand_soft),
                p_value,
                significant: p_value < sig.alpha,
            }
        } else {
            TestResult { baseline: mean(&base_soft), candidate: mean(&cand_soft), p_value: 1.0, significant: false }
        };
        let tests = DirectionTests {
            instances: idx.len(),
            spa: if idx.len() >= 2 { perm_test(&base_mqm, &cand_mqm, spa_stat, sig)? } else { None },
            acc_eq_star: if idx.len() >= 2 { perm_test(&base_mqm, &cand_mqm, acc_stat, sig)? } else { None },
            soft_f1: soft,
        };
        by_lang_pair.insert(dir.to_string(), tests);
    }

    let all = |f: &dyn Fn(&DirectionTests) -> bool| by_lang_pair.values().all(f);
    let all_directions = AllDirections {
        spa: all(&|d| d.spa.as_ref().is_some_and(|t| t.significant)),
        acc_eq_star: all(&|d| d.acc_eq_star.as_ref().is_some_and(|t| t.significant)),
        soft_f1: all(&|d| d.soft_f1.significant),
    };
    Ok(SignificanceReport {
        baseline_rule: rule_name(baseline),
        candidate_rule: rule_name(candidate),
        resamples: sig.resamples,
        seed: sig.seed,
        alpha: sig.alpha,
        by_lang_pair,
        all_directions,
    })
}

pub fn render_significance(report: &SignificanceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} vs {} (alpha {})", report.candidate_rule, report.baseline_rule, report.alpha);
    let _ = writeln!(out, "{:<14} {:<8} {:>9} {:>9} {:>8}", "direction", "metric", "baseline", "candidate", "p");
    let row = |out: &mut String, dir: &str, name: &str, t: Option<&TestResult>| {
        let _ = match t {
            Some(t) => writeln!(
                out,
                "{:<14} {:<8} {:>9.4} {:>9.4} {:>8.4}{}",
                dir,
                name,
                t.baseline,
                t.candidate,
                t.p_value,
                if t.significant { " *" } else { "" }
            ),
            None => writeln!(out, "{dir:<14} {name:<8} {:>9} {:>9} {:>8}", "-", "-", "-"),
        };
    };
    for (dir, d) in &report.by_lang_pair {
        row(&mut out, dir, "SPA", d.spa.as_ref());
        row(&mut out, dir, "Acc_eq*", d.acc_eq_star.as_ref());
        row(&mut out, dir, "SoftF1", Some(&d.soft_f1));
    }
    let a = &report.all_directions;
    let _ =
        writeln!(out, "significant in all directions: SPA {}, Acc_eq* {}, SoftF1 {}", a.spa, a.acc_eq_star, a.soft_f1);
    out
}
