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

//! Meta-evaluation of selected annotations against human annotations.
//!
//! * system level: soft pairwise accuracy (SPA) of system rankings,
//! * sentence level: pairwise accuracy with tie calibration (`Acc_eq*`),
//! * span level: corpus means of `SoftF1(·, human)` and `F1(·, human)`.
//!
//! Sentence scores on both sides come from [`mqm_score`]; a system score is
//! the mean of its sentence scores.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::span::Annotation;
use crate::stats::{sign_flip_p_value, SigConfig};
use crate::utility::{f1, mqm_score, soft_f1, UtilityConfig};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("nothing to evaluate")]
    Empty,
    #[error("SPA needs at least two systems, found {0}")]
    InsufficientSystems(usize),
    #[error("no two systems share a segment")]
    UnpairedSegments,
    #[error("segment `{id}` appears more than once for system `{system}`")]
    DuplicateSegment { system: String, id: String },
    #[error("no segment is scored by two different systems")]
    NoComparablePairs,
    #[error("instance {index} has no human annotation")]
    MissingHumanAnnotation { index: usize },
}

/// Metric and human MQM scores of one system's translation of one segment.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ScoredSegment {
    pub id: String,
    pub system: String,
    pub metric_score: f64,
    pub human_score: f64,
}

/// Mean metric score per system.
pub fn system_scores(segments: &[ScoredSegment]) -> Result<BTreeMap<String, f64>, MetricsError> {
    if segments.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for s in segments {
        let e = sums.entry(s.system.as_str()).or_insert((0.0, 0));
        e.0 += s.metric_score;
        e.1 += 1;
    }
    Ok(sums.into_iter().map(|(k, (sum, n))| (String::from(k), sum / n as f64)).collect())
}

/// Segment id → (metric, human) for one system.
type SystemSegments<'a> = BTreeMap<&'a str, (f64, f64)>;

fn by_system(segments: &[ScoredSegment]) -> Result<BTreeMap<&str, SystemSegments<'_>>, MetricsError> {
    let mut out: BTreeMap<&str, SystemSegments<'_>> = BTreeMap::new();
    for s in segments {
        let prev = out.entry(s.system.as_str()).or_default().insert(s.id.as_str(), (s.metric_score, s.human_score));
        if prev.is_some() {
            return Err(MetricsError::DuplicateSegment { system: s.system.clone(), id: s.id.clone() });
        }
    }
    Ok(out)
}

/// Soft pairwise accuracy.
///
/// For every pair of systems `A < B` (by name) that share segments, a
/// one-sided paired permutation test over the shared segments gives the
/// p-value that `A` outscores `B`, once with metric scores and once with
/// human scores. SPA is the mean of `1 − |p_metric − p_human|`. Both tests of
/// a pair flip the same signs (stream = pair ordinal under `cfg.seed`).
pub fn spa(segments: &[ScoredSegment], cfg: &SigConfig) -> Result<f64, MetricsError> {
    let systems = by_system(segments)?;
    if systems.len() < 2 {
        return Err(MetricsError::InsufficientSystems(systems.len()));
    }
    let names: Vec<&str> = systems.keys().copied().collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    let mut ordinal = 0u64;
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let stream = ordinal;
            ordinal += 1;
            let (sa, sb) = (&systems[a], &systems[b]);
            let mut metric_diffs = Vec::new();
            let mut human_diffs = Vec::new();
            for (id, (ma, ha)) in sa {
                if let Some((mb, hb)) = sb.get(id) {
                    metric_diffs.push(ma - mb);
                    human_diffs.push(ha - hb);
                }
            }
            if metric_diffs.is_empty() {
                continue;
            }
            let pm = sign_flip_p_value(&metric_diffs, cfg.resamples, cfg.seed, stream);
            let ph = sign_flip_p_value(&human_diffs, cfg.resamples, cfg.seed, stream);
            total += 1.0 - (pm - ph).abs();
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(MetricsError::UnpairedSegments);
    }
    Ok(total / pairs as f64)
}

/// Accuracy at the calibrated tie threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TieCalibrated {
    pub accuracy: f64,
    pub epsilon: f64,
}

struct SegmentPair {
    gap: f64,
    /// Metric order when the gap exceeds epsilon.
    metric: Ordering,
    human: Ordering,
}

fn comparable_pairs(segments: &[ScoredSegment]) -> Vec<SegmentPair> {
    let mut by_id: BTreeMap<&str, Vec<&ScoredSegment>> = BTreeMap::new();
    for s in segments {
        by_id.entry(s.id.as_str()).or_default().push(s);
    }
    let mut pairs = Vec::new();
    for group in by_id.values() {
        for (i, x) in group.iter().enumerate() {
            for y in &group[i + 1..] {
                if x.system == y.system {
                    continue;
                }
                pairs.push(SegmentPair {
                    gap: (x.metric_score - y.metric_score).abs(),
                    metric: x.metric_score.partial_cmp(&y.metric_score).unwrap_or(Ordering::Equal),
                    human: x.human_score.partial_cmp(&y.human_score).unwrap_or(Ordering::Equal),
                });
            }
        }
    }
    pairs
}

/// Pairwise accuracy with tie calibration over same-segment, cross-system
/// pairs.
///
/// Human ties are exact score equality. The metric ties a pair when its
/// score gap is at most `ε`; `ε` ranges over 0 and every observed gap, and
/// the smallest maximiser is returned.
pub fn acc_eq_star(segments: &[ScoredSegment]) -> Result<TieCalibrated, MetricsError> {
    let mut pairs = comparable_pairs(segments);
    if pairs.is_empty() {
        return Err(MetricsError::NoComparablePairs);
    }
    let total = pairs.len() as f64;
    pairs.sort_by(|a, b| a.gap.total_cmp(&b.gap));

    // Below the smallest gap no pair is tied: correct iff concordant.
    let concordant = |p: &SegmentPair| p.human != Ordering::Equal && p.metric == p.human;
    let mut correct: i64 = pairs.iter().filter(|p| concordant(p)).count() as i64;
    let mut best = TieCalibrated { accuracy: f64::NEG_INFINITY, epsilon: 0.0 };
    let mut next = 0;
    let candidates = core::iter::once(0.0).chain(pairs.iter().map(|p| p.gap).filter(|&g| g > 0.0));
    let mut last: Option<f64> = None;
    for eps in candidates {
        if last == Some(eps) {
            continue;
        }
        last = Some(eps);
        while next < pairs.len() && pairs[next].gap <= eps {
            let p = &pairs[next];
            correct += i64::from(p.human == Ordering::Equal) - i64::from(concordant(p));
            next += 1;
        }
        let accuracy = correct as f64 / total;
        if accuracy > best.accuracy {
            best = TieCalibrated { accuracy, epsilon: eps };
        }
    }
    Ok(best)
}

/// Corpus means of `SoftF1(selected, human)` and `F1(selected, human)`.
pub fn corpus_span_scores(
    selections: &[(&Annotation, Option<&Annotation>)],
    cfg: &UtilityConfig,
) -> Result<(f64, f64), MetricsError> {
    if selections.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (mut soft, mut hard) = (0.0, 0.0);
    for (index, (sel, human)) in selections.iter().enumerate() {
        let human = human.ok_or(MetricsError::MissingHumanAnnotation { index })?;
        soft += soft_f1(sel, human, cfg);
        hard += f1(sel, human, cfg);
    }
    let n = selections.len() as f64;
    Ok((soft / n, hard / n))
}

/// Span totals by severity and their ratio (absent when there are no minor
/// spans).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpanDistribution {
    pub major: usize,
    pub minor: usize,
    pub ratio: Option<f64>,
}

impl SpanDistribution {
    pub fn from_counts(major: usize, minor: usize) -> Self {
        let ratio = (minor > 0).then(|| major as f64 / minor as f64);
        SpanDistribution { major, minor, ratio }
    }
}

pub fn span_distribution<'a>(selections: impl IntoIterator<Item = &'a Annotation>) -> SpanDistribution {
    let (mut major, mut minor) = (0, 0);
    for a in selections {
        let c = a.count_spans();
        major += c.major;
        minor += c.minor;
    }
    SpanDistribution::from_counts(major, minor)
}

/// One decoded instance joined with its human annotation.
#[derive(Clone, Copy, Debug)]
pub struct EvalRecord<'a> {
    pub id: &'a str,
    pub system: &'a str,
    pub lang_pair: &'a str,
    pub selected: &'a Annotation,
    pub human: &'a Annotation,
}

/// Scores for one slice of the data. `spa` and `acc_eq_star` are absent
/// when the slice has no comparable systems or segments.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LevelScores {
    pub spa: Option<f64>,
    pub acc_eq_star: Option<f64>,
    pub epsilon_star: Option<f64>,
    pub soft_f1: f64,
    pub f1: f64,
    pub instances: usize,
    pub systems: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalReport {
    /// Macro average over translation directions.
    pub overall: LevelScores,
    /// All directions pooled into one set.
    pub pooled: LevelScores,
    pub by_lang_pair: BTreeMap<String, LevelScores>,
    pub span_distribution: SpanDistribution,
    pub human_span_distribution: SpanDistribution,
}

impl EvalReport {
    /// Every SPA, `Acc_eq*`, SoftF1 and F1 value in the report.
    pub fn metric_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for level in
            core::iter::once(&self.overall).chain(core::iter::once(&self.pooled)).chain(self.by_lang_pair.values())
        {
            out.extend(level.spa);
            out.extend(level.acc_eq_star);
            out.push(level.soft_f1);
            out.push(level.f1);
        }
        out
    }
}

/// Sentence-level segments for SPA and `Acc_eq*`.
pub fn scored_segments(records: &[EvalRecord<'_>], cfg: &UtilityConfig) -> Vec<ScoredSegment> {
    records
        .iter()
        .map(|r| ScoredSegment {
            id: String::from(r.id),
            system: String::from(r.system),
            metric_score: mqm_score(r.selected, cfg),
            human_score: mqm_score(r.human, cfg),
        })
        .collect()
}

fn level_scores(
    records: &[EvalRecord<'_>],
    segments: &[ScoredSegment],
    cfg: &UtilityConfig,
    sig: &SigConfig,
) -> Result<LevelScores, MetricsError> {
    let pairs: Vec<(&Annotation, Option<&Annotation>)> = records.iter().map(|r| (r.selected, Some(r.human))).collect();
    let (soft, hard) = corpus_span_scores(&pairs, cfg)?;
    let spa_value = match spa(segments, sig) {
        Ok(v) => Some(v),
        Err(MetricsError::InsufficientSystems(_) | MetricsError::UnpairedSegments) => None,
        Err(e) => return Err(e),
    };
    let acc = match acc_eq_star(segments) {
        Ok(v) => Some(v),
        Err(MetricsError::NoComparablePairs) => None,
        Err(e) => return Err(e),
    };
    let systems: BTreeSet<&str> = records.iter().map(|r| r.system).collect();
    Ok(LevelScores {
        spa: spa_value,
        acc_eq_star: acc.map(|a| a.accuracy),
        epsilon_star: acc.map(|a| a.epsilon),
        soft_f1: soft,
        f1: hard,
        instances: records.len(),
        systems: systems.len(),
    })
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Builds the full report: per direction, macro-averaged and pooled.
pub fn evaluate(records: &[EvalRecord<'_>], cfg: &UtilityConfig, sig: &SigConfig) -> Result<EvalReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut by_dir: BTreeMap<&str, Vec<EvalRecord<'_>>> = BTreeMap::new();
    for r in records {
        by_dir.entry(r.lang_pair).or_default().push(*r);
    }
    let mut by_lang_pair = BTreeMap::new();
    for (dir, recs) in &by_dir {
        let segs = scored_segments(recs, cfg);
        by_lang_pair.insert(String::from(*dir), level_scores(recs, &segs, cfg, sig)?);
    }

    let levels: Vec<&LevelScores> = by_lang_pair.values().collect();
    let overall = LevelScores {
        spa: mean_of(levels.iter().filter_map(|l| l.spa)),
        acc_eq_star: mean_of(levels.iter().filter_map(|l| l.acc_eq_star)),
        epsilon_star: None,
        soft_f1: mean_of(levels.iter().map(|l| l.soft_f1)).unwrap_or(0.0),
        f1: mean_of(levels.iter().map(|l| l.f1)).unwrap_or(0.0),
        instances: records.len(),
        systems: levels.iter().map(|l| l.systems).sum(),
    };

    // Pooling keys systems and segments by direction so nothing pairs
    // across directions.
    let pooled_segments: Vec<ScoredSegment> = scored_segments(records, cfg)
        .into_iter()
        .zip(records)
        .map(|(mut s, r)| {
            s.id = format!("{}\u{1f}{}", r.lang_pair, s.id);
            s.system = format!("{}\u{1f}{}", r.lang_pair, s.system);
            s
        })
        .collect();
    let pooled = level_scores(records, &pooled_segments, cfg, sig)?;

    Ok(EvalReport {
        overall,
        pooled,
        by_lang_pair,
        span_distribution: span_distribution(records.iter().map(|r| r.selected)),
        human_span_distribution: span_distribution(records.iter().map(|r| r.human)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::ErrorSpan;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn seg(id: &str, system: &str, metric: f64, human: f64) -> ScoredSegment {
        ScoredSegment { id: id.to_string(), system: system.to_string(), metric_score: metric, human_score: human }
    }

    #[test]
    fn system_means() {
        let s = vec![seg("1", "A", -5.0, 0.0), seg("2", "A", -15.0, 0.0)];
        assert_eq!(system_scores(&s).unwrap()["A"], -10.0);

        let s = vec![seg("1", "A", 0.0, 0.0), seg("1", "B", 0.0, 0.0)];
        assert!(system_scores(&s).unwrap().values().all(|&v| v == 0.0));

        let s = vec![
            seg("1", "A", -1.0, 0.0),
            seg("2", "A", -2.0, 0.0),
            seg("3", "B", -6.0, 0.0),
            seg("4", "B", -3.0, 0.0),
            seg("5", "B", -3.0, 0.0),
        ];
        let m = system_scores(&s).unwrap();
        assert_eq!(m["A"], -1.5);
        assert_eq!(m["B"], -4.0);
        assert_eq!(system_scores(&[]), Err(MetricsError::Empty));
    }

    fn two_system_set(flip_metric: bool) -> Vec<ScoredSegment> {
        // Human prefers A on every segment, by varying margins.
        let mut out = Vec::new();
        for i in 0..20 {
            let ha = -((i % 3) as f64);
            let hb = ha - 1.0 - (i % 4) as f64;
            let (ma, mb) = if flip_metric { (-ha, -hb) } else { (ha, hb) };
            out.push(seg(&i.to_string(), "A", ma, ha));
            out.push(seg(&i.to_string(), "B", mb, hb));
        }
        out
    }

    #[test]
    fn spa_identity_and_reversal() {
        let sig = SigConfig::default();
        assert_eq!(spa(&two_system_set(false), &sig).unwrap(), 1.0);
        // Human: A always better, so p_H = 1/1001. Metric reversed, so no
        // resample reaches the observed mean and p_M = 1001/1001.
        let reversed = spa(&two_system_set(true), &sig).unwrap();
        assert!(reversed < 0.5);
        assert!((reversed - 1.0 / 1001.0).abs() < 1e-12);
    }

    #[test]
    fn spa_equal_systems() {
        let mut s = Vec::new();
        for i in 0..10 {
            let score = -((i % 4) as f64);
            s.push(seg(&i.to_string(), "A", score, score * 2.0));
            s.push(seg(&i.to_string(), "B", score, score * 2.0));
        }
        assert_eq!(spa(&s, &SigConfig::default()).unwrap(), 1.0);
    }

    #[test]
    fn spa_errors() {
        let sig = SigConfig::default();
        assert_eq!(spa(&[seg("1", "A", 0.0, 0.0)], &sig), Err(MetricsError::InsufficientSystems(1)));
        assert_eq!(spa(&[seg("1", "A", 0.0, 0.0), seg("2", "B", 0.0, 0.0)], &sig), Err(MetricsError::UnpairedSegments));
        assert!(matches!(
            spa(&[seg("1", "A", 0.0, 0.0), seg("1", "A", 1.0, 0.0)], &sig),
            Err(MetricsError::DuplicateSegment { .. })
        ));
    }

    #[test]
    fn spa_invariant_under_positive_affine_metric_transform() {
        let base = vec![
            seg("1", "A", -1.0, -2.0),
            seg("1", "B", -3.0, -1.0),
            seg("1", "C", 0.0, -5.0),
            seg("2", "A", -5.0, 0.0),
            seg("2", "B", -2.0, -1.0),
            seg("2", "C", -7.0, -6.0),
            seg("3", "A", 0.0, -1.0),
            seg("3", "B", -6.0, -6.0),
            seg("3", "C", -1.0, -2.0),
        ];
        let transformed: Vec<ScoredSegment> =
            base.iter().map(|s| ScoredSegment { metric_score: 2.0 * s.metric_score + 3.0, ..s.clone() }).collect();
        let sig = SigConfig::default();
        assert_eq!(spa(&base, &sig).unwrap(), spa(&transformed, &sig).unwrap());
    }

    /// Exhaustive oracle: evaluates every candidate epsilon independently.
    fn acc_oracle(segments: &[ScoredSegment]) -> (f64, f64) {
        let mut pairs = Vec::new();
        for (i, x) in segments.iter().enumerate() {
            for y in &segments[i + 1..] {
                if x.id == y.id && x.system != y.system {
                    pairs.push((x.metric_score - y.metric_score, x.human_score - y.human_score));
                }
            }
        }
        let mut eps_set = vec![0.0];
        eps_set.extend(pairs.iter().map(|(dm, _)| dm.abs()));
        eps_set.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut best = (-1.0, 0.0);
        for &eps in &eps_set {
            let mut ok = 0;
            for &(dm, dh) in &pairs {
                let metric_tie = dm.abs() <= eps;
                let human_tie = dh == 0.0;
                let hit = if metric_tie || human_tie { metric_tie && human_tie } else { (dm > 0.0) == (dh > 0.0) };
                ok += hit as usize;
            }
            let acc = ok as f64 / pairs.len() as f64;
            if acc > best.0 {
                best = (acc, eps);
            }
        }
        best
    }

    #[test]
    fn acc_identity() {
        let s = two_system_set(false);
        let r = acc_eq_star(&s).unwrap();
        assert_eq!((r.accuracy, r.epsilon), (1.0, 0.0));
    }

    #[test]
    fn acc_reversed_metric() {
        // Ten pairs, no human ties, metric is the negated human score.
        let mut s = Vec::new();
        for i in 0..10 {
            let h = -(i as f64);
            s.push(seg(&i.to_string(), "A", -h, h));
            s.push(seg(&i.to_string(), "B", -(h - 1.0 - i as f64), h - 1.0 - i as f64));
        }
        let r = acc_eq_star(&s).unwrap();
        assert_eq!((r.accuracy, r.epsilon), (0.0, 0.0));
        assert_eq!(acc_oracle(&s), (0.0, 0.0));
    }

    #[test]
    fn acc_four_systems_one_segment() {
        let s = vec![
            seg("x", "A", -1.0, -1.0),
            seg("x", "B", -2.0, -1.0),
            seg("x", "C", -6.0, -5.0),
            seg("x", "D", -5.0, -10.0),
        ];
        // Pairs: AB gap 1 (human tie), AC 5, AD 4, BC 4, BD 3 (concordant),
        // CD gap 1 (discordant).
        // eps = 0: AB and CD wrong -> 4/6.
        // eps = 1: AB tied correctly, CD tied against a human preference -> 5/6.
        // eps >= 3: concordant pairs start turning into wrong ties.
        let r = acc_eq_star(&s).unwrap();
        assert_eq!((r.accuracy, r.epsilon), acc_oracle(&s));
        assert_eq!((r.accuracy, r.epsilon), (5.0 / 6.0, 1.0));
    }

    #[test]
    fn acc_prefers_calibrated_ties() {
        // Metric has small noise where humans tie.
        let s = vec![
            seg("1", "A", -1.0, -1.0),
            seg("1", "B", -1.5, -1.0),
            seg("2", "A", -1.0, -5.0),
            seg("2", "B", -6.0, -10.0),
        ];
        let r = acc_eq_star(&s).unwrap();
        assert_eq!((r.accuracy, r.epsilon), (1.0, 0.5));
    }

    #[test]
    fn acc_no_pairs() {
        assert_eq!(acc_eq_star(&[seg("1", "A", 0.0, 0.0)]), Err(MetricsError::NoComparablePairs));
    }

    proptest! {
        #[test]
        fn acc_matches_oracle(raw in proptest::collection::vec((0u8..4, 0u8..4, -6i32..1, -6i32..1), 2..30)) {
            let s: Vec<ScoredSegment> = raw
                .iter()
                .map(|&(id, sys, m, h)| seg(&id.to_string(), &sys.to_string(), m as f64 * 0.5, h as f64))
                .collect();
            match acc_eq_star(&s) {
                Ok(r) => {
                    let (acc, eps) = acc_oracle(&s);
                    prop_assert_eq!(r.accuracy, acc);
                    prop_assert_eq!(r.epsilon, eps);
                    prop_assert!((0.0..=1.0).contains(&r.accuracy));
                }
                Err(e) => prop_assert_eq!(e, MetricsError::NoComparablePairs),
            }
        }

        #[test]
        fn acc_at_zero_invariant_to_monotone_transform(raw in proptest::collection::vec((0u8..3, 0u8..4, -6i32..1, -6i32..1), 2..30)) {
            let s: Vec<ScoredSegment> = raw
                .iter()
                .map(|&(id, sys, m, h)| seg(&id.to_string(), &sys.to_string(), m as f64, h as f64))
                .collect();
            // Strictly increasing, non-affine.
            let t: Vec<ScoredSegment> = s
                .iter()
                .map(|x| ScoredSegment { metric_score: x.metric_score * x.metric_score.abs() + 7.0 * x.metric_score, ..x.clone() })
                .collect();
            let at_zero = |segs: &[ScoredSegment]| {
                let pairs = comparable_pairs(segs);
                let ok = pairs
                    .iter()
                    .filter(|p| if p.gap == 0.0 { p.human == Ordering::Equal } else { p.human == p.metric })
                    .count();
                (ok, pairs.len())
            };
            prop_assert_eq!(at_zero(&s), at_zero(&t));
        }
    }

    #[test]
    fn corpus_scores() {
        let a = Annotation::new(6, [ErrorSpan::major(0, 2)]).unwrap();
        let e = Annotation::empty(6);
        let cfg = UtilityConfig::default();
        assert_eq!(corpus_span_scores(&[(&a, Some(&a)), (&e, Some(&e))], &cfg).unwrap(), (1.0, 1.0));
        let (_, hard) = corpus_span_scores(&[(&a, Some(&a)), (&a, Some(&e))], &cfg).unwrap();
        assert_eq!(hard, 0.5);
        assert_eq!(corpus_span_scores(&[(&a, None)], &cfg), Err(MetricsError::MissingHumanAnnotation { index: 0 }));
    }

    #[test]
    fn distribution() {
        let d = span_distribution([Annotation::empty(3), Annotation::empty(4)].iter());
        assert_eq!(d, SpanDistribution { major: 0, minor: 0, ratio: None });

        let a = Annotation::new(
            20,
            (0..3).map(|i| ErrorSpan::major(i, i + 1)).chain((5..11).map(|i| ErrorSpan::minor(i, i + 1))),
        )
        .unwrap();
        assert_eq!(span_distribution([a].iter()), SpanDistribution { major: 3, minor: 6, ratio: Some(0.5) });

        let r = SpanDistribution::from_counts(9000, 15500).ratio.unwrap();
        assert!((r - 0.58).abs() < 0.005);
    }

    #[test]
    fn evaluate_identity() {
        let anns = [
            Annotation::new(8, [ErrorSpan::major(0, 2)]).unwrap(),
            Annotation::new(8, [ErrorSpan::minor(3, 5)]).unwrap(),
            Annotation::empty(8),
        ];
        let mut records = Vec::new();
        for (i, id) in ["s1", "s2", "s3"].iter().enumerate() {
            for (j, sys) in ["A", "B"].iter().enumerate() {
                let a = &anns[(i + j) % 3];
                records.push(EvalRecord { id, system: sys, lang_pair: "en-de", selected: a, human: a });
            }
        }
        let report = evaluate(&records, &UtilityConfig::default(), &SigConfig::default()).unwrap();
        for level in [&report.overall, &report.pooled, &report.by_lang_pair["en-de"]] {
            assert_eq!(level.spa, Some(1.0));
            assert_eq!(level.acc_eq_star, Some(1.0));
            assert_eq!(level.soft_f1, 1.0);
            assert_eq!(level.f1, 1.0);
        }
        assert_eq!(report.by_lang_pair["en-de"].epsilon_star, Some(0.0));
        assert_eq!(report.span_distribution, report.human_span_distribution);
    }
}
