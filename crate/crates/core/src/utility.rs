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

//! The MQM score and the three pairwise utilities.
//!
//! All utilities are symmetric, lie in `[0, 1]`, and return 1 for identical
//! annotations. They operate on per-character marks, so callers that score
//! many pairs should build [`PreparedAnnotation`]s once and use
//! [`PreparedAnnotation::utility`].

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::span::{mark_penalty, Annotation, MAJOR_BIT, MINOR_BIT};

/// Weights shared by the MQM score, the F1 credits, and the severity vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct UtilityConfig {
    /// Score weight per major span (negative).
    pub major_weight: f64,
    /// Score weight per minor span (negative).
    pub minor_weight: f64,
    /// Lower bound of the MQM score (negative).
    pub score_floor: f64,
    /// Per-character penalty for major errors.
    pub major_penalty: f64,
    /// Per-character penalty for minor errors.
    pub minor_penalty: f64,
}

impl Default for UtilityConfig {
    fn default() -> Self {
        UtilityConfig {
            major_weight: -5.0,
            minor_weight: -1.0,
            score_floor: -25.0,
            major_penalty: 1.0,
            minor_penalty: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("severity weights must be negative (major {major}, minor {minor})")]
    NonNegativeWeight { major: f64, minor: f64 },
    #[error("score floor must be negative, got {0}")]
    NonNegativeFloor(f64),
    #[error("character penalties must satisfy major >= minor > 0 (major {major}, minor {minor})")]
    BadPenalties { major: f64, minor: f64 },
}

impl UtilityConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite_neg = |x: f64| x.is_finite() && x < 0.0;
        if !finite_neg(self.major_weight) || !finite_neg(self.minor_weight) {
            return Err(ConfigError::NonNegativeWeight { major: self.major_weight, minor: self.minor_weight });
        }
        if !finite_neg(self.score_floor) {
            return Err(ConfigError::NonNegativeFloor(self.score_floor));
        }
        if !(self.minor_penalty.is_finite()
            && self.major_penalty.is_finite()
            && self.minor_penalty > 0.0
            && self.major_penalty >= self.minor_penalty)
        {
            return Err(ConfigError::BadPenalties { major: self.major_penalty, minor: self.minor_penalty });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum UtilityKind {
    ScoreSim,
    F1,
    SoftF1,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 3] = [UtilityKind::ScoreSim, UtilityKind::F1, UtilityKind::SoftF1];

    pub fn as_str(self) -> &'static str {
        match self {
            UtilityKind::ScoreSim => "scoresim",
            UtilityKind::F1 => "f1",
            UtilityKind::SoftF1 => "softf1",
        }
    }
}

impl fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown utility `{0}` (expected scoresim, f1 or softf1)")]
pub struct UnknownUtility(pub alloc::string::String);

impl FromStr for UtilityKind {
    type Err = UnknownUtility;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "scoresim" | "score_sim" | "score-sim" => Ok(UtilityKind::ScoreSim),
            "f1" => Ok(UtilityKind::F1),
            "softf1" | "soft_f1" | "soft-f1" => Ok(UtilityKind::SoftF1),
            _ => Err(UnknownUtility(s.into())),
        }
    }
}

/// `max(w_maj · N^maj + w_min · N^min, α)` over distinct span counts.
pub fn mqm_score(a: &Annotation, cfg: &UtilityConfig) -> f64 {
    let counts = a.count_spans();
    score_from_counts(counts.major, counts.minor, cfg)
}

pub(crate) fn score_from_counts(major: usize, minor: usize, cfg: &UtilityConfig) -> f64 {
    let raw = cfg.major_weight * major as f64 + cfg.minor_weight * minor as f64;
    raw.max(cfg.score_floor)
}

/// One minus the MQM score gap, normalised by `|α|`.
pub fn score_sim(c: &Annotation, s: &Annotation, cfg: &UtilityConfig) -> f64 {
    score_sim_from_scores(mqm_score(c, cfg), mqm_score(s, cfg), cfg)
}

fn score_sim_from_scores(c: f64, s: f64, cfg: &UtilityConfig) -> f64 {
    1.0 - (c - s).abs() / cfg.score_floor.abs()
}

/// Character-level F1 with severity-graded true-positive credit.
///
/// Returns 1 when both annotations are empty and 0 when exactly one is.
pub fn f1(c: &Annotation, s: &Annotation, cfg: &UtilityConfig) -> f64 {
    f1_from_marks(&c.marks(), &s.marks(), cfg)
}

fn f1_from_marks(c: &[u8], s: &[u8], cfg: &UtilityConfig) -> f64 {
    debug_assert_eq!(c.len(), s.len());
    let (beta, gamma) = (cfg.major_penalty, cfg.minor_penalty);
    let mut credit = 0.0;
    let (mut covered_c, mut covered_s) = (0usize, 0usize);
    for (&mc, &ms) in c.iter().zip(s) {
        covered_c += (mc != 0) as usize;
        covered_s += (ms != 0) as usize;
        if mc == 0 || ms == 0 {
            continue;
        }
        let (maj_c, min_c) = (bit(mc, MAJOR_BIT), bit(mc, MINOR_BIT));
        let (maj_s, min_s) = (bit(ms, MAJOR_BIT), bit(ms, MINOR_BIT));
        credit +=
            (beta * maj_c * maj_s).max(beta * min_c * min_s).max(gamma * maj_c * min_s).max(gamma * min_c * maj_s);
    }
    if covered_c == 0 && covered_s == 0 {
        return 1.0;
    }
    let precision = if covered_c > 0 { credit / covered_c as f64 } else { 0.0 };
    let recall = if covered_s > 0 { credit / covered_s as f64 } else { 0.0 };
    harmonic_mean(precision, recall)
}

#[inline]
fn bit(mark: u8, mask: u8) -> f64 {
    if mark & mask != 0 {
        1.0
    } else {
        0.0
    }
}

/// Harmonic mean, 0 when both inputs are 0.
fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r <= 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Harmonic mean of soft precision and soft recall over severity vectors.
///
/// Both denominators carry `L + 1` so empty translations are defined.
/// Soft precision and recall are floored at 0 before averaging.
pub fn soft_f1(c: &Annotation, s: &Annotation, cfg: &UtilityConfig) -> f64 {
    let pc = PreparedAnnotation::new(c, cfg);
    let ps = PreparedAnnotation::new(s, cfg);
    soft_f1_prepared(&pc, &ps, cfg)
}

fn soft_f1_prepared(c: &PreparedAnnotation, s: &PreparedAnnotation, cfg: &UtilityConfig) -> f64 {
    debug_assert_eq!(c.marks.len(), s.marks.len());
    let (beta, gamma) = (cfg.major_penalty, cfg.minor_penalty);
    let distance: f64 = c
        .marks
        .iter()
        .zip(&s.marks)
        .map(|(&mc, &ms)| (mark_penalty(mc, beta, gamma) - mark_penalty(ms, beta, gamma)).abs())
        .sum();
    let base = c.marks.len() as f64 + 1.0;
    let precision = (1.0 - distance / (base + c.l1)).max(0.0);
    let recall = (1.0 - distance / (base + s.l1)).max(0.0);
    harmonic_mean(precision, recall)
}

/// Dispatches to the selected utility.
pub fn utility(kind: UtilityKind, c: &Annotation, s: &Annotation, cfg: &UtilityConfig) -> f64 {
    match kind {
        UtilityKind::ScoreSim => score_sim(c, s, cfg),
        UtilityKind::F1 => f1(c, s, cfg),
        UtilityKind::SoftF1 => soft_f1(c, s, cfg),
    }
}

/// An annotation with its marks, MQM score and severity norm precomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedAnnotation {
    marks: Vec<u8>,
    score: f64,
    l1: f64,
}

impl PreparedAnnotation {
    pub fn new(a: &Annotation, cfg: &UtilityConfig) -> Self {
        let marks = a.marks();
        let l1 = marks.iter().map(|&m| mark_penalty(m, cfg.major_penalty, cfg.minor_penalty)).sum();
        PreparedAnnotation { marks, score: mqm_score(a, cfg), l1 }
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn severity_l1(&self) -> f64 {
        self.l1
    }

    pub fn marks(&self) -> &[u8] {
        &self.marks
    }

    pub fn has_major(&self) -> bool {
        self.marks.iter().any(|m| m & MAJOR_BIT != 0)
    }

    pub fn has_minor(&self) -> bool {
        self.marks.iter().any(|m| m & MINOR_BIT != 0)
    }

    /// `utility(kind, self, support)`; `cfg` must be the one used to prepare
    /// both sides.
    pub fn utility(&self, kind: UtilityKind, support: &PreparedAnnotation, cfg: &UtilityConfig) -> f64 {
        match kind {
            UtilityKind::ScoreSim => score_sim_from_scores(self.score, support.score, cfg),
            UtilityKind::F1 => f1_from_marks(&self.marks, &support.marks, cfg),
            UtilityKind::SoftF1 => soft_f1_prepared(self, support, cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::{ErrorSpan, Severity};
    use alloc::vec;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    fn ann(len: usize, spans: &[ErrorSpan]) -> Annotation {
        Annotation::new(len, spans.iter().cloned()).unwrap()
    }

    fn cfg() -> UtilityConfig {
        UtilityConfig::default()
    }

    #[test]
    fn default_config_is_valid() {
        cfg().validate().unwrap();
        let bad = UtilityConfig { score_floor: 0.0, ..cfg() };
        assert!(bad.validate().is_err());
        let bad = UtilityConfig { major_penalty: 0.2, ..cfg() };
        assert!(bad.validate().is_err());
        let bad = UtilityConfig { minor_weight: 1.0, ..cfg() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mqm_score_examples() {
        assert_eq!(mqm_score(&Annotation::empty(20), &cfg()), 0.0);
        let a = ann(20, &[ErrorSpan::major(0, 2), ErrorSpan::minor(3, 4), ErrorSpan::minor(5, 6)]);
        assert_eq!(mqm_score(&a, &cfg()), -7.0);
        let six: Vec<ErrorSpan> = (0..6).map(|i| ErrorSpan::major(2 * i, 2 * i + 1)).collect();
        assert_eq!(mqm_score(&ann(20, &six), &cfg()), -25.0);
    }

    #[test]
    fn score_sim_examples() {
        let a = ann(20, &[ErrorSpan::major(0, 2)]);
        assert_eq!(score_sim(&a, &a, &cfg()), 1.0);
        let minors: Vec<ErrorSpan> = (0..2).map(|i| ErrorSpan::minor(2 * i, 2 * i + 1)).collect();
        // -5 vs -2
        assert!((score_sim(&a, &ann(20, &minors), &cfg()) - 0.88).abs() < EPS);
        let floor: Vec<ErrorSpan> = (0..5).map(|i| ErrorSpan::major(2 * i, 2 * i + 1)).collect();
        assert_eq!(score_sim(&Annotation::empty(20), &ann(20, &floor), &cfg()), 0.0);
    }

    #[test]
    fn f1_examples() {
        let empty = Annotation::empty(10);
        assert_eq!(f1(&empty, &empty, &cfg()), 1.0);
        let c = ann(10, &[ErrorSpan::minor(0, 1)]);
        assert_eq!(f1(&c, &empty, &cfg()), 0.0);
        assert_eq!(f1(&empty, &c, &cfg()), 0.0);

        let c = ann(5, &[ErrorSpan::major(1, 4)]);
        let s = ann(5, &[ErrorSpan::major(2, 5)]);
        assert!((f1(&c, &s, &cfg()) - 2.0 / 3.0).abs() < EPS);

        let c = ann(4, &[ErrorSpan::major(0, 2)]);
        let s = ann(4, &[ErrorSpan::minor(0, 2)]);
        assert!((f1(&c, &s, &cfg()) - 0.5).abs() < EPS);
    }

    #[test]
    fn f1_disjoint_spans_score_zero() {
        let c = ann(6, &[ErrorSpan::major(0, 2)]);
        let s = ann(6, &[ErrorSpan::major(3, 5)]);
        assert_eq!(f1(&c, &s, &cfg()), 0.0);
    }

    #[test]
    fn soft_f1_defect_pair() {
        // L = 10, candidate marks two minor characters, support is empty.
        let c = ann(10, &[ErrorSpan::minor(0, 2)]);
        let s = Annotation::empty(10);
        // With L + 1 denominators: P = 1 - 1/12, R = 1 - 1/11, F1 = 220/241.
        assert!((soft_f1(&c, &s, &cfg()) - 220.0 / 241.0).abs() < EPS);
        assert_eq!(f1(&c, &s, &cfg()), 0.0);
    }

    #[test]
    fn soft_f1_empty_translation() {
        let e = Annotation::empty(0);
        assert_eq!(soft_f1(&e, &e, &cfg()), 1.0);
    }

    #[test]
    fn soft_precision_floors_at_zero() {
        // Support marks every character as both major and minor; candidate is empty.
        let len = 40;
        let s = ann(len, &[ErrorSpan::major(0, len), ErrorSpan::minor(0, len)]);
        let c = Annotation::empty(len);
        // Distance 60 exceeds L + 1 = 41, so raw precision is negative while
        // recall 1 - 60/101 stays positive; the floored harmonic mean is 0.
        assert_eq!(soft_f1(&c, &s, &cfg()), 0.0);
        assert_eq!(soft_f1(&s, &c, &cfg()), 0.0);
    }

    #[test]
    fn identity_is_one_for_every_kind() {
        let a = ann(12, &[ErrorSpan::major(0, 3), ErrorSpan::minor(2, 7)]);
        for kind in UtilityKind::ALL {
            assert_eq!(utility(kind, &a, &a, &cfg()), 1.0, "{kind}");
        }
    }

    #[test]
    fn utility_kind_parses() {
        assert_eq!("SoftF1".parse::<UtilityKind>().unwrap(), UtilityKind::SoftF1);
        assert_eq!("scoresim".parse::<UtilityKind>().unwrap(), UtilityKind::ScoreSim);
        assert!("bleu".parse::<UtilityKind>().is_err());
    }

    fn arb_pair() -> impl Strategy<Value = (Annotation, Annotation)> {
        (0usize..25).prop_flat_map(|len| {
            let one = move || {
                proptest::collection::vec((0..len.max(1), 1usize..6, any::<bool>()), 0..5).prop_map(move |raw| {
                    let spans = raw.into_iter().filter(|_| len > 0).map(|(s, w, m)| {
                        ErrorSpan::new(s, (s + w).min(len), if m { Severity::Major } else { Severity::Minor })
                    });
                    Annotation::new(len, spans).unwrap()
                })
            };
            (one(), one())
        })
    }

    proptest! {
        #[test]
        fn utilities_symmetric_and_bounded((a, b) in arb_pair()) {
            for kind in UtilityKind::ALL {
                let ab = utility(kind, &a, &b, &cfg());
                let ba = utility(kind, &b, &a, &cfg());
                prop_assert!((ab - ba).abs() < EPS, "{} not symmetric", kind);
                prop_assert!((0.0..=1.0).contains(&ab), "{} out of range: {}", kind, ab);
                prop_assert_eq!(utility(kind, &a, &a, &cfg()), 1.0);
            }
        }

        #[test]
        fn soft_f1_is_one_only_for_equal_vectors((a, b) in arb_pair()) {
            let equal = a.severity_vector(1.0, 0.5) == b.severity_vector(1.0, 0.5);
            prop_assert_eq!(soft_f1(&a, &b, &cfg()) == 1.0, equal);
        }

        #[test]
        fn non_empty_vs_empty_keeps_soft_f1_positive(len in 1usize..40, start in 0usize..40, width in 1usize..10) {
            let start = start % len;
            let end = (start + width).min(len);
            let c = Annotation::new(len, [ErrorSpan::minor(start, end)]).unwrap();
            let s = Annotation::empty(len);
            prop_assume!(c.severity_vector(1.0, 0.5).l1_norm() < len as f64);
            prop_assert!(soft_f1(&c, &s, &cfg()) > 0.0);
            prop_assert_eq!(f1(&c, &s, &cfg()), 0.0);
        }

        #[test]
        fn score_monotone_in_span_counts(major in 0usize..8, minor in 0usize..8) {
            let c = cfg();
            let base = score_from_counts(major, minor, &c);
            prop_assert!(score_from_counts(major + 1, minor, &c) <= base);
            prop_assert!(score_from_counts(major, minor + 1, &c) <= base);
            prop_assert!((c.score_floor..=0.0).contains(&base));
        }

        #[test]
        fn prepared_matches_direct((a, b) in arb_pair()) {
            let c = cfg();
            let pa = PreparedAnnotation::new(&a, &c);
            let pb = PreparedAnnotation::new(&b, &c);
            for kind in UtilityKind::ALL {
                prop_assert_eq!(pa.utility(kind, &pb, &c), utility(kind, &a, &b, &c));
            }
        }
    }

    #[test]
    fn prepared_exposes_norms() {
        let a = ann(4, &[ErrorSpan::major(0, 2), ErrorSpan::minor(1, 3)]);
        let p = PreparedAnnotation::new(&a, &cfg());
        assert_eq!(p.severity_l1(), 3.0);
        assert_eq!(p.score(), -6.0);
        assert!(p.has_major() && p.has_minor());
        assert_eq!(p.marks(), &vec![1u8, 3, 2, 0][..]);
    }
}
