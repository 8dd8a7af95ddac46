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

//! Decision rules over a candidate set: greedy, MAP, MBR and oracle MBR.
//!
//! Every rule produces one score per candidate and selects the argmax. Ties
//! go to the lowest index, i.e. the earliest generated candidate.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::instance::Hypothesis;
use crate::span::Annotation;
use crate::utility::{PreparedAnnotation, UtilityConfig, UtilityKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "rule", content = "utility", rename_all = "lowercase"))]
pub enum DecisionRule {
    /// Single-candidate passthrough (N = 1).
    Greedy,
    Map,
    Mbr(UtilityKind),
    #[cfg_attr(feature = "serde", serde(rename = "oracle"))]
    OracleMbr(UtilityKind),
}

impl DecisionRule {
    pub fn utility_kind(&self) -> Option<UtilityKind> {
        match self {
            DecisionRule::Mbr(k) | DecisionRule::OracleMbr(k) => Some(*k),
            DecisionRule::Greedy | DecisionRule::Map => None,
        }
    }

    /// Short rule name as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            DecisionRule::Greedy => "greedy",
            DecisionRule::Map => "map",
            DecisionRule::Mbr(_) => "mbr",
            DecisionRule::OracleMbr(_) => "oracle",
        }
    }

    /// Builds a rule from its command-line name. MBR rules need `utility`.
    pub fn from_parts(name: &str, utility: Option<UtilityKind>) -> Option<DecisionRule> {
        match (name.to_ascii_lowercase().as_str(), utility) {
            ("greedy", _) => Some(DecisionRule::Greedy),
            ("map", _) => Some(DecisionRule::Map),
            ("mbr", Some(k)) => Some(DecisionRule::Mbr(k)),
            ("oracle", Some(k)) => Some(DecisionRule::OracleMbr(k)),
            _ => None,
        }
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.utility_kind() {
            Some(k) => write!(f, "{}-{}", self.name(), k),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for DecisionRule {
    type Err = DecodeError;

    /// Accepts `greedy`, `map`, `mbr-<utility>` and `oracle-<utility>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, utility) = match s.split_once('-') {
            Some((n, u)) => (n, Some(u.parse::<UtilityKind>().map_err(|_| DecodeError::UnknownRule)?)),
            None => (s, None),
        };
        DecisionRule::from_parts(name, utility).ok_or(DecodeError::UnknownRule)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("no candidates to choose from")]
    NoCandidates,
    #[error("empty support set")]
    NoSupport,
    #[error("candidate {index} has no log-likelihood")]
    MissingLikelihood { index: usize },
    #[error("candidate {index} has a non-finite log-likelihood")]
    NonFiniteLikelihood { index: usize },
    #[error("oracle selection needs a human annotation")]
    MissingHumanAnnotation,
    #[error("greedy selection takes exactly one candidate, got {count}")]
    GreedyNeedsOneCandidate { count: usize },
    #[error("annotations cover translations of different lengths ({expected} vs {found})")]
    LengthMismatch { expected: usize, found: usize },
    #[error("unknown decision rule")]
    UnknownRule,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DecisionResult {
    pub selected: usize,
    pub scores: Vec<f64>,
    pub rule: DecisionRule,
    /// Another candidate reached the selected score exactly.
    pub tie_broken: bool,
}

fn argmax(scores: &[f64]) -> (usize, bool) {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    let tie = scores.iter().enumerate().any(|(i, &s)| i != best && s == scores[best]);
    (best, tie)
}

fn decide(scores: Vec<f64>, rule: DecisionRule) -> DecisionResult {
    let (selected, tie_broken) = argmax(&scores);
    DecisionResult { selected, scores, rule, tie_broken }
}

/// The only candidate, for single-sample runs.
pub fn greedy_select(cands: &[Hypothesis]) -> Result<DecisionResult, DecodeError> {
    if cands.len() != 1 {
        return Err(DecodeError::GreedyNeedsOneCandidate { count: cands.len() });
    }
    Ok(decide(alloc::vec![0.0], DecisionRule::Greedy))
}

/// Highest log-likelihood.
///
/// Candidates marking the same characters with the same severities are one
/// annotation; each of them is scored with the largest log-likelihood seen
/// for that annotation, so duplicates tie and the first occurrence wins.
pub fn map_select(cands: &[Hypothesis]) -> Result<DecisionResult, DecodeError> {
    if cands.is_empty() {
        return Err(DecodeError::NoCandidates);
    }
    let mut likelihoods = Vec::with_capacity(cands.len());
    for (index, h) in cands.iter().enumerate() {
        match h.log_likelihood {
            None => return Err(DecodeError::MissingLikelihood { index }),
            Some(ll) if !ll.is_finite() => return Err(DecodeError::NonFiniteLikelihood { index }),
            Some(ll) => likelihoods.push(ll),
        }
    }
    let marks: Vec<Vec<u8>> = cands.iter().map(|h| h.annotation.marks()).collect();
    let mut best_by_marks: BTreeMap<&[u8], f64> = BTreeMap::new();
    for (m, &ll) in marks.iter().zip(&likelihoods) {
        best_by_marks.entry(m.as_slice()).and_modify(|b| *b = b.max(ll)).or_insert(ll);
    }
    let scores = marks.iter().map(|m| best_by_marks[m.as_slice()]).collect();
    Ok(decide(scores, DecisionRule::Map))
}

/// Dense row-major `|C| × |S|` matrix of utilities.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl UtilityMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Mean of each row. Entries are summed in ascending order, so the
    /// result does not depend on the order of the support set.
    pub fn row_means(&self) -> Vec<f64> {
        (0..self.rows).map(|r| order_free_mean(self.row(r).iter().copied())).collect()
    }
}

fn order_free_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sorted: Vec<f64> = values.collect();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

fn check_lengths<'a>(all: impl IntoIterator<Item = &'a Annotation>) -> Result<(), DecodeError> {
    let mut expected = None;
    for a in all {
        let len = a.translation_len();
        match expected {
            None => expected = Some(len),
            Some(e) if e != len => return Err(DecodeError::LengthMismatch { expected: e, found: len }),
            Some(_) => {}
        }
    }
    Ok(())
}

/// `entry(i, j) = utility(kind, cands[i], supp[j])`.
///
/// With the `parallel` feature rows are computed on the rayon pool; each
/// entry is computed independently so the result does not depend on the
/// schedule.
pub fn utility_matrix(
    cands: &[Annotation],
    supp: &[Annotation],
    kind: UtilityKind,
    cfg: &UtilityConfig,
) -> Result<UtilityMatrix, DecodeError> {
    if cands.is_empty() {
        return Err(DecodeError::NoCandidates);
    }
    if supp.is_empty() {
        return Err(DecodeError::NoSupport);
    }
    check_lengths(cands.iter().chain(supp))?;
    let prepared_c: Vec<PreparedAnnotation> = cands.iter().map(|a| PreparedAnnotation::new(a, cfg)).collect();
    let prepared_s: Vec<PreparedAnnotation> = supp.iter().map(|a| PreparedAnnotation::new(a, cfg)).collect();
    Ok(prepared_matrix(&prepared_c, &prepared_s, kind, cfg))
}

pub(crate) fn prepared_matrix(
    cands: &[PreparedAnnotation],
    supp: &[PreparedAnnotation],
    kind: UtilityKind,
    cfg: &UtilityConfig,
) -> UtilityMatrix {
    let cols = supp.len();
    let mut data = alloc::vec![0.0; cands.len() * cols];
    let fill = |(c, row): (&PreparedAnnotation, &mut [f64])| {
        for (slot, s) in row.iter_mut().zip(supp) {
            *slot = c.utility(kind, s, cfg);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cands.par_iter().zip(data.par_chunks_mut(cols)).for_each(fill);
    }
    #[cfg(not(feature = "parallel"))]
    cands.iter().zip(data.chunks_mut(cols)).for_each(fill);
    UtilityMatrix { rows: cands.len(), cols, data }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MbrOptions {
    /// Drop `u(h, h)` from each row mean when candidates double as support.
    /// Off by default: the plain average includes the self term.
    pub exclude_self: bool,
}

/// Mean utility against the support set; `supp = None` uses the candidates.
pub fn mbr_select(
    cands: &[Hypothesis],
    supp: Option<&[Hypothesis]>,
    kind: UtilityKind,
    cfg: &UtilityConfig,
) -> Result<DecisionResult, DecodeError> {
    mbr_select_with(cands, supp, kind, cfg, MbrOptions::default())
}

pub fn mbr_select_with(
    cands: &[Hypothesis],
    supp: Option<&[Hypothesis]>,
    kind: UtilityKind,
    cfg: &UtilityConfig,
    opts: MbrOptions,
) -> Result<DecisionResult, DecodeError> {
    let scores = mbr_scores(cands, supp, kind, cfg, opts)?;
    Ok(decide(scores, DecisionRule::Mbr(kind)))
}

/// Expected utility of every candidate, without selecting.
pub fn mbr_scores(
    cands: &[Hypothesis],
    supp: Option<&[Hypothesis]>,
    kind: UtilityKind,
    cfg: &UtilityConfig,
    opts: MbrOptions,
) -> Result<Vec<f64>, DecodeError> {
    let cand_ann: Vec<Annotation> = cands.iter().map(|h| h.annotation.clone()).collect();
    let self_support = supp.is_none();
    let supp_ann: Vec<Annotation> = match supp {
        Some(s) => s.iter().map(|h| h.annotation.clone()).collect(),
        None => cand_ann.clone(),
    };
    let matrix = utility_matrix(&cand_ann, &supp_ann, kind, cfg)?;
    if opts.exclude_self && self_support && matrix.cols > 1 {
        Ok((0..matrix.rows)
            .map(|r| {
                let others = matrix.row(r).iter().enumerate().filter(|(j, _)| *j != r);
                order_free_mean(others.map(|(_, &u)| u))
            })
            .collect())
    } else {
        Ok(matrix.row_means())
    }
}

/// Utility against the human annotation.
pub fn oracle_select(
    cands: &[Hypothesis],
    human: Option<&Annotation>,
    kind: UtilityKind,
    cfg: &UtilityConfig,
) -> Result<DecisionResult, DecodeError> {
    let human = human.ok_or(DecodeError::MissingHumanAnnotation)?;
    if cands.is_empty() {
        return Err(DecodeError::NoCandidates);
    }
    check_lengths(cands.iter().map(|h| &h.annotation).chain(core::iter::once(human)))?;
    let reference = PreparedAnnotation::new(human, cfg);
    let scores =
        cands.iter().map(|h| PreparedAnnotation::new(&h.annotation, cfg).utility(kind, &reference, cfg)).collect();
    Ok(decide(scores, DecisionRule::OracleMbr(kind)))
}

/// Runs `rule` on one candidate set.
pub fn select(
    rule: DecisionRule,
    cands: &[Hypothesis],
    supp: Option<&[Hypothesis]>,
    human: Option<&Annotation>,
    cfg: &UtilityConfig,
    opts: MbrOptions,
) -> Result<DecisionResult, DecodeError> {
    match rule {
        DecisionRule::Greedy => greedy_select(cands),
        DecisionRule::Map => map_select(cands),
        DecisionRule::Mbr(kind) => mbr_select_with(cands, supp, kind, cfg, opts),
        DecisionRule::OracleMbr(kind) => oracle_select(cands, human, kind, cfg),
    }
}
