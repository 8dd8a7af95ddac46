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

//! Decision rules and meta-evaluation for generative error span detection.
//!
//! An error span detection (ESD) model labels character spans of a
//! translation as major or minor errors. Sampling such a model yields a set
//! of candidate annotations; this crate chooses among them and scores the
//! choice against human annotations.
//!
//! * [`span`] holds the annotation model: half-open character intervals with
//!   a severity, and the index-set / severity-vector views derived from them.
//! * [`utility`] implements the MQM score and the three pairwise utilities
//!   (`ScoreSim`, character-level `F1`, and `SoftF1`).
//! * [`mbr`] implements MAP, minimum Bayes risk (MBR), and oracle selection
//!   over a candidate set.
//! * [`metrics`] computes SPA, tie-calibrated pairwise accuracy, and
//!   span-level corpus scores; [`stats`] holds the significance tests.
//! * [`distill`] builds preferred/rejected pairs for MBR distillation.
//!
//! The crate is `no_std` with `alloc`. The default `std` feature enables
//! `std::error::Error` plumbing in dependencies, and `parallel` spreads the
//! utility matrix and resampling loops across a rayon pool. Results do not
//! depend on whether `parallel` is enabled.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod distill;
pub mod instance;
pub mod mbr;
pub mod metrics;
pub mod span;
pub mod stats;
pub mod utility;

pub use distill::{build_pairs, DistillError, PreferencePair};
pub use instance::{Hypothesis, Instance};
pub use mbr::{
    greedy_select, map_select, mbr_scores, mbr_select, mbr_select_with, oracle_select, select, utility_matrix,
    DecisionResult, DecisionRule, DecodeError, MbrOptions, UtilityMatrix,
};
pub use metrics::{
    acc_eq_star, corpus_span_scores, evaluate, scored_segments, spa, span_distribution, system_scores, EvalRecord,
    EvalReport, LevelScores, MetricsError, ScoredSegment, SpanDistribution, TieCalibrated,
};
pub use span::{Annotation, ErrorSpan, IndexSets, Severity, SeverityVector, SpanCounts, SpanError};
pub use stats::{paired_bootstrap, perm_both, SigConfig, StatsError};
pub use utility::{
    f1, mqm_score, score_sim, soft_f1, utility, ConfigError, PreparedAnnotation, UtilityConfig, UtilityKind,
};
