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

//! Preference pairs for MBR distillation.
//!
//! The candidate with the highest MBR score (candidates as their own
//! support) is preferred and the one with the lowest is rejected.

use alloc::string::String;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::mbr::{mbr_scores, DecodeError, MbrOptions};
use crate::utility::{UtilityConfig, UtilityKind};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PreferencePair {
    pub id: String,
    pub system: String,
    pub preferred: usize,
    pub rejected: usize,
    /// MBR score of `preferred` minus that of `rejected`; always positive.
    pub utility_gap: f64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DistillError {
    #[error("instance `{id}` has {count} candidate(s); at least two are needed")]
    TooFewCandidates { id: String, count: usize },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Returns `None` when the best and worst MBR scores differ by no more than
/// `min_gap` (in particular when every candidate ties).
pub fn build_pairs(
    inst: &Instance,
    kind: UtilityKind,
    cfg: &UtilityConfig,
    min_gap: f64,
) -> Result<Option<PreferencePair>, DistillError> {
    let count = inst.candidates.len();
    if count < 2 {
        return Err(DistillError::TooFewCandidates { id: inst.id.clone(), count });
    }
    let scores = mbr_scores(&inst.candidates, None, kind, cfg, MbrOptions::default())?;
    let (mut best, mut worst) = (0, 0);
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
        if s < scores[worst] {
            worst = i;
        }
    }
    let gap = scores[best] - scores[worst];
    if gap <= 0.0 || gap <= min_gap {
        return Ok(None);
    }
    Ok(Some(PreferencePair {
        id: inst.id.clone(),
        system: inst.system.clone(),
        preferred: best,
        rejected: worst,
        utility_gap: gap,
    }))
}
