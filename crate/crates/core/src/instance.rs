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

use alloc::string::String;
use alloc::vec::Vec;

use crate::span::Annotation;

/// One sampled annotation, with the model's log-likelihood when known.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub annotation: Annotation,
    /// Natural-log likelihood of the sample under the model.
    pub log_likelihood: Option<f64>,
    /// The model output this hypothesis was parsed from.
    pub raw_text: Option<String>,
}

impl Hypothesis {
    pub fn new(annotation: Annotation) -> Self {
        Hypothesis { annotation, log_likelihood: None, raw_text: None }
    }

    pub fn with_log_likelihood(mut self, log_likelihood: f64) -> Self {
        self.log_likelihood = Some(log_likelihood);
        self
    }

    pub fn with_raw_text(mut self, raw: impl Into<String>) -> Self {
        self.raw_text = Some(raw.into());
        self
    }
}

/// A (source, translation) pair with its human annotation and hypotheses.
///
/// `id` identifies the source segment and is shared by every system that
/// translated it; `(system, id)` is the unique key of an instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: String,
    pub system: String,
    pub lang_pair: String,
    pub source: String,
    pub translation: String,
    pub human: Option<Annotation>,
    pub candidates: Vec<Hypothesis>,
    /// Separate support set; `None` means the candidates double as support.
    pub support: Option<Vec<Hypothesis>>,
}

impl Instance {
    /// Character count of the translation.
    pub fn translation_len(&self) -> usize {
        self.translation.chars().count()
    }

    pub fn support_or_candidates(&self) -> &[Hypothesis] {
        self.support.as_deref().unwrap_or(&self.candidates)
    }
}
