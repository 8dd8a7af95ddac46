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

//! Error spans and the annotation algebra the utilities consume.
//!
//! Spans are stored as half-open intervals over the Unicode scalar values of
//! the translation. The math works on per-character marks: each position
//! carries a major bit and a minor bit, which is exactly the pair of index
//! sets `E^maj`, `E^min`.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Error severity. `critical` labels are folded into [`Severity::Major`]
/// before an annotation is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Severity {
    Major,
    Minor,
}

impl Severity {
    /// Parses an MQM severity label, case-insensitively.
    ///
    /// `critical` maps to `Major`. Returns `None` for anything else.
    pub fn from_label(label: &str) -> Option<Severity> {
        let label = label.trim();
        if label.eq_ignore_ascii_case("major") || label.eq_ignore_ascii_case("critical") {
            Some(Severity::Major)
        } else if label.eq_ignore_ascii_case("minor") {
            Some(Severity::Minor)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Major => "major",
            Severity::Minor => "minor",
        }
    }

    pub(crate) fn mark_bit(self) -> u8 {
        match self {
            Severity::Major => MAJOR_BIT,
            Severity::Minor => MINOR_BIT,
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub(crate) const MAJOR_BIT: u8 = 0b01;
pub(crate) const MINOR_BIT: u8 = 0b10;

/// A severity-tagged half-open character interval `[start, end)`.
///
/// `category` is the MQM error category as emitted by the annotator. It is
/// carried through IO untouched and ignored by every score.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ErrorSpan {
    pub start: usize,
    pub end: usize,
    pub severity: Severity,
    pub category: Option<String>,
}

impl ErrorSpan {
    pub fn new(start: usize, end: usize, severity: Severity) -> Self {
        ErrorSpan { start, end, severity, category: None }
    }

    pub fn major(start: usize, end: usize) -> Self {
        Self::new(start, end, Severity::Major)
    }

    pub fn minor(start: usize, end: usize) -> Self {
        Self::new(start, end, Severity::Minor)
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }

    /// Number of characters covered.
    pub fn width(&self) -> usize {
        self.end - self.start
    }

    fn same_interval(&self, other: &ErrorSpan) -> bool {
        self.start == other.start && self.end == other.end && self.severity == other.severity
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpanError {
    #[error("span [{start}, {end}) is not a non-empty interval within a translation of {len} characters")]
    OutOfRange { start: usize, end: usize, len: usize },
}

/// A set of error spans over a translation of `translation_len` characters.
///
/// Construction validates every span and drops exact duplicates (same start,
/// end and severity; the first occurrence's category is kept). Overlapping
/// spans are otherwise kept as given.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    spans: Vec<ErrorSpan>,
    translation_len: usize,
}

impl Annotation {
    pub fn new(translation_len: usize, spans: impl IntoIterator<Item = ErrorSpan>) -> Result<Self, SpanError> {
        let mut kept: Vec<ErrorSpan> = Vec::new();
        for span in spans {
            if span.start >= span.end || span.end > translation_len {
                return Err(SpanError::OutOfRange { start: span.start, end: span.end, len: translation_len });
            }
            if !kept.iter().any(|k| k.same_interval(&span)) {
                kept.push(span);
            }
        }
        Ok(Annotation { spans: kept, translation_len })
    }

    /// The annotation with no errors.
    pub fn empty(translation_len: usize) -> Self {
        Annotation { spans: Vec::new(), translation_len }
    }

    pub fn translation_len(&self) -> usize {
        self.translation_len
    }

    pub fn spans(&self) -> &[ErrorSpan] {
        &self.spans
    }

    /// True when the annotation has no spans.
    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Per-character severity marks: bit 0 is major, bit 1 is minor.
    ///
    /// Built with a difference array per severity, so the cost is
    /// `O(L + spans)` regardless of overlap.
    pub fn marks(&self) -> Vec<u8> {
        let len = self.translation_len;
        let mut major_delta = vec![0i32; len + 1];
        let mut minor_delta = vec![0i32; len + 1];
        for span in &self.spans {
            let delta = match span.severity {
                Severity::Major => &mut major_delta,
                Severity::Minor => &mut minor_delta,
            };
            delta[span.start] += 1;
            delta[span.end] -= 1;
        }
        let mut marks = Vec::with_capacity(len);
        let (mut major_depth, mut minor_depth) = (0i32, 0i32);
        for i in 0..len {
            major_depth += major_delta[i];
            minor_depth += minor_delta[i];
            let mut m = 0u8;
            if major_depth > 0 {
                m |= Severity::Major.mark_bit();
            }
            if minor_depth > 0 {
                m |= Severity::Minor.mark_bit();
            }
            marks.push(m);
        }
        marks
    }

    /// The character index sets covered by major and by minor spans.
    pub fn index_sets(&self) -> IndexSets {
        let mut sets = IndexSets::default();
        for (i, m) in self.marks().into_iter().enumerate() {
            if m & MAJOR_BIT != 0 {
                sets.major.insert(i);
            }
            if m & MINOR_BIT != 0 {
                sets.minor.insert(i);
            }
        }
        sets
    }

    /// Dense per-character penalty vector with `major` on major positions
    /// and `minor` on minor positions (summed where both apply).
    pub fn severity_vector(&self, major: f64, minor: f64) -> SeverityVector {
        let values = self.marks().into_iter().map(|m| mark_penalty(m, major, minor)).collect();
        SeverityVector { values }
    }

    /// Number of distinct spans per severity.
    pub fn count_spans(&self) -> SpanCounts {
        let major = self.spans.iter().filter(|s| s.severity == Severity::Major).count();
        SpanCounts { major, minor: self.spans.len() - major }
    }

    /// Whether both annotations mark exactly the same characters with the
    /// same severities. Categories and span boundaries are ignored.
    pub fn same_marks(&self, other: &Annotation) -> bool {
        self.translation_len == other.translation_len && self.marks() == other.marks()
    }
}

#[inline]
pub(crate) fn mark_penalty(mark: u8, major: f64, minor: f64) -> f64 {
    let mut v = 0.0;
    if mark & MAJOR_BIT != 0 {
        v += major;
    }
    if mark & MINOR_BIT != 0 {
        v += minor;
    }
    v
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexSets {
    pub major: BTreeSet<usize>,
    pub minor: BTreeSet<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpanCounts {
    pub major: usize,
    pub minor: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeverityVector {
    pub values: Vec<f64>,
}

impl SeverityVector {
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// `‖self − other‖₁`. Panics if the lengths differ.
    pub fn l1_distance(&self, other: &SeverityVector) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "severity vectors over different translations");
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}
