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

//! Turning model-emitted error text into character offsets.
//!
//! Generative annotators quote the erroneous text instead of giving offsets.
//! Each quoted span is located in the translation left to right: the first
//! occurrence at or after the end of the previously grounded span wins, and
//! if there is none the first occurrence anywhere is used. Quotes that do
//! not occur at all are dropped and counted.

use mbr_esd_core::{Annotation, ErrorSpan, Severity};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Grounded {
    pub annotation: Annotation,
    /// Quoted spans that were not found in the translation or carried an
    /// unusable severity.
    pub dropped: usize,
}

/// Severity labels that mean "no error"; such entries are ignored silently.
const NO_ERROR: [&str; 4] = ["no-error", "no_error", "none", "neutral"];

/// Removes a surrounding Markdown code fence, if any.
fn strip_fence(text: &str) -> &str {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let body = rest.split_once('\n').map_or("", |(_, b)| b);
        return body.trim_end().strip_suffix("```").unwrap_or(body).trim();
    }
    t
}

fn error_list(value: &Value) -> Option<&Vec<Value>> {
    match value {
        Value::Array(items) => Some(items),
        Value::Object(map) => map.get("errors").and_then(Value::as_array),
        _ => None,
    }
}

/// Grounds a JSON list of `{text, severity, category?}` (bare, or under an
/// `errors` key) against `tgt`.
pub fn ground_spans(model_output: &str, tgt: &str) -> Result<Grounded> {
    let value: Value =
        serde_json::from_str(strip_fence(model_output)).map_err(|e| Error::MalformedModelOutput(e.to_string()))?;
    let items = error_list(&value).ok_or_else(|| Error::MalformedModelOutput("expected a list of errors".into()))?;

    // Byte offset of every char boundary, so matches convert to char offsets.
    let boundaries: Vec<usize> = tgt.char_indices().map(|(b, _)| b).chain([tgt.len()]).collect();
    let char_at = |byte: usize| boundaries.binary_search(&byte).expect("match on a char boundary");

    let mut spans = Vec::new();
    let mut dropped = 0;
    let mut cursor = 0usize; // byte offset
    for item in items {
        let obj = item.as_object().ok_or_else(|| Error::MalformedModelOutput("error entry is not an object".into()))?;
        let label = obj.get("severity").and_then(Value::as_str).unwrap_or("").trim();
        if NO_ERROR.iter().any(|n| label.eq_ignore_ascii_case(n)) {
            continue;
        }
        let text = obj.get("text").or_else(|| obj.get("span")).and_then(Value::as_str).unwrap_or("").trim();
        let severity = match Severity::from_label(label) {
            Some(s) if !text.is_empty() => s,
            _ => {
                dropped += 1;
                continue;
            }
        };
        let found = tgt[cursor..].find(text).map(|b| b + cursor).or_else(|| tgt.find(text));
        let Some(start_byte) = found else {
            dropped += 1;
            continue;
        };
        let end_byte = start_byte + text.len();
        let mut span = ErrorSpan::new(char_at(start_byte), char_at(end_byte), severity);
        span.category = obj.get("category").and_then(Value::as_str).map(str::to_string);
        spans.push(span);
        cursor = end_byte;
    }
    let annotation = Annotation::new(boundaries.len() - 1, spans).expect("grounded spans lie inside tgt");
    Ok(Grounded { annotation, dropped })
}
