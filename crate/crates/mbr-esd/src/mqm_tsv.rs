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

//! Import of WMT-style MQM rating files.
//!
//! Each row is one error judgement (or a "no-error" row) for one system's
//! translation of one segment. The error location comes from a span-text
//! column when present, otherwise from `<v>...</v>` markers in the target.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use mbr_esd_core::{Annotation, ErrorSpan, Instance, Severity};

use crate::error::{Error, Result};

/// Header names of the columns to read. `span` and `category` may be absent
/// from the file; `lang_pair` falls back to the caller's default.
#[derive(Clone, Debug)]
pub struct ColumnMap {
    pub system: String,
    pub segment: String,
    pub source: String,
    pub target: String,
    pub severity: String,
    pub category: Option<String>,
    pub span: Option<String>,
    pub lang_pair: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            system: "system".into(),
            segment: "seg_id".into(),
            source: "source".into(),
            target: "target".into(),
            severity: "severity".into(),
            category: Some("category".into()),
            span: Some("span".into()),
            lang_pair: Some("lang_pair".into()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MqmImport {
    pub instances: Vec<Instance>,
    /// Error rows with no recoverable location (omissions, empty markers).
    pub unlocated: usize,
}

const NO_ERROR: [&str; 3] = ["no-error", "no_error", "none"];

/// Target text with `<v>`/`</v>` removed, and the marked character range.
fn strip_markers(target: &str) -> (String, Option<(usize, usize)>) {
    let mut plain = String::with_capacity(target.len());
    let (mut open, mut close) = (None, None);
    let mut chars = 0usize;
    let mut rest = target;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("<v>") {
            open.get_or_insert(chars);
            rest = r;
        } else if let Some(r) = rest.strip_prefix("</v>") {
            close.get_or_insert(chars);
            rest = r;
        } else {
            let c = rest.chars().next().unwrap();
            plain.push(c);
            chars += 1;
            rest = &rest[c.len_utf8()..];
        }
    }
    let marked = match (open, close) {
        (Some(a), Some(b)) if a < b => Some((a, b)),
        _ => None,
    };
    (plain, marked)
}

fn char_range_of(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    let needle = needle.trim();
    if needle.is_empty() {
        return None;
    }
    let byte = haystack.find(needle)?;
    let start = haystack[..byte].chars().count();
    Some((start, start + needle.chars().count()))
}

struct Builder {
    inst: Instance,
    spans: Vec<ErrorSpan>,
}

/// Reads MQM rows into one human-annotated instance per (system, segment),
/// in order of first appearance.
pub fn read_mqm_tsv(
    reader: impl Read,
    source_name: &str,
    columns: &ColumnMap,
    default_lang_pair: &str,
) -> Result<MqmImport> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').quoting(false).flexible(true).from_reader(reader);
    let parse_err = |line: usize, message: String| Error::Parse { source_name: source_name.to_string(), line, message };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let require = |name: &str| find(name).ok_or_else(|| parse_err(1, format!("missing column `{name}`")));
    let (c_sys, c_seg, c_src, c_tgt, c_sev) = (
        require(&columns.system)?,
        require(&columns.segment)?,
        require(&columns.source)?,
        require(&columns.target)?,
        require(&columns.severity)?,
    );
    let c_cat = columns.category.as_deref().and_then(find);
    let c_span = columns.span.as_deref().and_then(find);
    let c_lp = columns.lang_pair.as_deref().and_then(find);

    let mut order: Vec<Builder> = Vec::new();
    let mut index: HashMap<(String, String), usize> = HashMap::new();
    let mut unlocated = 0;
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let field = |c: usize| row.get(c).unwrap_or("");
        let opt_field = |c: Option<usize>| c.map(field).filter(|s| !s.trim().is_empty());
        let (system, segment) = (field(c_sys).to_string(), field(c_seg).to_string());
        let (plain, marked) = strip_markers(field(c_tgt));

        let key = (system.clone(), segment.clone());
        let slot = *index.entry(key).or_insert_with(|| {
            order.push(Builder {
                inst: Instance {
                    id: segment.clone(),
                    system: system.clone(),
                    lang_pair: opt_field(c_lp).unwrap_or(default_lang_pair).to_string(),
                    source: strip_markers(field(c_src)).0,
                    translation: plain.clone(),
                    human: None,
                    candidates: Vec::new(),
                    support: None,
                },
                spans: Vec::new(),
            });
            order.len() - 1
        });
        let builder = &mut order[slot];
        if builder.inst.translation != plain {
            return Err(parse_err(line, format!("target of segment `{segment}` differs between rows")));
        }

        let token = field(c_sev).trim();
        if NO_ERROR.iter().any(|n| token.eq_ignore_ascii_case(n)) {
            continue;
        }
        let severity = Severity::from_label(token).ok_or_else(|| Error::UnknownSeverity {
            token: token.to_string(),
            source_name: source_name.to_string(),
            line,
        })?;
        let range = match opt_field(c_span) {
            Some(text) => char_range_of(&plain, text),
            None => marked,
        };
        let Some((start, end)) = range else {
            unlocated += 1;
            continue;
        };
        let mut span = ErrorSpan::new(start, end, severity);
        span.category = opt_field(c_cat).map(str::to_string);
        builder.spans.push(span);
    }

    let instances = order
        .into_iter()
        .map(|b| {
            let len = b.inst.translation.chars().count();
            let human = Annotation::new(len, b.spans).expect("spans located inside the target");
            Instance { human: Some(human), ..b.inst }
        })
        .collect();
    Ok(MqmImport { instances, unlocated })
}

pub fn import_mqm_tsv(path: &Path, columns: &ColumnMap, default_lang_pair: &str) -> Result<MqmImport> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_mqm_tsv(file, &path.display().to_string(), columns, default_lang_pair)
}
