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

//! JSONL datasets: one instance per line.
//!
//! ```json
//! {"id":"12","system":"sysA","lang_pair":"en-de","src":"...","tgt":"...",
//!  "human":{"spans":[{"start":3,"end":8,"severity":"major"}]},
//!  "candidates":[{"spans":[],"log_likelihood":-2.5,"raw":"{\"errors\":[]}"}]}
//! ```
//!
//! Offsets count characters of `tgt`, not bytes. `critical` is read as
//! `major`. `human` and `support` are optional.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mbr_esd_core::{Annotation, ErrorSpan, Hypothesis, Instance, Severity, SpanError};
use serde::{Deserialize, Deserializer, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub start: usize,
    pub end: usize,
    pub severity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    #[serde(default)]
    pub spans: Vec<SpanRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    #[serde(default)]
    pub spans: Vec<SpanRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    pub system: String,
    pub lang_pair: String,
    pub src: String,
    pub tgt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<AnnotationRecord>,
    #[serde(default)]
    pub candidates: Vec<HypothesisRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<HypothesisRecord>>,
}

/// Segment ids are often numeric in the wild.
fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        N(serde_json::Number),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::N(n) => n.to_string(),
    })
}

impl SpanRecord {
    pub fn from_span(span: &ErrorSpan) -> Self {
        SpanRecord {
            start: span.start,
            end: span.end,
            severity: span.severity.as_str().to_string(),
            category: span.category.clone(),
        }
    }
}

pub fn span_records(annotation: &Annotation) -> Vec<SpanRecord> {
    annotation.spans().iter().map(SpanRecord::from_span).collect()
}

/// Where a record came from, for error messages.
#[derive(Clone, Copy, Debug)]
pub struct Origin<'a> {
    pub source_name: &'a str,
    pub line: usize,
}

/// Validates wire spans against a translation of `len` characters.
pub fn build_annotation(
    spans: &[SpanRecord],
    len: usize,
    id: &str,
    system: &str,
    origin: Origin<'_>,
) -> Result<Annotation> {
    let mut out = Vec::with_capacity(spans.len());
    for s in spans {
        let severity = Severity::from_label(&s.severity).ok_or_else(|| Error::UnknownSeverity {
            token: s.severity.clone(),
            source_name: origin.source_name.to_string(),
            line: origin.line,
        })?;
        let mut span = ErrorSpan::new(s.start, s.end, severity);
        span.category = s.category.clone();
        out.push(span);
    }
    Annotation::new(len, out).map_err(|SpanError::OutOfRange { start, end, len }| Error::SpanOutOfRange {
        id: id.to_string(),
        system: system.to_string(),
        start,
        end,
        len,
    })
}

impl InstanceRecord {
    pub fn into_instance(self, origin: Origin<'_>) -> Result<Instance> {
        let len = self.tgt.chars().count();
        let (id, system) = (self.id.as_str(), self.system.as_str());
        let human = match &self.human {
            Some(h) => Some(build_annotation(&h.spans, len, id, system, origin)?),
            None => None,
        };
        let hyps = |records: &[HypothesisRecord]| -> Result<Vec<Hypothesis>> {
            records
                .iter()
                .map(|h| {
                    Ok(Hypothesis {
                        annotation: build_annotation(&h.spans, len, id, system, origin)?,
                        log_likelihood: h.log_likelihood,
                        raw_text: h.raw.clone(),
                    })
                })
                .collect()
        };
        let candidates = hyps(&self.candidates)?;
        let support = match &self.support {
            Some(s) => Some(hyps(s)?),
            None => None,
        };
        Ok(Instance {
            id: self.id,
            system: self.system,
            lang_pair: self.lang_pair,
            source: self.src,
            translation: self.tgt,
            human,
            candidates,
            support,
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let hyp = |h: &Hypothesis| HypothesisRecord {
            spans: span_records(&h.annotation),
            log_likelihood: h.log_likelihood,
            raw: h.raw_text.clone(),
        };
        InstanceRecord {
            id: inst.id.clone(),
            system: inst.system.clone(),
            lang_pair: inst.lang_pair.clone(),
            src: inst.source.clone(),
            tgt: inst.translation.clone(),
            human: inst.human.as_ref().map(|a| AnnotationRecord { spans: span_records(a) }),
            candidates: inst.candidates.iter().map(hyp).collect(),
            support: inst.support.as_ref().map(|s| s.iter().map(hyp).collect()),
        }
    }
}

/// Parses a dataset from any reader. Blank lines are skipped; duplicate
/// `(system, id)` keys are rejected.
pub fn read_dataset(reader: impl BufRead, source_name: &str, n_cap: Option<usize>) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: InstanceRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        let mut inst = record.into_instance(Origin { source_name, line: line_no })?;
        if !seen.insert((inst.system.clone(), inst.id.clone())) {
            return Err(Error::DuplicateInstance { id: inst.id, system: inst.system });
        }
        if let Some(n) = n_cap {
            inst.candidates.truncate(n);
        }
        out.push(inst);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path, cfg: &RunConfig) -> Result<Vec<Instance>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file), &path.display().to_string(), cfg.n_cap)
}

/// Serializes one value per line with `\n` endings.
pub fn write_jsonl<T: Serialize>(mut w: impl Write, items: impl IntoIterator<Item = T>) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_jsonl_file<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_jsonl(BufWriter::new(file), items).map_err(|e| Error::io(path, e))
}

pub fn write_dataset(path: &Path, instances: &[Instance]) -> Result<()> {
    write_jsonl_file(path, instances.iter().map(InstanceRecord::from_instance))
}

/// Reads JSONL records of any deserializable type.
pub fn read_jsonl_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            source_name: name.clone(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
