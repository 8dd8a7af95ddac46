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

use std::path::PathBuf;

use mbr_esd_core::{ConfigError, DecodeError, DistillError, MetricsError, StatsError};
use serde_json::{json, Value};

/// Everything the pipeline can fail with. Each variant maps to a stable
/// `kind` string so failures can be reported as JSON.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{source_name}:{line}: {message}")]
    Parse { source_name: String, line: usize, message: String },
    #[error(
        "instance `{id}` (system `{system}`): span [{start}, {end}) lies outside a translation of {len} characters"
    )]
    SpanOutOfRange { id: String, system: String, start: usize, end: usize, len: usize },
    #[error("instance `{id}` (system `{system}`) appears twice")]
    DuplicateInstance { id: String, system: String },
    #[error("unknown severity `{token}` at {source_name}:{line}")]
    UnknownSeverity { token: String, source_name: String, line: usize },
    #[error("malformed model output: {0}")]
    MalformedModelOutput(String),
    #[error("instance `{id}` (system `{system}`): candidate {index} has no raw text to export")]
    MissingRawText { id: String, system: String, index: usize },
    #[error("instance `{id}` (system `{system}`): {source}")]
    Validation { id: String, system: String, source: DecodeError },
    #[error("{0} selection(s) have no matching dataset instance: {1:?}")]
    Join(usize, Vec<String>),
    #[error(
        "runs cover different instances; only in baseline: {only_baseline:?}; only in candidate: {only_candidate:?}"
    )]
    CoverageMismatch { only_baseline: Vec<String>, only_candidate: Vec<String> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("endpoint rejected the credentials (HTTP {0})")]
    Auth(u16),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Distill(#[from] DistillError),
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e.to_string())
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::SpanOutOfRange { .. } => "span_out_of_range",
            Error::DuplicateInstance { .. } => "duplicate_instance",
            Error::UnknownSeverity { .. } => "unknown_severity",
            Error::MalformedModelOutput(_) => "malformed_model_output",
            Error::MissingRawText { .. } => "missing_raw_text",
            Error::Validation { .. } => "validation",
            Error::Join(..) => "join",
            Error::CoverageMismatch { .. } => "coverage_mismatch",
            Error::Config(_) => "config",
            Error::Endpoint(_) => "endpoint",
            Error::Auth(_) => "auth",
            Error::Metrics(_) => "metrics",
            Error::Stats(_) => "stats",
            Error::Distill(_) => "distill",
        }
    }

    /// Failures caused by the inputs rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Endpoint(_) | Error::Auth(_))
    }

    /// Machine-readable form printed by the CLI on failure.
    pub fn to_json(&self) -> Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        let extra = match self {
            Error::SpanOutOfRange { id, system, .. }
            | Error::DuplicateInstance { id, system }
            | Error::MissingRawText { id, system, .. }
            | Error::Validation { id, system, .. } => Some(json!({ "id": id, "system": system })),
            _ => None,
        };
        if let Some(instance) = extra {
            body["instance"] = instance;
        }
        match self {
            Error::Parse { line, .. } | Error::UnknownSeverity { line, .. } => body["line"] = json!(line),
            Error::Join(_, ids) => body["unmatched"] = json!(ids),
            Error::CoverageMismatch { only_baseline, only_candidate } => {
                body["only_baseline"] = json!(only_baseline);
                body["only_candidate"] = json!(only_candidate);
            }
            _ => {}
        }
        json!({ "error": body })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
