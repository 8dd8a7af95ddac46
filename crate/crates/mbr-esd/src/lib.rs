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

//! File formats, hypothesis generation and the command-line pipeline around
//! [`mbr_esd_core`].
//!
//! The pipeline runs `generate → decode → evaluate → significance`, with
//! `distill` exporting preference pairs from the same candidate sets. Each
//! stage reads and writes JSONL or JSON files and leaves a manifest that
//! pins its configuration and input digests.

#![forbid(unsafe_code)]

pub mod cli;
pub mod config;
pub mod dataset;
pub mod dpo;
pub mod error;
pub mod ground;
pub mod llm;
pub mod manifest;
pub mod mqm_tsv;
pub mod report;
pub mod selection;
pub mod stub;
pub mod synth;

pub use config::RunConfig;
pub use dataset::{load_dataset, read_dataset, write_dataset, InstanceRecord};
pub use dpo::{export_dpo_pairs, DpoExport, DpoOptions, DpoRecord};
pub use error::{Error, Result};
pub use ground::{ground_spans, Grounded};
pub use llm::{Client, GenConfig};
pub use mqm_tsv::{import_mqm_tsv, ColumnMap};
pub use selection::SelectionRecord;
