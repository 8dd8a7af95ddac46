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

// The files under data/ are reproducible and well-formed.

use std::path::{Path, PathBuf};

use mbr_esd::config::RunConfig;
use mbr_esd::dataset::write_jsonl;
use mbr_esd::synth::{synthetic_dataset, SynthSpec};
use mbr_esd::{ground_spans, load_dataset, InstanceRecord};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn synthetic_file_matches_its_generator() {
    let mut regenerated = Vec::new();
    write_jsonl(&mut regenerated, synthetic_dataset(&SynthSpec::bundled()).iter().map(InstanceRecord::from_instance))
        .unwrap();
    let shipped = std::fs::read(data("synthetic-100.jsonl")).unwrap();
    assert!(shipped == regenerated, "data/synthetic-100.jsonl is stale; regenerate it with `mbr-esd synth`");
}

#[test]
fn synthetic_raw_text_grounds_to_its_spans() {
    let insts = load_dataset(&data("synthetic-100.jsonl"), &RunConfig::default()).unwrap();
    assert_eq!(insts.len(), 100);
    for inst in &insts {
        for h in &inst.candidates {
            let g = ground_spans(h.raw_text.as_deref().unwrap(), &inst.translation).unwrap();
            assert_eq!(g.dropped, 0, "{}/{}", inst.system, inst.id);
            assert!(g.annotation.spans().len() <= h.annotation.spans().len());
        }
    }
}

#[test]
fn worked_example_fixture() {
    let insts = load_dataset(&data("worked-example.jsonl"), &RunConfig::default()).unwrap();
    assert_eq!(insts.len(), 1);
    let inst = &insts[0];
    assert_eq!(inst.translation, "Ich wollte fliegen, da ich ein Kind war.");
    let lls: Vec<_> = inst.candidates.iter().map(|h| h.log_likelihood.unwrap()).collect();
    assert_eq!(lls, [-10.84, -5.99, -2.86]);
    for h in &inst.candidates {
        let g = ground_spans(h.raw_text.as_deref().unwrap(), &inst.translation).unwrap();
        assert!(g.annotation.same_marks(&h.annotation));
        assert_eq!(g.annotation.spans().len(), h.annotation.spans().len());
    }
}

#[test]
fn example_config_parses_and_validates() {
    let cfg = RunConfig::load(&data("config.example.toml")).unwrap();
    assert_eq!(cfg.seed, 24301);
    cfg.validate().unwrap();
}
