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

//! Deterministic synthetic datasets with human annotations, sampled
//! candidates, log-likelihoods and raw model text.
//!
//! Translations are word salads from small per-language vocabularies.
//! Systems differ in how many human errors their translations carry, and
//! candidates are noisy copies of the human annotation whose likelihood
//! falls with the number of spans they mark.

use mbr_esd_core::{Annotation, ErrorSpan, Hypothesis, Instance, Severity};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Clone, Debug)]
pub struct Direction {
    pub lang_pair: &'static str,
    pub segments: usize,
}

#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub seed: u64,
    pub directions: Vec<Direction>,
    pub systems: usize,
    pub candidates: usize,
}

impl SynthSpec {
    /// The bundled 100-instance set: three directions, four systems each.
    pub fn bundled() -> Self {
        SynthSpec {
            seed: 20_240_611,
            directions: vec![
                Direction { lang_pair: "en-de", segments: 10 },
                Direction { lang_pair: "en-es", segments: 8 },
                Direction { lang_pair: "ja-zh", segments: 7 },
            ],
            systems: 4,
            candidates: 16,
        }
    }
}

const EN: &[&str] = &[
    "the", "house", "river", "small", "children", "walk", "quickly", "green", "city", "old", "book", "reads", "night",
    "bright", "market",
];
const DE: &[&str] = &[
    "das", "Haus", "Fluss", "klein", "Kinder", "gehen", "schnell", "grün", "Stadt", "alt", "Buch", "liest", "Nacht",
    "hell", "Markt", "über",
];
const ES: &[&str] = &[
    "la", "casa", "río", "pequeño", "niños", "caminan", "rápido", "verde", "ciudad", "viejo", "libro", "lee", "noche",
    "claro", "mercado", "año",
];
const JA: &[&str] = &["家", "川", "小さい", "子供", "歩く", "速く", "緑", "町", "古い", "本", "読む", "夜"];
const ZH: &[&str] =
    &["房子", "河流", "小", "孩子们", "走路", "很快", "绿色", "城市", "古老", "书", "读", "夜晚", "明亮", "市场"];

fn vocab(lang: &str) -> &'static [&'static str] {
    match lang {
        "de" => DE,
        "es" => ES,
        "ja" => JA,
        "zh" => ZH,
        _ => EN,
    }
}

fn unspaced(lang: &str) -> bool {
    matches!(lang, "ja" | "zh")
}

/// A sentence and the character ranges of its words.
fn sentence(rng: &mut ChaCha8Rng, lang: &str) -> (String, Vec<(usize, usize)>) {
    let words = vocab(lang);
    let n = rng.gen_range(5..=12);
    let sep = if unspaced(lang) { "" } else { " " };
    let mut text = String::new();
    let mut ranges = Vec::with_capacity(n);
    let mut pos = 0;
    for i in 0..n {
        if i > 0 {
            text.push_str(sep);
            pos += sep.chars().count();
        }
        let w = words[rng.gen_range(0..words.len())];
        text.push_str(w);
        let len = w.chars().count();
        ranges.push((pos, pos + len));
        pos += len;
    }
    text.push_str(if unspaced(lang) { "。" } else { "." });
    (text, ranges)
}

fn random_spans(rng: &mut ChaCha8Rng, words: &[(usize, usize)], count: usize, p_major: f64) -> Vec<ErrorSpan> {
    let mut idx: Vec<usize> = (0..words.len()).collect();
    idx.shuffle(rng);
    idx.truncate(count);
    idx.sort_unstable();
    idx.into_iter()
        .map(|i| {
            // Some spans cover the next word too.
            let end = if i + 1 < words.len() && rng.gen_bool(0.25) { words[i + 1].1 } else { words[i].1 };
            let severity = if rng.gen_bool(p_major) { Severity::Major } else { Severity::Minor };
            ErrorSpan::new(words[i].0, end, severity)
        })
        .collect()
}

fn raw_text(spans: &[ErrorSpan], tgt: &str) -> String {
    let chars: Vec<char> = tgt.chars().collect();
    let errors: Vec<_> = spans
        .iter()
        .map(|s| {
            let text: String = chars[s.start..s.end].iter().collect();
            json!({"text": text, "severity": s.severity.as_str(), "category": "accuracy/mistranslation"})
        })
        .collect();
    json!({ "errors": errors }).to_string()
}

/// A noisy copy of the human spans: drops, severity flips, boundary
/// shifts and spurious additions.
fn perturb(rng: &mut ChaCha8Rng, human: &Annotation, words: &[(usize, usize)]) -> Vec<ErrorSpan> {
    let len = human.translation_len();
    let mut out = Vec::new();
    for s in human.spans() {
        if rng.gen_bool(0.35) {
            continue;
        }
        let severity = if rng.gen_bool(0.3) {
            match s.severity {
                Severity::Major => Severity::Minor,
                Severity::Minor => Severity::Major,
            }
        } else {
            s.severity
        };
        let mut start = s.start;
        let mut end = s.end;
        if rng.gen_bool(0.3) {
            start = start.saturating_sub(rng.gen_range(1..=2));
        }
        if rng.gen_bool(0.3) {
            end = (end + rng.gen_range(1..=2)).min(len);
        }
        out.push(ErrorSpan::new(start, end, severity));
    }
    let extra = [0usize, 0, 1, 1, 2, 3][rng.gen_range(0..6)];
    out.extend(random_spans(rng, words, extra, 0.2));
    out
}

pub fn synthetic_dataset(spec: &SynthSpec) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::new();
    for dir in &spec.directions {
        let (src_lang, tgt_lang) = dir.lang_pair.split_once('-').unwrap_or(("en", "de"));
        for seg in 0..dir.segments {
            let (source, _) = sentence(&mut rng, src_lang);
            for sys in 0..spec.systems {
                let (tgt, words) = sentence(&mut rng, tgt_lang);
                let len = tgt.chars().count();
                // Later systems are worse on average.
                let lambda = 0.4 + 0.5 * sys as f64;
                let n_errors = (0..4).filter(|_| rng.gen_bool((lambda / 4.0).min(0.95))).count();
                let human_spans = random_spans(&mut rng, &words, n_errors, 0.35);
                let human = Annotation::new(len, human_spans).expect("word spans lie inside the sentence");
                let candidates = (0..spec.candidates)
                    .map(|_| {
                        let spans = perturb(&mut rng, &human, &words);
                        let ann = Annotation::new(len, spans).expect("perturbed spans stay inside the sentence");
                        let raw = raw_text(ann.spans(), &tgt);
                        let ll = -(1.0 + 1.3 * ann.spans().len() as f64 + 2.0 * rng.gen::<f64>());
                        // Two decimals keep the file readable and round-trip exactly.
                        let ll = (ll * 100.0).round() / 100.0;
                        Hypothesis::new(ann).with_log_likelihood(ll).with_raw_text(raw)
                    })
                    .collect();
                out.push(Instance {
                    id: format!("{}-{seg:03}", dir.lang_pair),
                    system: format!("sys{}", (b'A' + sys as u8) as char),
                    lang_pair: dir.lang_pair.to_string(),
                    source: source.clone(),
                    translation: tgt,
                    human: Some(human),
                    candidates,
                    support: None,
                });
            }
        }
    }
    out
}
