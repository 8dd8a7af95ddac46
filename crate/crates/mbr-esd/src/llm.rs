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

//! Hypothesis generation against an OpenAI-compatible chat-completions
//! endpoint.
//!
//! Every sample is one request. The per-instance request budget is
//! `n_samples + max_retries`: transport failures, 429 and 5xx responses are
//! retried with exponential backoff while the budget lasts. Responses that
//! do not parse as an error list are counted, not retried.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Duration;

use mbr_esd_core::{Hypothesis, Instance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::TopKMode;
use crate::error::{Error, Result};
use crate::ground::ground_spans;

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "MBR_ESD_API_KEY";

/// GEMBA-MQM style annotation prompt. The translation must sit in the last
/// fenced block; the bundled stub endpoint relies on that.
pub const DEFAULT_TEMPLATE: &str = include_str!("../data/prompt_template.txt");

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Base URL (`http://host:port/v1`) or the full completions URL.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub n_samples: usize,
    pub temperature: f64,
    pub top_k: usize,
    pub top_k_mode: TopKMode,
    pub max_retries: usize,
    pub timeout: Duration,
    /// First backoff delay; doubles per retry.
    pub backoff: Duration,
    /// Instances in flight at once.
    pub concurrency: usize,
    /// Ask for schema-constrained JSON output.
    pub guided_json: bool,
    pub schema: Value,
    pub template: String,
    pub max_tokens: Option<usize>,
}

impl GenConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        GenConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            n_samples: 16,
            temperature: 2.0,
            top_k: 10,
            top_k_mode: TopKMode::Auto,
            max_retries: 3,
            timeout: Duration::from_secs(60),
            backoff: Duration::from_millis(500),
            concurrency: 4,
            guided_json: true,
            schema: default_schema(),
            template: DEFAULT_TEMPLATE.to_string(),
            max_tokens: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(Error::Config("temperature must be positive".into()));
        }
        if self.concurrency == 0 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        if !self.template.contains("{translation}") {
            return Err(Error::Config("prompt template lacks a {translation} placeholder".into()));
        }
        Ok(())
    }

    fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// JSON schema of the annotation output: `{"errors": [{text, severity, category}]}`.
pub fn default_schema() -> Value {
    json!({
        "type": "object",
        "properties": {
            "errors": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "text": {"type": "string"},
                        "severity": {"type": "string", "enum": ["critical", "major", "minor"]},
                        "category": {"type": "string"}
                    },
                    "required": ["text", "severity", "category"],
                    "additionalProperties": false
                }
            }
        },
        "required": ["errors"],
        "additionalProperties": false
    })
}

fn language_name(code: &str) -> &str {
    match code {
        "en" => "English",
        "de" => "German",
        "es" => "Spanish",
        "ja" => "Japanese",
        "zh" => "Chinese",
        "cs" => "Czech",
        "ru" => "Russian",
        "uk" => "Ukrainian",
        "hi" => "Hindi",
        "is" => "Icelandic",
        other => other,
    }
}

pub fn render_prompt(template: &str, inst: &Instance) -> String {
    let (src, tgt) = inst.lang_pair.split_once('-').unwrap_or((&inst.lang_pair, &inst.lang_pair));
    template
        .replace("{source_lang}", language_name(src))
        .replace("{target_lang}", language_name(tgt))
        .replace("{source}", &inst.source)
        .replace("{translation}", &inst.translation)
}

/// Counters for one instance or a whole run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenStats {
    pub requests: usize,
    pub hypotheses: usize,
    pub parse_failures: usize,
    pub failed_samples: usize,
    pub dropped_spans: usize,
}

impl GenStats {
    fn add(&mut self, o: &GenStats) {
        self.requests += o.requests;
        self.hypotheses += o.hypotheses;
        self.parse_failures += o.parse_failures;
        self.failed_samples += o.failed_samples;
        self.dropped_spans += o.dropped_spans;
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub hypotheses: Vec<Hypothesis>,
    pub stats: GenStats,
}

/// Run-level record of what was actually sent, for the manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenSummary {
    pub stats: GenStats,
    pub instances: usize,
    pub top_k_requested: bool,
    /// The endpoint rejected `top_k` and it was omitted from then on.
    pub top_k_dropped: bool,
}

enum Attempt {
    Ok(String),
    Retryable(String),
    Fatal(String),
}

pub struct Client {
    cfg: GenConfig,
    agent: ureq::Agent,
    send_top_k: AtomicBool,
    top_k_dropped: AtomicBool,
    requests: AtomicUsize,
}

impl Client {
    pub fn new(cfg: GenConfig) -> Result<Self> {
        cfg.validate()?;
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(cfg.timeout)).http_status_as_error(false).build().into();
        let send_top_k = cfg.top_k_mode != TopKMode::Never;
        Ok(Client {
            cfg,
            agent,
            send_top_k: AtomicBool::new(send_top_k),
            top_k_dropped: AtomicBool::new(false),
            requests: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &GenConfig {
        &self.cfg
    }

    /// Total requests issued by this client.
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn body(&self, prompt: &str) -> Value {
        let mut body = json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "n": 1,
            "logprobs": true,
        });
        if self.send_top_k.load(Ordering::Relaxed) {
            body["top_k"] = json!(self.cfg.top_k);
        }
        if self.cfg.guided_json {
            body["response_format"] = json!({
                "type": "json_schema",
                "json_schema": {"name": "error_annotation", "schema": self.cfg.schema, "strict": true}
            });
        }
        if let Some(m) = self.cfg.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }

    fn attempt(&self, prompt: &str) -> Result<Attempt> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        let mut req = self.agent.post(self.cfg.url()).header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(self.body(prompt)) {
            Ok(r) => r,
            Err(e) => return Ok(Attempt::Retryable(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Ok(Attempt::Retryable(e.to_string())),
        };
        Ok(match status {
            200..=299 => Attempt::Ok(text),
            401 | 403 => return Err(Error::Auth(status)),
            400 if self.cfg.top_k_mode == TopKMode::Auto
                && self.send_top_k.load(Ordering::Relaxed)
                && text.contains("top_k") =>
            {
                self.send_top_k.store(false, Ordering::Relaxed);
                self.top_k_dropped.store(true, Ordering::Relaxed);
                log::warn!("endpoint rejected top_k; omitting it from now on");
                Attempt::Retryable(format!("HTTP 400: {text}"))
            }
            408 | 429 | 500..=599 => Attempt::Retryable(format!("HTTP {status}: {text}")),
            _ => Attempt::Fatal(format!("HTTP {status}: {text}")),
        })
    }

    /// Draws `n_samples` annotations for one instance. Samples that still
    /// fail once the retry budget is spent are skipped and counted; the
    /// call errors only when no request got through at all.
    pub fn generate_hypotheses(&self, inst: &Instance) -> Result<Generated> {
        let prompt = render_prompt(&self.cfg.template, inst);
        let mut stats = GenStats::default();
        let mut hypotheses = Vec::new();
        let mut retries_left = self.cfg.max_retries;
        let mut delay = self.cfg.backoff;
        let mut last_error = String::new();
        for _ in 0..self.cfg.n_samples {
            let body = loop {
                stats.requests += 1;
                match self.attempt(&prompt)? {
                    Attempt::Ok(body) => break Some(body),
                    Attempt::Retryable(msg) if retries_left > 0 => {
                        log::debug!("instance {}/{}: retrying after {msg}", inst.system, inst.id);
                        retries_left -= 1;
                        std::thread::sleep(delay);
                        delay = delay.saturating_mul(2).min(Duration::from_secs(30));
                    }
                    Attempt::Retryable(msg) | Attempt::Fatal(msg) => {
                        last_error = msg;
                        break None;
                    }
                }
            };
            let Some(body) = body else {
                stats.failed_samples += 1;
                continue;
            };
            match parse_completion(&body, &inst.translation) {
                Ok((hyp, dropped)) => {
                    stats.dropped_spans += dropped;
                    hypotheses.push(hyp);
                }
                Err(e) => {
                    log::debug!("instance {}/{}: {e}", inst.system, inst.id);
                    stats.parse_failures += 1;
                }
            }
        }
        if stats.failed_samples == self.cfg.n_samples {
            return Err(Error::Endpoint(format!(
                "instance {}/{}: every sample failed; last error: {last_error}",
                inst.system, inst.id
            )));
        }
        stats.hypotheses = hypotheses.len();
        Ok(Generated { hypotheses, stats })
    }

    /// Replaces the candidates of every instance with fresh samples.
    pub fn generate_dataset(&self, instances: &[Instance]) -> Result<(Vec<Instance>, GenSummary)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.concurrency)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        let results: Vec<Generated> =
            pool.install(|| instances.par_iter().map(|inst| self.generate_hypotheses(inst)).collect::<Result<_>>())?;
        let mut summary = GenSummary {
            instances: instances.len(),
            top_k_requested: self.cfg.top_k_mode != TopKMode::Never,
            top_k_dropped: self.top_k_dropped.load(Ordering::Relaxed),
            ..GenSummary::default()
        };
        let out = instances
            .iter()
            .zip(results)
            .map(|(inst, g)| {
                summary.stats.add(&g.stats);
                Instance { candidates: g.hypotheses, ..inst.clone() }
            })
            .collect();
        Ok((out, summary))
    }
}

/// Extracts message content and summed token log-probabilities from a
/// chat-completions response, then grounds the content.
pub fn parse_completion(body: &str, tgt: &str) -> Result<(Hypothesis, usize)> {
    let v: Value = serde_json::from_str(body).map_err(|e| Error::MalformedModelOutput(e.to_string()))?;
    let choice = &v["choices"][0];
    let content = choice["message"]["content"]
        .as_str()
        .ok_or_else(|| Error::MalformedModelOutput("response has no message content".into()))?;
    let grounded = ground_spans(content, tgt)?;
    let log_likelihood = choice["logprobs"]["content"]
        .as_array()
        .and_then(|tokens| tokens.iter().map(|t| t["logprob"].as_f64()).sum::<Option<f64>>());
    let mut hyp = Hypothesis::new(grounded.annotation).with_raw_text(content);
    hyp.log_likelihood = log_likelihood.filter(|v| v.is_finite());
    Ok((hyp, grounded.dropped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst() -> Instance {
        Instance {
            id: "1".into(),
            system: "S".into(),
            lang_pair: "en-de".into(),
            source: "I wanted to fly, as I was a child.".into(),
            translation: "Ich wollte fliegen, da ich ein Kind war.".into(),
            human: None,
            candidates: vec![],
            support: None,
        }
    }

    #[test]
    fn prompt_has_translation_last() {
        let p = render_prompt(DEFAULT_TEMPLATE, &inst());
        assert!(p.contains("English") && p.contains("German"));
        let last_block = p.rsplit("```").nth(1).unwrap();
        assert_eq!(last_block.trim(), inst().translation);
    }

    #[test]
    fn completion_parsing() {
        let body = json!({
            "choices": [{
                "message": {"content": "{\"errors\":[{\"text\":\"da\",\"severity\":\"major\",\"category\":\"accuracy\"}]}"},
                "logprobs": {"content": [{"token": "a", "logprob": -0.5}, {"token": "b", "logprob": -1.25}]}
            }]
        })
        .to_string();
        let (h, dropped) = parse_completion(&body, &inst().translation).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(h.log_likelihood, Some(-1.75));
        assert_eq!(h.annotation.spans()[0].start, 20);
        assert!(h.raw_text.unwrap().contains("\"da\""));

        let no_lp = json!({"choices": [{"message": {"content": "[]"}}]}).to_string();
        assert_eq!(parse_completion(&no_lp, "abc").unwrap().0.log_likelihood, None);
        assert!(matches!(parse_completion("{}", "abc"), Err(Error::MalformedModelOutput(_))));
    }

    #[test]
    fn url_and_validation() {
        assert_eq!(GenConfig::new("http://h/v1/", "m").url(), "http://h/v1/chat/completions");
        assert_eq!(GenConfig::new("http://h/v1/chat/completions", "m").url(), "http://h/v1/chat/completions");
        let mut cfg = GenConfig::new("http://h", "m");
        cfg.n_samples = 0;
        assert!(cfg.validate().is_err());
    }
}
