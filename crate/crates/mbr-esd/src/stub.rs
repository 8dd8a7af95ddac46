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

//! A local chat-completions endpoint for tests and offline runs.
//!
//! In synthetic mode it reads the translation from the last fenced block of
//! the prompt and answers with a random error list quoted from it, plus
//! token log-probabilities. Replies are a function of the seed, the prompt
//! and how often that prompt has been seen. Scripted mode cycles through
//! fixed replies instead.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq)]
pub struct StubReply {
    pub status: u16,
    /// Message content, or the raw body for non-2xx statuses.
    pub content: String,
    pub logprobs: Option<Vec<f64>>,
}

impl StubReply {
    pub fn ok(content: impl Into<String>) -> Self {
        StubReply { status: 200, content: content.into(), logprobs: None }
    }
}

#[derive(Clone, Debug)]
pub enum StubMode {
    Synthetic { seed: u64, logprobs: bool },
    Scripted(Vec<StubReply>),
}

#[derive(Clone, Debug)]
pub struct StubConfig {
    pub mode: StubMode,
    /// Answer 400 to requests carrying `top_k`.
    pub reject_top_k: bool,
    /// Answer 401 unless this bearer token is sent.
    pub api_key: Option<String>,
    pub threads: usize,
}

impl StubConfig {
    pub fn synthetic(seed: u64) -> Self {
        StubConfig {
            mode: StubMode::Synthetic { seed, logprobs: true },
            reject_top_k: false,
            api_key: None,
            threads: 4,
        }
    }

    pub fn scripted(replies: Vec<StubReply>) -> Self {
        StubConfig { mode: StubMode::Scripted(replies), ..StubConfig::synthetic(0) }
    }
}

struct Shared {
    cfg: StubConfig,
    requests: AtomicUsize,
    seen: Mutex<HashMap<u64, u64>>,
    bodies: Mutex<Vec<Value>>,
}

pub struct StubServer {
    server: Arc<tiny_http::Server>,
    shared: Arc<Shared>,
    addr: SocketAddr,
    workers: Vec<JoinHandle<()>>,
}

impl StubServer {
    /// Binds `addr` (use port 0 for any free port) and starts serving.
    pub fn start(addr: &str, cfg: StubConfig) -> std::io::Result<StubServer> {
        let server = tiny_http::Server::http(addr).map_err(std::io::Error::other)?;
        let server = Arc::new(server);
        let addr =
            server.server_addr().to_ip().ok_or_else(|| std::io::Error::other("stub server is not on an IP socket"))?;
        let threads = cfg.threads.max(1);
        let shared = Arc::new(Shared {
            cfg,
            requests: AtomicUsize::new(0),
            seen: Mutex::new(HashMap::new()),
            bodies: Mutex::new(Vec::new()),
        });
        let workers = (0..threads)
            .map(|_| {
                let (server, shared) = (Arc::clone(&server), Arc::clone(&shared));
                std::thread::spawn(move || {
                    for request in server.incoming_requests() {
                        handle(&shared, request);
                    }
                })
            })
            .collect();
        Ok(StubServer { server, shared, addr, workers })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL to pass as the generation endpoint.
    pub fn url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn requests(&self) -> usize {
        self.shared.requests.load(Ordering::SeqCst)
    }

    /// Parsed bodies of all requests received so far.
    pub fn request_bodies(&self) -> Vec<Value> {
        self.shared.bodies.lock().unwrap().clone()
    }

    /// Blocks until the process is killed.
    pub fn wait(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn respond(request: tiny_http::Request, status: u16, body: String) {
    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
    let _ = request.respond(tiny_http::Response::from_string(body).with_status_code(status).with_header(header));
}

fn error_body(message: &str) -> String {
    json!({"error": {"message": message, "type": "invalid_request_error"}}).to_string()
}

fn handle(shared: &Shared, mut request: tiny_http::Request) {
    let ordinal = shared.requests.fetch_add(1, Ordering::SeqCst);
    let mut raw = String::new();
    if request.as_reader().read_to_string(&mut raw).is_err() {
        return respond(request, 400, error_body("unreadable body"));
    }
    if !request.url().ends_with("/chat/completions") {
        return respond(request, 404, error_body("not found"));
    }
    let body: Value = match serde_json::from_str(&raw) {
        Ok(v) => v,
        Err(e) => return respond(request, 400, error_body(&e.to_string())),
    };
    shared.bodies.lock().unwrap().push(body.clone());

    let cfg = &shared.cfg;
    if let Some(key) = &cfg.api_key {
        let expected = format!("Bearer {key}");
        let ok = request.headers().iter().any(|h| h.field.equiv("Authorization") && h.value.as_str() == expected);
        if !ok {
            return respond(request, 401, error_body("invalid api key"));
        }
    }
    if cfg.reject_top_k && body.get("top_k").is_some() {
        return respond(request, 400, error_body("Unrecognized request argument supplied: top_k"));
    }

    let prompt = body["messages"]
        .as_array()
        .and_then(|m| m.last())
        .and_then(|m| m["content"].as_str())
        .unwrap_or("")
        .to_string();
    let reply = match &cfg.mode {
        StubMode::Scripted(replies) if replies.is_empty() => StubReply::ok("[]"),
        StubMode::Scripted(replies) => replies[ordinal % replies.len()].clone(),
        StubMode::Synthetic { seed, logprobs } => {
            let key = prompt_hash(&prompt);
            let visit = {
                let mut seen = shared.seen.lock().unwrap();
                let n = seen.entry(key).or_insert(0);
                *n += 1;
                *n - 1
            };
            synthetic_reply(*seed, key, visit, &prompt, *logprobs)
        }
    };
    if !(200..300).contains(&reply.status) {
        return respond(request, reply.status, reply.content);
    }
    let mut choice = json!({
        "index": 0,
        "message": {"role": "assistant", "content": reply.content},
        "finish_reason": "stop",
    });
    if let Some(lp) = reply.logprobs {
        let tokens: Vec<Value> = lp.iter().map(|&l| json!({"token": "", "logprob": l})).collect();
        choice["logprobs"] = json!({ "content": tokens });
    }
    let model = body["model"].as_str().unwrap_or("stub");
    let resp = json!({
        "id": format!("stub-{ordinal}"),
        "object": "chat.completion",
        "model": model,
        "choices": [choice],
    });
    respond(request, 200, resp.to_string())
}

fn prompt_hash(prompt: &str) -> u64 {
    let digest = Sha256::digest(prompt.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Text of the last fenced block, which the prompt template reserves for
/// the translation.
pub fn last_fenced_block(prompt: &str) -> &str {
    let parts: Vec<&str> = prompt.split("```").collect();
    if parts.len() < 3 {
        return "";
    }
    parts[parts.len() - 2].trim_matches('\n')
}

/// Candidate error quotes: whitespace-separated words without trailing
/// punctuation, or short character runs for unsegmented scripts.
fn quotable_units(tgt: &str) -> Vec<String> {
    let words: Vec<String> = tgt
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation() || "。，、！？".contains(c)).to_string())
        .filter(|w| !w.is_empty())
        .collect();
    if words.len() >= 2 {
        return words;
    }
    let chars: Vec<char> = tgt.chars().filter(|c| !c.is_whitespace()).collect();
    chars.chunks(2).map(|c| c.iter().collect()).collect()
}

const CATEGORIES: [&str; 4] =
    ["accuracy/mistranslation", "fluency/grammar", "style/awkward", "terminology/inappropriate"];

fn synthetic_reply(seed: u64, prompt_key: u64, visit: u64, prompt: &str, logprobs: bool) -> StubReply {
    let units = quotable_units(last_fenced_block(prompt));
    // Errors every sample of this prompt tends to agree on.
    let mut base_rng = ChaCha8Rng::seed_from_u64(seed ^ prompt_key);
    let mut sample_rng = ChaCha8Rng::seed_from_u64(seed ^ prompt_key);
    sample_rng.set_stream(visit + 1);

    let mut errors = Vec::new();
    if !units.is_empty() {
        let n_base = base_rng.gen_range(0..=2);
        for _ in 0..n_base {
            let text = &units[base_rng.gen_range(0..units.len())];
            let major = base_rng.gen_bool(0.3);
            let category = CATEGORIES[base_rng.gen_range(0..CATEGORIES.len())];
            if sample_rng.gen_bool(0.75) {
                let major = major ^ sample_rng.gen_bool(0.15);
                errors.push(
                    json!({"text": text, "severity": if major { "major" } else { "minor" }, "category": category}),
                );
            }
        }
        if sample_rng.gen_bool(0.35) {
            let text = &units[sample_rng.gen_range(0..units.len())];
            let severity = if sample_rng.gen_bool(0.2) { "major" } else { "minor" };
            errors.push(json!({"text": text, "severity": severity, "category": "style/awkward"}));
        }
    }
    let content = json!({ "errors": errors }).to_string();
    let logprobs = logprobs.then(|| {
        let n = (content.len() / 4).max(3);
        (0..n).map(|_| -sample_rng.gen::<f64>() * 0.5).collect()
    });
    StubReply { status: 200, content, logprobs }
}
