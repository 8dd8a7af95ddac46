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

// Client behaviour against the local stub endpoint.

use std::time::Duration;

use mbr_esd::config::TopKMode;
use mbr_esd::stub::{StubConfig, StubMode, StubReply, StubServer};
use mbr_esd::{Client, Error, GenConfig};
use mbr_esd_core::{Instance, Severity};

fn inst() -> Instance {
    Instance {
        id: "7".into(),
        system: "sysA".into(),
        lang_pair: "en-de".into(),
        source: "I've wanted to fly since I was a child.".into(),
        translation: "Ich wollte fliegen, da ich ein Kind war.".into(),
        human: None,
        candidates: vec![],
        support: None,
    }
}

fn client(server: &StubServer, n: usize) -> Client {
    let mut cfg = GenConfig::new(server.url(), "stub-model");
    cfg.n_samples = n;
    cfg.backoff = Duration::from_millis(1);
    cfg.timeout = Duration::from_secs(10);
    Client::new(cfg).unwrap()
}

const DA_MAJOR: &str = r#"{"errors":[{"text":"da","severity":"major","category":"accuracy/mistranslation"}]}"#;

#[test]
fn single_fixed_reply() {
    let reply = StubReply { logprobs: Some(vec![-0.25, -0.5]), ..StubReply::ok(DA_MAJOR) };
    let server = StubServer::start("127.0.0.1:0", StubConfig::scripted(vec![reply])).unwrap();
    let g = client(&server, 1).generate_hypotheses(&inst()).unwrap();
    assert_eq!(g.hypotheses.len(), 1);
    let h = &g.hypotheses[0];
    assert_eq!(h.log_likelihood, Some(-0.75));
    let span = &h.annotation.spans()[0];
    assert_eq!((span.start, span.end, span.severity), (20, 22, Severity::Major));
    assert_eq!(h.raw_text.as_deref(), Some(DA_MAJOR));
    assert_eq!(server.requests(), 1);

    let body = &server.request_bodies()[0];
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["temperature"], 2.0);
    assert_eq!(body["top_k"], 10);
    assert!(body["messages"][0]["content"].as_str().unwrap().contains("Ich wollte fliegen"));
}

#[test]
fn malformed_output_is_counted_not_fatal() {
    let replies = vec![
        StubReply::ok(DA_MAJOR),
        StubReply::ok("I think there are {no errors"),
        StubReply::ok(DA_MAJOR),
        StubReply::ok("[]"),
    ];
    let server = StubServer::start("127.0.0.1:0", StubConfig::scripted(replies)).unwrap();
    let g = client(&server, 4).generate_hypotheses(&inst()).unwrap();
    assert_eq!(g.hypotheses.len(), 3);
    assert_eq!(g.stats.parse_failures, 1);
    assert_eq!(g.stats.failed_samples, 0);
    assert_eq!(server.requests(), 4);
}

#[test]
fn missing_logprobs_leave_likelihood_unset() {
    let cfg = StubConfig { mode: StubMode::Synthetic { seed: 1, logprobs: false }, ..StubConfig::synthetic(1) };
    let server = StubServer::start("127.0.0.1:0", cfg).unwrap();
    let g = client(&server, 3).generate_hypotheses(&inst()).unwrap();
    assert_eq!(g.hypotheses.len(), 3);
    assert!(g.hypotheses.iter().all(|h| h.log_likelihood.is_none()));
}

#[test]
fn rejected_top_k_is_dropped_and_recorded() {
    let cfg = StubConfig { reject_top_k: true, ..StubConfig::synthetic(2) };
    let server = StubServer::start("127.0.0.1:0", cfg).unwrap();
    let (out, summary) = client(&server, 2).generate_dataset(&[inst()]).unwrap();
    assert_eq!(out[0].candidates.len(), 2);
    assert!(summary.top_k_requested && summary.top_k_dropped);
    let bodies = server.request_bodies();
    assert!(bodies[0].get("top_k").is_some());
    assert!(bodies[1..].iter().all(|b| b.get("top_k").is_none()));
}

#[test]
fn top_k_never_mode_omits_it() {
    let server = StubServer::start("127.0.0.1:0", StubConfig::synthetic(3)).unwrap();
    let mut cfg = GenConfig::new(server.url(), "m");
    cfg.n_samples = 2;
    cfg.top_k_mode = TopKMode::Never;
    let (_, summary) = Client::new(cfg).unwrap().generate_dataset(&[inst()]).unwrap();
    assert!(!summary.top_k_requested);
    assert!(server.request_bodies().iter().all(|b| b.get("top_k").is_none()));
}

#[test]
fn wrong_key_is_an_auth_error() {
    let cfg = StubConfig { api_key: Some("secret".into()), ..StubConfig::synthetic(4) };
    let server = StubServer::start("127.0.0.1:0", cfg).unwrap();
    let err = client(&server, 2).generate_hypotheses(&inst()).unwrap_err();
    assert!(matches!(err, Error::Auth(401)), "{err}");
    assert!(!err.is_validation());

    let mut good = GenConfig::new(server.url(), "m");
    good.n_samples = 1;
    good.api_key = Some("secret".into());
    assert_eq!(Client::new(good).unwrap().generate_hypotheses(&inst()).unwrap().hypotheses.len(), 1);
}

#[test]
fn retries_stay_within_budget() {
    let busy = StubReply { status: 503, ..StubReply::ok("overloaded") };
    let replies = vec![busy.clone(), busy, StubReply::ok(DA_MAJOR)];
    let server = StubServer::start("127.0.0.1:0", StubConfig::scripted(replies)).unwrap();
    let c = client(&server, 4);
    let g = c.generate_hypotheses(&inst()).unwrap();
    // Budget: n samples plus max_retries (3) extra requests.
    assert!(server.requests() <= 4 + 3, "{} requests", server.requests());
    assert_eq!(g.stats.requests, server.requests());
    assert_eq!(g.hypotheses.len() + g.stats.failed_samples, 4);
}

#[test]
fn all_samples_failing_is_an_endpoint_error() {
    let server = StubServer::start(
        "127.0.0.1:0",
        StubConfig::scripted(vec![StubReply { status: 500, ..StubReply::ok("boom") }]),
    )
    .unwrap();
    let err = client(&server, 2).generate_hypotheses(&inst()).unwrap_err();
    assert!(matches!(err, Error::Endpoint(_)), "{err}");
    assert_eq!(server.requests(), 2 + 3);
}

#[test]
fn unreachable_endpoint_fails_cleanly() {
    let mut cfg = GenConfig::new("http://127.0.0.1:9/v1", "m");
    cfg.n_samples = 1;
    cfg.max_retries = 0;
    let err = Client::new(cfg).unwrap().generate_hypotheses(&inst()).unwrap_err();
    assert!(matches!(err, Error::Endpoint(_)));
}

#[test]
fn synthetic_stub_is_reproducible() {
    let run = || {
        let server = StubServer::start("127.0.0.1:0", StubConfig::synthetic(9)).unwrap();
        let g = client(&server, 5).generate_hypotheses(&inst()).unwrap();
        g.hypotheses.into_iter().map(|h| (h.raw_text, h.log_likelihood)).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}
