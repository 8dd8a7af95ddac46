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

//! Brute-force reference implementations used to cross-check the library.
//!
//! Everything here works from raw span lists and per-character membership,
//! one character or one pair at a time, without any of the library's
//! precomputation. Shared with the std crate's acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mbr_esd_core::{Annotation, ErrorSpan, Severity};
use rand::Rng;

pub const MAJ_W: f64 = -5.0;
pub const MIN_W: f64 = -1.0;
pub const ALPHA: f64 = -25.0;
pub const BETA: f64 = 1.0;
pub const GAMMA: f64 = 0.5;

/// (start, end, is_major)
pub type RawSpan = (usize, usize, bool);

pub fn raw_spans(a: &Annotation) -> Vec<RawSpan> {
    a.spans().iter().map(|s| (s.start, s.end, s.severity == Severity::Major)).collect()
}

pub fn covers(spans: &[RawSpan], i: usize, major: bool) -> bool {
    spans.iter().any(|&(s, e, m)| m == major && s <= i && i < e)
}

pub fn mqm(spans: &[RawSpan]) -> f64 {
    let distinct: BTreeSet<RawSpan> = spans.iter().copied().collect();
    let major = distinct.iter().filter(|s| s.2).count() as f64;
    let minor = distinct.iter().filter(|s| !s.2).count() as f64;
    (MAJ_W * major + MIN_W * minor).max(ALPHA)
}

pub fn score_sim(c: &[RawSpan], s: &[RawSpan]) -> f64 {
    1.0 - (mqm(c) - mqm(s)).abs() / ALPHA.abs()
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn f1(c: &[RawSpan], s: &[RawSpan], len: usize) -> f64 {
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let mut credit = 0.0;
    let (mut sc, mut ss) = (0.0, 0.0);
    for i in 0..len {
        let (mc, nc) = (ind(covers(c, i, true)), ind(covers(c, i, false)));
        let (ms, ns) = (ind(covers(s, i, true)), ind(covers(s, i, false)));
        let terms = [BETA * mc * ms, BETA * nc * ns, GAMMA * mc * ns, GAMMA * nc * ms];
        credit += terms.iter().cloned().fold(0.0, f64::max);
        sc += f64::max(mc, nc);
        ss += f64::max(ms, ns);
    }
    let (p, r) = match (sc > 0.0, ss > 0.0) {
        (false, false) => (1.0, 1.0),
        (true, true) => (credit / sc, credit / ss),
        _ => (0.0, 0.0),
    };
    harmonic(p, r)
}

pub fn severity_vector(spans: &[RawSpan], len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let maj = if covers(spans, i, true) { BETA } else { 0.0 };
            let min = if covers(spans, i, false) { GAMMA } else { 0.0 };
            maj + min
        })
        .collect()
}

pub fn soft_f1(c: &[RawSpan], s: &[RawSpan], len: usize) -> f64 {
    let (vc, vs) = (severity_vector(c, len), severity_vector(s, len));
    let d: f64 = vc.iter().zip(&vs).map(|(a, b)| (a - b).abs()).sum();
    let nc: f64 = vc.iter().map(|x| x.abs()).sum();
    let ns: f64 = vs.iter().map(|x| x.abs()).sum();
    let l = len as f64;
    let p = (1.0 - d / (l + 1.0 + nc)).max(0.0);
    let r = (1.0 - d / (l + 1.0 + ns)).max(0.0);
    harmonic(p, r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    ScoreSim,
    F1,
    SoftF1,
}

pub const KINDS: [Kind; 3] = [Kind::ScoreSim, Kind::F1, Kind::SoftF1];

pub fn utility(kind: Kind, c: &[RawSpan], s: &[RawSpan], len: usize) -> f64 {
    match kind {
        Kind::ScoreSim => score_sim(c, s),
        Kind::F1 => f1(c, s, len),
        Kind::SoftF1 => soft_f1(c, s, len),
    }
}

pub fn utility_matrix(kind: Kind, cands: &[Vec<RawSpan>], supp: &[Vec<RawSpan>], len: usize) -> Vec<Vec<f64>> {
    cands.iter().map(|c| supp.iter().map(|s| utility(kind, c, s, len)).collect()).collect()
}

pub fn mbr_means(kind: Kind, cands: &[Vec<RawSpan>], supp: &[Vec<RawSpan>], len: usize) -> Vec<f64> {
    utility_matrix(kind, cands, supp, len).into_iter().map(|row| row.iter().sum::<f64>() / row.len() as f64).collect()
}

/// Lowest index whose value is within `tol` of the maximum.
pub fn argmax_tol(values: &[f64], tol: f64) -> usize {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values.iter().position(|&v| v >= max - tol).expect("non-empty")
}

/// Whether the best value beats every other value by more than `tol`.
pub fn clear_winner(values: &[f64], tol: f64) -> bool {
    let best = argmax_tol(values, 0.0);
    values.iter().enumerate().all(|(i, &v)| i == best || v < values[best] - tol)
}

/// (id, system, metric, human)
pub type Seg = (String, String, f64, f64);

/// Exhaustive tie-calibrated pairwise accuracy: every candidate ε, every
/// pair. Returns `None` with no comparable pair.
pub fn acc_eq_star(segs: &[Seg]) -> Option<(f64, f64)> {
    let mut pairs = Vec::new();
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            if segs[i].0 == segs[j].0 && segs[i].1 != segs[j].1 {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        return None;
    }
    let mut eps: Vec<f64> = vec![0.0];
    eps.extend(pairs.iter().map(|&(i, j)| (segs[i].2 - segs[j].2).abs()));
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut best: Option<(f64, f64)> = None;
    for &e in &eps {
        let agree = pairs
            .iter()
            .filter(|&&(i, j)| {
                let dh = segs[i].3 - segs[j].3;
                let dm = segs[i].2 - segs[j].2;
                let h = if dh == 0.0 {
                    0
                } else if dh > 0.0 {
                    1
                } else {
                    -1
                };
                let m = if dm.abs() <= e {
                    0
                } else if dm > 0.0 {
                    1
                } else {
                    -1
                };
                h == m
            })
            .count();
        let acc = agree as f64 / pairs.len() as f64;
        // Strictly greater keeps the smallest maximizing ε.
        if best.is_none_or(|(b, _)| acc > b) {
            best = Some((acc, e));
        }
    }
    best
}

/// A random valid annotation over `len` characters.
pub fn random_annotation(rng: &mut impl Rng, len: usize, max_spans: usize) -> Annotation {
    if len == 0 {
        return Annotation::empty(0);
    }
    let n = rng.gen_range(0..=max_spans);
    let spans = (0..n).map(|_| {
        let start = rng.gen_range(0..len);
        let end = rng.gen_range(start + 1..=len.min(start + 8));
        let sev = if rng.gen_bool(0.4) { Severity::Major } else { Severity::Minor };
        ErrorSpan::new(start, end, sev)
    });
    Annotation::new(len, spans).expect("generated spans are in range")
}
