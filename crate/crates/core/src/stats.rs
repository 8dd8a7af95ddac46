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

//! Significance tests: PERM-BOTH permutation test and paired bootstrap.
//!
//! Each resample `k` draws from its own ChaCha8 stream `k` under the
//! configured seed, so serial and parallel runs see identical random
//! sequences and produce identical p-values.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SigConfig {
    pub resamples: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for SigConfig {
    fn default() -> Self {
        SigConfig { resamples: 1000, seed: 0x5EED, alpha: 0.05 }
    }
}

impl SigConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.resamples < 100 {
            return Err(StatsError::TooFewResamples(self.resamples));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(StatsError::BadAlpha(self.alpha));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SigConfig { seed, ..self }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("paired samples differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least two paired entries, got {0}")]
    TooShort(usize),
    #[error("at least 100 resamples required, got {0}")]
    TooFewResamples(usize),
    #[error("alpha must lie in (0, 0.5), got {0}")]
    BadAlpha(f64),
}

/// Generator for resample `stream` under `seed`.
pub fn resample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(StatsError::TooShort(a.len()));
    }
    Ok(())
}

/// Sums `weight(k)` over resamples `k in 0..n`.
fn sum_over<F>(n: usize, weight: F) -> usize
where
    F: Fn(u64) -> usize + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(weight).sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(weight).sum()
    }
}

/// Two-sided PERM-BOTH test for `statistic(a) − statistic(b)`.
///
/// `a[i]` and `b[i]` are the two metrics' scores for the same segment. Each
/// resample swaps every pair independently with probability ½ and
/// recomputes the delta. The p-value is `(1 + #{|Δ'| ≥ |Δ|}) / (1 + R)`.
pub fn perm_both<F>(a: &[f64], b: &[f64], statistic: F, cfg: &SigConfig) -> Result<f64, StatsError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_pair(a, b)?;
    cfg.validate()?;
    let observed = (statistic(a) - statistic(b)).abs();
    let hits = sum_over(cfg.resamples, |k| {
        let mut rng = resample_rng(cfg.seed, k);
        let mut sa = Vec::with_capacity(a.len());
        let mut sb = Vec::with_capacity(b.len());
        for (&x, &y) in a.iter().zip(b) {
            if rng.gen::<bool>() {
                sa.push(y);
                sb.push(x);
            } else {
                sa.push(x);
                sb.push(y);
            }
        }
        usize::from((statistic(&sa) - statistic(&sb)).abs() >= observed)
    });
    Ok((1 + hits) as f64 / (1 + cfg.resamples) as f64)
}

/// One-sided paired bootstrap for "mean(a) > mean(b)".
///
/// Returns the share of resamples in which `mean(a*) ≤ mean(b*)`, counting
/// exact ties as one half, so identical inputs give exactly 0.5.
pub fn paired_bootstrap(a: &[f64], b: &[f64], cfg: &SigConfig) -> Result<f64, StatsError> {
    check_pair(a, b)?;
    cfg.validate()?;
    let n = a.len();
    // Two half-units per losing resample, one per tie.
    let half_units = sum_over(cfg.resamples, |k| {
        let mut rng = resample_rng(cfg.seed, k);
        let (mut sum_a, mut sum_b) = (0.0, 0.0);
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            sum_a += a[i];
            sum_b += b[i];
        }
        if sum_a < sum_b {
            2
        } else if sum_a == sum_b {
            1
        } else {
            0
        }
    });
    Ok(half_units as f64 / (2 * cfg.resamples) as f64)
}

/// One-sided paired permutation p-value that the per-segment differences
/// `diffs` have a positive mean, `(1 + #{Δ' ≥ Δ}) / (1 + R)`.
///
/// Two calls with the same `(seed, stream)` flip the same signs, which is
/// what lets SPA compare metric and human p-values on equal footing.
pub fn sign_flip_p_value(diffs: &[f64], resamples: usize, seed: u64, stream: u64) -> f64 {
    let n = diffs.len() as f64;
    let observed = diffs.iter().sum::<f64>() / n;
    let mut rng = resample_rng(seed, stream);
    let mut hits = 0usize;
    for _ in 0..resamples {
        let mut total = 0.0;
        for &d in diffs {
            if rng.gen::<bool>() {
                total -= d;
            } else {
                total += d;
            }
        }
        if total / n >= observed {
            hits += 1;
        }
    }
    (1 + hits) as f64 / (1 + resamples) as f64
}
