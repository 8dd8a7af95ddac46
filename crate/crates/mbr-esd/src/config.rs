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

//! Run configuration, read from a TOML file and overridden by flags.

use std::path::{Path, PathBuf};

use mbr_esd_core::{DecisionRule, SigConfig, UtilityConfig, UtilityKind};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Candidate-set sizes the sampling experiments sweep over.
pub const SAMPLE_SIZES: [usize; 3] = [16, 64, 256];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root of all randomness: SPA and significance resampling, DPO split.
    pub seed: u64,
    /// Keep only the first `n_cap` candidates of every instance.
    pub n_cap: Option<usize>,
    pub utility: UtilityConfig,
    pub decode: DecodeConfig,
    pub sampling: SamplingConfig,
    pub significance: SignificanceConfig,
    pub distill: DistillConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0x5EED,
            n_cap: None,
            utility: UtilityConfig::default(),
            decode: DecodeConfig::default(),
            sampling: SamplingConfig::default(),
            significance: SignificanceConfig::default(),
            distill: DistillConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    /// `greedy`, `map`, `mbr` or `oracle`.
    pub rule: String,
    pub utility: UtilityKind,
    pub exclude_self: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig { rule: "mbr".into(), utility: UtilityKind::SoftF1, exclude_self: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopKMode {
    /// Send `top_k`, and stop sending it once the endpoint rejects it.
    Auto,
    Always,
    Never,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_samples: usize,
    pub temperature: f64,
    pub top_k: usize,
    pub top_k_mode: TopKMode,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { n_samples: SAMPLE_SIZES[0], temperature: 2.0, top_k: 10, top_k_mode: TopKMode::Auto }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignificanceConfig {
    /// Resamples for PERM-BOTH and the paired bootstrap.
    pub resamples: usize,
    /// Resamples inside every SPA computation.
    pub spa_resamples: usize,
    pub alpha: f64,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        SignificanceConfig { resamples: 1000, spa_resamples: 1000, alpha: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    pub utility: UtilityKind,
    pub min_gap: f64,
    pub valid_fraction: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig { utility: UtilityKind::SoftF1, min_gap: 0.0, valid_fraction: 0.1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Default output location when `--out` is not given.
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.utility.validate()?;
        if self.n_cap == Some(0) {
            return Err(Error::Config("n_cap must be at least 1".into()));
        }
        if self.sampling.n_samples == 0 {
            return Err(Error::Config("sampling.n_samples must be at least 1".into()));
        }
        if self.sampling.temperature.is_nan() || self.sampling.temperature <= 0.0 {
            return Err(Error::Config("sampling.temperature must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.distill.valid_fraction) {
            return Err(Error::Config("distill.valid_fraction must lie in [0, 1)".into()));
        }
        if self.distill.min_gap.is_nan() || self.distill.min_gap < 0.0 {
            return Err(Error::Config("distill.min_gap must be non-negative".into()));
        }
        self.sig_config().validate()?;
        self.spa_config().validate()?;
        self.rule()?;
        Ok(())
    }

    pub fn rule(&self) -> Result<DecisionRule> {
        DecisionRule::from_parts(&self.decode.rule, Some(self.decode.utility))
            .ok_or_else(|| Error::Config(format!("unknown decision rule `{}`", self.decode.rule)))
    }

    pub fn sig_config(&self) -> SigConfig {
        SigConfig { resamples: self.significance.resamples, seed: self.seed, alpha: self.significance.alpha }
    }

    pub fn spa_config(&self) -> SigConfig {
        SigConfig { resamples: self.significance.spa_resamples, ..self.sig_config() }
    }
}
