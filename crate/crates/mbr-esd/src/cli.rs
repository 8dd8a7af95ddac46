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

//! Command-line front end. Every subcommand resolves its configuration
//! (defaults, then `--config`, then flags), validates it, does its work and
//! writes a manifest next to its output.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use mbr_esd_core::{EvalReport, MbrOptions, UtilityKind};

use crate::config::{RunConfig, TopKMode};
use crate::dataset::{load_dataset, read_jsonl_file, write_dataset, write_jsonl_file};
use crate::dpo::{export_dpo_pairs, DpoOptions};
use crate::error::{Error, Result};
use crate::llm::{Client, GenConfig, API_KEY_ENV};
use crate::manifest::{manifest_path, Manifest};
use crate::mqm_tsv::{import_mqm_tsv, ColumnMap};
use crate::report::{evaluate_selections, render_report, render_significance, significance, SignificanceReport};
use crate::selection::{decode_all, SelectionRecord};
use crate::stub::{StubConfig, StubMode, StubServer};
use crate::synth::{synthetic_dataset, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "mbr-esd", version, about = "Decision rules and meta-evaluation for error span detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample candidate annotations from a chat-completions endpoint.
    Generate(GenerateArgs),
    /// Pick one candidate per instance.
    Decode(DecodeArgs),
    /// Score selections against the human annotations.
    Evaluate(EvaluateArgs),
    /// Test a candidate run against a baseline run, per direction.
    Significance(SignificanceArgs),
    /// Export preferred/rejected pairs for distillation.
    Distill(DistillArgs),
    /// Print a saved evaluation or significance report as a table.
    Report(ReportArgs),
    /// Convert a WMT-style MQM TSV file into a dataset.
    ImportMqm(ImportArgs),
    /// Serve the synthetic chat-completions endpoint.
    StubServer(StubArgs),
    /// Write a synthetic dataset.
    #[command(hide = true)]
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base URL such as http://localhost:8000/v1.
    #[arg(long)]
    pub endpoint: String,
    #[arg(long, default_value = "default")]
    pub model: String,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long, value_parser = parse_top_k_mode)]
    pub top_k_mode: Option<TopKMode>,
    #[arg(long, default_value_t = 3)]
    pub max_retries: usize,
    #[arg(long, default_value_t = 60.0)]
    pub timeout_secs: f64,
    #[arg(long, default_value_t = 500)]
    pub backoff_ms: u64,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Prompt template with {source_lang}, {target_lang}, {source} and {translation}.
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[arg(long)]
    pub no_guided_json: bool,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = API_KEY_ENV)]
    pub api_key_env: String,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// greedy, map, mbr or oracle.
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long)]
    pub utility: Option<UtilityKind>,
    #[arg(long)]
    pub n_cap: Option<usize>,
    /// Leave u(h, h) out of MBR means.
    #[arg(long)]
    pub exclude_self: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub selections: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SignificanceArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Baseline selections, usually MAP.
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub candidate: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub spa_resamples: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory for train.jsonl and valid.jsonl.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub utility: Option<UtilityKind>,
    #[arg(long)]
    pub n_cap: Option<usize>,
    #[arg(long)]
    pub min_gap: Option<f64>,
    #[arg(long)]
    pub valid_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON written by `evaluate` or `significance`.
    #[arg(long)]
    pub input: PathBuf,
    /// Also write the table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(long)]
    pub tsv: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Direction for files without a lang_pair column.
    #[arg(long, default_value = "unknown")]
    pub lang_pair: String,
    #[arg(long, default_value = "system")]
    pub system_col: String,
    #[arg(long, default_value = "seg_id")]
    pub segment_col: String,
    #[arg(long, default_value = "source")]
    pub source_col: String,
    #[arg(long, default_value = "target")]
    pub target_col: String,
    #[arg(long, default_value = "severity")]
    pub severity_col: String,
    #[arg(long, default_value = "category")]
    pub category_col: String,
    #[arg(long, default_value = "span")]
    pub span_col: String,
}

#[derive(Debug, Args)]
pub struct StubArgs {
    #[arg(long, default_value = "127.0.0.1:8000")]
    pub addr: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub reject_top_k: bool,
    #[arg(long)]
    pub no_logprobs: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_top_k_mode(s: &str) -> std::result::Result<TopKMode, String> {
    match s {
        "auto" => Ok(TopKMode::Auto),
        "always" => Ok(TopKMode::Always),
        "never" => Ok(TopKMode::Never),
        _ => Err(format!("expected auto, always or never, got `{s}`")),
    }
}

fn resolve(common: &Common, tweak: impl FnOnce(&mut RunConfig)) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    tweak(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(flag: &Option<PathBuf>, cfg: &RunConfig, what: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| cfg.output.out.clone())
        .ok_or_else(|| Error::Config(format!("no output path for {what}; pass --out")))
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        Some(0) => Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Config(e.to_string()))?.install(f)
        }
        None => f(),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn with_config_input(m: &mut Manifest, common: &Common) -> Result<()> {
    if let Some(p) = &common.config {
        m.input(p)?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Decode(a) => decode(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Significance(a) => significance_cmd(a),
        Command::Distill(a) => distill(a),
        Command::Report(a) => report(a),
        Command::ImportMqm(a) => import(a),
        Command::StubServer(a) => stub_server(a),
        Command::Synth(a) => synth(a),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let cfg = resolve(&a.common, |c| {
        if let Some(n) = a.n_samples {
            c.sampling.n_samples = n;
        }
        if let Some(t) = a.temperature {
            c.sampling.temperature = t;
        }
        if let Some(k) = a.top_k {
            c.sampling.top_k = k;
        }
        if let Some(m) = a.top_k_mode {
            c.sampling.top_k_mode = m;
        }
    })?;
    let out = out_path(&a.out, &cfg, "generate")?;
    let instances = load_dataset(&a.dataset, &RunConfig { n_cap: None, ..cfg.clone() })?;

    let mut gen = GenConfig::new(&a.endpoint, &a.model);
    gen.api_key = std::env::var(&a.api_key_env).ok().filter(|k| !k.is_empty());
    gen.n_samples = cfg.sampling.n_samples;
    gen.temperature = cfg.sampling.temperature;
    gen.top_k = cfg.sampling.top_k;
    gen.top_k_mode = cfg.sampling.top_k_mode;
    gen.max_retries = a.max_retries;
    gen.timeout = Duration::from_secs_f64(a.timeout_secs.max(0.001));
    gen.backoff = Duration::from_millis(a.backoff_ms);
    gen.concurrency = a.concurrency;
    gen.guided_json = !a.no_guided_json;
    gen.max_tokens = a.max_tokens;
    if let Some(t) = &a.template {
        gen.template = std::fs::read_to_string(t).map_err(|e| Error::io(t, e))?;
    }

    let client = Client::new(gen)?;
    let (generated, summary) = client.generate_dataset(&instances)?;
    write_dataset(&out, &generated)?;

    let mut m = Manifest::new("generate", &cfg);
    m.input(&a.dataset)?.output(&out)?;
    with_config_input(&mut m, &a.common)?;
    if let Some(t) = &a.template {
        m.input(t)?;
    }
    m.note("endpoint", &a.endpoint).note("model", &a.model).note("generation", &summary);
    m.write(&manifest_path(&out))?;
    let s = &summary.stats;
    println!(
        "generated {} hypotheses for {} instances ({} requests, {} parse failures, {} failed samples, {} dropped spans){}",
        s.hypotheses,
        summary.instances,
        s.requests,
        s.parse_failures,
        s.failed_samples,
        s.dropped_spans,
        if summary.top_k_dropped { "; endpoint rejected top_k, omitted" } else { "" }
    );
    Ok(())
}

fn decode(a: DecodeArgs) -> Result<()> {
    let cfg = resolve(&a.common, |c| {
        if let Some(r) = &a.rule {
            c.decode.rule = r.clone();
        }
        if let Some(u) = a.utility {
            c.decode.utility = u;
        }
        if a.n_cap.is_some() {
            c.n_cap = a.n_cap;
        }
        c.decode.exclude_self |= a.exclude_self;
    })?;
    let out = out_path(&a.out, &cfg, "decode")?;
    let rule = cfg.rule()?;
    let instances = load_dataset(&a.dataset, &cfg)?;
    let opts = MbrOptions { exclude_self: cfg.decode.exclude_self };
    let selections = with_workers(a.common.workers, || decode_all(&instances, rule, &cfg.utility, opts))?;
    write_jsonl_file(&out, &selections)?;

    let mut m = Manifest::new("decode", &cfg);
    m.input(&a.dataset)?.output(&out)?;
    with_config_input(&mut m, &a.common)?;
    m.note("rule", rule.to_string()).note("instances", selections.len());
    m.write(&manifest_path(&out))?;
    println!("decoded {} instances with {rule}", selections.len());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let cfg = resolve(&a.common, |_| {})?;
    let out = out_path(&a.out, &cfg, "evaluate")?;
    let instances = load_dataset(&a.dataset, &RunConfig { n_cap: None, ..cfg.clone() })?;
    let selections: Vec<SelectionRecord> = read_jsonl_file(&a.selections)?;
    let report = with_workers(a.common.workers, || {
        evaluate_selections(&instances, &selections, &cfg.utility, &cfg.spa_config())
    })?;
    write_json(&out, &report)?;

    let mut m = Manifest::new("evaluate", &cfg);
    m.input(&a.dataset)?.input(&a.selections)?.output(&out)?;
    with_config_input(&mut m, &a.common)?;
    m.write(&manifest_path(&out))?;
    print!("{}", render_report(&report));
    Ok(())
}

fn significance_cmd(a: SignificanceArgs) -> Result<()> {
    let cfg = resolve(&a.common, |c| {
        if let Some(r) = a.resamples {
            c.significance.resamples = r;
        }
        if let Some(r) = a.spa_resamples {
            c.significance.spa_resamples = r;
        }
        if let Some(al) = a.alpha {
            c.significance.alpha = al;
        }
    })?;
    let out = out_path(&a.out, &cfg, "significance")?;
    let instances = load_dataset(&a.dataset, &RunConfig { n_cap: None, ..cfg.clone() })?;
    let baseline: Vec<SelectionRecord> = read_jsonl_file(&a.baseline)?;
    let candidate: Vec<SelectionRecord> = read_jsonl_file(&a.candidate)?;
    let report = with_workers(a.common.workers, || {
        significance(&instances, &baseline, &candidate, &cfg.utility, &cfg.sig_config(), &cfg.spa_config())
    })?;
    write_json(&out, &report)?;

    let mut m = Manifest::new("significance", &cfg);
    m.input(&a.dataset)?.input(&a.baseline)?.input(&a.candidate)?.output(&out)?;
    with_config_input(&mut m, &a.common)?;
    m.write(&manifest_path(&out))?;
    print!("{}", render_significance(&report));
    Ok(())
}

fn distill(a: DistillArgs) -> Result<()> {
    let cfg = resolve(&a.common, |c| {
        if let Some(u) = a.utility {
            c.distill.utility = u;
        }
        if a.n_cap.is_some() {
            c.n_cap = a.n_cap;
        }
        if let Some(g) = a.min_gap {
            c.distill.min_gap = g;
        }
        if let Some(f) = a.valid_fraction {
            c.distill.valid_fraction = f;
        }
    })?;
    let dir = out_path(&a.out, &cfg, "distill")?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let instances = load_dataset(&a.dataset, &cfg)?;
    let opts = DpoOptions {
        kind: cfg.distill.utility,
        min_gap: cfg.distill.min_gap,
        valid_fraction: cfg.distill.valid_fraction,
        seed: cfg.seed,
    };
    let export = with_workers(a.common.workers, || export_dpo_pairs(&instances, &cfg.utility, &opts))?;
    let (train, valid) = (dir.join("train.jsonl"), dir.join("valid.jsonl"));
    write_jsonl_file(&train, &export.train)?;
    write_jsonl_file(&valid, &export.valid)?;

    let mut m = Manifest::new("distill", &cfg);
    m.input(&a.dataset)?.output(&train)?.output(&valid)?;
    with_config_input(&mut m, &a.common)?;
    m.note("skipped_ties", export.skipped_ties).note("skipped_too_few_candidates", export.skipped_too_few);
    m.write(&manifest_path(&dir))?;
    println!(
        "{} train and {} validation pairs; skipped {} tied and {} single-candidate instances",
        export.train.len(),
        export.valid.len(),
        export.skipped_ties,
        export.skipped_too_few
    );
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let parse_err = |e: serde_json::Error| Error::Parse {
        source_name: a.input.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    let table = if value.get("all_directions").is_some() {
        render_significance(&serde_json::from_value::<SignificanceReport>(value).map_err(parse_err)?)
    } else {
        render_report(&serde_json::from_value::<EvalReport>(value).map_err(parse_err)?)
    };
    print!("{table}");
    if let Some(out) = &a.out {
        std::fs::write(out, &table).map_err(|e| Error::io(out, e))?;
        let mut m = Manifest::new("report", &RunConfig::default());
        m.input(&a.input)?.output(out)?;
        m.write(&manifest_path(out))?;
    }
    Ok(())
}

fn import(a: ImportArgs) -> Result<()> {
    let columns = ColumnMap {
        system: a.system_col,
        segment: a.segment_col,
        source: a.source_col,
        target: a.target_col,
        severity: a.severity_col,
        category: Some(a.category_col),
        span: Some(a.span_col),
        lang_pair: Some("lang_pair".into()),
    };
    let imported = import_mqm_tsv(&a.tsv, &columns, &a.lang_pair)?;
    write_dataset(&a.out, &imported.instances)?;
    let mut m = Manifest::new("import-mqm", &RunConfig::default());
    m.input(&a.tsv)?.output(&a.out)?;
    m.note("unlocated_errors", imported.unlocated);
    m.write(&manifest_path(&a.out))?;
    println!("imported {} instances ({} errors without a location)", imported.instances.len(), imported.unlocated);
    Ok(())
}

fn stub_server(a: StubArgs) -> Result<()> {
    let cfg = StubConfig {
        mode: StubMode::Synthetic { seed: a.seed, logprobs: !a.no_logprobs },
        reject_top_k: a.reject_top_k,
        ..StubConfig::synthetic(a.seed)
    };
    let server = StubServer::start(&a.addr, cfg).map_err(|e| Error::io(&a.addr, e))?;
    println!("{}", server.url());
    server.wait();
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut spec = SynthSpec::bundled();
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    write_dataset(&a.out, &synthetic_dataset(&spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "mbr-esd",
            "decode",
            "--dataset",
            "d.jsonl",
            "--rule",
            "mbr",
            "--utility",
            "softf1",
            "--n-cap",
            "16",
            "--seed",
            "3",
            "--out",
            "s.jsonl",
            "--workers",
            "2",
            "--exclude-self",
        ])
        .unwrap();
        let Command::Decode(a) = cli.command else { panic!("wrong subcommand") };
        assert_eq!(a.utility, Some(UtilityKind::SoftF1));
        assert_eq!((a.n_cap, a.common.seed, a.common.workers, a.exclude_self), (Some(16), Some(3), Some(2), true));
        assert!(Cli::try_parse_from(["mbr-esd", "decode", "--dataset", "d", "--utility", "bleu"]).is_err());
    }
}
