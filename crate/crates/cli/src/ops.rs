//! Stage operations shared by the single commands and the pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slurg_core::agreement::AgreementReport;
use slurg_core::codec::render_tagged;
use slurg_core::dataset::{self, Reject, Split, SplitSpec};
use slurg_core::label::taxonomy_definitions;
use slurg_core::sample::group_by_annotator;
use slurg_core::stats::{self, PosSidecar, PosSource, StatsReport, TokenizerConfig};
use slurg_core::{AnnotatedSample, Corpus, EvalReport, Source};
use slurg_llm::batch::{AnnotationOutcome, FailureKind, GenerationOutcome};
use slurg_llm::{AuditLog, BatchOptions, ChatTransport, LlmConfig, MockTransport, TransportKind};

use crate::error::{config, data, transport, CliResult};

/// Refuses to replace an existing file unless forced.
pub fn guard_file(path: &Path, force: bool) -> CliResult<()> {
    if path.exists() && !force {
        return Err(config(anyhow!("{} exists; pass --force to overwrite", path.display())));
    }
    Ok(())
}

/// Refuses to write into a non-empty directory unless forced.
pub fn guard_dir(dir: &Path, force: bool) -> CliResult<()> {
    if !force {
        if let Ok(mut entries) = fs::read_dir(dir) {
            if entries.next().is_some() {
                return Err(config(anyhow!("{} is not empty; pass --force to overwrite", dir.display())));
            }
        }
    }
    fs::create_dir_all(dir).map_err(|e| data(anyhow!("cannot create {}: {e}", dir.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| data(anyhow!("cannot create {}: {e}", parent.display())))?;
    }
    let json = serde_json::to_string_pretty(value).expect("report types serialize");
    fs::write(path, json + "\n").map_err(|e| data(anyhow!("cannot write {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| data(anyhow!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| data(anyhow!("cannot write {}: {e}", path.display())))
}

/// Seed for a named stage, derived from the run seed so stages do not
/// share random streams.
pub fn derive_seed(base: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn runtime() -> CliResult<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| data(anyhow!("cannot start async runtime: {e}")))
}

pub struct Ingested {
    pub corpus: Corpus,
    pub rejects: Vec<Reject>,
}

pub fn ingest(path: &Path, source: Source) -> CliResult<Ingested> {
    let ing = dataset::ingest(path, source).map_err(data)?;
    Ok(Ingested {
        corpus: ing.corpus,
        rejects: ing.rejects,
    })
}

/// Every annotator's samples from several files, grouped by annotator.
pub fn read_annotations(paths: &[PathBuf]) -> CliResult<(BTreeMap<String, Corpus>, Vec<Reject>)> {
    let mut all = Vec::new();
    let mut rejects = Vec::new();
    for p in paths {
        let (samples, rej) = dataset::read_samples(p).map_err(data)?;
        all.extend(samples);
        rejects.extend(rej);
    }
    if all.is_empty() {
        return Err(data(anyhow!("no valid annotated samples in the input")));
    }
    let grouped = group_by_annotator(all).map_err(data)?;
    Ok((grouped, rejects))
}

pub fn agreement(annotations: &BTreeMap<String, Corpus>) -> CliResult<AgreementReport> {
    slurg_core::pairwise_agreement(annotations).map_err(data)
}

pub fn write_agreement(dir: &Path, report: &AgreementReport) -> CliResult<Vec<PathBuf>> {
    let json = dir.join("agreement.json");
    write_json(&json, report)?;
    let csv_path = dir.join("matrix.csv");
    let mut buf = Vec::new();
    report.write_matrix_csv(&mut buf).map_err(data)?;
    write_text(&csv_path, &String::from_utf8(buf).expect("csv is utf-8"))?;
    Ok(vec![json, csv_path])
}

pub fn parse_specs(specs: &[String], seed: u64) -> CliResult<Vec<SplitSpec>> {
    if specs.is_empty() {
        return Ok(SplitSpec::standard(seed));
    }
    specs
        .iter()
        .map(|s| SplitSpec::parse(s, seed).map_err(config))
        .collect()
}

/// Loads the model config, or the mock config when none is given.
pub fn load_llm_config(path: Option<&Path>) -> CliResult<LlmConfig> {
    match path {
        Some(p) => LlmConfig::load(p).map_err(config),
        None => Ok(LlmConfig::mock()),
    }
}

/// The transport a config asks for. Under the mock transport annotation
/// requests for `echo` samples are answered with their own markup.
pub fn make_transport(cfg: &LlmConfig, echo: Option<&Corpus>) -> CliResult<Box<dyn ChatTransport>> {
    match cfg.transport {
        TransportKind::Http => {
            cfg.validate().map_err(config)?;
            Ok(Box::new(cfg.http_transport().map_err(config)?))
        }
        TransportKind::Mock => {
            let response = match &cfg.mock_generation_response {
                Some(p) => fs::read_to_string(p)
                    .map_err(|e| config(anyhow!("cannot read mock response {}: {e}", p.display())))?,
                None => String::new(),
            };
            let mut mock = MockTransport::new(response);
            for s in echo.into_iter().flatten() {
                mock.answer(s.text.clone(), render_tagged(s).map_err(data)?);
            }
            Ok(Box::new(mock))
        }
    }
}

fn options<'a>(cfg: &LlmConfig, params: slurg_llm::SamplingParams, audit: Option<&'a AuditLog>) -> BatchOptions<'a> {
    BatchOptions {
        parallelism: cfg.parallelism,
        params,
        audit,
        model_name: cfg.model.clone(),
    }
}

fn open_audit(path: &Path) -> CliResult<AuditLog> {
    // a fresh log per run
    if path.exists() {
        fs::remove_file(path).map_err(|e| data(anyhow!("cannot reset {}: {e}", path.display())))?;
    }
    AuditLog::open(path).map_err(|e| data(anyhow!("cannot open audit log {}: {e}", path.display())))
}

fn transport_failures(failures: &[slurg_llm::Failure]) -> CliResult<()> {
    let n = failures.iter().filter(|f| f.kind == FailureKind::Transport).count();
    if n > 0 {
        let first = failures.iter().find(|f| f.kind == FailureKind::Transport).expect("n > 0");
        return Err(transport(anyhow!(
            "{n} request(s) failed; first {}: {}",
            first.request_id,
            first.message
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotateSummary {
    pub split: String,
    pub eval: EvalReport,
    pub failures: Vec<slurg_llm::Failure>,
}

/// Annotates `split`'s gold samples, writes predictions and scores them.
/// Artifacts are written before any transport failure is reported.
pub fn annotate(
    split: &Split,
    cfg: &LlmConfig,
    transport: &dyn ChatTransport,
    out: &Path,
    audit_path: &Path,
) -> CliResult<(AnnotationOutcome, AnnotateSummary)> {
    let audit = open_audit(audit_path)?;
    let rt = runtime()?;
    let opts = options(cfg, cfg.annotation, Some(&audit));
    let outcome = rt.block_on(slurg_llm::annotate_batch(split, transport, &taxonomy_definitions(), &opts));
    dataset::write_corpus(out, &outcome.predictions).map_err(data)?;
    let eval = slurg_core::evaluate(&split.gold, &outcome.predictions)
        .map_err(data)?
        .with_split(split.spec.name.clone());
    let summary = AnnotateSummary {
        split: split.spec.name.clone(),
        eval,
        failures: outcome.failures.clone(),
    };
    Ok((outcome, summary))
}

pub fn check_failures(failures: &[slurg_llm::Failure]) -> CliResult<()> {
    transport_failures(failures)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationPlan {
    /// Comments asked for per request.
    pub num_samples: usize,
    /// Requests per split.
    pub batches: usize,
}

impl Default for GenerationPlan {
    fn default() -> Self {
        GenerationPlan {
            num_samples: 5,
            batches: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub split: String,
    pub requests: usize,
    pub samples: usize,
    pub compliance_rate: Option<f64>,
    pub failures: Vec<slurg_llm::Failure>,
}

pub fn generate(
    split: &Split,
    cfg: &LlmConfig,
    transport: &dyn ChatTransport,
    plan: &GenerationPlan,
    seed: u64,
    out: &Path,
    audit_path: &Path,
) -> CliResult<(GenerationOutcome, GenerateSummary)> {
    if plan.num_samples == 0 {
        return Err(config(anyhow!("the number of samples per request must be at least 1")));
    }
    let audit = open_audit(audit_path)?;
    let rt = runtime()?;
    let fewshot = Arc::new(split.fewshot.clone());
    let requests = slurg_llm::plan_generation_requests(fewshot, &split.spec.name, plan.num_samples, plan.batches, seed);
    let opts = options(cfg, cfg.generation, Some(&audit));
    let outcome = rt.block_on(slurg_llm::generate_batch(&requests, transport, &taxonomy_definitions(), &opts));
    dataset::write_corpus(out, &outcome.samples).map_err(data)?;
    let summary = GenerateSummary {
        split: split.spec.name.clone(),
        requests: outcome.requests,
        samples: outcome.samples.len(),
        compliance_rate: outcome.compliance_rate(),
        failures: outcome.failures.clone(),
    };
    Ok((outcome, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsOptions {
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub all_tokens: bool,
    #[serde(default)]
    pub pos_sidecar: Option<PathBuf>,
    /// Use the naive tagger for samples missing from the sidecar.
    #[serde(default = "yes")]
    pub sidecar_fallback: bool,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            top_k: default_top_k(),
            all_tokens: false,
            pos_sidecar: None,
            sidecar_fallback: true,
        }
    }
}

fn default_top_k() -> usize {
    20
}
fn yes() -> bool {
    true
}

pub fn load_sidecar(path: &Path) -> CliResult<PosSidecar> {
    let raw = fs::read_to_string(path).map_err(|e| data(anyhow!("cannot read {}: {e}", path.display())))?;
    PosSidecar::parse(&raw).map_err(|e| data(anyhow!("{}: {e}", path.display())))
}

/// Computes the report and writes `stats.json`, `hapax.csv` and
/// `phrases.csv` into `dir`.
pub fn stats(corpus: &Corpus, opts: &StatsOptions, sidecar: Option<&PosSidecar>, dir: &Path) -> CliResult<(StatsReport, Vec<PathBuf>)> {
    let tok = if opts.all_tokens {
        TokenizerConfig {
            hapax_mode: stats::HapaxMode::AllTokens,
            ..TokenizerConfig::default()
        }
    } else {
        TokenizerConfig::default()
    };
    let pos = match (sidecar, opts.sidecar_fallback) {
        (None, _) => PosSource::Naive,
        (Some(s), true) => PosSource::SidecarOrNaive(s),
        (Some(s), false) => PosSource::Sidecar(s),
    };
    let report = stats::compute_report(corpus, &tok, pos, opts.top_k).map_err(data)?;
    let json = dir.join("stats.json");
    write_json(&json, &report)?;
    let hapax = dir.join("hapax.csv");
    let mut buf = Vec::new();
    stats::write_hapax_csv(&report.hapax, &mut buf).map_err(data)?;
    write_text(&hapax, &String::from_utf8(buf).expect("csv is utf-8"))?;
    let phrases = dir.join("phrases.csv");
    let mut buf = Vec::new();
    stats::write_phrase_csv(&report.phrase_dist, &mut buf).map_err(data)?;
    write_text(&phrases, &String::from_utf8(buf).expect("csv is utf-8"))?;
    Ok((report, vec![json, hapax, phrases]))
}

pub fn write_rejects(path: &Path, rejects: &[Reject]) -> CliResult<()> {
    dataset::write_jsonl(path, rejects).map_err(data)
}

pub fn corpus_of(samples: Vec<AnnotatedSample>, provenance: &str) -> CliResult<Corpus> {
    Corpus::new(provenance, samples).map_err(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_stage() {
        assert_eq!(derive_seed(7, "gold"), derive_seed(7, "gold"));
        assert_ne!(derive_seed(7, "gold"), derive_seed(7, "split"));
        assert_ne!(derive_seed(7, "gold"), derive_seed(8, "gold"));
    }

    #[test]
    fn guards() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x");
        guard_file(&f, false).unwrap();
        fs::write(&f, "1").unwrap();
        assert!(guard_file(&f, false).is_err());
        guard_file(&f, true).unwrap();
        assert!(guard_dir(dir.path(), false).is_err());
        guard_dir(&dir.path().join("fresh"), false).unwrap();
        assert!(dir.path().join("fresh").is_dir());
    }
}
