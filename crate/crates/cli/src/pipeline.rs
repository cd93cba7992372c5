//! The whole procedure in one run directory.
//!
//! ```text
//! run/
//!   manifest.json  report.json  report.txt
//!   ingest/   filter/   sample/   agreement/   gold/
//!   splits/<split>/      annotate/<split>/      generate/<split>/
//!   stats/real/          stats/synthetic_<split>/
//! ```

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use slurg_core::dataset::{self, make_split};
use slurg_core::{select_gold, Corpus, Source};
use slurg_llm::{LlmConfig, TransportKind};
use slurg_review::{likert_means, ReviewConfig, ReviewStore};

use crate::error::{config, data, CliError, CliResult};
use crate::manifest::{ManifestBuilder, RunManifest};
use crate::ops::{self, GenerationPlan, StatsOptions};
use crate::report::{pair_rows, PipelineReport, SplitRow, StatsRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Unannotated comment files, the real corpus for statistics.
    pub raw: Vec<PathBuf>,
    #[serde(default = "default_source")]
    pub raw_source: Source,
    /// Files with every human annotator's samples.
    #[serde(default)]
    pub annotations: Vec<PathBuf>,
    /// Review store whose span annotations join `annotations` and whose
    /// Likert scores go into the report.
    #[serde(default)]
    pub review_store: Option<PathBuf>,
    /// Samples must be longer than this many characters.
    #[serde(default)]
    pub min_length: usize,
    /// Size of a batch drawn from the filtered corpus for human annotation.
    #[serde(default)]
    pub annotation_batch: Option<usize>,
    #[serde(default = "default_threshold")]
    pub gold_threshold: f64,
    /// Split specs; the four standard ones when empty.
    #[serde(default)]
    pub splits: Vec<String>,
    #[serde(default)]
    pub generation: GenerationPlan,
    #[serde(default)]
    pub stats: StatsOptions,
    pub llm: LlmConfig,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_source() -> Source {
    Source::Reddit
}
fn default_threshold() -> f64 {
    0.8
}

impl PipelineConfig {
    /// Reads the config; relative paths inside it are relative to the file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| config(anyhow!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&raw).map_err(|e| config(anyhow!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.raw.iter_mut().for_each(fix);
        cfg.annotations.iter_mut().for_each(fix);
        cfg.review_store.iter_mut().for_each(fix);
        cfg.stats.pos_sidecar.iter_mut().for_each(fix);
        cfg.llm.mock_generation_response.iter_mut().for_each(fix);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Everything checked before any stage runs, so a bad config never
    /// sends a request.
    pub fn validate(&self) -> CliResult<()> {
        self.llm.validate().map_err(config)?;
        if self.llm.transport == TransportKind::Http {
            if let Some(var) = &self.llm.api_key_env {
                if std::env::var(var).is_err() {
                    return Err(config(anyhow!("environment variable `{var}` holding the API token is not set")));
                }
            }
        }
        if self.raw.is_empty() {
            return Err(config(anyhow!("`raw` must list at least one file")));
        }
        if self.annotations.is_empty() && self.review_store.is_none() {
            return Err(config(anyhow!("give `annotations` or a `review_store`")));
        }
        if !(0.0..=1.0).contains(&self.gold_threshold) {
            return Err(config(anyhow!("gold_threshold must lie in [0, 1]")));
        }
        if self.generation.num_samples == 0 {
            return Err(config(anyhow!("generation.num_samples must be at least 1")));
        }
        ops::parse_specs(&self.splits, 0)?;
        Ok(())
    }
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    pub manifest: RunManifest,
}

fn stage<T>(name: &str, r: CliResult<T>) -> CliResult<T> {
    r.map_err(|e: CliError| e.context(format!("stage `{name}` failed")))
}

/// Runs every stage into `out_dir`. On failure the error names the stage
/// and artifacts of earlier stages stay on disk.
pub fn run(cfg: &PipelineConfig, config_path: Option<&Path>, seed: u64, out_dir: &Path) -> CliResult<PipelineOutput> {
    let mut m = ManifestBuilder::new("pipeline");
    if let Some(p) = config_path {
        m.config(p)?;
    }
    m.seed("seed", seed);

    // ingest
    let (raw, n_rejected) = stage("ingest", (|| {
        let mut samples = Vec::new();
        let mut rejects = Vec::new();
        for p in &cfg.raw {
            m.input(p);
            let ing = ops::ingest(p, cfg.raw_source)?;
            samples.extend(ing.corpus.into_samples());
            rejects.extend(ing.rejects);
        }
        let corpus = ops::corpus_of(samples, "raw")?;
        let path = out_dir.join("ingest/raw.jsonl");
        dataset::write_corpus(&path, &corpus).map_err(data)?;
        let rej = out_dir.join("ingest/rejects.jsonl");
        ops::write_rejects(&rej, &rejects)?;
        m.output(path).output(rej);
        Ok((corpus, rejects.len()))
    })())?;
    log::info!("ingest: {} samples, {} rejected", raw.len(), n_rejected);

    // filter
    let filtered = stage("filter", (|| {
        let c = dataset::filter_min_length(&raw, cfg.min_length);
        let path = out_dir.join("filter/filtered.jsonl");
        dataset::write_corpus(&path, &c).map_err(data)?;
        m.output(path);
        Ok(c)
    })())?;

    if let Some(n) = cfg.annotation_batch {
        stage("sample", (|| {
            let s = ops::derive_seed(seed, "sample");
            m.seed("sample", s);
            let batch = dataset::sample_annotation_batch(&filtered, n, s).map_err(data)?;
            let path = out_dir.join("sample/batch.jsonl");
            dataset::write_corpus(&path, &batch).map_err(data)?;
            m.output(path);
            Ok(())
        })())?;
    }

    // review store: extra annotations and Likert scores
    let (review_samples, likert) = stage("review", (|| match &cfg.review_store {
        Some(dir) => {
            m.input(dir);
            let store = ReviewStore::open(dir, ReviewConfig::default()).map_err(data)?;
            Ok((store.export_annotations(), likert_means(&store.export_likert())))
        }
        None => Ok((Vec::new(), Vec::new())),
    })())?;

    // agreement
    let (annotations, agreement) = stage("agreement", (|| {
        let mut paths = Vec::new();
        for p in &cfg.annotations {
            m.input(p);
            paths.push(p.clone());
        }
        let (mut grouped, rejects) = if paths.is_empty() {
            (Default::default(), Vec::new())
        } else {
            ops::read_annotations(&paths)?
        };
        if !review_samples.is_empty() {
            let mut all: Vec<_> = std::mem::take(&mut grouped).into_values().flat_map(Corpus::into_samples).collect();
            all.extend(review_samples.iter().cloned());
            grouped = slurg_core::sample::group_by_annotator(all).map_err(data)?;
        }
        let report = ops::agreement(&grouped)?;
        let dir = out_dir.join("agreement");
        for p in ops::write_agreement(&dir, &report)? {
            m.output(p);
        }
        let rej = dir.join("rejects.jsonl");
        ops::write_rejects(&rej, &rejects)?;
        m.output(rej);
        Ok((grouped, report))
    })())?;

    // gold
    let gold = stage("gold", (|| {
        let s = ops::derive_seed(seed, "gold");
        m.seed("gold", s);
        let gold = select_gold(&annotations, &agreement, cfg.gold_threshold, s);
        if gold.is_empty() {
            return Err(data(anyhow!("no sample has mean agreement above {}", cfg.gold_threshold)));
        }
        let path = out_dir.join("gold/gold.jsonl");
        dataset::write_corpus(&path, &gold).map_err(data)?;
        m.output(path);
        Ok(gold)
    })())?;
    log::info!("gold: {} samples", gold.len());

    // splits
    let splits = stage("split", (|| {
        let s = ops::derive_seed(seed, "split");
        m.seed("split", s);
        let mut out = Vec::new();
        for spec in ops::parse_specs(&cfg.splits, s)? {
            let split = make_split(&gold, &spec);
            let dir = out_dir.join("splits").join(spec.dir_name());
            split.write_to(&dir).map_err(data)?;
            for f in ["gold.jsonl", "fewshot.jsonl", "split.meta.json"] {
                m.output(dir.join(f));
            }
            out.push(split);
        }
        Ok(out)
    })())?;

    // annotate and evaluate
    let transport = stage("annotate", ops::make_transport(&cfg.llm, Some(&gold)))?;
    let mut rows = Vec::new();
    for split in &splits {
        let dir = out_dir.join("annotate").join(split.spec.dir_name());
        let summary = stage("annotate", (|| {
            let preds = dir.join("predictions.jsonl");
            let audit = dir.join("audit.jsonl");
            let (_, summary) = ops::annotate(split, &cfg.llm, transport.as_ref(), &preds, &audit)?;
            let eval = dir.join("eval.json");
            ops::write_json(&eval, &summary.eval)?;
            m.output(preds).output(eval).volatile_output(audit);
            ops::check_failures(&summary.failures)?;
            Ok(summary)
        })())?;
        log::info!(
            "annotate {}: strict F1 {:.4}, relaxed F1 {:.4}",
            split.spec.name,
            summary.eval.strict.f1,
            summary.eval.relaxed.f1
        );
        rows.push(SplitRow {
            split: split.spec.name.clone(),
            n_gold: split.gold.len(),
            n_fewshot: split.fewshot.len(),
            strict: summary.eval.strict,
            relaxed: summary.eval.relaxed,
            drift_count: summary.eval.drift_count,
            annotation_failures: summary.failures.len(),
            generation_requests: 0,
            generated: 0,
            compliance_rate: None,
            generation_failures: 0,
        });
    }

    // generate
    let mut synthetic = Vec::new();
    for (split, row) in splits.iter().zip(rows.iter_mut()) {
        let dir = out_dir.join("generate").join(split.spec.dir_name());
        let (corpus, summary) = stage("generate", (|| {
            let s = ops::derive_seed(seed, &format!("generate {}", split.spec.name));
            m.seed(&format!("generate {}", split.spec.name), s);
            let out = dir.join("synthetic.jsonl");
            let audit = dir.join("audit.jsonl");
            let (outcome, summary) =
                ops::generate(split, &cfg.llm, transport.as_ref(), &cfg.generation, s, &out, &audit)?;
            let sum_path = dir.join("summary.json");
            ops::write_json(&sum_path, &summary)?;
            m.output(out).output(sum_path).volatile_output(audit);
            ops::check_failures(&summary.failures)?;
            Ok((outcome.samples, summary))
        })())?;
        row.generation_requests = summary.requests;
        row.generated = summary.samples;
        row.compliance_rate = summary.compliance_rate;
        row.generation_failures = summary.failures.len();
        synthetic.push((split.spec.dir_name(), corpus));
    }

    // stats
    let stats_rows = stage("stats", (|| {
        let sidecar = match &cfg.stats.pos_sidecar {
            Some(p) => {
                m.input(p);
                Some(ops::load_sidecar(p)?)
            }
            None => None,
        };
        let mut rows = Vec::new();
        let (r, files) = ops::stats(&filtered, &cfg.stats, sidecar.as_ref(), &out_dir.join("stats/real"))?;
        files.into_iter().for_each(|f| {
            m.output(f);
        });
        rows.push(StatsRow::new("real", &r));
        for (name, corpus) in &synthetic {
            if corpus.is_empty() {
                continue;
            }
            let label = format!("synthetic_{name}");
            let (r, files) = ops::stats(corpus, &cfg.stats, sidecar.as_ref(), &out_dir.join("stats").join(&label))?;
            files.into_iter().for_each(|f| {
                m.output(f);
            });
            rows.push(StatsRow::new(label, &r));
        }
        Ok(rows)
    })())?;

    // report
    let report = PipelineReport {
        seed,
        n_raw: raw.len(),
        n_rejected,
        n_filtered: filtered.len(),
        annotators: agreement.annotators.clone(),
        agreement: pair_rows(&agreement),
        n_gold: gold.len(),
        splits: rows,
        stats: stats_rows,
        likert,
    };
    let manifest = stage("report", (|| {
        let json = out_dir.join("report.json");
        ops::write_json(&json, &report)?;
        let txt = out_dir.join("report.txt");
        ops::write_text(&txt, &report.render_text())?;
        m.output(json).output(txt);
        m.write(&out_dir.join("manifest.json"))
    })())?;
    Ok(PipelineOutput { report, manifest })
}
