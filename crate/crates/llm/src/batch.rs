//! Annotation and generation batches.
//!
//! Requests go out with bounded parallelism but results are collected in
//! input order, so the output never depends on response timing.

use std::collections::HashSet;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use slurg_core::codec::{extract_labeled_blocks, extract_labeled_line, parse_lenient};
use slurg_core::dataset::Split;
use slurg_core::{AnnotatedSample, Corpus, Source, Tier1};

use crate::audit::AuditLog;
use crate::prompt::{
    build_annotation_prompt, build_generation_prompt, fallacy_list, GenerationRequest,
    PromptBundle, SamplingParams,
};
use crate::transport::{ChatTransport, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Prompt,
    Transport,
    NoLabeledText,
    Audit,
}

/// A request that produced no usable output. The batch carries on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub request_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_id: Option<String>,
    pub kind: FailureKind,
    pub message: String,
}

pub struct BatchOptions<'a> {
    pub parallelism: usize,
    pub params: SamplingParams,
    pub audit: Option<&'a AuditLog>,
    /// Stored as `annotator_id` on predictions.
    pub model_name: String,
}

impl BatchOptions<'_> {
    pub fn new(params: SamplingParams) -> Self {
        BatchOptions {
            parallelism: 4,
            params,
            audit: None,
            model_name: "model".into(),
        }
    }
}

async fn call(
    transport: &dyn ChatTransport,
    audit: Option<&AuditLog>,
    request_id: &str,
    prompt: &PromptBundle,
) -> Result<String, Failure> {
    let result = transport.complete(prompt).await;
    if let Some(log) = audit {
        let outcome = result.as_deref().map_err(TransportError::to_string);
        log.record(request_id, prompt, outcome).map_err(|e| Failure {
            request_id: request_id.to_string(),
            sample_id: None,
            kind: FailureKind::Audit,
            message: e.to_string(),
        })?;
    }
    result.map_err(|e| Failure {
        request_id: request_id.to_string(),
        sample_id: None,
        kind: FailureKind::Transport,
        message: e.to_string(),
    })
}

#[derive(Debug, Clone)]
pub struct AnnotationOutcome {
    /// One prediction per gold sample, in gold order. Failed requests get
    /// an unannotated copy of the gold text so they score as misses.
    pub predictions: Corpus,
    pub failures: Vec<Failure>,
}

impl AnnotationOutcome {
    pub fn drift_count(&self) -> usize {
        self.predictions
            .iter()
            .filter(|p| p.meta.get("drift").is_some_and(|v| v == "true"))
            .count()
    }
}

/// Asks the model to annotate every gold sample of `split`, with the
/// split's few-shot samples as examples.
pub async fn annotate_batch(
    split: &Split,
    transport: &dyn ChatTransport,
    guidelines: &str,
    opts: &BatchOptions<'_>,
) -> AnnotationOutcome {
    let split_name = split.spec.name.clone();
    let dir = split.spec.dir_name();
    let jobs = split.gold.iter().map(|gold| {
        let request_id = format!("annotate:{dir}:{}", gold.sample_id);
        let split_name = split_name.clone();
        async move {
            let fail = |kind, message: String| Failure {
                request_id: request_id.clone(),
                sample_id: Some(gold.sample_id.clone()),
                kind,
                message,
            };
            let placeholder = |status: &str| {
                AnnotatedSample::new(
                    gold.sample_id.clone(),
                    opts.model_name.clone(),
                    gold.source,
                    gold.text.clone(),
                    Vec::new(),
                )
                .with_meta("split", split_name.clone())
                .with_meta("status", status)
            };
            let prompt = match build_annotation_prompt(gold, guidelines, &split.fewshot, opts.params) {
                Ok(p) => p,
                Err(e) => return (placeholder("failed"), Some(fail(FailureKind::Prompt, e.to_string()))),
            };
            let raw = match call(transport, opts.audit, &request_id, &prompt).await {
                Ok(raw) => raw,
                Err(mut f) => {
                    f.sample_id = Some(gold.sample_id.clone());
                    return (placeholder("failed"), Some(f));
                }
            };
            let mut blocks = extract_labeled_blocks(&raw);
            let mut extraction = "labeled_text";
            if blocks.is_empty() {
                if let Some(line) = extract_labeled_line(&raw) {
                    blocks.push(line);
                    extraction = "labeled_line";
                }
            }
            let Some(first) = blocks.first() else {
                return (
                    placeholder("failed"),
                    Some(fail(FailureKind::NoLabeledText, "response has no labeled text".into())),
                );
            };
            let report = parse_lenient(first);
            let repairs = report.repairs_summary();
            let drift = report.text != gold.text;
            let pred = report
                .into_sample(gold.sample_id.clone(), opts.model_name.clone(), gold.source)
                .with_meta("split", split_name)
                .with_meta("status", "ok")
                .with_meta("extraction", extraction)
                .with_meta("blocks", blocks.len().to_string())
                .with_meta("repairs", repairs)
                .with_meta("drift", drift.to_string());
            (pred, None)
        }
    });

    let results: Vec<(AnnotatedSample, Option<Failure>)> = stream::iter(jobs)
        .buffered(opts.parallelism.max(1))
        .collect()
        .await;
    let mut predictions = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (pred, failure) in results {
        predictions.push(pred);
        failures.extend(failure);
    }
    AnnotationOutcome {
        predictions: Corpus::new(format!("predictions {split_name}"), predictions)
            .expect("one prediction per gold sample"),
        failures,
    }
}

/// The eight subsets of the tier-1 labels, from none to all three.
pub fn fallacy_subsets() -> Vec<Vec<Tier1>> {
    (0u8..8)
        .map(|mask| {
            Tier1::ALL
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, l)| *l)
                .collect()
        })
        .collect()
}

/// `batches` requests of `num_samples` comments each, every one asking for
/// a fallacy subset drawn uniformly with `seed`.
pub fn plan_generation_requests(
    fewshot: Arc<Corpus>,
    split_name: &str,
    num_samples: usize,
    batches: usize,
    seed: u64,
) -> Vec<GenerationRequest> {
    let subsets = fallacy_subsets();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seed_tag = format!("synth-{}", split_name.replace('/', "_"));
    (0..batches)
        .map(|_| GenerationRequest {
            fewshot: Arc::clone(&fewshot),
            num_samples,
            fallacies: subsets[rng.random_range(0..subsets.len())].clone(),
            seed_tag: seed_tag.clone(),
            split_name: split_name.to_string(),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GenerationOutcome {
    pub samples: Corpus,
    pub failures: Vec<Failure>,
    pub requests: usize,
}

impl GenerationOutcome {
    /// Share of generated samples that contain every requested fallacy.
    pub fn compliance_rate(&self) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        let ok = self
            .samples
            .iter()
            .filter(|s| s.meta.get("compliant").is_some_and(|v| v == "true"))
            .count();
        Some(ok as f64 / self.samples.len() as f64)
    }
}

/// Runs generation requests and parses every `<labeled_text>` block of
/// each response into a synthetic sample.
///
/// Sample ids are `{seed_tag}-{request:04}-{block:02}`. Each sample's
/// `meta` records the requested fallacies, split, repairs, whether all
/// requested fallacies appear (`compliant`), how many samples the response
/// fell short by (`shortfall`) and whether the text copies a few-shot
/// example (`duplicate_of_fewshot`).
pub async fn generate_batch(
    requests: &[GenerationRequest],
    transport: &dyn ChatTransport,
    definitions: &str,
    opts: &BatchOptions<'_>,
) -> GenerationOutcome {
    let jobs = requests.iter().enumerate().map(|(i, req)| async move {
        let request_id = format!("{}-{i:04}", req.seed_tag);
        let fail = |kind, message: String| Failure {
            request_id: request_id.clone(),
            sample_id: None,
            kind,
            message,
        };
        let prompt = match build_generation_prompt(req, definitions, opts.params) {
            Ok(p) => p,
            Err(e) => return Err(fail(FailureKind::Prompt, e.to_string())),
        };
        let raw = call(transport, opts.audit, &request_id, &prompt).await?;
        let blocks = extract_labeled_blocks(&raw);
        if blocks.is_empty() {
            return Err(fail(FailureKind::NoLabeledText, "response has no labeled text".into()));
        }
        let fewshot_texts: HashSet<&str> = req.fewshot.iter().map(|s| s.text.as_str()).collect();
        let shortfall = req.num_samples.saturating_sub(blocks.len());
        let requested = fallacy_list(&req.fallacies);
        let mut out = Vec::new();
        for (j, block) in blocks.iter().enumerate() {
            let report = parse_lenient(block);
            if report.text.trim().is_empty() {
                continue;
            }
            let present: HashSet<Tier1> = report.spans.iter().map(|s| s.tier1()).collect();
            let compliant = req.fallacies.iter().all(|f| present.contains(f));
            let duplicate = fewshot_texts.contains(report.text.as_str());
            let repairs = report.repairs_summary();
            let sample = report
                .into_sample(format!("{request_id}-{j:02}"), opts.model_name.clone(), Source::Synthetic)
                .with_meta("requested_fallacies", requested.clone())
                .with_meta("split_name", req.split_name.clone())
                .with_meta("seed_tag", req.seed_tag.clone())
                .with_meta("repairs", repairs)
                .with_meta("compliant", compliant.to_string())
                .with_meta("shortfall", shortfall.to_string())
                .with_meta("duplicate_of_fewshot", duplicate.to_string());
            out.push(sample);
        }
        Ok(out)
    });

    let results: Vec<Result<Vec<AnnotatedSample>, Failure>> = stream::iter(jobs)
        .buffered(opts.parallelism.max(1))
        .collect()
        .await;
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => samples.extend(s),
            Err(f) => failures.push(f),
        }
    }
    let provenance = requests
        .first()
        .map(|r| format!("generated {}", r.split_name))
        .unwrap_or_else(|| "generated".into());
    GenerationOutcome {
        samples: Corpus::new(provenance, samples)
            .expect("ids are unique per request and block"),
        failures,
        requests: requests.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_distinct_subsets() {
        let subsets = fallacy_subsets();
        assert_eq!(subsets.len(), 8);
        assert!(subsets[0].is_empty());
        assert_eq!(subsets[7], Tier1::ALL.to_vec());
        let unique: HashSet<_> = subsets.iter().collect();
        assert_eq!(unique.len(), 8);
    }

    #[test]
    fn plan_is_seeded_and_covers_subsets() {
        let fewshot = Arc::new(Corpus::empty("f"));
        let a = plan_generation_requests(Arc::clone(&fewshot), "80/20", 2, 400, 7);
        let b = plan_generation_requests(Arc::clone(&fewshot), "80/20", 2, 400, 7);
        assert_eq!(a, b);
        let seen: HashSet<_> = a.iter().map(|r| r.fallacies.clone()).collect();
        assert_eq!(seen.len(), 8);
        assert_eq!(a[0].seed_tag, "synth-80_20");
        let c = plan_generation_requests(fewshot, "80/20", 2, 400, 8);
        assert_ne!(a, c);
    }
}
