//! Consolidated pipeline report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use slurg_core::agreement::AgreementReport;
use slurg_core::stats::{Phrase, StatsReport};
use slurg_core::Prf;
use slurg_review::LikertMean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub annotator_a: String,
    pub annotator_b: String,
    pub shared_samples: usize,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub split: String,
    pub n_gold: usize,
    pub n_fewshot: usize,
    pub strict: Prf,
    pub relaxed: Prf,
    pub drift_count: usize,
    pub annotation_failures: usize,
    pub generation_requests: usize,
    pub generated: usize,
    pub compliance_rate: Option<f64>,
    pub generation_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub corpus: String,
    pub n_samples: usize,
    pub n_tokens: usize,
    pub vocab_diversity: Option<f64>,
    pub hapax_mean: Option<f64>,
    pub phrase_proportions: BTreeMap<Phrase, f64>,
    pub top_tokens: Vec<(String, usize)>,
}

impl StatsRow {
    pub fn new(corpus: impl Into<String>, r: &StatsReport) -> Self {
        StatsRow {
            corpus: corpus.into(),
            n_samples: r.n_samples,
            n_tokens: r.n_tokens,
            vocab_diversity: r.vocab_diversity,
            hapax_mean: r.hapax.mean,
            phrase_proportions: r.phrase_dist.proportions.clone(),
            top_tokens: r.top_k.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub n_raw: usize,
    pub n_rejected: usize,
    pub n_filtered: usize,
    pub annotators: Vec<String>,
    pub agreement: Vec<PairRow>,
    pub n_gold: usize,
    pub splits: Vec<SplitRow>,
    pub stats: Vec<StatsRow>,
    pub likert: Vec<LikertMean>,
}

pub fn pair_rows(report: &AgreementReport) -> Vec<PairRow> {
    report
        .pair_scores
        .iter()
        .map(|p| PairRow {
            annotator_a: p.annotator_a.clone(),
            annotator_b: p.annotator_b.clone(),
            shared_samples: p.shared_samples,
            overall: p.overall,
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

impl PipelineReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "seed {}", self.seed);
        let _ = writeln!(
            w,
            "corpus: {} ingested, {} rejected, {} after length filter",
            self.n_raw, self.n_rejected, self.n_filtered
        );
        let _ = writeln!(w, "\nagreement ({} annotators)", self.annotators.len());
        for p in &self.agreement {
            let _ = writeln!(
                w,
                "  {:<12} {:<12} shared {:>4}  iou {:.4}",
                p.annotator_a, p.annotator_b, p.shared_samples, p.overall
            );
        }
        let _ = writeln!(w, "gold samples: {}", self.n_gold);

        let _ = writeln!(w, "\nspan F1");
        let _ = writeln!(
            w,
            "  {:<8} {:>5} {:>8}  {:>8} {:>8} {:>8}  {:>8} {:>8} {:>8}",
            "split", "gold", "fewshot", "strict P", "R", "F1", "relax P", "R", "F1"
        );
        for s in &self.splits {
            let _ = writeln!(
                w,
                "  {:<8} {:>5} {:>8}  {:>8.4} {:>8.4} {:>8.4}  {:>8.4} {:>8.4} {:>8.4}",
                s.split,
                s.n_gold,
                s.n_fewshot,
                s.strict.precision,
                s.strict.recall,
                s.strict.f1,
                s.relaxed.precision,
                s.relaxed.recall,
                s.relaxed.f1
            );
        }

        let _ = writeln!(w, "\ngeneration");
        for s in &self.splits {
            let _ = writeln!(
                w,
                "  {:<8} {} requests, {} samples, compliance {}, {} failed",
                s.split,
                s.generation_requests,
                s.generated,
                opt(s.compliance_rate),
                s.generation_failures
            );
        }

        let _ = writeln!(w, "\ncorpus statistics");
        let _ = writeln!(
            w,
            "  {:<20} {:>7} {:>7} {:>8} {:>8} {:>6} {:>6} {:>6} {:>6}",
            "corpus", "samples", "tokens", "ttr", "hapax", "NP", "VP", "PP", "SBAR"
        );
        for r in &self.stats {
            let p = |ph| r.phrase_proportions.get(&ph).copied().unwrap_or(0.0);
            let _ = writeln!(
                w,
                "  {:<20} {:>7} {:>7} {:>8} {:>8} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
                r.corpus,
                r.n_samples,
                r.n_tokens,
                opt(r.vocab_diversity),
                opt(r.hapax_mean),
                p(Phrase::NP),
                p(Phrase::VP),
                p(Phrase::PP),
                p(Phrase::SBAR)
            );
        }

        if !self.likert.is_empty() {
            let _ = writeln!(w, "\nlikert means");
            for m in &self.likert {
                let _ = writeln!(w, "  {:<8} {:<17} {:.3} (n={})", m.split, m.criterion.as_str(), m.mean, m.n);
            }
        }
        out
    }
}
