//! Span-level precision, recall and F1 between gold and predicted corpora.
//!
//! Strict scoring counts a prediction only when start, end and top-level
//! label all match a gold span. Relaxed scoring pairs same-label spans
//! one-to-one, greedily by descending IoU, and credits each pair with its
//! IoU. Both are micro-averaged over the corpus.
//!
//! A prediction whose text differs from the gold text (the model rewrote
//! the comment) is counted as drift: its gold spans stay in the recall
//! denominator, its predicted spans stay in the precision denominator, and
//! nothing matches.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::agreement::PerLabel;
use crate::label::Tier1;
use crate::sample::{AnnotatedSample, Corpus, Span};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("gold sample `{0}` has no prediction")]
    MissingPrediction(String),
    #[error("prediction `{0}` has no gold sample")]
    UnexpectedPrediction(String),
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Scores from matched mass and the two span counts. Empty
    /// denominators score 0.
    pub fn from_counts(matched: f64, n_pred: usize, n_gold: usize) -> Prf {
        let precision = if n_pred == 0 { 0.0 } else { matched / n_pred as f64 };
        let recall = if n_gold == 0 { 0.0 } else { matched / n_gold as f64 };
        Prf {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Raw tallies for one label (or the whole corpus).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub n_gold: usize,
    pub n_pred: usize,
    pub strict_tp: usize,
    pub relaxed_mass: f64,
}

impl Tally {
    fn add(&mut self, other: &Tally) {
        self.n_gold += other.n_gold;
        self.n_pred += other.n_pred;
        self.strict_tp += other.strict_tp;
        self.relaxed_mass += other.relaxed_mass;
    }

    pub fn strict(&self) -> Prf {
        Prf::from_counts(self.strict_tp as f64, self.n_pred, self.n_gold)
    }

    pub fn relaxed(&self) -> Prf {
        Prf::from_counts(self.relaxed_mass, self.n_pred, self.n_gold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelScores {
    pub strict: Prf,
    pub relaxed: Prf,
    pub n_gold_spans: usize,
    pub n_pred_spans: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split: Option<String>,
    pub strict: Prf,
    pub relaxed: Prf,
    pub per_label: BTreeMap<Tier1, LabelScores>,
    pub n_samples: usize,
    pub n_gold_spans: usize,
    pub n_pred_spans: usize,
    pub strict_tp: usize,
    pub relaxed_mass: f64,
    pub drift_count: usize,
}

impl EvalReport {
    pub fn with_split(mut self, name: impl Into<String>) -> Self {
        self.split = Some(name.into());
        self
    }
}

/// IoU of two character ranges.
pub fn span_iou(a: &Span, b: &Span) -> f64 {
    let inter = a.end.min(b.end).saturating_sub(a.start.max(b.start));
    if inter == 0 {
        return 0.0;
    }
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Greedy one-to-one matching of same-label spans by descending IoU.
///
/// Ties go to the earlier gold start, then the earlier predicted start
/// (then ends, for a total order). Returns `(gold index, pred index, iou)`
/// in matching order; pairs with zero overlap never match.
pub fn greedy_match(gold: &[Span], pred: &[Span]) -> Vec<(usize, usize, f64)> {
    let mut candidates = Vec::new();
    for (gi, g) in gold.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            if g.tier1() != p.tier1() {
                continue;
            }
            let iou = span_iou(g, p);
            if iou > 0.0 {
                candidates.push((gi, pi, iou));
            }
        }
    }
    candidates.sort_by(|x, y| {
        let (g1, p1, g2, p2) = (&gold[x.0], &pred[x.1], &gold[y.0], &pred[y.1]);
        y.2.total_cmp(&x.2)
            .then(g1.start.cmp(&g2.start))
            .then(p1.start.cmp(&p2.start))
            .then(g1.end.cmp(&g2.end))
            .then(p1.end.cmp(&p2.end))
    });
    let mut gold_used = vec![false; gold.len()];
    let mut pred_used = vec![false; pred.len()];
    let mut matches = Vec::new();
    for (gi, pi, iou) in candidates {
        if !gold_used[gi] && !pred_used[pi] {
            gold_used[gi] = true;
            pred_used[pi] = true;
            matches.push((gi, pi, iou));
        }
    }
    matches
}

/// Per-label tallies for one gold/predicted pair of the same sample.
pub fn score_sample(gold: &AnnotatedSample, pred: &AnnotatedSample) -> (PerLabel<Tally>, bool) {
    let drift = gold.text != pred.text;
    let mut out = PerLabel::<Tally>::default();
    for label in Tier1::ALL {
        let g: Vec<Span> = gold.sorted_spans().into_iter().filter(|s| s.tier1() == label).collect();
        let p: Vec<Span> = pred.sorted_spans().into_iter().filter(|s| s.tier1() == label).collect();
        let tally = out.get_mut(label);
        tally.n_gold = g.len();
        tally.n_pred = p.len();
        if drift {
            continue;
        }
        tally.strict_tp = p
            .iter()
            .filter(|ps| g.iter().any(|gs| gs.key() == ps.key()))
            .count();
        tally.relaxed_mass = greedy_match(&g, &p).iter().map(|m| m.2).sum();
    }
    (out, drift)
}

/// Scores `pred` against `gold`, joined on `sample_id`.
///
/// Samples are processed in sorted id order so the result does not depend
/// on corpus order.
pub fn evaluate(gold: &Corpus, pred: &Corpus) -> Result<EvalReport, EvalError> {
    let preds: BTreeMap<&str, &AnnotatedSample> =
        pred.iter().map(|s| (s.sample_id.as_str(), s)).collect();
    let golds: BTreeMap<&str, &AnnotatedSample> =
        gold.iter().map(|s| (s.sample_id.as_str(), s)).collect();
    if let Some(extra) = preds.keys().find(|id| !golds.contains_key(*id)) {
        return Err(EvalError::UnexpectedPrediction(extra.to_string()));
    }

    let mut per_label = PerLabel::<Tally>::default();
    let mut drift_count = 0;
    for (id, g) in &golds {
        let p = preds
            .get(id)
            .ok_or_else(|| EvalError::MissingPrediction(id.to_string()))?;
        let (tallies, drift) = score_sample(g, p);
        if drift {
            drift_count += 1;
        }
        for label in Tier1::ALL {
            per_label.get_mut(label).add(&tallies.get(label));
        }
    }

    let mut total = Tally::default();
    for label in Tier1::ALL {
        total.add(&per_label.get(label));
    }
    Ok(EvalReport {
        split: None,
        strict: total.strict(),
        relaxed: total.relaxed(),
        per_label: Tier1::ALL
            .into_iter()
            .map(|l| {
                let t = per_label.get(l);
                (
                    l,
                    LabelScores {
                        strict: t.strict(),
                        relaxed: t.relaxed(),
                        n_gold_spans: t.n_gold,
                        n_pred_spans: t.n_pred,
                    },
                )
            })
            .collect(),
        n_samples: golds.len(),
        n_gold_spans: total.n_gold,
        n_pred_spans: total.n_pred,
        strict_tp: total.strict_tp,
        relaxed_mass: total.relaxed_mass,
        drift_count,
    })
}

/// Strict precision/recall/F1 only.
pub fn strict_f1(gold: &Corpus, pred: &Corpus) -> Result<Prf, EvalError> {
    evaluate(gold, pred).map(|r| r.strict)
}

/// Relaxed (IoU-credited) precision/recall/F1 only.
pub fn relaxed_f1(gold: &Corpus, pred: &Corpus) -> Result<Prf, EvalError> {
    evaluate(gold, pred).map(|r| r.relaxed)
}

/// Full report for one split, tagged with its name (e.g. `"80/20"`).
pub fn evaluate_split(
    split_name: &str,
    gold: &Corpus,
    predictions: &Corpus,
) -> Result<EvalReport, EvalError> {
    evaluate(gold, predictions).map(|r| r.with_split(split_name))
}

/// Writes `split,strict_f1,relaxed_f1` rows, one per report.
pub fn write_f1_table<W: Write>(reports: &[EvalReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["split", "strict_f1", "relaxed_f1"])?;
    for r in reports {
        w.write_record([
            r.split.clone().unwrap_or_default(),
            format!("{:.4}", r.strict.f1),
            format!("{:.4}", r.relaxed.f1),
        ])?;
    }
    w.flush()?;
    Ok(())
}
