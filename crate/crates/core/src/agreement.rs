//! Inter-annotator agreement via the Jaccard index (IoU) over per-label
//! character coverage, and gold-label selection.
//!
//! For two annotators and one sample, each top-level label gets a coverage
//! mask per annotator and the two masks are compared with
//! `|A ∩ B| / |A ∪ B|`. Two empty masks count as perfect agreement. The
//! per-sample score is the mean over the three labels; a pair's score is
//! the unweighted mean of its per-sample scores over the samples both
//! annotators labeled.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::label::Tier1;
use crate::sample::{AnnotatedSample, Corpus};

/// Per-character coverage of one label over one sample's text, stored as
/// sorted, merged, non-adjacent half-open runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    len: usize,
    runs: Vec<(usize, usize)>,
}

impl LabelMask {
    pub fn empty(len: usize) -> Self {
        LabelMask {
            len,
            runs: Vec::new(),
        }
    }

    /// Union of `ranges`, clipped to `len`. Empty ranges are ignored.
    pub fn from_ranges(len: usize, ranges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut sorted: Vec<(usize, usize)> = ranges
            .into_iter()
            .map(|(s, e)| (s.min(len), e.min(len)))
            .filter(|(s, e)| s < e)
            .collect();
        sorted.sort_unstable();
        let mut runs: Vec<(usize, usize)> = Vec::with_capacity(sorted.len());
        for (s, e) in sorted {
            match runs.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => runs.push((s, e)),
            }
        }
        LabelMask { len, runs }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut runs = Vec::new();
        let mut i = 0;
        while i < bits.len() {
            if bits[i] {
                let start = i;
                while i < bits.len() && bits[i] {
                    i += 1;
                }
                runs.push((start, i));
            } else {
                i += 1;
            }
        }
        LabelMask {
            len: bits.len(),
            runs,
        }
    }

    pub fn to_bits(&self) -> Vec<bool> {
        let mut bits = vec![false; self.len];
        for &(s, e) in &self.runs {
            bits[s..e].fill(true);
        }
        bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn runs(&self) -> &[(usize, usize)] {
        &self.runs
    }

    pub fn count_ones(&self) -> usize {
        self.runs.iter().map(|(s, e)| e - s).sum()
    }

    pub fn get(&self, i: usize) -> bool {
        self.runs.iter().any(|&(s, e)| s <= i && i < e)
    }

    fn intersection_count(&self, other: &LabelMask) -> usize {
        let (mut i, mut j, mut total) = (0, 0, 0);
        while i < self.runs.len() && j < other.runs.len() {
            let (a0, a1) = self.runs[i];
            let (b0, b1) = other.runs[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo < hi {
                total += hi - lo;
            }
            if a1 <= b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }
}

/// Coverage mask of `label` over `sample`; nested spans of the same label
/// union together.
pub fn label_mask(sample: &AnnotatedSample, label: Tier1) -> LabelMask {
    LabelMask::from_ranges(
        sample.char_len(),
        sample
            .spans
            .iter()
            .filter(|s| s.tier1() == label)
            .map(|s| (s.start, s.end)),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgreementError {
    #[error("mask lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("annotators stored different texts for sample `{sample_id}`")]
    TextMismatch { sample_id: String },
    #[error("no two annotators share a sample")]
    NoSharedSamples,
}

/// Jaccard index of two masks; 1.0 when both are empty.
pub fn jaccard_iou(a: &LabelMask, b: &LabelMask) -> Result<f64, AgreementError> {
    if a.len != b.len {
        return Err(AgreementError::LengthMismatch {
            left: a.len,
            right: b.len,
        });
    }
    let inter = a.intersection_count(b);
    let union = a.count_ones() + b.count_ones() - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// One value per top-level label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerLabel<T> {
    pub credibility: T,
    pub logical: T,
    pub emotional: T,
}

impl<T: Copy> PerLabel<T> {
    pub fn from_fn(mut f: impl FnMut(Tier1) -> T) -> Self {
        PerLabel {
            credibility: f(Tier1::Credibility),
            logical: f(Tier1::Logical),
            emotional: f(Tier1::Emotional),
        }
    }

    pub fn get(&self, label: Tier1) -> T {
        match label {
            Tier1::Credibility => self.credibility,
            Tier1::Logical => self.logical,
            Tier1::Emotional => self.emotional,
        }
    }

    pub fn get_mut(&mut self, label: Tier1) -> &mut T {
        match label {
            Tier1::Credibility => &mut self.credibility,
            Tier1::Logical => &mut self.logical,
            Tier1::Emotional => &mut self.emotional,
        }
    }
}

impl PerLabel<f64> {
    pub fn mean(&self) -> f64 {
        (self.credibility + self.logical + self.emotional) / 3.0
    }
}

/// Agreement of two annotators on one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePairScore {
    pub annotator_a: String,
    pub annotator_b: String,
    pub per_label: PerLabel<f64>,
    pub mean: f64,
}

/// Per-sample agreement of two annotators, given the same text.
pub fn sample_agreement(
    a: &AnnotatedSample,
    b: &AnnotatedSample,
) -> Result<PerLabel<f64>, AgreementError> {
    if a.text != b.text {
        return Err(AgreementError::TextMismatch {
            sample_id: a.sample_id.clone(),
        });
    }
    let mut out = PerLabel::default();
    for label in Tier1::ALL {
        *out.get_mut(label) = jaccard_iou(&label_mask(a, label), &label_mask(b, label))?;
    }
    Ok(out)
}

/// Agreement of one annotator pair over their shared samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub annotator_a: String,
    pub annotator_b: String,
    pub shared_samples: usize,
    /// per-label IoU averaged over shared samples
    pub per_label: PerLabel<f64>,
    /// per-sample label means, averaged over shared samples
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Sorted annotator ids; row/column order of `matrix`.
    pub annotators: Vec<String>,
    pub pair_scores: Vec<PairScore>,
    pub per_sample: BTreeMap<String, Vec<SamplePairScore>>,
    /// Overall pair means; `None` where a pair shares no sample.
    pub matrix: Vec<Vec<Option<f64>>>,
}

impl AgreementReport {
    pub fn pair(&self, a: &str, b: &str) -> Option<&PairScore> {
        self.pair_scores.iter().find(|p| {
            (p.annotator_a == a && p.annotator_b == b) || (p.annotator_a == b && p.annotator_b == a)
        })
    }

    /// Mean over all annotator pairs that labeled `sample_id`.
    pub fn sample_mean(&self, sample_id: &str) -> Option<f64> {
        let scores = self.per_sample.get(sample_id)?;
        if scores.is_empty() {
            return None;
        }
        Some(scores.iter().map(|s| s.mean).sum::<f64>() / scores.len() as f64)
    }

    /// Mean of an annotator's row, excluding the diagonal and missing pairs.
    pub fn annotator_mean(&self, annotator: &str) -> Option<f64> {
        let i = self.annotators.iter().position(|a| a == annotator)?;
        let vals: Vec<f64> = self.matrix[i]
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .filter_map(|(_, v)| *v)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    /// Writes the matrix as CSV with annotator ids as header and row labels.
    pub fn write_matrix_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["annotator".to_string()];
        header.extend(self.annotators.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.matrix.iter().enumerate() {
            let mut rec = vec![self.annotators[i].clone()];
            rec.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pairwise agreement between every pair of annotators.
///
/// `annotations` maps annotator id to that annotator's corpus. Samples are
/// matched by `sample_id`; both annotators must hold the same text.
pub fn pairwise_agreement(
    annotations: &BTreeMap<String, Corpus>,
) -> Result<AgreementReport, AgreementError> {
    let annotators: Vec<String> = annotations.keys().cloned().collect();
    let n = annotators.len();
    let mut matrix = vec![vec![None; n]; n];
    for (i, row) in matrix.iter_mut().enumerate() {
        row[i] = Some(1.0);
    }
    let mut pair_scores = Vec::new();
    let mut per_sample: BTreeMap<String, Vec<SamplePairScore>> = BTreeMap::new();

    for i in 0..n {
        for j in (i + 1)..n {
            let a = &annotations[&annotators[i]];
            let b = &annotations[&annotators[j]];
            let by_id: BTreeMap<&str, &AnnotatedSample> =
                b.iter().map(|s| (s.sample_id.as_str(), s)).collect();
            let mut shared: Vec<(&AnnotatedSample, &AnnotatedSample)> = a
                .iter()
                .filter_map(|sa| by_id.get(sa.sample_id.as_str()).map(|sb| (sa, *sb)))
                .collect();
            if shared.is_empty() {
                continue;
            }
            shared.sort_by(|x, y| x.0.sample_id.cmp(&y.0.sample_id));

            let mut label_sums = PerLabel::<f64>::default();
            let mut mean_sum = 0.0;
            for (sa, sb) in &shared {
                let scores = sample_agreement(sa, sb)?;
                let mean = scores.mean();
                for label in Tier1::ALL {
                    *label_sums.get_mut(label) += scores.get(label);
                }
                mean_sum += mean;
                per_sample
                    .entry(sa.sample_id.clone())
                    .or_default()
                    .push(SamplePairScore {
                        annotator_a: annotators[i].clone(),
                        annotator_b: annotators[j].clone(),
                        per_label: scores,
                        mean,
                    });
            }
            let count = shared.len() as f64;
            let overall = mean_sum / count;
            matrix[i][j] = Some(overall);
            matrix[j][i] = Some(overall);
            pair_scores.push(PairScore {
                annotator_a: annotators[i].clone(),
                annotator_b: annotators[j].clone(),
                shared_samples: shared.len(),
                per_label: PerLabel::from_fn(|l| label_sums.get(l) / count),
                overall,
            });
        }
    }

    if pair_scores.is_empty() {
        return Err(AgreementError::NoSharedSamples);
    }
    Ok(AgreementReport {
        annotators,
        pair_scores,
        per_sample,
        matrix,
    })
}

/// Keeps samples whose mean pairwise agreement is strictly above
/// `threshold`, taking one annotator's version of each uniformly at random.
///
/// Samples appear in order of first appearance across annotators (sorted
/// by annotator id). The same `seed` always yields the same corpus.
pub fn select_gold(
    annotations: &BTreeMap<String, Corpus>,
    report: &AgreementReport,
    threshold: f64,
    seed: u64,
) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<&str> = Vec::new();
    let mut versions: BTreeMap<&str, Vec<&AnnotatedSample>> = BTreeMap::new();
    for corpus in annotations.values() {
        for s in corpus {
            let entry = versions.entry(s.sample_id.as_str()).or_default();
            if entry.is_empty() {
                order.push(s.sample_id.as_str());
            }
            entry.push(s);
        }
    }

    let mut gold = Vec::new();
    for id in order {
        let Some(score) = report.sample_mean(id) else {
            continue;
        };
        if score > threshold {
            let candidates = &versions[id];
            let pick = rng.random_range(0..candidates.len());
            gold.push(candidates[pick].clone());
        }
    }
    Corpus::new(format!("gold(threshold={threshold},seed={seed})"), gold)
        .expect("ids are unique by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Tier1::*;
    use crate::sample::{Source, Span};

    fn ann(id: &str, who: &str, text: &str, spans: Vec<Span>) -> AnnotatedSample {
        AnnotatedSample::new(id, who, Source::Reddit, text, spans)
    }

    #[test]
    fn masks() {
        let s = ann("x", "a", "abcdef", vec![]);
        assert_eq!(label_mask(&s, Logical).to_bits(), vec![false; 6]);

        let s = ann("x", "a", "abcdef", vec![Span::new(2, 5, Logical)]);
        assert_eq!(
            label_mask(&s, Logical).to_bits(),
            vec![false, false, true, true, true, false]
        );

        let s = ann(
            "x",
            "a",
            "abcdef",
            vec![Span::new(0, 6, Emotional), Span::new(2, 4, Emotional)],
        );
        assert_eq!(label_mask(&s, Emotional).to_bits(), vec![true; 6]);
    }

    #[test]
    fn iou_cases() {
        let full = LabelMask::from_ranges(8, [(1, 6)]);
        assert_eq!(jaccard_iou(&full, &full).unwrap(), 1.0);
        let e = LabelMask::empty(8);
        assert_eq!(jaccard_iou(&e, &e).unwrap(), 1.0);
        let a = LabelMask::from_ranges(20, [(0, 10)]);
        let b = LabelMask::from_ranges(20, [(5, 15)]);
        assert_eq!(jaccard_iou(&a, &b).unwrap(), 5.0 / 15.0);
        assert_eq!(
            jaccard_iou(&a, &LabelMask::empty(3)),
            Err(AgreementError::LengthMismatch { left: 20, right: 3 })
        );
    }

    #[test]
    fn mask_run_merging() {
        let m = LabelMask::from_ranges(10, [(4, 6), (0, 2), (2, 3), (5, 8)]);
        assert_eq!(m.runs(), &[(0, 3), (4, 8)]);
        assert_eq!(LabelMask::from_bits(&m.to_bits()), m);
    }

    fn grouped(samples: Vec<AnnotatedSample>) -> BTreeMap<String, Corpus> {
        crate::sample::group_by_annotator(samples).unwrap()
    }

    #[test]
    fn identical_annotators_agree_fully() {
        let spans = vec![Span::new(0, 3, Logical)];
        let g = grouped(vec![
            ann("1", "a", "hello there", spans.clone()),
            ann("1", "b", "hello there", spans),
        ]);
        let r = pairwise_agreement(&g).unwrap();
        assert_eq!(r.matrix, vec![vec![Some(1.0), Some(1.0)], vec![Some(1.0), Some(1.0)]]);
    }

    #[test]
    fn two_of_three_labels_agree() {
        // credibility empty for both, logical identical, emotional disjoint
        let g = grouped(vec![
            ann("1", "a", "0123456789", vec![Span::new(0, 4, Logical), Span::new(5, 7, Emotional)]),
            ann("1", "b", "0123456789", vec![Span::new(0, 4, Logical), Span::new(8, 9, Emotional)]),
        ]);
        let r = pairwise_agreement(&g).unwrap();
        assert_eq!(r.pair_scores[0].overall, 2.0 / 3.0);
        assert_eq!(r.pair_scores[0].per_label.emotional, 0.0);
    }

    #[test]
    fn errors() {
        let g = grouped(vec![
            ann("1", "a", "one text", vec![]),
            ann("1", "b", "another text", vec![]),
        ]);
        assert_eq!(
            pairwise_agreement(&g),
            Err(AgreementError::TextMismatch { sample_id: "1".into() })
        );
        let g = grouped(vec![ann("1", "a", "t", vec![]), ann("2", "b", "t", vec![])]);
        assert_eq!(pairwise_agreement(&g), Err(AgreementError::NoSharedSamples));
    }

    #[test]
    fn gold_threshold_is_strict() {
        // 0.8 agreement: logical IoU 0.4 with both other labels empty -> (1 + 0.4 + 1)/3 = 0.8
        let g = grouped(vec![
            ann("1", "a", "0123456789", vec![Span::new(0, 10, Logical)]),
            ann("1", "b", "0123456789", vec![Span::new(0, 4, Logical)]),
        ]);
        let r = pairwise_agreement(&g).unwrap();
        let score = r.sample_mean("1").unwrap();
        assert!((score - 0.8).abs() < 1e-12);
        // exactly representable threshold at the computed value
        assert!(select_gold(&g, &r, score, 1).is_empty());
        assert_eq!(select_gold(&g, &r, 0.0, 1).len(), 1);
    }

    #[test]
    fn gold_selection_is_seeded() {
        let mut samples = Vec::new();
        for i in 0..30 {
            for who in ["a", "b", "c"] {
                samples.push(ann(&i.to_string(), who, "same text", vec![]));
            }
        }
        let g = grouped(samples);
        let r = pairwise_agreement(&g).unwrap();
        let one = select_gold(&g, &r, 0.8, 42);
        let two = select_gold(&g, &r, 0.8, 42);
        assert_eq!(one.len(), 30);
        assert_eq!(one, two);
        let pickers: std::collections::BTreeSet<_> =
            one.iter().map(|s| s.annotator_id.clone()).collect();
        assert!(pickers.len() > 1);
    }
}
