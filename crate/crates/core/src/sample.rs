//! Samples, spans and corpora.
//!
//! Span offsets count Unicode scalar values (Rust `char`s) of the sample's
//! plain text, `start` inclusive and `end` exclusive.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::label::{FallacyLabel, Tier1, Tier2};

/// A labeled character range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "SpanRecord", into = "SpanRecord")]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub label: FallacyLabel,
}

#[derive(Serialize, Deserialize)]
struct SpanRecord {
    start: usize,
    end: usize,
    label: Tier1,
    #[serde(default)]
    tier2: Option<Tier2>,
}

impl From<SpanRecord> for Span {
    fn from(r: SpanRecord) -> Self {
        Span {
            start: r.start,
            end: r.end,
            label: FallacyLabel {
                tier1: r.label,
                tier2: r.tier2,
            },
        }
    }
}

impl From<Span> for SpanRecord {
    fn from(s: Span) -> Self {
        SpanRecord {
            start: s.start,
            end: s.end,
            label: s.label.tier1,
            tier2: s.label.tier2,
        }
    }
}

impl Span {
    pub fn new(start: usize, end: usize, label: impl Into<FallacyLabel>) -> Self {
        Span {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn tier1(&self) -> Tier1 {
        self.label.tier1
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Whether `other` lies within `self` (equal extents contain each other).
    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn is_disjoint(&self, other: &Span) -> bool {
        self.end <= other.start || other.end <= self.start
    }

    /// Partial overlap where neither span contains the other.
    pub fn crosses(&self, other: &Span) -> bool {
        !self.is_disjoint(other) && !self.contains(other) && !other.contains(self)
    }

    /// Identity used for duplicate detection and exact matching.
    pub fn key(&self) -> (usize, usize, Tier1) {
        (self.start, self.end, self.label.tier1)
    }

    /// Sort key placing enclosing spans before the spans they contain.
    fn canonical_key(&self) -> (usize, std::cmp::Reverse<usize>, u8, Option<Tier2>) {
        (
            self.start,
            std::cmp::Reverse(self.end),
            self.label.tier1.nesting_rank(),
            self.label.tier2,
        )
    }
}

impl PartialOrd for Span {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Span {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.canonical_key().cmp(&other.canonical_key())
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Reddit,
    Fourchan,
    Synthetic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Reddit => "reddit",
            Source::Fourchan => "fourchan",
            Source::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "reddit" => Ok(Source::Reddit),
            "fourchan" | "4chan" => Ok(Source::Fourchan),
            "synthetic" => Ok(Source::Synthetic),
            other => Err(format!("unknown source `{other}`")),
        }
    }
}

/// One comment with its span annotations by a single annotator.
///
/// Spans form a set: equality ignores their order, and constructors keep
/// them in canonical order (start ascending, enclosing spans first).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatedSample {
    pub sample_id: String,
    #[serde(default)]
    pub annotator_id: String,
    pub source: Source,
    pub text: String,
    #[serde(default)]
    pub spans: Vec<Span>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl PartialEq for AnnotatedSample {
    fn eq(&self, other: &Self) -> bool {
        self.sample_id == other.sample_id
            && self.annotator_id == other.annotator_id
            && self.source == other.source
            && self.text == other.text
            && self.meta == other.meta
            && self.sorted_spans() == other.sorted_spans()
    }
}

impl Eq for AnnotatedSample {}

impl AnnotatedSample {
    pub fn new(
        sample_id: impl Into<String>,
        annotator_id: impl Into<String>,
        source: Source,
        text: impl Into<String>,
        mut spans: Vec<Span>,
    ) -> Self {
        spans.sort();
        AnnotatedSample {
            sample_id: sample_id.into(),
            annotator_id: annotator_id.into(),
            source,
            text: text.into(),
            spans,
            meta: BTreeMap::new(),
        }
    }

    /// Unannotated comment.
    pub fn raw(sample_id: impl Into<String>, source: Source, text: impl Into<String>) -> Self {
        Self::new(sample_id, "", source, text, Vec::new())
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn sorted_spans(&self) -> Vec<Span> {
        let mut spans = self.spans.clone();
        spans.sort();
        spans
    }

    pub fn canonicalize(&mut self) {
        self.spans.sort();
    }

    /// Text covered by `span`, or `None` when out of bounds.
    pub fn span_text(&self, span: &Span) -> Option<String> {
        if span.start > span.end || span.end > self.char_len() {
            return None;
        }
        Some(
            self.text
                .chars()
                .skip(span.start)
                .take(span.end - span.start)
                .collect(),
        )
    }

    pub fn validate(&self) -> ValidationReport {
        validate_sample(self)
    }
}

/// A broken sample invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptySpan { span: Span },
    OutOfBounds { span: Span, text_len: usize },
    TierMismatch { span: Span },
    Duplicate { span: Span },
    Crossing { first: Span, second: Span },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySpan { span } => {
                write!(f, "span ({}, {}) is empty", span.start, span.end)
            }
            Violation::OutOfBounds { span, text_len } => write!(
                f,
                "span ({}, {}) ends past text length {text_len}",
                span.start, span.end
            ),
            Violation::TierMismatch { span } => write!(
                f,
                "span ({}, {}) has tier2 {:?} outside {}",
                span.start,
                span.end,
                span.label.tier2,
                span.label.tier1
            ),
            Violation::Duplicate { span } => write!(
                f,
                "span ({}, {}, {}) appears more than once",
                span.start,
                span.end,
                span.label.tier1
            ),
            Violation::Crossing { first, second } => write!(
                f,
                "spans ({}, {}) and ({}, {}) cross",
                first.start, first.end, second.start, second.end
            ),
        }
    }
}

/// Outcome of [`validate_sample`]. Violations are sorted, so the report
/// does not depend on span order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks every span invariant of `sample` and reports all violations.
pub fn validate_sample(sample: &AnnotatedSample) -> ValidationReport {
    let text_len = sample.char_len();
    let mut violations = Vec::new();
    let mut seen = HashSet::new();

    for span in &sample.spans {
        if span.is_empty() {
            violations.push(Violation::EmptySpan { span: *span });
        }
        if span.end > text_len {
            violations.push(Violation::OutOfBounds {
                span: *span,
                text_len,
            });
        }
        if !span.label.is_consistent() {
            violations.push(Violation::TierMismatch { span: *span });
        }
        if !seen.insert(span.key()) {
            violations.push(Violation::Duplicate { span: *span });
        }
    }

    let spans = sample.sorted_spans();
    for (i, a) in spans.iter().enumerate() {
        for b in &spans[i + 1..] {
            if b.start >= a.end {
                // sorted by start: nothing later can overlap `a`
                break;
            }
            if a.crosses(b) {
                violations.push(Violation::Crossing {
                    first: *a,
                    second: *b,
                });
            }
        }
    }

    violations.sort();
    violations.dedup();
    ValidationReport { violations }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("duplicate sample_id `{0}`")]
    DuplicateSampleId(String),
}

/// Ordered collection of samples with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Corpus {
    provenance: String,
    samples: Vec<AnnotatedSample>,
}

impl Corpus {
    pub fn new(
        provenance: impl Into<String>,
        samples: Vec<AnnotatedSample>,
    ) -> Result<Self, CorpusError> {
        let mut ids = HashSet::new();
        for s in &samples {
            if !ids.insert(s.sample_id.as_str()) {
                return Err(CorpusError::DuplicateSampleId(s.sample_id.clone()));
            }
        }
        Ok(Corpus {
            provenance: provenance.into(),
            samples,
        })
    }

    pub fn empty(provenance: impl Into<String>) -> Self {
        Corpus {
            provenance: provenance.into(),
            samples: Vec::new(),
        }
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn samples(&self) -> &[AnnotatedSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<AnnotatedSample> {
        self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AnnotatedSample> {
        self.samples.iter()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, sample_id: &str) -> Option<&AnnotatedSample> {
        self.samples.iter().find(|s| s.sample_id == sample_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|s| s.sample_id.as_str())
    }

    /// Keeps the samples matching `keep`, preserving order.
    pub fn filtered(&self, mut keep: impl FnMut(&AnnotatedSample) -> bool) -> Corpus {
        Corpus {
            provenance: self.provenance.clone(),
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a AnnotatedSample;
    type IntoIter = std::slice::Iter<'a, AnnotatedSample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

/// Splits a multi-annotator sample list into one corpus per annotator.
pub fn group_by_annotator(
    samples: impl IntoIterator<Item = AnnotatedSample>,
) -> Result<BTreeMap<String, Corpus>, CorpusError> {
    let mut grouped: BTreeMap<String, Vec<AnnotatedSample>> = BTreeMap::new();
    for s in samples {
        grouped.entry(s.annotator_id.clone()).or_default().push(s);
    }
    grouped
        .into_iter()
        .map(|(annotator, samples)| {
            let corpus = Corpus::new(format!("annotator:{annotator}"), samples)?;
            Ok((annotator, corpus))
        })
        .collect()
}
