//! Inline fallacy markup.
//!
//! Annotated text travels as plain text interleaved with nested
//! `<emotional_fallacy>…</emotional_fallacy>` style tags. [`parse_tagged`]
//! turns markup into a plain string plus character spans and
//! [`render_tagged`] goes the other way. [`extract_labeled_blocks`] pulls
//! the `<labeled_text>` payloads out of raw model responses.
//!
//! A tag token is `<name>` or `</name>` where `name` matches
//! `[A-Za-z_][A-Za-z0-9_]*`. Anything else containing `<` is plain text.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::label::Tier1;
use crate::sample::{validate_sample, AnnotatedSample, Source, Span, ValidationReport};

pub const LABELED_TEXT_TAG: &str = "labeled_text";
pub const GENERATED_SAMPLES_TAG: &str = "generated_samples";
pub const FALLACY_ANALYSIS_TAG: &str = "fallacy_analysis";

static TAG_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<(/?)([A-Za-z_][A-Za-z0-9_]*)>").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    /// Any malformation is an error.
    Strict,
    /// Malformations are repaired and recorded.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkupErrorKind {
    UnknownTag { name: String },
    UnexpectedClose { label: Tier1 },
    CrossingClose { label: Tier1, innermost_open: Tier1 },
    UnclosedTag { label: Tier1 },
    EmptySpan { label: Tier1 },
    DuplicateSpan { label: Tier1 },
}

/// Markup rejected by a strict parse. `position` is the character offset
/// of the offending tag in the tagged input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("malformed markup at character {position}: {kind}")]
pub struct MarkupError {
    pub position: usize,
    pub kind: MarkupErrorKind,
}

impl fmt::Display for MarkupErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkupErrorKind::UnknownTag { name } => write!(f, "unknown tag <{name}>"),
            MarkupErrorKind::UnexpectedClose { label } => {
                write!(f, "closing </{label}> without a matching open tag")
            }
            MarkupErrorKind::CrossingClose {
                label,
                innermost_open,
            } => write!(f, "</{label}> closes across the still-open <{innermost_open}>"),
            MarkupErrorKind::UnclosedTag { label } => write!(f, "<{label}> is never closed"),
            MarkupErrorKind::EmptySpan { label } => write!(f, "<{label}> encloses no text"),
            MarkupErrorKind::DuplicateSpan { label } => {
                write!(f, "<{label}> repeats an identical enclosing span")
            }
        }
    }
}

/// A fix applied by the lenient parser. Positions are character offsets in
/// the tagged input; span offsets refer to the plain text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Repair {
    DroppedUnknownTag { position: usize, name: String },
    DroppedStrayClose { position: usize, label: Tier1 },
    TruncatedCrossing { position: usize, label: Tier1 },
    ClosedDanglingTag { position: usize, label: Tier1 },
    DroppedEmptySpan { position: usize, label: Tier1 },
    DroppedDuplicateSpan { start: usize, end: usize, label: Tier1 },
}

impl fmt::Display for Repair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Repair::DroppedUnknownTag { position, name } => {
                write!(f, "dropped-unknown-tag <{name}>@{position}")
            }
            Repair::DroppedStrayClose { position, label } => {
                write!(f, "dropped-stray-close </{label}>@{position}")
            }
            Repair::TruncatedCrossing { position, label } => {
                write!(f, "truncated-crossing <{label}>@{position}")
            }
            Repair::ClosedDanglingTag { position, label } => {
                write!(f, "closed-dangling-tag <{label}>@{position}")
            }
            Repair::DroppedEmptySpan { position, label } => {
                write!(f, "dropped-empty-span <{label}>@{position}")
            }
            Repair::DroppedDuplicateSpan { start, end, label } => {
                write!(f, "dropped-duplicate-span {label}({start},{end})")
            }
        }
    }
}

/// Plain text and spans recovered from markup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub text: String,
    pub spans: Vec<Span>,
    pub repairs: Vec<Repair>,
    pub strictness: Strictness,
}

impl ParseReport {
    pub fn into_sample(
        self,
        sample_id: impl Into<String>,
        annotator_id: impl Into<String>,
        source: Source,
    ) -> AnnotatedSample {
        AnnotatedSample::new(sample_id, annotator_id, source, self.text, self.spans)
    }

    /// Repairs joined into a single `;`-separated string, for sample metadata.
    pub fn repairs_summary(&self) -> String {
        self.repairs
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

enum Token<'a> {
    Text(&'a str),
    Tag {
        closing: bool,
        name: &'a str,
        /// character offset in the input
        position: usize,
    },
}

fn tokenize(input: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut last = 0;
    let mut chars_before = 0;
    for caps in TAG_TOKEN.captures_iter(input) {
        let m = caps.get(0).unwrap();
        let gap = &input[last..m.start()];
        if !gap.is_empty() {
            tokens.push(Token::Text(gap));
        }
        chars_before += gap.chars().count();
        tokens.push(Token::Tag {
            closing: !caps[1].is_empty(),
            name: caps.get(2).unwrap().as_str(),
            position: chars_before,
        });
        chars_before += m.as_str().chars().count();
        last = m.end();
    }
    if last < input.len() {
        tokens.push(Token::Text(&input[last..]));
    }
    tokens
}

struct OpenTag {
    label: Tier1,
    start: usize,
    position: usize,
}

/// Parses inline markup into plain text and spans.
pub fn parse_tagged(input: &str, mode: Strictness) -> Result<ParseReport, MarkupError> {
    match mode {
        Strictness::Strict => parse_strict(input),
        Strictness::Lenient => Ok(parse_lenient(input)),
    }
}

pub fn parse_strict(input: &str) -> Result<ParseReport, MarkupError> {
    let mut text = String::with_capacity(input.len());
    let mut text_len = 0usize;
    let mut stack: Vec<OpenTag> = Vec::new();
    // (span, position of its open tag)
    let mut spans: Vec<(Span, usize)> = Vec::new();

    for token in tokenize(input) {
        match token {
            Token::Text(t) => {
                text.push_str(t);
                text_len += t.chars().count();
            }
            Token::Tag {
                closing,
                name,
                position,
            } => {
                let label = Tier1::from_tag_name(name).ok_or_else(|| MarkupError {
                    position,
                    kind: MarkupErrorKind::UnknownTag {
                        name: name.to_string(),
                    },
                })?;
                if !closing {
                    stack.push(OpenTag {
                        label,
                        start: text_len,
                        position,
                    });
                    continue;
                }
                match stack.last() {
                    Some(top) if top.label == label => {
                        let open = stack.pop().unwrap();
                        spans.push((Span::new(open.start, text_len, label), open.position));
                    }
                    Some(top) => {
                        let kind = if stack.iter().any(|o| o.label == label) {
                            MarkupErrorKind::CrossingClose {
                                label,
                                innermost_open: top.label,
                            }
                        } else {
                            MarkupErrorKind::UnexpectedClose { label }
                        };
                        return Err(MarkupError { position, kind });
                    }
                    None => {
                        return Err(MarkupError {
                            position,
                            kind: MarkupErrorKind::UnexpectedClose { label },
                        })
                    }
                }
            }
        }
    }

    if let Some(open) = stack.first() {
        return Err(MarkupError {
            position: open.position,
            kind: MarkupErrorKind::UnclosedTag { label: open.label },
        });
    }

    let mut seen = std::collections::HashSet::new();
    for (span, position) in &spans {
        if span.is_empty() {
            return Err(MarkupError {
                position: *position,
                kind: MarkupErrorKind::EmptySpan { label: span.tier1() },
            });
        }
        if !seen.insert(span.key()) {
            return Err(MarkupError {
                position: *position,
                kind: MarkupErrorKind::DuplicateSpan { label: span.tier1() },
            });
        }
    }

    let mut spans: Vec<Span> = spans.into_iter().map(|(s, _)| s).collect();
    spans.sort();
    Ok(ParseReport {
        text,
        spans,
        repairs: Vec::new(),
        strictness: Strictness::Strict,
    })
}

/// Parses markup, repairing whatever is malformed. Never fails.
///
/// Unknown tags and stray closing tags are dropped. A closing tag that
/// skips over later-opened tags truncates those at the same point. Tags
/// still open at the end are closed there. Empty and duplicate spans are
/// dropped. Every fix is listed in [`ParseReport::repairs`].
pub fn parse_lenient(input: &str) -> ParseReport {
    let mut text = String::with_capacity(input.len());
    let mut text_len = 0usize;
    let mut stack: Vec<OpenTag> = Vec::new();
    let mut spans: Vec<(Span, usize)> = Vec::new();
    let mut repairs = Vec::new();
    let input_len = input.chars().count();

    for token in tokenize(input) {
        match token {
            Token::Text(t) => {
                text.push_str(t);
                text_len += t.chars().count();
            }
            Token::Tag {
                closing,
                name,
                position,
            } => {
                let Some(label) = Tier1::from_tag_name(name) else {
                    repairs.push(Repair::DroppedUnknownTag {
                        position,
                        name: name.to_string(),
                    });
                    continue;
                };
                if !closing {
                    stack.push(OpenTag {
                        label,
                        start: text_len,
                        position,
                    });
                    continue;
                }
                let Some(idx) = stack.iter().rposition(|o| o.label == label) else {
                    repairs.push(Repair::DroppedStrayClose { position, label });
                    continue;
                };
                while stack.len() > idx + 1 {
                    let inner = stack.pop().unwrap();
                    repairs.push(Repair::TruncatedCrossing {
                        position,
                        label: inner.label,
                    });
                    spans.push((Span::new(inner.start, text_len, inner.label), inner.position));
                }
                let open = stack.pop().unwrap();
                spans.push((Span::new(open.start, text_len, label), open.position));
            }
        }
    }

    while let Some(open) = stack.pop() {
        repairs.push(Repair::ClosedDanglingTag {
            position: input_len,
            label: open.label,
        });
        spans.push((Span::new(open.start, text_len, open.label), open.position));
    }

    let mut seen = std::collections::HashSet::new();
    let mut kept = Vec::with_capacity(spans.len());
    for (span, position) in spans {
        if span.is_empty() {
            repairs.push(Repair::DroppedEmptySpan {
                position,
                label: span.tier1(),
            });
        } else if !seen.insert(span.key()) {
            repairs.push(Repair::DroppedDuplicateSpan {
                start: span.start,
                end: span.end,
                label: span.tier1(),
            });
        } else {
            kept.push(span);
        }
    }
    kept.sort();

    ParseReport {
        text,
        spans: kept,
        repairs,
        strictness: Strictness::Lenient,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("invalid sample `{sample_id}`: {report}")]
    InvalidSample {
        sample_id: String,
        report: ValidationReport,
    },
    #[error("sample `{sample_id}` text contains a tag-like token at character {position}")]
    MarkupInText { sample_id: String, position: usize },
}

/// Renders a sample's spans as inline markup.
///
/// Spans sharing an extent nest with Emotional outermost, then Logical,
/// then Credibility. Fine-grained labels are not part of the markup.
pub fn render_tagged(sample: &AnnotatedSample) -> Result<String, RenderError> {
    let report = validate_sample(sample);
    if !report.is_ok() {
        return Err(RenderError::InvalidSample {
            sample_id: sample.sample_id.clone(),
            report,
        });
    }
    if let Some(m) = TAG_TOKEN.find(&sample.text) {
        return Err(RenderError::MarkupInText {
            sample_id: sample.sample_id.clone(),
            position: sample.text[..m.start()].chars().count(),
        });
    }

    // byte offset of every char boundary, including the end
    let bounds: Vec<usize> = sample
        .text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(sample.text.len()))
        .collect();
    let slice = |from: usize, to: usize| &sample.text[bounds[from]..bounds[to]];

    let spans = sample.sorted_spans();
    let mut out = String::with_capacity(sample.text.len() + spans.len() * 40);
    let mut cursor = 0usize;
    let mut stack: Vec<Span> = Vec::new();

    for span in &spans {
        while let Some(top) = stack.last() {
            if top.end > span.start {
                break;
            }
            out.push_str(slice(cursor, top.end));
            push_close(&mut out, top.tier1());
            cursor = top.end;
            stack.pop();
        }
        out.push_str(slice(cursor, span.start));
        push_open(&mut out, span.tier1());
        cursor = span.start;
        stack.push(*span);
    }
    while let Some(top) = stack.pop() {
        out.push_str(slice(cursor, top.end));
        push_close(&mut out, top.tier1());
        cursor = top.end;
    }
    out.push_str(slice(cursor, bounds.len() - 1));
    Ok(out)
}

fn push_open(out: &mut String, label: Tier1) {
    out.push('<');
    out.push_str(label.tag_name());
    out.push('>');
}

fn push_close(out: &mut String, label: Tier1) {
    out.push_str("</");
    out.push_str(label.tag_name());
    out.push('>');
}

/// Total character length of every tag token in `input`.
pub fn tag_char_len(input: &str) -> usize {
    TAG_TOKEN
        .find_iter(input)
        .map(|m| m.as_str().chars().count())
        .sum()
}

/// Returns the trimmed contents of every `<labeled_text>` block in a model
/// response.
///
/// `<fallacy_analysis>` sections are discarded first. When a
/// `<generated_samples>` wrapper is present only its contents are searched.
/// Unterminated `<labeled_text>` blocks are ignored.
pub fn extract_labeled_blocks(raw: &str) -> Vec<String> {
    let cleaned = strip_analysis(raw);
    let region = match find_tag(&cleaned, GENERATED_SAMPLES_TAG, false, 0) {
        Some(open) => {
            let body = open + GENERATED_SAMPLES_TAG.len() + 2;
            let end = find_tag(&cleaned, GENERATED_SAMPLES_TAG, true, body).unwrap_or(cleaned.len());
            &cleaned[body..end]
        }
        None => &cleaned[..],
    };

    let mut blocks = Vec::new();
    let mut from = 0;
    while let Some(open) = find_tag(region, LABELED_TEXT_TAG, false, from) {
        let body = open + LABELED_TEXT_TAG.len() + 2;
        let Some(close) = find_tag(region, LABELED_TEXT_TAG, true, body) else {
            break;
        };
        blocks.push(region[body..close].trim().to_string());
        from = close + LABELED_TEXT_TAG.len() + 3;
    }
    blocks
}

/// Fallback for responses without `<labeled_text>` blocks that instead
/// give a `Labeled Text: ...` line after the original comment. Returns
/// the rest of the last such line, trimmed.
pub fn extract_labeled_line(raw: &str) -> Option<String> {
    strip_analysis(raw)
        .lines()
        .rev()
        .find_map(|line| line.trim_start().strip_prefix("Labeled Text:"))
        .map(|rest| rest.trim().to_string())
        .filter(|rest| !rest.is_empty())
}

fn find_tag(haystack: &str, name: &str, closing: bool, from: usize) -> Option<usize> {
    let needle = if closing {
        format!("</{name}>")
    } else {
        format!("<{name}>")
    };
    haystack[from..].find(&needle).map(|i| i + from)
}

/// Removes `<fallacy_analysis>` sections. An unterminated section runs up
/// to the next output wrapper, or to the end when there is none.
fn strip_analysis(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(open) = find_tag(rest, FALLACY_ANALYSIS_TAG, false, 0) {
        out.push_str(&rest[..open]);
        let after = &rest[open..];
        let skip_to = match find_tag(after, FALLACY_ANALYSIS_TAG, true, 0) {
            Some(close) => close + FALLACY_ANALYSIS_TAG.len() + 3,
            None => [GENERATED_SAMPLES_TAG, LABELED_TEXT_TAG]
                .iter()
                .filter_map(|t| find_tag(after, t, false, 0))
                .min()
                .unwrap_or(after.len()),
        };
        rest = &after[skip_to..];
    }
    out.push_str(rest);
    out
}
