//! Random samples and markup for property tests and fuzzing.
//!
//! Everything here is driven by a caller-supplied RNG, so a seed
//! reproduces the same data.

use rand::Rng;

use crate::label::Tier1;
use crate::sample::{AnnotatedSample, Source, Span};

/// Characters used for random text: ASCII, multi-byte scalars and `<`.
/// `>` is left out so random text never contains a tag token.
pub const ALPHABET: &[char] = &[
    'a', 'b', 'c', 'x', 'y', ' ', ' ', '.', ',', '!', '<', '/', 'é', 'ß', '€', '字', '🙂',
];

pub fn random_text<R: Rng + ?Sized>(rng: &mut R, len: usize) -> String {
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
        .collect()
}

fn random_labels<R: Rng + ?Sized>(rng: &mut R) -> Vec<Tier1> {
    let mut labels: Vec<Tier1> = Tier1::ALL
        .iter()
        .copied()
        .filter(|_| rng.random_bool(0.4))
        .collect();
    if labels.is_empty() {
        labels.push(Tier1::ALL[rng.random_range(0..3)]);
    }
    labels
}

fn fill<R: Rng + ?Sized>(rng: &mut R, lo: usize, hi: usize, depth: u32, out: &mut Vec<Span>) {
    if depth == 0 || hi <= lo {
        return;
    }
    let mut cursor = lo;
    while cursor < hi {
        if !rng.random_bool(0.45) {
            cursor += rng.random_range(1..=3);
            continue;
        }
        let start = cursor;
        let end = rng.random_range(start + 1..=hi.min(start + 12));
        for label in random_labels(rng) {
            out.push(Span::new(start, end, label));
        }
        fill(rng, start, end, depth - 1, out);
        cursor = end;
    }
}

/// A valid forest of tier-1 spans over `len` characters: siblings are
/// disjoint, children lie inside parents, and equal extents may carry
/// several labels.
pub fn random_spans<R: Rng + ?Sized>(rng: &mut R, len: usize, max_depth: u32) -> Vec<Span> {
    let mut out = Vec::new();
    fill(rng, 0, len, max_depth, &mut out);
    // a child may repeat its parent's extent and label
    make_valid(len, out)
}

pub fn random_sample<R: Rng + ?Sized>(
    rng: &mut R,
    sample_id: impl Into<String>,
    max_len: usize,
) -> AnnotatedSample {
    let len = rng.random_range(0..=max_len);
    let text = random_text(rng, len);
    let spans = random_spans(rng, len, 4);
    AnnotatedSample::new(sample_id, "", Source::Synthetic, text, spans)
}

/// Drops spans that are empty, out of bounds, duplicated or crossing an
/// earlier kept span, leaving a valid set.
pub fn make_valid(text_len: usize, spans: Vec<Span>) -> Vec<Span> {
    let mut sorted = spans;
    sorted.sort();
    let mut kept: Vec<Span> = Vec::new();
    for s in sorted {
        if s.is_empty() || s.end > text_len {
            continue;
        }
        if kept.iter().any(|k| k.key() == s.key() || k.crosses(&s)) {
            continue;
        }
        kept.push(s);
    }
    kept
}

/// A noisy copy of `gold` standing in for a model prediction: spans are
/// dropped, shifted, relabeled or invented, then made valid again.
pub fn perturb<R: Rng + ?Sized>(rng: &mut R, gold: &AnnotatedSample) -> AnnotatedSample {
    let n = gold.char_len();
    let mut spans = Vec::new();
    for s in &gold.spans {
        match rng.random_range(0..6) {
            0 => {}
            1 => {
                let start = s.start.saturating_sub(rng.random_range(0..3));
                let end = (s.end + rng.random_range(0..3)).min(n);
                spans.push(Span::new(start, end, s.tier1()));
            }
            2 => spans.push(Span::new(s.start, s.end, Tier1::ALL[rng.random_range(0..3)])),
            3 => {
                let end = rng.random_range(s.start..=s.end);
                spans.push(Span::new(s.start, end, s.tier1()));
            }
            _ => spans.push(*s),
        }
    }
    if n > 0 {
        for _ in 0..rng.random_range(0..3) {
            let start = rng.random_range(0..n);
            let end = rng.random_range(start + 1..=n);
            spans.push(Span::new(start, end, Tier1::ALL[rng.random_range(0..3)]));
        }
    }
    AnnotatedSample::new(
        gold.sample_id.clone(),
        "model",
        gold.source,
        gold.text.clone(),
        make_valid(n, spans),
    )
}

/// Arbitrary, frequently malformed markup: valid and unknown tags, stray
/// closes, crossings, and text with angle brackets.
pub fn random_markup<R: Rng + ?Sized>(rng: &mut R, pieces: usize) -> String {
    const NOISE: &[&str] = &[
        "<", ">", "< emotional_fallacy>", "<emotional_fallacy", "</>", "<3", "<<>>", "<b>", "</i>",
        "<labeled_text>", "<Logical_Fallacy>", "<1a>",
    ];
    let mut out = String::new();
    for _ in 0..pieces {
        match rng.random_range(0..5) {
            0 | 1 => {
                let len = rng.random_range(0..6);
                out.push_str(&random_text(rng, len));
            }
            2 => {
                let label = Tier1::ALL[rng.random_range(0..3)];
                let closing = if rng.random_bool(0.5) { "/" } else { "" };
                out.push_str(&format!("<{closing}{}>", label.tag_name()));
            }
            3 => out.push_str(NOISE[rng.random_range(0..NOISE.len())]),
            _ => out.push_str(&random_text(rng, 1)),
        }
    }
    out
}
