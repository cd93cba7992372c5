//! Expected values come from `scripts/oracle_token_counts.py`, run once
//! over the fixtures and frozen here.

use std::path::PathBuf;

use slurg_core::dataset::ingest;
use slurg_core::stats::{
    hapax_ratio, phrase_distribution, token_frequencies, vocab_diversity, PosSource,
    TokenizerConfig,
};
use slurg_core::{Corpus, Source};

fn fixture(name: &str) -> Corpus {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    let got = ingest(&path, Source::Reddit).unwrap();
    assert!(got.rejects.is_empty());
    got.corpus
}

#[test]
fn top_five_tokens_match_oracle() {
    let top = token_frequencies(&fixture("comments50.jsonl"), &TokenizerConfig::default(), 5);
    let expected = [("war", 24), ("russia", 12), ("ukraine", 12), ("sanctions", 5), ("tanks", 5)];
    let expected: Vec<(String, usize)> = expected.iter().map(|(t, n)| (t.to_string(), *n)).collect();
    assert_eq!(top, expected);
}

#[test]
fn vocab_diversity_matches_oracle() {
    let d = vocab_diversity(&fixture("comments50.jsonl"), &TokenizerConfig::default()).unwrap();
    assert!((d - 227.0 / 338.0).abs() < 1e-12);
}

#[test]
fn frequencies_sum_to_token_count() {
    let cfg = TokenizerConfig::default();
    let all = token_frequencies(&fixture("comments50.jsonl"), &cfg, usize::MAX);
    assert_eq!(all.iter().map(|(_, n)| n).sum::<usize>(), 338);
    assert_eq!(all.len(), 227);
}

#[test]
fn smaller_corpus_can_be_more_diverse() {
    let cfg = TokenizerConfig::default();
    let reddit = fixture("reddit_diversity.jsonl");
    let chan = fixture("fourchan_diversity.jsonl");
    assert!(chan.len() < reddit.len());
    let (r, c) = (vocab_diversity(&reddit, &cfg).unwrap(), vocab_diversity(&chan, &cfg).unwrap());
    assert!((r - 24.0 / 65.0).abs() < 1e-12);
    assert_eq!(c, 1.0);
    assert!(c > r);
}

#[test]
fn real_style_comments_cluster_near_one() {
    let h = hapax_ratio(&fixture("comments50.jsonl"), &TokenizerConfig::default()).unwrap();
    let mean = h.mean.unwrap();
    assert!(mean > 0.85, "{mean}");
    assert!(h.per_sentence.iter().all(|s| (0.0..=1.0).contains(&s.ratio)));
}

#[test]
fn phrase_distribution_is_normalized_and_deterministic() {
    let c = fixture("comments50.jsonl");
    let d = phrase_distribution(&c, PosSource::Naive).unwrap();
    let sum: f64 = d.proportions.values().sum();
    assert!((sum - 1.0).abs() < 1e-12);
    assert!(d.proportions.values().all(|p| (0.0..=1.0).contains(p)));
    assert_eq!(d, phrase_distribution(&c, PosSource::Naive).unwrap());
}
