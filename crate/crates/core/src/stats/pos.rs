//! Coarse part-of-speech tags, sidecar files, and a naive fallback tagger.
//!
//! The naive tagger is a placeholder: a closed-class lexicon, a short list
//! of frequent verbs and adjectives, suffix rules, and two context rules.
//! Supply a sidecar produced by a real tagger when accuracy matters.
//!
//! Sidecar format (CoNLL-like, UTF-8):
//!
//! ```text
//! # sample_id = r-001
//! The	DT
//! dog	NN
//! ran	VBD
//!
//! # sample_id = r-002
//! ...
//! ```
//!
//! Tags may be Penn Treebank or Universal Dependencies; both map onto
//! [`PosTag`]. Blank lines are ignored.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    Det,
    Adj,
    Noun,
    Pron,
    Num,
    Verb,
    Adv,
    Prep,
    SubConj,
    CoordConj,
    /// infinitival `to`
    Part,
    Punct,
    Other,
}

impl PosTag {
    /// One-letter code used by the chunk grammar.
    pub fn code(self) -> char {
        match self {
            PosTag::Det => 'D',
            PosTag::Adj => 'J',
            PosTag::Noun => 'N',
            PosTag::Pron => 'P',
            PosTag::Num => 'M',
            PosTag::Verb => 'V',
            PosTag::Adv => 'R',
            PosTag::Prep => 'I',
            PosTag::SubConj => 'S',
            PosTag::CoordConj => 'C',
            PosTag::Part => 'T',
            PosTag::Punct | PosTag::Other => 'X',
        }
    }

    /// Maps a Penn Treebank or Universal Dependencies tag. `token` breaks
    /// the Penn `IN` ambiguity between prepositions and subordinators.
    pub fn from_external(tag: &str, token: &str) -> PosTag {
        let lower = token.to_lowercase();
        match tag.trim() {
            "DT" | "PDT" | "WDT" | "PRP$" | "WP$" | "DET" => PosTag::Det,
            "JJ" | "JJR" | "JJS" | "ADJ" => PosTag::Adj,
            "NN" | "NNS" | "NNP" | "NNPS" | "NOUN" | "PROPN" => PosTag::Noun,
            "PRP" | "WP" | "EX" | "PRON" => PosTag::Pron,
            "CD" | "NUM" => PosTag::Num,
            "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" | "MD" | "VERB" | "AUX" => PosTag::Verb,
            "RB" | "RBR" | "RBS" | "WRB" | "ADV" => PosTag::Adv,
            "IN" if SUBORDINATORS.contains(&lower.as_str()) => PosTag::SubConj,
            "IN" | "ADP" => PosTag::Prep,
            "SCONJ" => PosTag::SubConj,
            "CC" | "CCONJ" => PosTag::CoordConj,
            "TO" | "PART" if lower == "to" => PosTag::Part,
            "." | "," | ":" | "``" | "''" | "-LRB-" | "-RRB-" | "HYPH" | "PUNCT" | "SYM" => {
                PosTag::Punct
            }
            _ => PosTag::Other,
        }
    }
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "these", "those", "my", "your", "his", "its", "our", "their",
    "some", "any", "every", "each", "no", "all", "both", "another", "either", "neither", "such",
    "whose",
];
const PRONOUNS: &[&str] = &[
    "i", "me", "you", "he", "him", "she", "her", "it", "we", "us", "they", "them", "myself",
    "yourself", "himself", "herself", "itself", "ourselves", "themselves", "mine", "yours",
    "hers", "ours", "theirs", "someone", "anyone", "everyone", "nobody", "nothing", "something",
    "everything", "anything", "who", "whom", "which", "what", "one",
];
const SUBJECT_PRONOUNS: &[&str] = &["i", "you", "he", "she", "it", "we", "they", "who"];
const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "about", "against", "between", "into",
    "through", "during", "before", "after", "above", "below", "to", "from", "up", "down",
    "over", "under", "across", "along", "around", "behind", "beyond", "near", "since", "toward",
    "towards", "upon", "within", "without", "via", "per", "like", "among", "despite", "except",
    "inside", "outside", "onto", "off", "than",
];
const SUBORDINATORS: &[&str] = &[
    "because", "although", "though", "while", "whereas", "if", "unless", "until", "whether",
    "when", "whenever", "where", "wherever", "cause", "cuz",
];
const COORDINATORS: &[&str] = &["and", "or", "but", "nor", "yet", "so"];
const VERBS: &[&str] = &[
    "is", "am", "are", "was", "were", "be", "been", "being", "have", "has", "had", "do", "does",
    "did", "done", "will", "would", "shall", "should", "can", "could", "may", "might", "must",
    "don't", "doesn't", "didn't", "isn't", "aren't", "wasn't", "weren't", "won't", "can't",
    "couldn't", "wouldn't", "shouldn't", "haven't", "hasn't", "hadn't", "get", "gets", "got",
    "go", "goes", "went", "gone", "make", "makes", "made", "say", "says", "said", "know",
    "knows", "knew", "think", "thinks", "thought", "want", "wants", "need", "needs", "see",
    "sees", "saw", "seen", "come", "comes", "came", "take", "takes", "took", "taken", "give",
    "gives", "gave", "given", "tell", "tells", "told", "use", "find", "found", "run", "runs",
    "ran", "keep", "keeps", "kept", "let", "put", "seem", "seems", "feel", "feels", "felt",
    "try", "tries", "leave", "left", "call", "start", "stop", "win", "wins", "won", "lose",
    "loses", "lost", "fight", "fights", "fought", "kill", "kills", "die", "dies", "invade",
    "send", "sends", "sent", "support", "supports", "hate", "hates", "love", "loves",
    "believe", "believes", "look", "looks", "work", "works", "pay", "pays", "paid", "lie",
    "lies", "care", "cares", "happen", "happens", "help", "helps", "wait", "bomb", "nuke",
    "arm", "fund", "funds", "surrender", "watch", "read", "cope", "seethe",
];
const ADVERBS: &[&str] = &[
    "not", "never", "very", "really", "just", "also", "too", "even", "still", "already",
    "only", "always", "often", "now", "then", "here", "there", "again", "soon", "quite",
    "rather", "ever", "almost", "literally", "actually", "why", "how", "n't",
];
const ADJECTIVES: &[&str] = &[
    "good", "bad", "big", "small", "new", "old", "great", "little", "other", "same", "real",
    "whole", "true", "false", "stupid", "dead", "last", "first", "next", "best", "worst",
    "many", "much", "more", "most", "few", "russian", "ukrainian", "american", "western",
    "free", "long", "short", "high", "low", "huge", "fake", "sure", "own",
];
const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "ive", "able", "ible", "ic", "less", "ish", "al"];

static TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\w+(?:'\w+)?|[^\w\s]").unwrap());

fn lexical_tag(word: &str) -> Option<PosTag> {
    let lex = |list: &[&str]| list.contains(&word);
    if word.chars().all(|c| !c.is_alphanumeric()) {
        return Some(PosTag::Punct);
    }
    if word.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.') {
        return Some(PosTag::Num);
    }
    if lex(SUBORDINATORS) {
        Some(PosTag::SubConj)
    } else if lex(COORDINATORS) {
        Some(PosTag::CoordConj)
    } else if lex(DETERMINERS) {
        Some(PosTag::Det)
    } else if lex(PRONOUNS) {
        Some(PosTag::Pron)
    } else if lex(PREPOSITIONS) {
        Some(PosTag::Prep)
    } else if lex(VERBS) {
        Some(PosTag::Verb)
    } else if lex(ADVERBS) {
        Some(PosTag::Adv)
    } else if lex(ADJECTIVES) {
        Some(PosTag::Adj)
    } else {
        None
    }
}

fn suffix_tag(word: &str, prev: Option<PosTag>) -> PosTag {
    let after_nominal_modifier = matches!(prev, Some(PosTag::Det) | Some(PosTag::Adj));
    if word.len() > 4 && word.ends_with("ly") {
        PosTag::Adv
    } else if word.len() > 4 && (word.ends_with("ing") || word.ends_with("ed")) {
        if after_nominal_modifier {
            PosTag::Noun
        } else {
            PosTag::Verb
        }
    } else if word.len() > 4 && ADJ_SUFFIXES.iter().any(|s| word.ends_with(s)) {
        PosTag::Adj
    } else {
        PosTag::Noun
    }
}

/// Tags `text` with the naive tagger.
pub fn naive_tag(text: &str) -> Vec<(String, PosTag)> {
    let words: Vec<String> = TOKEN
        .find_iter(text)
        .map(|m| m.as_str().to_string())
        .collect();
    let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let mut tags: Vec<PosTag> = Vec::with_capacity(words.len());

    for (i, w) in lower.iter().enumerate() {
        let prev = tags.last().copied();
        let prev_word = i.checked_sub(1).map(|j| lower[j].as_str());
        let tag = match lexical_tag(w) {
            // "to" before a verb is infinitival
            Some(PosTag::Prep) if w == "to" => {
                // unknown capitalized words are taken as names
                let next_is_verb = lower.get(i + 1).is_some_and(|n| match lexical_tag(n) {
                    Some(t) => t == PosTag::Verb,
                    None => !words[i + 1].starts_with(char::is_uppercase),
                });
                if next_is_verb {
                    PosTag::Part
                } else {
                    PosTag::Prep
                }
            }
            // "that" after a verb introduces a clause
            Some(PosTag::Det) if w == "that" || w == "this" => PosTag::Det,
            Some(t) => t,
            None if w == "that" => {
                if prev == Some(PosTag::Verb) {
                    PosTag::SubConj
                } else {
                    PosTag::Det
                }
            }
            None => {
                let after_subject = prev_word.is_some_and(|p| SUBJECT_PRONOUNS.contains(&p));
                let after_verb_marker = matches!(prev, Some(PosTag::Part))
                    || prev_word.is_some_and(|p| {
                        ["will", "would", "should", "can", "could", "must", "might", "may"]
                            .contains(&p)
                    });
                if after_subject || after_verb_marker {
                    PosTag::Verb
                } else {
                    suffix_tag(w, prev)
                }
            }
        };
        tags.push(tag);
    }
    words.into_iter().zip(tags).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("sidecar line {line}: {reason}")]
pub struct SidecarError {
    pub line: usize,
    pub reason: String,
}

/// Externally produced tags keyed by sample id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PosSidecar {
    by_sample: BTreeMap<String, Vec<(String, PosTag)>>,
}

impl PosSidecar {
    pub fn parse(input: &str) -> Result<Self, SidecarError> {
        let mut by_sample: BTreeMap<String, Vec<(String, PosTag)>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, line) in input.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some((key, value)) = rest.split_once('=') {
                    if key.trim() == "sample_id" {
                        let id = value.trim().to_string();
                        by_sample.entry(id.clone()).or_default();
                        current = Some(id);
                    }
                }
                continue;
            }
            let Some(id) = &current else {
                return Err(SidecarError {
                    line: line_no,
                    reason: "token line before any `# sample_id = …` header".into(),
                });
            };
            let mut cols = trimmed.split('\t');
            let (Some(token), Some(tag)) = (cols.next(), cols.next()) else {
                return Err(SidecarError {
                    line: line_no,
                    reason: "expected `token<TAB>tag`".into(),
                });
            };
            by_sample
                .get_mut(id)
                .expect("entry created at header")
                .push((token.to_string(), PosTag::from_external(tag, token)));
        }
        Ok(PosSidecar { by_sample })
    }

    pub fn get(&self, sample_id: &str) -> Option<&[(String, PosTag)]> {
        self.by_sample.get(sample_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.by_sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_sample.is_empty()
    }
}
