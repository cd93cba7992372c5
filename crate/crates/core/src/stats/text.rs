//! Tokenization, stopwords and sentence splitting shared by the statistics.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\w+").unwrap());

const ENGLISH_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Named, checksummed stopword list. The checksum covers the sorted word
/// list, one word per line, so reports can record exactly which list
/// produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    name: String,
    words: BTreeSet<String>,
    checksum: String,
}

impl StopwordList {
    pub fn from_words<I, S>(name: impl Into<String>, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        let mut hasher = Sha256::new();
        for w in &words {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        StopwordList {
            name: name.into(),
            words,
            checksum: format!("{:x}", hasher.finalize()),
        }
    }

    /// The bundled English list (179 entries).
    pub fn english() -> Self {
        Self::from_words("english-v1", ENGLISH_STOPWORDS.lines())
    }

    pub fn empty() -> Self {
        Self::from_words("none", std::iter::empty::<&str>())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Case-insensitive membership.
    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(&token.to_lowercase())
    }

    pub fn info(&self) -> StopwordInfo {
        StopwordInfo {
            name: self.name.clone(),
            size: self.words.len(),
            checksum: self.checksum.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopwordInfo {
    pub name: String,
    pub size: usize,
    pub checksum: String,
}

/// Which tokens the hapax ratio looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HapaxMode {
    /// Stopwords removed first.
    ContentWords,
    /// Every token.
    AllTokens,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub stopwords: StopwordList,
    pub hapax_mode: HapaxMode,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            stopwords: StopwordList::english(),
            hapax_mode: HapaxMode::ContentWords,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("content-word hapax mode needs a non-empty stopword list")]
pub struct EmptyStopwordList;

impl TokenizerConfig {
    /// Tokenizer that keeps every token.
    pub fn no_stopwords() -> Self {
        TokenizerConfig {
            lowercase: true,
            stopwords: StopwordList::empty(),
            hapax_mode: HapaxMode::AllTokens,
        }
    }

    pub fn validate(&self) -> Result<(), EmptyStopwordList> {
        if self.hapax_mode == HapaxMode::ContentWords && self.stopwords.is_empty() {
            return Err(EmptyStopwordList);
        }
        Ok(())
    }

    /// Word-character runs, lowercased if configured.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        WORD.find_iter(text)
            .map(|m| {
                if self.lowercase {
                    m.as_str().to_lowercase()
                } else {
                    m.as_str().to_string()
                }
            })
            .collect()
    }

    /// Tokens with stopwords removed.
    pub fn content_tokens(&self, text: &str) -> Vec<String> {
        self.tokens(text)
            .into_iter()
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }

    /// Tokens the hapax ratio counts.
    pub fn hapax_tokens(&self, text: &str) -> Vec<String> {
        match self.hapax_mode {
            HapaxMode::ContentWords => self.content_tokens(text),
            HapaxMode::AllTokens => self.tokens(text),
        }
    }
}

/// Splits on `.`, `!` or `?` when followed by whitespace or the end of the
/// text. Text without a terminator is one sentence. Empty pieces are dropped.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if matches!(c, '.' | '!' | '?') {
            let boundary = match iter.peek() {
                None => true,
                Some((_, next)) => next.is_whitespace(),
            };
            if boundary {
                let end = i + c.len_utf8();
                let piece = text[start..end].trim();
                if !piece.is_empty() {
                    out.push(piece);
                }
                start = end;
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_list_is_bundled() {
        let list = StopwordList::english();
        assert_eq!(list.len(), 179);
        assert!(list.contains("The"));
        assert!(!list.contains("war"));
        assert_eq!(list.checksum().len(), 64);
        assert_ne!(list.checksum(), StopwordList::empty().checksum());
    }

    #[test]
    fn tokens_are_word_runs() {
        let cfg = TokenizerConfig::no_stopwords();
        assert_eq!(cfg.tokens("Don't STOP, 2 tanks!"), vec!["don", "t", "stop", "2", "tanks"]);
    }

    #[test]
    fn content_tokens_drop_stopwords() {
        let cfg = TokenizerConfig::default();
        assert_eq!(cfg.content_tokens("The war is over"), vec!["war"]);
    }

    #[test]
    fn sentence_rules() {
        assert_eq!(split_sentences("One. Two! Three? Four"), vec!["One.", "Two!", "Three?", "Four"]);
        assert_eq!(split_sentences("v1.2 is out"), vec!["v1.2 is out"]);
        assert_eq!(split_sentences("What?! No."), vec!["What?!", "No."]);
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn content_mode_needs_stopwords() {
        let cfg = TokenizerConfig {
            stopwords: StopwordList::empty(),
            ..TokenizerConfig::default()
        };
        assert_eq!(cfg.validate(), Err(EmptyStopwordList));
        assert!(TokenizerConfig::no_stopwords().validate().is_ok());
    }
}
