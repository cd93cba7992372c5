//! Corpus statistics used to compare synthetic and real comments: token
//! frequencies, vocabulary diversity, per-sentence hapax ratio and
//! phrase-type distribution.

mod chunk;
mod pos;
mod text;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::sample::Corpus;

pub use chunk::{chunk_counts, Phrase};
pub use pos::{naive_tag, PosSidecar, PosTag, SidecarError};
pub use text::{
    split_sentences, EmptyStopwordList, HapaxMode, StopwordInfo, StopwordList, TokenizerConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("no tokens left after stopword filtering")]
    EmptyAfterFiltering,
    #[error("no part-of-speech tags for sample `{0}`")]
    MissingPos(String),
    #[error(transparent)]
    Config(#[from] EmptyStopwordList),
}

/// Top `k` content tokens, by descending count then lexicographically.
pub fn token_frequencies(corpus: &Corpus, config: &TokenizerConfig, k: usize) -> Vec<(String, usize)> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for s in corpus {
        for t in config.content_tokens(&s.text) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

/// Distinct content-token types over total content tokens.
pub fn vocab_diversity(corpus: &Corpus, config: &TokenizerConfig) -> Result<f64, StatsError> {
    let mut types: HashMap<String, ()> = HashMap::new();
    let mut total = 0usize;
    for s in corpus {
        for t in config.content_tokens(&s.text) {
            total += 1;
            types.insert(t, ());
        }
    }
    if total == 0 {
        return Err(StatsError::EmptyAfterFiltering);
    }
    Ok(types.len() as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceHapax {
    pub sample_id: String,
    /// Zero-based sentence index within the sample.
    pub sentence: usize,
    pub tokens: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapaxSummary {
    pub per_sentence: Vec<SentenceHapax>,
    /// `None` when no sentence kept any token.
    pub mean: Option<f64>,
}

/// Share of a sentence's tokens that occur exactly once in it. The
/// denominator counts tokens, not types.
pub fn sentence_hapax_ratio(tokens: &[String]) -> Option<f64> {
    if tokens.is_empty() {
        return None;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_default() += 1;
    }
    let once = tokens.iter().filter(|t| counts[t.as_str()] == 1).count();
    Some(once as f64 / tokens.len() as f64)
}

/// Per-sentence hapax ratios. Sentences left empty after filtering are
/// skipped.
pub fn hapax_ratio(corpus: &Corpus, config: &TokenizerConfig) -> Result<HapaxSummary, StatsError> {
    config.validate()?;
    let mut per_sentence = Vec::new();
    for s in corpus {
        for (i, sentence) in split_sentences(&s.text).into_iter().enumerate() {
            let tokens = config.hapax_tokens(sentence);
            if let Some(ratio) = sentence_hapax_ratio(&tokens) {
                per_sentence.push(SentenceHapax {
                    sample_id: s.sample_id.clone(),
                    sentence: i,
                    tokens: tokens.len(),
                    ratio,
                });
            }
        }
    }
    let mean = (!per_sentence.is_empty())
        .then(|| per_sentence.iter().map(|h| h.ratio).sum::<f64>() / per_sentence.len() as f64);
    Ok(HapaxSummary { per_sentence, mean })
}

/// Where part-of-speech tags come from.
#[derive(Debug, Clone, Copy)]
pub enum PosSource<'a> {
    /// The bundled heuristic tagger.
    Naive,
    /// Only the sidecar; samples it lacks are an error.
    Sidecar(&'a PosSidecar),
    /// The sidecar where it has the sample, the naive tagger elsewhere.
    SidecarOrNaive(&'a PosSidecar),
}

impl PosSource<'_> {
    pub fn tags(&self, sample_id: &str, text: &str) -> Result<Vec<PosTag>, StatsError> {
        let from_sidecar = |sc: &PosSidecar| {
            sc.get(sample_id)
                .map(|toks| toks.iter().map(|(_, t)| *t).collect::<Vec<_>>())
        };
        let naive = || naive_tag(text).into_iter().map(|(_, t)| t).collect();
        match self {
            PosSource::Naive => Ok(naive()),
            PosSource::Sidecar(sc) => {
                from_sidecar(sc).ok_or_else(|| StatsError::MissingPos(sample_id.to_string()))
            }
            PosSource::SidecarOrNaive(sc) => Ok(from_sidecar(sc).unwrap_or_else(naive)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PosSource::Naive => "naive",
            PosSource::Sidecar(_) => "sidecar",
            PosSource::SidecarOrNaive(_) => "sidecar+naive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseDistribution {
    pub counts: BTreeMap<Phrase, usize>,
    /// All zero when no chunk was found.
    pub proportions: BTreeMap<Phrase, f64>,
}

impl PhraseDistribution {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn proportion(&self, phrase: Phrase) -> f64 {
        self.proportions.get(&phrase).copied().unwrap_or(0.0)
    }
}

pub fn phrase_distribution(corpus: &Corpus, pos: PosSource<'_>) -> Result<PhraseDistribution, StatsError> {
    let mut counts: BTreeMap<Phrase, usize> = Phrase::ALL.iter().map(|p| (*p, 0)).collect();
    for s in corpus {
        let tags = pos.tags(&s.sample_id, &s.text)?;
        for (phrase, n) in chunk_counts(&tags) {
            *counts.get_mut(&phrase).unwrap() += n;
        }
    }
    let total: usize = counts.values().sum();
    let proportions = counts
        .iter()
        .map(|(p, n)| {
            let share = if total == 0 { 0.0 } else { *n as f64 / total as f64 };
            (*p, share)
        })
        .collect();
    Ok(PhraseDistribution {
        counts,
        proportions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub provenance: String,
    pub n_samples: usize,
    pub n_tokens: usize,
    pub stopwords: StopwordInfo,
    pub hapax_mode: HapaxMode,
    pub pos_source: String,
    pub top_k: Vec<(String, usize)>,
    /// `None` when the corpus has no content tokens.
    pub vocab_diversity: Option<f64>,
    pub hapax: HapaxSummary,
    pub phrase_dist: PhraseDistribution,
}

pub fn compute_report(
    corpus: &Corpus,
    config: &TokenizerConfig,
    pos: PosSource<'_>,
    k: usize,
) -> Result<StatsReport, StatsError> {
    let n_tokens = corpus.iter().map(|s| config.content_tokens(&s.text).len()).sum();
    let vocab_diversity = match vocab_diversity(corpus, config) {
        Ok(v) => Some(v),
        Err(StatsError::EmptyAfterFiltering) => None,
        Err(e) => return Err(e),
    };
    Ok(StatsReport {
        provenance: corpus.provenance().to_string(),
        n_samples: corpus.len(),
        n_tokens,
        stopwords: config.stopwords.info(),
        hapax_mode: config.hapax_mode,
        pos_source: pos.name().to_string(),
        top_k: token_frequencies(corpus, config, k),
        vocab_diversity,
        hapax: hapax_ratio(corpus, config)?,
        phrase_dist: phrase_distribution(corpus, pos)?,
    })
}

/// `sample_id,sentence,tokens,hapax_ratio`, one row per kept sentence.
pub fn write_hapax_csv<W: Write>(summary: &HapaxSummary, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_id", "sentence", "tokens", "hapax_ratio"])?;
    for h in &summary.per_sentence {
        w.write_record([
            h.sample_id.clone(),
            h.sentence.to_string(),
            h.tokens.to_string(),
            format!("{:.6}", h.ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `phrase,count,proportion`, one row per phrase type.
pub fn write_phrase_csv<W: Write>(dist: &PhraseDistribution, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phrase", "count", "proportion"])?;
    for p in Phrase::ALL {
        w.write_record([
            p.as_str().to_string(),
            dist.counts.get(&p).copied().unwrap_or(0).to_string(),
            format!("{:.6}", dist.proportion(p)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{AnnotatedSample, Source};

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::new(
            "t",
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| AnnotatedSample::raw(format!("s{i}"), Source::Reddit, *t))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn frequencies() {
        let cfg = TokenizerConfig::default();
        assert_eq!(
            token_frequencies(&corpus(&["war war peace"]), &cfg, 10),
            vec![("war".to_string(), 2), ("peace".to_string(), 1)]
        );
        assert!(token_frequencies(&Corpus::empty("e"), &cfg, 10).is_empty());
        // ties go lexicographic
        let top = token_frequencies(&corpus(&["b a c a b"]), &TokenizerConfig::no_stopwords(), 2);
        assert_eq!(top, vec![("a".to_string(), 2), ("b".to_string(), 2)]);
    }

    #[test]
    fn diversity() {
        let none = TokenizerConfig::no_stopwords();
        assert_eq!(vocab_diversity(&corpus(&["a a a"]), &none).unwrap(), 1.0 / 3.0);
        assert_eq!(vocab_diversity(&corpus(&["x y z"]), &none).unwrap(), 1.0);
        assert_eq!(
            vocab_diversity(&corpus(&["the and of"]), &TokenizerConfig::default()),
            Err(StatsError::EmptyAfterFiltering)
        );
    }

    #[test]
    fn hapax() {
        let cfg = TokenizerConfig::default();
        let h = hapax_ratio(&corpus(&["cat sat mat"]), &cfg).unwrap();
        assert_eq!(h.mean, Some(1.0));
        let h = hapax_ratio(&corpus(&["cat cat dog"]), &cfg).unwrap();
        assert_eq!(h.per_sentence[0].ratio, 1.0 / 3.0);
        // the second sentence is all stopwords and is skipped
        let h = hapax_ratio(&corpus(&["Tanks roll. It is what it is."]), &cfg).unwrap();
        assert_eq!(h.per_sentence.len(), 1);
        assert_eq!(hapax_ratio(&Corpus::empty("e"), &cfg).unwrap().mean, None);
    }

    #[test]
    fn phrases() {
        let d = phrase_distribution(&corpus(&["the dog ran"]), PosSource::Naive).unwrap();
        assert_eq!(d.proportion(Phrase::NP), 0.5);
        assert_eq!(d.proportion(Phrase::VP), 0.5);
        let e = phrase_distribution(&Corpus::empty("e"), PosSource::Naive).unwrap();
        assert_eq!(e.total(), 0);
        assert!(e.proportions.values().all(|p| *p == 0.0));
    }

    #[test]
    fn sidecar_coverage() {
        let sc = PosSidecar::parse("# sample_id = s0\nthe\tDT\ndog\tNN\n").unwrap();
        let c = corpus(&["the dog", "a cat sat"]);
        assert_eq!(
            phrase_distribution(&c, PosSource::Sidecar(&sc)),
            Err(StatsError::MissingPos("s1".into()))
        );
        let d = phrase_distribution(&c, PosSource::SidecarOrNaive(&sc)).unwrap();
        assert_eq!(d.counts[&Phrase::NP], 2);
    }

    #[test]
    fn csv_outputs() {
        let cfg = TokenizerConfig::default();
        let r = compute_report(&corpus(&["cat cat dog. Birds fly"]), &cfg, PosSource::Naive, 5).unwrap();
        let mut buf = Vec::new();
        write_hapax_csv(&r.hapax, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "sample_id,sentence,tokens,hapax_ratio\ns0,0,3,0.333333\ns0,1,2,1.000000\n"
        );
        let mut buf = Vec::new();
        write_phrase_csv(&r.phrase_dist, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("phrase,count,proportion\nNP,"));
    }
}
