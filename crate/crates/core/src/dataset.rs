//! Corpus ingestion, length filtering, annotation batches and
//! gold/few-shot splits.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sample::{validate_sample, AnnotatedSample, Corpus, Source, Span};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    SchemaViolation { line: usize, reason: String },
    #[error("requested {requested} samples but the corpus holds {available}")]
    NotEnoughSamples { requested: usize, available: usize },
    #[error("invalid split spec `{0}`")]
    InvalidSplitSpec(String),
    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Input line shape. Raw scraped comments may omit annotation fields.
#[derive(Debug, Deserialize)]
struct InputRecord {
    sample_id: String,
    #[serde(default)]
    annotator_id: String,
    #[serde(default)]
    source: Option<Source>,
    text: String,
    #[serde(default)]
    spans: Vec<Span>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

/// A line that could not become a valid sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub rejects: Vec<Reject>,
}

/// Reads a JSONL corpus.
///
/// Lines that are not valid JSON, lack required fields, or break a span
/// invariant go to `rejects`. A repeated `sample_id` among accepted lines
/// is a hard [`DatasetError::SchemaViolation`]. Records without a `source`
/// take `default_source`.
pub fn ingest(path: &Path, default_source: Source) -> Result<Ingested, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    ingest_reader(BufReader::new(file), default_source, &path.display().to_string())
}

pub fn ingest_reader<R: BufRead>(
    reader: R,
    default_source: Source,
    provenance: &str,
) -> Result<Ingested, DatasetError> {
    let mut samples = Vec::new();
    let mut rejects = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: PathBuf::from(provenance),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: InputRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                rejects.push(Reject {
                    line: line_no,
                    sample_id: None,
                    reason: format!("unparseable record: {e}"),
                });
                continue;
            }
        };
        let mut sample = AnnotatedSample::new(
            record.sample_id,
            record.annotator_id,
            record.source.unwrap_or(default_source),
            record.text,
            record.spans,
        );
        sample.meta = record.meta;
        let report = validate_sample(&sample);
        if !report.is_ok() {
            rejects.push(Reject {
                line: line_no,
                sample_id: Some(sample.sample_id.clone()),
                reason: report.to_string(),
            });
            continue;
        }
        if let Some(first) = seen.insert(sample.sample_id.clone(), line_no) {
            return Err(DatasetError::SchemaViolation {
                line: line_no,
                reason: format!(
                    "duplicate sample_id `{}` (first seen on line {first})",
                    sample.sample_id
                ),
            });
        }
        samples.push(sample);
    }

    let corpus = Corpus::new(provenance, samples).expect("ids checked above");
    Ok(Ingested { corpus, rejects })
}

/// Reads a JSONL file of samples without uniqueness checks (e.g. several
/// annotators' versions of the same comments). Invalid lines still go to
/// the rejects list.
pub fn read_samples(path: &Path) -> Result<(Vec<AnnotatedSample>, Vec<Reject>), DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut samples = Vec::new();
    let mut rejects = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AnnotatedSample>(&line) {
            Ok(mut s) => {
                s.canonicalize();
                let report = validate_sample(&s);
                if report.is_ok() {
                    samples.push(s);
                } else {
                    rejects.push(Reject {
                        line: idx + 1,
                        sample_id: Some(s.sample_id.clone()),
                        reason: report.to_string(),
                    });
                }
            }
            Err(e) => rejects.push(Reject {
                line: idx + 1,
                sample_id: None,
                reason: format!("unparseable record: {e}"),
            }),
        }
    }
    Ok((samples, rejects))
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|source| DatasetError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<(), DatasetError> {
    write_jsonl(path, corpus.samples())
}

/// Keeps samples strictly longer than `min_chars` characters.
pub fn filter_min_length(corpus: &Corpus, min_chars: usize) -> Corpus {
    corpus.filtered(|s| s.char_len() > min_chars)
}

/// Draws `n` samples uniformly without replacement, in drawn order.
pub fn sample_annotation_batch(
    corpus: &Corpus,
    n: usize,
    seed: u64,
) -> Result<Corpus, DatasetError> {
    if n > corpus.len() {
        return Err(DatasetError::NotEnoughSamples {
            requested: n,
            available: corpus.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, corpus.len(), n);
    let samples = picked
        .into_iter()
        .map(|i| corpus.samples()[i].clone())
        .collect();
    Ok(Corpus::new(format!("batch(n={n},seed={seed}) of {}", corpus.provenance()), samples)
        .expect("subset of a valid corpus"))
}

/// Gold/few-shot proportions, written `gold/fewshot` (e.g. `80/20`), plus
/// the selection seed. Parts are kept as integers so rounding is exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub name: String,
    pub gold_parts: u32,
    pub fewshot_parts: u32,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(gold_parts: u32, fewshot_parts: u32, seed: u64) -> Result<Self, DatasetError> {
        if gold_parts + fewshot_parts == 0 {
            return Err(DatasetError::InvalidSplitSpec(format!(
                "{gold_parts}/{fewshot_parts}"
            )));
        }
        Ok(SplitSpec {
            name: format!("{gold_parts}/{fewshot_parts}"),
            gold_parts,
            fewshot_parts,
            seed,
        })
    }

    /// Parses `"80/20"`.
    pub fn parse(spec: &str, seed: u64) -> Result<Self, DatasetError> {
        let bad = || DatasetError::InvalidSplitSpec(spec.to_string());
        let (g, f) = spec.trim().split_once(['/', '_']).ok_or_else(bad)?;
        let g = u32::from_str(g.trim()).map_err(|_| bad())?;
        let f = u32::from_str(f.trim()).map_err(|_| bad())?;
        Self::new(g, f, seed)
    }

    /// The four gold/few-shot proportions used in the experiments:
    /// 100/0, 90/10, 80/20 and 70/30.
    pub fn standard(seed: u64) -> Vec<SplitSpec> {
        [(100, 0), (90, 10), (80, 20), (70, 30)]
            .into_iter()
            .map(|(g, f)| SplitSpec::new(g, f, seed).unwrap())
            .collect()
    }

    pub fn gold_fraction(&self) -> f64 {
        self.gold_parts as f64 / self.total_parts() as f64
    }

    pub fn fewshot_fraction(&self) -> f64 {
        self.fewshot_parts as f64 / self.total_parts() as f64
    }

    fn total_parts(&self) -> u64 {
        u64::from(self.gold_parts) + u64::from(self.fewshot_parts)
    }

    /// Few-shot size for `n` samples, rounded half up.
    pub fn fewshot_count(&self, n: usize) -> usize {
        let total = self.total_parts() as u128;
        let num = 2 * u128::from(self.fewshot_parts) * n as u128 + total;
        (num / (2 * total)) as usize
    }

    /// Filesystem-friendly name: `80/20` becomes `80_20`.
    pub fn dir_name(&self) -> String {
        self.name.replace('/', "_")
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub gold: Corpus,
    pub fewshot: Corpus,
    pub spec: SplitSpec,
}

/// Contents of `split.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMeta {
    pub spec: SplitSpec,
    pub gold_fraction: f64,
    pub fewshot_fraction: f64,
    pub n_total: usize,
    pub n_gold: usize,
    pub n_fewshot: usize,
}

/// Partitions `corpus` into few-shot examples and gold samples.
///
/// The few-shot indices are drawn uniformly with the spec's seed; both
/// halves keep input order.
pub fn make_split(corpus: &Corpus, spec: &SplitSpec) -> Split {
    let n = corpus.len();
    let k = spec.fewshot_count(n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chosen = vec![false; n];
    for i in index::sample(&mut rng, n, k) {
        chosen[i] = true;
    }
    let (mut gold, mut fewshot) = (Vec::new(), Vec::new());
    for (s, is_fewshot) in corpus.iter().zip(chosen) {
        if is_fewshot {
            fewshot.push(s.clone());
        } else {
            gold.push(s.clone());
        }
    }
    Split {
        gold: Corpus::new(format!("{} gold", spec.name), gold).expect("subset"),
        fewshot: Corpus::new(format!("{} fewshot", spec.name), fewshot).expect("subset"),
        spec: spec.clone(),
    }
}

impl Split {
    pub fn meta(&self) -> SplitMeta {
        SplitMeta {
            spec: self.spec.clone(),
            gold_fraction: self.spec.gold_fraction(),
            fewshot_fraction: self.spec.fewshot_fraction(),
            n_total: self.gold.len() + self.fewshot.len(),
            n_gold: self.gold.len(),
            n_fewshot: self.fewshot.len(),
        }
    }

    /// Writes `gold.jsonl`, `fewshot.jsonl` and `split.meta.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), DatasetError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_corpus(&dir.join("gold.jsonl"), &self.gold)?;
        write_corpus(&dir.join("fewshot.jsonl"), &self.fewshot)?;
        let meta_path = dir.join("split.meta.json");
        let json = serde_json::to_string_pretty(&self.meta()).map_err(|source| {
            DatasetError::Json {
                path: meta_path.clone(),
                source,
            }
        })?;
        fs::write(&meta_path, json + "\n").map_err(io_err(&meta_path))
    }

    /// Reads a split directory written by [`Split::write_to`].
    pub fn read_from(dir: &Path) -> Result<Split, DatasetError> {
        let meta_path = dir.join("split.meta.json");
        let raw = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: SplitMeta = serde_json::from_str(&raw).map_err(|source| DatasetError::Json {
            path: meta_path.clone(),
            source,
        })?;
        let load = |name: &str| -> Result<Corpus, DatasetError> {
            let path = dir.join(name);
            let ingested = ingest(&path, Source::Reddit)?;
            if let Some(r) = ingested.rejects.first() {
                return Err(DatasetError::SchemaViolation {
                    line: r.line,
                    reason: format!("{}: {}", path.display(), r.reason),
                });
            }
            Ok(ingested.corpus)
        };
        Ok(Split {
            gold: load("gold.jsonl")?,
            fewshot: load("fewshot.jsonl")?,
            spec: meta.spec,
        })
    }
}
