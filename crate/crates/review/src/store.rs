//! Append-only review store.
//!
//! Every change is one JSON line in `events.jsonl`. Opening a store
//! replays the log into an in-memory index; for each task the last
//! annotation or score wins.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use slurg_core::codec::{parse_strict, MarkupError};
use slurg_core::{AnnotatedSample, Corpus};

pub const EVENTS_FILE: &str = "events.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    SpanAnnotation,
    LikertReview,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::SpanAnnotation => "span_annotation",
            TaskKind::LikertReview => "likert_review",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "span_annotation" | "spans" => Ok(TaskKind::SpanAnnotation),
            "likert_review" | "likert" => Ok(TaskKind::LikertReview),
            other => Err(format!("unknown task kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewTask {
    pub task_id: String,
    pub sample_id: String,
    pub reviewer: String,
    pub kind: TaskKind,
    pub status: TaskStatus,
}

/// `{kind}:{reviewer}:{sample_id}`
pub fn task_id(kind: TaskKind, reviewer: &str, sample_id: &str) -> String {
    format!("{kind}:{reviewer}:{sample_id}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Realism,
    FallacyAccuracy,
    SpanAccuracy,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Realism, Criterion::FallacyAccuracy, Criterion::SpanAccuracy];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Realism => "realism",
            Criterion::FallacyAccuracy => "fallacy_accuracy",
            Criterion::SpanAccuracy => "span_accuracy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertScore {
    pub realism: u8,
    pub fallacy_accuracy: u8,
    pub span_accuracy: u8,
}

impl LikertScore {
    pub fn get(&self, c: Criterion) -> u8 {
        match c {
            Criterion::Realism => self.realism,
            Criterion::FallacyAccuracy => self.fallacy_accuracy,
            Criterion::SpanAccuracy => self.span_accuracy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewConfig {
    /// Points on the Likert scale; values run from 1 to this.
    pub scale_points: u8,
}

impl Default for ReviewConfig {
    fn default() -> Self {
        ReviewConfig { scale_points: 4 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReviewError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task `{task_id}` is a {actual} task, not {expected}")]
    WrongKind {
        task_id: String,
        expected: TaskKind,
        actual: TaskKind,
    },
    #[error("malformed markup: {0}")]
    MalformedMarkup(#[from] MarkupError),
    #[error("submitted text differs from sample `{sample_id}`")]
    TextDrift { sample_id: String },
    #[error("{criterion} = {value} is outside the 1..={scale} scale")]
    OutOfScale {
        criterion: &'static str,
        value: u8,
        scale: u8,
    },
    #[error("sample `{0}` is already stored with different content")]
    SampleConflict(String),
    #[error("store i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt store {path} line {line}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Sample { sample: AnnotatedSample },
    Task { task: ReviewTask },
    Annotation { task_id: String, sample: AnnotatedSample },
    Likert { task_id: String, score: LikertScore },
}

#[derive(Debug, Default)]
struct Index {
    samples: BTreeMap<String, AnnotatedSample>,
    tasks: BTreeMap<String, ReviewTask>,
    annotations: BTreeMap<String, AnnotatedSample>,
    likert: BTreeMap<String, LikertScore>,
}

impl Index {
    fn apply(&mut self, event: Event) {
        match event {
            Event::Sample { sample } => {
                self.samples.insert(sample.sample_id.clone(), sample);
            }
            Event::Task { task } => {
                self.tasks.insert(task.task_id.clone(), task);
            }
            Event::Annotation { task_id, sample } => {
                if let Some(t) = self.tasks.get_mut(&task_id) {
                    t.status = TaskStatus::Done;
                }
                self.annotations.insert(task_id, sample);
            }
            Event::Likert { task_id, score } => {
                if let Some(t) = self.tasks.get_mut(&task_id) {
                    t.status = TaskStatus::Done;
                }
                self.likert.insert(task_id, score);
            }
        }
    }
}

/// One Likert value, as exported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertRow {
    pub split: String,
    pub reviewer: String,
    pub sample_id: String,
    pub criterion: Criterion,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertMean {
    pub split: String,
    pub criterion: Criterion,
    pub mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub done: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: usize,
    pub done: usize,
    pub by_reviewer: BTreeMap<String, Counts>,
    pub by_kind: BTreeMap<TaskKind, Counts>,
}

/// A task with what the reviewer needs to see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    #[serde(flatten)]
    pub task: ReviewTask,
    pub text: String,
    /// Spans to judge; only filled for Likert tasks.
    pub spans: Vec<slurg_core::Span>,
}

/// Split name a sample belongs to, from its metadata.
pub fn split_of(sample: &AnnotatedSample) -> String {
    sample
        .meta
        .get("split_name")
        .or_else(|| sample.meta.get("split"))
        .cloned()
        .unwrap_or_else(|| "unknown".into())
}

pub struct ReviewStore {
    path: PathBuf,
    file: File,
    index: Index,
    config: ReviewConfig,
}

impl ReviewStore {
    /// Opens (or creates) the store in directory `dir`.
    pub fn open(dir: &Path, config: ReviewConfig) -> Result<Self, ReviewError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ReviewError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(EVENTS_FILE);
        let mut index = Index::default();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io_err(&path))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err(&path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: Event = serde_json::from_str(&line).map_err(|e| ReviewError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
                index.apply(event);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        Ok(ReviewStore {
            path,
            file,
            index,
            config,
        })
    }

    pub fn config(&self) -> ReviewConfig {
        self.config
    }

    fn append(&mut self, event: Event) -> Result<(), ReviewError> {
        let mut line = serde_json::to_string(&event).expect("events serialize");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|source| ReviewError::Io {
                path: self.path.clone(),
                source,
            })?;
        self.index.apply(event);
        Ok(())
    }

    /// Creates one task per (sample, reviewer). Existing tasks are left as
    /// they are, so running this twice changes nothing. Returns the number
    /// of tasks of `kind` covering `corpus` afterwards.
    pub fn enqueue(
        &mut self,
        corpus: &Corpus,
        kind: TaskKind,
        reviewers: &[String],
    ) -> Result<usize, ReviewError> {
        if reviewers.is_empty() {
            return Ok(0);
        }
        for sample in corpus {
            match self.index.samples.get(&sample.sample_id) {
                Some(existing) if existing.text != sample.text => {
                    return Err(ReviewError::SampleConflict(sample.sample_id.clone()));
                }
                Some(_) => {}
                None => self.append(Event::Sample {
                    sample: sample.clone(),
                })?,
            }
        }
        let mut count = 0;
        for sample in corpus {
            for reviewer in reviewers {
                let id = task_id(kind, reviewer, &sample.sample_id);
                if !self.index.tasks.contains_key(&id) {
                    self.append(Event::Task {
                        task: ReviewTask {
                            task_id: id,
                            sample_id: sample.sample_id.clone(),
                            reviewer: reviewer.clone(),
                            kind,
                            status: TaskStatus::Pending,
                        },
                    })?;
                }
                count += 1;
            }
        }
        Ok(count)
    }

    fn task(&self, task_id: &str, expected: TaskKind) -> Result<&ReviewTask, ReviewError> {
        let task = self
            .index
            .tasks
            .get(task_id)
            .ok_or_else(|| ReviewError::UnknownTask(task_id.to_string()))?;
        if task.kind != expected {
            return Err(ReviewError::WrongKind {
                task_id: task_id.to_string(),
                expected,
                actual: task.kind,
            });
        }
        Ok(task)
    }

    /// Stores a reviewer's markup for a span-annotation task. The markup
    /// must parse strictly and leave the sample text unchanged.
    /// Resubmitting replaces the earlier annotation.
    pub fn submit_annotation(&mut self, task_id: &str, tagged: &str) -> Result<AnnotatedSample, ReviewError> {
        let task = self.task(task_id, TaskKind::SpanAnnotation)?.clone();
        let original = &self.index.samples[&task.sample_id];
        let parsed = parse_strict(tagged)?;
        if parsed.text != original.text {
            return Err(ReviewError::TextDrift {
                sample_id: task.sample_id,
            });
        }
        let mut sample = parsed.into_sample(task.sample_id.clone(), task.reviewer.clone(), original.source);
        sample.meta = original.meta.clone();
        self.append(Event::Annotation {
            task_id: task_id.to_string(),
            sample: sample.clone(),
        })?;
        Ok(sample)
    }

    pub fn submit_likert(&mut self, task_id: &str, score: LikertScore) -> Result<(), ReviewError> {
        self.task(task_id, TaskKind::LikertReview)?;
        let scale = self.config.scale_points;
        for c in Criterion::ALL {
            let value = score.get(c);
            if value < 1 || value > scale {
                return Err(ReviewError::OutOfScale {
                    criterion: c.as_str(),
                    value,
                    scale,
                });
            }
        }
        self.append(Event::Likert {
            task_id: task_id.to_string(),
            score,
        })
    }

    pub fn sample(&self, sample_id: &str) -> Option<&AnnotatedSample> {
        self.index.samples.get(sample_id)
    }

    pub fn tasks(&self, reviewer: Option<&str>, kind: Option<TaskKind>) -> Vec<TaskView> {
        self.index
            .tasks
            .values()
            .filter(|t| reviewer.is_none_or(|r| t.reviewer == r))
            .filter(|t| kind.is_none_or(|k| t.kind == k))
            .map(|t| {
                let sample = &self.index.samples[&t.sample_id];
                TaskView {
                    task: t.clone(),
                    text: sample.text.clone(),
                    spans: match t.kind {
                        TaskKind::LikertReview => sample.spans.clone(),
                        TaskKind::SpanAnnotation => Vec::new(),
                    },
                }
            })
            .collect()
    }

    /// Latest annotation per task, ordered by task id. Feed the result to
    /// [`slurg_core::sample::group_by_annotator`] for agreement.
    pub fn export_annotations(&self) -> Vec<AnnotatedSample> {
        self.index.annotations.values().cloned().collect()
    }

    /// One row per stored value, ordered by split, reviewer, sample and
    /// criterion.
    pub fn export_likert(&self) -> Vec<LikertRow> {
        let mut rows = Vec::new();
        for (task_id, score) in &self.index.likert {
            let task = &self.index.tasks[task_id];
            let split = split_of(&self.index.samples[&task.sample_id]);
            for c in Criterion::ALL {
                rows.push(LikertRow {
                    split: split.clone(),
                    reviewer: task.reviewer.clone(),
                    sample_id: task.sample_id.clone(),
                    criterion: c,
                    value: score.get(c),
                });
            }
        }
        rows.sort_by(|a, b| {
            (&a.split, &a.reviewer, &a.sample_id, a.criterion).cmp(&(&b.split, &b.reviewer, &b.sample_id, b.criterion))
        });
        rows
    }

    pub fn progress(&self) -> Progress {
        let mut p = Progress::default();
        for t in self.index.tasks.values() {
            let done = usize::from(t.status == TaskStatus::Done);
            p.total += 1;
            p.done += done;
            let r = p.by_reviewer.entry(t.reviewer.clone()).or_default();
            r.total += 1;
            r.done += done;
            let k = p.by_kind.entry(t.kind).or_default();
            k.total += 1;
            k.done += done;
        }
        p
    }
}

/// Mean value per split and criterion.
pub fn likert_means(rows: &[LikertRow]) -> Vec<LikertMean> {
    let mut acc: BTreeMap<(String, Criterion), (u64, usize)> = BTreeMap::new();
    for r in rows {
        let e = acc.entry((r.split.clone(), r.criterion)).or_default();
        e.0 += u64::from(r.value);
        e.1 += 1;
    }
    acc.into_iter()
        .map(|((split, criterion), (sum, n))| LikertMean {
            split,
            criterion,
            mean: sum as f64 / n as f64,
            n,
        })
        .collect()
}

/// `split,reviewer,criterion,value`
pub fn write_likert_csv<W: Write>(rows: &[LikertRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["split", "reviewer", "criterion", "value"])?;
    for r in rows {
        w.write_record([&r.split, &r.reviewer, r.criterion.as_str(), &r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `split,criterion,mean,n`
pub fn write_means_csv<W: Write>(means: &[LikertMean], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["split", "criterion", "mean", "n"])?;
    for m in means {
        w.write_record([&m.split, m.criterion.as_str(), &format!("{:.6}", m.mean), &m.n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
