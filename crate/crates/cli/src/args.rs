//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "slurg", version, about = "Fallacy-span annotation, evaluation and synthetic comment toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for every random choice; overrides any seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config file (model access, or the pipeline definition).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Artifact directory for commands that write several files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Overwrite existing artifacts.
    #[arg(long, global = true)]
    pub force: bool,
    /// Print reports as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Reddit,
    Fourchan,
    Synthetic,
}

impl From<SourceArg> for slurg_core::Source {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Reddit => slurg_core::Source::Reddit,
            SourceArg::Fourchan => slurg_core::Source::Fourchan,
            SourceArg::Synthetic => slurg_core::Source::Synthetic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PosArg {
    Naive,
    Sidecar,
    SidecarOrNaive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Spans,
    Likert,
}

impl From<KindArg> for slurg_review::TaskKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Spans => slurg_review::TaskKind::SpanAnnotation,
            KindArg::Likert => slurg_review::TaskKind::LikertReview,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSONL file into a corpus; bad lines go to a rejects file.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Source for lines that do not name one.
        #[arg(long, value_enum, default_value = "reddit")]
        source: SourceArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep samples longer than a minimum number of characters.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        min_length: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw an annotation batch uniformly without replacement.
    Sample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise agreement between annotators.
    Agree {
        /// JSONL files holding every annotator's samples.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
    /// Keep samples whose mean agreement exceeds the threshold.
    Gold {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a gold corpus into gold and few-shot parts.
    Split {
        #[arg(long)]
        input: PathBuf,
        /// `gold/fewshot`, e.g. `80/20`. Repeat for several; defaults to
        /// 100/0, 90/10, 80/20 and 70/30.
        #[arg(long)]
        spec: Vec<String>,
    },
    /// Ask the model to annotate a split's gold samples.
    Annotate {
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ask the model for synthetic comments.
    Generate {
        #[arg(long)]
        split: PathBuf,
        /// Comments per request.
        #[arg(long, default_value_t = 5)]
        num: usize,
        #[arg(long, default_value_t = 20)]
        batches: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Strict and relaxed span F1 of predictions against gold.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus statistics.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
        /// Count every token instead of content words only.
        #[arg(long)]
        all_tokens: bool,
        #[arg(long, value_enum, default_value = "naive")]
        pos: PosArg,
        /// CoNLL-style `token<TAB>TAG` file with `# sample_id = …` headers.
        #[arg(long)]
        pos_sidecar: Option<PathBuf>,
    },
    /// Human review store and service.
    Review {
        #[command(subcommand)]
        action: ReviewCommand,
    },
    /// Every stage from ingest to report.
    Pipeline,
    /// Print the consolidated report of a pipeline run.
    Report {
        /// Run directory written by `pipeline`.
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReviewCommand {
    /// Serve the review API and UI.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8642)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory with the built UI bundle.
        #[arg(long)]
        ui: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        scale: u8,
    },
    /// Create review tasks for every sample and reviewer.
    Enqueue {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, required = true, value_delimiter = ',')]
        reviewers: Vec<String>,
    },
    /// Export submitted annotations (JSONL) or Likert scores (CSV).
    Export {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        out: PathBuf,
    },
}
