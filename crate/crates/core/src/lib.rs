//! Span-level fallacy annotation toolkit.
//!
//! * [`sample`]: annotated comments, spans and corpora
//! * [`label`]: the two-tier fallacy taxonomy
//! * [`codec`]: inline `<tag>` markup in both directions
//! * [`agreement`]: character-level Jaccard agreement and gold selection
//! * [`eval`]: strict and relaxed span F1
//! * [`dataset`]: JSONL ingestion, filtering and gold/few-shot splits
//! * [`stats`]: token, hapax and phrase statistics
//! * [`testkit`]: seeded random samples for property tests

pub mod agreement;
pub mod codec;
pub mod dataset;
pub mod eval;
pub mod label;
pub mod sample;
pub mod stats;
pub mod testkit;

pub use agreement::{jaccard_iou, label_mask, pairwise_agreement, select_gold, AgreementReport, LabelMask};
pub use codec::{extract_labeled_blocks, extract_labeled_line, parse_lenient, parse_strict, parse_tagged, render_tagged, Strictness};
pub use eval::{evaluate, relaxed_f1, strict_f1, EvalReport, Prf};
pub use label::{FallacyLabel, Tier1, Tier2};
pub use sample::{validate_sample, AnnotatedSample, Corpus, Source, Span};
