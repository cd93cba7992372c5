//! mdbook can't resolve workspace crates in its own test runner, so the
//! chapters are pulled in here and checked as doctests instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub struct Introduction;

#[doc = include_str!("../../../book/src/spans.md")]
pub struct Spans;

#[doc = include_str!("../../../book/src/agreement.md")]
pub struct Agreement;

#[doc = include_str!("../../../book/src/evaluation.md")]
pub struct Evaluation;

#[doc = include_str!("../../../book/src/datasets.md")]
pub struct Datasets;

#[doc = include_str!("../../../book/src/statistics.md")]
pub struct Statistics;

#[doc = include_str!("../../../book/src/prompting.md")]
pub struct Prompting;

#[doc = include_str!("../../../book/src/review.md")]
pub struct Review;

#[doc = include_str!("../../../book/src/cli.md")]
pub struct Cli;
