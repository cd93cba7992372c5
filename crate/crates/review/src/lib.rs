//! Human review of spans and synthetic samples.
//!
//! [`store::ReviewStore`] keeps tasks and submissions in an append-only
//! event log; [`server::router`] exposes it over HTTP for the browser UI.

pub mod server;
pub mod store;

pub use server::{router, serve, shared, SharedStore};
pub use store::{
    likert_means, task_id, Criterion, LikertMean, LikertRow, LikertScore, Progress, ReviewConfig, ReviewError,
    ReviewStore, ReviewTask, TaskKind, TaskStatus, TaskView,
};
