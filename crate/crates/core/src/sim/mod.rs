//! Round-based execution of the parallel schedule on simulated ranks that
//! talk only through counted messages.

mod engine;
mod layout;
mod matrix;
mod stats;
mod tree;

use thiserror::Error;

use crate::par::ParError;

pub use engine::{run_cosma, run_on_grid, threads_from_env, ExecMode, THREADS_ENV};
pub use layout::{chunk, decompose_data, BlockedLayout, RankBlocks};
pub use matrix::Matrix;
pub use stats::{measured_vs_predicted, CommStats, CommSummary, RankStats};
pub use tree::{build_broadcast_tree, rank_id, Axis, BroadcastTree, FiberTree};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("inner dimensions differ: A is {}x{}, B is {}x{}", a.0, a.1, b.0, b.1)]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error(transparent)]
    Par(#[from] ParError),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
