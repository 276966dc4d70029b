//! The matrix-multiplication CDAG and the red-blue pebble game played on it.
//!
//! The graph is never materialised: vertices are addressed by coordinates and
//! parent/child queries are answered arithmetically. On top of it this module
//! provides
//!
//! * a move validator ([`validate_pebbling`]) that checks a complete
//!   calculation and tallies its loads and stores,
//! * dominator/minimum sets and an X-partition checker,
//! * the computational-intensity bound and the sequential I/O lower bound,
//! * an exact optimal-pebbling search ([`brute_force_optimal_io`]) for tiny
//!   instances, used as an oracle by the tests.
//!
//! Game conventions shared by the validator and the oracle:
//!
//! * Computing `C(i,j,r)` for `r > 1` accumulates in place: the red pebble of
//!   `C(i,j,r-1)` moves onto the new vertex. The first partial sum needs a
//!   fresh pebble.
//! * Red pebbles are dropped implicitly when room is needed, provided the
//!   dropped vertex is not read again before it is re-placed. Explicit
//!   `Delete` moves are accepted but never required.

mod bounds;
mod graph;
mod oracle;
mod partition;
mod pebble;

use thiserror::Error;

pub use bounds::{computational_intensity, io_lower_bound, sequential_lower_bound, IntensityDomainError};
pub use graph::{projections, Cdag, Vertex, VertexKind, DEFAULT_VERTEX_CAP};
pub use oracle::{brute_force_optimal_io, OracleConfig, OracleError, DEFAULT_ORACLE_CAP};
pub use partition::{PartitionViolation, XPartition};
pub use pebble::{
    format_moves, parse_moves, validate_pebbling, Color, IoTally, Move, MoveOp, ParseError, PebbleError, Rule,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CdagError {
    #[error("matrix dimensions must be positive, got m={m} n={n} k={k}")]
    EmptyDimension { m: usize, n: usize, k: usize },
    #[error("CDAG would have {vertices} vertices, above the cap of {cap}")]
    TooLarge { vertices: u128, cap: usize },
}
