//! Parallel decomposition: local domains, processor grids and the cost
//! models of the competing decompositions.

mod grid;
mod model;
mod plan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{fit_ranks, grid_cost, ProcessorGrid};
pub use model::{io_latency_tradeoff, optimal_domain, predicted_io, strategy_cost, CostEstimate, Strategy};
pub use plan::{plan, Plan};

pub const DEFAULT_DELTA: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParError {
    #[error("matrix dimensions must be positive, got m={m} n={n} k={k}")]
    EmptyDimension { m: usize, n: usize, k: usize },
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
    #[error("infeasible: p*S = {available} words cannot hold mn+mk+nk = {required}")]
    InsufficientMemory { required: u128, available: u128 },
    #[error("infeasible: step width {h} needs a^2 + 2ah <= S for some a >= 1; largest admissible h is {max_h}")]
    StepTooWide { h: usize, max_h: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl Dims {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self, ParError> {
        if m == 0 || n == 0 || k == 0 {
            return Err(ParError::EmptyDimension { m, n, k });
        }
        Ok(Dims { m, n, k })
    }

    pub fn square(n: usize) -> Self {
        Dims { m: n, n, k: n }
    }

    /// `mnk` as a float.
    pub fn volume(&self) -> f64 {
        self.m as f64 * self.n as f64 * self.k as f64
    }

    /// `mn + mk + nk`: words of A, B and C together.
    pub fn footprint(&self) -> u128 {
        let (m, n, k) = (self.m as u128, self.n as u128, self.k as u128);
        m * n + m * k + n * k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub p: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub delta: f64,
}

impl Machine {
    pub fn new(p: usize, s: usize) -> Self {
        Machine {
            p,
            s,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<(), ParError> {
        if self.p == 0 {
            return Err(ParError::InvalidMachine("p must be at least 1".into()));
        }
        if self.s < 4 {
            return Err(ParError::InvalidMachine(format!(
                "S must be at least 4, got {}",
                self.s
            )));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(ParError::InvalidMachine(format!(
                "delta must lie in [0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Fails unless all three matrices fit into the aggregate memory.
    pub fn check_fits(&self, dims: &Dims) -> Result<(), ParError> {
        let available = self.p as u128 * self.s as u128;
        let required = dims.footprint();
        if available < required {
            return Err(ParError::InsufficientMemory { required, available });
        }
        Ok(())
    }
}

/// The brick of multiplications one rank performs, `rows x cols x depth`,
/// streamed in `steps` rounds of at most `step_size` outer products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalDomain {
    pub rows: usize,
    pub cols: usize,
    pub depth: usize,
    pub step_size: usize,
    pub steps: usize,
}

impl LocalDomain {
    /// Step size is the number of outer products whose A columns and B rows
    /// fit next to the resident C block, but never less than one.
    pub fn new(rows: usize, cols: usize, depth: usize, s: usize) -> Self {
        let free = s.saturating_sub(rows * cols);
        let step_size = (free / (rows + cols)).max(1);
        LocalDomain {
            rows,
            cols,
            depth,
            step_size,
            steps: depth.div_ceil(step_size),
        }
    }

    pub fn volume(&self) -> usize {
        self.rows * self.cols * self.depth
    }
}
