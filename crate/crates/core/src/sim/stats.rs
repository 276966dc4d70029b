use std::io::Write;

use serde::Serialize;

use crate::par::{LocalDomain, ProcessorGrid};

use super::SimError;

/// Traffic of one rank. Words a rank hands to itself when it is the root of
/// a broadcast count as both sent and received and are also listed in
/// `local_words`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RankStats {
    pub rank: usize,
    pub words_sent: u64,
    pub words_received: u64,
    /// A and B words received.
    pub input_words: u64,
    /// Partial C words sent towards the reduction root.
    pub reduce_words: u64,
    pub local_words: u64,
    /// Received words that are zero padding.
    pub padded_words: u64,
    pub messages_sent: u64,
    pub rounds: usize,
}

impl RankStats {
    /// Inputs received plus partial results sent for reduction.
    pub fn communication(&self) -> u64 {
        self.input_words + self.reduce_words
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommSummary {
    pub max_words: u64,
    pub mean_words: f64,
    pub total_sent: u64,
    pub total_received: u64,
    pub padded_words: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommStats {
    pub grid: ProcessorGrid,
    pub domain: LocalDomain,
    pub rounds: usize,
    pub summary: CommSummary,
    pub ranks: Vec<RankStats>,
}

impl CommStats {
    pub fn new(grid: ProcessorGrid, domain: LocalDomain, rounds: usize, ranks: Vec<RankStats>) -> Self {
        let n = ranks.len().max(1) as f64;
        let summary = CommSummary {
            max_words: ranks.iter().map(RankStats::communication).max().unwrap_or(0),
            mean_words: ranks.iter().map(|r| r.communication() as f64).sum::<f64>() / n,
            total_sent: ranks.iter().map(|r| r.words_sent).sum(),
            total_received: ranks.iter().map(|r| r.words_received).sum(),
            padded_words: ranks.iter().map(|r| r.padded_words).sum(),
        };
        CommStats {
            grid,
            domain,
            rounds,
            summary,
            ranks,
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.summary.total_sent == self.summary.total_received
    }

    /// One row per rank.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.ranks {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest per-rank communication relative to a predicted volume.
pub fn measured_vs_predicted(stats: &CommStats, pred: f64) -> Result<f64, SimError> {
    if pred.is_nan() || pred <= 0.0 {
        return Err(SimError::Format(format!("prediction must be positive, got {pred}")));
    }
    Ok(stats.summary.max_words as f64 / pred)
}
