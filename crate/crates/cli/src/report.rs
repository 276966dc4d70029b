use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;

use crate::{CliError, CompareRow, PebbleReport, PlanReport, SeqReport, SimulateReport};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

pub enum Report {
    Plan(PlanReport),
    Simulate(SimulateReport),
    Compare(Vec<CompareRow>),
    Pebble(PebbleReport),
    Seq(SeqReport),
}

#[derive(Serialize)]
struct PlanRow {
    m: usize,
    n: usize,
    k: usize,
    p: usize,
    #[serde(rename = "S")]
    s: usize,
    delta: f64,
    pm: usize,
    pn: usize,
    pk: usize,
    used: usize,
    idle: usize,
    a: usize,
    b: usize,
    step: usize,
    t: usize,
    predicted_q: f64,
    inter_rank_words: f64,
}

#[derive(Serialize)]
struct PebbleRow {
    m: usize,
    n: usize,
    k: usize,
    #[serde(rename = "S")]
    s: usize,
    optimal: u64,
    tile_a: usize,
    tile_b: usize,
    greedy_loads: u64,
    greedy_stores: u64,
    greedy_total: u64,
}

#[derive(Serialize)]
struct SeqRow {
    m: usize,
    n: usize,
    k: usize,
    #[serde(rename = "S")]
    s: usize,
    tile_a: usize,
    tile_b: usize,
    tiles: usize,
    loads: u64,
    stores: u64,
    total: u64,
    lower_bound: f64,
    ratio: f64,
    ratio_bound: f64,
}

fn csv_rows<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Other(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

impl Report {
    pub fn write<W: Write>(&self, format: Format, out: &mut W) -> Result<(), CliError> {
        match format {
            Format::Json => {
                let json = match self {
                    Report::Plan(r) => serde_json::to_string_pretty(r),
                    Report::Simulate(r) => serde_json::to_string_pretty(r),
                    Report::Compare(r) => serde_json::to_string_pretty(r),
                    Report::Pebble(r) => serde_json::to_string_pretty(r),
                    Report::Seq(r) => serde_json::to_string_pretty(r),
                }
                .map_err(|e| CliError::Other(e.to_string()))?;
                writeln!(out, "{json}")?;
                Ok(())
            }
            Format::Csv => self.write_csv(out),
            Format::Text => self.write_text(out),
        }
    }

    fn write_csv<W: Write>(&self, out: &mut W) -> Result<(), CliError> {
        match self {
            Report::Plan(r) => csv_rows(
                out,
                [PlanRow {
                    m: r.dims.m,
                    n: r.dims.n,
                    k: r.dims.k,
                    p: r.machine.p,
                    s: r.machine.s,
                    delta: r.machine.delta,
                    pm: r.grid.pm,
                    pn: r.grid.pn,
                    pk: r.grid.pk,
                    used: r.grid.used,
                    idle: r.idle,
                    a: r.a,
                    b: r.b,
                    step: r.s,
                    t: r.t,
                    predicted_q: r.predicted_q,
                    inter_rank_words: r.inter_rank_words,
                }],
            ),
            Report::Simulate(r) => r.stats.write_csv(out).map_err(|e| CliError::Other(e.to_string())),
            Report::Compare(rows) => csv_rows(out, rows),
            Report::Pebble(r) => csv_rows(
                out,
                [PebbleRow {
                    m: r.dims.m,
                    n: r.dims.n,
                    k: r.dims.k,
                    s: r.s,
                    optimal: r.optimal,
                    tile_a: r.tile.a,
                    tile_b: r.tile.b,
                    greedy_loads: r.greedy.loads,
                    greedy_stores: r.greedy.stores,
                    greedy_total: r.greedy_total,
                }],
            ),
            Report::Seq(r) => csv_rows(
                out,
                [SeqRow {
                    m: r.dims.m,
                    n: r.dims.n,
                    k: r.dims.k,
                    s: r.s,
                    tile_a: r.tile.a,
                    tile_b: r.tile.b,
                    tiles: r.tiles,
                    loads: r.io.loads,
                    stores: r.io.stores,
                    total: r.total,
                    lower_bound: r.lower_bound,
                    ratio: r.ratio,
                    ratio_bound: r.ratio_bound,
                }],
            ),
        }
    }

    fn write_text<W: Write>(&self, out: &mut W) -> Result<(), CliError> {
        match self {
            Report::Plan(r) => {
                let g = &r.grid;
                writeln!(
                    out,
                    "grid       {}x{}x{} on {} ranks ({} idle)",
                    g.pm, g.pn, g.pk, g.used, r.idle
                )?;
                writeln!(out, "domain     a={} b={} s={} t={}", r.a, r.b, r.s, r.t)?;
                writeln!(out, "predicted  Q={} words per rank", r.predicted_q)?;
                writeln!(out, "inter-rank {} words per rank", r.inter_rank_words)?;
                for c in &r.costs {
                    writeln!(out, "{:<10} Q={:.6e} L={:.6e}", c.strategy.to_string(), c.q, c.l)?;
                }
            }
            Report::Simulate(r) => {
                let s = &r.stats;
                writeln!(
                    out,
                    "grid       {}x{}x{}, {} rounds",
                    s.grid.pm, s.grid.pn, s.grid.pk, s.rounds
                )?;
                writeln!(
                    out,
                    "words      max {} mean {:.2} (predicted {})",
                    s.summary.max_words, s.summary.mean_words, r.predicted_q
                )?;
                writeln!(
                    out,
                    "traffic    sent {} received {} padding {}",
                    s.summary.total_sent, s.summary.total_received, s.summary.padded_words
                )?;
                writeln!(out, "ratio      {:.4}", r.measured_over_predicted)?;
                writeln!(
                    out,
                    "error      {:.3e} (tolerance {:.3e}) {}",
                    r.max_abs_error,
                    r.tolerance,
                    if r.correct { "ok" } else { "WRONG" }
                )?;
            }
            Report::Compare(rows) => {
                writeln!(
                    out,
                    "{:>12} {:>14} {:<10} {:>14} {:>14} {:>8}",
                    "p", "S", "strategy", "Q", "L", "Q/COSMA"
                )?;
                for r in rows {
                    writeln!(
                        out,
                        "{:>12} {:>14} {:<10} {:>14.6e} {:>14.6e} {:>8.4}",
                        r.p,
                        r.s,
                        r.strategy.to_string(),
                        r.q,
                        r.l,
                        r.q_over_cosma
                    )?;
                }
            }
            Report::Pebble(r) => {
                writeln!(out, "optimal    {}", r.optimal)?;
                writeln!(
                    out,
                    "greedy     {} ({} loads, {} stores, tile {}x{})",
                    r.greedy_total, r.greedy.loads, r.greedy.stores, r.tile.a, r.tile.b
                )?;
                if let Some(t) = &r.moves {
                    writeln!(out, "moves      {} ({} loads, {} stores)", t.total(), t.loads, t.stores)?;
                }
            }
            Report::Seq(r) => {
                writeln!(out, "tile       {}x{}, {} tiles", r.tile.a, r.tile.b, r.tiles)?;
                writeln!(
                    out,
                    "io         {} ({} loads, {} stores)",
                    r.total, r.io.loads, r.io.stores
                )?;
                writeln!(out, "bound      {:.4}", r.lower_bound)?;
                writeln!(out, "ratio      {:.4} (tile bound {:.4})", r.ratio, r.ratio_bound)?;
            }
        }
        Ok(())
    }
}
