//! Near-optimal sequential schedule: an `a x b` block of C stays resident
//! while the k dimension is streamed through one A column fragment and one B
//! element at a time.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::io::Write;
use std::ops::Range;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdag::{Cdag, CdagError, IoTally, Move, Vertex};

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("working set of {needed} words exceeds fast memory of {capacity}")]
    CapacityExceeded { needed: usize, capacity: usize },
    #[error(transparent)]
    Cdag(#[from] CdagError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqTile {
    pub a: usize,
    pub b: usize,
    /// Set when memory is too small for the constraint to be met by any tile.
    pub degenerate: bool,
}

impl SeqTile {
    pub fn new(a: usize, b: usize) -> Self {
        assert!(a > 0 && b > 0, "tile sides must be positive");
        SeqTile {
            a,
            b,
            degenerate: false,
        }
    }

    /// `ab / (a + b)`.
    pub fn intensity(&self) -> Ratio<u64> {
        Ratio::new((self.a * self.b) as u64, (self.a + self.b) as u64)
    }

    /// Words held at the peak of a step: the C block, the A fragment and one B word.
    pub fn footprint(&self) -> usize {
        self.a * self.b + self.a + 1
    }

    /// `sqrt(S)(a+b)/(2ab)`: how far the schedule may sit above the lower bound.
    pub fn ratio_bound(&self, s: usize) -> f64 {
        (s as f64).sqrt() * (self.a + self.b) as f64 / (2 * self.a * self.b) as f64
    }
}

/// Floors of the real-valued maximiser of `ab/(a+b)` on `ab + a + 1 = S`,
/// clamped to at least 1. Not always the integer optimum.
pub fn closed_form_tile(s: usize) -> (usize, usize) {
    if s < 4 {
        return (1, 1);
    }
    let sf = s as f64;
    let root = (sf - 1.0).powf(1.5);
    let a = ((root - sf + 1.0) / (sf - 2.0)).floor();
    let b = (-(2.0 * sf + root - sf * sf - 1.0) / (root - sf + 1.0)).floor();
    (a.max(1.0) as usize, b.max(1.0) as usize)
}

/// Orders candidates: higher intensity, then smaller footprint, then larger `a`.
fn better(x: (usize, usize), y: (usize, usize)) -> bool {
    let lhs = (x.0 * x.1) as u128 * (y.0 + y.1) as u128;
    let rhs = (y.0 * y.1) as u128 * (x.0 + x.1) as u128;
    match lhs.cmp(&rhs) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => {
            let fx = x.0 * x.1 + x.0;
            let fy = y.0 * y.1 + y.0;
            fx < fy || (fx == fy && x.0 > y.0)
        }
    }
}

/// The integer tile maximising `ab/(a+b)` subject to `ab + a + 1 <= S`.
///
/// Starts from the closed form and scans rows `a = 1, 2, ...` with the
/// largest admissible `b`. A row whose `b` is no larger than the best
/// intensity so far cannot win, and neither can any later row, so the scan
/// costs `O(sqrt S)`.
pub fn optimal_tile(s: usize) -> SeqTile {
    if s < 4 {
        return SeqTile {
            a: 1,
            b: 1,
            degenerate: true,
        };
    }
    let seed = closed_form_tile(s);
    let mut best = if seed.0 * seed.1 + seed.0 < s {
        seed
    } else {
        (1, (s - 2))
    };
    for a in 1.. {
        if s < 2 * a + 1 {
            break;
        }
        let b = (s - 1 - a) / a;
        if b == 0 {
            break;
        }
        let cand = (a, b);
        if better(cand, best) {
            best = cand;
        }
        // rho(best) >= b means no row with b' <= b can do better
        if (b * (best.0 + best.1)) as u128 <= (best.0 * best.1) as u128 {
            break;
        }
    }
    SeqTile::new(best.0, best.1)
}

/// One C block of the schedule; ranges are 0-based and half-open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileRange {
    pub index: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqSchedule {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub tile: SeqTile,
}

#[derive(Serialize)]
struct TileRecord {
    tile: usize,
    i_start: usize,
    i_end: usize,
    j_start: usize,
    j_end: usize,
}

impl SeqSchedule {
    pub fn with_tile(m: usize, n: usize, k: usize, tile: SeqTile) -> Self {
        SeqSchedule { m, n, k, tile }
    }

    pub fn tile_count(&self) -> usize {
        self.m.div_ceil(self.tile.a) * self.n.div_ceil(self.tile.b)
    }

    /// Tiles in loop order, edge tiles clipped.
    pub fn tiles(&self) -> impl Iterator<Item = TileRange> + '_ {
        let (a, b) = (self.tile.a, self.tile.b);
        let cols = self.n.div_ceil(b);
        (0..self.tile_count()).map(move |index| {
            let (ti, tj) = (index / cols, index % cols);
            TileRange {
                index,
                rows: ti * a..((ti + 1) * a).min(self.m),
                cols: tj * b..((tj + 1) * b).min(self.n),
            }
        })
    }

    /// Every multiplication `(i, j, r)` (0-based) in execution order.
    pub fn multiplications(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.tiles().flat_map(move |t| {
            (0..self.k).flat_map(move |r| {
                let rows = t.rows.clone();
                t.cols.clone().flat_map(move |j| rows.clone().map(move |i| (i, j, r)))
            })
        })
    }

    /// Writes `tile,i_start,i_end,j_start,j_end` rows with 1-based inclusive bounds.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SeqError> {
        let mut w = csv::Writer::from_writer(out);
        for t in self.tiles() {
            w.serialize(TileRecord {
                tile: t.index,
                i_start: t.rows.start + 1,
                i_end: t.rows.end,
                j_start: t.cols.start + 1,
                j_end: t.cols.end,
            })?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn emit_schedule(m: usize, n: usize, k: usize, s: usize) -> SeqSchedule {
    SeqSchedule::with_tile(m, n, k, optimal_tile(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Word {
    A(usize, usize),
    B(usize, usize),
    C(usize, usize),
}

struct FastMemory {
    words: BTreeSet<Word>,
    capacity: usize,
    tally: IoTally,
}

impl FastMemory {
    fn hold(&mut self, w: Word) -> Result<(), SeqError> {
        self.words.insert(w);
        if self.words.len() > self.capacity {
            return Err(SeqError::CapacityExceeded {
                needed: self.words.len(),
                capacity: self.capacity,
            });
        }
        Ok(())
    }

    fn load(&mut self, w: Word) -> Result<(), SeqError> {
        self.tally.loads += 1;
        self.hold(w)
    }

    fn store(&mut self, w: Word) {
        debug_assert!(self.words.contains(&w));
        self.tally.stores += 1;
        self.words.remove(&w);
    }
}

/// Runs the schedule against a fast memory of `S` words and counts every
/// load and store. Fails if the working set ever outgrows memory.
pub fn trace_io(sched: &SeqSchedule, s: usize) -> Result<IoTally, SeqError> {
    let mut mem = FastMemory {
        words: BTreeSet::new(),
        capacity: s,
        tally: IoTally::default(),
    };
    for t in sched.tiles() {
        for r in 0..sched.k {
            for i in t.rows.clone() {
                mem.load(Word::A(i, r))?;
            }
            for j in t.cols.clone() {
                mem.load(Word::B(r, j))?;
                for i in t.rows.clone() {
                    mem.hold(Word::C(i, j))?;
                }
                mem.words.remove(&Word::B(r, j));
            }
            for i in t.rows.clone() {
                mem.words.remove(&Word::A(i, r));
            }
        }
        for i in t.rows.clone() {
            for j in t.cols.clone() {
                mem.store(Word::C(i, j));
            }
        }
        debug_assert!(mem.words.is_empty());
    }
    Ok(mem.tally)
}

/// Closed-form count of the loads and stores of a schedule.
pub fn analytic_io(sched: &SeqSchedule) -> IoTally {
    let loads = sched
        .tiles()
        .map(|t| (sched.k * (t.rows.len() + t.cols.len())) as u64)
        .sum();
    IoTally {
        loads,
        stores: (sched.m * sched.n) as u64,
    }
}

/// The schedule as pebble-game moves, without explicit deletes.
pub fn schedule_to_pebbling(sched: &SeqSchedule) -> Result<Vec<Move>, SeqError> {
    Cdag::new(sched.m, sched.n, sched.k)?;
    let v = |x: usize| x as u32 + 1;
    let mut moves = Vec::new();
    for t in sched.tiles() {
        for r in 0..sched.k {
            for i in t.rows.clone() {
                moves.push(Move::load(Vertex::a(v(i), v(r))));
            }
            for j in t.cols.clone() {
                moves.push(Move::load(Vertex::b(v(r), v(j))));
                for i in t.rows.clone() {
                    moves.push(Move::compute(Vertex::c(v(i), v(j), v(r))));
                }
            }
        }
        for i in t.rows.clone() {
            for j in t.cols.clone() {
                moves.push(Move::store(Vertex::c(v(i), v(j), sched.k as u32)));
            }
        }
    }
    Ok(moves)
}
