use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::par::{fit_ranks, Dims, Machine, ProcessorGrid};

use super::layout::chunk;
use super::stats::{CommStats, RankStats};
use super::tree::{rank_id, BroadcastTree};
use super::{Matrix, SimError};

/// Environment variable bounding the worker threads of [`ExecMode::Parallel`].
pub const THREADS_ENV: &str = "COSMA_LAB_THREADS";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecMode {
    /// Ranks are stepped one after another on the calling thread.
    #[default]
    Sequential,
    /// Ranks are stepped on a rayon pool; results are identical.
    Parallel,
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Tag {
    phase: Phase,
    owner: usize,
    level: usize,
}

#[derive(Debug)]
struct Message {
    src: usize,
    dst: usize,
    tag: Tag,
    piece: Piece,
}

/// A slice of the current round's panel: for A the block-local columns
/// `lo..hi` of all rows, for B the rows `lo..hi` of all columns.
#[derive(Debug, Clone)]
struct Piece {
    lo: usize,
    hi: usize,
    data: Vec<f64>,
    padded: u64,
}

struct Geometry {
    dims: Dims,
    pm: usize,
    pn: usize,
    pk: usize,
    am: usize,
    an: usize,
    ak: usize,
    step: usize,
    rounds: usize,
    tree_a: Vec<BroadcastTree>,
    tree_b: Vec<BroadcastTree>,
    tree_c: BroadcastTree,
}

impl Geometry {
    fn round_range(&self, j: usize) -> Range<usize> {
        j * self.step..((j + 1) * self.step).min(self.ak)
    }

    fn a_owned(&self, y: usize) -> Range<usize> {
        chunk(self.ak, self.pn, y)
    }

    fn b_owned(&self, x: usize) -> Range<usize> {
        chunk(self.ak, self.pm, x)
    }

    fn id(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.pn + y) * self.pk + z
    }
}

fn intersect(a: &Range<usize>, b: &Range<usize>) -> Range<usize> {
    a.start.max(b.start)..a.end.min(b.end).max(a.start.max(b.start))
}

struct Rank {
    id: usize,
    x: usize,
    y: usize,
    z: usize,
    /// `am x |a_owned|`, row-major.
    a_own: Vec<f64>,
    /// `|b_owned| x an`, row-major.
    b_own: Vec<f64>,
    pieces_a: Vec<Option<Piece>>,
    pieces_b: Vec<Option<Piece>>,
    c: Vec<f64>,
    stats: RankStats,
}

impl Rank {
    fn new(geo: &Geometry, a: &Matrix, b: &Matrix, x: usize, y: usize, z: usize) -> Self {
        let cols = geo.a_owned(y);
        let mut a_own = Vec::with_capacity(geo.am * cols.len());
        for i in 0..geo.am {
            for r in cols.clone() {
                a_own.push(a.get_padded(x * geo.am + i, z * geo.ak + r));
            }
        }
        let rows = geo.b_owned(x);
        let mut b_own = Vec::with_capacity(rows.len() * geo.an);
        for r in rows {
            for j in 0..geo.an {
                b_own.push(b.get_padded(z * geo.ak + r, y * geo.an + j));
            }
        }
        let id = geo.id(x, y, z);
        Rank {
            id,
            x,
            y,
            z,
            a_own,
            b_own,
            pieces_a: vec![None; geo.pn],
            pieces_b: vec![None; geo.pm],
            c: vec![0.0; geo.am * geo.an],
            stats: RankStats {
                rank: id,
                rounds: geo.rounds,
                ..RankStats::default()
            },
        }
    }

    /// Slice of this rank's own A columns that falls into `range`.
    fn own_a_piece(&self, geo: &Geometry, range: &Range<usize>) -> Option<Piece> {
        let owned = geo.a_owned(self.y);
        let cut = intersect(&owned, range);
        if cut.is_empty() {
            return None;
        }
        let width = owned.len();
        let mut data = Vec::with_capacity(geo.am * cut.len());
        let mut padded = 0;
        for i in 0..geo.am {
            for r in cut.clone() {
                data.push(self.a_own[i * width + (r - owned.start)]);
                if self.x * geo.am + i >= geo.dims.m || self.z * geo.ak + r >= geo.dims.k {
                    padded += 1;
                }
            }
        }
        Some(Piece {
            lo: cut.start,
            hi: cut.end,
            data,
            padded,
        })
    }

    fn own_b_piece(&self, geo: &Geometry, range: &Range<usize>) -> Option<Piece> {
        let owned = geo.b_owned(self.x);
        let cut = intersect(&owned, range);
        if cut.is_empty() {
            return None;
        }
        let mut data = Vec::with_capacity(cut.len() * geo.an);
        let mut padded = 0;
        for r in cut.clone() {
            let row = (r - owned.start) * geo.an;
            data.extend_from_slice(&self.b_own[row..row + geo.an]);
            for j in 0..geo.an {
                if self.z * geo.ak + r >= geo.dims.k || self.y * geo.an + j >= geo.dims.n {
                    padded += 1;
                }
            }
        }
        Some(Piece {
            lo: cut.start,
            hi: cut.end,
            data,
            padded,
        })
    }

    /// Messages this rank sends in broadcast step `level` of round `range`.
    /// Step 0 is the owner handing its slice to itself.
    fn broadcast(&self, geo: &Geometry, range: &Range<usize>, level: usize) -> Vec<Message> {
        let mut out = Vec::new();
        if level == 0 {
            if geo.pn > 1 {
                if let Some(piece) = self.own_a_piece(geo, range) {
                    out.push(self.message(self.id, Phase::A, self.y, 0, piece));
                }
            }
            if geo.pm > 1 {
                if let Some(piece) = self.own_b_piece(geo, range) {
                    out.push(self.message(self.id, Phase::B, self.x, 0, piece));
                }
            }
            return out;
        }
        for (owner, tree) in geo.tree_a.iter().enumerate() {
            let Some(piece) = &self.pieces_a[owner] else { continue };
            for &(from, to) in tree.levels.get(level - 1).map(Vec::as_slice).unwrap_or(&[]) {
                if from == self.y {
                    let dst = geo.id(self.x, to, self.z);
                    out.push(self.message(dst, Phase::A, owner, level, piece.clone()));
                }
            }
        }
        for (owner, tree) in geo.tree_b.iter().enumerate() {
            let Some(piece) = &self.pieces_b[owner] else { continue };
            for &(from, to) in tree.levels.get(level - 1).map(Vec::as_slice).unwrap_or(&[]) {
                if from == self.x {
                    let dst = geo.id(to, self.y, self.z);
                    out.push(self.message(dst, Phase::B, owner, level, piece.clone()));
                }
            }
        }
        out
    }

    /// Partial C sent to the parent in reduction step `level`.
    fn reduce(&self, geo: &Geometry, level: usize) -> Vec<Message> {
        let mut out = Vec::new();
        for &(parent, child) in &geo.tree_c.levels[level - 1] {
            if child == self.z {
                let mut padded = 0;
                for i in 0..geo.am {
                    for j in 0..geo.an {
                        if self.x * geo.am + i >= geo.dims.m || self.y * geo.an + j >= geo.dims.n {
                            padded += 1;
                        }
                    }
                }
                let piece = Piece {
                    lo: 0,
                    hi: geo.am,
                    data: self.c.clone(),
                    padded,
                };
                out.push(self.message(geo.id(self.x, self.y, parent), Phase::C, 0, level, piece));
            }
        }
        out
    }

    fn message(&self, dst: usize, phase: Phase, owner: usize, level: usize, piece: Piece) -> Message {
        Message {
            src: self.id,
            dst,
            tag: Tag { phase, owner, level },
            piece,
        }
    }

    fn account_sent(&mut self, msgs: &[Message]) {
        for m in msgs {
            let words = m.piece.data.len() as u64;
            self.stats.words_sent += words;
            self.stats.messages_sent += 1;
            if m.tag.phase == Phase::C {
                self.stats.reduce_words += words;
            }
            if m.dst == self.id {
                self.stats.local_words += words;
            }
        }
    }

    fn receive(&mut self, inbox: Vec<Message>) {
        for m in inbox {
            let words = m.piece.data.len() as u64;
            self.stats.words_received += words;
            self.stats.padded_words += m.piece.padded;
            match m.tag.phase {
                Phase::A => {
                    self.stats.input_words += words;
                    self.pieces_a[m.tag.owner] = Some(m.piece);
                }
                Phase::B => {
                    self.stats.input_words += words;
                    self.pieces_b[m.tag.owner] = Some(m.piece);
                }
                Phase::C => {
                    for (acc, v) in self.c.iter_mut().zip(&m.piece.data) {
                        *acc += v;
                    }
                }
            }
        }
    }

    /// Singleton fibers skip the broadcast: the whole panel is already local.
    fn start_round(&mut self, geo: &Geometry, range: &Range<usize>) {
        self.pieces_a.iter_mut().for_each(|p| *p = None);
        self.pieces_b.iter_mut().for_each(|p| *p = None);
        if geo.pn == 1 {
            self.pieces_a[0] = self.own_a_piece(geo, range);
        }
        if geo.pm == 1 {
            self.pieces_b[0] = self.own_b_piece(geo, range);
        }
    }

    /// `C += A_panel * B_panel` over the round's k range.
    fn multiply(&mut self, geo: &Geometry, range: &Range<usize>) {
        let width = range.len();
        let mut a_panel = vec![0.0; geo.am * width];
        for piece in self.pieces_a.iter().flatten() {
            let w = piece.hi - piece.lo;
            for i in 0..geo.am {
                for c in 0..w {
                    a_panel[i * width + (piece.lo - range.start) + c] = piece.data[i * w + c];
                }
            }
        }
        let mut b_panel = vec![0.0; width * geo.an];
        for piece in self.pieces_b.iter().flatten() {
            let at = (piece.lo - range.start) * geo.an;
            b_panel[at..at + piece.data.len()].copy_from_slice(&piece.data);
        }
        for i in 0..geo.am {
            for r in 0..width {
                let a = a_panel[i * width + r];
                let c_row = &mut self.c[i * geo.an..(i + 1) * geo.an];
                let b_row = &b_panel[r * geo.an..(r + 1) * geo.an];
                for (acc, b) in c_row.iter_mut().zip(b_row) {
                    *acc += a * b;
                }
            }
        }
    }
}

fn for_each_rank<F>(ranks: &mut [Rank], mode: ExecMode, f: F)
where
    F: Fn(&mut Rank) + Sync + Send,
{
    match mode {
        ExecMode::Sequential => ranks.iter_mut().for_each(f),
        ExecMode::Parallel => ranks.par_iter_mut().for_each(f),
    }
}

/// One superstep: every rank emits its messages, the router orders them by
/// `(src, tag)` and each rank then consumes its inbox.
fn superstep<F>(ranks: &mut [Rank], mode: ExecMode, emit: F)
where
    F: Fn(&Rank) -> Vec<Message> + Sync + Send,
{
    let outgoing: Vec<Vec<Message>> = match mode {
        ExecMode::Sequential => ranks.iter().map(&emit).collect(),
        ExecMode::Parallel => ranks.par_iter().map(&emit).collect(),
    };
    for (rank, msgs) in ranks.iter_mut().zip(&outgoing) {
        rank.account_sent(msgs);
    }
    let mut all: Vec<Message> = outgoing.into_iter().flatten().collect();
    all.sort_by_key(|m| (m.src, m.tag));
    let mut inboxes: Vec<Vec<Message>> = (0..ranks.len()).map(|_| Vec::new()).collect();
    for m in all {
        inboxes[m.dst].push(m);
    }
    match mode {
        ExecMode::Sequential => ranks.iter_mut().zip(inboxes).for_each(|(r, inbox)| r.receive(inbox)),
        ExecMode::Parallel => ranks
            .par_iter_mut()
            .zip(inboxes.into_par_iter())
            .for_each(|(r, inbox)| r.receive(inbox)),
    }
}

/// Multiplies `a * b` on the ranks of `grid`, each holding at most `s` words
/// of panel per step, and reports the exact traffic. `p` is the machine
/// size; ranks beyond the grid stay idle.
pub fn run_on_grid(
    a: &Matrix,
    b: &Matrix,
    grid: &ProcessorGrid,
    s: usize,
    p: usize,
    mode: ExecMode,
) -> Result<(Matrix, CommStats), SimError> {
    if a.cols() != b.rows() {
        return Err(SimError::DimensionMismatch {
            a: (a.rows(), a.cols()),
            b: (b.rows(), b.cols()),
        });
    }
    let dims = Dims::new(a.rows(), b.cols(), a.cols())?;
    let domain = grid.domain(&dims, s);
    let geo = Geometry {
        dims,
        pm: grid.pm,
        pn: grid.pn,
        pk: grid.pk,
        am: domain.rows,
        an: domain.cols,
        ak: domain.depth,
        step: domain.step_size,
        rounds: domain.steps,
        tree_a: (0..grid.pn).map(|r| BroadcastTree::new(grid.pn, r)).collect(),
        tree_b: (0..grid.pm).map(|r| BroadcastTree::new(grid.pm, r)).collect(),
        tree_c: BroadcastTree::new(grid.pk, 0),
    };

    let run = || {
        let mut ranks = Vec::with_capacity(grid.used);
        for x in 0..geo.pm {
            for y in 0..geo.pn {
                for z in 0..geo.pk {
                    ranks.push(Rank::new(&geo, a, b, x, y, z));
                }
            }
        }
        debug_assert!(ranks.iter().enumerate().all(|(i, r)| r.id == i));
        let levels = geo.tree_a[0].depth().max(geo.tree_b[0].depth());
        for j in 0..geo.rounds {
            let range = geo.round_range(j);
            for_each_rank(&mut ranks, mode, |r| r.start_round(&geo, &range));
            if geo.pm > 1 || geo.pn > 1 {
                for level in 0..=levels {
                    superstep(&mut ranks, mode, |r| r.broadcast(&geo, &range, level));
                }
            }
            for_each_rank(&mut ranks, mode, |r| r.multiply(&geo, &range));
        }
        for level in (1..=geo.tree_c.depth()).rev() {
            superstep(&mut ranks, mode, |r| r.reduce(&geo, level));
        }
        ranks
    };
    let ranks = match (mode, threads_from_env()) {
        (ExecMode::Parallel, Some(threads)) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SimError::Format(format!("thread pool: {e}")))?
            .install(run),
        _ => run(),
    };

    let mut c = Matrix::zeros(dims.m, dims.n);
    for r in ranks.iter().filter(|r| r.z == 0) {
        for i in 0..geo.am {
            let gi = r.x * geo.am + i;
            if gi >= dims.m {
                break;
            }
            for j in 0..geo.an {
                let gj = r.y * geo.an + j;
                if gj < dims.n {
                    c.set(gi, gj, r.c[i * geo.an + j]);
                }
            }
        }
    }
    let mut stats: Vec<RankStats> = ranks.iter().map(|r| r.stats).collect();
    stats.extend((grid.used..p.max(grid.used)).map(|rank| RankStats {
        rank,
        ..RankStats::default()
    }));
    debug_assert_eq!(rank_id(grid, geo.pm - 1, geo.pn - 1, geo.pk - 1) + 1, grid.used);
    let stats = CommStats::new(*grid, domain, geo.rounds, stats);
    if !stats.is_conserved() {
        return Err(SimError::Invariant(format!(
            "{} words sent but {} received",
            stats.summary.total_sent, stats.summary.total_received
        )));
    }
    Ok((c, stats))
}

/// Fits a grid to the machine and runs the round-based schedule on it.
pub fn run_cosma(a: &Matrix, b: &Matrix, machine: &Machine, mode: ExecMode) -> Result<(Matrix, CommStats), SimError> {
    if a.cols() != b.rows() {
        return Err(SimError::DimensionMismatch {
            a: (a.rows(), a.cols()),
            b: (b.rows(), b.cols()),
        });
    }
    let dims = Dims::new(a.rows(), b.cols(), a.cols())?;
    machine.validate()?;
    machine.check_fits(&dims)?;
    let (grid, _) = fit_ranks(&dims, machine);
    run_on_grid(a, b, &grid, machine.s, machine.p, mode)
}
