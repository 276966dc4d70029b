use std::ops::Range;

use serde::Serialize;

use crate::par::{Dims, ProcessorGrid};

use super::tree::rank_id;

/// Contiguous part `idx` of `len` items cut into `parts` near-equal pieces.
pub fn chunk(len: usize, parts: usize, idx: usize) -> Range<usize> {
    idx * len / parts..(idx + 1) * len / parts
}

/// What one rank owns before the first round. Ranges index the padded
/// matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankBlocks {
    pub rank: usize,
    pub coords: (usize, usize, usize),
    pub a_rows: Range<usize>,
    pub a_cols: Range<usize>,
    pub b_rows: Range<usize>,
    pub b_cols: Range<usize>,
    /// Only ranks in the first k layer own a block of the result.
    pub c_block: Option<(Range<usize>, Range<usize>)>,
}

/// Block distribution induced by a processor grid. Matrices are padded with
/// zeros to multiples of the grid.
///
/// The A block `(x, z)` is needed by every rank `(x, *, z)`, so it is split
/// by columns among them; B block `(z, y)` is split by rows among `(*, y, z)`.
/// Each rank thus starts with exactly the slice it will broadcast first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockedLayout {
    pub dims: Dims,
    pub grid: ProcessorGrid,
    /// Padded block sides `(ceil(m/pm), ceil(n/pn), ceil(k/pk))`.
    pub block: (usize, usize, usize),
    pub ranks: Vec<RankBlocks>,
}

impl BlockedLayout {
    pub fn padded(&self) -> (usize, usize, usize) {
        let (am, an, ak) = self.block;
        (am * self.grid.pm, an * self.grid.pn, ak * self.grid.pk)
    }
}

pub fn decompose_data(dims: &Dims, grid: &ProcessorGrid) -> BlockedLayout {
    let (pm, pn, pk) = (grid.pm, grid.pn, grid.pk);
    let am = dims.m.div_ceil(pm);
    let an = dims.n.div_ceil(pn);
    let ak = dims.k.div_ceil(pk);
    let mut ranks = Vec::with_capacity(grid.used);
    for x in 0..pm {
        for y in 0..pn {
            for z in 0..pk {
                let a_part = chunk(ak, pn, y);
                let b_part = chunk(ak, pm, x);
                ranks.push(RankBlocks {
                    rank: rank_id(grid, x, y, z),
                    coords: (x, y, z),
                    a_rows: x * am..(x + 1) * am,
                    a_cols: z * ak + a_part.start..z * ak + a_part.end,
                    b_rows: z * ak + b_part.start..z * ak + b_part.end,
                    b_cols: y * an..(y + 1) * an,
                    c_block: (z == 0).then(|| (x * am..(x + 1) * am, y * an..(y + 1) * an)),
                });
            }
        }
    }
    BlockedLayout {
        dims: *dims,
        grid: *grid,
        block: (am, an, ak),
        ranks,
    }
}
