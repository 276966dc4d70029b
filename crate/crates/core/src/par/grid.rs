use serde::{Deserialize, Serialize};

use super::{Dims, LocalDomain, Machine};

/// Factorisation of the used ranks along the m, n and k dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessorGrid {
    pub pm: usize,
    pub pn: usize,
    pub pk: usize,
    pub used: usize,
    pub idle: usize,
}

impl ProcessorGrid {
    /// Grid `pm x pn x pk` on a machine of `p` ranks.
    pub fn new(pm: usize, pn: usize, pk: usize, p: usize) -> Self {
        let used = pm * pn * pk;
        assert!(used >= 1 && used <= p, "grid {pm}x{pn}x{pk} does not fit {p} ranks");
        ProcessorGrid {
            pm,
            pn,
            pk,
            used,
            idle: p - used,
        }
    }

    pub fn idle_fraction(&self) -> f64 {
        self.idle as f64 / (self.used + self.idle) as f64
    }

    /// Local domain of one rank, dimensions rounded up.
    pub fn domain(&self, dims: &Dims, s: usize) -> LocalDomain {
        LocalDomain::new(
            dims.m.div_ceil(self.pm),
            dims.n.div_ceil(self.pn),
            dims.k.div_ceil(self.pk),
            s,
        )
    }
}

/// Words one rank receives under the grid: its A panel unless the n
/// dimension is unsplit (then it already owns it), likewise its B panel, and
/// the partial C block when k is split and partials must be reduced.
pub fn grid_cost(dims: &Dims, pm: usize, pn: usize, pk: usize) -> f64 {
    let rows = dims.m as f64 / pm as f64;
    let cols = dims.n as f64 / pn as f64;
    let depth = dims.k as f64 / pk as f64;
    let flag = |split: usize| if split > 1 { 1.0 } else { 0.0 };
    rows * depth * flag(pn) + cols * depth * flag(pm) + rows * cols * flag(pk)
}

fn divisors(x: usize) -> Vec<usize> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= x {
        if x.is_multiple_of(d) {
            small.push(d);
            if d * d != x {
                large.push(x / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Searches every grid on `p'` ranks for `p'` between `ceil((1-delta) p)`
/// and `p` and keeps the one with the lowest [`grid_cost`]. Grids whose C
/// block does not fit in `S`, or rank counts too small to hold the matrices,
/// are skipped unless nothing else remains. Ties go to more ranks, then a
/// shallower k split, then the lexicographically smaller triple.
pub fn fit_ranks(dims: &Dims, machine: &Machine) -> (ProcessorGrid, LocalDomain) {
    let p = machine.p.max(1);
    let delta = machine.delta.clamp(0.0, 1.0);
    let lowest = (((1.0 - delta) * p as f64).ceil() as usize).clamp(1, p);
    let s = machine.s as f64;

    // (cost, p', pm, pn, pk, feasible)
    let mut best: Option<(f64, usize, usize, usize, usize, bool)> = None;
    for used in lowest..=p {
        let fits = used as u128 * machine.s as u128 >= dims.footprint();
        for pm in divisors(used) {
            for pn in divisors(used / pm) {
                let pk = used / pm / pn;
                let block = (dims.m as f64 / pm as f64) * (dims.n as f64 / pn as f64);
                let feasible = fits && block <= s;
                let cost = grid_cost(dims, pm, pn, pk);
                let cand = (cost, used, pm, pn, pk, feasible);
                let replace = match best {
                    None => true,
                    Some(cur) => prefer(cand, cur),
                };
                if replace {
                    best = Some(cand);
                }
            }
        }
    }
    let (_, _, pm, pn, pk, _) = best.expect("at least the 1x1x1 grid exists");
    let grid = ProcessorGrid::new(pm, pn, pk, p);
    (grid, grid.domain(dims, machine.s))
}

fn prefer(x: (f64, usize, usize, usize, usize, bool), y: (f64, usize, usize, usize, usize, bool)) -> bool {
    if x.5 != y.5 {
        return x.5;
    }
    let tol = 1e-12 * x.0.abs().max(y.0.abs()).max(1.0);
    if (x.0 - y.0).abs() > tol {
        return x.0 < y.0;
    }
    if x.1 != y.1 {
        return x.1 > y.1;
    }
    if x.4 != y.4 {
        return x.4 < y.4;
    }
    (x.2, x.3) < (y.2, y.3)
}
