use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use super::Cdag;

/// Largest graph the exhaustive search accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub vertex_cap: usize,
    /// Collapse states that differ only in pebbles that can never pay off.
    pub prune: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            vertex_cap: DEFAULT_ORACLE_CAP,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("graph has {vertices} vertices, above the search cap of {cap}")]
    TooLarge { vertices: usize, cap: usize },
    #[error("no complete calculation exists with {capacity} red pebbles (at least 3 are required)")]
    Infeasible { capacity: usize },
}

type State = (u64, u64);

struct Search {
    m: usize,
    n: usize,
    k: usize,
    c_base: usize,
    capacity: u32,
    /// Parent mask of each vertex (empty for inputs).
    parents: Vec<u64>,
    c_parent: Vec<Option<usize>>,
    inputs: u64,
    outputs: u64,
    prune: bool,
}

impl Search {
    fn chain_mask(&self, cell: usize) -> u64 {
        let low = (1u64 << self.k) - 1;
        low << (self.c_base + cell * self.k)
    }

    fn a_bit(&self, i: usize, r: usize) -> u64 {
        1u64 << (i * self.k + r)
    }

    fn b_bit(&self, r: usize, j: usize) -> u64 {
        1u64 << (self.m * self.k + r * self.n + j)
    }

    /// Drops pebbles that no optimal continuation needs. Every removal is a
    /// free delete, so the resulting state is reachable from the input.
    fn canonical(&self, (mut red, mut blue): State) -> State {
        let k = self.k;
        // cover[cell]: steps 1..=cover of this chain never need computing again
        let mut cover = vec![0usize; self.m * self.n];
        for (cell, cov) in cover.iter_mut().enumerate() {
            let chain = self.chain_mask(cell);
            let shift = self.c_base + cell * k;
            let out_bit = 1u64 << (shift + k - 1);
            if blue & out_bit != 0 {
                red &= !chain;
                blue &= !chain | out_bit;
                *cov = k;
                continue;
            }
            let r = (red & chain) >> shift;
            if r != 0 {
                let top = 63 - r.leading_zeros() as usize;
                red &= !(((1u64 << top) - 1) << shift);
                *cov = top + 1;
            }
            let b = (blue & chain) >> shift;
            if b != 0 {
                let top = 63 - b.leading_zeros() as usize;
                blue &= !(((1u64 << top) - 1) << shift);
            }
        }
        for i in 0..self.m {
            for r in 0..k {
                if (0..self.n).all(|j| cover[i * self.n + j] > r) {
                    red &= !self.a_bit(i, r);
                }
            }
        }
        for j in 0..self.n {
            for r in 0..k {
                if (0..self.m).all(|i| cover[i * self.n + j] > r) {
                    red &= !self.b_bit(r, j);
                }
            }
        }
        (red, blue)
    }

    fn normalise(&self, s: State) -> State {
        if self.prune {
            self.canonical(s)
        } else {
            s
        }
    }

    /// Red sets obtained by adding `v`, dropping one unpinned pebble first
    /// when memory is full.
    fn place(&self, red: u64, v: usize, pinned: u64, out: &mut Vec<u64>) {
        let bit = 1u64 << v;
        if red.count_ones() < self.capacity {
            out.push(red | bit);
            return;
        }
        let mut victims = red & !pinned;
        while victims != 0 {
            let u = victims & victims.wrapping_neg();
            victims ^= u;
            out.push((red ^ u) | bit);
        }
    }

    fn successors(&self, (red, blue): State, zero: &mut Vec<State>, one: &mut Vec<State>) {
        let total = self.c_base + self.m * self.n * self.k;
        let mut reds = Vec::new();
        for v in 0..total {
            let bit = 1u64 << v;
            let is_blue = self.inputs & bit != 0 || blue & bit != 0;
            if red & bit == 0 {
                if is_blue {
                    reds.clear();
                    self.place(red, v, 0, &mut reds);
                    one.extend(reds.iter().map(|&r| (r, blue)));
                }
                if v >= self.c_base && red & self.parents[v] == self.parents[v] {
                    match self.c_parent[v] {
                        Some(p) => zero.push((red ^ (1u64 << p) | bit, blue)),
                        None => {
                            reds.clear();
                            self.place(red, v, self.parents[v], &mut reds);
                            zero.extend(reds.iter().map(|&r| (r, blue)));
                        }
                    }
                }
            } else if v >= self.c_base && blue & bit == 0 {
                one.push((red, blue | bit));
            }
        }
    }
}

/// Minimum number of loads plus stores over all complete calculations of `g`
/// with `capacity` red pebbles, found by exhaustive search over pebble
/// configurations ordered by I/O count. Only usable for very small graphs.
pub fn brute_force_optimal_io(g: &Cdag, capacity: usize, config: &OracleConfig) -> Result<u64, OracleError> {
    let vertices = g.vertex_count();
    let cap = config.vertex_cap.min(64);
    if vertices > cap {
        return Err(OracleError::TooLarge { vertices, cap });
    }
    if capacity < 3 {
        return Err(OracleError::Infeasible { capacity });
    }
    let (m, n, k) = g.dims();
    let c_base = g.a_count() + g.b_count();
    let mut parents = vec![0u64; vertices];
    let mut c_parent = vec![None; vertices];
    for v in g.c_vertices() {
        let idx = g.index(v);
        parents[idx] = g.parents(v).iter().fold(0u64, |acc, &p| acc | 1u64 << g.index(p));
        c_parent[idx] = g.c_parent(v).map(|p| g.index(p));
    }
    let inputs = g.inputs().fold(0u64, |acc, v| acc | 1u64 << g.index(v));
    let outputs = g.outputs().fold(0u64, |acc, v| acc | 1u64 << g.index(v));
    let search = Search {
        m,
        n,
        k,
        c_base,
        capacity: capacity.min(vertices) as u32,
        parents,
        c_parent,
        inputs,
        outputs,
        prune: config.prune,
    };

    let start = search.normalise((0, 0));
    let mut dist: HashMap<State, u64> = HashMap::new();
    dist.insert(start, 0);
    let mut queue = VecDeque::from([start]);
    let (mut zero, mut one) = (Vec::new(), Vec::new());
    while let Some(state) = queue.pop_front() {
        let d = dist[&state];
        if state.1 & search.outputs == search.outputs {
            return Ok(d);
        }
        zero.clear();
        one.clear();
        search.successors(state, &mut zero, &mut one);
        for (next, cost, front) in zero
            .iter()
            .map(|&s| (s, 0, true))
            .chain(one.iter().map(|&s| (s, 1, false)))
        {
            let next = search.normalise(next);
            let nd = d + cost;
            let improved = match dist.entry(next) {
                Entry::Vacant(e) => {
                    e.insert(nd);
                    true
                }
                Entry::Occupied(mut e) => {
                    if nd < *e.get() {
                        e.insert(nd);
                        true
                    } else {
                        false
                    }
                }
            };
            if improved {
                if front {
                    queue.push_front(next);
                } else {
                    queue.push_back(next);
                }
            }
        }
    }
    unreachable!("a calculation with at least 3 red pebbles always exists")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opt(m: usize, n: usize, k: usize, s: usize) -> u64 {
        brute_force_optimal_io(&Cdag::new(m, n, k).unwrap(), s, &OracleConfig::default()).unwrap()
    }

    #[test]
    fn tiny_instances() {
        assert_eq!(opt(1, 1, 1, 3), 3);
        assert_eq!(opt(1, 1, 2, 3), 5);
        assert_eq!(opt(1, 1, 1, 100), 3);
    }

    #[test]
    fn two_cube_within_bounds() {
        let q = opt(2, 2, 2, 4);
        assert!((8..=16).contains(&q), "{q}");
        // every input read once and every output written once is a floor
        assert!(q >= 12);
    }

    #[test]
    fn unlimited_memory_reads_each_input_once() {
        for (m, n, k) in [(1, 2, 2), (2, 2, 1), (2, 1, 3), (2, 2, 2)] {
            let g = Cdag::new(m, n, k).unwrap();
            let all = g.vertex_count();
            assert_eq!(opt(m, n, k, all), (m * k + k * n + m * n) as u64);
        }
    }

    #[test]
    fn monotone_in_memory() {
        for (m, n, k) in [(1, 2, 2), (2, 2, 2), (2, 3, 1), (1, 3, 2)] {
            let mut last = u64::MAX;
            for s in 3..=10 {
                let q = opt(m, n, k, s);
                assert!(q <= last, "({m},{n},{k}) S={s}: {q} > {last}");
                last = q;
            }
        }
    }

    #[test]
    fn pruning_preserves_the_optimum() {
        let plain = OracleConfig {
            prune: false,
            ..OracleConfig::default()
        };
        for (m, n, k) in [(1, 1, 2), (1, 2, 2), (2, 2, 1), (2, 1, 2), (1, 1, 4), (2, 2, 2)] {
            let g = Cdag::new(m, n, k).unwrap();
            for s in 3..=5 {
                assert_eq!(
                    brute_force_optimal_io(&g, s, &OracleConfig::default()),
                    brute_force_optimal_io(&g, s, &plain),
                    "({m},{n},{k}) S={s}"
                );
            }
        }
    }

    #[test]
    fn rejects_large_and_infeasible() {
        let g = Cdag::new(3, 3, 3).unwrap();
        assert_eq!(
            brute_force_optimal_io(&g, 5, &OracleConfig::default()),
            Err(OracleError::TooLarge { vertices: 45, cap: 30 })
        );
        let g = Cdag::new(1, 1, 1).unwrap();
        assert_eq!(
            brute_force_optimal_io(&g, 2, &OracleConfig::default()),
            Err(OracleError::Infeasible { capacity: 2 })
        );
    }
}
