use serde::Serialize;

use crate::par::ProcessorGrid;

/// Binary broadcast tree over the positions `0..size` of one fiber.
///
/// Built by halving: the holder of the data sends to the nearest position in
/// the other half of its segment, then both halves recurse in parallel. A
/// message therefore never crosses more grid distance than the segment it
/// splits, and the depth is `ceil(log2 size)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BroadcastTree {
    pub size: usize,
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    /// `levels[d]` holds the `(from, to)` edges used in step `d + 1`.
    pub levels: Vec<Vec<(usize, usize)>>,
}

impl BroadcastTree {
    pub fn new(size: usize, root: usize) -> Self {
        assert!(root < size, "root {root} outside fiber of {size}");
        let mut tree = BroadcastTree {
            size,
            root,
            parent: vec![None; size],
            levels: Vec::new(),
        };
        tree.split(0, size, root, 0);
        tree
    }

    fn split(&mut self, lo: usize, hi: usize, root: usize, level: usize) {
        if hi - lo <= 1 {
            return;
        }
        let mid = lo + (hi - lo).div_ceil(2);
        let (own, other, target) = if root < mid {
            ((lo, mid), (mid, hi), mid)
        } else {
            ((mid, hi), (lo, mid), mid - 1)
        };
        if self.levels.len() <= level {
            self.levels.push(Vec::new());
        }
        self.levels[level].push((root, target));
        self.parent[target] = Some(root);
        self.split(own.0, own.1, root, level + 1);
        self.split(other.0, other.1, target, level + 1);
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn node_count(&self) -> usize {
        self.size
    }

    pub fn leaf_count(&self) -> usize {
        let mut has_child = vec![false; self.size];
        for p in self.parent.iter().flatten() {
            has_child[*p] = true;
        }
        has_child.iter().filter(|&&c| !c).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    I,
    J,
    K,
}

/// The ranks sharing all grid coordinates but one, with a tree rooted at
/// the first of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiberTree {
    pub ranks: Vec<usize>,
    pub tree: BroadcastTree,
}

/// Rank id of grid coordinates `(x, y, z)`.
pub fn rank_id(grid: &ProcessorGrid, x: usize, y: usize, z: usize) -> usize {
    (x * grid.pn + y) * grid.pk + z
}

pub fn build_broadcast_tree(grid: &ProcessorGrid, axis: Axis) -> Vec<FiberTree> {
    let mut out = Vec::new();
    let (pm, pn, pk) = (grid.pm, grid.pn, grid.pk);
    let size = match axis {
        Axis::I => pm,
        Axis::J => pn,
        Axis::K => pk,
    };
    let tree = BroadcastTree::new(size, 0);
    for x in 0..pm {
        for y in 0..pn {
            for z in 0..pk {
                let start = match axis {
                    Axis::I => x == 0,
                    Axis::J => y == 0,
                    Axis::K => z == 0,
                };
                if !start {
                    continue;
                }
                let ranks = (0..size)
                    .map(|t| match axis {
                        Axis::I => rank_id(grid, t, y, z),
                        Axis::J => rank_id(grid, x, t, z),
                        Axis::K => rank_id(grid, x, y, t),
                    })
                    .collect();
                out.push(FiberTree {
                    ranks,
                    tree: tree.clone(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reached(tree: &BroadcastTree) -> Vec<bool> {
        let mut have = vec![false; tree.size];
        have[tree.root] = true;
        for level in &tree.levels {
            for &(from, to) in level {
                assert!(have[from], "{from} forwards before receiving");
                assert!(!have[to], "{to} receives twice");
                have[to] = true;
            }
        }
        have
    }

    #[test]
    fn depths() {
        assert_eq!(BroadcastTree::new(1, 0).depth(), 0);
        assert_eq!(BroadcastTree::new(2, 0).depth(), 1);
        assert_eq!(BroadcastTree::new(4, 0).depth(), 2);
        let five = BroadcastTree::new(5, 0);
        assert_eq!((five.depth(), five.node_count()), (3, 5));
        for size in 1..40 {
            for root in [0, size / 2, size - 1] {
                let t = BroadcastTree::new(size, root);
                assert_eq!(t.depth(), (size as f64).log2().ceil() as usize, "size {size}");
                assert!(reached(&t).into_iter().all(|h| h));
                assert_eq!(t.parent.iter().filter(|p| p.is_none()).count(), 1);
            }
        }
    }

    #[test]
    fn nearest_pairing() {
        let t = BroadcastTree::new(4, 0);
        assert_eq!(t.levels, vec![vec![(0, 2)], vec![(0, 1), (2, 3)]]);
        let t = BroadcastTree::new(4, 3);
        assert_eq!(t.levels[0], vec![(3, 1)]);
    }

    #[test]
    fn fibers_partition_the_grid() {
        let grid = ProcessorGrid::new(2, 3, 4, 24);
        for (axis, size, count) in [(Axis::I, 2, 12), (Axis::J, 3, 8), (Axis::K, 4, 6)] {
            let fibers = build_broadcast_tree(&grid, axis);
            assert_eq!(fibers.len(), count);
            let mut seen: Vec<usize> = fibers.iter().flat_map(|f| f.ranks.clone()).collect();
            assert!(fibers.iter().all(|f| f.ranks.len() == size));
            seen.sort_unstable();
            assert_eq!(seen, (0..24).collect::<Vec<_>>());
        }
    }
}
