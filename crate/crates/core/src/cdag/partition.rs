use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use super::{Cdag, Vertex};

/// An ordered cover of the C-vertices by disjoint subcomputations, each with
/// dominator and minimum sets of at most `bound` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XPartition {
    pub subsets: Vec<BTreeSet<Vertex>>,
    pub bound: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionViolation {
    #[error("subset {subset} contains {vertex}, which is not a C-vertex of the graph")]
    Foreign { subset: usize, vertex: Vertex },
    #[error("{vertex} appears in subsets {first} and {second}")]
    Overlap {
        first: usize,
        second: usize,
        vertex: Vertex,
    },
    #[error("{vertex} is not covered by any subset")]
    Uncovered { vertex: Vertex },
    #[error("subsets depend on each other cyclically")]
    Cyclic,
    #[error("subset {subset} has a dominator set of {size} vertices, above X={bound}")]
    Dominator { subset: usize, size: usize, bound: usize },
    #[error("subset {subset} has a minimum set of {size} vertices, above X={bound}")]
    Minimum { subset: usize, size: usize, bound: usize },
}

impl XPartition {
    pub fn new(subsets: Vec<BTreeSet<Vertex>>, bound: usize) -> Self {
        XPartition { subsets, bound }
    }

    /// Checks disjointness, coverage, acyclicity and the size bounds, in that
    /// order, and reports the first violation.
    pub fn validate(&self, g: &Cdag) -> Result<(), PartitionViolation> {
        let mut owner: BTreeMap<Vertex, usize> = BTreeMap::new();
        for (i, subset) in self.subsets.iter().enumerate() {
            for &v in subset {
                if !v.is_c() || !g.contains(v) {
                    return Err(PartitionViolation::Foreign { subset: i, vertex: v });
                }
                if let Some(&first) = owner.get(&v) {
                    return Err(PartitionViolation::Overlap {
                        first,
                        second: i,
                        vertex: v,
                    });
                }
                owner.insert(v, i);
            }
        }
        if let Some(vertex) = g.c_vertices().find(|v| !owner.contains_key(v)) {
            return Err(PartitionViolation::Uncovered { vertex });
        }

        // Kahn over the quotient graph.
        let h = self.subsets.len();
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); h];
        for (i, subset) in self.subsets.iter().enumerate() {
            for &v in subset {
                if let Some(p) = g.c_parent(v) {
                    let j = owner[&p];
                    if j != i {
                        succ[j].insert(i);
                    }
                }
            }
        }
        let mut indegree = vec![0usize; h];
        for edges in &succ {
            for &t in edges {
                indegree[t] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..h).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = queue.pop_front() {
            seen += 1;
            for &t in &succ[i] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    queue.push_back(t);
                }
            }
        }
        if seen != h {
            return Err(PartitionViolation::Cyclic);
        }

        for (i, subset) in self.subsets.iter().enumerate() {
            let dom = g.dominator_set(subset).len();
            if dom > self.bound {
                return Err(PartitionViolation::Dominator {
                    subset: i,
                    size: dom,
                    bound: self.bound,
                });
            }
            let min = g.minimum_set(subset).len();
            if min > self.bound {
                return Err(PartitionViolation::Minimum {
                    subset: i,
                    size: min,
                    bound: self.bound,
                });
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, g: &Cdag) -> bool {
        self.validate(g).is_ok()
    }
}
