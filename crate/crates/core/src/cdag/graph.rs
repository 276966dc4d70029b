use std::collections::BTreeSet;
use std::fmt;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use super::CdagError;

/// Default upper bound on the number of vertices a [`Cdag`] may describe.
pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexKind {
    A,
    B,
    C,
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VertexKind::A => "A",
            VertexKind::B => "B",
            VertexKind::C => "C",
        };
        f.write_str(s)
    }
}

/// A vertex of the matrix-multiplication CDAG. Coordinates are 1-based.
///
/// * `A { row: i, col: r }` is the input element `A(i, r)`.
/// * `B { row: r, col: j }` is the input element `B(r, j)`.
/// * `C { row: i, col: j, step: r }` is the `r`-th partial sum of `C(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vertex {
    A { row: u32, col: u32 },
    B { row: u32, col: u32 },
    C { row: u32, col: u32, step: u32 },
}

impl Vertex {
    pub fn a(row: u32, col: u32) -> Self {
        Vertex::A { row, col }
    }

    pub fn b(row: u32, col: u32) -> Self {
        Vertex::B { row, col }
    }

    pub fn c(row: u32, col: u32, step: u32) -> Self {
        Vertex::C { row, col, step }
    }

    pub fn kind(&self) -> VertexKind {
        match self {
            Vertex::A { .. } => VertexKind::A,
            Vertex::B { .. } => VertexKind::B,
            Vertex::C { .. } => VertexKind::C,
        }
    }

    pub fn coords(&self) -> ArrayVec<u32, 3> {
        let mut out = ArrayVec::new();
        match *self {
            Vertex::A { row, col } | Vertex::B { row, col } => {
                out.push(row);
                out.push(col);
            }
            Vertex::C { row, col, step } => {
                out.push(row);
                out.push(col);
                out.push(step);
            }
        }
        out
    }

    pub fn is_c(&self) -> bool {
        matches!(self, Vertex::C { .. })
    }

    /// Projection of a C-vertex onto matrix A.
    pub fn phi_a(&self) -> Option<Vertex> {
        match *self {
            Vertex::C { row, step, .. } => Some(Vertex::a(row, step)),
            _ => None,
        }
    }

    /// Projection of a C-vertex onto matrix B.
    pub fn phi_b(&self) -> Option<Vertex> {
        match *self {
            Vertex::C { col, step, .. } => Some(Vertex::b(step, col)),
            _ => None,
        }
    }

    /// Projection of a C-vertex onto the output element it accumulates into.
    /// Not itself a vertex of the graph.
    pub fn phi_c(&self) -> Option<(u32, u32)> {
        match *self {
            Vertex::C { row, col, .. } => Some((row, col)),
            _ => None,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Vertex::A { row, col } => write!(f, "A({row},{col})"),
            Vertex::B { row, col } => write!(f, "B({row},{col})"),
            Vertex::C { row, col, step } => write!(f, "C({row},{col},{step})"),
        }
    }
}

/// The CDAG of classical `C = A * B` with `A: m x k`, `B: k x n`.
///
/// Edges are implicit. `C(i,j,r)` depends on `A(i,r)` and `B(r,j)`, and for
/// `r > 1` also on `C(i,j,r-1)`. The first partial sum has no C-parent: the
/// accumulator starts at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cdag {
    m: u32,
    n: u32,
    k: u32,
}

impl Cdag {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self, CdagError> {
        Self::with_cap(m, n, k, DEFAULT_VERTEX_CAP)
    }

    pub fn with_cap(m: usize, n: usize, k: usize, cap: usize) -> Result<Self, CdagError> {
        if m == 0 || n == 0 || k == 0 {
            return Err(CdagError::EmptyDimension { m, n, k });
        }
        let count = (m as u128) * (k as u128) + (k as u128) * (n as u128) + (m as u128) * (n as u128) * (k as u128);
        if count > cap as u128 {
            return Err(CdagError::TooLarge { vertices: count, cap });
        }
        Ok(Cdag {
            m: m as u32,
            n: n as u32,
            k: k as u32,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.m as usize, self.n as usize, self.k as usize)
    }

    pub fn a_count(&self) -> usize {
        (self.m * self.k) as usize
    }

    pub fn b_count(&self) -> usize {
        (self.k * self.n) as usize
    }

    pub fn c_count(&self) -> usize {
        self.m as usize * self.n as usize * self.k as usize
    }

    pub fn vertex_count(&self) -> usize {
        self.a_count() + self.b_count() + self.c_count()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        match v {
            Vertex::A { row, col } => (1..=self.m).contains(&row) && (1..=self.k).contains(&col),
            Vertex::B { row, col } => (1..=self.k).contains(&row) && (1..=self.n).contains(&col),
            Vertex::C { row, col, step } => {
                (1..=self.m).contains(&row) && (1..=self.n).contains(&col) && (1..=self.k).contains(&step)
            }
        }
    }

    /// Dense index in `0..vertex_count()`: all A, then all B, then all C.
    /// The vertex must belong to the graph.
    pub fn index(&self, v: Vertex) -> usize {
        debug_assert!(self.contains(v), "{v} not in {self:?}");
        let (m, n, k) = self.dims();
        match v {
            Vertex::A { row, col } => (row as usize - 1) * k + (col as usize - 1),
            Vertex::B { row, col } => m * k + (row as usize - 1) * n + (col as usize - 1),
            Vertex::C { row, col, step } => {
                m * k + k * n + ((row as usize - 1) * n + (col as usize - 1)) * k + (step as usize - 1)
            }
        }
    }

    pub fn vertex(&self, index: usize) -> Vertex {
        let (m, n, k) = self.dims();
        let (na, nb) = (m * k, k * n);
        if index < na {
            Vertex::a((index / k + 1) as u32, (index % k + 1) as u32)
        } else if index < na + nb {
            let i = index - na;
            Vertex::b((i / n + 1) as u32, (i % n + 1) as u32)
        } else {
            let i = index - na - nb;
            assert!(i < m * n * k, "vertex index {index} out of range");
            let step = i % k;
            let cell = i / k;
            Vertex::c((cell / n + 1) as u32, (cell % n + 1) as u32, (step + 1) as u32)
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.vertex_count()).map(move |i| self.vertex(i))
    }

    pub fn c_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        let start = self.a_count() + self.b_count();
        (start..self.vertex_count()).map(move |i| self.vertex(i))
    }

    pub fn is_input(&self, v: Vertex) -> bool {
        !v.is_c()
    }

    pub fn is_output(&self, v: Vertex) -> bool {
        matches!(v, Vertex::C { step, .. } if step == self.k)
    }

    pub fn inputs(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.a_count() + self.b_count()).map(move |i| self.vertex(i))
    }

    pub fn outputs(&self) -> impl Iterator<Item = Vertex> + '_ {
        let (m, n, k) = (self.m, self.n, self.k);
        (1..=m).flat_map(move |i| (1..=n).map(move |j| Vertex::c(i, j, k)))
    }

    /// The C-parent of a C-vertex, if any.
    pub fn c_parent(&self, v: Vertex) -> Option<Vertex> {
        match v {
            Vertex::C { row, col, step } if step > 1 => Some(Vertex::c(row, col, step - 1)),
            _ => None,
        }
    }

    pub fn parents(&self, v: Vertex) -> ArrayVec<Vertex, 3> {
        let mut out = ArrayVec::new();
        if let Vertex::C { row, col, step } = v {
            out.push(Vertex::a(row, step));
            out.push(Vertex::b(step, col));
            if step > 1 {
                out.push(Vertex::c(row, col, step - 1));
            }
        }
        out
    }

    pub fn children(&self, v: Vertex) -> Box<dyn Iterator<Item = Vertex> + '_> {
        match v {
            Vertex::A { row, col } => Box::new((1..=self.n).map(move |j| Vertex::c(row, j, col))),
            Vertex::B { row, col } => Box::new((1..=self.m).map(move |i| Vertex::c(i, col, row))),
            Vertex::C { row, col, step } => {
                if step < self.k {
                    Box::new(std::iter::once(Vertex::c(row, col, step + 1)))
                } else {
                    Box::new(std::iter::empty())
                }
            }
        }
    }

    /// Set of all vertices `alpha ∪ beta ∪ Gamma` feeding a set of C-vertices
    /// from outside it: A- and B-projections plus C-parents not in `vs`.
    pub fn dominator_set(&self, vs: &BTreeSet<Vertex>) -> BTreeSet<Vertex> {
        let mut dom = BTreeSet::new();
        for &v in vs {
            for p in self.parents(v) {
                if !vs.contains(&p) {
                    dom.insert(p);
                }
            }
        }
        dom
    }

    /// Vertices of `vs` with no child inside `vs`.
    pub fn minimum_set(&self, vs: &BTreeSet<Vertex>) -> BTreeSet<Vertex> {
        vs.iter()
            .copied()
            .filter(|&v| !self.children(v).any(|c| vs.contains(&c)))
            .collect()
    }
}

/// Projections `(phi_a(vs), phi_b(vs), phi_c(vs))` of a set of C-vertices.
pub fn projections(vs: &BTreeSet<Vertex>) -> (BTreeSet<Vertex>, BTreeSet<Vertex>, BTreeSet<(u32, u32)>) {
    let mut alpha = BTreeSet::new();
    let mut beta = BTreeSet::new();
    let mut gamma = BTreeSet::new();
    for v in vs {
        if let (Some(a), Some(b), Some(c)) = (v.phi_a(), v.phi_b(), v.phi_c()) {
            alpha.insert(a);
            beta.insert(b);
            gamma.insert(c);
        }
    }
    (alpha, beta, gamma)
}
