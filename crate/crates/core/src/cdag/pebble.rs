use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Cdag, Vertex, VertexKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Red,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveOp {
    /// Blue to red: one read from slow memory.
    Load,
    /// Red to blue: one write to slow memory.
    Store,
    /// Red pebble on a vertex whose parents are all red.
    Compute,
    Delete(Color),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub op: MoveOp,
    pub target: Vertex,
}

impl Move {
    pub fn load(target: Vertex) -> Self {
        Move {
            op: MoveOp::Load,
            target,
        }
    }

    pub fn store(target: Vertex) -> Self {
        Move {
            op: MoveOp::Store,
            target,
        }
    }

    pub fn compute(target: Vertex) -> Self {
        Move {
            op: MoveOp::Compute,
            target,
        }
    }

    pub fn delete(target: Vertex) -> Self {
        Move {
            op: MoveOp::Delete(Color::Red),
            target,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            MoveOp::Load => "L",
            MoveOp::Store => "S",
            MoveOp::Compute => "C",
            MoveOp::Delete(_) => "D",
        };
        write!(f, "{op} {}", self.target.kind())?;
        for c in self.target.coords() {
            write!(f, " {c}")?;
        }
        if self.op == MoveOp::Delete(Color::Blue) {
            f.write_str(" blue")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoTally {
    pub loads: u64,
    pub stores: u64,
}

impl IoTally {
    pub fn total(&self) -> u64 {
        self.loads + self.stores
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rule {
    #[error("vertex is outside the graph")]
    UnknownVertex,
    #[error("load needs a blue pebble on the target")]
    LoadWithoutBlue,
    #[error("store needs a red pebble on the target")]
    StoreWithoutRed,
    #[error("inputs cannot be computed")]
    ComputeInput,
    #[error("compute needs a red pebble on parent {0}")]
    ComputeMissingParent(Vertex),
    #[error("{needed} red pebbles needed, capacity is {capacity}")]
    Capacity { needed: usize, capacity: usize },
    #[error("no {0:?} pebble to delete")]
    DeleteMissing(Color),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PebbleError {
    #[error("move {index} ({mv}) is illegal: {rule}")]
    Illegal { index: usize, mv: Move, rule: Rule },
    #[error("calculation incomplete: output {missing} never received a blue pebble")]
    Incomplete { missing: Vertex },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ref {
    /// The red pebble must be present (a parent, a store or an explicit delete).
    Read,
    /// The pebble is (re)placed, so it may be gone beforehand.
    Place,
}

/// Replays `moves` on `g` with at most `capacity` red pebbles and returns the
/// number of loads and stores if they form a complete calculation.
///
/// When a red pebble is needed and all `capacity` are in use, a pebble whose
/// vertex is not read, stored or deleted again before being re-placed is
/// dropped. If no such
/// pebble exists the move is rejected with [`Rule::Capacity`].
pub fn validate_pebbling(g: &Cdag, capacity: usize, moves: &[Move]) -> Result<IoTally, PebbleError> {
    let nv = g.vertex_count();
    for (index, mv) in moves.iter().enumerate() {
        if !g.contains(mv.target) {
            return Err(PebbleError::Illegal {
                index,
                mv: *mv,
                rule: Rule::UnknownVertex,
            });
        }
    }

    // Future references per vertex, consumed front to back.
    let mut refs: Vec<Vec<(usize, Ref)>> = vec![Vec::new(); nv];
    for (index, mv) in moves.iter().enumerate() {
        let t = g.index(mv.target);
        match mv.op {
            MoveOp::Load => refs[t].push((index, Ref::Place)),
            MoveOp::Store | MoveOp::Delete(Color::Red) => refs[t].push((index, Ref::Read)),
            MoveOp::Compute => {
                for p in g.parents(mv.target) {
                    refs[g.index(p)].push((index, Ref::Read));
                }
                refs[t].push((index, Ref::Place));
            }
            MoveOp::Delete(Color::Blue) => {}
        }
    }
    let mut cursor = vec![0usize; nv];

    let mut red: BTreeSet<usize> = BTreeSet::new();
    let mut blue = vec![false; nv];
    for v in g.inputs() {
        blue[g.index(v)] = true;
    }
    let mut tally = IoTally::default();

    for (index, mv) in moves.iter().enumerate() {
        let t = g.index(mv.target);
        let illegal = |rule| PebbleError::Illegal { index, mv: *mv, rule };
        // Advance cursors past the current move so "next reference" means strictly later.
        let advance = |cursor: &mut Vec<usize>, refs: &Vec<Vec<(usize, Ref)>>, v: usize| {
            while cursor[v] < refs[v].len() && refs[v][cursor[v]].0 <= index {
                cursor[v] += 1;
            }
        };

        match mv.op {
            MoveOp::Load => {
                if !blue[t] {
                    return Err(illegal(Rule::LoadWithoutBlue));
                }
                tally.loads += 1;
                if !red.contains(&t) {
                    make_room(&mut red, capacity, &[], index, &refs, &mut cursor).map_err(illegal)?;
                    red.insert(t);
                }
            }
            MoveOp::Store => {
                if !red.contains(&t) {
                    return Err(illegal(Rule::StoreWithoutRed));
                }
                tally.stores += 1;
                blue[t] = true;
            }
            MoveOp::Compute => {
                if g.is_input(mv.target) {
                    return Err(illegal(Rule::ComputeInput));
                }
                let parents = g.parents(mv.target);
                let mut held = arrayvec::ArrayVec::<usize, 3>::new();
                for p in &parents {
                    let pi = g.index(*p);
                    if !red.contains(&pi) {
                        return Err(illegal(Rule::ComputeMissingParent(*p)));
                    }
                    held.push(pi);
                }
                if let Some(acc) = g.c_parent(mv.target) {
                    // in-place accumulation
                    red.remove(&g.index(acc));
                    red.insert(t);
                } else if !red.contains(&t) {
                    make_room(&mut red, capacity, &held, index, &refs, &mut cursor).map_err(illegal)?;
                    red.insert(t);
                }
            }
            MoveOp::Delete(Color::Red) => {
                if !red.remove(&t) {
                    return Err(illegal(Rule::DeleteMissing(Color::Red)));
                }
            }
            MoveOp::Delete(Color::Blue) => {
                if !blue[t] {
                    return Err(illegal(Rule::DeleteMissing(Color::Blue)));
                }
                blue[t] = false;
            }
        }
        advance(&mut cursor, &refs, t);
        for p in g.parents(mv.target) {
            advance(&mut cursor, &refs, g.index(p));
        }
    }

    if let Some(missing) = g.outputs().find(|&o| !blue[g.index(o)]) {
        return Err(PebbleError::Incomplete { missing });
    }
    Ok(tally)
}

fn make_room(
    red: &mut BTreeSet<usize>,
    capacity: usize,
    pinned: &[usize],
    now: usize,
    refs: &[Vec<(usize, Ref)>],
    cursor: &mut [usize],
) -> Result<(), Rule> {
    if red.len() < capacity {
        return Ok(());
    }
    let victim = red.iter().copied().find(|&v| {
        if pinned.contains(&v) {
            return false;
        }
        let mut c = cursor[v];
        while c < refs[v].len() && refs[v][c].0 <= now {
            c += 1;
        }
        cursor[v] = c;
        refs[v].get(c).is_none_or(|&(_, r)| r == Ref::Place)
    });
    match victim {
        Some(v) => {
            red.remove(&v);
            Ok(())
        }
        None => Err(Rule::Capacity {
            needed: red.len() + 1,
            capacity,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Parses the line-oriented move format: `<op> <kind> <coords...> [blue]`
/// with `op` one of `L S C D`, `kind` one of `A B C`, two coordinates for A/B
/// and three for C. Blank lines and `#` comments are skipped. A trailing
/// `blue` on a `D` line deletes the blue pebble instead of the red one.
pub fn parse_moves(text: &str) -> Result<Vec<Move>, ParseError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ParseError {
            line: lineno + 1,
            message,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let op = match tokens[0] {
            "L" => MoveOp::Load,
            "S" => MoveOp::Store,
            "C" => MoveOp::Compute,
            "D" => MoveOp::Delete(Color::Red),
            other => return Err(err(format!("unknown move `{other}`"))),
        };
        let kind = match tokens.get(1).copied() {
            Some("A") => VertexKind::A,
            Some("B") => VertexKind::B,
            Some("C") => VertexKind::C,
            other => return Err(err(format!("bad vertex kind {other:?}"))),
        };
        let arity = if kind == VertexKind::C { 3 } else { 2 };
        let mut rest = &tokens[2..];
        let mut op = op;
        if rest.last() == Some(&"blue") {
            if op != MoveOp::Delete(Color::Red) {
                return Err(err("`blue` qualifier only applies to D".into()));
            }
            op = MoveOp::Delete(Color::Blue);
            rest = &rest[..rest.len() - 1];
        }
        if rest.len() != arity {
            return Err(err(format!("{kind} needs {arity} coordinates, got {}", rest.len())));
        }
        let mut coords = [0u32; 3];
        for (slot, tok) in coords.iter_mut().zip(rest) {
            *slot = tok.parse().map_err(|_| err(format!("bad coordinate `{tok}`")))?;
            if *slot == 0 {
                return Err(err("coordinates are 1-based".into()));
            }
        }
        let target = match kind {
            VertexKind::A => Vertex::a(coords[0], coords[1]),
            VertexKind::B => Vertex::b(coords[0], coords[1]),
            VertexKind::C => Vertex::c(coords[0], coords[1], coords[2]),
        };
        out.push(Move { op, target });
    }
    Ok(out)
}

pub fn format_moves(moves: &[Move]) -> String {
    let mut s = String::new();
    for mv in moves {
        s.push_str(&mv.to_string());
        s.push('\n');
    }
    s
}
