//! Streaming border-matching assembler shared by the border puzzle and the
//! semantic-integration engine.
//!
//! Pieces arrive one at a time. A piece attaches to an open slot whose facing
//! signature matches one of its edges, preferring the oldest board; if no
//! slot accepts it, it seeds a new nascent board. A piece that also fits an
//! open slot on a younger board bridges the two, which are merged after
//! translation alignment when the union is consistent. A board with no open
//! slot left is complete.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::painting::{Dir, EdgeSig, Edges};

pub type Cell = (i32, i32);

pub trait Piece: Clone {
    fn edges(&self) -> Edges;
}

impl Piece for crate::painting::Tile {
    fn edges(&self) -> Edges {
        self.edges
    }
}

/// When a board counts as complete.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum CompletionRule {
    /// Every cell of the bounding rectangle occupied and every open edge BOUNDARY.
    #[default]
    Closure,
    /// Closure, or a board that has not grown for `patience` consecutive pushes.
    Stability { patience: u64 },
}

fn step(c: Cell, d: Dir) -> Cell {
    let (dx, dy) = d.offset();
    (c.0 + dx, c.1 + dy)
}

fn coordinate(c: Cell, d: Dir) -> i32 {
    match d {
        Dir::N | Dir::S => c.1,
        Dir::E | Dir::W => c.0,
    }
}

/// `a` lies beyond `b` when moving in direction `d`.
fn beyond(d: Dir, a: i32, b: i32) -> bool {
    match d {
        Dir::N | Dir::E => a > b,
        Dir::S | Dir::W => a < b,
    }
}

#[derive(Clone, Debug)]
struct Board<P> {
    cells: HashMap<Cell, P>,
    /// Empty cells adjacent to at least one non-boundary edge.
    open: BTreeSet<Cell>,
    /// Known extremal row/column fixed by BOUNDARY edges, indexed by `Dir`.
    bounds: [Option<i32>; 4],
    last_growth: u64,
}

impl<P: Piece> Board<P> {
    fn new(at: u64) -> Self {
        Board { cells: HashMap::new(), open: BTreeSet::new(), bounds: [None; 4], last_growth: at }
    }

    /// Whether `piece` may occupy empty cell `c`.
    fn accepts(&self, c: Cell, piece: &P) -> bool {
        if self.cells.contains_key(&c) {
            return false;
        }
        let edges = piece.edges();
        for d in Dir::ALL {
            let mine = edges.get(d);
            if let Some(n) = self.cells.get(&step(c, d)) {
                if mine.is_boundary() || n.edges().get(d.opposite()) != mine {
                    return false;
                }
            }
            let here = coordinate(c, d);
            match (self.bounds[d.index()], mine) {
                (Some(b), _) if beyond(d, here, b) => return false,
                (Some(b), EdgeSig::Boundary) if b != here => return false,
                (Some(b), EdgeSig::Sig(_)) if b == here => return false,
                (None, EdgeSig::Boundary) => {
                    if self.cells.keys().any(|&k| beyond(d, coordinate(k, d), here)) {
                        return false;
                    }
                    // tiles on this line must not expect a neighbour beyond it
                    if self.cells.iter().any(|(&k, p)| coordinate(k, d) == here && !p.edges().get(d).is_boundary()) {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }

    fn extents(&self) -> (Cell, Cell) {
        let min_x = self.cells.keys().map(|c| c.0).min().unwrap_or(0);
        let min_y = self.cells.keys().map(|c| c.1).min().unwrap_or(0);
        let max_x = self.cells.keys().map(|c| c.0).max().unwrap_or(0);
        let max_y = self.cells.keys().map(|c| c.1).max().unwrap_or(0);
        ((min_x, min_y), (max_x, max_y))
    }
}

/// Full consistency scan of a layout; used to validate merges.
fn layout_consistent(cells: &HashMap<Cell, Edges>) -> bool {
    let mut bounds: [Option<i32>; 4] = [None; 4];
    for (&c, edges) in cells {
        for d in Dir::ALL {
            if edges.get(d).is_boundary() {
                let v = coordinate(c, d);
                match bounds[d.index()] {
                    Some(b) if b != v => return false,
                    _ => bounds[d.index()] = Some(v),
                }
            }
        }
    }
    for (&c, edges) in cells {
        for d in Dir::ALL {
            let mine = edges.get(d);
            if let Some(n) = cells.get(&step(c, d)) {
                if mine.is_boundary() || n.get(d.opposite()) != mine {
                    return false;
                }
            }
            if let Some(b) = bounds[d.index()] {
                let here = coordinate(c, d);
                if beyond(d, here, b) || (!mine.is_boundary() && here == b) {
                    return false;
                }
            }
        }
    }
    true
}

/// A finished board translated so that its minimum cell is `(1, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompletedBoard<P> {
    /// Position in completion order.
    pub replica_index: usize,
    /// Push index (0-based) of the piece that closed the board.
    pub completed_at: u64,
    pub width: u32,
    pub height: u32,
    /// Row-major from `(1, 1)`; `None` only under the stability rule.
    pub cells: Vec<Option<P>>,
}

impl<P> CompletedBoard<P> {
    pub fn get(&self, x: u32, y: u32) -> Option<&P> {
        if x == 0 || y == 0 || x > self.width || y > self.height {
            return None;
        }
        self.cells[((y - 1) * self.width + (x - 1)) as usize].as_ref()
    }

    pub fn pieces(&self) -> impl Iterator<Item = &P> {
        self.cells.iter().flatten()
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PushOutcome {
    pub board: usize,
    pub seeded: bool,
    pub merged: Vec<usize>,
    pub completed: Vec<usize>,
    /// Distinct cells of the receiving board that would have accepted the piece.
    pub candidate_cells: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AssemblyStats {
    pub pushes: u64,
    pub placements: u64,
    pub trials: u64,
    pub boards_seeded: u64,
    pub merges: u64,
    /// Pushes for which the receiving board offered more than one cell.
    pub ambiguous_pushes: u64,
}

#[derive(Clone, Debug)]
pub struct Assembler<P> {
    boards: Vec<Option<Board<P>>>,
    /// `(signature, direction from slot to its placed neighbour)` → slots.
    index: HashMap<(u32, Dir), BTreeSet<(usize, Cell)>>,
    completed: Vec<CompletedBoard<P>>,
    rule: CompletionRule,
    stats: AssemblyStats,
}

impl<P: Piece> Default for Assembler<P> {
    fn default() -> Self {
        Self::new(CompletionRule::Closure)
    }
}

impl<P: Piece> Assembler<P> {
    pub fn new(rule: CompletionRule) -> Self {
        Assembler { boards: Vec::new(), index: HashMap::new(), completed: Vec::new(), rule, stats: AssemblyStats::default() }
    }

    pub fn stats(&self) -> &AssemblyStats {
        &self.stats
    }

    pub fn completed(&self) -> &[CompletedBoard<P>] {
        &self.completed
    }

    pub fn into_completed(self) -> Vec<CompletedBoard<P>> {
        self.completed
    }

    /// Boards still under construction.
    pub fn nascent_count(&self) -> usize {
        self.boards.iter().flatten().count()
    }

    /// Pieces currently sitting on nascent boards.
    pub fn nascent_pieces(&self) -> usize {
        self.boards.iter().flatten().map(|b| b.cells.len()).sum()
    }

    fn candidates(&self, piece: &P) -> BTreeSet<(usize, Cell)> {
        let edges = piece.edges();
        let mut out = BTreeSet::new();
        for d in Dir::ALL {
            if let EdgeSig::Sig(s) = edges.get(d) {
                if let Some(slots) = self.index.get(&(s, d)) {
                    out.extend(slots.iter().copied());
                }
            }
        }
        out
    }

    pub fn push(&mut self, piece: P) -> PushOutcome {
        let now = self.stats.pushes;
        self.stats.pushes += 1;

        let mut fitting: Vec<(usize, Cell)> = Vec::new();
        let mut chosen_found = false;
        for (b, c) in self.candidates(&piece) {
            let board = self.boards[b].as_ref().expect("indexed board is live");
            let ok = board.accepts(c, &piece);
            if !chosen_found {
                self.stats.trials += 1;
            }
            if ok {
                chosen_found = true;
                fitting.push((b, c));
            }
        }

        let mut outcome = PushOutcome::default();
        let (b, c) = match fitting.first() {
            Some(&(b, c)) => {
                outcome.candidate_cells = fitting.iter().filter(|(fb, _)| *fb == b).count();
                (b, c)
            }
            None => {
                self.stats.trials += 1;
                self.stats.boards_seeded += 1;
                self.boards.push(Some(Board::new(now)));
                outcome.seeded = true;
                outcome.candidate_cells = 1;
                (self.boards.len() - 1, (0, 0))
            }
        };
        if outcome.candidate_cells > 1 {
            self.stats.ambiguous_pushes += 1;
        }
        outcome.board = b;
        self.place(b, c, piece, now);
        self.stats.placements += 1;

        // bridge to younger boards that also had a slot for this piece
        for &(other, oc) in fitting.iter().filter(|(ob, _)| *ob != b) {
            if self.boards[other].is_none() || self.boards[b].is_none() {
                continue;
            }
            let offset = (c.0 - oc.0, c.1 - oc.1);
            if self.try_merge(b, other, offset, now) {
                outcome.merged.push(other);
            }
        }

        if self.boards[b].as_ref().is_some_and(|bd| bd.open.is_empty()) {
            outcome.completed.push(self.complete(b, now));
        }
        if let CompletionRule::Stability { patience } = self.rule {
            let stale: Vec<usize> = self
                .boards
                .iter()
                .enumerate()
                .filter_map(|(i, bd)| bd.as_ref().filter(|bd| now - bd.last_growth >= patience).map(|_| i))
                .collect();
            for i in stale {
                outcome.completed.push(self.complete(i, now));
            }
        }
        outcome
    }

    fn slot_keys(board: &Board<P>, c: Cell) -> Vec<(u32, Dir)> {
        Dir::ALL
            .iter()
            .filter_map(|&d| {
                let n = board.cells.get(&step(c, d))?;
                n.edges().get(d.opposite()).sig().map(|s| (s, d))
            })
            .collect()
    }

    fn place(&mut self, b: usize, c: Cell, piece: P, now: u64) {
        let board = self.boards[b].as_mut().expect("live board");
        if board.open.remove(&c) {
            for key in Self::slot_keys(board, c) {
                if let Some(set) = self.index.get_mut(&key) {
                    set.remove(&(b, c));
                }
            }
        }
        let edges = piece.edges();
        board.cells.insert(c, piece);
        board.last_growth = now;
        for d in Dir::ALL {
            match edges.get(d) {
                EdgeSig::Boundary => board.bounds[d.index()] = Some(coordinate(c, d)),
                EdgeSig::Sig(s) => {
                    let n = step(c, d);
                    if !board.cells.contains_key(&n) {
                        board.open.insert(n);
                        self.index.entry((s, d.opposite())).or_default().insert((b, n));
                    }
                }
            }
        }
    }

    fn unindex(&mut self, b: usize) {
        let board = self.boards[b].as_ref().expect("live board");
        for &c in &board.open {
            for key in Self::slot_keys(board, c) {
                if let Some(set) = self.index.get_mut(&key) {
                    set.remove(&(b, c));
                }
            }
        }
    }

    fn reindex(&mut self, b: usize) {
        let board = self.boards[b].as_mut().expect("live board");
        board.open.clear();
        let mut entries = Vec::new();
        for (&c, p) in &board.cells {
            for d in Dir::ALL {
                if let EdgeSig::Sig(s) = p.edges().get(d) {
                    let n = step(c, d);
                    if !board.cells.contains_key(&n) {
                        entries.push(((s, d.opposite()), n));
                    }
                }
            }
        }
        for (key, n) in entries {
            board.open.insert(n);
            self.index.entry(key).or_default().insert((b, n));
        }
    }

    fn try_merge(&mut self, keep: usize, other: usize, offset: Cell, now: u64) -> bool {
        let shift = |c: Cell| (c.0 + offset.0, c.1 + offset.1);
        let (a, o) = (self.boards[keep].as_ref().unwrap(), self.boards[other].as_ref().unwrap());
        if o.cells.keys().any(|&c| a.cells.contains_key(&shift(c))) {
            return false;
        }
        let mut layout: HashMap<Cell, Edges> = a.cells.iter().map(|(&c, p)| (c, p.edges())).collect();
        layout.extend(o.cells.iter().map(|(&c, p)| (shift(c), p.edges())));
        if !layout_consistent(&layout) {
            return false;
        }
        let mut bounds = a.bounds;
        for d in Dir::ALL {
            let by = match d {
                Dir::N | Dir::S => offset.1,
                Dir::E | Dir::W => offset.0,
            };
            bounds[d.index()] = a.bounds[d.index()].or(o.bounds[d.index()].map(|v| v + by));
        }
        self.unindex(keep);
        self.unindex(other);
        let o = self.boards[other].take().expect("live board");
        let merged = self.boards[keep].as_mut().expect("live board");
        merged.cells.extend(o.cells.into_iter().map(|(c, p)| (shift(c), p)));
        merged.bounds = bounds;
        merged.last_growth = now;
        self.reindex(keep);
        self.stats.merges += 1;
        true
    }

    fn complete(&mut self, b: usize, now: u64) -> usize {
        self.unindex(b);
        let board = self.boards[b].take().expect("live board");
        let ((min_x, min_y), (max_x, max_y)) = board.extents();
        let width = (max_x - min_x + 1) as u32;
        let height = (max_y - min_y + 1) as u32;
        let mut cells = vec![None; (width * height) as usize];
        for (c, p) in board.cells {
            let i = ((c.1 - min_y) as u32 * width + (c.0 - min_x) as u32) as usize;
            cells[i] = Some(p);
        }
        let replica_index = self.completed.len();
        self.completed.push(CompletedBoard { replica_index, completed_at: now, width, height, cells });
        replica_index
    }
}

/// Pieces of a completed board keyed by canonical cell, for comparisons.
pub fn board_layout<P: Clone>(board: &CompletedBoard<P>) -> BTreeMap<(u32, u32), P> {
    let mut out = BTreeMap::new();
    for y in 1..=board.height {
        for x in 1..=board.width {
            if let Some(p) = board.get(x, y) {
                out.insert((x, y), p.clone());
            }
        }
    }
    out
}
