//! The three reconstruction games played on a parcelled painting.
//!
//! * **location**: fragments carry grid coordinates; every draw is placed with
//!   certainty.
//! * **borders**: fragments carry only colour-form and edge signatures; they
//!   are assembled by border continuity.
//! * **replicas**: the border game on `R` intermingled copies of the painting.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{Assembler, CompletedBoard, CompletionRule, Piece};
use crate::mrc::{apply_view, Description};
use crate::painting::{Dir, EdgeSig, Edges, Painting, ViewSelector, COLOUR_FORM_ASPECT, EDGE_ASPECTS};
use crate::seeding;

pub const DEFAULT_TRIAL_BUDGET: u64 = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PuzzleError {
    #[error("two fragments claim cell ({x}, {y})")]
    DuplicateCoordinates { x: u32, y: u32 },
    #[error("fragment {0:?} carries no grid coordinates")]
    MissingCoordinates(String),
    #[error("invalid pool: {0}")]
    InvalidPool(String),
    #[error("inconsistent signatures: {0}")]
    InconsistentSignatures(String),
    #[error("pool could not be assembled within {trials} trials")]
    UnsolvablePool { trials: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PuzzleMode {
    Location,
    Border,
}

impl PuzzleMode {
    pub fn selector(self) -> ViewSelector {
        match self {
            PuzzleMode::Location => ViewSelector::Location,
            PuzzleMode::Border => ViewSelector::ColourForm,
        }
    }
}

/// The ballot box: view-filtered fragments drawn without replacement in a
/// seeded order.
#[derive(Clone, Debug)]
pub struct FragmentPool {
    fragments: Vec<Description>,
    replica_count: u32,
    /// Remaining draw order; the next draw is the last element.
    order: Vec<usize>,
    drawn: usize,
}

impl FragmentPool {
    /// `replicas` copies of every tile of `p`, qualified by `mode`'s view.
    pub fn from_painting(p: &Painting, mode: PuzzleMode, replicas: u32, seed: u64) -> Result<Self, PuzzleError> {
        let view = p.view(mode.selector());
        let once = p
            .tiles()
            .iter()
            .map(|t| apply_view(&view, &t.source_description()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PuzzleError::InvalidPool(e.to_string()))?;
        let mut fragments = Vec::with_capacity(replicas as usize * once.len());
        for _ in 0..replicas {
            fragments.extend(once.iter().cloned());
        }
        Self::from_fragments(fragments, replicas, seed)
    }

    pub fn from_fragments(fragments: Vec<Description>, replicas: u32, seed: u64) -> Result<Self, PuzzleError> {
        if replicas == 0 {
            return Err(PuzzleError::InvalidPool("replica count must be at least 1".into()));
        }
        if fragments.is_empty() || !fragments.len().is_multiple_of(replicas as usize) {
            return Err(PuzzleError::InvalidPool(format!(
                "{} fragments cannot form {replicas} replicas",
                fragments.len()
            )));
        }
        let mut order: Vec<usize> = (0..fragments.len()).collect();
        order.shuffle(&mut seeding::rng(seeding::derive_named(seed, "draw-order")));
        order.reverse();
        Ok(FragmentPool { fragments, replica_count: replicas, order, drawn: 0 })
    }

    pub fn replica_count(&self) -> u32 {
        self.replica_count
    }

    pub fn remaining(&self) -> usize {
        self.order.len()
    }

    pub fn drawn(&self) -> usize {
        self.drawn
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Draw one fragment without replacement.
    pub fn draw(&mut self) -> Option<Description> {
        let i = self.order.pop()?;
        self.drawn += 1;
        Some(self.fragments[i].clone())
    }
}

impl Iterator for FragmentPool {
    type Item = Description;
    fn next(&mut self) -> Option<Description> {
        self.draw()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionEvent {
    pub replica_index: usize,
    /// 1-based index of the draw that closed the replica.
    pub draw_index: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Direct,
    Streaming,
    Backtracking,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyReport {
    pub mode: PuzzleMode,
    pub strategy: Strategy,
    pub replicas: u32,
    pub fragments_drawn: u64,
    pub fragments_remaining: u64,
    pub placements: u64,
    pub trials: u64,
    pub completed_replicas: u32,
    pub completion_order: Vec<CompletionEvent>,
    pub boards_seeded: u64,
    pub merges: u64,
    /// Draws for which the receiving board offered more than one cell.
    pub ambiguous_attachments: u64,
}

#[derive(Clone, Debug)]
pub struct Assembly {
    pub report: AssemblyReport,
    pub boards: Vec<CompletedBoard<Description>>,
}

/// Place every fragment at its coordinates.
pub fn solve_by_location(mut pool: FragmentPool) -> Result<Assembly, PuzzleError> {
    if pool.replica_count != 1 {
        return Err(PuzzleError::InvalidPool("the location game takes a single replica".into()));
    }
    let mut placed: BTreeMap<(u32, u32), Description> = BTreeMap::new();
    let mut last_draw = 0u64;
    while let Some(d) = pool.draw() {
        last_draw = pool.drawn() as u64;
        let (x, y) = match d.grid_coords.as_deref() {
            Some([x, y]) => (*x, *y),
            _ => return Err(PuzzleError::MissingCoordinates(d.entity_id.clone())),
        };
        if placed.insert((y, x), d).is_some() {
            return Err(PuzzleError::DuplicateCoordinates { x, y });
        }
    }
    // keyed (y, x) so iteration is row-major
    let width = placed.keys().map(|c| c.1).max().unwrap_or(0);
    let height = placed.keys().map(|c| c.0).max().unwrap_or(0);
    if placed.len() != (width * height) as usize {
        return Err(PuzzleError::InvalidPool("fragments do not cover a full rectangle".into()));
    }
    let n = placed.len() as u64;
    let cells = placed.into_values().map(Some).collect();
    Ok(Assembly {
        report: AssemblyReport {
            mode: PuzzleMode::Location,
            strategy: Strategy::Direct,
            replicas: 1,
            fragments_drawn: n,
            fragments_remaining: 0,
            placements: n,
            trials: n,
            completed_replicas: 1,
            completion_order: vec![CompletionEvent { replica_index: 0, draw_index: last_draw }],
            boards_seeded: 1,
            merges: 0,
            ambiguous_attachments: 0,
        },
        boards: vec![CompletedBoard { replica_index: 0, completed_at: last_draw - 1, width, height, cells }],
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct BorderFragment {
    desc: Description,
    edges: Edges,
}

impl Piece for BorderFragment {
    fn edges(&self) -> Edges {
        self.edges
    }
}

/// Edge signatures carried by a border-view description.
pub fn fragment_edges(d: &Description) -> Result<Edges, PuzzleError> {
    let mut sigs = [EdgeSig::Boundary; 4];
    for dir in Dir::ALL {
        let name = EDGE_ASPECTS[dir.index()];
        let tok = d
            .value(name)
            .ok_or_else(|| PuzzleError::InconsistentSignatures(format!("fragment {:?} lacks {name}", d.entity_id)))?;
        sigs[dir.index()] = EdgeSig::from_token(tok)
            .ok_or_else(|| PuzzleError::InconsistentSignatures(format!("unreadable signature {tok:?}")))?;
    }
    Ok(Edges(sigs))
}

/// Every signature must be offered by as many edges on one side as on the
/// opposite side, or some edge can never be matched.
fn check_balance(edges: &[Edges]) -> Result<(), PuzzleError> {
    let mut balance: HashMap<(u32, bool), i64> = HashMap::new();
    for e in edges {
        for (d, sign) in [(Dir::E, 1), (Dir::W, -1), (Dir::N, 1), (Dir::S, -1)] {
            if let EdgeSig::Sig(s) = e.get(d) {
                *balance.entry((s, matches!(d, Dir::E | Dir::W))).or_default() += sign;
            }
        }
    }
    match balance.iter().find(|(_, &v)| v != 0) {
        Some(((s, horizontal), _)) => Err(PuzzleError::InconsistentSignatures(format!(
            "signature {s} is unmatched on the {} axis",
            if *horizontal { "horizontal" } else { "vertical" }
        ))),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BorderOptions {
    /// Budget of attempted attachments for the backtracking solver.
    pub trial_budget: u64,
}

impl Default for BorderOptions {
    fn default() -> Self {
        BorderOptions { trial_budget: DEFAULT_TRIAL_BUDGET }
    }
}

/// Assemble all replicas of a border-view pool.
///
/// When every signature designates a unique pair of fragment kinds the draws
/// are assembled as they arrive. Otherwise the drawn fragments are placed by
/// depth-first backtracking, candidate kinds tried in first-draw order.
pub fn solve_by_borders(mut pool: FragmentPool, options: BorderOptions) -> Result<Assembly, PuzzleError> {
    let replicas = pool.replica_count;
    let mut drawn = Vec::with_capacity(pool.remaining());
    while let Some(d) = pool.draw() {
        let edges = fragment_edges(&d)?;
        drawn.push(BorderFragment { desc: d, edges });
    }
    check_balance(&drawn.iter().map(|f| f.edges).collect::<Vec<_>>())?;

    let kinds = Kinds::new(&drawn);
    if !kinds.ambiguous() {
        if let Some(a) = stream(&drawn, replicas) {
            return Ok(a);
        }
    }
    backtrack(&drawn, &kinds, replicas, options)
}

fn stream(drawn: &[BorderFragment], replicas: u32) -> Option<Assembly> {
    let mut asm = Assembler::new(CompletionRule::Closure);
    let mut ambiguous = 0;
    for f in drawn {
        if asm.push(f.clone()).candidate_cells > 1 {
            ambiguous += 1;
        }
    }
    if asm.completed().len() != replicas as usize || asm.nascent_count() != 0 {
        return None;
    }
    let stats = asm.stats().clone();
    let boards: Vec<CompletedBoard<Description>> = asm
        .into_completed()
        .into_iter()
        .map(|b| CompletedBoard {
            replica_index: b.replica_index,
            completed_at: b.completed_at,
            width: b.width,
            height: b.height,
            cells: b.cells.into_iter().map(|c| c.map(|f| f.desc)).collect(),
        })
        .collect();
    Some(Assembly {
        report: AssemblyReport {
            mode: PuzzleMode::Border,
            strategy: Strategy::Streaming,
            replicas,
            fragments_drawn: drawn.len() as u64,
            fragments_remaining: 0,
            placements: stats.placements,
            trials: stats.trials,
            completed_replicas: boards.len() as u32,
            completion_order: boards
                .iter()
                .map(|b| CompletionEvent { replica_index: b.replica_index, draw_index: b.completed_at + 1 })
                .collect(),
            boards_seeded: stats.boards_seeded,
            merges: stats.merges,
            ambiguous_attachments: ambiguous,
        },
        boards,
    })
}

/// Distinct fragment descriptions, in first-draw order, with the 1-based
/// draw indices of their copies.
struct Kinds {
    kinds: Vec<(BorderFragment, Vec<u64>)>,
    by_west_south: HashMap<(EdgeSig, EdgeSig), Vec<usize>>,
}

impl Kinds {
    fn new(drawn: &[BorderFragment]) -> Self {
        let mut pos: HashMap<&Description, usize> = HashMap::new();
        let mut kinds: Vec<(BorderFragment, Vec<u64>)> = Vec::new();
        for (i, f) in drawn.iter().enumerate() {
            let k = *pos.entry(&f.desc).or_insert_with(|| {
                kinds.push((f.clone(), Vec::new()));
                kinds.len() - 1
            });
            kinds[k].1.push(i as u64 + 1);
        }
        let mut by_west_south: HashMap<(EdgeSig, EdgeSig), Vec<usize>> = HashMap::new();
        for (k, (f, _)) in kinds.iter().enumerate() {
            by_west_south.entry((f.edges.get(Dir::W), f.edges.get(Dir::S))).or_default().push(k);
        }
        Kinds { kinds, by_west_south }
    }

    /// Some signature is carried on one side by more than one kind.
    fn ambiguous(&self) -> bool {
        let mut owners: HashMap<(u32, Dir), usize> = HashMap::new();
        for (f, _) in &self.kinds {
            for d in Dir::ALL {
                if let EdgeSig::Sig(s) = f.edges.get(d) {
                    *owners.entry((s, d)).or_default() += 1;
                }
            }
        }
        owners.values().any(|&n| n > 1)
    }
}

struct Search<'a> {
    kinds: &'a Kinds,
    remaining: Vec<usize>,
    boards: Vec<Vec<usize>>,
    widths: Vec<u32>,
    trials: u64,
    budget: u64,
    replicas: usize,
}

enum Step {
    Solved,
    Dead,
    OutOfBudget,
}

impl Search<'_> {
    fn edges(&self, k: usize) -> Edges {
        self.kinds.kinds[k].0.edges
    }

    /// Fill cell `(x, y)` of the current (last) board. `width` is known once
    /// the first row has closed; `last_row` once the row's first tile is placed.
    fn fill(&mut self, x: u32, y: u32, width: Option<u32>, last_row: Option<bool>) -> Step {
        let board = self.boards.len() - 1;
        let cells = &self.boards[board];
        let w_req = if x == 1 { EdgeSig::Boundary } else { self.edges(cells[cells.len() - 1]).get(Dir::E) };
        let s_req = if y == 1 {
            EdgeSig::Boundary
        } else {
            let w = width.expect("width known after first row");
            self.edges(cells[((y - 2) * w + (x - 1)) as usize]).get(Dir::N)
        };
        let Some(candidates) = self.kinds.by_west_south.get(&(w_req, s_req)) else {
            return Step::Dead;
        };
        for &k in candidates.clone().iter() {
            if self.remaining[k] == 0 {
                continue;
            }
            self.trials += 1;
            if self.trials > self.budget {
                return Step::OutOfBudget;
            }
            let e = self.edges(k);
            let east_open = !e.get(Dir::E).is_boundary();
            let north_open = !e.get(Dir::N).is_boundary();
            match width {
                Some(w) if (x < w) != east_open => continue,
                _ => {}
            }
            let is_last_row = match last_row {
                Some(l) if l == north_open => continue,
                Some(l) => l,
                None => !north_open,
            };
            let row_width = width.or(if east_open { None } else { Some(x) });

            self.remaining[k] -= 1;
            self.boards[board].push(k);
            let step = match row_width {
                Some(w) if x == w && is_last_row => self.close_board(w),
                Some(w) if x == w => self.fill(1, y + 1, Some(w), None),
                _ => self.fill(x + 1, y, row_width, Some(is_last_row)),
            };
            match step {
                Step::Dead => {
                    self.boards[board].pop();
                    self.remaining[k] += 1;
                }
                other => return other,
            }
        }
        Step::Dead
    }

    fn close_board(&mut self, width: u32) -> Step {
        self.widths.push(width);
        if self.boards.len() == self.replicas {
            return Step::Solved;
        }
        self.boards.push(Vec::new());
        match self.fill(1, 1, None, None) {
            Step::Dead => {
                self.boards.pop();
                self.widths.pop();
                Step::Dead
            }
            other => other,
        }
    }
}

fn backtrack(drawn: &[BorderFragment], kinds: &Kinds, replicas: u32, options: BorderOptions) -> Result<Assembly, PuzzleError> {
    let mut search = Search {
        kinds,
        remaining: kinds.kinds.iter().map(|(_, c)| c.len()).collect(),
        boards: vec![Vec::new()],
        widths: Vec::new(),
        trials: 0,
        budget: options.trial_budget,
        replicas: replicas as usize,
    };
    match search.fill(1, 1, None, None) {
        Step::Solved => {}
        _ => return Err(PuzzleError::UnsolvablePool { trials: search.trials }),
    }
    if search.remaining.iter().any(|&r| r != 0) {
        return Err(PuzzleError::InvalidPool("fragments left over after all replicas closed".into()));
    }

    // hand out copies in draw order to date each replica's completion
    let mut next_copy = vec![0usize; kinds.kinds.len()];
    let mut boards = Vec::with_capacity(replicas as usize);
    let mut order = Vec::with_capacity(replicas as usize);
    for (i, (cells, &width)) in search.boards.iter().zip(&search.widths).enumerate() {
        let mut last = 0;
        for &k in cells {
            last = last.max(kinds.kinds[k].1[next_copy[k]]);
            next_copy[k] += 1;
        }
        order.push(CompletionEvent { replica_index: i, draw_index: last });
        boards.push(CompletedBoard {
            replica_index: i,
            completed_at: last - 1,
            width,
            height: cells.len() as u32 / width,
            cells: cells.iter().map(|&k| Some(kinds.kinds[k].0.desc.clone())).collect(),
        });
    }
    order.sort_by_key(|c| c.draw_index);
    let placements = drawn.len() as u64;
    Ok(Assembly {
        report: AssemblyReport {
            mode: PuzzleMode::Border,
            strategy: Strategy::Backtracking,
            replicas,
            fragments_drawn: placements,
            fragments_remaining: 0,
            placements,
            trials: search.trials.max(placements),
            completed_replicas: replicas,
            completion_order: order,
            boards_seeded: replicas as u64,
            merges: 0,
            ambiguous_attachments: 0,
        },
        boards,
    })
}

/// Colour-form adjacency of a recovered board, as (form, east-or-north neighbour form, direction).
pub fn board_adjacency(board: &CompletedBoard<Description>) -> BTreeSet<(String, String, Dir)> {
    let form = |x, y| {
        board
            .get(x, y)
            .and_then(|d| d.value(COLOUR_FORM_ASPECT))
            .map(str::to_string)
    };
    let mut g = BTreeSet::new();
    for y in 1..=board.height {
        for x in 1..=board.width {
            let Some(here) = form(x, y) else { continue };
            if let Some(e) = form(x + 1, y) {
                g.insert((here.clone(), e, Dir::E));
            }
            if let Some(n) = form(x, y + 1) {
                g.insert((here.clone(), n, Dir::N));
            }
        }
    }
    g
}

/// Every pair of adjacent cells on `board` shares its edge signature.
pub fn board_edges_valid(board: &CompletedBoard<Description>) -> bool {
    for y in 1..=board.height {
        for x in 1..=board.width {
            let Some(here) = board.get(x, y).and_then(|d| fragment_edges(d).ok()) else {
                return false;
            };
            for (d, nx, ny) in [(Dir::E, x + 1, y), (Dir::N, x, y + 1)] {
                match board.get(nx, ny).and_then(|n| fragment_edges(n).ok()) {
                    Some(n) if !here.get(d).is_boundary() && n.get(d.opposite()) == here.get(d) => {}
                    None if here.get(d).is_boundary() => {}
                    _ => return false,
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::painting::{describe_tile, form_token, generate_painting, PaintingSpec, UniquenessMode};

    fn reference() -> Painting {
        generate_painting(&PaintingSpec::new(10, 10, &[60, 30, 10], 7)).unwrap()
    }

    fn source_adjacency(p: &Painting) -> BTreeSet<(String, String, Dir)> {
        p.adjacency_graph().into_iter().map(|(a, b, d)| (form_token(a), form_token(b), d)).collect()
    }

    #[test]
    fn location_game_is_certain() {
        let p = reference();
        let a = solve_by_location(FragmentPool::from_painting(&p, PuzzleMode::Location, 1, 3).unwrap()).unwrap();
        assert_eq!(a.report.placements, 100);
        assert_eq!(a.report.trials, 100);
        assert_eq!(a.boards[0].get(3, 4).unwrap().grid_coords, Some(vec![3, 4]));
    }

    #[test]
    fn location_single_tile() {
        let f = vec![Description::new("G", "e").with_point("location", "1,1").with_coords(vec![1, 1])];
        let a = solve_by_location(FragmentPool::from_fragments(f, 1, 0).unwrap()).unwrap();
        assert_eq!(a.report.placements, 1);
    }

    #[test]
    fn location_duplicate_cell() {
        let cell = |x: u32, y: u32| Description::new("G", "e").with_point("location", format!("{x},{y}")).with_coords(vec![x, y]);
        let f = vec![cell(1, 1), cell(2, 2), cell(2, 1), cell(2, 2)];
        let err = solve_by_location(FragmentPool::from_fragments(f, 1, 0).unwrap()).unwrap_err();
        assert_eq!(err, PuzzleError::DuplicateCoordinates { x: 2, y: 2 });
    }

    #[test]
    fn pool_draw_strictly_decreases() {
        let p = reference();
        let mut pool = FragmentPool::from_painting(&p, PuzzleMode::Border, 2, 1).unwrap();
        assert_eq!(pool.remaining(), 200);
        pool.draw();
        assert_eq!(pool.remaining(), 199);
        assert_eq!(pool.by_ref().count(), 199);
        assert!(pool.is_empty());
    }

    #[test]
    fn border_game_recovers_source_layout() {
        let p = reference();
        let a = solve_by_borders(FragmentPool::from_painting(&p, PuzzleMode::Border, 1, 5).unwrap(), BorderOptions::default()).unwrap();
        assert_eq!(a.report.strategy, Strategy::Streaming);
        assert_eq!(a.report.placements, 100);
        assert!(a.report.trials >= a.report.placements);
        assert_eq!(a.report.ambiguous_attachments, 0);
        assert_eq!(board_adjacency(&a.boards[0]), source_adjacency(&p));
        assert!(board_edges_valid(&a.boards[0]));
    }

    #[test]
    fn border_single_tile() {
        let p = generate_painting(&PaintingSpec::new(3, 1, &[2, 1], 0)).unwrap();
        let one: Vec<Description> = vec![describe_tile(&p, (1, 1), ViewSelector::ColourForm).unwrap()];
        // a lone tile whose east edge is unmatched is rejected up front
        assert!(matches!(
            solve_by_borders(FragmentPool::from_fragments(one, 1, 0).unwrap(), BorderOptions::default()),
            Err(PuzzleError::InconsistentSignatures(_))
        ));
        let lone = Description::new("G", "e")
            .with_point(COLOUR_FORM_ASPECT, "cf_1")
            .with_point("edge_n", "B")
            .with_point("edge_e", "B")
            .with_point("edge_s", "B")
            .with_point("edge_w", "B");
        let a = solve_by_borders(FragmentPool::from_fragments(vec![lone], 1, 0).unwrap(), BorderOptions::default()).unwrap();
        assert_eq!((a.report.placements, a.report.trials), (1, 1));
    }

    #[test]
    fn replicas_complete_together() {
        let p = reference();
        let a = solve_by_borders(FragmentPool::from_painting(&p, PuzzleMode::Border, 10, 9).unwrap(), BorderOptions::default()).unwrap();
        assert_eq!(a.report.placements, 1000);
        assert_eq!(a.report.completed_replicas, 10);
        assert_eq!(a.report.completion_order.len(), 10);
        assert_eq!(a.report.completion_order.last().unwrap().draw_index, 1000);
        for b in &a.boards {
            assert_eq!(board_adjacency(b), source_adjacency(&p));
        }
    }

    #[test]
    fn outcome_is_independent_of_draw_order() {
        let p = generate_painting(&PaintingSpec::new(7, 6, &[20, 22], 4)).unwrap();
        let expected = source_adjacency(&p);
        for seed in 0..10 {
            let a = solve_by_borders(FragmentPool::from_painting(&p, PuzzleMode::Border, 1, seed).unwrap(), BorderOptions::default()).unwrap();
            assert_eq!(board_adjacency(&a.boards[0]), expected);
        }
    }

    #[test]
    fn ambiguous_pool_is_solved_by_backtracking() {
        let spec = PaintingSpec::new(4, 4, &[8, 8], 5).with_mode(UniquenessMode::AmbiguousAllowed);
        let p = generate_painting(&spec).unwrap();
        for replicas in [1, 2] {
            let a = solve_by_borders(FragmentPool::from_painting(&p, PuzzleMode::Border, replicas, 2).unwrap(), BorderOptions::default()).unwrap();
            assert_eq!(a.report.strategy, Strategy::Backtracking);
            assert_eq!(a.report.completed_replicas, replicas);
            assert!(a.report.trials >= a.report.placements);
            for b in &a.boards {
                assert!(board_edges_valid(b));
                assert_eq!((b.width, b.height), (4, 4));
            }
        }
    }

    #[test]
    fn tiny_budget_is_unsolvable() {
        let spec = PaintingSpec::new(4, 4, &[8, 8], 5).with_mode(UniquenessMode::AmbiguousAllowed);
        let p = generate_painting(&spec).unwrap();
        let err = solve_by_borders(FragmentPool::from_painting(&p, PuzzleMode::Border, 1, 2).unwrap(), BorderOptions { trial_budget: 3 }).unwrap_err();
        assert!(matches!(err, PuzzleError::UnsolvablePool { .. }));
    }
}
