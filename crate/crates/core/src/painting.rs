//! The parcelled painting: a `width × height` grid of tiles, each carrying a
//! colour-form id, an approximate-colour label and four edge signatures.
//!
//! Coordinates are 1-based with `(1, 1)` the lower-left tile; north is `+y`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::mrc::{apply_view, AspectView, Description, GridFrame, View};
use crate::seeding;

pub const GENERATOR_ID: &str = "G_rho";
pub const LOCATION_ASPECT: &str = "location";
pub const COLOUR_FORM_ASPECT: &str = "colour_form";
pub const APPROX_COLOUR_ASPECT: &str = "approx_colour";
/// Edge aspects in `Dir` order.
pub const EDGE_ASPECTS: [&str; 4] = ["edge_n", "edge_e", "edge_s", "edge_w"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PaintingError {
    #[error("infeasible painting spec: {0}")]
    InfeasibleSpec(String),
    #[error("coordinates ({x}, {y}) are outside the grid")]
    OutOfGrid { x: u32, y: u32 },
    #[error("invalid painting: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::N => Dir::S,
            Dir::E => Dir::W,
            Dir::S => Dir::N,
            Dir::W => Dir::E,
        }
    }

    pub fn offset(self) -> (i32, i32) {
        match self {
            Dir::N => (0, 1),
            Dir::E => (1, 0),
            Dir::S => (0, -1),
            Dir::W => (-1, 0),
        }
    }
}

/// Signature of one tile edge. Matching signatures license adjacency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeSig {
    Boundary,
    Sig(u32),
}

impl EdgeSig {
    pub fn sig(self) -> Option<u32> {
        match self {
            EdgeSig::Boundary => None,
            EdgeSig::Sig(s) => Some(s),
        }
    }

    pub fn is_boundary(self) -> bool {
        self == EdgeSig::Boundary
    }

    /// Aspect-value rendering used in descriptions.
    pub fn token(self) -> String {
        match self {
            EdgeSig::Boundary => "B".to_string(),
            EdgeSig::Sig(s) => format!("s{s}"),
        }
    }

    pub fn from_token(tok: &str) -> Option<EdgeSig> {
        if tok == "B" {
            return Some(EdgeSig::Boundary);
        }
        tok.strip_prefix('s')?.parse().ok().map(EdgeSig::Sig)
    }
}

impl fmt::Display for EdgeSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawSig {
    Id(u32),
    Text(String),
}

impl Serialize for EdgeSig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            EdgeSig::Boundary => s.serialize_str("B"),
            EdgeSig::Sig(id) => s.serialize_u32(*id),
        }
    }
}

impl<'de> Deserialize<'de> for EdgeSig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RawSig::deserialize(d)? {
            RawSig::Id(id) => Ok(EdgeSig::Sig(id)),
            RawSig::Text(t) if t == "B" => Ok(EdgeSig::Boundary),
            RawSig::Text(t) => Err(serde::de::Error::custom(format!("bad edge signature {t:?}"))),
        }
    }
}

/// Edge signatures in N, E, S, W order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edges(pub [EdgeSig; 4]);

impl Edges {
    pub fn get(&self, d: Dir) -> EdgeSig {
        self.0[d.index()]
    }
}

#[derive(Serialize, Deserialize)]
struct RawEdges {
    n: EdgeSig,
    e: EdgeSig,
    s: EdgeSig,
    w: EdgeSig,
}

impl Serialize for Edges {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let [n, e, so, w] = self.0;
        RawEdges { n, e, s: so, w }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Edges {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RawEdges::deserialize(d)?;
        Ok(Edges([r.n, r.e, r.s, r.w]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub x: u32,
    pub y: u32,
    pub label: u32,
    pub form: u32,
    pub edges: Edges,
}

impl Tile {
    pub fn coords(&self) -> (u32, u32) {
        (self.x, self.y)
    }

    /// Fully qualified description of the tile: every aspect it can answer.
    pub fn source_description(&self) -> Description {
        let mut d = Description::new(GENERATOR_ID, format!("sigma{}", self.form))
            .with_point(LOCATION_ASPECT, location_token(self.x, self.y))
            .with_point(COLOUR_FORM_ASPECT, form_token(self.form))
            .with_point(APPROX_COLOUR_ASPECT, self.label.to_string())
            .with_coords(vec![self.x, self.y]);
        for d_ in Dir::ALL {
            d.points.insert(EDGE_ASPECTS[d_.index()].to_string(), self.edges.get(d_).token());
        }
        d
    }
}

pub fn location_token(x: u32, y: u32) -> String {
    format!("{x},{y}")
}

pub fn form_token(form: u32) -> String {
    format!("cf_{form}")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniquenessMode {
    /// Every interior signature id occurs on exactly one edge pair.
    #[default]
    UniqueInteriorEdges,
    /// Interior signatures are drawn from a small alphabet and repeat.
    AmbiguousAllowed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaintingSpec {
    pub width: u32,
    pub height: u32,
    pub q: u32,
    pub label_counts: BTreeMap<u32, u32>,
    #[serde(default)]
    pub uniqueness_mode: UniquenessMode,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl PaintingSpec {
    pub fn new(width: u32, height: u32, counts: &[u32], seed: u64) -> Self {
        PaintingSpec {
            width,
            height,
            q: counts.len() as u32,
            label_counts: counts.iter().enumerate().map(|(j, &n)| (j as u32 + 1, n)).collect(),
            uniqueness_mode: UniquenessMode::UniqueInteriorEdges,
            seed: Some(seed),
        }
    }

    pub fn with_mode(mut self, mode: UniquenessMode) -> Self {
        self.uniqueness_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), PaintingError> {
        let cells = self.width as u64 * self.height as u64;
        let bad = |m: String| Err(PaintingError::InfeasibleSpec(m));
        if self.width == 0 || self.height == 0 {
            return bad("grid extents must be positive".into());
        }
        if self.q == 0 || self.q as u64 >= cells {
            return bad(format!("q = {} must satisfy 1 <= q < {cells}", self.q));
        }
        let expected: BTreeSet<u32> = (1..=self.q).collect();
        let given: BTreeSet<u32> = self.label_counts.keys().copied().collect();
        if expected != given {
            return bad(format!("label_counts must have exactly the labels 1..={}", self.q));
        }
        if let Some((j, _)) = self.label_counts.iter().find(|(_, &n)| n == 0) {
            return bad(format!("label {j} has count 0"));
        }
        let total: u64 = self.label_counts.values().map(|&n| n as u64).sum();
        if total != cells {
            return bad(format!("label counts sum to {total}, grid has {cells} cells"));
        }
        Ok(())
    }
}

/// A valid parcelled painting. Tiles are stored row-major from `(1, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPainting")]
pub struct Painting {
    width: u32,
    height: u32,
    q: u32,
    tiles: Vec<Tile>,
}

#[derive(Deserialize)]
struct RawPainting {
    width: u32,
    height: u32,
    q: u32,
    tiles: Vec<Tile>,
}

impl TryFrom<RawPainting> for Painting {
    type Error = PaintingError;
    fn try_from(r: RawPainting) -> Result<Self, Self::Error> {
        Painting::new(r.width, r.height, r.q, r.tiles)
    }
}

impl Painting {
    /// Checks every grid, label and edge invariant; tiles may come in any order.
    pub fn new(width: u32, height: u32, q: u32, tiles: Vec<Tile>) -> Result<Self, PaintingError> {
        let invalid = |m: String| Err(PaintingError::Invalid(m));
        let cells = width as usize * height as usize;
        if width == 0 || height == 0 {
            return invalid("empty grid".into());
        }
        if q == 0 || q as usize >= cells {
            return invalid(format!("q = {q} must satisfy 1 <= q < {cells}"));
        }
        if tiles.len() != cells {
            return invalid(format!("{} tiles for {cells} cells", tiles.len()));
        }
        let mut slots: Vec<Option<Tile>> = vec![None; cells];
        for t in tiles {
            if t.x == 0 || t.x > width || t.y == 0 || t.y > height {
                return Err(PaintingError::OutOfGrid { x: t.x, y: t.y });
            }
            if t.label == 0 || t.label > q {
                return invalid(format!("tile ({}, {}) has label {} outside 1..={q}", t.x, t.y, t.label));
            }
            let i = ((t.y - 1) * width + (t.x - 1)) as usize;
            if slots[i].is_some() {
                return invalid(format!("cell ({}, {}) holds two tiles", t.x, t.y));
            }
            slots[i] = Some(t);
        }
        let p = Painting { width, height, q, tiles: slots.into_iter().map(Option::unwrap).collect() };
        let present: BTreeSet<u32> = p.tiles.iter().map(|t| t.label).collect();
        if present.len() != q as usize {
            return invalid("some label in 1..=q labels no tile".into());
        }
        p.check_edges()?;
        Ok(p)
    }

    fn check_edges(&self) -> Result<(), PaintingError> {
        for t in &self.tiles {
            for d in Dir::ALL {
                let here = t.edges.get(d);
                match self.neighbour(t.x, t.y, d) {
                    None if !here.is_boundary() => {
                        return Err(PaintingError::Invalid(format!(
                            "perimeter edge {d:?} of ({}, {}) is not BOUNDARY",
                            t.x, t.y
                        )))
                    }
                    Some(n) if here.is_boundary() || n.edges.get(d.opposite()) != here => {
                        return Err(PaintingError::Invalid(format!(
                            "edge {d:?} of ({}, {}) does not match its neighbour",
                            t.x, t.y
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn cell_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn tile(&self, x: u32, y: u32) -> Result<&Tile, PaintingError> {
        if x == 0 || x > self.width || y == 0 || y > self.height {
            return Err(PaintingError::OutOfGrid { x, y });
        }
        Ok(&self.tiles[((y - 1) * self.width + (x - 1)) as usize])
    }

    pub fn neighbour(&self, x: u32, y: u32, d: Dir) -> Option<&Tile> {
        let (dx, dy) = d.offset();
        let nx = x as i64 + dx as i64;
        let ny = y as i64 + dy as i64;
        if nx < 1 || ny < 1 || nx > self.width as i64 || ny > self.height as i64 {
            return None;
        }
        self.tile(nx as u32, ny as u32).ok()
    }

    /// Form ids of horizontally (`E`) and vertically (`N`) adjacent tile pairs.
    pub fn adjacency_graph(&self) -> BTreeSet<(u32, u32, Dir)> {
        let mut g = BTreeSet::new();
        for t in &self.tiles {
            for d in [Dir::E, Dir::N] {
                if let Some(n) = self.neighbour(t.x, t.y, d) {
                    g.insert((t.form, n.form, d));
                }
            }
        }
        g
    }

    /// The frame-view: each tile reports its grid location only.
    pub fn location_view(&self) -> View {
        let values = self
            .tiles
            .iter()
            .map(|t| location_token(t.x, t.y));
        View::new(
            vec![AspectView::new(LOCATION_ASPECT, values).expect("distinct cells")],
            Some(GridFrame::new(vec![self.width, self.height]).expect("non-empty grid")),
        )
        .expect("single aspect")
    }

    /// The form-of-colour view: colour-form id plus the four edge signatures.
    pub fn colour_form_view(&self) -> View {
        let forms: BTreeSet<u32> = self.tiles.iter().map(|t| t.form).collect();
        let sigs: BTreeSet<EdgeSig> = self.tiles.iter().flat_map(|t| t.edges.0).collect();
        let mut aspects = vec![AspectView::new(COLOUR_FORM_ASPECT, forms.into_iter().map(form_token))
            .expect("distinct forms")];
        for name in EDGE_ASPECTS {
            aspects.push(AspectView::new(name, sigs.iter().map(|s| s.token())).expect("distinct sigs"));
        }
        View::new(aspects, None).expect("distinct aspect ids")
    }

    /// The approximate-colour view: a single label `j` per tile.
    pub fn approx_colour_view(&self) -> View {
        View::new(
            vec![AspectView::new(APPROX_COLOUR_ASPECT, (1..=self.q).map(|j| j.to_string())).expect("q >= 1")],
            None,
        )
        .expect("single aspect")
    }

    pub fn view(&self, selector: ViewSelector) -> View {
        match selector {
            ViewSelector::Location => self.location_view(),
            ViewSelector::ColourForm => self.colour_form_view(),
            ViewSelector::ApproxColour => self.approx_colour_view(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViewSelector {
    Location,
    ColourForm,
    ApproxColour,
}

/// Build a painting from a spec. Deterministic in the spec's seed.
pub fn generate_painting(spec: &PaintingSpec) -> Result<Painting, PaintingError> {
    spec.validate()?;
    let seed = spec
        .seed
        .ok_or_else(|| PaintingError::InfeasibleSpec("spec has no seed".into()))?;
    let (w, h) = (spec.width, spec.height);
    let cells = (w * h) as usize;

    let mut labels: Vec<u32> = spec
        .label_counts
        .iter()
        .flat_map(|(&j, &n)| std::iter::repeat_n(j, n as usize))
        .collect();
    labels.shuffle(&mut seeding::rng(seeding::derive_named(seed, "labels")));

    let mut forms: Vec<u32> = (1..=cells as u32).collect();
    forms.shuffle(&mut seeding::rng(seeding::derive_named(seed, "forms")));

    // interior edges: (x, y) east of which lies (x+1, y), and north of which (x, y+1)
    let horizontal = (h * (w - 1)) as usize;
    let vertical = (w * (h - 1)) as usize;
    let interior = horizontal + vertical;
    let mut sig_rng = seeding::rng(seeding::derive_named(seed, "edges"));
    let sigs: Vec<u32> = match spec.uniqueness_mode {
        UniquenessMode::UniqueInteriorEdges => {
            let mut ids: Vec<u32> = (1..=interior as u32).collect();
            ids.shuffle(&mut sig_rng);
            ids
        }
        UniquenessMode::AmbiguousAllowed => {
            let alphabet = (interior as u32 / 3).max(2);
            (0..interior).map(|_| sig_rng.gen_range(1..=alphabet)).collect()
        }
    };
    let east_sig = |x: u32, y: u32| sigs[((y - 1) * (w - 1) + (x - 1)) as usize];
    let north_sig = |x: u32, y: u32| sigs[horizontal + ((y - 1) * w + (x - 1)) as usize];

    let mut tiles = Vec::with_capacity(cells);
    for y in 1..=h {
        for x in 1..=w {
            let i = ((y - 1) * w + (x - 1)) as usize;
            let edge = |present: bool, id: u32| if present { EdgeSig::Sig(id) } else { EdgeSig::Boundary };
            let n = if y < h { edge(true, north_sig(x, y)) } else { EdgeSig::Boundary };
            let e = if x < w { edge(true, east_sig(x, y)) } else { EdgeSig::Boundary };
            let s = if y > 1 { edge(true, north_sig(x, y - 1)) } else { EdgeSig::Boundary };
            let we = if x > 1 { edge(true, east_sig(x - 1, y)) } else { EdgeSig::Boundary };
            tiles.push(Tile { x, y, label: labels[i], form: forms[i], edges: Edges([n, e, s, we]) });
        }
    }
    Painting::new(w, h, spec.q, tiles)
}

/// Qualify the tile at `(x, y)` through one of the three painting views.
pub fn describe_tile(p: &Painting, (x, y): (u32, u32), selector: ViewSelector) -> Result<Description, PaintingError> {
    let tile = p.tile(x, y)?;
    apply_view(&p.view(selector), &tile.source_description())
        .map_err(|e| PaintingError::Invalid(e.to_string()))
}

/// Number of tiles carrying each label `j`.
pub fn label_histogram(p: &Painting) -> BTreeMap<u32, u64> {
    let mut h: BTreeMap<u32, u64> = (1..=p.q).map(|j| (j, 0)).collect();
    for t in &p.tiles {
        *h.entry(t.label).or_default() += 1;
    }
    h
}
