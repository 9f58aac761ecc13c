//! Semantic integration: recover the factual law of a random phenomenon by
//! reassembling its complexified outcomes into replicas of the hidden
//! integrated form, then counting labels on one completed replica.
//!
//! Each outcome is a label `r` enriched with a complexification value `r'`
//! and four edge signatures. Outcomes are assembled by border continuity as
//! they arrive; duplicates open or extend further replicas. Once `K`
//! replicas are complete their label counts are cross-checked and the law
//! `{n(Dr) / n_r}` is read off the first one.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{Assembler, CompletedBoard, CompletionRule, Piece};
use crate::painting::{generate_painting, Edges, Painting, PaintingError, PaintingSpec, Tile};
use crate::phenomenon::{compare_law, content_id, run_frequency_experiment, DivergenceReport, PhenomenonError, Provenance, RandomPhenomenon};
use crate::prob::{Measure, Universe};
use crate::seeding;

/// Complexification values must be at least this many times the largest
/// label count of the form.
pub const S_PRIME_FACTOR: u64 = 10;
pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000;
pub const DEFAULT_CONFIRMATIONS: u32 = 3;
pub const DEFAULT_AMBIGUITY_BUDGET: u64 = 1_000;

#[derive(Debug, Error)]
pub enum IntegrationError {
    #[error("invalid hidden form: {0}")]
    InvalidForm(String),
    #[error("s' = {s_prime} is too small; at least {required} values are needed")]
    SPrimeTooSmall { s_prime: u64, required: u64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{events} events consumed but only {completed} replicas completed")]
    BudgetExhausted { events: u64, completed: usize },
    #[error("completed replicas disagree: {0}")]
    InconsistentReplicas(String),
    #[error("more than {budget} ambiguous attachments")]
    AmbiguityExhausted { budget: u64 },
    #[error(transparent)]
    Painting(#[from] PaintingError),
    #[error(transparent)]
    Phenomenon(#[from] PhenomenonError),
}

/// A label outcome with its complexification.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComplexifiedEvent {
    pub label_r: u32,
    pub r_prime: u64,
    pub edges: Edges,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra_values: BTreeMap<String, String>,
}

impl Piece for ComplexifiedEvent {
    fn edges(&self) -> Edges {
        self.edges
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormTile {
    pub x: u32,
    pub y: u32,
    pub r: u32,
    pub r_prime: u64,
    pub edges: Edges,
}

/// The integrated form: a grid of complexified label descriptions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawForm")]
pub struct HiddenForm {
    width: u32,
    height: u32,
    s: u32,
    s_prime: u64,
    tiles: Vec<FormTile>,
    label_counts: BTreeMap<u32, u64>,
}

#[derive(Deserialize)]
struct RawForm {
    width: u32,
    height: u32,
    s: u32,
    s_prime: u64,
    tiles: Vec<FormTile>,
    #[serde(default)]
    label_counts: Option<BTreeMap<u32, u64>>,
}

impl TryFrom<RawForm> for HiddenForm {
    type Error = IntegrationError;
    fn try_from(r: RawForm) -> Result<Self, Self::Error> {
        let form = HiddenForm::new(r.width, r.height, r.s, r.s_prime, r.tiles)?;
        if let Some(given) = r.label_counts {
            if given != form.label_counts {
                return Err(IntegrationError::InvalidForm("label_counts disagree with the tiles".into()));
            }
        }
        Ok(form)
    }
}

impl HiddenForm {
    pub fn new(width: u32, height: u32, s: u32, s_prime: u64, tiles: Vec<FormTile>) -> Result<Self, IntegrationError> {
        // grid, label and edge invariants are those of a painting
        let as_painting: Vec<Tile> = tiles
            .iter()
            .enumerate()
            .map(|(i, t)| Tile { x: t.x, y: t.y, label: t.r, form: i as u32 + 1, edges: t.edges })
            .collect();
        let painting = Painting::new(width, height, s, as_painting).map_err(|e| IntegrationError::InvalidForm(e.to_string()))?;
        let mut label_counts: BTreeMap<u32, u64> = BTreeMap::new();
        for t in &tiles {
            *label_counts.entry(t.r).or_default() += 1;
        }
        check_s_prime(s_prime, &label_counts)?;
        let mut seen = BTreeSet::new();
        for t in &tiles {
            if t.r_prime == 0 || t.r_prime > s_prime {
                return Err(IntegrationError::InvalidForm(format!("r' = {} outside 1..={s_prime}", t.r_prime)));
            }
            if !seen.insert((t.r, t.r_prime)) {
                return Err(IntegrationError::InvalidForm(format!("r' = {} realised twice for label {}", t.r_prime, t.r)));
            }
        }
        let mut tiles = tiles;
        tiles.sort_by_key(|t| (t.y, t.x));
        debug_assert_eq!(tiles.len(), painting.cell_count());
        Ok(HiddenForm { width, height, s, s_prime, tiles, label_counts })
    }

    /// Complexify a painting: each tile keeps its label and edges and gets an
    /// `r'` drawn without replacement, per label, from `1..=s_prime`.
    pub fn from_painting(p: &Painting, s_prime: u64, seed: u64) -> Result<Self, IntegrationError> {
        let hist = crate::painting::label_histogram(p);
        check_s_prime(s_prime, &hist)?;
        let mut rng = seeding::rng(seeding::derive_named(seed, "complexification"));
        let mut pools: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for (&r, &n) in &hist {
            let picked = sample(&mut rng, s_prime as usize, n as usize).into_iter().map(|i| i as u64 + 1).collect();
            pools.insert(r, picked);
        }
        let tiles = p
            .tiles()
            .iter()
            .map(|t| FormTile {
                x: t.x,
                y: t.y,
                r: t.label,
                r_prime: pools.get_mut(&t.label).and_then(Vec::pop).expect("one value per tile"),
                edges: t.edges,
            })
            .collect();
        HiddenForm::new(p.width(), p.height(), p.q(), s_prime, tiles)
    }

    /// Generate the painting of `spec` and complexify it with the smallest
    /// admissible `s'` (or `s_prime` when given).
    pub fn generate(spec: &PaintingSpec, s_prime: Option<u64>) -> Result<Self, IntegrationError> {
        let p = generate_painting(spec)?;
        let max = crate::painting::label_histogram(&p).values().copied().max().unwrap_or(1);
        let seed = spec.seed.unwrap_or_default();
        HiddenForm::from_painting(&p, s_prime.unwrap_or(S_PRIME_FACTOR * max), seed)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn s_prime(&self) -> u64 {
        self.s_prime
    }

    pub fn tiles(&self) -> &[FormTile] {
        &self.tiles
    }

    pub fn label_counts(&self) -> &BTreeMap<u32, u64> {
        &self.label_counts
    }

    pub fn label_universe(&self) -> Universe {
        Universe::labels(self.s).expect("s >= 1")
    }

    /// Normalized label histogram of the form, counted directly on the grid.
    pub fn histogram_law(&self) -> Measure {
        let counts: Vec<u64> = (1..=self.s).map(|r| self.label_counts.get(&r).copied().unwrap_or(0)).collect();
        Measure::from_counts(self.label_universe(), &counts).expect("non-empty form")
    }

    /// The bare-label phenomenon: uniform tile draws observed through `r` only.
    /// For equal seeds its outcome stream equals the label projection of
    /// [`complexified_phenomenon`].
    pub fn label_phenomenon(&self) -> RandomPhenomenon {
        let urn = self.tiles.iter().map(|t| (t.r - 1) as usize).collect();
        RandomPhenomenon::new(format!("form/{}", content_id(self)), self.label_universe(), urn, Provenance::HiddenForm(content_id(self)))
            .expect("labels lie in 1..=s")
    }

    fn event(&self, i: usize) -> ComplexifiedEvent {
        let t = &self.tiles[i];
        ComplexifiedEvent { label_r: t.r, r_prime: t.r_prime, edges: t.edges, extra_values: BTreeMap::new() }
    }
}

fn check_s_prime(s_prime: u64, counts: &BTreeMap<u32, u64>) -> Result<(), IntegrationError> {
    let required = S_PRIME_FACTOR * counts.values().copied().max().unwrap_or(0);
    if s_prime < required {
        return Err(IntegrationError::SPrimeTooSmall { s_prime, required });
    }
    Ok(())
}

/// Endless stream of complexified outcomes: each one is a uniformly drawn
/// tile of the form, stripped of its coordinates.
pub struct ComplexifiedStream<'a> {
    form: &'a HiddenForm,
    rng: ChaCha8Rng,
}

impl Iterator for ComplexifiedStream<'_> {
    type Item = ComplexifiedEvent;
    fn next(&mut self) -> Option<ComplexifiedEvent> {
        let i = self.rng.gen_range(0..self.form.tiles.len());
        Some(self.form.event(i))
    }
}

impl<'a> ComplexifiedStream<'a> {
    /// Project onto label indices (`r - 1`).
    pub fn labels(self) -> impl Iterator<Item = usize> + 'a {
        self.map(|e| (e.label_r - 1) as usize)
    }
}

pub fn complexified_phenomenon(form: &HiddenForm, seed: u64) -> ComplexifiedStream<'_> {
    ComplexifiedStream { form, rng: seeding::rng(seed) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub max_events: u64,
    pub confirmation_replicas: u32,
    pub ambiguity_budget: u64,
    #[serde(default)]
    pub completion: CompletionRule,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            max_events: DEFAULT_MAX_EVENTS,
            confirmation_replicas: DEFAULT_CONFIRMATIONS,
            ambiguity_budget: DEFAULT_AMBIGUITY_BUDGET,
            completion: CompletionRule::Closure,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub r: u32,
    pub r_prime: u64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    /// Tiles of one completed replica.
    pub n_phi_total: u64,
    /// Occurrences of each realised `(r, r')` on that replica.
    pub per_pair_counts: Vec<PairCount>,
    /// Distinct complexifications realised per label.
    pub per_label_complexified: BTreeMap<u32, u64>,
    /// Label descriptions per label: the sum of the pair counts.
    pub per_label: BTreeMap<u32, u64>,
    /// Sum of `per_label`.
    pub total_labels: u64,
    pub law: Measure,
    pub law_decimal: BTreeMap<String, f64>,
    pub replicas_used_for_confirmation: u32,
    pub events_consumed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub replica_index: usize,
    /// 1-based index of the event that closed the replica.
    pub event_index: u64,
}

/// Running state of one integration.
pub struct Integrator {
    config: IntegrationConfig,
    assembler: Assembler<ComplexifiedEvent>,
    events_consumed: u64,
    ambiguous: u64,
    completion_log: Vec<CompletionRecord>,
}

impl Integrator {
    pub fn new(config: IntegrationConfig) -> Result<Self, IntegrationError> {
        if config.confirmation_replicas == 0 {
            return Err(IntegrationError::InvalidConfig("at least one confirmation replica is required".into()));
        }
        Ok(Integrator {
            config,
            assembler: Assembler::new(config.completion),
            events_consumed: 0,
            ambiguous: 0,
            completion_log: Vec::new(),
        })
    }

    pub fn events_consumed(&self) -> u64 {
        self.events_consumed
    }

    pub fn completion_log(&self) -> &[CompletionRecord] {
        &self.completion_log
    }

    pub fn nascent_replicas(&self) -> usize {
        self.assembler.nascent_count()
    }

    pub fn completed_replicas(&self) -> &[CompletedBoard<ComplexifiedEvent>] {
        self.assembler.completed()
    }

    pub fn is_done(&self) -> bool {
        self.assembler.completed().len() >= self.config.confirmation_replicas as usize
    }

    pub fn push(&mut self, event: ComplexifiedEvent) -> Result<(), IntegrationError> {
        self.events_consumed += 1;
        let out = self.assembler.push(event);
        if out.candidate_cells > 1 {
            self.ambiguous += 1;
            if self.ambiguous > self.config.ambiguity_budget {
                return Err(IntegrationError::AmbiguityExhausted { budget: self.config.ambiguity_budget });
            }
        }
        for replica_index in out.completed {
            self.completion_log.push(CompletionRecord { replica_index, event_index: self.events_consumed });
        }
        Ok(())
    }

    /// Count out the law on the first completed replica after checking that
    /// the first `K` replicas agree.
    pub fn finish(&self) -> Result<IntegrationResult, IntegrationError> {
        let k = self.config.confirmation_replicas as usize;
        let done = self.assembler.completed();
        if done.len() < k {
            return Err(IntegrationError::BudgetExhausted { events: self.events_consumed, completed: done.len() });
        }
        let first = replica_counts(&done[0]);
        for (i, b) in done[1..k].iter().enumerate() {
            let other = replica_counts(b);
            if other.0 != first.0 || other.1 != first.1 {
                return Err(IntegrationError::InconsistentReplicas(format!(
                    "replica {} counts {:?} ({} tiles) against {:?} ({} tiles)",
                    i + 1,
                    other.1,
                    other.0,
                    first.1,
                    first.0
                )));
            }
        }
        let (n_phi_total, per_label, pairs) = first;
        let per_label_complexified: BTreeMap<u32, u64> = per_label
            .keys()
            .map(|&r| (r, pairs.keys().filter(|(pr, _)| *pr == r).count() as u64))
            .collect();
        let total_labels: u64 = per_label.values().sum();
        let universe = Universe::new(per_label.keys().map(|r| r.to_string())).map_err(|e| IntegrationError::InvalidForm(e.to_string()))?;
        let counts: Vec<u64> = per_label.values().copied().collect();
        let law = Measure::from_counts(universe, &counts).map_err(|e| IntegrationError::InvalidForm(e.to_string()))?;
        let law_decimal = law
            .universe()
            .elements()
            .iter()
            .cloned()
            .zip(law.atoms().iter().map(|a| a.to_f64()))
            .collect();
        Ok(IntegrationResult {
            n_phi_total,
            per_pair_counts: pairs.into_iter().map(|((r, r_prime), count)| PairCount { r, r_prime, count }).collect(),
            per_label_complexified,
            per_label,
            total_labels,
            law,
            law_decimal,
            replicas_used_for_confirmation: k as u32,
            events_consumed: self.events_consumed,
        })
    }
}

type ReplicaCounts = (u64, BTreeMap<u32, u64>, BTreeMap<(u32, u64), u64>);

fn replica_counts(board: &CompletedBoard<ComplexifiedEvent>) -> ReplicaCounts {
    let mut per_label = BTreeMap::new();
    let mut pairs = BTreeMap::new();
    let mut total = 0;
    for e in board.pieces() {
        total += 1;
        *per_label.entry(e.label_r).or_insert(0) += 1;
        *pairs.entry((e.label_r, e.r_prime)).or_insert(0) += 1;
    }
    (total, per_label, pairs)
}

/// Consume `stream` until `K` replicas are complete or `max_events` is hit.
pub fn integrate<I>(stream: I, config: IntegrationConfig) -> Result<IntegrationResult, IntegrationError>
where
    I: IntoIterator<Item = ComplexifiedEvent>,
{
    let mut state = Integrator::new(config)?;
    for event in stream.into_iter().take(config.max_events as usize) {
        state.push(event)?;
        if state.is_done() {
            break;
        }
    }
    state.finish()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub integrated: IntegrationResult,
    /// Normalized label histogram read directly off the form.
    pub hidden_law: Measure,
    pub exact_recovery: bool,
    pub n_freq: u64,
    pub sup_distance: f64,
    pub divergence: DivergenceReport,
}

/// Integrate the form's complexified stream, then compare an independent
/// frequency experiment on its label projection against the integrated law.
pub fn end_to_end_check(form: &HiddenForm, n_freq: u64, seed: u64, config: IntegrationConfig) -> Result<ComparisonReport, IntegrationError> {
    let integrated = integrate(complexified_phenomenon(form, seeding::derive_named(seed, "integration")), config)?;
    let hidden_law = form.histogram_law();
    let freq = run_frequency_experiment(&form.label_phenomenon(), n_freq, seeding::derive_named(seed, "frequency"));
    // the integrated universe lists only labels realised on the replica
    if integrated.law.universe() != &freq.universe {
        return Err(IntegrationError::InconsistentReplicas("integrated universe differs from the label universe".into()));
    }
    let divergence = compare_law(&freq, &integrated.law)?;
    Ok(ComparisonReport {
        exact_recovery: integrated.law == hidden_law,
        hidden_law,
        n_freq,
        sup_distance: divergence.sup_distance,
        divergence,
        integrated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::painting::{Dir, EdgeSig};
    use crate::rational::Rational;

    fn reference_form() -> HiddenForm {
        HiddenForm::generate(&PaintingSpec::new(10, 10, &[60, 30, 10], 7), None).unwrap()
    }

    #[test]
    fn small_form_law() {
        let form = HiddenForm::generate(&PaintingSpec::new(2, 4, &[4, 3, 1], 2), None).unwrap();
        // oracle: direct count over the form definition
        let mut direct = BTreeMap::new();
        for t in form.tiles() {
            *direct.entry(t.r).or_insert(0u64) += 1;
        }
        assert_eq!(direct, [(1, 4), (2, 3), (3, 1)].into());
        let res = integrate(complexified_phenomenon(&form, 5), IntegrationConfig::default()).unwrap();
        assert_eq!(res.total_labels, 8);
        assert_eq!(res.n_phi_total, 8);
        assert_eq!(res.law.atoms(), &[Rational::new(1, 2), Rational::new(3, 8), Rational::new(1, 8)]);
    }

    #[test]
    fn one_tile_form() {
        let b = EdgeSig::Boundary;
        let tile = FormTile { x: 1, y: 1, r: 1, r_prime: 3, edges: Edges([b; 4]) };
        // a 1x1 grid cannot host q < 1 labels as a painting; build the stream by hand
        let event = ComplexifiedEvent { label_r: tile.r, r_prime: tile.r_prime, edges: tile.edges, extra_values: BTreeMap::new() };
        let config = IntegrationConfig { confirmation_replicas: 1, ..Default::default() };
        let res = integrate(std::iter::repeat(event), config).unwrap();
        assert_eq!(res.n_phi_total, 1);
        assert_eq!(res.events_consumed, 1);
        assert_eq!(res.law.atoms(), &[Rational::one()]);
    }

    #[test]
    fn reference_form_matches_factual_space() {
        let form = reference_form();
        let res = integrate(complexified_phenomenon(&form, 1), IntegrationConfig::default()).unwrap();
        assert_eq!(res.law.atoms(), &[Rational::new(3, 5), Rational::new(3, 10), Rational::new(1, 10)]);
        assert_eq!(res.law, form.histogram_law());
        assert_eq!(res.per_label, res.per_label_complexified);
        assert_eq!(res.per_pair_counts.len(), 100);
        assert!(res.per_pair_counts.iter().all(|p| p.count == 1));
    }

    #[test]
    fn projection_equals_label_phenomenon() {
        let form = reference_form();
        let a: Vec<usize> = complexified_phenomenon(&form, 9).labels().take(5000).collect();
        let b: Vec<usize> = form.label_phenomenon().sampler(9).take(5000).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn stream_is_reproducible_and_coordinate_free() {
        let form = reference_form();
        let a: Vec<ComplexifiedEvent> = complexified_phenomenon(&form, 4).take(300).collect();
        let b: Vec<ComplexifiedEvent> = complexified_phenomenon(&form, 4).take(300).collect();
        assert_eq!(a, b);
        let js = serde_json::to_string(&a[0]).unwrap();
        assert!(!js.contains("\"x\""));
    }

    #[test]
    fn budget_and_config_errors() {
        let form = reference_form();
        let tight = IntegrationConfig { max_events: 50, ..Default::default() };
        assert!(matches!(
            integrate(complexified_phenomenon(&form, 1), tight),
            Err(IntegrationError::BudgetExhausted { events: 50, .. })
        ));
        let zero = IntegrationConfig { confirmation_replicas: 0, ..Default::default() };
        assert!(matches!(integrate(complexified_phenomenon(&form, 1), zero), Err(IntegrationError::InvalidConfig(_))));
    }

    #[test]
    fn s_prime_guardrail() {
        let p = generate_painting(&PaintingSpec::new(10, 10, &[60, 30, 10], 7)).unwrap();
        assert!(matches!(HiddenForm::from_painting(&p, 599, 0), Err(IntegrationError::SPrimeTooSmall { required: 600, .. })));
        let form = HiddenForm::from_painting(&p, 600, 0).unwrap();
        let mut clouds: BTreeMap<u32, BTreeSet<u64>> = BTreeMap::new();
        for t in form.tiles() {
            assert!(clouds.entry(t.r).or_default().insert(t.r_prime));
        }
    }

    #[test]
    fn corrupted_replicas_are_detected() {
        let form = HiddenForm::generate(&PaintingSpec::new(2, 2, &[2, 2], 3), None).unwrap();
        let mut events: Vec<ComplexifiedEvent> = form.tiles().iter().map(|t| ComplexifiedEvent {
            label_r: t.r, r_prime: t.r_prime, edges: t.edges, extra_values: BTreeMap::new(),
        }).collect();
        let mut second = events.clone();
        // relabel one tile of the second copy
        second[0].label_r = if second[0].label_r == 1 { 2 } else { 1 };
        events.extend(second);
        let config = IntegrationConfig { confirmation_replicas: 2, ..Default::default() };
        assert!(matches!(integrate(events, config), Err(IntegrationError::InconsistentReplicas(_))));
    }

    #[test]
    fn form_json_round_trip_and_validation() {
        let form = HiddenForm::generate(&PaintingSpec::new(3, 3, &[5, 4], 1), None).unwrap();
        let js = serde_json::to_string(&form).unwrap();
        assert_eq!(serde_json::from_str::<HiddenForm>(&js).unwrap(), form);
        let mut v = serde_json::to_value(&form).unwrap();
        let dup = v["tiles"][0]["r_prime"].clone();
        let r0 = v["tiles"][0]["r"].clone();
        let same_label = v["tiles"].as_array().unwrap().iter().skip(1).position(|t| t["r"] == r0).unwrap() + 1;
        v["tiles"][same_label]["r_prime"] = dup;
        assert!(serde_json::from_value::<HiddenForm>(v).is_err());
    }

    #[test]
    fn stability_rule_closes_stalled_boards() {
        let form = HiddenForm::generate(&PaintingSpec::new(3, 3, &[5, 4], 1), None).unwrap();
        // drop one tile from the stream: closure is impossible, stability still ends the run
        let missing = form.tiles()[4].r_prime;
        let stream = complexified_phenomenon(&form, 2).filter(|e| e.r_prime != missing || e.edges.get(Dir::N).is_boundary());
        let config = IntegrationConfig {
            confirmation_replicas: 1,
            completion: CompletionRule::Stability { patience: 200 },
            max_events: 10_000,
            ..Default::default()
        };
        let res = integrate(stream, config).unwrap();
        assert!(res.n_phi_total < 9);
    }

    #[test]
    fn end_to_end_on_reference() {
        let report = end_to_end_check(&reference_form(), 100_000, 3, IntegrationConfig::default()).unwrap();
        assert!(report.exact_recovery);
        assert!(report.sup_distance <= 0.01);
    }
}
