//! Random phenomena as seeded samplers, probabilisation of a painting, and
//! the draw-with-replacement probability game.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::painting::{label_histogram, Painting};
use crate::prob::{generate_algebra, validate_measure, AlgebraOptions, Event, EventAlgebra, Measure, ProbError, Universe, ValidationReport};
use crate::rational::Rational;
use crate::seeding;

#[derive(Debug, Error)]
pub enum PhenomenonError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("urn is empty")]
    EmptyUrn,
    #[error("urn entry {0} is outside the universe")]
    ForeignDraw(usize),
    #[error("frequency table and law are over different universes")]
    UniverseMismatch,
    #[error("factual space fails validation: {0:?}")]
    InvalidFactualSpace(ValidationReport),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "id")]
pub enum Provenance {
    None,
    Painting(String),
    HiddenForm(String),
}

/// A reproducible procedure paired with its universe of outcomes.
///
/// The procedure is an urn: each realisation draws one entry uniformly with
/// replacement and emits the universe element it names. Given a seed the
/// stream of outcomes is fixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomPhenomenon {
    procedure_id: String,
    universe: Universe,
    urn: Vec<usize>,
    provenance: Provenance,
}

impl RandomPhenomenon {
    pub fn new(procedure_id: impl Into<String>, universe: Universe, urn: Vec<usize>, provenance: Provenance) -> Result<Self, PhenomenonError> {
        if urn.is_empty() {
            return Err(PhenomenonError::EmptyUrn);
        }
        if let Some(&bad) = urn.iter().find(|&&i| i >= universe.len()) {
            return Err(PhenomenonError::ForeignDraw(bad));
        }
        Ok(RandomPhenomenon { procedure_id: procedure_id.into(), universe, urn, provenance })
    }

    /// Urn holding `weights[i]` copies of element `i`.
    pub fn from_weights(procedure_id: impl Into<String>, universe: Universe, weights: &[u64]) -> Result<Self, PhenomenonError> {
        if weights.len() != universe.len() {
            return Err(ProbError::AtomCount { atoms: weights.len(), elements: universe.len() }.into());
        }
        let urn = weights
            .iter()
            .enumerate()
            .flat_map(|(i, &w)| std::iter::repeat_n(i, w as usize))
            .collect();
        Self::new(procedure_id, universe, urn, Provenance::None)
    }

    pub fn procedure_id(&self) -> &str {
        &self.procedure_id
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn urn_size(&self) -> usize {
        self.urn.len()
    }

    /// Conditional distribution of one realisation: urn counts over urn size.
    pub fn law(&self) -> Measure {
        let mut counts = vec![0u64; self.universe.len()];
        for &i in &self.urn {
            counts[i] += 1;
        }
        Measure::from_counts(self.universe.clone(), &counts).expect("non-empty urn")
    }

    /// Outcome stream (universe indices) for `seed`.
    pub fn sampler(&self, seed: u64) -> Sampler<'_> {
        Sampler { urn: &self.urn, rng: seeding::rng(seed) }
    }

    /// Universe made only of the elements seen in the first `draws` outcomes,
    /// in universe order.
    pub fn discovered_universe(&self, seed: u64, draws: usize) -> Result<Universe, PhenomenonError> {
        let mut seen = vec![false; self.universe.len()];
        for e in self.sampler(seed).take(draws) {
            seen[e] = true;
        }
        let found: Vec<&String> = self.universe.elements().iter().zip(seen).filter(|(_, s)| *s).map(|(e, _)| e).collect();
        Ok(Universe::new(found.into_iter().cloned())?)
    }
}

pub struct Sampler<'a> {
    urn: &'a [usize],
    rng: ChaCha8Rng,
}

impl Iterator for Sampler<'_> {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        Some(self.urn[self.rng.gen_range(0..self.urn.len())])
    }
}

/// Short content digest used as a provenance id.
pub fn content_id<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(&Sha256::digest(bytes)[..8])
}

/// Draw tiles of `p` with replacement and observe only their approximate
/// colour label.
pub fn probabilise_painting(p: &Painting) -> RandomPhenomenon {
    let universe = Universe::labels(p.q()).expect("q >= 1");
    let urn = p.tiles().iter().map(|t| (t.label - 1) as usize).collect();
    RandomPhenomenon::new(format!("ballot-box/{}", content_id(p)), universe, urn, Provenance::Painting(content_id(p)))
        .expect("labels lie in 1..=q")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub universe: Universe,
    pub n: u64,
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<usize>>,
}

impl FrequencyTable {
    pub fn new(universe: Universe) -> Self {
        let counts = vec![0; universe.len()];
        FrequencyTable { universe, n: 0, counts, history: None }
    }

    pub fn record(&mut self, e: usize) {
        self.counts[e] += 1;
        self.n += 1;
        if let Some(h) = self.history.as_mut() {
            h.push(e);
        }
    }

    pub fn relative_frequency(&self, i: usize) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.counts[i] as f64 / self.n as f64
        }
    }

    /// Additive merge of two tables over the same universe.
    pub fn merge(&mut self, other: &FrequencyTable) -> Result<(), PhenomenonError> {
        if self.universe != other.universe {
            return Err(PhenomenonError::UniverseMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n += other.n;
        self.history = None;
        Ok(())
    }
}

/// `n` realisations of `ph` from `seed`, tallied.
pub fn run_frequency_experiment(ph: &RandomPhenomenon, n: u64, seed: u64) -> FrequencyTable {
    let mut t = FrequencyTable::new(ph.universe.clone());
    for e in ph.sampler(seed).take(n as usize) {
        t.record(e);
    }
    t
}

/// As [`run_frequency_experiment`], also keeping the per-draw log.
pub fn run_frequency_experiment_logged(ph: &RandomPhenomenon, n: u64, seed: u64) -> FrequencyTable {
    let mut t = FrequencyTable::new(ph.universe.clone());
    t.history = Some(Vec::with_capacity(n as usize));
    for e in ph.sampler(seed).take(n as usize) {
        t.record(e);
    }
    t
}

/// Universe of labels, an event algebra over it, and the factual law
/// `{n(j) / T}` counted on the painting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactualSpace {
    pub universe: Universe,
    pub algebra: EventAlgebra,
    pub law: Measure,
}

/// Build the factual probability space of a painting. `generators` defaults
/// to the singletons, giving the full power-set algebra.
pub fn factual_space_from_painting(p: &Painting, generators: Option<&[Event]>) -> Result<FactualSpace, PhenomenonError> {
    let universe = Universe::labels(p.q())?;
    let hist: BTreeMap<u32, u64> = label_histogram(p);
    let counts: Vec<u64> = (1..=p.q()).map(|j| hist[&j]).collect();
    let law = Measure::from_counts(universe.clone(), &counts)?;
    let singletons = universe.singletons();
    let algebra = generate_algebra(&universe, generators.unwrap_or(&singletons), AlgebraOptions::default())?;
    let report = validate_measure(&law, &algebra);
    if !report.passed() {
        return Err(PhenomenonError::InvalidFactualSpace(report));
    }
    Ok(FactualSpace { universe, algebra, law })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelDivergence {
    pub label: String,
    pub count: u64,
    pub rel_freq: f64,
    pub law_prob: Rational,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub n: u64,
    /// `max_j |n(j)/N − p_j|`.
    pub sup_distance: f64,
    /// `½ Σ_j |n(j)/N − p_j|`.
    pub total_variation: f64,
    pub labels: Vec<LabelDivergence>,
}

/// Distances between observed relative frequencies and a law. Differences
/// are formed exactly before conversion to `f64`.
pub fn compare_law(t: &FrequencyTable, m: &Measure) -> Result<DivergenceReport, PhenomenonError> {
    if &t.universe != m.universe() {
        return Err(PhenomenonError::UniverseMismatch);
    }
    let mut labels = Vec::with_capacity(t.counts.len());
    let mut sup = 0.0f64;
    let mut l1 = Rational::zero();
    for (i, label) in t.universe.elements().iter().enumerate() {
        let freq = if t.n == 0 { Rational::zero() } else { Rational::from_counts(t.counts[i], t.n) };
        let p = m.atoms()[i].clone();
        let diff = (&freq - &p).abs();
        let d = diff.to_f64();
        sup = sup.max(d);
        l1 = &l1 + &diff;
        labels.push(LabelDivergence { label: label.clone(), count: t.counts[i], rel_freq: freq.to_f64(), law_prob: p, abs_diff: d });
    }
    Ok(DivergenceReport { n: t.n, sup_distance: sup, total_variation: l1.to_f64() / 2.0, labels })
}

/// CSV with columns `label,count,rel_freq,law_prob,abs_diff`.
pub fn write_frequency_csv<W: Write>(report: &DivergenceReport, out: W) -> Result<(), PhenomenonError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "count", "rel_freq", "law_prob", "abs_diff"])?;
    for row in &report.labels {
        w.write_record([
            row.label.clone(),
            row.count.to_string(),
            format!("{:.6}", row.rel_freq),
            format!("{:.6}", row.law_prob.to_f64()),
            format!("{:.6}", row.abs_diff),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
