//! Finite probability spaces: universes, event algebras, rational measures
//! and the axiom checks run against them.

mod lln;
mod structures;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

pub use lln::{find_n0, meta_probability, N0Search, SearchOptions, DEFAULT_N0_CAP, DEFAULT_N0_START};
pub use structures::{count_statistical_structures, structure_index, SequenceStatistics};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("universe is empty")]
    EmptyUniverse,
    #[error("element {0:?} appears twice in the universe")]
    DuplicateElement(String),
    #[error("{0:?} is not an element of the universe")]
    ForeignElement(String),
    #[error("measure has {atoms} atoms for a universe of {elements} elements")]
    AtomCount { atoms: usize, elements: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no tested N up to {cap} reached the target meta-probability")]
    NotReached { cap: u64, history: Vec<(u64, f64)> },
}

/// Finite, duplicate-free, ordered set of elementary-event ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Universe {
    elements: Vec<String>,
}

impl TryFrom<Vec<String>> for Universe {
    type Error = ProbError;
    fn try_from(v: Vec<String>) -> Result<Self, ProbError> {
        Universe::new(v)
    }
}

impl From<Universe> for Vec<String> {
    fn from(u: Universe) -> Self {
        u.elements
    }
}

impl Universe {
    pub fn new<I, S>(elements: I) -> Result<Self, ProbError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if elements.is_empty() {
            return Err(ProbError::EmptyUniverse);
        }
        let mut seen = BTreeSet::new();
        for e in &elements {
            if !seen.insert(e.as_str()) {
                return Err(ProbError::DuplicateElement(e.clone()));
            }
        }
        Ok(Universe { elements })
    }

    /// Labels `1..=q` as decimal strings.
    pub fn labels(q: u32) -> Result<Self, ProbError> {
        Universe::new((1..=q).map(|j| j.to_string()))
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == id)
    }

    /// The event made of the named elements.
    pub fn event<S: AsRef<str>>(&self, ids: &[S]) -> Result<Event, ProbError> {
        let mut e = Event::empty(self.len());
        for id in ids {
            let i = self.index_of(id.as_ref()).ok_or_else(|| ProbError::ForeignElement(id.as_ref().to_string()))?;
            e.insert(i);
        }
        Ok(e)
    }

    pub fn full(&self) -> Event {
        Event::full(self.len())
    }

    pub fn singletons(&self) -> Vec<Event> {
        (0..self.len()).map(|i| Event::singleton(self.len(), i)).collect()
    }

    pub fn names(&self, e: &Event) -> Vec<&str> {
        e.iter().map(|i| self.elements[i].as_str()).collect()
    }
}

/// Subset of a universe of `size` elements, as a bitset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    size: usize,
    words: Vec<u64>,
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Event {
    pub fn empty(size: usize) -> Self {
        Event { size, words: vec![0; size.div_ceil(64)] }
    }

    pub fn full(size: usize) -> Self {
        let mut e = Event::empty(size);
        for i in 0..size {
            e.insert(i);
        }
        e
    }

    pub fn singleton(size: usize, i: usize) -> Self {
        let mut e = Event::empty(size);
        e.insert(i);
        e
    }

    pub fn from_indices(size: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut e = Event::empty(size);
        for i in idx {
            e.insert(i);
        }
        e
    }

    pub fn universe_size(&self) -> usize {
        self.size
    }

    /// Panics if `i` is outside the universe.
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.size, "element {i} outside universe of {}", self.size);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.size && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(|&i| self.contains(i))
    }

    pub fn union(&self, other: &Event) -> Event {
        Event { size: self.size, words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect() }
    }

    pub fn intersection(&self, other: &Event) -> Event {
        Event { size: self.size, words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() }
    }

    pub fn complement(&self) -> Event {
        let mut e = Event::full(self.size);
        for (w, s) in e.words.iter_mut().zip(&self.words) {
            *w &= !s;
        }
        e
    }

    pub fn is_disjoint(&self, other: &Event) -> bool {
        self.intersection(other).is_empty()
    }
}

/// A family of events containing `U` and `∅`, closed under pairwise union
/// and intersection (and complement, when requested).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventAlgebra {
    universe: Universe,
    events: BTreeSet<Event>,
    complement_closed: bool,
}

impl EventAlgebra {
    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn events(&self) -> &BTreeSet<Event> {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn contains(&self, e: &Event) -> bool {
        self.events.contains(e)
    }

    pub fn complement_closed(&self) -> bool {
        self.complement_closed
    }

    /// Re-checks every closure property by a pairwise scan.
    pub fn is_closed(&self) -> bool {
        let n = self.universe.len();
        if !self.events.contains(&Event::empty(n)) || !self.events.contains(&Event::full(n)) {
            return false;
        }
        for a in &self.events {
            if self.complement_closed && !self.events.contains(&a.complement()) {
                return false;
            }
            for b in &self.events {
                if !self.events.contains(&a.union(b)) || !self.events.contains(&a.intersection(b)) {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraOptions {
    /// Also close under complement (the textbook algebra).
    pub complement_closure: bool,
}

/// Smallest family containing `generators`, `U` and `∅` that is closed under
/// union and intersection.
pub fn generate_algebra(universe: &Universe, generators: &[Event], options: AlgebraOptions) -> Result<EventAlgebra, ProbError> {
    let n = universe.len();
    for g in generators {
        if g.universe_size() != n {
            return Err(ProbError::ForeignElement(format!("event over {} elements", g.universe_size())));
        }
    }
    let mut events: BTreeSet<Event> = BTreeSet::new();
    let mut list: Vec<Event> = Vec::new();
    let add = |e: Event, events: &mut BTreeSet<Event>, list: &mut Vec<Event>| {
        if events.insert(e.clone()) {
            list.push(e);
        }
    };
    add(Event::empty(n), &mut events, &mut list);
    add(Event::full(n), &mut events, &mut list);
    for g in generators {
        add(g.clone(), &mut events, &mut list);
    }
    // each event is combined once with every event discovered before it
    let mut i = 0;
    while i < list.len() {
        let a = list[i].clone();
        if options.complement_closure {
            add(a.complement(), &mut events, &mut list);
        }
        for j in 0..i {
            let b = list[j].clone();
            add(a.union(&b), &mut events, &mut list);
            add(a.intersection(&b), &mut events, &mut list);
        }
        i += 1;
    }
    Ok(EventAlgebra { universe: universe.clone(), events, complement_closed: options.complement_closure })
}

/// Atomic measure with exact rational atom probabilities. Construction only
/// checks shape; [`validate_measure`] checks the axioms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measure {
    universe: Universe,
    atoms: Vec<Rational>,
}

impl Measure {
    pub fn new(universe: Universe, atoms: Vec<Rational>) -> Result<Self, ProbError> {
        if atoms.len() != universe.len() {
            return Err(ProbError::AtomCount { atoms: atoms.len(), elements: universe.len() });
        }
        Ok(Measure { universe, atoms })
    }

    /// Atoms `count_i / Σ count`.
    pub fn from_counts(universe: Universe, counts: &[u64]) -> Result<Self, ProbError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(ProbError::InvalidParameter("counts sum to zero".into()));
        }
        Measure::new(universe, counts.iter().map(|&c| Rational::from_counts(c, total)).collect())
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn atoms(&self) -> &[Rational] {
        &self.atoms
    }

    pub fn atom(&self, id: &str) -> Option<&Rational> {
        self.universe.index_of(id).map(|i| &self.atoms[i])
    }

    pub fn total(&self) -> Rational {
        self.atoms.iter().sum()
    }
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    universe: Universe,
    atoms: BTreeMap<String, Rational>,
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawMeasure {
            universe: self.universe.clone(),
            atoms: self.universe.elements.iter().cloned().zip(self.atoms.iter().cloned()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut raw = RawMeasure::deserialize(d)?;
        let mut atoms = Vec::with_capacity(raw.universe.len());
        for e in raw.universe.elements() {
            let p = raw
                .atoms
                .remove(e)
                .ok_or_else(|| serde::de::Error::custom(format!("no atom for element {e:?}")))?;
            atoms.push(p);
        }
        if let Some(extra) = raw.atoms.keys().next() {
            return Err(serde::de::Error::custom(format!("atom {extra:?} is not in the universe")));
        }
        Measure::new(raw.universe, atoms).map_err(serde::de::Error::custom)
    }
}

/// `p(event)`, the sum of its atoms.
pub fn event_probability(m: &Measure, event: &Event) -> Result<Rational, ProbError> {
    if event.universe_size() != m.universe.len() {
        return Err(ProbError::ForeignElement(format!(
            "event over {} elements, universe has {}",
            event.universe_size(),
            m.universe.len()
        )));
    }
    Ok(event.iter().map(|i| &m.atoms[i]).sum())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub events_checked: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn status(&self, name: &str) -> Option<&CheckStatus> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.status)
    }
}

/// Check range, norm, `p(∅) = 0`, subadditivity over all event pairs and
/// exact additivity on disjoint pairs. The converse (equality only for
/// disjoint pairs) is checked only when every atom is strictly positive,
/// since zero-probability atoms make it false.
pub fn validate_measure(m: &Measure, alg: &EventAlgebra) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, status: CheckStatus, detail: String| {
        checks.push(Check { name: name.to_string(), status, detail });
    };
    let verdict = |ok: bool| if ok { CheckStatus::Pass } else { CheckStatus::Fail };

    if m.universe != alg.universe {
        push("universe", CheckStatus::Fail, "measure and algebra are built on different universes".into());
        return ValidationReport { events_checked: 0, checks };
    }
    push("universe", CheckStatus::Pass, String::new());

    let zero = Rational::zero();
    let one = Rational::one();
    let out_of_range: Vec<String> = m
        .universe
        .elements
        .iter()
        .zip(&m.atoms)
        .filter(|(_, p)| **p < zero || **p > one)
        .map(|(e, p)| format!("{e}={p}"))
        .collect();
    push("range", verdict(out_of_range.is_empty()), out_of_range.join(", "));

    let total = m.total();
    push("norm", verdict(total == one), format!("p(U) = {total}"));
    let empty = event_probability(m, &Event::empty(m.universe.len())).expect("same universe");
    push("empty", verdict(empty == zero), format!("p(∅) = {empty}"));

    let events: Vec<&Event> = alg.events.iter().collect();
    let probs: BTreeMap<&Event, Rational> =
        events.iter().map(|e| (*e, event_probability(m, e).expect("same universe"))).collect();
    let p = |e: &Event| probs.get(e).cloned().unwrap_or_else(|| event_probability(m, e).expect("same universe"));

    let mut sub_fail = None;
    let mut add_fail = None;
    let mut iff_fail = None;
    for (i, a) in events.iter().enumerate() {
        for b in &events[i..] {
            let pa = &probs[*a];
            let pb = &probs[*b];
            let sum = pa + pb;
            let pu = p(&a.union(b));
            let disjoint = a.is_disjoint(b);
            if pu > sum && sub_fail.is_none() {
                sub_fail = Some(format!("{a:?} ∪ {b:?}: {pu} > {sum}"));
            }
            if disjoint && pu != sum && add_fail.is_none() {
                add_fail = Some(format!("{a:?}, {b:?}: {pu} != {sum}"));
            }
            if !disjoint && pu == sum && iff_fail.is_none() {
                iff_fail = Some(format!("{a:?}, {b:?} overlap yet p(A∪B) = p(A) + p(B)"));
            }
        }
    }
    push("subadditivity", verdict(sub_fail.is_none()), sub_fail.unwrap_or_default());
    push("disjoint_additivity", verdict(add_fail.is_none()), add_fail.unwrap_or_default());
    if m.atoms.iter().all(|a| *a > zero) {
        push("equality_iff_disjoint", verdict(iff_fail.is_none()), iff_fail.unwrap_or_default());
    } else {
        push("equality_iff_disjoint", CheckStatus::Skipped, "measure has zero-probability atoms".into());
    }
    ValidationReport { events_checked: events.len(), checks }
}
