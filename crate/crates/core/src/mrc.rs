//! Relativized descriptions: finite aspect-views, views as filters, and the
//! value-point clouds they produce.
//!
//! A [`View`] is blind to every aspect and value it was not built with.
//! Applying a view to a source [`Description`] keeps only what the view can
//! perceive; if nothing survives there is no mutual existence between the
//! generator and the view.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved aspect id used by [`restrict_view`] to keep a view's grid frame.
pub const FRAME_ASPECT: &str = "frame";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MrcError {
    #[error("aspect view {0:?} has no values")]
    EmptyValueSet(String),
    #[error("aspect view {aspect:?} repeats value {value:?}")]
    DuplicateValue { aspect: String, value: String },
    #[error("view has no aspects")]
    EmptyView,
    #[error("aspect {0:?} appears twice in one view")]
    DuplicateAspect(String),
    #[error("grid frame must have 2 or 3 axes with non-zero extents")]
    BadGridFrame,
    #[error("no mutual existence: the entity answers no aspect of the view")]
    NoMutualExistence,
    #[error("restriction keeps no qualification aspect")]
    EmptyKeepSet,
    #[error("unknown aspect {0:?}")]
    UnknownAspect(String),
    #[error("generator id must be non-empty")]
    EmptyGenerator,
}

/// One semantic axis of qualification with its finite value set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAspectView")]
pub struct AspectView {
    aspect_id: String,
    values: Vec<String>,
}

#[derive(Deserialize)]
struct RawAspectView {
    aspect_id: String,
    values: Vec<String>,
}

impl TryFrom<RawAspectView> for AspectView {
    type Error = MrcError;
    fn try_from(raw: RawAspectView) -> Result<Self, Self::Error> {
        AspectView::new(raw.aspect_id, raw.values)
    }
}

impl AspectView {
    pub fn new<I, S>(aspect_id: impl Into<String>, values: I) -> Result<Self, MrcError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let aspect_id = aspect_id.into();
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if values.is_empty() {
            return Err(MrcError::EmptyValueSet(aspect_id));
        }
        let mut seen = BTreeSet::new();
        for v in &values {
            if !seen.insert(v.as_str()) {
                return Err(MrcError::DuplicateValue { aspect: aspect_id, value: v.clone() });
            }
        }
        Ok(AspectView { aspect_id, values })
    }

    pub fn aspect_id(&self) -> &str {
        &self.aspect_id
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    /// Number of values the aspect can report.
    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    pub fn perceives(&self, value: &str) -> bool {
        self.values.iter().any(|v| v == value)
    }
}

/// Discrete spatial frame: 2 or 3 axes, each with a finite extent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridFrame {
    pub extents: Vec<u32>,
}

impl GridFrame {
    pub fn new(extents: Vec<u32>) -> Result<Self, MrcError> {
        if !(2..=3).contains(&extents.len()) || extents.contains(&0) {
            return Err(MrcError::BadGridFrame);
        }
        Ok(GridFrame { extents })
    }

    pub fn dims(&self) -> usize {
        self.extents.len()
    }
}

/// A finite union of aspect-views, optionally carrying a grid frame.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawView")]
pub struct View {
    aspects: Vec<AspectView>,
    grid_frame: Option<GridFrame>,
}

#[derive(Deserialize)]
struct RawView {
    aspects: Vec<AspectView>,
    #[serde(default)]
    grid_frame: Option<GridFrame>,
}

impl TryFrom<RawView> for View {
    type Error = MrcError;
    fn try_from(raw: RawView) -> Result<Self, Self::Error> {
        if let Some(g) = &raw.grid_frame {
            GridFrame::new(g.extents.clone())?;
        }
        View::new(raw.aspects, raw.grid_frame)
    }
}

impl View {
    /// Aspects are stored sorted by id so the JSON form is stable.
    pub fn new(mut aspects: Vec<AspectView>, grid_frame: Option<GridFrame>) -> Result<Self, MrcError> {
        if aspects.is_empty() {
            return Err(MrcError::EmptyView);
        }
        aspects.sort_by(|a, b| a.aspect_id.cmp(&b.aspect_id));
        for pair in aspects.windows(2) {
            if pair[0].aspect_id == pair[1].aspect_id {
                return Err(MrcError::DuplicateAspect(pair[0].aspect_id.clone()));
            }
        }
        Ok(View { aspects, grid_frame })
    }

    pub fn aspects(&self) -> &[AspectView] {
        &self.aspects
    }

    pub fn aspect(&self, id: &str) -> Option<&AspectView> {
        self.aspects
            .binary_search_by(|a| a.aspect_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.aspects[i])
    }

    pub fn aspect_ids(&self) -> impl Iterator<Item = &str> {
        self.aspects.iter().map(|a| a.aspect_id.as_str())
    }

    /// Number of aspect-views, `m`.
    pub fn len(&self) -> usize {
        self.aspects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aspects.is_empty()
    }

    pub fn grid_frame(&self) -> Option<&GridFrame> {
        self.grid_frame.as_ref()
    }

    pub fn has_grid_frame(&self) -> bool {
        self.grid_frame.is_some()
    }

    /// Union of two views. Aspects present in both must agree exactly; the
    /// first view's grid frame wins.
    pub fn union(&self, other: &View) -> Result<View, MrcError> {
        let mut aspects = self.aspects.clone();
        for a in &other.aspects {
            match self.aspect(&a.aspect_id) {
                Some(existing) if existing == a => {}
                Some(_) => return Err(MrcError::DuplicateAspect(a.aspect_id.clone())),
                None => aspects.push(a.clone()),
            }
        }
        View::new(aspects, self.grid_frame.clone().or_else(|| other.grid_frame.clone()))
    }
}

/// A cloud of (aspect, value) points produced by one generator on one entity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Description {
    pub generator_id: String,
    pub entity_id: String,
    pub points: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_coords: Option<Vec<u32>>,
}

impl Description {
    pub fn new(generator_id: impl Into<String>, entity_id: impl Into<String>) -> Self {
        Description {
            generator_id: generator_id.into(),
            entity_id: entity_id.into(),
            points: BTreeMap::new(),
            grid_coords: None,
        }
    }

    pub fn with_point(mut self, aspect: impl Into<String>, value: impl Into<String>) -> Self {
        self.points.insert(aspect.into(), value.into());
        self
    }

    pub fn with_coords(mut self, coords: Vec<u32>) -> Self {
        self.grid_coords = Some(coords);
        self
    }

    pub fn value(&self, aspect: &str) -> Option<&str> {
        self.points.get(aspect).map(String::as_str)
    }
}

/// The pair (generator, view) inside which descriptions are produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpistemicReferential {
    generator_id: String,
    view: View,
}

impl EpistemicReferential {
    pub fn new(generator_id: impl Into<String>, view: View) -> Result<Self, MrcError> {
        let generator_id = generator_id.into();
        if generator_id.is_empty() {
            return Err(MrcError::EmptyGenerator);
        }
        Ok(EpistemicReferential { generator_id, view })
    }

    pub fn generator_id(&self) -> &str {
        &self.generator_id
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    /// Qualify an entity inside this referential.
    pub fn describe(&self, raw_entity: &Description) -> Result<Description, MrcError> {
        let mut d = apply_view(&self.view, raw_entity)?;
        d.generator_id = self.generator_id.clone();
        Ok(d)
    }
}

/// Filter `raw_entity` through `view`.
///
/// Keeps each point whose aspect belongs to the view and whose value the
/// aspect can report. Grid coordinates survive only when the view carries a
/// frame.
pub fn apply_view(view: &View, raw_entity: &Description) -> Result<Description, MrcError> {
    let points: BTreeMap<String, String> = raw_entity
        .points
        .iter()
        .filter(|(aspect, value)| view.aspect(aspect).is_some_and(|a| a.perceives(value)))
        .map(|(a, v)| (a.clone(), v.clone()))
        .collect();
    if points.is_empty() {
        return Err(MrcError::NoMutualExistence);
    }
    Ok(Description {
        generator_id: raw_entity.generator_id.clone(),
        entity_id: raw_entity.entity_id.clone(),
        points,
        grid_coords: if view.has_grid_frame() { raw_entity.grid_coords.clone() } else { None },
    })
}

/// Simplify `view` down to the aspects named in `keep`. The grid frame is
/// retained only when `keep` contains [`FRAME_ASPECT`].
pub fn restrict_view(view: &View, keep: &BTreeSet<String>) -> Result<View, MrcError> {
    if keep.is_empty() {
        return Err(MrcError::EmptyKeepSet);
    }
    let keep_frame = keep.contains(FRAME_ASPECT);
    if keep_frame && !view.has_grid_frame() {
        return Err(MrcError::UnknownAspect(FRAME_ASPECT.to_string()));
    }
    let mut aspects = Vec::new();
    for id in keep.iter().filter(|id| id.as_str() != FRAME_ASPECT) {
        let a = view.aspect(id).ok_or_else(|| MrcError::UnknownAspect(id.clone()))?;
        aspects.push(a.clone());
    }
    if aspects.is_empty() {
        return Err(MrcError::EmptyKeepSet);
    }
    View::new(aspects, if keep_frame { view.grid_frame.clone() } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn aspect(id: &str, vals: &[&str]) -> AspectView {
        AspectView::new(id, vals.iter().copied()).unwrap()
    }

    fn tile_source() -> Description {
        Description::new("G_rho", "sigma_25")
            .with_point("colour_form", "cf_17")
            .with_point("approx_colour", "3")
            .with_coords(vec![2, 5])
    }

    #[test]
    fn approx_colour_view_strips_location() {
        let view = View::new(vec![aspect("approx_colour", &["1", "2", "3"])], None).unwrap();
        let d = apply_view(&view, &tile_source()).unwrap();
        assert_eq!(d.points.len(), 1);
        assert_eq!(d.value("approx_colour"), Some("3"));
        assert_eq!(d.grid_coords, None);
    }

    #[test]
    fn framed_view_keeps_coords() {
        let view = View::new(
            vec![aspect("approx_colour", &["1", "2", "3"])],
            Some(GridFrame::new(vec![10, 10]).unwrap()),
        )
        .unwrap();
        let d = apply_view(&view, &tile_source()).unwrap();
        assert_eq!(d.grid_coords, Some(vec![2, 5]));
    }

    #[test]
    fn disjoint_aspects_have_no_mutual_existence() {
        let view = View::new(vec![aspect("colour", &["red", "green"])], None).unwrap();
        let e = Description::new("G", "a").with_point("weight", "w_2");
        assert_eq!(apply_view(&view, &e), Err(MrcError::NoMutualExistence));
    }

    #[test]
    fn view_is_blind_to_unlisted_values() {
        let view = View::new(vec![aspect("approx_colour", &["1", "2"])], None).unwrap();
        assert_eq!(apply_view(&view, &tile_source()), Err(MrcError::NoMutualExistence));
    }

    #[test]
    fn aspect_view_invariants() {
        assert!(matches!(AspectView::new("c", Vec::<String>::new()), Err(MrcError::EmptyValueSet(_))));
        assert!(matches!(AspectView::new("c", ["a", "a"]), Err(MrcError::DuplicateValue { .. })));
        assert_eq!(aspect("c", &["a", "b", "c"]).cardinality(), 3);
        assert_eq!(View::new(vec![], None), Err(MrcError::EmptyView));
        assert!(matches!(
            View::new(vec![aspect("c", &["a"]), aspect("c", &["b"])], None),
            Err(MrcError::DuplicateAspect(_))
        ));
        assert_eq!(GridFrame::new(vec![10]), Err(MrcError::BadGridFrame));
        assert!(EpistemicReferential::new("", View::new(vec![aspect("c", &["a"])], None).unwrap()).is_err());
    }

    #[test]
    fn restrict_to_single_aspect() {
        let full = View::new(
            vec![
                aspect("location", &["1,1", "1,2"]),
                aspect("colour_form", &["cf_1", "cf_2"]),
                aspect("approx_colour", &["1", "2"]),
            ],
            Some(GridFrame::new(vec![1, 2]).unwrap()),
        )
        .unwrap();
        let vac = restrict_view(&full, &["approx_colour".to_string()].into()).unwrap();
        assert_eq!(vac.len(), 1);
        assert!(!vac.has_grid_frame());

        let all: BTreeSet<String> = full.aspect_ids().map(String::from).chain([FRAME_ASPECT.into()]).collect();
        assert_eq!(restrict_view(&full, &all).unwrap(), full);

        assert_eq!(restrict_view(&full, &BTreeSet::new()), Err(MrcError::EmptyKeepSet));
        assert_eq!(
            restrict_view(&full, &["weight".to_string()].into()),
            Err(MrcError::UnknownAspect("weight".into()))
        );
    }

    #[test]
    fn json_is_sorted_by_aspect_id() {
        let view = View::new(vec![aspect("z", &["1"]), aspect("a", &["1"])], None).unwrap();
        let js = serde_json::to_string(&view).unwrap();
        assert!(js.find("\"a\"").unwrap() < js.find("\"z\"").unwrap());
        let back: View = serde_json::from_str(&js).unwrap();
        assert_eq!(back, view);
        assert!(serde_json::from_str::<View>(r#"{"aspects":[]}"#).is_err());
    }

    // Random views over a fixed pool of aspects, and entities answering a
    // random subset of them.
    fn arb_view() -> impl Strategy<Value = View> {
        (prop::collection::btree_set(0usize..6, 1..6), any::<bool>()).prop_map(|(ids, framed)| {
            let aspects = ids
                .into_iter()
                .map(|i| AspectView::new(format!("g{i}"), (0..3).map(|k| format!("v{k}"))).unwrap())
                .collect();
            View::new(aspects, framed.then(|| GridFrame::new(vec![4, 4]).unwrap())).unwrap()
        })
    }

    fn arb_entity() -> impl Strategy<Value = Description> {
        (prop::collection::btree_map(0usize..8, 0usize..4, 0..8), any::<bool>()).prop_map(|(pts, located)| {
            let mut d = Description::new("G", "e");
            for (g, k) in pts {
                d.points.insert(format!("g{g}"), format!("v{k}"));
            }
            if located {
                d.grid_coords = Some(vec![1, 2]);
            }
            d
        })
    }

    proptest! {
        #[test]
        fn filtered_aspects_lie_in_view(v in arb_view(), e in arb_entity()) {
            if let Ok(d) = apply_view(&v, &e) {
                for a in d.points.keys() {
                    prop_assert!(v.aspect(a).is_some());
                }
                prop_assert_eq!(d.grid_coords.is_some(), v.has_grid_frame() && e.grid_coords.is_some());
            }
        }

        #[test]
        fn filtering_is_idempotent(v in arb_view(), e in arb_entity()) {
            if let Ok(once) = apply_view(&v, &e) {
                prop_assert_eq!(apply_view(&v, &once).unwrap(), once);
            }
        }

        #[test]
        fn restriction_commutes_with_filtering(
            v in arb_view(),
            e in arb_entity(),
            pick in prop::collection::vec(any::<bool>(), 6),
        ) {
            let keep: BTreeSet<String> = v
                .aspect_ids()
                .zip(pick.iter().cycle())
                .filter(|(_, k)| **k)
                .map(|(id, _)| id.to_string())
                .collect();
            prop_assume!(!keep.is_empty());
            let narrow = restrict_view(&v, &keep).unwrap();
            if let (Ok(full), Ok(small)) = (apply_view(&v, &e), apply_view(&narrow, &e)) {
                let mut expected = full.clone();
                expected.points.retain(|a, _| keep.contains(a));
                expected.grid_coords = None;
                prop_assert_eq!(small, expected);
            } else if let Ok(full) = apply_view(&v, &e) {
                prop_assert!(full.points.keys().all(|a| !keep.contains(a)));
            }
        }
    }
}
