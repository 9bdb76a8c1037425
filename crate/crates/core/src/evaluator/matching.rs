//! Greedy element matching and exact relation matching.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::similarity::{similarity, MATCH_THRESHOLD};
use crate::model::{DiagramDocument, DiagramRelation, RefElement, RefRelation, ReferenceSolution, RelationKind};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementMatching {
    /// refId -> diagram element id.
    pub pairs: BTreeMap<String, String>,
    /// Unmatched refIds, in authored order.
    pub unmatched_refs: Vec<String>,
    pub similarity_used: BTreeMap<String, f64>,
}

impl ElementMatching {
    pub fn element_for(&self, ref_id: &str) -> Option<&str> {
        self.pairs.get(ref_id).map(String::as_str)
    }

    /// Reverse lookup: which reference element a diagram element was matched to.
    pub fn ref_for(&self, element_id: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(_, el)| el.as_str() == element_id)
            .map(|(r, _)| r.as_str())
    }

    pub fn matched_elements(&self) -> BTreeSet<&str> {
        self.pairs.values().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationMatching {
    /// Indices into the reference relation list.
    pub matched: Vec<usize>,
    pub unmatched: Vec<usize>,
    /// Reference relation index -> diagram relation id that satisfied it.
    pub pairs: BTreeMap<usize, String>,
}

/// Best similarity of `name` against a reference element's name and alternatives.
pub fn best_similarity(reference: &RefElement, name: &str) -> f64 {
    reference
        .accepted_names()
        .map(|candidate| similarity(candidate, name))
        .fold(0.0, f64::max)
}

/// Walks reference elements in authored order. Each one takes the first
/// unclaimed diagram element of the same kind, in canonical order, whose
/// name (or an alternative) is similar enough.
pub fn match_elements(reference: &ReferenceSolution, doc: &DiagramDocument) -> ElementMatching {
    let mut matching = ElementMatching::default();
    let mut claimed: BTreeSet<&str> = BTreeSet::new();
    for r in &reference.elements {
        let found = doc
            .elements_of(r.kind)
            .filter(|el| !claimed.contains(el.id.as_str()))
            .map(|el| (el, best_similarity(r, &el.name)))
            .find(|(_, sim)| *sim >= MATCH_THRESHOLD);
        match found {
            Some((el, sim)) => {
                claimed.insert(&el.id);
                matching.pairs.insert(r.ref_id.clone(), el.id.clone());
                matching.similarity_used.insert(r.ref_id.clone(), sim);
            }
            None => matching.unmatched_refs.push(r.ref_id.clone()),
        }
    }
    matching
}

/// Whether a diagram relation between the matched endpoints satisfies a
/// reference relation. `from`/`to` are the matched element ids in the
/// reference's (source, target) order.
pub(crate) fn satisfies(rel: &RefRelation, candidate: &DiagramRelation, from: &str, to: &str) -> bool {
    let forward = candidate.source_id() == from && candidate.target_id() == to;
    match rel {
        RefRelation::ActorUseCase { .. } => candidate.kind == RelationKind::Association && candidate.connects(from, to),
        RefRelation::ActorActor { .. } => candidate.kind == RelationKind::Generalization && forward,
        RefRelation::UseCaseUseCase { flavor, .. } => candidate.kind == flavor.relation_kind() && forward,
    }
}

/// Matched endpoint ids of a reference relation, if both endpoints are matched.
pub(crate) fn matched_endpoints<'m>(rel: &RefRelation, matching: &'m ElementMatching) -> Option<(&'m str, &'m str)> {
    let (a, b) = rel.endpoints();
    Some((matching.element_for(a)?, matching.element_for(b)?))
}

pub fn match_relations(
    reference: &ReferenceSolution,
    doc: &DiagramDocument,
    matching: &ElementMatching,
) -> RelationMatching {
    let mut out = RelationMatching::default();
    for (i, rel) in reference.relations.iter().enumerate() {
        let hit = matched_endpoints(rel, matching)
            .and_then(|(from, to)| doc.relations.iter().find(|c| satisfies(rel, c, from, to)));
        match hit {
            Some(candidate) => {
                out.matched.push(i);
                out.pairs.insert(i, candidate.id.clone());
            }
            None => out.unmatched.push(i),
        }
    }
    out
}
