//! Syntactic and semantic rule catalogs.
//!
//! Syntactic rules look only at the student's diagram. Semantic rules need a
//! reference solution and the matchings computed against it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::matching::{matched_endpoints, ElementMatching, RelationMatching};
use super::similarity::{is_similar, normalize_name};
use crate::model::{
    DiagramDocument, DiagramElement, DiagramRelation, ElementKind, RefRelation, ReferenceSolution, RelationKind,
    UseCaseFlavor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Syntactic,
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleCode {
    SynMissingName,
    SynDuplicateName,
    SynInvalidAssociation,
    SynActorInSystem,
    SynUsecaseOutsideSystem,
    SemMissingElement,
    SemMissingRelation,
    SemWrongUcRelationType,
    SemWrongUcRelationDirection,
    SemWrongSystem,
    SemForbiddenName,
    SemExtraRelation,
}

impl RuleCode {
    pub const SYNTACTIC: [RuleCode; 5] = [
        RuleCode::SynMissingName,
        RuleCode::SynDuplicateName,
        RuleCode::SynInvalidAssociation,
        RuleCode::SynActorInSystem,
        RuleCode::SynUsecaseOutsideSystem,
    ];

    pub const SEMANTIC: [RuleCode; 7] = [
        RuleCode::SemMissingElement,
        RuleCode::SemMissingRelation,
        RuleCode::SemWrongUcRelationType,
        RuleCode::SemWrongUcRelationDirection,
        RuleCode::SemWrongSystem,
        RuleCode::SemForbiddenName,
        RuleCode::SemExtraRelation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleCode::SynMissingName => "SYN_MISSING_NAME",
            RuleCode::SynDuplicateName => "SYN_DUPLICATE_NAME",
            RuleCode::SynInvalidAssociation => "SYN_INVALID_ASSOCIATION",
            RuleCode::SynActorInSystem => "SYN_ACTOR_IN_SYSTEM",
            RuleCode::SynUsecaseOutsideSystem => "SYN_USECASE_OUTSIDE_SYSTEM",
            RuleCode::SemMissingElement => "SEM_MISSING_ELEMENT",
            RuleCode::SemMissingRelation => "SEM_MISSING_RELATION",
            RuleCode::SemWrongUcRelationType => "SEM_WRONG_UC_RELATION_TYPE",
            RuleCode::SemWrongUcRelationDirection => "SEM_WRONG_UC_RELATION_DIRECTION",
            RuleCode::SemWrongSystem => "SEM_WRONG_SYSTEM",
            RuleCode::SemForbiddenName => "SEM_FORBIDDEN_NAME",
            RuleCode::SemExtraRelation => "SEM_EXTRA_RELATION",
        }
    }

    pub fn severity(self) -> Severity {
        if Self::SYNTACTIC.contains(&self) {
            Severity::Syntactic
        } else {
            Severity::Semantic
        }
    }
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RuleCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleCode::SYNTACTIC
            .iter()
            .chain(RuleCode::SEMANTIC.iter())
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown rule code '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostic {
    pub severity: Severity,
    pub rule: RuleCode,
    /// Diagram element and relation ids involved.
    pub subject_ids: Vec<String>,
    pub ref_id: Option<String>,
    pub message: String,
    /// Normalized names of the involved elements (`#id` for unnamed ones).
    /// Stable across checks, so it anchors error identity.
    pub subject_names: Vec<String>,
}

impl Diagnostic {
    fn new(rule: RuleCode, message: String) -> Self {
        Diagnostic {
            severity: rule.severity(),
            rule,
            subject_ids: Vec::new(),
            ref_id: None,
            message,
            subject_names: Vec::new(),
        }
    }

    fn element(mut self, el: &DiagramElement) -> Self {
        self.subject_ids.push(el.id.clone());
        self.subject_names.push(anchor_name(el));
        self
    }

    fn relation(mut self, rel: &DiagramRelation, doc: &DiagramDocument) -> Self {
        self.subject_ids.push(rel.id.clone());
        self.endpoints(rel.source_id(), rel.target_id(), doc)
    }

    fn endpoints(mut self, a: &str, b: &str, doc: &DiagramDocument) -> Self {
        for id in [a, b] {
            if let Some(el) = doc.element(id) {
                self = self.element(el);
            }
        }
        self
    }

    fn sort_key(&self) -> (Severity, RuleCode, &[String], &[String], Option<&str>, &str) {
        (
            self.severity,
            self.rule,
            &self.subject_names,
            &self.subject_ids,
            self.ref_id.as_deref(),
            &self.message,
        )
    }
}

pub(crate) fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

fn anchor_name(el: &DiagramElement) -> String {
    let norm = normalize_name(&el.name);
    if norm.is_empty() {
        format!("#{}", el.id)
    } else {
        norm
    }
}

fn quoted(doc: &DiagramDocument, id: &str) -> String {
    format!("'{}'", doc.display_name(id))
}

fn capitalized(kind: ElementKind) -> &'static str {
    match kind {
        ElementKind::Actor => "Actor",
        ElementKind::UseCase => "Use case",
        ElementKind::System => "System",
    }
}

/// Whether a relation's kind fits its endpoint kinds.
pub fn relation_allowed(kind: RelationKind, source: ElementKind, target: ElementKind) -> bool {
    use ElementKind::*;
    match kind {
        RelationKind::Association => matches!(
            (source, target),
            (Actor, UseCase) | (UseCase, Actor) | (System, UseCase) | (UseCase, System)
        ),
        RelationKind::Generalization => source == Actor && target == Actor,
        RelationKind::Include | RelationKind::Extend => source == UseCase && target == UseCase,
    }
}

fn relation_is_valid(rel: &DiagramRelation, doc: &DiagramDocument) -> bool {
    match (doc.element(rel.source_id()), doc.element(rel.target_id())) {
        (Some(s), Some(t)) => relation_allowed(rel.kind, s.kind, t.kind),
        _ => false,
    }
}

fn allowed_description(kind: RelationKind) -> &'static str {
    match kind {
        RelationKind::Association => "associations join an actor or a system with a use case",
        RelationKind::Generalization => "generalizations join two actors",
        RelationKind::Include | RelationKind::Extend => "includes and extends join two use cases",
    }
}

/// Reference-independent structural checks. Output is sorted.
pub fn check_syntax(doc: &DiagramDocument) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut by_name: BTreeMap<(ElementKind, String), Vec<&DiagramElement>> = BTreeMap::new();
    for el in &doc.elements {
        let norm = normalize_name(&el.name);
        if norm.is_empty() {
            out.push(
                Diagnostic::new(
                    RuleCode::SynMissingName,
                    format!("{} {} has no name.", capitalized(el.kind), quoted(doc, &el.id)),
                )
                .element(el),
            );
        } else {
            by_name.entry((el.kind, norm)).or_default().push(el);
        }

        match (el.kind, &el.owner) {
            (ElementKind::Actor, Some(owner)) => out.push(
                Diagnostic::new(
                    RuleCode::SynActorInSystem,
                    format!(
                        "Actor {} is drawn inside system {}; actors belong outside system boundaries.",
                        quoted(doc, &el.id),
                        quoted(doc, owner)
                    ),
                )
                .element(el),
            ),
            (ElementKind::UseCase, None) => out.push(
                Diagnostic::new(
                    RuleCode::SynUsecaseOutsideSystem,
                    format!("Use case {} is not inside any system.", quoted(doc, &el.id)),
                )
                .element(el),
            ),
            _ => {}
        }
    }

    for ((kind, _), group) in by_name.iter().filter(|(_, g)| g.len() > 1) {
        let mut d = Diagnostic::new(
            RuleCode::SynDuplicateName,
            format!(
                "{} name {} is used by {} elements; names must be unique.",
                capitalized(*kind),
                quoted(doc, &group[0].id),
                group.len()
            ),
        );
        for el in group {
            d = d.element(el);
        }
        out.push(d);
    }

    for rel in &doc.relations {
        if !relation_is_valid(rel, doc) {
            let kind_of = |id: &str| doc.element(id).map(|e| e.kind.label()).unwrap_or("element");
            out.push(
                Diagnostic::new(
                    RuleCode::SynInvalidAssociation,
                    format!(
                        "The {} from {} {} to {} {} is not allowed: {}.",
                        rel.kind,
                        kind_of(rel.source_id()),
                        quoted(doc, rel.source_id()),
                        kind_of(rel.target_id()),
                        quoted(doc, rel.target_id()),
                        allowed_description(rel.kind)
                    ),
                )
                .relation(rel, doc),
            );
        }
    }

    sort_diagnostics(&mut out);
    out
}

fn other_flavor(flavor: UseCaseFlavor) -> UseCaseFlavor {
    match flavor {
        UseCaseFlavor::Include => UseCaseFlavor::Extend,
        UseCaseFlavor::Extend => UseCaseFlavor::Include,
    }
}

/// Reference-dependent checks. Output is sorted.
pub fn check_semantics(
    reference: &ReferenceSolution,
    doc: &DiagramDocument,
    matching: &ElementMatching,
    relations: &RelationMatching,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for ref_id in &matching.unmatched_refs {
        if let Some(r) = reference.element(ref_id) {
            let mut d = Diagnostic::new(
                RuleCode::SemMissingElement,
                format!(
                    "The diagram has no {} matching the expected '{}'.",
                    r.kind,
                    r.name.trim()
                ),
            );
            d.ref_id = Some(ref_id.clone());
            d.subject_names.push(normalize_name(&r.name));
            out.push(d);
        }
    }

    for &i in &relations.unmatched {
        let rel = &reference.relations[i];
        let Some((from, to)) = matched_endpoints(rel, matching) else {
            continue;
        };
        if let RefRelation::UseCaseUseCase { flavor, .. } = rel {
            let between: Vec<&DiagramRelation> = doc
                .relations
                .iter()
                .filter(|c| c.connects(from, to) && UseCaseFlavor::from_relation_kind(c.kind).is_some())
                .collect();
            let find = |forward: bool, f: UseCaseFlavor| {
                between
                    .iter()
                    .copied()
                    .find(|c| (c.source_id() == from) == forward && c.kind == f.relation_kind())
            };
            // Wrong flavor in the right direction, then right flavor reversed,
            // then wrong flavor reversed.
            let found = find(true, other_flavor(*flavor))
                .map(|c| (RuleCode::SemWrongUcRelationType, c))
                .or_else(|| find(false, *flavor).map(|c| (RuleCode::SemWrongUcRelationDirection, c)))
                .or_else(|| find(false, other_flavor(*flavor)).map(|c| (RuleCode::SemWrongUcRelationType, c)));
            if let Some((rule, c)) = found {
                let message = if rule == RuleCode::SemWrongUcRelationType {
                    format!(
                        "Use cases {} and {} are connected by an {}, but {} should {} {}.",
                        quoted(doc, from),
                        quoted(doc, to),
                        c.kind,
                        quoted(doc, from),
                        flavor.relation_kind(),
                        quoted(doc, to)
                    )
                } else {
                    format!(
                        "The {} between {} and {} points the wrong way: {} should {} {}.",
                        c.kind,
                        quoted(doc, from),
                        quoted(doc, to),
                        quoted(doc, from),
                        c.kind,
                        quoted(doc, to)
                    )
                };
                out.push(Diagnostic::new(rule, message).relation(c, doc));
                continue;
            }
        }
        let expectation = match rel {
            RefRelation::ActorUseCase { supporting: true, .. } => format!(
                "{} should support use case {} through an association.",
                quoted(doc, from),
                quoted(doc, to)
            ),
            RefRelation::ActorUseCase { .. } => format!(
                "{} should be associated with use case {}.",
                quoted(doc, from),
                quoted(doc, to)
            ),
            RefRelation::ActorActor { .. } => format!(
                "Actor {} should be a specialization of actor {}.",
                quoted(doc, from),
                quoted(doc, to)
            ),
            RefRelation::UseCaseUseCase { flavor, .. } => format!(
                "Use case {} should {} use case {}.",
                quoted(doc, from),
                flavor.relation_kind(),
                quoted(doc, to)
            ),
        };
        out.push(Diagnostic::new(RuleCode::SemMissingRelation, expectation).endpoints(from, to, doc));
    }

    for r in reference.elements.iter().filter(|r| r.kind == ElementKind::UseCase) {
        let Some(el) = matching.element_for(&r.ref_id).and_then(|id| doc.element(id)) else {
            continue;
        };
        let Some(owner) = &el.owner else { continue };
        let expected = r.owning_system.as_deref();
        let expected_match = expected.and_then(|e| matching.element_for(e));
        let wrong = match matching.ref_for(owner) {
            Some(owner_ref) => Some(owner_ref) != expected,
            None => expected_match.is_some(),
        };
        if !wrong {
            continue;
        }
        let owner_is_external = matching
            .ref_for(owner)
            .and_then(|o| reference.element(o))
            .is_some_and(|o| o.external);
        let expected_name = match (expected_match, expected.and_then(|e| reference.element(e))) {
            (Some(id), _) => quoted(doc, id),
            (None, Some(e)) => format!("'{}'", e.name.trim()),
            (None, None) => "another system".to_string(),
        };
        let message = if owner_is_external {
            format!(
                "Use case {} is inside {}, an external system that cannot contain use cases; it belongs to {}.",
                quoted(doc, &el.id),
                quoted(doc, owner),
                expected_name
            )
        } else {
            format!(
                "Use case {} is inside system {} but belongs to {}.",
                quoted(doc, &el.id),
                quoted(doc, owner),
                expected_name
            )
        };
        let mut d = Diagnostic::new(RuleCode::SemWrongSystem, message).element(el);
        if let Some(sys) = doc.element(owner) {
            d = d.element(sys);
        }
        d.ref_id = Some(r.ref_id.clone());
        out.push(d);
    }

    for el in &doc.elements {
        if normalize_name(&el.name).is_empty() {
            continue;
        }
        if reference.forbidden_names.iter().any(|f| is_similar(f, &el.name)) {
            out.push(
                Diagnostic::new(
                    RuleCode::SemForbiddenName,
                    format!(
                        "{} {} uses a name that is not allowed in this exercise.",
                        capitalized(el.kind),
                        quoted(doc, &el.id)
                    ),
                )
                .element(el),
            );
        }
    }

    let expected_pairs: BTreeSet<(&str, &str)> = reference
        .relations
        .iter()
        .filter_map(|r| matched_endpoints(r, matching))
        .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
        .collect();
    let matched_ids = matching.matched_elements();
    for rel in &doc.relations {
        let (a, b) = (rel.source_id(), rel.target_id());
        if !matched_ids.contains(a) || !matched_ids.contains(b) || !relation_is_valid(rel, doc) {
            continue;
        }
        let key = if a <= b { (a, b) } else { (b, a) };
        if !expected_pairs.contains(&key) {
            out.push(
                Diagnostic::new(
                    RuleCode::SemExtraRelation,
                    format!(
                        "The {} between {} and {} is not part of the expected model.",
                        rel.kind,
                        quoted(doc, a),
                        quoted(doc, b)
                    ),
                )
                .relation(rel, doc),
            );
        }
    }

    sort_diagnostics(&mut out);
    out
}
