//! Domain types shared by the parser, evaluator, authoring and service layers.
//!
//! Two families live here: the student-side [`DiagramDocument`] (what a
//! student drew, as parsed from an Apollon export) and the teacher-side
//! [`ReferenceSolution`] / [`ExerciseSpec`] (what the evaluator expects).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::evaluator::normalize_name;

/// Record fields the engine does not interpret (bounds, styling, ...). Kept
/// verbatim so a document survives a parse/serialize round trip.
pub type OpaqueFields = Map<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Actor,
    UseCase,
    System,
}

impl ElementKind {
    pub const ALL: [ElementKind; 3] = [ElementKind::Actor, ElementKind::UseCase, ElementKind::System];

    pub fn label(self) -> &'static str {
        match self {
            ElementKind::Actor => "actor",
            ElementKind::UseCase => "use case",
            ElementKind::System => "system",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramElement {
    pub id: String,
    pub kind: ElementKind,
    pub name: String,
    /// Id of the containing system, if any.
    pub owner: Option<String>,
    pub extra: OpaqueFields,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    Association,
    Include,
    Extend,
    Generalization,
}

impl RelationKind {
    pub fn label(self) -> &'static str {
        match self {
            RelationKind::Association => "association",
            RelationKind::Include => "include",
            RelationKind::Extend => "extend",
            RelationKind::Generalization => "generalization",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One end of a relationship: the referenced element id plus whatever else
/// the editor stored there (connection direction, anchor points).
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub element: String,
    pub extra: OpaqueFields,
}

impl Endpoint {
    pub fn new(element: impl Into<String>) -> Self {
        Endpoint {
            element: element.into(),
            extra: OpaqueFields::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramRelation {
    pub id: String,
    pub kind: RelationKind,
    pub source: Endpoint,
    pub target: Endpoint,
    pub extra: OpaqueFields,
}

impl DiagramRelation {
    pub fn source_id(&self) -> &str {
        &self.source.element
    }

    pub fn target_id(&self) -> &str {
        &self.target.element
    }

    /// True when the relation joins `a` and `b`, in either direction.
    pub fn connects(&self, a: &str, b: &str) -> bool {
        (self.source_id() == a && self.target_id() == b) || (self.source_id() == b && self.target_id() == a)
    }
}

pub const USE_CASE_NOTATION: &str = "UseCaseDiagram";

/// A parsed student diagram. Elements and relations are kept in canonical
/// order: ascending lexicographic id.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramDocument {
    pub version: String,
    pub notation: String,
    pub elements: Vec<DiagramElement>,
    pub relations: Vec<DiagramRelation>,
    /// Top-level fields other than `version`, `type`, `elements` and `relationships`.
    pub extra: OpaqueFields,
}

impl Default for DiagramDocument {
    fn default() -> Self {
        DiagramDocument {
            version: "3.0.0".to_string(),
            notation: USE_CASE_NOTATION.to_string(),
            elements: Vec::new(),
            relations: Vec::new(),
            extra: OpaqueFields::new(),
        }
    }
}

impl DiagramDocument {
    pub fn element(&self, id: &str) -> Option<&DiagramElement> {
        self.elements
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.elements[i])
    }

    pub fn elements_of(&self, kind: ElementKind) -> impl Iterator<Item = &DiagramElement> {
        self.elements.iter().filter(move |e| e.kind == kind)
    }

    /// Restores canonical order after elements or relations were pushed by hand.
    pub fn canonicalize(&mut self) {
        self.elements.sort_by(|a, b| a.id.cmp(&b.id));
        self.relations.sort_by(|a, b| a.id.cmp(&b.id));
    }

    /// Display name for an element id, falling back to the id for unnamed
    /// or unknown elements.
    pub fn display_name(&self, id: &str) -> String {
        match self.element(id) {
            Some(e) if !e.name.trim().is_empty() => e.name.trim().to_string(),
            Some(e) => format!("<unnamed {} {}>", e.kind, e.id),
            None => id.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefElement {
    pub ref_id: String,
    pub kind: ElementKind,
    pub name: String,
    #[serde(default)]
    pub alternatives: Vec<String>,
    #[serde(default)]
    pub external: bool,
    #[serde(default)]
    pub owning_system: Option<String>,
}

impl RefElement {
    pub fn new(ref_id: impl Into<String>, kind: ElementKind, name: impl Into<String>) -> Self {
        RefElement {
            ref_id: ref_id.into(),
            kind,
            name: name.into(),
            alternatives: Vec::new(),
            external: false,
            owning_system: None,
        }
    }

    pub fn owned_by(mut self, system: impl Into<String>) -> Self {
        self.owning_system = Some(system.into());
        self
    }

    pub fn external(mut self) -> Self {
        self.external = true;
        self
    }

    pub fn with_alternatives<I, S>(mut self, alts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.alternatives = alts.into_iter().map(Into::into).collect();
        self
    }

    /// The primary name followed by every alternative.
    pub fn accepted_names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name.as_str()).chain(self.alternatives.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UseCaseFlavor {
    Include,
    Extend,
}

impl UseCaseFlavor {
    pub fn relation_kind(self) -> RelationKind {
        match self {
            UseCaseFlavor::Include => RelationKind::Include,
            UseCaseFlavor::Extend => RelationKind::Extend,
        }
    }

    pub fn from_relation_kind(kind: RelationKind) -> Option<Self> {
        match kind {
            RelationKind::Include => Some(UseCaseFlavor::Include),
            RelationKind::Extend => Some(UseCaseFlavor::Extend),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase")]
pub enum RefRelation {
    /// An actor (or a system acting as a supporting actor) takes part in a use case.
    ActorUseCase {
        actor: String,
        use_case: String,
        #[serde(default)]
        supporting: bool,
    },
    /// `child` specializes `parent`.
    ActorActor { child: String, parent: String },
    UseCaseUseCase {
        source: String,
        target: String,
        flavor: UseCaseFlavor,
    },
}

impl RefRelation {
    /// The two reference ids joined by this relation, in (source, target) order.
    pub fn endpoints(&self) -> (&str, &str) {
        match self {
            RefRelation::ActorUseCase { actor, use_case, .. } => (actor, use_case),
            RefRelation::ActorActor { child, parent } => (child, parent),
            RefRelation::UseCaseUseCase { source, target, .. } => (source, target),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReferenceSolution {
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub forbidden_names: Vec<String>,
    pub elements: Vec<RefElement>,
    #[serde(default)]
    pub relations: Vec<RefRelation>,
}

impl ReferenceSolution {
    pub fn element(&self, ref_id: &str) -> Option<&RefElement> {
        self.elements.iter().find(|e| e.ref_id == ref_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Boss {
    pub icon_id: String,
    pub taunt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExerciseSpec {
    pub exercise_id: String,
    pub title: String,
    #[serde(default)]
    pub statement: String,
    pub base_xp: u64,
    pub boss: Boss,
    pub solutions: Vec<ReferenceSolution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    /// The solution file could not be read as an exercise record.
    Malformed,
    NoSolutions,
    ZeroBaseXp,
    EmptySolution,
    DuplicateRefId,
    EmptyName,
    DuplicateRefName,
    UnknownRef,
    /// A relation endpoint or owner reference resolves to the wrong kind of element.
    WrongRefKind,
    ExternalNotSystem,
    OwnerOnNonUseCase,
    UcNoOwner,
    UcInExternalSystem,
    SupportingRequired,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::Malformed => "MALFORMED",
            IssueCode::NoSolutions => "NO_SOLUTIONS",
            IssueCode::ZeroBaseXp => "ZERO_BASE_XP",
            IssueCode::EmptySolution => "EMPTY_SOLUTION",
            IssueCode::DuplicateRefId => "DUPLICATE_REF_ID",
            IssueCode::EmptyName => "EMPTY_NAME",
            IssueCode::DuplicateRefName => "DUPLICATE_REF_NAME",
            IssueCode::UnknownRef => "UNKNOWN_REF",
            IssueCode::WrongRefKind => "WRONG_REF_KIND",
            IssueCode::ExternalNotSystem => "EXTERNAL_NOT_SYSTEM",
            IssueCode::OwnerOnNonUseCase => "OWNER_ON_NON_USE_CASE",
            IssueCode::UcNoOwner => "UC_NO_OWNER",
            IssueCode::UcInExternalSystem => "UC_IN_EXTERNAL_SYSTEM",
            IssueCode::SupportingRequired => "SUPPORTING_REQUIRED",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuthoringIssue {
    pub code: IssueCode,
    pub ref_id: Option<String>,
    pub detail: String,
}

impl AuthoringIssue {
    pub fn new(code: IssueCode, ref_id: Option<&str>, detail: impl Into<String>) -> Self {
        AuthoringIssue {
            code,
            ref_id: ref_id.map(str::to_string),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for AuthoringIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.ref_id {
            Some(id) => write!(f, "{} [{}]: {}", self.code, id, self.detail),
            None => write!(f, "{}: {}", self.code, self.detail),
        }
    }
}

/// Checks the structural rules a reference solution must satisfy before it
/// can be used for grading. Issues come back in a fixed order: element
/// checks in authored order, then relation checks in authored order.
pub fn validate_reference(solution: &ReferenceSolution) -> Vec<AuthoringIssue> {
    let mut issues = Vec::new();
    if solution.elements.is_empty() {
        issues.push(AuthoringIssue::new(
            IssueCode::EmptySolution,
            None,
            "a reference solution needs at least one element",
        ));
    }

    let mut by_id: BTreeMap<&str, &RefElement> = BTreeMap::new();
    for el in &solution.elements {
        if by_id.insert(el.ref_id.as_str(), el).is_some() {
            issues.push(AuthoringIssue::new(
                IssueCode::DuplicateRefId,
                Some(&el.ref_id),
                format!("refId '{}' is used more than once", el.ref_id),
            ));
        }
    }

    let mut seen_names: BTreeMap<(ElementKind, String), &str> = BTreeMap::new();
    for el in &solution.elements {
        let id = Some(el.ref_id.as_str());
        let mut names_here = BTreeSet::new();
        for name in el.accepted_names() {
            let norm = normalize_name(name);
            if norm.is_empty() {
                issues.push(AuthoringIssue::new(
                    IssueCode::EmptyName,
                    id,
                    format!("{} '{}' has an empty name or alternative", el.kind, el.ref_id),
                ));
                continue;
            }
            if !names_here.insert(norm.clone()) {
                continue;
            }
            match seen_names.get(&(el.kind, norm.clone())) {
                Some(other) => issues.push(AuthoringIssue::new(
                    IssueCode::DuplicateRefName,
                    id,
                    format!("{} name '{}' is also used by '{}'", el.kind, name.trim(), other),
                )),
                None => {
                    seen_names.insert((el.kind, norm), &el.ref_id);
                }
            }
        }

        if el.external && el.kind != ElementKind::System {
            issues.push(AuthoringIssue::new(
                IssueCode::ExternalNotSystem,
                id,
                format!("only systems can be external, '{}' is a {}", el.name, el.kind),
            ));
        }

        match (el.kind, &el.owning_system) {
            (ElementKind::UseCase, None) => issues.push(AuthoringIssue::new(
                IssueCode::UcNoOwner,
                id,
                format!("use case '{}' has no owning system", el.name),
            )),
            (ElementKind::UseCase, Some(owner)) => match by_id.get(owner.as_str()) {
                None => issues.push(AuthoringIssue::new(
                    IssueCode::UnknownRef,
                    id,
                    format!("use case '{}' names unknown owning system '{}'", el.name, owner),
                )),
                Some(sys) if sys.kind != ElementKind::System => issues.push(AuthoringIssue::new(
                    IssueCode::WrongRefKind,
                    id,
                    format!("owner of use case '{}' is a {}, not a system", el.name, sys.kind),
                )),
                Some(sys) if sys.external => issues.push(AuthoringIssue::new(
                    IssueCode::UcInExternalSystem,
                    id,
                    format!(
                        "use case '{}' is placed in external system '{}', which cannot contain use cases",
                        el.name, sys.name
                    ),
                )),
                Some(_) => {}
            },
            (_, Some(_)) => issues.push(AuthoringIssue::new(
                IssueCode::OwnerOnNonUseCase,
                id,
                format!("only use cases have an owning system, '{}' is a {}", el.name, el.kind),
            )),
            (_, None) => {}
        }
    }

    let resolve =
        |issues: &mut Vec<AuthoringIssue>, ref_id: &str, allowed: &[ElementKind], role: &str| -> Option<ElementKind> {
            match by_id.get(ref_id) {
                None => {
                    issues.push(AuthoringIssue::new(
                        IssueCode::UnknownRef,
                        Some(ref_id),
                        format!("relation {role} '{ref_id}' does not exist"),
                    ));
                    None
                }
                Some(el) if !allowed.contains(&el.kind) => {
                    issues.push(AuthoringIssue::new(
                        IssueCode::WrongRefKind,
                        Some(ref_id),
                        format!("relation {role} '{}' is a {}", el.name, el.kind),
                    ));
                    None
                }
                Some(el) => Some(el.kind),
            }
        };

    for rel in &solution.relations {
        match rel {
            RefRelation::ActorUseCase {
                actor,
                use_case,
                supporting,
            } => {
                let actor_kind = resolve(&mut issues, actor, &[ElementKind::Actor, ElementKind::System], "actor");
                resolve(&mut issues, use_case, &[ElementKind::UseCase], "use case");
                if actor_kind == Some(ElementKind::System) && !supporting {
                    issues.push(AuthoringIssue::new(
                        IssueCode::SupportingRequired,
                        Some(actor),
                        format!("system '{actor}' takes part in a use case only as a supporting actor"),
                    ));
                }
            }
            RefRelation::ActorActor { child, parent } => {
                resolve(&mut issues, child, &[ElementKind::Actor], "child actor");
                resolve(&mut issues, parent, &[ElementKind::Actor], "parent actor");
            }
            RefRelation::UseCaseUseCase { source, target, .. } => {
                resolve(&mut issues, source, &[ElementKind::UseCase], "source use case");
                resolve(&mut issues, target, &[ElementKind::UseCase], "target use case");
            }
        }
    }

    issues
}
