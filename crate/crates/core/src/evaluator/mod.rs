//! Grading a student diagram against reference solutions.
//!
//! One evaluation runs: element matching, relation matching, completeness,
//! then the syntactic and semantic rule catalogs. With several solutions the
//! report of the most complete one wins.

mod diagnostics;
mod matching;
mod similarity;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use diagnostics::{check_semantics, check_syntax, relation_allowed, Diagnostic, RuleCode, Severity};
pub use matching::{best_similarity, match_elements, match_relations, ElementMatching, RelationMatching};
pub use similarity::{is_similar, levenshtein, normalize_name, similarity, MATCH_THRESHOLD};

use crate::model::{DiagramDocument, ElementKind, ExerciseSpec, ReferenceSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Actor,
    UseCase,
    System,
    Relation,
}

impl From<ElementKind> for Category {
    fn from(kind: ElementKind) -> Self {
        match kind {
            ElementKind::Actor => Category::Actor,
            ElementKind::UseCase => Category::UseCase,
            ElementKind::System => Category::System,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryCount {
    pub matched: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletenessMetrics {
    pub per_kind: BTreeMap<Category, CategoryCount>,
    pub overall: f64,
}

/// One entry of the "valid matches" feedback list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchedItem {
    /// Diagram element id, or diagram relation id for matched relations.
    pub element_id: String,
    /// Reference element id, or `relations[i]` for the i-th reference relation.
    pub ref_id: String,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationReport {
    pub solution_index: usize,
    pub matching: ElementMatching,
    pub relation_matching: RelationMatching,
    pub completeness: CompletenessMetrics,
    pub syntactic: Vec<Diagnostic>,
    pub semantic: Vec<Diagnostic>,
    pub matched_list: Vec<MatchedItem>,
}

impl EvaluationReport {
    pub fn diagnostics(&self) -> impl Iterator<Item = &Diagnostic> {
        self.syntactic.iter().chain(self.semantic.iter())
    }

    pub fn diagnostic_count(&self) -> usize {
        self.syntactic.len() + self.semantic.len()
    }

    /// Full marks and no diagnostics of either kind.
    pub fn is_complete(&self) -> bool {
        self.completeness.overall >= 1.0 && self.diagnostic_count() == 0
    }
}

/// Per-category counts plus the pooled ratio over elements and relations.
pub fn completeness(
    reference: &ReferenceSolution,
    matching: &ElementMatching,
    relations: &RelationMatching,
) -> CompletenessMetrics {
    let mut per_kind: BTreeMap<Category, CategoryCount> =
        [Category::Actor, Category::UseCase, Category::System, Category::Relation]
            .into_iter()
            .map(|c| (c, CategoryCount::default()))
            .collect();

    for r in &reference.elements {
        let count = per_kind
            .get_mut(&Category::from(r.kind))
            .expect("all categories present");
        count.total += 1;
        if matching.pairs.contains_key(&r.ref_id) {
            count.matched += 1;
        }
    }
    let rel = per_kind.get_mut(&Category::Relation).expect("all categories present");
    rel.total = relations.matched.len() + relations.unmatched.len();
    rel.matched = relations.matched.len();

    let (matched, total) = per_kind.values().fold((0, 0), |(m, t), c| (m + c.matched, t + c.total));
    let overall = if total == 0 { 0.0 } else { matched as f64 / total as f64 };
    CompletenessMetrics { per_kind, overall }
}

fn matched_list(
    reference: &ReferenceSolution,
    doc: &DiagramDocument,
    matching: &ElementMatching,
    relations: &RelationMatching,
) -> Vec<MatchedItem> {
    let elements = reference.elements.iter().filter_map(|r| {
        let id = matching.element_for(&r.ref_id)?;
        Some(MatchedItem {
            element_id: id.to_string(),
            ref_id: r.ref_id.clone(),
            display_name: doc.display_name(id),
        })
    });
    let rels = relations.matched.iter().filter_map(|i| {
        let rel_id = relations.pairs.get(i)?;
        let rel = doc.relations.iter().find(|r| &r.id == rel_id)?;
        Some(MatchedItem {
            element_id: rel_id.clone(),
            ref_id: format!("relations[{i}]"),
            display_name: format!(
                "{} {} {}",
                doc.display_name(rel.source_id()),
                rel.kind,
                doc.display_name(rel.target_id())
            ),
        })
    });
    elements.chain(rels).collect()
}

pub fn evaluate(solution: &ReferenceSolution, doc: &DiagramDocument) -> EvaluationReport {
    let matching = match_elements(solution, doc);
    let relation_matching = match_relations(solution, doc, &matching);
    let completeness = completeness(solution, &matching, &relation_matching);
    let syntactic = check_syntax(doc);
    let semantic = check_semantics(solution, doc, &matching, &relation_matching);
    let matched_list = matched_list(solution, doc, &matching, &relation_matching);
    EvaluationReport {
        solution_index: 0,
        matching,
        relation_matching,
        completeness,
        syntactic,
        semantic,
        matched_list,
    }
}

/// Evaluates against every solution and keeps the most complete report.
/// Ties go to the lowest solution index.
///
/// # Panics
///
/// If the exercise has no solutions; loaded exercises always have one.
pub fn evaluate_exercise(exercise: &ExerciseSpec, doc: &DiagramDocument) -> EvaluationReport {
    let mut best: Option<EvaluationReport> = None;
    for (i, solution) in exercise.solutions.iter().enumerate() {
        let mut report = evaluate(solution, doc);
        report.solution_index = i;
        if best
            .as_ref()
            .is_none_or(|b| report.completeness.overall > b.completeness.overall)
        {
            best = Some(report);
        }
    }
    best.expect("exercise has at least one solution")
}
