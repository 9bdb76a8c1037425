//! Teacher-side creation of exercises: solution files and references derived
//! from a drawn diagram.

use crate::model::{
    validate_reference, AuthoringIssue, DiagramDocument, ElementKind, ExerciseSpec, IssueCode, RefElement, RefRelation,
    ReferenceSolution, RelationKind, UseCaseFlavor,
};

/// Exercise-level checks plus [`validate_reference`] on every solution.
/// Issues from solution `i` carry a `solutions[i]: ` prefix in their detail.
pub fn validate_exercise(spec: &ExerciseSpec) -> Vec<AuthoringIssue> {
    let mut issues = Vec::new();
    if spec.solutions.is_empty() {
        issues.push(AuthoringIssue::new(
            IssueCode::NoSolutions,
            None,
            "an exercise needs at least one reference solution",
        ));
    }
    if spec.base_xp == 0 {
        issues.push(AuthoringIssue::new(
            IssueCode::ZeroBaseXp,
            None,
            "baseXp must be positive",
        ));
    }
    for (i, solution) in spec.solutions.iter().enumerate() {
        issues.extend(validate_reference(solution).into_iter().map(|mut issue| {
            issue.detail = format!("solutions[{i}]: {}", issue.detail);
            issue
        }));
    }
    issues
}

/// Reads a solution file. All-or-nothing: any issue rejects the whole file.
pub fn load_exercise(input: &str) -> Result<ExerciseSpec, Vec<AuthoringIssue>> {
    let spec: ExerciseSpec = serde_json::from_str(input)
        .map_err(|e| vec![AuthoringIssue::new(IssueCode::Malformed, None, e.to_string())])?;
    let issues = validate_exercise(&spec);
    if issues.is_empty() {
        Ok(spec)
    } else {
        Err(issues)
    }
}

pub fn serialize_exercise(spec: &ExerciseSpec) -> String {
    serde_json::to_string_pretty(spec).expect("exercise specs always serialize")
}

/// Turns a drawn diagram into a reference solution. Element ids become
/// refIds, names carry over without alternatives, and every system is
/// non-external; teachers refine those afterwards.
pub fn derive_reference_from_diagram(doc: &DiagramDocument) -> Result<ReferenceSolution, Vec<AuthoringIssue>> {
    let elements: Vec<RefElement> = doc
        .elements
        .iter()
        .map(|el| {
            let mut r = RefElement::new(el.id.clone(), el.kind, el.name.trim());
            if el.kind == ElementKind::UseCase {
                r.owning_system = el.owner.clone();
            }
            r
        })
        .collect();

    let mut relations = Vec::new();
    for rel in &doc.relations {
        let (Some(src), Some(tgt)) = (doc.element(rel.source_id()), doc.element(rel.target_id())) else {
            continue;
        };
        let derived = match rel.kind {
            RelationKind::Association => {
                let (actor, use_case) = match (src.kind, tgt.kind) {
                    (ElementKind::UseCase, ElementKind::Actor | ElementKind::System) => (tgt, src),
                    (ElementKind::Actor | ElementKind::System, ElementKind::UseCase) => (src, tgt),
                    _ => (src, tgt),
                };
                Some(RefRelation::ActorUseCase {
                    actor: actor.id.clone(),
                    use_case: use_case.id.clone(),
                    supporting: actor.kind == ElementKind::System,
                })
            }
            RelationKind::Generalization => Some(RefRelation::ActorActor {
                child: src.id.clone(),
                parent: tgt.id.clone(),
            }),
            RelationKind::Include | RelationKind::Extend => Some(RefRelation::UseCaseUseCase {
                source: src.id.clone(),
                target: tgt.id.clone(),
                flavor: UseCaseFlavor::from_relation_kind(rel.kind).expect("include or extend"),
            }),
        };
        relations.extend(derived);
    }

    let solution = ReferenceSolution {
        label: "drawn".to_string(),
        forbidden_names: Vec::new(),
        elements,
        relations,
    };
    let issues = validate_reference(&solution);
    if issues.is_empty() {
        Ok(solution)
    } else {
        Err(issues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::evaluate;
    use crate::parser::parse_document;

    const EXERCISE: &str = r#"{
        "exerciseId": "shop",
        "title": "Online shop",
        "statement": "Customers buy items; the bank authorizes payments.",
        "baseXp": 100,
        "boss": {"iconId": "robot-1", "taunt": "You will never model me!"},
        "solutions": [{
            "label": "main",
            "forbiddenNames": ["Database"],
            "elements": [
                {"refId": "shop", "kind": "System", "name": "Shop", "alternatives": [], "external": false, "owningSystem": null},
                {"refId": "cust", "kind": "Actor", "name": "Customer", "alternatives": ["Client"], "external": false, "owningSystem": null},
                {"refId": "buy", "kind": "UseCase", "name": "Buy item", "alternatives": [], "external": false, "owningSystem": "shop"},
                {"refId": "pay", "kind": "UseCase", "name": "Pay", "alternatives": ["Make Payment"], "external": false, "owningSystem": "shop"}
            ],
            "relations": [
                {"kind": "ActorUseCase", "actor": "cust", "useCase": "buy", "supporting": false},
                {"kind": "ActorUseCase", "actor": "cust", "useCase": "pay", "supporting": false},
                {"kind": "UseCaseUseCase", "source": "buy", "target": "pay", "flavor": "Include"}
            ]
        }]
    }"#;

    #[test]
    fn loads_well_formed_file() {
        let spec = load_exercise(EXERCISE).unwrap();
        assert_eq!(spec.solutions[0].elements.len(), 4);
        assert_eq!(spec.solutions[0].relations.len(), 3);
        assert_eq!(spec.boss.taunt, "You will never model me!");
    }

    #[test]
    fn round_trips() {
        let spec = load_exercise(EXERCISE).unwrap();
        assert_eq!(load_exercise(&serialize_exercise(&spec)).unwrap(), spec);
    }

    #[test]
    fn rejects_use_case_in_external_system() {
        let input = EXERCISE.replace(
            r#""name": "Shop", "alternatives": [], "external": false"#,
            r#""name": "Shop", "alternatives": [], "external": true"#,
        );
        let issues = load_exercise(&input).unwrap_err();
        assert!(issues.iter().all(|i| i.code == IssueCode::UcInExternalSystem));
        assert_eq!(issues.len(), 2);
    }

    #[test]
    fn rejects_empty_solution_list() {
        let spec = load_exercise(EXERCISE).unwrap();
        let mut empty = spec.clone();
        empty.solutions.clear();
        let issues = load_exercise(&serialize_exercise(&empty)).unwrap_err();
        assert_eq!(issues[0].code, IssueCode::NoSolutions);
    }

    #[test]
    fn malformed_text() {
        assert_eq!(load_exercise("{").unwrap_err()[0].code, IssueCode::Malformed);
        assert_eq!(
            load_exercise(r#"{"title": 3}"#).unwrap_err()[0].code,
            IssueCode::Malformed
        );
    }

    const DRAWN: &str = r#"{
        "version": "3.0.0", "type": "UseCaseDiagram",
        "elements": {
            "sys": {"id": "sys", "name": "Shop", "type": "UseCaseSystem", "owner": null},
            "uc": {"id": "uc", "name": "Buy", "type": "UseCase", "owner": "sys"},
            "act": {"id": "act", "name": "Customer", "type": "UseCaseActor", "owner": null}
        },
        "relationships": {
            "r1": {"id": "r1", "type": "UseCaseAssociation", "source": {"element": "uc"}, "target": {"element": "act"}}
        }
    }"#;

    #[test]
    fn derives_from_drawing() {
        let doc = parse_document(DRAWN).unwrap();
        let sol = derive_reference_from_diagram(&doc).unwrap();
        assert_eq!(sol.elements.len(), 3);
        assert_eq!(
            sol.relations,
            vec![RefRelation::ActorUseCase {
                actor: "act".into(),
                use_case: "uc".into(),
                supporting: false
            }]
        );
        let report = evaluate(&sol, &doc);
        assert_eq!(report.completeness.overall, 1.0);
        assert!(report.semantic.is_empty());
    }

    #[test]
    fn floating_use_case_is_rejected() {
        let doc = parse_document(&DRAWN.replace(r#""owner": "sys""#, r#""owner": null"#)).unwrap();
        let issues = derive_reference_from_diagram(&doc).unwrap_err();
        assert_eq!(
            issues.iter().map(|i| i.code).collect::<Vec<_>>(),
            vec![IssueCode::UcNoOwner]
        );
    }
}
