//! Reading and writing Apollon-style use case diagram documents.
//!
//! The on-disk shape is an object with `version`, `type`, an `elements` map
//! and a `relationships` map, both keyed by id. Fields the grader does not
//! use (bounds, styling, assessments, ...) are carried along untouched.

use std::fmt;

use serde::de::{self, Deserializer, IgnoredAny, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::model::{
    DiagramDocument, DiagramElement, DiagramRelation, ElementKind, Endpoint, OpaqueFields, RelationKind,
    USE_CASE_NOTATION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseErrorCode {
    MalformedInput,
    UnknownNotation,
    UnknownElementKind,
    UnknownRelationKind,
    DanglingReference,
    DuplicateId,
    SelfRelation,
}

impl ParseErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorCode::MalformedInput => "MALFORMED_INPUT",
            ParseErrorCode::UnknownNotation => "UNKNOWN_NOTATION",
            ParseErrorCode::UnknownElementKind => "UNKNOWN_ELEMENT_KIND",
            ParseErrorCode::UnknownRelationKind => "UNKNOWN_RELATION_KIND",
            ParseErrorCode::DanglingReference => "DANGLING_REFERENCE",
            ParseErrorCode::DuplicateId => "DUPLICATE_ID",
            ParseErrorCode::SelfRelation => "SELF_RELATION",
        }
    }
}

impl fmt::Display for ParseErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {detail}")]
pub struct ParseError {
    pub code: ParseErrorCode,
    pub detail: String,
    pub location: Option<String>,
}

impl ParseError {
    fn new(code: ParseErrorCode, detail: impl Into<String>, location: Option<&str>) -> Self {
        ParseError {
            code,
            detail: detail.into(),
            location: location.map(str::to_string),
        }
    }

    fn malformed(detail: impl Into<String>, location: Option<&str>) -> Self {
        Self::new(ParseErrorCode::MalformedInput, detail, location)
    }
}

pub fn element_kind_from_wire(s: &str) -> Option<ElementKind> {
    match s {
        "UseCaseActor" => Some(ElementKind::Actor),
        "UseCase" => Some(ElementKind::UseCase),
        "UseCaseSystem" => Some(ElementKind::System),
        _ => None,
    }
}

pub fn element_kind_to_wire(kind: ElementKind) -> &'static str {
    match kind {
        ElementKind::Actor => "UseCaseActor",
        ElementKind::UseCase => "UseCase",
        ElementKind::System => "UseCaseSystem",
    }
}

pub fn relation_kind_from_wire(s: &str) -> Option<RelationKind> {
    match s {
        "UseCaseAssociation" => Some(RelationKind::Association),
        "UseCaseInclude" => Some(RelationKind::Include),
        "UseCaseExtend" => Some(RelationKind::Extend),
        "UseCaseGeneralization" => Some(RelationKind::Generalization),
        _ => None,
    }
}

pub fn relation_kind_to_wire(kind: RelationKind) -> &'static str {
    match kind {
        RelationKind::Association => "UseCaseAssociation",
        RelationKind::Include => "UseCaseInclude",
        RelationKind::Extend => "UseCaseExtend",
        RelationKind::Generalization => "UseCaseGeneralization",
    }
}

// An object read as an ordered list of entries so repeated keys stay visible.
// `None` when the value was not an object at all.
struct Entries(Option<Vec<(String, Value)>>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = Entries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("any value")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some(key) = map.next_key::<String>()? {
                    let value = map.next_value::<Value>()?;
                    out.push((key, value));
                }
                Ok(Entries(Some(out)))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Entries, A::Error> {
                while seq.next_element::<IgnoredAny>()?.is_some() {}
                Ok(Entries(None))
            }

            fn visit_bool<E: de::Error>(self, _: bool) -> Result<Entries, E> {
                Ok(Entries(None))
            }
            fn visit_i64<E: de::Error>(self, _: i64) -> Result<Entries, E> {
                Ok(Entries(None))
            }
            fn visit_u64<E: de::Error>(self, _: u64) -> Result<Entries, E> {
                Ok(Entries(None))
            }
            fn visit_f64<E: de::Error>(self, _: f64) -> Result<Entries, E> {
                Ok(Entries(None))
            }
            fn visit_str<E: de::Error>(self, _: &str) -> Result<Entries, E> {
                Ok(Entries(None))
            }
            fn visit_unit<E: de::Error>(self) -> Result<Entries, E> {
                Ok(Entries(None))
            }
        }

        deserializer.deserialize_any(EntriesVisitor)
    }
}

enum TopValue {
    Plain(Value),
    Entries(Option<Vec<(String, Value)>>),
}

struct RawTop(Option<Vec<(String, TopValue)>>);

impl<'de> Deserialize<'de> for RawTop {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct TopVisitor;

        impl<'de> Visitor<'de> for TopVisitor {
            type Value = RawTop;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a diagram document object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawTop, A::Error> {
                let mut out = Vec::new();
                while let Some(key) = map.next_key::<String>()? {
                    let value = if key == "elements" || key == "relationships" {
                        TopValue::Entries(map.next_value::<Entries>()?.0)
                    } else {
                        TopValue::Plain(map.next_value::<Value>()?)
                    };
                    out.push((key, value));
                }
                Ok(RawTop(Some(out)))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<RawTop, A::Error> {
                while seq.next_element::<IgnoredAny>()?.is_some() {}
                Ok(RawTop(None))
            }
            fn visit_bool<E: de::Error>(self, _: bool) -> Result<RawTop, E> {
                Ok(RawTop(None))
            }
            fn visit_i64<E: de::Error>(self, _: i64) -> Result<RawTop, E> {
                Ok(RawTop(None))
            }
            fn visit_u64<E: de::Error>(self, _: u64) -> Result<RawTop, E> {
                Ok(RawTop(None))
            }
            fn visit_f64<E: de::Error>(self, _: f64) -> Result<RawTop, E> {
                Ok(RawTop(None))
            }
            fn visit_str<E: de::Error>(self, _: &str) -> Result<RawTop, E> {
                Ok(RawTop(None))
            }
            fn visit_unit<E: de::Error>(self) -> Result<RawTop, E> {
                Ok(RawTop(None))
            }
        }

        deserializer.deserialize_any(TopVisitor)
    }
}

fn take_string(record: &mut Map<String, Value>, field: &str, location: &str) -> Result<String, ParseError> {
    match record.shift_remove(field) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(ParseError::malformed(
            format!("field '{field}' must be a string"),
            Some(location),
        )),
        None => Err(ParseError::malformed(
            format!("missing field '{field}'"),
            Some(location),
        )),
    }
}

fn take_record(value: Value, location: &str) -> Result<Map<String, Value>, ParseError> {
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(ParseError::malformed("record must be an object", Some(location))),
    }
}

/// Sorts entries by key and rejects repeated keys. Returns the first
/// repeated key in canonical order.
fn sorted_unique(mut entries: Vec<(String, Value)>) -> Result<Vec<(String, Value)>, ParseError> {
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(ParseError::new(
            ParseErrorCode::DuplicateId,
            format!("id '{}' appears more than once", w[0].0),
            Some(&w[0].0),
        ));
    }
    Ok(entries)
}

fn check_id(record: &mut Map<String, Value>, key: &str) -> Result<String, ParseError> {
    let id = take_string(record, "id", key)?;
    if id != key {
        return Err(ParseError::malformed(
            format!("record keyed '{key}' carries id '{id}'"),
            Some(key),
        ));
    }
    Ok(id)
}

fn parse_element(key: &str, value: Value) -> Result<DiagramElement, ParseError> {
    let mut record = take_record(value, key)?;
    let id = check_id(&mut record, key)?;
    let wire_kind = take_string(&mut record, "type", key)?;
    let kind = element_kind_from_wire(&wire_kind).ok_or_else(|| {
        ParseError::new(
            ParseErrorCode::UnknownElementKind,
            format!("element type '{wire_kind}' is not part of the use case notation"),
            Some(key),
        )
    })?;
    let name = take_string(&mut record, "name", key)?;
    let owner = match record.shift_remove("owner") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => {
            return Err(ParseError::malformed(
                "field 'owner' must be a string or null",
                Some(key),
            ))
        }
    };
    Ok(DiagramElement {
        id,
        kind,
        name,
        owner,
        extra: record,
    })
}

fn parse_endpoint(record: &mut Map<String, Value>, field: &str, key: &str) -> Result<Endpoint, ParseError> {
    let mut end = match record.shift_remove(field) {
        Some(Value::Object(map)) => map,
        Some(_) => {
            return Err(ParseError::malformed(
                format!("field '{field}' must be an object"),
                Some(key),
            ))
        }
        None => return Err(ParseError::malformed(format!("missing field '{field}'"), Some(key))),
    };
    let element = match end.shift_remove("element") {
        Some(Value::String(s)) => s,
        _ => {
            return Err(ParseError::malformed(
                format!("field '{field}.element' must be a string"),
                Some(key),
            ))
        }
    };
    Ok(Endpoint { element, extra: end })
}

fn parse_relation(key: &str, value: Value) -> Result<DiagramRelation, ParseError> {
    let mut record = take_record(value, key)?;
    let id = check_id(&mut record, key)?;
    let wire_kind = take_string(&mut record, "type", key)?;
    let kind = relation_kind_from_wire(&wire_kind).ok_or_else(|| {
        ParseError::new(
            ParseErrorCode::UnknownRelationKind,
            format!("relationship type '{wire_kind}' is not part of the use case notation"),
            Some(key),
        )
    })?;
    let source = parse_endpoint(&mut record, "source", key)?;
    let target = parse_endpoint(&mut record, "target", key)?;
    Ok(DiagramRelation {
        id,
        kind,
        source,
        target,
        extra: record,
    })
}

/// Parses a document and checks its structure. Checks run in a fixed order
/// (top level, elements, relationships, then references) and the first
/// failure is returned.
pub fn parse_document(input: &str) -> Result<DiagramDocument, ParseError> {
    let top = serde_json::from_str::<RawTop>(input)
        .map_err(|e| ParseError::malformed(format!("not a valid document: {e}"), None))?
        .0
        .ok_or_else(|| ParseError::malformed("document must be an object", None))?;

    let mut version = None;
    let mut notation = None;
    let mut elements = None;
    let mut relationships = None;
    let mut extra = OpaqueFields::new();
    let mut seen = std::collections::BTreeSet::new();
    for (key, value) in top {
        if !seen.insert(key.clone()) {
            return Err(ParseError::malformed(format!("top-level field '{key}' repeated"), None));
        }
        match (key.as_str(), value) {
            ("version", TopValue::Plain(Value::String(s))) => version = Some(s),
            ("version", _) => return Err(ParseError::malformed("field 'version' must be a string", None)),
            ("type", TopValue::Plain(Value::String(s))) => notation = Some(s),
            ("type", _) => return Err(ParseError::malformed("field 'type' must be a string", None)),
            ("elements", TopValue::Entries(e)) => {
                elements = Some(e.ok_or_else(|| ParseError::malformed("field 'elements' must be an object", None))?)
            }
            ("relationships", TopValue::Entries(e)) => {
                relationships =
                    Some(e.ok_or_else(|| ParseError::malformed("field 'relationships' must be an object", None))?)
            }
            (_, TopValue::Plain(v)) => {
                extra.insert(key, v);
            }
            (_, TopValue::Entries(_)) => unreachable!("only elements/relationships are read as entries"),
        }
    }

    let version = version.ok_or_else(|| ParseError::malformed("missing field 'version'", None))?;
    let notation = notation.ok_or_else(|| ParseError::malformed("missing field 'type'", None))?;
    if notation != USE_CASE_NOTATION {
        return Err(ParseError::new(
            ParseErrorCode::UnknownNotation,
            format!("expected a {USE_CASE_NOTATION}, found '{notation}'"),
            None,
        ));
    }
    let elements = elements.ok_or_else(|| ParseError::malformed("missing field 'elements'", None))?;
    let relationships = relationships.ok_or_else(|| ParseError::malformed("missing field 'relationships'", None))?;

    let elements = sorted_unique(elements)?
        .into_iter()
        .map(|(key, value)| parse_element(&key, value))
        .collect::<Result<Vec<_>, _>>()?;

    let relations = sorted_unique(relationships)?
        .into_iter()
        .map(|(key, value)| {
            if elements.binary_search_by(|e| e.id.as_str().cmp(&key)).is_ok() {
                return Err(ParseError::new(
                    ParseErrorCode::DuplicateId,
                    format!("id '{key}' is used by both an element and a relationship"),
                    Some(&key),
                ));
            }
            parse_relation(&key, value)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let doc = DiagramDocument {
        version,
        notation,
        elements,
        relations,
        extra,
    };

    for el in &doc.elements {
        if let Some(owner) = &el.owner {
            match doc.element(owner) {
                Some(o) if o.kind == ElementKind::System => {}
                Some(o) => {
                    return Err(ParseError::new(
                        ParseErrorCode::DanglingReference,
                        format!("owner '{owner}' of '{}' is a {}, not a system", el.id, o.kind),
                        Some(&el.id),
                    ))
                }
                None => {
                    return Err(ParseError::new(
                        ParseErrorCode::DanglingReference,
                        format!("owner '{owner}' of '{}' does not exist", el.id),
                        Some(&el.id),
                    ))
                }
            }
        }
    }
    for rel in &doc.relations {
        for end in [rel.source_id(), rel.target_id()] {
            if doc.element(end).is_none() {
                return Err(ParseError::new(
                    ParseErrorCode::DanglingReference,
                    format!("relationship '{}' points at missing element '{end}'", rel.id),
                    Some(&rel.id),
                ));
            }
        }
        if rel.source_id() == rel.target_id() {
            return Err(ParseError::new(
                ParseErrorCode::SelfRelation,
                format!("relationship '{}' connects '{}' to itself", rel.id, rel.source_id()),
                Some(&rel.id),
            ));
        }
    }

    Ok(doc)
}

fn endpoint_value(end: &Endpoint) -> Value {
    let mut map = Map::new();
    map.insert("element".into(), Value::String(end.element.clone()));
    map.extend(end.extra.iter().map(|(k, v)| (k.clone(), v.clone())));
    Value::Object(map)
}

/// Converts a document into its JSON value form, elements and relationships
/// in canonical id order.
pub fn document_to_value(doc: &DiagramDocument) -> Value {
    let mut elements = Map::new();
    let mut sorted: Vec<&DiagramElement> = doc.elements.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for el in sorted {
        let mut rec = Map::new();
        rec.insert("id".into(), Value::String(el.id.clone()));
        rec.insert("name".into(), Value::String(el.name.clone()));
        rec.insert("type".into(), Value::String(element_kind_to_wire(el.kind).into()));
        rec.insert("owner".into(), el.owner.clone().map_or(Value::Null, Value::String));
        rec.extend(el.extra.iter().map(|(k, v)| (k.clone(), v.clone())));
        elements.insert(el.id.clone(), Value::Object(rec));
    }

    let mut relationships = Map::new();
    let mut sorted: Vec<&DiagramRelation> = doc.relations.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for rel in sorted {
        let mut rec = Map::new();
        rec.insert("id".into(), Value::String(rel.id.clone()));
        rec.insert("type".into(), Value::String(relation_kind_to_wire(rel.kind).into()));
        rec.insert("source".into(), endpoint_value(&rel.source));
        rec.insert("target".into(), endpoint_value(&rel.target));
        rec.extend(rel.extra.iter().map(|(k, v)| (k.clone(), v.clone())));
        relationships.insert(rel.id.clone(), Value::Object(rec));
    }

    let mut top = Map::new();
    top.insert("version".into(), Value::String(doc.version.clone()));
    top.insert("type".into(), Value::String(doc.notation.clone()));
    top.extend(doc.extra.iter().map(|(k, v)| (k.clone(), v.clone())));
    top.insert("elements".into(), Value::Object(elements));
    top.insert("relationships".into(), Value::Object(relationships));
    Value::Object(top)
}

pub fn serialize_document(doc: &DiagramDocument) -> String {
    serde_json::to_string_pretty(&document_to_value(doc)).expect("a JSON value always serializes")
}
