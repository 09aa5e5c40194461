//! OCEL 2.0 JSON reading and canonical writing.
//!
//! Composite type names are stored flat using [`crate::encoding`], so a
//! transformed log is still a plain OCEL 2.0 document.

use std::collections::{BTreeMap, BTreeSet};

use chrono::DateTime;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::encoding::{
    decode_event_type, decode_object_type, encode_event_type, encode_object_type,
    MalformedTypeName,
};
use crate::model::{
    format_timestamp, AttributeSchema, AttributeValue, E2ORelation, Event, O2ORelation,
    ObjectEntity, OcelLog, Timestamp, ValueKind,
};
use crate::validate::{validate, ValidationReport, Violation};

/// The log used throughout the documentation: a chest-pain evaluation with
/// one patient and two tests.
pub const RUNNING_EXAMPLE_JSON: &str = include_str!("../data/running-example.jsonocel");

pub fn running_example() -> OcelLog {
    read_ocel_json(RUNNING_EXAMPLE_JSON.as_bytes()).expect("bundled running example is valid")
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("invalid JSON: {0}")]
    JsonSyntax(serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid log: {0}")]
    Validation(ValidationReport),
    #[error(transparent)]
    MalformedTypeName(#[from] MalformedTypeName),
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Document {
    #[serde(default)]
    object_types: Vec<TypeDecl>,
    #[serde(default)]
    event_types: Vec<TypeDecl>,
    objects: Vec<ObjectDoc>,
    events: Vec<EventDoc>,
}

#[derive(Deserialize)]
struct TypeDecl {
    name: String,
    #[serde(default)]
    attributes: Vec<AttributeDecl>,
}

#[derive(Deserialize)]
struct AttributeDecl {
    name: String,
    #[serde(rename = "type")]
    kind: String,
}

#[derive(Deserialize)]
struct ObjectDoc {
    id: String,
    #[serde(rename = "type")]
    otype: String,
    #[serde(default)]
    attributes: Vec<ObjectAttributeDoc>,
    #[serde(default)]
    relationships: Vec<RelationshipDoc>,
}

#[derive(Deserialize)]
struct ObjectAttributeDoc {
    name: String,
    time: Option<String>,
    value: Value,
}

#[derive(Deserialize)]
struct EventDoc {
    id: String,
    #[serde(rename = "type")]
    etype: String,
    time: String,
    #[serde(default)]
    attributes: Vec<EventAttributeDoc>,
    #[serde(default)]
    relationships: Vec<RelationshipDoc>,
}

#[derive(Deserialize)]
struct EventAttributeDoc {
    name: String,
    value: Value,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RelationshipDoc {
    object_id: String,
    #[serde(default)]
    qualifier: String,
}

fn parse_time(s: &str) -> Result<Timestamp, ReadError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.to_utc())
        .map_err(|e| ReadError::Schema(format!("bad timestamp {s:?}: {e}")))
}

fn parse_schema(decl: &TypeDecl) -> Result<AttributeSchema, ReadError> {
    decl.attributes
        .iter()
        .map(|a| {
            ValueKind::parse(&a.kind)
                .map(|k| (a.name.clone(), k))
                .ok_or_else(|| {
                    ReadError::Schema(format!(
                        "attribute {} of type {} has unknown kind {:?}",
                        a.name, decl.name, a.kind
                    ))
                })
        })
        .collect()
}

/// Kind of an undeclared attribute, guessed from its JSON shape. Such logs
/// never validate; the guess only lets the report name the attribute.
fn infer_kind(v: &Value) -> ValueKind {
    match v {
        Value::Bool(_) => ValueKind::Boolean,
        Value::Number(n) if n.is_i64() => ValueKind::Integer,
        Value::Number(_) => ValueKind::Float,
        _ => ValueKind::String,
    }
}

fn parse_value(v: &Value, kind: ValueKind, ctx: &str) -> Result<AttributeValue, ReadError> {
    let bad = || ReadError::Schema(format!("{ctx}: value {v} is not a valid {}", kind.as_str()));
    Ok(match (kind, v) {
        (ValueKind::String, Value::String(s)) => AttributeValue::Text(s.clone()),
        (ValueKind::String, Value::Number(n)) => AttributeValue::Text(n.to_string()),
        (ValueKind::String, Value::Bool(b)) => AttributeValue::Text(b.to_string()),
        (ValueKind::Integer, Value::Number(n)) => AttributeValue::Integer(n.as_i64().ok_or_else(bad)?),
        (ValueKind::Integer, Value::String(s)) => {
            AttributeValue::Integer(s.trim().parse().map_err(|_| bad())?)
        }
        (ValueKind::Float, Value::Number(n)) => AttributeValue::Real(n.as_f64().ok_or_else(bad)?),
        (ValueKind::Float, Value::String(s)) => {
            AttributeValue::Real(s.trim().parse().map_err(|_| bad())?)
        }
        (ValueKind::Boolean, Value::Bool(b)) => AttributeValue::Boolean(*b),
        (ValueKind::Boolean, Value::String(s)) => match s.as_str() {
            "true" => AttributeValue::Boolean(true),
            "false" => AttributeValue::Boolean(false),
            _ => return Err(bad()),
        },
        (ValueKind::Time, Value::String(s)) => AttributeValue::Time(parse_time(s)?),
        _ => return Err(bad()),
    })
}

/// Parses a document without rejecting invalid logs.
///
/// Returns the log together with its full validation report, including
/// duplicate ids that the map-based model cannot represent.
pub fn read_ocel_json_report(input: &[u8]) -> Result<(OcelLog, ValidationReport), ReadError> {
    let value: Value = serde_json::from_slice(input).map_err(ReadError::JsonSyntax)?;
    if !value.is_object() {
        return Err(ReadError::Schema("top-level value must be an object".into()));
    }
    let doc: Document =
        serde_json::from_value(value).map_err(|e| ReadError::Schema(e.to_string()))?;

    let mut log = OcelLog::new();
    let mut extra = Vec::new();

    for decl in &doc.object_types {
        let schema = parse_schema(decl)?;
        log.declare_object_type(decode_object_type(&decl.name)?, schema);
    }
    for decl in &doc.event_types {
        let schema = parse_schema(decl)?;
        log.declare_event_type(decode_event_type(&decl.name)?, schema);
    }

    for o in &doc.objects {
        let otype = decode_object_type(&o.otype)?;
        let schema = log.object_types.get(&otype);
        let mut attrs: BTreeMap<String, Vec<(Timestamp, AttributeValue)>> = BTreeMap::new();
        for a in &o.attributes {
            let kind = schema
                .and_then(|s| s.get(&a.name).copied())
                .unwrap_or_else(|| infer_kind(&a.value));
            let time = match &a.time {
                Some(t) => parse_time(t)?,
                None => Timestamp::UNIX_EPOCH,
            };
            let ctx = format!("object {} attribute {}", o.id, a.name);
            attrs
                .entry(a.name.clone())
                .or_default()
                .push((time, parse_value(&a.value, kind, &ctx)?));
        }
        for history in attrs.values_mut() {
            history.sort_by_key(|(t, _)| *t);
        }
        for r in &o.relationships {
            log.relate_objects(&o.id, &r.qualifier, &r.object_id);
        }
        let entity = ObjectEntity {
            id: o.id.as_str().into(),
            otype,
            attrs,
        };
        if log.objects.contains_key(o.id.as_str()) {
            extra.push(Violation {
                rule: "duplicate-object-id",
                message: format!("object id {} appears more than once", o.id),
                ids: vec![o.id.clone()],
            });
        }
        log.insert_object(entity);
    }

    for e in &doc.events {
        let etype = decode_event_type(&e.etype)?;
        let schema = log.event_types.get(&etype);
        let mut attrs = BTreeMap::new();
        for a in &e.attributes {
            let kind = schema
                .and_then(|s| s.get(&a.name).copied())
                .unwrap_or_else(|| infer_kind(&a.value));
            let ctx = format!("event {} attribute {}", e.id, a.name);
            attrs.insert(a.name.clone(), parse_value(&a.value, kind, &ctx)?);
        }
        for r in &e.relationships {
            log.relate(&e.id, &r.qualifier, &r.object_id);
        }
        if log.events.contains_key(e.id.as_str()) {
            extra.push(Violation {
                rule: "duplicate-event-id",
                message: format!("event id {} appears more than once", e.id),
                ids: vec![e.id.clone()],
            });
        }
        log.insert_event(Event {
            id: e.id.as_str().into(),
            etype,
            time: parse_time(&e.time)?,
            attrs,
        });
    }

    let mut report = validate(&log);
    report.violations.splice(0..0, extra);
    report.ok = report.violations.is_empty();
    Ok((log, report))
}

/// Reads an OCEL 2.0 JSON document into a valid log.
pub fn read_ocel_json(input: &[u8]) -> Result<OcelLog, ReadError> {
    let (log, report) = read_ocel_json_report(input)?;
    if report.ok {
        Ok(log)
    } else {
        Err(ReadError::Validation(report))
    }
}

fn value_json(v: &AttributeValue) -> Value {
    match v {
        AttributeValue::Text(s) => Value::String(s.clone()),
        AttributeValue::Integer(i) => json!(i),
        AttributeValue::Real(r) => json!(r),
        AttributeValue::Boolean(b) => json!(b),
        AttributeValue::Time(t) => Value::String(format_timestamp(t)),
    }
}

fn type_decls<'a, T: 'a>(
    types: impl Iterator<Item = (&'a T, &'a AttributeSchema)>,
    encode: impl Fn(&T) -> String,
) -> Value {
    let mut decls: Vec<(String, Value)> = types
        .map(|(t, schema)| {
            let attrs: Vec<Value> = schema
                .iter()
                .map(|(name, kind)| json!({ "name": name, "type": kind.as_str() }))
                .collect();
            let name = encode(t);
            (name.clone(), json!({ "name": name, "attributes": attrs }))
        })
        .collect();
    decls.sort_by(|a, b| a.0.cmp(&b.0));
    Value::Array(decls.into_iter().map(|(_, v)| v).collect())
}

/// Canonical OCEL 2.0 JSON form of `log`.
///
/// Events are ordered by `(time, id)`, objects by id, type declarations by
/// encoded name, and every JSON object has its keys sorted. Equal logs yield
/// identical bytes.
pub fn write_ocel_json(log: &OcelLog) -> Vec<u8> {
    let mut relations_by_event: BTreeMap<&str, BTreeSet<(&str, &str)>> = BTreeMap::new();
    for E2ORelation {
        event,
        qualifier,
        object,
    } in &log.e2o
    {
        relations_by_event
            .entry(event.as_str())
            .or_default()
            .insert((object.as_str(), qualifier.as_str()));
    }
    let mut relations_by_object: BTreeMap<&str, BTreeSet<(&str, &str)>> = BTreeMap::new();
    for O2ORelation {
        source,
        qualifier,
        target,
    } in &log.o2o
    {
        relations_by_object
            .entry(source.as_str())
            .or_default()
            .insert((target.as_str(), qualifier.as_str()));
    }
    let relationships = |rels: Option<&BTreeSet<(&str, &str)>>| -> Value {
        Value::Array(
            rels.into_iter()
                .flatten()
                .map(|(o, q)| json!({ "objectId": o, "qualifier": q }))
                .collect(),
        )
    };

    let mut events: Vec<&Event> = log.events.values().collect();
    events.sort_by(|a, b| (a.time, &a.id).cmp(&(b.time, &b.id)));
    let events: Vec<Value> = events
        .into_iter()
        .map(|e| {
            let attrs: Vec<Value> = e
                .attrs
                .iter()
                .map(|(name, v)| json!({ "name": name, "value": value_json(v) }))
                .collect();
            json!({
                "id": e.id,
                "type": encode_event_type(&e.etype),
                "time": format_timestamp(&e.time),
                "attributes": attrs,
                "relationships": relationships(relations_by_event.get(e.id.as_str())),
            })
        })
        .collect();

    let objects: Vec<Value> = log
        .objects
        .values()
        .map(|o| {
            let attrs: Vec<Value> = o
                .attrs
                .iter()
                .flat_map(|(name, history)| {
                    history.iter().map(move |(t, v)| {
                        json!({ "name": name, "time": format_timestamp(t), "value": value_json(v) })
                    })
                })
                .collect();
            json!({
                "id": o.id,
                "type": encode_object_type(&o.otype),
                "attributes": attrs,
                "relationships": relationships(relations_by_object.get(o.id.as_str())),
            })
        })
        .collect();

    let mut doc = Map::new();
    doc.insert(
        "objectTypes".into(),
        type_decls(log.object_types.iter(), encode_object_type),
    );
    doc.insert(
        "eventTypes".into(),
        type_decls(log.event_types.iter(), encode_event_type),
    );
    doc.insert("objects".into(), Value::Array(objects));
    doc.insert("events".into(), Value::Array(events));

    let mut out = serde_json::to_vec_pretty(&Value::Object(doc)).expect("JSON values serialize");
    out.push(b'\n');
    out
}
