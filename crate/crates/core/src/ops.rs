//! Granularity operations: drill-down, roll-up, unfold and fold.
//!
//! Each operation is a pure function from a log to a new log. Only type
//! assignments and the type universes change; ids, timestamps, attribute
//! values and relations are carried over untouched.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{decode_event_type, decode_object_type, encode_event_type, encode_object_type, MalformedTypeName};
use crate::model::{CompositeEventType, CompositeObjectType, EventId, OcelLog, Qualifier};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("unknown object type {0}")]
    UnknownObjectType(String),
    #[error("unknown event type {0}")]
    UnknownEventType(String),
    #[error("attribute {attribute} is not declared for object type {object_type}")]
    UnknownAttribute {
        attribute: String,
        object_type: String,
    },
    #[error("malformed request: {0}")]
    MalformedRequest(String),
}

impl OpError {
    pub fn kind(&self) -> &'static str {
        match self {
            OpError::UnknownObjectType(_) => "UnknownObjectType",
            OpError::UnknownEventType(_) => "UnknownEventType",
            OpError::UnknownAttribute { .. } => "UnknownAttribute",
            OpError::MalformedRequest(_) => "MalformedRequest",
        }
    }
}

impl From<MalformedTypeName> for OpError {
    fn from(e: MalformedTypeName) -> Self {
        OpError::MalformedRequest(e.to_string())
    }
}

/// Qualifiers an unfold considers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum QualifierSet {
    #[default]
    All,
    Only(BTreeSet<Qualifier>),
}

impl QualifierSet {
    pub fn contains(&self, q: &str) -> bool {
        match self {
            QualifierSet::All => true,
            QualifierSet::Only(set) => set.contains(q),
        }
    }
}

/// Refines `ot` by the latest value of `oa` on each of its objects.
///
/// Objects without a value for `oa` keep `ot`. Every new composite type is
/// declared with the schema of `ot`, so all attributes the moved objects
/// carry stay typed.
pub fn drill_down(log: &OcelLog, ot: &CompositeObjectType, oa: &str) -> Result<OcelLog, OpError> {
    let schema = log
        .object_types
        .get(ot)
        .ok_or_else(|| OpError::UnknownObjectType(encode_object_type(ot)))?;
    if !schema.contains_key(oa) {
        return Err(OpError::UnknownAttribute {
            attribute: oa.to_owned(),
            object_type: encode_object_type(ot),
        });
    }
    let schema = schema.clone();

    let mut out = log.clone();
    for object in out.objects.values_mut() {
        if object.otype != *ot {
            continue;
        }
        let Some(value) = object.latest_value(oa) else {
            continue;
        };
        let drilled = ot.drilled(oa, value);
        out.object_types
            .entry(drilled.clone())
            .or_insert_with(|| schema.clone());
        object.otype = drilled;
    }
    Ok(out)
}

/// Reverts objects typed `ot` plus one drill step on `oa` back to `ot`.
///
/// Afterwards every such one-step refinement of `ot` that no object uses any
/// more is dropped from the type universe. Logs without matching objects
/// pass through unchanged apart from that cleanup.
pub fn roll_up(log: &OcelLog, ot: &CompositeObjectType, oa: &str) -> OcelLog {
    let mut out = log.clone();
    let mut reverted_schema = None;
    for object in out.objects.values_mut() {
        if object.otype.is_drill_of(ot, oa) {
            if reverted_schema.is_none() {
                reverted_schema = log.object_types.get(&object.otype).cloned();
            }
            object.otype = ot.clone();
        }
    }
    if let Some(schema) = reverted_schema {
        out.object_types.entry(ot.clone()).or_insert(schema);
    }

    let in_use: BTreeSet<&CompositeObjectType> = out.objects.values().map(|o| &o.otype).collect();
    let stale: Vec<CompositeObjectType> = out
        .object_types
        .keys()
        .filter(|t| t.is_drill_of(ot, oa) && !in_use.contains(t))
        .cloned()
        .collect();
    for t in stale {
        out.object_types.remove(&t);
    }
    out
}

/// Events of type `et` related to an object of type `ot` through a
/// qualifier in `qualifiers`, evaluated on the unmodified log.
pub fn unfoldable_events<'a>(
    log: &'a OcelLog,
    et: &CompositeEventType,
    ot: &CompositeObjectType,
    qualifiers: &QualifierSet,
) -> BTreeSet<&'a EventId> {
    log.e2o
        .iter()
        .filter(|rel| qualifiers.contains(&rel.qualifier))
        .filter(|rel| log.events.get(&rel.event).is_some_and(|e| e.etype == *et))
        .filter(|rel| log.objects.get(&rel.object).is_some_and(|o| o.otype == *ot))
        .map(|rel| &rel.event)
        .collect()
}

/// Refines the type of every unfoldable event from `et` to `et` + `ot`.
///
/// An event related to several objects of type `ot` is refined once. The new
/// composite event type is declared with the schema of `et`, which retypes
/// the event attributes along with the events.
pub fn unfold(
    log: &OcelLog,
    et: &CompositeEventType,
    ot: &CompositeObjectType,
    qualifiers: &QualifierSet,
) -> Result<OcelLog, OpError> {
    let schema = log
        .event_types
        .get(et)
        .ok_or_else(|| OpError::UnknownEventType(encode_event_type(et)))?;
    if !log.object_types.contains_key(ot) {
        return Err(OpError::UnknownObjectType(encode_object_type(ot)));
    }

    let targets: Vec<EventId> = unfoldable_events(log, et, ot, qualifiers)
        .into_iter()
        .cloned()
        .collect();
    let mut out = log.clone();
    if targets.is_empty() {
        return Ok(out);
    }
    let unfolded = et.unfolded(ot);
    out.event_types
        .entry(unfolded.clone())
        .or_insert_with(|| schema.clone());
    for id in targets {
        if let Some(event) = out.events.get_mut(&id) {
            event.etype = unfolded.clone();
        }
    }
    Ok(out)
}

/// Reverts events typed exactly `et` + `ot` back to `et` and drops `et` + `ot`
/// from the type universe.
pub fn fold(log: &OcelLog, et: &CompositeEventType, ot: &CompositeObjectType) -> OcelLog {
    let unfolded = et.unfolded(ot);
    let mut out = log.clone();
    let mut touched = false;
    for event in out.events.values_mut() {
        if event.etype == unfolded {
            event.etype = et.clone();
            touched = true;
        }
    }
    if let Some(schema) = out.event_types.remove(&unfolded) {
        if touched {
            out.event_types.entry(et.clone()).or_insert(schema);
        }
    }
    out
}

/// One granularity operation with its parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operation {
    DrillDown {
        object_type: CompositeObjectType,
        attribute: String,
    },
    RollUp {
        object_type: CompositeObjectType,
        attribute: String,
    },
    Unfold {
        event_type: CompositeEventType,
        object_type: CompositeObjectType,
        qualifiers: QualifierSet,
    },
    Fold {
        event_type: CompositeEventType,
        object_type: CompositeObjectType,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperationKind {
    DrillDown,
    RollUp,
    Unfold,
    Fold,
}

/// Wire form of an [`Operation`], as sent by the explorer and stored in
/// session manifests. Type names use the flat encoding; an absent
/// `qualifiers` list means all qualifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationRequest {
    pub kind: OperationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifiers: Option<Vec<String>>,
}

impl TryFrom<&OperationRequest> for Operation {
    type Error = OpError;

    fn try_from(req: &OperationRequest) -> Result<Self, OpError> {
        let need = |field: &Option<String>, name: &str| {
            field
                .clone()
                .ok_or_else(|| OpError::MalformedRequest(format!("{:?} requires {name}", req.kind)))
        };
        let forbid = |present: bool, name: &str| {
            if present {
                Err(OpError::MalformedRequest(format!(
                    "{:?} does not take {name}",
                    req.kind
                )))
            } else {
                Ok(())
            }
        };
        let object_type = decode_object_type(&need(&req.object_type, "object_type")?)?;
        Ok(match req.kind {
            OperationKind::DrillDown | OperationKind::RollUp => {
                forbid(req.event_type.is_some(), "event_type")?;
                forbid(req.qualifiers.is_some(), "qualifiers")?;
                let attribute = need(&req.attribute, "attribute")?;
                if req.kind == OperationKind::DrillDown {
                    Operation::DrillDown {
                        object_type,
                        attribute,
                    }
                } else {
                    Operation::RollUp {
                        object_type,
                        attribute,
                    }
                }
            }
            OperationKind::Unfold | OperationKind::Fold => {
                forbid(req.attribute.is_some(), "attribute")?;
                let event_type = decode_event_type(&need(&req.event_type, "event_type")?)?;
                if req.kind == OperationKind::Unfold {
                    let qualifiers = match &req.qualifiers {
                        None => QualifierSet::All,
                        Some(qs) => QualifierSet::Only(qs.iter().cloned().collect()),
                    };
                    Operation::Unfold {
                        event_type,
                        object_type,
                        qualifiers,
                    }
                } else {
                    forbid(req.qualifiers.is_some(), "qualifiers")?;
                    Operation::Fold {
                        event_type,
                        object_type,
                    }
                }
            }
        })
    }
}

impl From<&Operation> for OperationRequest {
    fn from(op: &Operation) -> Self {
        let mut req = OperationRequest {
            kind: op.kind(),
            object_type: None,
            attribute: None,
            event_type: None,
            qualifiers: None,
        };
        match op {
            Operation::DrillDown {
                object_type,
                attribute,
            }
            | Operation::RollUp {
                object_type,
                attribute,
            } => {
                req.object_type = Some(encode_object_type(object_type));
                req.attribute = Some(attribute.clone());
            }
            Operation::Unfold {
                event_type,
                object_type,
                qualifiers,
            } => {
                req.event_type = Some(encode_event_type(event_type));
                req.object_type = Some(encode_object_type(object_type));
                if let QualifierSet::Only(qs) = qualifiers {
                    req.qualifiers = Some(qs.iter().cloned().collect());
                }
            }
            Operation::Fold {
                event_type,
                object_type,
            } => {
                req.event_type = Some(encode_event_type(event_type));
                req.object_type = Some(encode_object_type(object_type));
            }
        }
        req
    }
}

impl Operation {
    pub fn kind(&self) -> OperationKind {
        match self {
            Operation::DrillDown { .. } => OperationKind::DrillDown,
            Operation::RollUp { .. } => OperationKind::RollUp,
            Operation::Unfold { .. } => OperationKind::Unfold,
            Operation::Fold { .. } => OperationKind::Fold,
        }
    }

    pub fn apply(&self, log: &OcelLog) -> Result<OcelLog, OpError> {
        match self {
            Operation::DrillDown {
                object_type,
                attribute,
            } => drill_down(log, object_type, attribute),
            Operation::RollUp {
                object_type,
                attribute,
            } => Ok(roll_up(log, object_type, attribute)),
            Operation::Unfold {
                event_type,
                object_type,
                qualifiers,
            } => unfold(log, event_type, object_type, qualifiers),
            Operation::Fold {
                event_type,
                object_type,
            } => Ok(fold(log, event_type, object_type)),
        }
    }
}

/// Validates `req` and dispatches to the matching operation.
pub fn apply(log: &OcelLog, req: &OperationRequest) -> Result<OcelLog, OpError> {
    Operation::try_from(req)?.apply(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::running_example;
    use crate::model::{AttributeValue, Event, ObjectId, ValueKind};
    use crate::validate::validate;

    fn test_type() -> CompositeObjectType {
        CompositeObjectType::base("Test")
    }

    fn test_of(kind: &str) -> CompositeObjectType {
        test_type().drilled("type", &AttributeValue::Text(kind.into()))
    }

    fn otype_of<'a>(log: &'a OcelLog, id: &str) -> &'a CompositeObjectType {
        &log.objects[&ObjectId::from(id)].otype
    }

    fn etype_of<'a>(log: &'a OcelLog, id: &str) -> &'a CompositeEventType {
        &log.events[&EventId::from(id)].etype
    }

    fn drilled_example() -> OcelLog {
        drill_down(&running_example(), &test_type(), "type").unwrap()
    }

    fn fully_unfolded() -> OcelLog {
        let mut log = drilled_example();
        for (et, kind) in [("ot", "ECG"), ("rt", "ECG"), ("ot", "Blood"), ("rt", "Blood")] {
            log = unfold(&log, &CompositeEventType::base(et), &test_of(kind), &QualifierSet::All).unwrap();
        }
        log
    }

    #[test]
    fn drill_down_splits_tests() {
        let log = drilled_example();
        assert_eq!(otype_of(&log, "o2"), &test_of("ECG"));
        assert_eq!(otype_of(&log, "o3"), &test_of("Blood"));
        assert_eq!(otype_of(&log, "o1"), &CompositeObjectType::base("Patient"));
        assert!(log.object_types.contains_key(&test_of("ECG")));
        assert!(log.object_types.contains_key(&test_of("Blood")));
        assert!(log.object_types.contains_key(&test_type()));
        assert!(log.oatype("type").contains(&test_of("ECG")));
        assert!(log.oatype("result").contains(&test_of("Blood")));
        assert!(validate(&log).ok);
    }

    #[test]
    fn drill_down_patient_by_name() {
        let log = drill_down(&running_example(), &CompositeObjectType::base("Patient"), "name").unwrap();
        assert_eq!(
            otype_of(&log, "o1"),
            &CompositeObjectType::base("Patient").drilled("name", &AttributeValue::Text("Jessica".into()))
        );
    }

    #[test]
    fn drill_down_without_values_is_a_no_op() {
        let mut log = running_example();
        for o in log.objects.values_mut() {
            o.attrs.remove("type");
        }
        assert_eq!(drill_down(&log, &test_type(), "type").unwrap(), log);
    }

    #[test]
    fn drill_down_keeps_valueless_objects() {
        let mut log = running_example();
        log.objects.get_mut(&ObjectId::from("o3")).unwrap().attrs.remove("type");
        let out = drill_down(&log, &test_type(), "type").unwrap();
        assert_eq!(otype_of(&out, "o2"), &test_of("ECG"));
        assert_eq!(otype_of(&out, "o3"), &test_type());
    }

    #[test]
    fn drill_down_uses_latest_value() {
        let mut log = running_example();
        let o2 = log.objects.get_mut(&ObjectId::from("o2")).unwrap();
        let t = o2.attrs["type"][0].0 + chrono::Duration::days(1);
        o2.attrs.get_mut("type").unwrap().push((t, AttributeValue::Text("MRI".into())));
        let out = drill_down(&log, &test_type(), "type").unwrap();
        assert_eq!(otype_of(&out, "o2"), &test_of("MRI"));
    }

    #[test]
    fn drill_down_errors() {
        let log = running_example();
        assert_eq!(
            drill_down(&log, &CompositeObjectType::base("Nope"), "type"),
            Err(OpError::UnknownObjectType("Nope".into()))
        );
        assert!(matches!(
            drill_down(&log, &CompositeObjectType::base("Patient"), "type"),
            Err(OpError::UnknownAttribute { .. })
        ));
    }

    #[test]
    fn roll_up_inverts_drill_down() {
        assert_eq!(roll_up(&drilled_example(), &test_type(), "type"), running_example());
    }

    #[test]
    fn roll_up_without_drill_is_a_no_op() {
        let log = running_example();
        assert_eq!(roll_up(&log, &test_type(), "type"), log);
    }

    #[test]
    fn nested_roll_up_only_touches_outer_layer() {
        let log = drilled_example();
        let nested = drill_down(&log, &test_of("ECG"), "result").unwrap();
        assert_eq!(
            otype_of(&nested, "o2"),
            &test_of("ECG").drilled("result", &AttributeValue::Text("Suspicious".into()))
        );
        let back = roll_up(&nested, &test_of("ECG"), "result");
        assert_eq!(otype_of(&back, "o2"), &test_of("ECG"));
        assert_eq!(otype_of(&back, "o3"), &test_of("Blood"));
        assert_eq!(back, log);
        // Rolling up the inner layer first is refused by stack discipline.
        let skipped = roll_up(&nested, &test_type(), "type");
        assert_eq!(otype_of(&skipped, "o3"), &test_type());
        assert_eq!(otype_of(&skipped, "o2"), otype_of(&nested, "o2"));
        assert!(validate(&skipped).ok);
    }

    #[test]
    fn unfold_refines_related_events() {
        let log = drilled_example();
        let ot = CompositeEventType::base("ot");
        let out = unfold(&log, &ot, &test_of("ECG"), &QualifierSet::All).unwrap();
        assert_eq!(etype_of(&out, "e2"), &ot.unfolded(&test_of("ECG")));
        assert_eq!(etype_of(&out, "e4"), &ot);
        assert!(validate(&out).ok);
    }

    #[test]
    fn four_unfolds_give_five_event_types() {
        let log = fully_unfolded();
        let used: BTreeSet<String> = log.events.values().map(|e| encode_event_type(&e.etype)).collect();
        assert_eq!(
            used,
            BTreeSet::from(
                ["rp", "ot@Test~type=ECG", "rt@Test~type=ECG", "ot@Test~type=Blood", "rt@Test~type=Blood"]
                    .map(String::from)
            )
        );
    }

    #[test]
    fn unfold_with_empty_match_is_a_no_op() {
        let log = running_example();
        let out = unfold(&log, &CompositeEventType::base("rp"), &test_type(), &QualifierSet::All).unwrap();
        assert_eq!(out, log);
    }

    #[test]
    fn unfold_respects_qualifiers() {
        let log = running_example();
        let only_patient = QualifierSet::Only(BTreeSet::from(["patient".to_owned()]));
        let out = unfold(&log, &CompositeEventType::base("ot"), &test_type(), &only_patient).unwrap();
        assert_eq!(out, log);
        let only_test = QualifierSet::Only(BTreeSet::from(["test".to_owned()]));
        let out = unfold(&log, &CompositeEventType::base("ot"), &test_type(), &only_test).unwrap();
        assert_eq!(etype_of(&out, "e2"), &CompositeEventType::base("ot").unfolded(&test_type()));
    }

    #[test]
    fn unfold_errors() {
        let log = running_example();
        assert_eq!(
            unfold(&log, &CompositeEventType::base("xx"), &test_type(), &QualifierSet::All),
            Err(OpError::UnknownEventType("xx".into()))
        );
        assert_eq!(
            unfold(&log, &CompositeEventType::base("ot"), &CompositeObjectType::base("Nope"), &QualifierSet::All),
            Err(OpError::UnknownObjectType("Nope".into()))
        );
    }

    #[test]
    fn unfold_retypes_event_attributes() {
        let mut log = running_example();
        let ot = CompositeEventType::base("ot");
        log.declare_event_type(ot.clone(), [("urgency".to_owned(), ValueKind::Integer)]);
        let e2 = log.events.get_mut(&EventId::from("e2")).unwrap();
        e2.attrs.insert("urgency".into(), AttributeValue::Integer(3));
        let out = unfold(&log, &ot, &test_type(), &QualifierSet::All).unwrap();
        assert!(out.eatype("urgency").contains(&ot.unfolded(&test_type())));
        assert!(validate(&out).ok);
        assert_eq!(fold(&out, &ot, &test_type()), log);
    }

    #[test]
    fn unfold_counts_each_event_once() {
        let mut log = running_example();
        log.relate("e2", "test", "o3");
        log.relate("e2", "other", "o2");
        let out = unfold(&log, &CompositeEventType::base("ot"), &test_type(), &QualifierSet::All).unwrap();
        assert_eq!(etype_of(&out, "e2").unfolds.len(), 1);
    }

    #[test]
    fn fold_inverts_unfold() {
        let log = drilled_example();
        let ot = CompositeEventType::base("ot");
        let out = unfold(&log, &ot, &test_of("ECG"), &QualifierSet::All).unwrap();
        assert_eq!(fold(&out, &ot, &test_of("ECG")), log);
        assert_eq!(fold(&log, &ot, &test_of("ECG")), log);
    }

    #[test]
    fn folding_all_four_restores_drilled_log() {
        let mut log = fully_unfolded();
        for (et, kind) in [("rt", "Blood"), ("ot", "Blood"), ("rt", "ECG"), ("ot", "ECG")] {
            log = fold(&log, &CompositeEventType::base(et), &test_of(kind));
        }
        assert_eq!(log, drilled_example());
    }

    #[test]
    fn fold_out_of_order_keeps_log_valid() {
        let log = running_example();
        let ot = CompositeEventType::base("ot");
        let inner = unfold(&log, &ot, &test_type(), &QualifierSet::All).unwrap();
        let outer_et = ot.unfolded(&test_type());
        let patient = CompositeObjectType::base("Patient");
        let outer = unfold(&inner, &outer_et, &patient, &QualifierSet::All).unwrap();
        let skipped = fold(&outer, &ot, &test_type());
        assert!(validate(&skipped).ok);
        let back = fold(&skipped, &outer_et, &patient);
        assert!(validate(&back).ok);
        assert_eq!(fold(&back, &ot, &test_type()), log);
    }

    #[test]
    fn apply_dispatches_and_checks_shape() {
        let log = running_example();
        let req = OperationRequest {
            kind: OperationKind::DrillDown,
            object_type: Some("Test".into()),
            attribute: Some("type".into()),
            event_type: None,
            qualifiers: None,
        };
        assert_eq!(apply(&log, &req).unwrap(), drilled_example());

        let missing = OperationRequest {
            attribute: None,
            ..req.clone()
        };
        assert!(matches!(apply(&log, &missing), Err(OpError::MalformedRequest(_))));

        let extra = OperationRequest {
            event_type: Some("ot".into()),
            ..req.clone()
        };
        assert!(matches!(apply(&log, &extra), Err(OpError::MalformedRequest(_))));

        let bad_name = OperationRequest {
            object_type: Some("Test~type".into()),
            ..req
        };
        assert!(matches!(apply(&log, &bad_name), Err(OpError::MalformedRequest(_))));

        let fold_req = OperationRequest {
            kind: OperationKind::Fold,
            object_type: Some("Test~type=ECG".into()),
            attribute: None,
            event_type: Some("ot".into()),
            qualifiers: None,
        };
        let unfolded = unfold(&drilled_example(), &CompositeEventType::base("ot"), &test_of("ECG"), &QualifierSet::All).unwrap();
        assert_eq!(
            apply(&unfolded, &fold_req).unwrap(),
            fold(&unfolded, &CompositeEventType::base("ot"), &test_of("ECG"))
        );
    }

    #[test]
    fn request_wire_form_round_trips() {
        let op = Operation::Unfold {
            event_type: CompositeEventType::base("ot"),
            object_type: test_of("ECG"),
            qualifiers: QualifierSet::Only(BTreeSet::from(["test".to_owned()])),
        };
        let req = OperationRequest::from(&op);
        let json = serde_json::to_string(&req).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"Unfold","object_type":"Test~type=ECG","event_type":"ot","qualifiers":["test"]}"#
        );
        let back: OperationRequest = serde_json::from_str(&json).unwrap();
        assert_eq!(Operation::try_from(&back).unwrap(), op);
    }

    #[test]
    fn operations_preserve_events() {
        let log = fully_unfolded();
        let base = running_example();
        for (id, e) in &base.events {
            let Event { time, attrs, .. } = &log.events[id];
            assert_eq!((time, attrs), (&e.time, &e.attrs));
        }
        assert_eq!(log.e2o, base.e2o);
    }
}
