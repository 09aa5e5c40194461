//! Structural validation of an [`OcelLog`].

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::model::OcelLog;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub message: String,
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return f.write_str("ok");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  [{}] {}", v.rule, v.message)?;
        }
        Ok(())
    }
}

fn violation(rule: &'static str, message: String, ids: Vec<String>) -> Violation {
    Violation { rule, message, ids }
}

/// Checks every structural invariant of `log` and reports all violations.
pub fn validate(log: &OcelLog) -> ValidationReport {
    let mut out = Vec::new();

    for (key, event) in &log.events {
        if *key != event.id {
            out.push(violation(
                "id-key-mismatch",
                format!("event stored under {key} carries id {}", event.id),
                vec![key.to_string()],
            ));
        }
        if log.objects.contains_key(event.id.as_str()) {
            out.push(violation(
                "id-collision",
                format!("id {} is used by both an event and an object", event.id),
                vec![event.id.to_string()],
            ));
        }
        let Some(schema) = log.event_types.get(&event.etype) else {
            out.push(violation(
                "undeclared-event-type",
                format!("event {} has undeclared type {}", event.id, event.etype),
                vec![event.id.to_string()],
            ));
            continue;
        };
        for (name, value) in &event.attrs {
            match schema.get(name) {
                None => out.push(violation(
                    "unregistered-event-attribute",
                    format!(
                        "event {} carries attribute {name} not declared for type {}",
                        event.id, event.etype
                    ),
                    vec![event.id.to_string()],
                )),
                Some(kind) if *kind != value.kind() => out.push(violation(
                    "attribute-kind-mismatch",
                    format!(
                        "event {} attribute {name} is {} but declared {}",
                        event.id,
                        value.kind().as_str(),
                        kind.as_str()
                    ),
                    vec![event.id.to_string()],
                )),
                Some(_) => {}
            }
        }
    }

    for (key, object) in &log.objects {
        if *key != object.id {
            out.push(violation(
                "id-key-mismatch",
                format!("object stored under {key} carries id {}", object.id),
                vec![key.to_string()],
            ));
        }
        let schema = log.object_types.get(&object.otype);
        if schema.is_none() {
            out.push(violation(
                "undeclared-object-type",
                format!("object {} has undeclared type {}", object.id, object.otype),
                vec![object.id.to_string()],
            ));
        }
        for (name, history) in &object.attrs {
            if let Some(schema) = schema {
                match schema.get(name) {
                    None => out.push(violation(
                        "unregistered-object-attribute",
                        format!(
                            "object {} carries attribute {name} not declared for type {}",
                            object.id, object.otype
                        ),
                        vec![object.id.to_string()],
                    )),
                    Some(kind) => {
                        if let Some((_, bad)) = history.iter().find(|(_, v)| v.kind() != *kind) {
                            out.push(violation(
                                "attribute-kind-mismatch",
                                format!(
                                    "object {} attribute {name} has a {} value but is declared {}",
                                    object.id,
                                    bad.kind().as_str(),
                                    kind.as_str()
                                ),
                                vec![object.id.to_string()],
                            ));
                        }
                    }
                }
            }
            if history.windows(2).any(|w| w[0].0 >= w[1].0) {
                out.push(violation(
                    "history-order",
                    format!(
                        "object {} attribute {name} history is not strictly increasing in time",
                        object.id
                    ),
                    vec![object.id.to_string()],
                ));
            }
        }
    }

    let mut dangling_events = BTreeSet::new();
    let mut dangling_objects = BTreeSet::new();
    for rel in &log.e2o {
        if !log.events.contains_key(&rel.event) {
            dangling_events.insert(rel.event.to_string());
        }
        if !log.objects.contains_key(&rel.object) {
            dangling_objects.insert(rel.object.to_string());
        }
    }
    for rel in &log.o2o {
        for id in [&rel.source, &rel.target] {
            if !log.objects.contains_key(id) {
                dangling_objects.insert(id.to_string());
            }
        }
    }
    for id in dangling_events {
        out.push(violation(
            "dangling-event-reference",
            format!("dangling event reference {id}"),
            vec![id],
        ));
    }
    for id in dangling_objects {
        out.push(violation(
            "dangling-object-reference",
            format!("dangling object reference {id}"),
            vec![id],
        ));
    }

    ValidationReport::from_violations(out)
}
