//! Seeded random logs and operations for property tests and benchmarks.
//!
//! Type and attribute names deliberately contain the encoding's delimiter
//! characters so every generated log also exercises escaping.

use std::collections::BTreeSet;

use chrono::{Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    AttributeValue, CompositeEventType, CompositeObjectType, Event, ObjectEntity, OcelLog,
    Timestamp, ValueKind,
};
use crate::ops::{Operation, QualifierSet};

/// Size limits for [`random_log`].
#[derive(Debug, Clone, Copy)]
pub struct LogShape {
    pub max_events: usize,
    pub max_objects: usize,
    pub max_types: usize,
}

impl Default for LogShape {
    fn default() -> Self {
        Self {
            max_events: 12,
            max_objects: 8,
            max_types: 3,
        }
    }
}

const OBJECT_TYPES: [&str; 3] = ["Order", "It~em", "Pa=ck@"];
const EVENT_TYPES: [&str; 3] = ["create", "pay@once", "ship\\"];
const QUALIFIERS: [&str; 3] = ["q1", "q2", "with space"];
const OBJECT_ATTRS: [(&str, ValueKind); 5] = [
    ("kind", ValueKind::String),
    ("level", ValueKind::Integer),
    ("sco=re", ValueKind::Float),
    ("flag", ValueKind::Boolean),
    ("due", ValueKind::Time),
];
const EVENT_ATTRS: [(&str, ValueKind); 2] = [("cost", ValueKind::Integer), ("note", ValueKind::String)];

fn base_time() -> Timestamp {
    Utc.with_ymd_and_hms(2024, 3, 4, 8, 0, 0).unwrap()
}

fn random_value<R: Rng>(rng: &mut R, kind: ValueKind) -> AttributeValue {
    match kind {
        ValueKind::String => {
            AttributeValue::Text((*["a", "b", "c~", "d=e", ""].choose(rng).unwrap()).to_owned())
        }
        ValueKind::Integer => AttributeValue::Integer(rng.random_range(-2..3)),
        ValueKind::Float => AttributeValue::Real(*[0.5, 1.0, -3.25, 1e-7, 0.1].choose(rng).unwrap()),
        ValueKind::Boolean => AttributeValue::Boolean(rng.random_bool(0.5)),
        ValueKind::Time => {
            AttributeValue::Time(base_time() + Duration::milliseconds(rng.random_range(0..3) * 1500))
        }
    }
}

fn pick_count<R: Rng>(rng: &mut R, max: usize) -> usize {
    rng.random_range(1..=max.max(1))
}

/// A valid random log within `shape`, fully determined by `seed`.
pub fn random_log(seed: u64, shape: LogShape) -> OcelLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = OcelLog::new();

    let n_ot = pick_count(&mut rng, shape.max_types.min(OBJECT_TYPES.len()));
    let n_et = pick_count(&mut rng, shape.max_types.min(EVENT_TYPES.len()));
    let otypes: Vec<CompositeObjectType> =
        OBJECT_TYPES[..n_ot].iter().map(|n| CompositeObjectType::base(*n)).collect();
    let etypes: Vec<CompositeEventType> =
        EVENT_TYPES[..n_et].iter().map(|n| CompositeEventType::base(*n)).collect();

    for t in &otypes {
        let attrs: Vec<_> = OBJECT_ATTRS
            .iter()
            .filter(|_| rng.random_bool(0.6))
            .map(|(n, k)| ((*n).to_owned(), *k))
            .collect();
        log.declare_object_type(t.clone(), attrs);
    }
    for t in &etypes {
        let attrs: Vec<_> = EVENT_ATTRS
            .iter()
            .filter(|_| rng.random_bool(0.5))
            .map(|(n, k)| ((*n).to_owned(), *k))
            .collect();
        log.declare_event_type(t.clone(), attrs);
    }

    let n_objects = rng.random_range(0..=shape.max_objects);
    for i in 0..n_objects {
        let otype = otypes.choose(&mut rng).unwrap().clone();
        let schema = log.object_types[&otype].clone();
        let mut object = ObjectEntity {
            id: format!("o{i}").into(),
            otype,
            attrs: Default::default(),
        };
        for (name, kind) in schema {
            if !rng.random_bool(0.7) {
                continue;
            }
            let len = rng.random_range(1..=2);
            let mut t = if rng.random_bool(0.5) {
                Timestamp::UNIX_EPOCH
            } else {
                base_time() + Duration::minutes(rng.random_range(0..5))
            };
            let mut history = Vec::new();
            for _ in 0..len {
                history.push((t, random_value(&mut rng, kind)));
                t += Duration::minutes(rng.random_range(1..30));
            }
            object.attrs.insert(name, history);
        }
        log.insert_object(object);
    }

    let object_ids: Vec<String> = log.objects.keys().map(|k| k.to_string()).collect();
    let n_events = rng.random_range(0..=shape.max_events);
    for i in 0..n_events {
        let etype = etypes.choose(&mut rng).unwrap().clone();
        let schema = log.event_types[&etype].clone();
        let mut attrs = std::collections::BTreeMap::new();
        for (name, kind) in schema {
            if rng.random_bool(0.5) {
                attrs.insert(name, random_value(&mut rng, kind));
            }
        }
        let id = format!("e{i}");
        log.insert_event(Event {
            id: id.as_str().into(),
            etype,
            time: base_time() + Duration::minutes(rng.random_range(0..6)),
            attrs,
        });
        if object_ids.is_empty() {
            continue;
        }
        for _ in 0..rng.random_range(0..=3) {
            let o = object_ids.choose(&mut rng).unwrap();
            let q = QUALIFIERS.choose(&mut rng).unwrap();
            log.relate(&id, q, o);
        }
    }
    if !object_ids.is_empty() {
        for _ in 0..rng.random_range(0..=3) {
            let a = object_ids.choose(&mut rng).unwrap();
            let b = object_ids.choose(&mut rng).unwrap();
            log.relate_objects(a, QUALIFIERS.choose(&mut rng).unwrap(), b);
        }
    }
    log
}

/// A random operation whose parameters refer to types present in `log`
/// whenever possible.
pub fn random_operation<R: Rng>(rng: &mut R, log: &OcelLog) -> Operation {
    let otypes: Vec<&CompositeObjectType> = log.object_types.keys().collect();
    let etypes: Vec<&CompositeEventType> = log.event_types.keys().collect();
    let fallback_ot = CompositeObjectType::base(OBJECT_TYPES[0]);
    let fallback_et = CompositeEventType::base(EVENT_TYPES[0]);
    let ot = otypes.choose(rng).copied().unwrap_or(&fallback_ot).clone();
    let et = etypes.choose(rng).copied().unwrap_or(&fallback_et).clone();

    match rng.random_range(0..4) {
        0 => {
            let attrs: Vec<&String> = log
                .object_types
                .get(&ot)
                .map(|s| s.keys().collect())
                .unwrap_or_default();
            let attribute = attrs
                .choose(rng)
                .map(|s| (*s).clone())
                .unwrap_or_else(|| OBJECT_ATTRS[0].0.to_owned());
            Operation::DrillDown {
                object_type: ot,
                attribute,
            }
        }
        1 => match ot.parent() {
            Some((parent, step)) => Operation::RollUp {
                attribute: step.attribute.clone(),
                object_type: parent,
            },
            None => Operation::RollUp {
                attribute: OBJECT_ATTRS[0].0.to_owned(),
                object_type: ot,
            },
        },
        2 => {
            let qualifiers = if rng.random_bool(0.5) {
                QualifierSet::All
            } else {
                QualifierSet::Only(
                    QUALIFIERS
                        .iter()
                        .filter(|_| rng.random_bool(0.5))
                        .map(|q| (*q).to_owned())
                        .collect::<BTreeSet<_>>(),
                )
            };
            Operation::Unfold {
                event_type: et,
                object_type: ot,
                qualifiers,
            }
        }
        _ => match et.parent() {
            Some((parent, last)) => Operation::Fold {
                object_type: last.clone(),
                event_type: parent,
            },
            None => Operation::Fold {
                event_type: et,
                object_type: ot,
            },
        },
    }
}

/// A larger log for benchmarks: `objects` objects over three types, each
/// touched by roughly `events_per_object` events.
pub fn synthetic_log(objects: usize, events_per_object: usize, seed: u64) -> OcelLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = OcelLog::new();
    let otypes: Vec<CompositeObjectType> = ["Order", "Item", "Package"]
        .map(CompositeObjectType::base)
        .to_vec();
    let etypes: Vec<CompositeEventType> = ["place", "pick", "pack", "ship", "pay", "return"]
        .map(CompositeEventType::base)
        .to_vec();
    for t in &otypes {
        log.declare_object_type(t.clone(), [("kind".to_owned(), ValueKind::String)]);
    }
    for t in &etypes {
        log.declare_event_type(t.clone(), []);
    }
    for i in 0..objects {
        let mut o = ObjectEntity {
            id: format!("o{i}").into(),
            otype: otypes[i % otypes.len()].clone(),
            attrs: Default::default(),
        };
        o.attrs.insert(
            "kind".into(),
            vec![(Timestamp::UNIX_EPOCH, random_value(&mut rng, ValueKind::String))],
        );
        log.insert_object(o);
    }
    let n_events = objects * events_per_object / 2;
    for i in 0..n_events {
        let id = format!("e{i}");
        log.insert_event(Event {
            id: id.as_str().into(),
            etype: etypes.choose(&mut rng).unwrap().clone(),
            time: base_time() + Duration::seconds(rng.random_range(0..86_400)),
            attrs: Default::default(),
        });
        for _ in 0..2 {
            let o = rng.random_range(0..objects.max(1));
            log.relate(&id, "rel", &format!("o{o}"));
        }
    }
    log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate;

    #[test]
    fn generated_logs_are_valid_and_bounded() {
        for seed in 0..200 {
            let log = random_log(seed, LogShape::default());
            let report = validate(&log);
            assert!(report.ok, "seed {seed}: {report}");
            assert!(log.events.len() <= 12 && log.objects.len() <= 8);
            assert!(log.object_types.len() <= 3 && log.event_types.len() <= 3);
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        assert_eq!(random_log(7, LogShape::default()), random_log(7, LogShape::default()));
    }

    #[test]
    fn synthetic_log_is_valid() {
        assert!(validate(&synthetic_log(60, 6, 1)).ok);
    }
}
