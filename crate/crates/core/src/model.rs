//! In-memory object-centric event log.
//!
//! A log is a plain value: every transformation in [`crate::ops`] takes a
//! reference and returns a fresh log, so a `&OcelLog` can be shared freely
//! across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub type Timestamp = DateTime<Utc>;
pub type AttributeName = String;
pub type Qualifier = String;

/// Declared attributes of one event or object type, with their value kinds.
pub type AttributeSchema = BTreeMap<AttributeName, ValueKind>;

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(EventId);
string_id!(ObjectId);

/// Declared kind of an attribute, using the OCEL 2.0 type names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    String,
    Integer,
    Float,
    Boolean,
    Time,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::String => "string",
            ValueKind::Integer => "integer",
            ValueKind::Float => "float",
            ValueKind::Boolean => "boolean",
            ValueKind::Time => "time",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "string" => ValueKind::String,
            "integer" => ValueKind::Integer,
            "float" => ValueKind::Float,
            "boolean" => ValueKind::Boolean,
            "time" => ValueKind::Time,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeValue {
    Text(String),
    Integer(i64),
    Real(f64),
    Boolean(bool),
    Time(Timestamp),
}

impl AttributeValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            AttributeValue::Text(_) => ValueKind::String,
            AttributeValue::Integer(_) => ValueKind::Integer,
            AttributeValue::Real(_) => ValueKind::Float,
            AttributeValue::Boolean(_) => ValueKind::Boolean,
            AttributeValue::Time(_) => ValueKind::Time,
        }
    }

    /// Canonical text form used inside drilled type names.
    ///
    /// Text is verbatim, integers base-10, reals the shortest decimal that
    /// round-trips, booleans `true`/`false`, timestamps RFC 3339 in UTC.
    pub fn render(&self) -> String {
        match self {
            AttributeValue::Text(s) => s.clone(),
            AttributeValue::Integer(i) => i.to_string(),
            AttributeValue::Real(r) => r.to_string(),
            AttributeValue::Boolean(b) => b.to_string(),
            AttributeValue::Time(t) => format_timestamp(t),
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// An object type refined by zero or more drill-down steps.
///
/// Each drill step records the attribute and the canonical rendering of the
/// value the object carried. Steps are pushed by drill-down and popped by
/// roll-up.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompositeObjectType {
    pub base: String,
    pub drills: Vec<DrillStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DrillStep {
    pub attribute: AttributeName,
    pub value: String,
}

impl CompositeObjectType {
    pub fn base(name: impl Into<String>) -> Self {
        Self {
            base: name.into(),
            drills: Vec::new(),
        }
    }

    pub fn is_base(&self) -> bool {
        self.drills.is_empty()
    }

    /// This type refined by one more `(attribute, value)` step.
    pub fn drilled(&self, attribute: &str, value: &AttributeValue) -> Self {
        self.drilled_rendered(attribute, value.render())
    }

    pub fn drilled_rendered(&self, attribute: &str, value: impl Into<String>) -> Self {
        let mut out = self.clone();
        out.drills.push(DrillStep {
            attribute: attribute.to_owned(),
            value: value.into(),
        });
        out
    }

    /// Splits off the outermost drill step.
    pub fn parent(&self) -> Option<(CompositeObjectType, &DrillStep)> {
        let (last, rest) = self.drills.split_last()?;
        Some((
            CompositeObjectType {
                base: self.base.clone(),
                drills: rest.to_vec(),
            },
            last,
        ))
    }

    /// True when `self` is `parent` extended by exactly one step on `attribute`.
    pub fn is_drill_of(&self, parent: &CompositeObjectType, attribute: &str) -> bool {
        self.base == parent.base
            && self.drills.len() == parent.drills.len() + 1
            && self.drills[..parent.drills.len()] == parent.drills[..]
            && self.drills.last().is_some_and(|d| d.attribute == attribute)
    }
}

/// An event type refined by zero or more unfold steps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompositeEventType {
    pub base: String,
    pub unfolds: Vec<CompositeObjectType>,
}

impl CompositeEventType {
    pub fn base(name: impl Into<String>) -> Self {
        Self {
            base: name.into(),
            unfolds: Vec::new(),
        }
    }

    pub fn is_base(&self) -> bool {
        self.unfolds.is_empty()
    }

    pub fn unfolded(&self, object_type: &CompositeObjectType) -> Self {
        let mut out = self.clone();
        out.unfolds.push(object_type.clone());
        out
    }

    pub fn parent(&self) -> Option<(CompositeEventType, &CompositeObjectType)> {
        let (last, rest) = self.unfolds.split_last()?;
        Some((
            CompositeEventType {
                base: self.base.clone(),
                unfolds: rest.to_vec(),
            },
            last,
        ))
    }
}

// Display uses the flat encoding so diagnostics match what files and the CLI
// show.
impl fmt::Display for CompositeObjectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::encoding::encode_object_type(self))
    }
}

impl fmt::Display for CompositeEventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::encoding::encode_event_type(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub id: EventId,
    pub etype: CompositeEventType,
    pub time: Timestamp,
    pub attrs: BTreeMap<AttributeName, AttributeValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectEntity {
    pub id: ObjectId,
    pub otype: CompositeObjectType,
    /// Value history per attribute, strictly increasing in time.
    pub attrs: BTreeMap<AttributeName, Vec<(Timestamp, AttributeValue)>>,
}

impl ObjectEntity {
    /// Most recently recorded value of `attr`, regardless of query time.
    pub fn latest_value(&self, attr: &str) -> Option<&AttributeValue> {
        self.attrs
            .get(attr)
            .and_then(|h| h.iter().max_by_key(|(t, _)| *t))
            .map(|(_, v)| v)
    }
}

/// Value of `attr` on `obj` at time `t`: the entry with the greatest
/// timestamp not after `t`, or `None` when nothing was recorded yet.
pub fn attribute_value_at<'a>(
    obj: &'a ObjectEntity,
    attr: &str,
    t: Timestamp,
) -> Option<&'a AttributeValue> {
    obj.attrs
        .get(attr)?
        .iter()
        .filter(|(at, _)| *at <= t)
        .max_by_key(|(at, _)| *at)
        .map(|(_, v)| v)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct E2ORelation {
    pub event: EventId,
    pub qualifier: Qualifier,
    pub object: ObjectId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct O2ORelation {
    pub source: ObjectId,
    pub qualifier: Qualifier,
    pub target: ObjectId,
}

/// An object-centric event log.
///
/// `event_types` and `object_types` are the type universes in use, each
/// mapped to its declared attributes. The attribute typing functions are
/// derived from them: an attribute is typed for every type that declares it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OcelLog {
    pub events: BTreeMap<EventId, Event>,
    pub objects: BTreeMap<ObjectId, ObjectEntity>,
    pub event_types: BTreeMap<CompositeEventType, AttributeSchema>,
    pub object_types: BTreeMap<CompositeObjectType, AttributeSchema>,
    pub e2o: BTreeSet<E2ORelation>,
    pub o2o: BTreeSet<O2ORelation>,
}

impl OcelLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.objects.is_empty()
    }

    /// Object types that declare `attr`.
    pub fn oatype(&self, attr: &str) -> BTreeSet<&CompositeObjectType> {
        self.object_types
            .iter()
            .filter(|(_, schema)| schema.contains_key(attr))
            .map(|(t, _)| t)
            .collect()
    }

    /// Event types that declare `attr`.
    pub fn eatype(&self, attr: &str) -> BTreeSet<&CompositeEventType> {
        self.event_types
            .iter()
            .filter(|(_, schema)| schema.contains_key(attr))
            .map(|(t, _)| t)
            .collect()
    }

    pub fn declare_object_type(
        &mut self,
        ty: CompositeObjectType,
        attrs: impl IntoIterator<Item = (AttributeName, ValueKind)>,
    ) {
        self.object_types.entry(ty).or_default().extend(attrs);
    }

    pub fn declare_event_type(
        &mut self,
        ty: CompositeEventType,
        attrs: impl IntoIterator<Item = (AttributeName, ValueKind)>,
    ) {
        self.event_types.entry(ty).or_default().extend(attrs);
    }

    pub fn insert_event(&mut self, event: Event) {
        self.events.insert(event.id.clone(), event);
    }

    pub fn insert_object(&mut self, object: ObjectEntity) {
        self.objects.insert(object.id.clone(), object);
    }

    pub fn relate(&mut self, event: &str, qualifier: &str, object: &str) {
        self.e2o.insert(E2ORelation {
            event: event.into(),
            qualifier: qualifier.to_owned(),
            object: object.into(),
        });
    }

    pub fn relate_objects(&mut self, source: &str, qualifier: &str, target: &str) {
        self.o2o.insert(O2ORelation {
            source: source.into(),
            qualifier: qualifier.to_owned(),
            target: target.into(),
        });
    }

    /// Related objects per event, each object listed once regardless of how
    /// many qualifiers link it.
    pub fn objects_by_event(&self) -> BTreeMap<&EventId, BTreeSet<&ObjectId>> {
        let mut out: BTreeMap<&EventId, BTreeSet<&ObjectId>> = BTreeMap::new();
        for rel in &self.e2o {
            out.entry(&rel.event).or_default().insert(&rel.object);
        }
        out
    }

    /// Related events per object, each event listed once.
    pub fn events_by_object(&self) -> BTreeMap<&ObjectId, BTreeSet<&EventId>> {
        let mut out: BTreeMap<&ObjectId, BTreeSet<&EventId>> = BTreeMap::new();
        for rel in &self.e2o {
            out.entry(&rel.object).or_default().insert(&rel.event);
        }
        out
    }
}
