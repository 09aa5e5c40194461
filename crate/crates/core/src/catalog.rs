//! Granularity-aware summary of the types in a log.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::encoding::{encode_event_type, encode_object_type};
use crate::model::{CompositeEventType, CompositeObjectType, OcelLog};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObjectTypeNode {
    pub object_type: String,
    pub objects: usize,
    /// Attributes with at least one recorded value on objects of this type.
    pub drillable: Vec<String>,
    pub children: Vec<ObjectTypeNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventTypeEntry {
    pub event_type: String,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnfoldCandidate {
    pub event_type: String,
    pub object_type: String,
    pub events: usize,
    pub qualifiers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TypeHierarchy {
    /// One drill tree per base object type name.
    pub object_types: BTreeMap<String, ObjectTypeNode>,
    /// Composite event types in use per base event type name.
    pub event_types: BTreeMap<String, Vec<EventTypeEntry>>,
    /// (event type, object type) pairs with at least one related event.
    pub unfoldable: Vec<UnfoldCandidate>,
}

impl TypeHierarchy {
    pub fn is_empty(&self) -> bool {
        self.object_types.is_empty() && self.event_types.is_empty()
    }

    /// Node for an encoded object type name, searched through every tree.
    pub fn object_type(&self, encoded: &str) -> Option<&ObjectTypeNode> {
        fn find<'a>(n: &'a ObjectTypeNode, encoded: &str) -> Option<&'a ObjectTypeNode> {
            if n.object_type == encoded {
                return Some(n);
            }
            n.children.iter().find_map(|c| find(c, encoded))
        }
        self.object_types.values().find_map(|n| find(n, encoded))
    }
}

pub fn type_catalog(log: &OcelLog) -> TypeHierarchy {
    let mut counts: BTreeMap<CompositeObjectType, usize> = BTreeMap::new();
    let mut drillable: BTreeMap<CompositeObjectType, BTreeSet<String>> = BTreeMap::new();
    for t in log.object_types.keys() {
        counts.entry(t.clone()).or_default();
    }
    for o in log.objects.values() {
        *counts.entry(o.otype.clone()).or_default() += 1;
        drillable
            .entry(o.otype.clone())
            .or_default()
            .extend(o.attrs.iter().filter(|(_, h)| !h.is_empty()).map(|(a, _)| a.clone()));
    }
    // Intermediate layers may have been dropped by a roll-up while deeper
    // refinements are still in use; keep them in the tree with zero objects.
    let with_ancestors: BTreeSet<CompositeObjectType> = counts
        .keys()
        .flat_map(|t| (0..=t.drills.len()).map(move |n| CompositeObjectType {
            base: t.base.clone(),
            drills: t.drills[..n].to_vec(),
        }))
        .collect();

    fn build(
        t: &CompositeObjectType,
        all: &BTreeSet<CompositeObjectType>,
        counts: &BTreeMap<CompositeObjectType, usize>,
        drillable: &BTreeMap<CompositeObjectType, BTreeSet<String>>,
    ) -> ObjectTypeNode {
        let mut children: Vec<ObjectTypeNode> = all
            .iter()
            .filter(|c| c.parent().is_some_and(|(p, _)| p == *t))
            .map(|c| build(c, all, counts, drillable))
            .collect();
        children.sort_by(|a, b| a.object_type.cmp(&b.object_type));
        ObjectTypeNode {
            object_type: encode_object_type(t),
            objects: counts.get(t).copied().unwrap_or(0),
            drillable: drillable.get(t).into_iter().flatten().cloned().collect(),
            children,
        }
    }

    let object_types = with_ancestors
        .iter()
        .filter(|t| t.is_base())
        .map(|t| (t.base.clone(), build(t, &with_ancestors, &counts, &drillable)))
        .collect();

    let mut ecounts: BTreeMap<&CompositeEventType, usize> = BTreeMap::new();
    for t in log.event_types.keys() {
        ecounts.entry(t).or_default();
    }
    for e in log.events.values() {
        *ecounts.entry(&e.etype).or_default() += 1;
    }
    let mut event_types: BTreeMap<String, Vec<EventTypeEntry>> = BTreeMap::new();
    for (t, n) in ecounts {
        event_types.entry(t.base.clone()).or_default().push(EventTypeEntry {
            event_type: encode_event_type(t),
            events: n,
        });
    }
    for entries in event_types.values_mut() {
        entries.sort_by(|a, b| a.event_type.cmp(&b.event_type));
    }

    // (event type, object type) -> (related event ids, qualifiers seen)
    type Matches<'a> = (BTreeSet<&'a str>, BTreeSet<&'a str>);
    let mut pairs: BTreeMap<(String, String), Matches> = BTreeMap::new();
    for rel in &log.e2o {
        let (Some(e), Some(o)) = (log.events.get(&rel.event), log.objects.get(&rel.object)) else {
            continue;
        };
        let entry = pairs
            .entry((encode_event_type(&e.etype), encode_object_type(&o.otype)))
            .or_default();
        entry.0.insert(e.id.as_str());
        entry.1.insert(rel.qualifier.as_str());
    }
    let unfoldable = pairs
        .into_iter()
        .map(|((event_type, object_type), (events, quals))| UnfoldCandidate {
            event_type,
            object_type,
            events: events.len(),
            qualifiers: quals.into_iter().map(str::to_owned).collect(),
        })
        .collect();

    TypeHierarchy {
        object_types,
        event_types,
        unfoldable,
    }
}
