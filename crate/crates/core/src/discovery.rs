//! Flattening and object-centric directly-follows graph discovery.
//!
//! The log is projected onto each object type, one trace per object, and the
//! directly-follows pairs of all traces are counted per object type. With the
//! `parallel` feature the per-object work runs on rayon; the result is
//! identical either way.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::encoding::{encode_event_type, encode_object_type};
use crate::model::{CompositeEventType, CompositeObjectType, EventId, ObjectId, OcelLog, Timestamp};
use crate::ops::OpError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub event: EventId,
    pub etype: CompositeEventType,
    pub time: Timestamp,
}

/// Events related to one object, ordered by `(time, event id)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectTrace {
    pub object: ObjectId,
    pub otype: CompositeObjectType,
    pub steps: Vec<TraceStep>,
}

impl ObjectTrace {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcKey {
    pub source: CompositeEventType,
    pub target: CompositeEventType,
    pub otype: CompositeObjectType,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OcDfg {
    /// Event count per event type, each event counted once.
    pub nodes: BTreeMap<CompositeEventType, usize>,
    pub arcs: BTreeMap<ArcKey, usize>,
    pub start: BTreeMap<CompositeObjectType, BTreeMap<CompositeEventType, usize>>,
    pub end: BTreeMap<CompositeObjectType, BTreeMap<CompositeEventType, usize>>,
}

impl OcDfg {
    /// Arc frequencies restricted to one object type.
    pub fn arcs_for<'a>(
        &'a self,
        otype: &'a CompositeObjectType,
    ) -> impl Iterator<Item = (&'a ArcKey, usize)> + 'a {
        self.arcs
            .iter()
            .filter(move |(k, _)| k.otype == *otype)
            .map(|(k, n)| (k, *n))
    }

    pub fn arc(&self, source: &str, target: &str, otype: &str) -> Option<usize> {
        self.arcs
            .iter()
            .find(|(k, _)| {
                encode_event_type(&k.source) == source
                    && encode_event_type(&k.target) == target
                    && encode_object_type(&k.otype) == otype
            })
            .map(|(_, n)| *n)
    }

    /// A copy without arcs below `min_arc_frequency`.
    pub fn filtered(&self, min_arc_frequency: usize) -> OcDfg {
        OcDfg {
            arcs: self
                .arcs
                .iter()
                .filter(|(_, n)| **n >= min_arc_frequency)
                .map(|(k, n)| (k.clone(), *n))
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> DfgJson {
        let counts = |m: &BTreeMap<CompositeObjectType, BTreeMap<CompositeEventType, usize>>| {
            let mut out: Vec<BoundaryJson> = m
                .iter()
                .flat_map(|(ot, per)| {
                    per.iter().map(move |(et, n)| BoundaryJson {
                        object_type: encode_object_type(ot),
                        event_type: encode_event_type(et),
                        count: *n,
                    })
                })
                .collect();
            out.sort_by(|a, b| (&a.object_type, &a.event_type).cmp(&(&b.object_type, &b.event_type)));
            out
        };
        let mut nodes: Vec<NodeJson> = self
            .nodes
            .iter()
            .map(|(t, n)| NodeJson {
                event_type: encode_event_type(t),
                frequency: *n,
            })
            .collect();
        nodes.sort_by(|a, b| a.event_type.cmp(&b.event_type));
        let mut arcs: Vec<ArcJson> = self
            .arcs
            .iter()
            .map(|(k, n)| ArcJson {
                source: encode_event_type(&k.source),
                target: encode_event_type(&k.target),
                object_type: encode_object_type(&k.otype),
                frequency: *n,
            })
            .collect();
        arcs.sort_by(|a, b| {
            (&a.source, &a.target, &a.object_type).cmp(&(&b.source, &b.target, &b.object_type))
        });
        let object_types: BTreeSet<String> = self
            .arcs
            .keys()
            .map(|k| &k.otype)
            .chain(self.start.keys())
            .map(encode_object_type)
            .collect();
        DfgJson {
            nodes,
            arcs,
            start: counts(&self.start),
            end: counts(&self.end),
            object_types: object_types
                .into_iter()
                .map(|name| {
                    let color = auto_color(&name).to_owned();
                    ObjectTypeColor { name, color }
                })
                .collect(),
        }
    }
}

/// JSON rendering of an [`OcDfg`] with flat type names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DfgJson {
    pub nodes: Vec<NodeJson>,
    pub arcs: Vec<ArcJson>,
    pub start: Vec<BoundaryJson>,
    pub end: Vec<BoundaryJson>,
    pub object_types: Vec<ObjectTypeColor>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeJson {
    pub event_type: String,
    pub frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArcJson {
    pub source: String,
    pub target: String,
    pub object_type: String,
    pub frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundaryJson {
    pub object_type: String,
    pub event_type: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObjectTypeColor {
    pub name: String,
    pub color: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Sequential,
    /// Rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
}

impl Strategy {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Strategy::Parallel
    }
}

fn map_ordered<T, R, F>(items: &[T], strategy: Strategy, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if strategy.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = strategy;
    items.iter().map(f).collect()
}

fn build_trace(
    log: &OcelLog,
    related: &BTreeMap<&ObjectId, BTreeSet<&EventId>>,
    object: &ObjectId,
) -> ObjectTrace {
    let o = &log.objects[object];
    let mut steps: Vec<TraceStep> = related
        .get(object)
        .into_iter()
        .flatten()
        .filter_map(|id| log.events.get(*id))
        .map(|e| TraceStep {
            event: e.id.clone(),
            etype: e.etype.clone(),
            time: e.time,
        })
        .collect();
    steps.sort_by(|a, b| (a.time, &a.event).cmp(&(b.time, &b.event)));
    ObjectTrace {
        object: o.id.clone(),
        otype: o.otype.clone(),
        steps,
    }
}

/// One trace per object of type `ot`, in object id order. Objects without
/// related events yield empty traces.
pub fn flatten(log: &OcelLog, ot: &CompositeObjectType) -> Result<Vec<ObjectTrace>, OpError> {
    if !log.object_types.contains_key(ot) {
        return Err(OpError::UnknownObjectType(encode_object_type(ot)));
    }
    let related = log.events_by_object();
    let ids: Vec<&ObjectId> = log
        .objects
        .values()
        .filter(|o| o.otype == *ot)
        .map(|o| &o.id)
        .collect();
    Ok(map_ordered(&ids, Strategy::default(), |id| build_trace(log, &related, id)))
}

pub fn discover_ocdfg(log: &OcelLog) -> OcDfg {
    discover_ocdfg_with(log, Strategy::default())
}

pub fn discover_ocdfg_with(log: &OcelLog, strategy: Strategy) -> OcDfg {
    let related = log.events_by_object();
    let ids: Vec<&ObjectId> = log.objects.keys().collect();
    let traces = map_ordered(&ids, strategy, |id| build_trace(log, &related, id));

    let mut dfg = OcDfg::default();
    for e in log.events.values() {
        *dfg.nodes.entry(e.etype.clone()).or_default() += 1;
    }
    for trace in &traces {
        let (Some(first), Some(last)) = (trace.steps.first(), trace.steps.last()) else {
            continue;
        };
        *dfg.start
            .entry(trace.otype.clone())
            .or_default()
            .entry(first.etype.clone())
            .or_default() += 1;
        *dfg.end
            .entry(trace.otype.clone())
            .or_default()
            .entry(last.etype.clone())
            .or_default() += 1;
        for pair in trace.steps.windows(2) {
            let key = ArcKey {
                source: pair[0].etype.clone(),
                target: pair[1].etype.clone(),
                otype: trace.otype.clone(),
            };
            *dfg.arcs.entry(key).or_default() += 1;
        }
    }
    dfg
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Stable palette color for an encoded object type name (FNV-1a).
pub fn auto_color(encoded: &str) -> &'static str {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in encoded.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    PALETTE[(h % PALETTE.len() as u64) as usize]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotOptions {
    pub min_arc_frequency: usize,
    /// Explicit colors by encoded object type name; others get [`auto_color`].
    pub colors: BTreeMap<String, String>,
}

impl Default for DotOptions {
    fn default() -> Self {
        Self {
            min_arc_frequency: 1,
            colors: BTreeMap::new(),
        }
    }
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz DOT text for `dfg`. Output depends only on the graph and the
/// options.
pub fn render_dot(dfg: &OcDfg, options: &DotOptions) -> String {
    let threshold = options.min_arc_frequency.max(1);
    let mut nodes: Vec<(String, usize)> = dfg
        .nodes
        .iter()
        .map(|(t, n)| (encode_event_type(t), *n))
        .collect();
    nodes.sort();
    let mut arcs: Vec<(String, String, String, usize)> = dfg
        .arcs
        .iter()
        .filter(|(_, n)| **n >= threshold)
        .map(|(k, n)| {
            (
                encode_event_type(&k.source),
                encode_event_type(&k.target),
                encode_object_type(&k.otype),
                *n,
            )
        })
        .collect();
    arcs.sort();

    let mut out = String::from("digraph ocdfg {\n");
    for (name, n) in &nodes {
        let _ = writeln!(
            out,
            "  {} [shape=box, style=rounded, label={}];",
            dot_quote(name),
            dot_quote(&format!("{name} ({n})"))
        );
    }
    for (src, tgt, ot, n) in &arcs {
        let color = options
            .colors
            .get(ot)
            .map(String::as_str)
            .unwrap_or_else(|| auto_color(ot));
        let _ = writeln!(
            out,
            "  {} -> {} [label={}, color={}, fontcolor={}];",
            dot_quote(src),
            dot_quote(tgt),
            dot_quote(&format!("{ot}: {n}")),
            dot_quote(color),
            dot_quote(color)
        );
    }
    out.push_str("}\n");
    out
}
