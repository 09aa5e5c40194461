//! Flat string encoding of composite type names.
//!
//! Grammar:
//!
//! ```text
//! object-type := name ( "~" name "=" value )*
//! event-type  := name ( "@" object-type )*
//! ```
//!
//! `~`, `=`, `@` and `\` are escaped with `\` wherever they occur in a base
//! name, attribute name or rendered value, so `(A~B, [(x, p=q)])` encodes as
//! `A\~B~x=p\=q`. Any other escape sequence is rejected, which keeps the
//! encoding injective. Base names and attribute names must be non-empty;
//! values may be empty.

use thiserror::Error;

use crate::model::{CompositeEventType, CompositeObjectType, DrillStep};

const ESCAPE: char = '\\';
const DRILL: char = '~';
const VALUE: char = '=';
const UNFOLD: char = '@';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed type name {name:?}: {reason}")]
pub struct MalformedTypeName {
    pub name: String,
    pub reason: &'static str,
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        if matches!(c, ESCAPE | DRILL | VALUE | UNFOLD) {
            out.push(ESCAPE);
        }
        out.push(c);
    }
}

fn write_object_type(out: &mut String, t: &CompositeObjectType) {
    escape_into(out, &t.base);
    for step in &t.drills {
        out.push(DRILL);
        escape_into(out, &step.attribute);
        out.push(VALUE);
        escape_into(out, &step.value);
    }
}

pub fn encode_object_type(t: &CompositeObjectType) -> String {
    let mut out = String::with_capacity(t.base.len());
    write_object_type(&mut out, t);
    out
}

pub fn encode_event_type(t: &CompositeEventType) -> String {
    let mut out = String::with_capacity(t.base.len());
    escape_into(&mut out, &t.base);
    for ot in &t.unfolds {
        out.push(UNFOLD);
        write_object_type(&mut out, ot);
    }
    out
}

/// A lexed character: either a delimiter or a literal (possibly escaped).
#[derive(Clone, Copy, PartialEq, Eq)]
enum Tok {
    Delim(char),
    Lit(char),
}

fn lex(s: &str) -> Result<Vec<Tok>, MalformedTypeName> {
    let mut out = Vec::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match c {
            ESCAPE => match chars.next() {
                Some(n @ (ESCAPE | DRILL | VALUE | UNFOLD)) => out.push(Tok::Lit(n)),
                Some(_) => return Err(malformed(s, "unknown escape sequence")),
                None => return Err(malformed(s, "dangling escape")),
            },
            DRILL | VALUE | UNFOLD => out.push(Tok::Delim(c)),
            _ => out.push(Tok::Lit(c)),
        }
    }
    Ok(out)
}

fn malformed(name: &str, reason: &'static str) -> MalformedTypeName {
    MalformedTypeName {
        name: name.to_owned(),
        reason,
    }
}

fn literal(toks: &[Tok]) -> String {
    toks.iter()
        .map(|t| match t {
            Tok::Lit(c) | Tok::Delim(c) => *c,
        })
        .collect()
}

fn parse_object_type(toks: &[Tok], whole: &str) -> Result<CompositeObjectType, MalformedTypeName> {
    let mut segments = toks.split(|t| *t == Tok::Delim(DRILL));
    let base = segments.next().unwrap_or_default();
    if base.is_empty() {
        return Err(malformed(whole, "empty base name"));
    }
    if base.contains(&Tok::Delim(VALUE)) {
        return Err(malformed(whole, "'=' outside a drill segment"));
    }
    let mut out = CompositeObjectType::base(literal(base));
    for seg in segments {
        let mut parts = seg.split(|t| *t == Tok::Delim(VALUE));
        let attr = parts.next().unwrap_or_default();
        let Some(value) = parts.next() else {
            return Err(malformed(whole, "drill segment without '='"));
        };
        if parts.next().is_some() {
            return Err(malformed(whole, "more than one '=' in a drill segment"));
        }
        if attr.is_empty() {
            return Err(malformed(whole, "empty attribute name"));
        }
        out.drills.push(DrillStep {
            attribute: literal(attr),
            value: literal(value),
        });
    }
    Ok(out)
}

pub fn decode_object_type(s: &str) -> Result<CompositeObjectType, MalformedTypeName> {
    let toks = lex(s)?;
    if toks.contains(&Tok::Delim(UNFOLD)) {
        return Err(malformed(s, "'@' in an object type name"));
    }
    parse_object_type(&toks, s)
}

pub fn decode_event_type(s: &str) -> Result<CompositeEventType, MalformedTypeName> {
    let toks = lex(s)?;
    let mut segments = toks.split(|t| *t == Tok::Delim(UNFOLD));
    let base = segments.next().unwrap_or_default();
    if base.is_empty() {
        return Err(malformed(s, "empty base name"));
    }
    if base.iter().any(|t| matches!(t, Tok::Delim(_))) {
        return Err(malformed(s, "'~' or '=' in an event type base name"));
    }
    let mut out = CompositeEventType::base(literal(base));
    for seg in segments {
        out.unfolds.push(parse_object_type(seg, s)?);
    }
    Ok(out)
}
