//! Publication as aggregation: an editor-ordered bundle of items and micro
//! outputs together with the relationships that hold among them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ids::{AggregationId, OutputId, PersonId, Timestamp};
use crate::micro::{OutputBody, OutputRef, RefKind};
use crate::engine::State;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregation {
    pub aggregation_id: AggregationId,
    pub title: String,
    pub editor: PersonId,
    pub members: Vec<OutputRef>,
    /// Relationship outputs whose two endpoints are both members.
    pub edges: Vec<OutputId>,
    pub compiled_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Json,
    Text,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ExportFormat::Json),
            "text" => Ok(ExportFormat::Text),
            other => Err(format!("unknown export format {other:?}")),
        }
    }
}

impl Aggregation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("aggregation serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Plain-text rendering: title, numbered members, then a `Relations`
    /// section with one `from —relation→ to` line per edge.
    pub fn to_text(&self, state: &State) -> String {
        let person = |p: &PersonId| match state.registry().person(p) {
            Some(profile) => format!("{} ({p})", profile.display_name),
            None => p.to_string(),
        };
        let mut out = String::new();
        writeln!(out, "{}", self.title).unwrap();
        writeln!(out, "Editor: {}", person(&self.editor)).unwrap();
        writeln!(out, "Compiled: {}", self.compiled_at.to_rfc3339()).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "Members").unwrap();
        for (i, m) in self.members.iter().enumerate() {
            let n = i + 1;
            match m.kind {
                RefKind::Item => {
                    let item = m.handle().and_then(|h| state.registry().get_item(&h));
                    match item {
                        Some(item) => {
                            let authors = if item.author_names.is_empty() {
                                "unknown".to_string()
                            } else {
                                item.author_names.join(", ")
                            };
                            writeln!(out, "{n}. [item] {} by {authors}", item.handle).unwrap();
                            writeln!(out, "   {}", item.title).unwrap();
                        }
                        None => writeln!(out, "{n}. [item] {}", m.id).unwrap(),
                    }
                }
                RefKind::Micro => {
                    let output = m.output_id().and_then(|id| state.outputs().get(&id).cloned());
                    match output {
                        Some(o) => {
                            writeln!(out, "{n}. [{}] {} by {}", o.kind(), o.id(), person(&o.core.creator))
                                .unwrap();
                            for line in member_lines(&o.body) {
                                writeln!(out, "   {line}").unwrap();
                            }
                        }
                        None => writeln!(out, "{n}. [micro] {}", m.id).unwrap(),
                    }
                }
            }
            if let Some(sub) = &m.sub_anchor {
                writeln!(out, "   fragment: \"{}\"", sub.exact).unwrap();
            }
        }
        writeln!(out).unwrap();
        writeln!(out, "Relations").unwrap();
        for id in &self.edges {
            if let Some(OutputBody::Relationship(r)) = state.outputs().get(id).map(|o| &o.body) {
                writeln!(out, "{} \u{2014}{}\u{2192} {}", r.from_ref, r.relation, r.to_ref).unwrap();
            }
        }
        out
    }
}

fn member_lines(body: &OutputBody) -> Vec<String> {
    match body {
        OutputBody::Comment(c) => vec![format!("\"{}\"", c.anchor.exact), c.body.clone()],
        OutputBody::Assertion(a) => vec![
            format!("\"{}\"", a.anchor.exact),
            format!(
                "{} | {} | {}",
                a.statement.subject, a.statement.predicate, a.statement.object
            ),
        ],
        OutputBody::Quotation(q) => vec![format!("\"{}\"", q.anchor.exact), q.comment.clone()],
        OutputBody::Micropaper(m) => vec![format!("\"{}\"", m.base_anchor.exact), m.title.clone(), m.body.clone()],
        OutputBody::Relationship(r) => {
            let mut v = vec![format!("{} \u{2014}{}\u{2192} {}", r.from_ref, r.relation, r.to_ref)];
            v.extend(r.comment.clone());
            v
        }
    }
}
