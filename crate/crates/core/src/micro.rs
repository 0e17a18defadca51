//! The five kinds of micro research outputs and their versioned store.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::anchoring::{AnchorConfig, FragmentAnchor};
use crate::error::{Error, Result};
use crate::ids::{OutputId, PersonId, Timestamp};
use crate::redif::{validate_handle, Handle};

pub const MAX_TITLE_CHARS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Public,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Comment,
    Assertion,
    Quotation,
    Micropaper,
    Relationship,
}

impl OutputKind {
    pub const ALL: [OutputKind; 5] = [
        OutputKind::Comment,
        OutputKind::Assertion,
        OutputKind::Quotation,
        OutputKind::Micropaper,
        OutputKind::Relationship,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutputKind::Comment => "comment",
            OutputKind::Assertion => "assertion",
            OutputKind::Quotation => "quotation",
            OutputKind::Micropaper => "micropaper",
            OutputKind::Relationship => "relationship",
        }
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroOutputCore {
    pub output_id: OutputId,
    pub creator: PersonId,
    pub created_at: Timestamp,
    pub visibility: Visibility,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersedes: Option<OutputId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(s: impl Into<String>, p: impl Into<String>, o: impl Into<String>) -> Self {
        Triple {
            subject: s.into(),
            predicate: p.into(),
            object: o.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub derived_from: FragmentAnchor,
    pub asserted_by: PersonId,
    pub asserted_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PubInfo {
    pub license: String,
    pub generator: String,
}

impl Default for PubInfo {
    fn default() -> Self {
        PubInfo {
            license: "CC-BY-4.0".into(),
            generator: concat!("prepub/", env!("CARGO_PKG_VERSION")).into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefKind {
    Item,
    Micro,
}

/// A pointer to a harvested item or a micro output, optionally narrowed to
/// a fragment of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRef {
    pub kind: RefKind,
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_anchor: Option<FragmentAnchor>,
}

impl OutputRef {
    pub fn item(handle: &Handle) -> Self {
        OutputRef {
            kind: RefKind::Item,
            id: handle.to_string(),
            sub_anchor: None,
        }
    }

    pub fn micro(id: &OutputId) -> Self {
        OutputRef {
            kind: RefKind::Micro,
            id: id.to_string(),
            sub_anchor: None,
        }
    }

    /// Identity ignoring any sub-anchor.
    pub fn key(&self) -> (RefKind, &str) {
        (self.kind, self.id.as_str())
    }

    pub fn bare(&self) -> OutputRef {
        OutputRef {
            kind: self.kind,
            id: self.id.clone(),
            sub_anchor: None,
        }
    }

    pub fn handle(&self) -> Option<Handle> {
        match self.kind {
            RefKind::Item => validate_handle(&self.id).ok(),
            RefKind::Micro => None,
        }
    }

    pub fn output_id(&self) -> Option<OutputId> {
        match self.kind {
            RefKind::Micro => Some(OutputId::new(self.id.clone())),
            RefKind::Item => None,
        }
    }

    /// Checks that the id lives in the namespace its kind names. Item ids
    /// are normalized to their canonical handle spelling.
    pub fn normalized(&self) -> Result<OutputRef> {
        let id = match self.kind {
            RefKind::Item => validate_handle(&self.id)
                .map_err(|_| Error::DanglingRef(self.to_string()))?
                .to_string(),
            RefKind::Micro => {
                if !self.id.starts_with("mo-") {
                    return Err(Error::DanglingRef(self.to_string()));
                }
                self.id.clone()
            }
        };
        Ok(OutputRef {
            kind: self.kind,
            id,
            sub_anchor: self.sub_anchor.clone(),
        })
    }
}

impl fmt::Display for OutputRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RefKind::Item => write!(f, "item:{}", self.id),
            RefKind::Micro => write!(f, "micro:{}", self.id),
        }
    }
}

impl std::str::FromStr for OutputRef {
    type Err = String;

    /// `item:<handle>` or `micro:<output id>`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (kind, id) = s
            .split_once(':')
            .ok_or_else(|| format!("expected item:<handle> or micro:<id>, got {s:?}"))?;
        let kind = match kind {
            "item" => RefKind::Item,
            "micro" => RefKind::Micro,
            other => return Err(format!("unknown ref kind {other:?}")),
        };
        Ok(OutputRef {
            kind,
            id: id.to_string(),
            sub_anchor: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationType {
    pub code: String,
    pub label: String,
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    types: BTreeMap<String, RelationType>,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::starter()
    }
}

impl Taxonomy {
    pub fn starter() -> Self {
        let types = [
            ("uses-method", "uses the method of"),
            ("uses-data", "uses the data of"),
            ("confirms", "confirms"),
            ("refutes", "refutes"),
            ("extends", "extends"),
            ("generalizes", "generalizes"),
            ("is-part-of", "is part of"),
            ("compares-with", "compares with"),
            ("alternative-to", "is an alternative to"),
        ];
        Taxonomy::from_types(types.into_iter().map(|(code, label)| RelationType {
            code: code.into(),
            label: label.into(),
            directed: true,
        }))
        .expect("starter codes are unique")
    }

    /// Fails on a duplicate code.
    pub fn from_types(types: impl IntoIterator<Item = RelationType>) -> std::result::Result<Self, String> {
        let mut map = BTreeMap::new();
        for t in types {
            if map.insert(t.code.clone(), t).is_some() {
                return Err("duplicate relation code".into());
            }
        }
        Ok(Taxonomy { types: map })
    }

    pub fn get(&self, code: &str) -> Option<&RelationType> {
        self.types.get(code)
    }

    pub fn iter(&self) -> impl Iterator<Item = &RelationType> {
        self.types.values()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub anchor: FragmentAnchor,
    pub body: String,
}

/// A nanopublication-style claim: the triple, where it came from, and how
/// it is published.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub anchor: FragmentAnchor,
    pub statement: Triple,
    pub provenance: Provenance,
    pub pubinfo: PubInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quotation {
    pub anchor: FragmentAnchor,
    /// Why the fragment was selected. Mandatory.
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroPaper {
    pub base_anchor: FragmentAnchor,
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub from_ref: OutputRef,
    pub to_ref: OutputRef,
    pub relation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OutputBody {
    Comment(Comment),
    Assertion(Assertion),
    Quotation(Quotation),
    Micropaper(MicroPaper),
    Relationship(Relationship),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroOutput {
    #[serde(flatten)]
    pub core: MicroOutputCore,
    #[serde(flatten)]
    pub body: OutputBody,
}

impl OutputBody {
    pub fn kind(&self) -> OutputKind {
        match self {
            OutputBody::Comment(_) => OutputKind::Comment,
            OutputBody::Assertion(_) => OutputKind::Assertion,
            OutputBody::Quotation(_) => OutputKind::Quotation,
            OutputBody::Micropaper(_) => OutputKind::Micropaper,
            OutputBody::Relationship(_) => OutputKind::Relationship,
        }
    }

    pub fn anchor(&self) -> Option<&FragmentAnchor> {
        match self {
            OutputBody::Comment(c) => Some(&c.anchor),
            OutputBody::Assertion(a) => Some(&a.anchor),
            OutputBody::Quotation(q) => Some(&q.anchor),
            OutputBody::Micropaper(m) => Some(&m.base_anchor),
            OutputBody::Relationship(_) => None,
        }
    }

    /// What this output uses: the anchored item, or both relationship ends.
    pub fn targets(&self) -> Vec<OutputRef> {
        match self {
            OutputBody::Relationship(r) => vec![r.from_ref.clone(), r.to_ref.clone()],
            other => vec![OutputRef::item(&other.anchor().expect("anchored kind").target)],
        }
    }

    /// Short human rendering of the content.
    pub fn summary(&self) -> String {
        match self {
            OutputBody::Comment(c) => format!("\"{}\" -- {}", c.anchor.exact, c.body),
            OutputBody::Assertion(a) => format!(
                "<{}> <{}> <{}>",
                a.statement.subject, a.statement.predicate, a.statement.object
            ),
            OutputBody::Quotation(q) => format!("\"{}\" -- {}", q.anchor.exact, q.comment),
            OutputBody::Micropaper(m) => format!("{}: {}", m.title, m.body),
            OutputBody::Relationship(r) => {
                format!("{} \u{2014}{}\u{2192} {}", r.from_ref, r.relation, r.to_ref)
            }
        }
    }
}

impl MicroOutput {
    pub fn id(&self) -> &OutputId {
        &self.core.output_id
    }

    pub fn kind(&self) -> OutputKind {
        self.body.kind()
    }

    pub fn is_public(&self) -> bool {
        self.core.visibility == Visibility::Public
    }

    pub fn visible_to(&self, viewer: Option<&PersonId>) -> bool {
        self.is_public() || viewer == Some(&self.core.creator)
    }
}

/// Content supplied when creating or revising an output. Assertion
/// provenance is filled in from the anchor and the creator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Draft {
    Comment {
        anchor: FragmentAnchor,
        body: String,
    },
    Assertion {
        anchor: FragmentAnchor,
        statement: Triple,
        #[serde(default)]
        pubinfo: PubInfo,
    },
    Quotation {
        anchor: FragmentAnchor,
        comment: String,
    },
    Micropaper {
        base_anchor: FragmentAnchor,
        title: String,
        body: String,
    },
    Relationship {
        from_ref: OutputRef,
        to_ref: OutputRef,
        relation: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        comment: Option<String>,
    },
}

fn non_empty(field: &'static str, value: &str) -> Result<()> {
    if value.trim().is_empty() {
        Err(Error::EmptyField(field))
    } else {
        Ok(())
    }
}

fn check_anchor(cfg: &AnchorConfig, anchor: &FragmentAnchor) -> Result<()> {
    anchor.validate(cfg).map_err(Error::MalformedAnchor)
}

impl Draft {
    pub fn kind(&self) -> OutputKind {
        match self {
            Draft::Comment { .. } => OutputKind::Comment,
            Draft::Assertion { .. } => OutputKind::Assertion,
            Draft::Quotation { .. } => OutputKind::Quotation,
            Draft::Micropaper { .. } => OutputKind::Micropaper,
            Draft::Relationship { .. } => OutputKind::Relationship,
        }
    }

    /// Field-level checks that need no store access. Relationship refs are
    /// namespace-checked and normalized here; whether they resolve is the
    /// caller's business.
    pub fn checked(&self, cfg: &AnchorConfig, taxonomy: &Taxonomy) -> Result<Draft> {
        match self {
            Draft::Comment { anchor, body } => {
                check_anchor(cfg, anchor)?;
                non_empty("body", body)?;
            }
            Draft::Assertion { anchor, statement, .. } => {
                check_anchor(cfg, anchor)?;
                non_empty("statement.subject", &statement.subject)?;
                non_empty("statement.predicate", &statement.predicate)?;
                non_empty("statement.object", &statement.object)?;
            }
            Draft::Quotation { anchor, comment } => {
                check_anchor(cfg, anchor)?;
                non_empty("comment", comment)?;
            }
            Draft::Micropaper { base_anchor, title, body } => {
                check_anchor(cfg, base_anchor)?;
                non_empty("title", title)?;
                if title.chars().count() > MAX_TITLE_CHARS {
                    return Err(Error::FieldTooLong {
                        field: "title",
                        max: MAX_TITLE_CHARS,
                    });
                }
                non_empty("body", body)?;
            }
            Draft::Relationship {
                from_ref,
                to_ref,
                relation,
                comment,
            } => {
                if taxonomy.get(relation).is_none() {
                    return Err(Error::UnknownRelation(relation.clone()));
                }
                let from_ref = from_ref.normalized()?;
                let to_ref = to_ref.normalized()?;
                for anchor in [&from_ref.sub_anchor, &to_ref.sub_anchor].into_iter().flatten() {
                    check_anchor(cfg, anchor)?;
                }
                if from_ref == to_ref {
                    return Err(Error::SelfLoop);
                }
                return Ok(Draft::Relationship {
                    from_ref,
                    to_ref,
                    relation: relation.clone(),
                    comment: comment.clone().filter(|c| !c.trim().is_empty()),
                });
            }
        }
        Ok(self.clone())
    }

    pub(crate) fn into_body(self, creator: &PersonId, at: Timestamp) -> OutputBody {
        match self {
            Draft::Comment { anchor, body } => OutputBody::Comment(Comment { anchor, body }),
            Draft::Assertion { anchor, statement, pubinfo } => OutputBody::Assertion(Assertion {
                provenance: Provenance {
                    derived_from: anchor.clone(),
                    asserted_by: creator.clone(),
                    asserted_at: at,
                },
                anchor,
                statement,
                pubinfo,
            }),
            Draft::Quotation { anchor, comment } => OutputBody::Quotation(Quotation { anchor, comment }),
            Draft::Micropaper { base_anchor, title, body } => {
                OutputBody::Micropaper(MicroPaper { base_anchor, title, body })
            }
            Draft::Relationship {
                from_ref,
                to_ref,
                relation,
                comment,
            } => OutputBody::Relationship(Relationship {
                from_ref,
                to_ref,
                relation,
                comment,
            }),
        }
    }

    /// The draft that would reproduce `body` (used to start a revision).
    pub fn from_body(body: &OutputBody) -> Draft {
        match body.clone() {
            OutputBody::Comment(c) => Draft::Comment { anchor: c.anchor, body: c.body },
            OutputBody::Assertion(a) => Draft::Assertion {
                anchor: a.anchor,
                statement: a.statement,
                pubinfo: a.pubinfo,
            },
            OutputBody::Quotation(q) => Draft::Quotation { anchor: q.anchor, comment: q.comment },
            OutputBody::Micropaper(m) => Draft::Micropaper {
                base_anchor: m.base_anchor,
                title: m.title,
                body: m.body,
            },
            OutputBody::Relationship(r) => Draft::Relationship {
                from_ref: r.from_ref,
                to_ref: r.to_ref,
                relation: r.relation,
                comment: r.comment,
            },
        }
    }
}

/// Every stored version plus the indexes needed to find heads and the
/// outputs attached to an item.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputStore {
    outputs: BTreeMap<OutputId, MicroOutput>,
    superseded_by: BTreeMap<OutputId, OutputId>,
    by_item: BTreeMap<Handle, Vec<OutputId>>,
    by_creator: BTreeMap<PersonId, Vec<OutputId>>,
    next_output: u64,
}

impl OutputStore {
    pub fn get(&self, id: &OutputId) -> Option<&MicroOutput> {
        self.outputs.get(id)
    }

    pub fn require(&self, id: &OutputId) -> Result<&MicroOutput> {
        self.outputs
            .get(id)
            .ok_or_else(|| Error::UnknownOutput(id.to_string()))
    }

    pub fn all(&self) -> impl Iterator<Item = &MicroOutput> {
        self.outputs.values()
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn is_head(&self, id: &OutputId) -> bool {
        self.outputs.contains_key(id) && !self.superseded_by.contains_key(id)
    }

    pub fn heads(&self) -> impl Iterator<Item = &MicroOutput> {
        self.outputs
            .values()
            .filter(|o| !self.superseded_by.contains_key(o.id()))
    }

    pub fn superseded_by(&self, id: &OutputId) -> Option<&OutputId> {
        self.superseded_by.get(id)
    }

    /// Follows revisions forward to the newest version.
    pub fn latest(&self, id: &OutputId) -> Option<&MicroOutput> {
        let mut cur = self.outputs.get(id)?;
        while let Some(next) = self.superseded_by.get(cur.id()) {
            cur = self.outputs.get(next)?;
        }
        Some(cur)
    }

    /// The chain ending at `id`, newest first.
    pub fn history(&self, id: &OutputId) -> Vec<&MicroOutput> {
        let mut out = Vec::new();
        let mut cur = self.outputs.get(id);
        while let Some(o) = cur {
            out.push(o);
            cur = o.core.supersedes.as_ref().and_then(|p| self.outputs.get(p));
        }
        out
    }

    pub fn by_creator(&self, person: &PersonId) -> impl Iterator<Item = &MicroOutput> {
        self.by_creator
            .get(person)
            .into_iter()
            .flatten()
            .filter_map(|id| self.outputs.get(id))
    }

    pub(crate) fn next_id(&self) -> OutputId {
        OutputId::from_seq(self.next_output + 1)
    }

    pub(crate) fn insert(&mut self, output: MicroOutput) {
        self.next_output += 1;
        let id = output.id().clone();
        debug_assert_eq!(id, OutputId::from_seq(self.next_output));
        if let Some(prev) = &output.core.supersedes {
            self.superseded_by.insert(prev.clone(), id.clone());
        }
        for t in output.body.targets() {
            if let Some(h) = t.handle() {
                let list = self.by_item.entry(h).or_default();
                if list.last() != Some(&id) {
                    list.push(id.clone());
                }
            }
        }
        self.by_creator
            .entry(output.core.creator.clone())
            .or_default()
            .push(id.clone());
        self.outputs.insert(id, output);
    }

    pub(crate) fn set_visibility(&mut self, id: &OutputId, visibility: Visibility) {
        if let Some(o) = self.outputs.get_mut(id) {
            o.core.visibility = visibility;
        }
    }

    /// Latest versions linked to `target` that `viewer` may see, oldest first.
    pub fn list_for(&self, target: &Handle, viewer: Option<&PersonId>) -> Vec<&MicroOutput> {
        let mut out: Vec<&MicroOutput> = self
            .by_item
            .get(target)
            .into_iter()
            .flatten()
            .filter(|id| self.is_head(id))
            .filter_map(|id| self.outputs.get(id))
            .filter(|o| o.visible_to(viewer))
            .collect();
        out.sort_by(|a, b| (a.core.created_at, a.id()).cmp(&(b.core.created_at, b.id())));
        out
    }

    #[doc(hidden)]
    pub fn force_remove(&mut self, id: &OutputId) -> Option<MicroOutput> {
        self.outputs.remove(id)
    }
}
