//! Independent reference implementations used by the integration tests and
//! the acceptance harness. Nothing here calls into the code under test
//! except to read back plain data.
#![allow(dead_code)]

pub mod criteria;

use std::collections::{BTreeMap, BTreeSet};

use prepub_core::anchoring::{AnchorConfig, FragmentAnchor};
use prepub_core::micro::{Draft, OutputBody, OutputRef, RefKind, Visibility};
use prepub_core::redif::Handle;
use prepub_core::{Command, EventId, PersonId, State, ThreadId, Timestamp};

// ---------------------------------------------------------------------------
// Notifications

/// What the oracle expects for one logged event.
#[derive(Debug, Clone)]
pub struct ExpectedEvent {
    pub actor: PersonId,
    pub usage: bool,
    pub public: bool,
    pub recipients: BTreeSet<PersonId>,
}

#[derive(Clone)]
struct OracleOutput {
    creator: PersonId,
    public: bool,
    targets: Vec<Target>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Target {
    Item(Handle),
    Micro(String),
}

fn target_of(r: &OutputRef) -> Target {
    match r.kind {
        RefKind::Item => Target::Item(r.id.parse().expect("valid handle")),
        RefKind::Micro => Target::Micro(r.id.trim().to_string()),
    }
}

fn draft_targets(d: &Draft) -> Vec<Target> {
    match d {
        Draft::Comment { anchor, .. }
        | Draft::Assertion { anchor, .. }
        | Draft::Quotation { anchor, .. }
        | Draft::Micropaper { base_anchor: anchor, .. } => vec![Target::Item(anchor.target.clone())],
        Draft::Relationship { from_ref, to_ref, .. } => vec![target_of(from_ref), target_of(to_ref)],
    }
}

/// Walks a command script that is known to have executed successfully and
/// derives, event by event, who must be notified. `notification_event` maps
/// a notification id to the event it was raised for; it is only consulted to
/// learn which event a thread was opened from.
pub fn expected_events(
    script: &[(Command, Timestamp)],
    notification_event: impl Fn(&str) -> EventId,
) -> Vec<ExpectedEvent> {
    let mut claims: BTreeMap<Handle, BTreeSet<PersonId>> = BTreeMap::new();
    let mut outputs: BTreeMap<String, OracleOutput> = BTreeMap::new();
    let mut thread_user: BTreeMap<String, PersonId> = BTreeMap::new();
    let mut events: Vec<ExpectedEvent> = Vec::new();
    let mut output_seq = 0u64;
    let mut thread_seq = 0u64;

    let owners = |claims: &BTreeMap<Handle, BTreeSet<PersonId>>,
                  outputs: &BTreeMap<String, OracleOutput>,
                  t: &Target|
     -> BTreeSet<PersonId> {
        match t {
            Target::Item(h) => claims.get(h).cloned().unwrap_or_default(),
            Target::Micro(id) => outputs.get(id).map(|o| BTreeSet::from([o.creator.clone()])).unwrap_or_default(),
        }
    };
    let usage = |claims: &BTreeMap<Handle, BTreeSet<PersonId>>,
                 outputs: &BTreeMap<String, OracleOutput>,
                 actor: &PersonId,
                 public: bool,
                 targets: &[Target]| {
        let recipients = if public {
            targets
                .iter()
                .flat_map(|t| owners(claims, outputs, t))
                .filter(|p| p != actor)
                .collect()
        } else {
            BTreeSet::new()
        };
        ExpectedEvent {
            actor: actor.clone(),
            usage: true,
            public,
            recipients,
        }
    };

    for (cmd, _) in script {
        match cmd {
            Command::ClaimWork { person, handle } => {
                claims.entry(handle.clone()).or_default().insert(person.clone());
            }
            Command::CreateOutput { creator, draft, visibility } => {
                output_seq += 1;
                let public = *visibility == Visibility::Public;
                let targets = draft_targets(draft);
                events.push(usage(&claims, &outputs, creator, public, &targets));
                outputs.insert(
                    format!("mo-{output_seq:06}"),
                    OracleOutput { creator: creator.clone(), public, targets },
                );
            }
            Command::ReviseOutput { editor, output_id, draft } => {
                output_seq += 1;
                let public = outputs[output_id.as_str()].public;
                let targets = draft_targets(draft);
                events.push(usage(&claims, &outputs, editor, public, &targets));
                outputs.insert(
                    format!("mo-{output_seq:06}"),
                    OracleOutput { creator: editor.clone(), public, targets },
                );
            }
            Command::SetVisibility { actor, output_id, visibility } => {
                let o = outputs.get_mut(output_id.as_str()).unwrap();
                if !o.public && *visibility == Visibility::Public {
                    o.public = true;
                    let targets = o.targets.clone();
                    events.push(usage(&claims, &outputs, actor, true, &targets));
                }
            }
            Command::OpenThread { notification_id, opener, visibility, .. } => {
                thread_seq += 1;
                let origin = notification_event(notification_id.as_str());
                let user = events[origin as usize - 1].actor.clone();
                thread_user.insert(format!("t-{thread_seq:06}"), user);
                events.push(ExpectedEvent {
                    actor: opener.clone(),
                    usage: false,
                    public: *visibility == Visibility::Public,
                    recipients: BTreeSet::new(),
                });
            }
            Command::PostMessage { author, .. } => events.push(ExpectedEvent {
                actor: author.clone(),
                usage: false,
                public: true,
                recipients: BTreeSet::new(),
            }),
            Command::SubmitOffer { thread_id, challenger, .. } => events.push(ExpectedEvent {
                actor: challenger.clone(),
                usage: false,
                public: true,
                recipients: BTreeSet::from([thread_user[thread_id.as_str()].clone()]),
            }),
            _ => {}
        }
    }
    events
}

pub fn expected_pairs(events: &[ExpectedEvent]) -> BTreeSet<(EventId, PersonId)> {
    events
        .iter()
        .enumerate()
        .flat_map(|(i, e)| e.recipients.iter().map(move |p| (i as EventId + 1, p.clone())))
        .collect()
}

/// Sum over public usage events of the distinct owners reached.
pub fn expected_usage_resolutions(events: &[ExpectedEvent]) -> u64 {
    events
        .iter()
        .filter(|e| e.usage && e.public)
        .map(|e| e.recipients.len() as u64)
        .sum()
}

pub fn thread_id(n: u64) -> ThreadId {
    ThreadId::new(format!("t-{n:06}"))
}

// ---------------------------------------------------------------------------
// Neighbors

/// Brute-force neighbor counts read straight off the stores:
/// `(upstream, downstream)` as maps from person to act count.
pub fn brute_neighbors(state: &State, person: &PersonId) -> (BTreeMap<PersonId, u64>, BTreeMap<PersonId, u64>) {
    let outputs = state.outputs();
    let claimants = |h: &Handle| -> BTreeSet<PersonId> {
        state
            .registry()
            .claims()
            .iter()
            .filter(|c| &c.handle == h)
            .map(|c| c.person_id.clone())
            .collect()
    };
    let owners_of_act = |body: &OutputBody| -> BTreeSet<PersonId> {
        let refs: Vec<OutputRef> = match body {
            OutputBody::Relationship(r) => vec![r.from_ref.clone(), r.to_ref.clone()],
            OutputBody::Comment(c) => vec![OutputRef::item(&c.anchor.target)],
            OutputBody::Assertion(a) => vec![OutputRef::item(&a.anchor.target)],
            OutputBody::Quotation(q) => vec![OutputRef::item(&q.anchor.target)],
            OutputBody::Micropaper(m) => vec![OutputRef::item(&m.base_anchor.target)],
        };
        refs.iter()
            .flat_map(|r| match r.kind {
                RefKind::Item => claimants(&r.id.parse().unwrap()),
                RefKind::Micro => outputs
                    .all()
                    .filter(|o| o.id().as_str() == r.id)
                    .map(|o| o.core.creator.clone())
                    .collect(),
            })
            .collect()
    };

    let mut up = BTreeMap::new();
    let mut down = BTreeMap::new();
    for act in outputs.all() {
        let is_head = outputs.all().all(|o| o.core.supersedes.as_ref() != Some(act.id()));
        if !act.is_public() || !is_head {
            continue;
        }
        let owners = owners_of_act(&act.body);
        let actor = &act.core.creator;
        if actor == person {
            for o in owners.iter().filter(|o| *o != person) {
                *up.entry(o.clone()).or_insert(0) += 1;
            }
        } else if owners.contains(person) {
            *down.entry(actor.clone()).or_insert(0) += 1;
        }
    }
    (up, down)
}

// ---------------------------------------------------------------------------
// Anchoring

pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BruteOutcome {
    Found(usize, usize),
    Ambiguous,
    NotFound,
}

/// Scans every window of every admissible length. Admissible lengths are
/// `len * (1 ± slack)` rounded inward, at least 1 and at most the document.
/// Best similarity wins; among equals prefer the start nearest the hint,
/// then the length nearest the quote, then the leftmost. Another best window
/// that does not overlap the choice makes the result ambiguous.
pub fn brute_fuzzy(cfg: &AnchorConfig, doc: &str, anchor: &FragmentAnchor) -> BruteOutcome {
    let doc: Vec<char> = doc.chars().collect();
    let q: Vec<char> = anchor.exact.chars().collect();
    let n = doc.len();
    let l = q.len();
    let mut lo = 0;
    while ((lo + 1) as f64) <= l as f64 * (1.0 - cfg.window_slack) + 1e-9 {
        lo += 1;
    }
    let lo = lo.max(1);
    let mut hi = 0;
    while (hi as f64) < l as f64 * (1.0 + cfg.window_slack) - 1e-9 {
        hi += 1;
    }
    let hi = hi.min(n);
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for w in lo..=hi {
        for s in 0..=n.saturating_sub(w) {
            if s + w > n {
                continue;
            }
            let d = levenshtein(&q, &doc[s..s + w]);
            let sim = 1.0 - d as f64 / w.max(l) as f64;
            if sim >= cfg.min_similarity {
                cands.push((sim, s, w));
            }
        }
    }
    let Some(best) = cands.iter().map(|c| c.0).reduce(f64::max) else {
        return BruteOutcome::NotFound;
    };
    let top: Vec<_> = cands.into_iter().filter(|c| c.0 == best).collect();
    let hint = anchor.start_hint;
    let &(_, s, w) = top
        .iter()
        .min_by_key(|c| (c.1.abs_diff(hint), c.2.abs_diff(l), c.1))
        .unwrap();
    if top.iter().all(|c| c.1 < s + w && s < c.1 + c.2) {
        BruteOutcome::Found(s, s + w)
    } else {
        BruteOutcome::Ambiguous
    }
}

/// A single random edit that leaves `[start, end)` untouched.
#[derive(Debug, Clone)]
pub enum Edit {
    Insert { at: usize, text: String },
    Delete { at: usize, len: usize },
    Replace { at: usize, len: usize, text: String },
}

impl Edit {
    pub fn apply(&self, doc: &[char]) -> Vec<char> {
        let mut out = doc.to_vec();
        match self {
            Edit::Insert { at, text } => {
                out.splice(*at..*at, text.chars());
            }
            Edit::Delete { at, len } => {
                out.drain(*at..*at + *len);
            }
            Edit::Replace { at, len, text } => {
                out.splice(*at..*at + *len, text.chars());
            }
        }
        out
    }

    /// Where the untouched span `[start, end)` lands after the edit.
    pub fn shift(&self, start: usize, end: usize) -> (usize, usize) {
        let (at, removed, added) = match self {
            Edit::Insert { at, text } => (*at, 0, text.chars().count()),
            Edit::Delete { at, len } => (*at, *len, 0),
            Edit::Replace { at, len, text } => (*at, *len, text.chars().count()),
        };
        if at + removed <= start {
            let delta = added as isize - removed as isize;
            ((start as isize + delta) as usize, (end as isize + delta) as usize)
        } else {
            (start, end)
        }
    }
}
