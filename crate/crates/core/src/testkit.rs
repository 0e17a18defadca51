//! Seeded generators for synthetic archives and command scripts.
//!
//! Used by the property tests, the acceptance harness and the browser demo.
//! Everything here is deterministic in the seed.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use crate::anchoring::{create_anchor_with, TextSource};
use crate::engine::{Command, Engine};
use crate::ids::{PersonId, Timestamp};
use crate::micro::{Draft, OutputRef, Triple, Visibility};
use crate::redif::{Field, Handle, AuthorCluster, RedifTemplate};
use crate::registry::{ItemKind, ScholarlyItem};

const WORDS: &[&str] = &[
    "labour", "market", "wage", "growth", "capital", "estimate", "model", "panel", "data",
    "effect", "policy", "rate", "trade", "price", "firm", "household", "shock", "inflation",
    "credit", "bank", "risk", "return", "evidence", "regional", "income", "tax", "demand",
    "supply", "elasticity", "productivity", "we", "find", "that", "the", "a", "of", "in",
    "on", "and", "with", "robust", "significant", "structural", "dynamic", "equilibrium",
];

const NAMES: &[&str] = &[
    "Ada", "Bruno", "Chen", "Dara", "Emeka", "Fatima", "Goran", "Hana", "Ines", "Jonas",
    "Kofi", "Lena", "Mateo", "Nadia", "Omar", "Priya",
];

const SURNAMES: &[&str] = &[
    "Almeida", "Berger", "Castillo", "Dube", "Eriksen", "Fischer", "Garcia", "Horvat",
    "Ito", "Jensen", "Kowalski", "Lindqvist", "Moreau", "Novak", "Okafor", "Petrov",
];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Fixed origin for generated timestamps.
pub fn epoch() -> Timestamp {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

pub fn tick(n: u64) -> DateTime<Utc> {
    epoch() + Duration::seconds(n as i64)
}

pub fn words(rng: &mut impl Rng, n: usize) -> String {
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Between `lo` and `hi - 1` words.
pub fn some_words(rng: &mut impl Rng, lo: usize, hi: usize) -> String {
    let n = rng.random_range(lo..hi);
    words(rng, n)
}

pub fn person_name(rng: &mut impl Rng) -> String {
    format!("{} {}", NAMES.choose(rng).unwrap(), SURNAMES.choose(rng).unwrap())
}

pub fn handle(archive: &str, series: &str, n: usize) -> Handle {
    format!("RePEc:{archive}:{series}:{n}").parse().expect("generated handle is valid")
}

/// A well-formed template whose values survive serialize/parse unchanged.
pub fn random_template(rng: &mut impl Rng, archive: &str, n: usize) -> RedifTemplate {
    let kinds = ["ReDIF-Paper 1.0", "ReDIF-Article 1.0", "ReDIF-Book 1.0", "ReDIF-Software 1.0"];
    let mut fields = vec![Field::new("title", capitalize(&some_words(rng, 2, 8)))];
    if rng.random_bool(0.8) {
        fields.push(Field::new("abstract", some_words(rng, 8, 40)));
    }
    if rng.random_bool(0.3) {
        fields.push(Field::new("keywords", words(rng, 3)));
    }
    if rng.random_bool(0.4) {
        fields.push(Field::new(
            "file-url",
            format!("https://example.org/{archive}/{n}.pdf"),
        ));
    }
    if rng.random_bool(0.3) {
        fields.push(Field::new("creation-date", format!("20{:02}", rng.random_range(0..25))));
    }
    let author_clusters = (0..rng.random_range(0..4))
        .map(|_| {
            let mut fields = vec![Field::new("author-name", person_name(rng))];
            if rng.random_bool(0.5) {
                fields.push(Field::new("author-email", format!("a{}@example.org", rng.random_range(0..1000))));
            }
            if rng.random_bool(0.3) {
                fields.push(Field::new("author-workplace-name", "University of Somewhere"));
            }
            AuthorCluster { fields }
        })
        .collect();
    RedifTemplate {
        template_type: kinds.choose(rng).unwrap().to_string(),
        handle: handle(archive, "wpaper", n),
        fields,
        author_clusters,
    }
}

pub fn random_archive(rng: &mut impl Rng, archive: &str, n: usize) -> Vec<RedifTemplate> {
    (1..=n).map(|i| random_template(rng, archive, i)).collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn random_item(rng: &mut impl Rng, archive: &str, n: usize) -> ScholarlyItem {
    ScholarlyItem {
        handle: handle(archive, "wpaper", n),
        title: capitalize(&some_words(rng, 2, 7)),
        abstract_text: Some(some_words(rng, 12, 40)),
        fulltext: None,
        fulltext_url: None,
        author_names: vec![person_name(rng)],
        archive_code: archive.to_string(),
        kind: ItemKind::Paper,
    }
}

/// Size knobs for [`random_script`].
#[derive(Debug, Clone, Copy)]
pub struct WorldSpec {
    pub persons: usize,
    pub items: usize,
    /// Upper bound on micro outputs created (revisions included).
    pub outputs: usize,
    pub private_share: f64,
    /// Whether to mix in threads, messages, offers and read-marking.
    pub conversations: bool,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            persons: 10,
            items: 8,
            outputs: 40,
            private_share: 0.3,
            conversations: true,
        }
    }
}

/// Random valid command script. Every returned command succeeded when the
/// script was generated, so replaying it from an empty engine succeeds too.
pub fn random_script(seed: u64, spec: &WorldSpec) -> Vec<(Command, Timestamp)> {
    let mut gen = ScriptGen {
        rng: rng(seed),
        engine: Engine::new(),
        script: Vec::new(),
    };
    gen.run(spec);
    gen.script
}

struct ScriptGen {
    rng: StdRng,
    engine: Engine,
    script: Vec<(Command, Timestamp)>,
}

impl ScriptGen {
    fn push(&mut self, cmd: Command) -> bool {
        let at = tick(self.script.len() as u64 + 1);
        if self.engine.execute(&cmd, at).is_ok() {
            self.script.push((cmd, at));
            true
        } else {
            false
        }
    }

    fn run(&mut self, spec: &WorldSpec) {
        let items: Vec<ScholarlyItem> = (1..=spec.items)
            .map(|i| random_item(&mut self.rng, "tst", i))
            .collect();
        self.push(Command::UpsertItems { items: items.clone() });
        for _ in 0..spec.persons {
            let name = person_name(&mut self.rng);
            self.push(Command::RegisterPerson {
                name,
                contact: None,
                affiliation: None,
            });
        }
        let persons: Vec<PersonId> = (1..=spec.persons as u64).map(PersonId::from_seq).collect();
        if persons.is_empty() || items.is_empty() {
            return;
        }
        for item in &items {
            let k = self.rng.random_range(0..=2.min(persons.len()));
            for p in persons.choose_multiple(&mut self.rng, k).cloned().collect::<Vec<_>>() {
                self.push(Command::ClaimWork {
                    person: p,
                    handle: item.handle.clone(),
                });
            }
        }

        let mut attempts = 0;
        while self.engine.state().outputs().len() < spec.outputs && attempts < spec.outputs * 20 {
            attempts += 1;
            let actor = persons.choose(&mut self.rng).unwrap().clone();
            let roll: f64 = self.rng.random();
            let cmd = if roll < 0.5 {
                self.anchored(&actor, &items, spec)
            } else if roll < 0.7 {
                self.relationship(&actor, &items, spec)
            } else if roll < 0.78 {
                self.revision(&actor, &items)
            } else if roll < 0.86 {
                self.publish(&actor)
            } else if spec.conversations {
                self.conversation(&actor, &persons)
            } else {
                None
            };
            if let Some(cmd) = cmd {
                self.push(cmd);
            }
        }
    }

    fn visibility(&mut self, spec: &WorldSpec) -> Visibility {
        if self.rng.random_bool(spec.private_share) {
            Visibility::Private
        } else {
            Visibility::Public
        }
    }

    fn anchored_draft(&mut self, items: &[ScholarlyItem]) -> Draft {
        let item = items.choose(&mut self.rng).unwrap();
        let doc = item.abstract_text.clone().unwrap_or_default();
        let len = doc.chars().count();
        let start = self.rng.random_range(0..len - 1);
        let end = (start + self.rng.random_range(1..20)).min(len);
        let anchor = create_anchor_with(
            self.engine.state().anchor_config(),
            &doc,
            start,
            end,
            item.handle.clone(),
            TextSource::Abstract,
        )
        .expect("span in range");
        let text = words(&mut self.rng, 5);
        match self.rng.random_range(0..4) {
            0 => Draft::Comment { anchor, body: text },
            1 => Draft::Assertion {
                anchor,
                statement: Triple::new("x", "estimates", text),
                pubinfo: Default::default(),
            },
            2 => Draft::Quotation { anchor, comment: text },
            _ => Draft::Micropaper {
                base_anchor: anchor,
                title: capitalize(&words(&mut self.rng, 3)),
                body: text,
            },
        }
    }

    fn anchored(&mut self, actor: &PersonId, items: &[ScholarlyItem], spec: &WorldSpec) -> Option<Command> {
        let draft = self.anchored_draft(items);
        Some(Command::CreateOutput {
            creator: actor.clone(),
            draft,
            visibility: self.visibility(spec),
        })
    }

    /// Refs the actor may cite: any item, and heads that are public or theirs.
    fn citable(&self, actor: &PersonId, items: &[ScholarlyItem]) -> Vec<OutputRef> {
        let mut refs: Vec<OutputRef> = items.iter().map(|i| OutputRef::item(&i.handle)).collect();
        refs.extend(
            self.engine
                .state()
                .outputs()
                .heads()
                .filter(|o| o.visible_to(Some(actor)))
                .map(|o| OutputRef::micro(o.id())),
        );
        refs
    }

    fn relationship(&mut self, actor: &PersonId, items: &[ScholarlyItem], spec: &WorldSpec) -> Option<Command> {
        let refs = self.citable(actor, items);
        let pair: Vec<OutputRef> = refs.choose_multiple(&mut self.rng, 2).cloned().collect();
        if pair.len() < 2 {
            return None;
        }
        let relation = self
            .engine
            .state()
            .taxonomy()
            .iter()
            .map(|t| t.code.clone())
            .collect::<Vec<_>>()
            .choose(&mut self.rng)
            .unwrap()
            .clone();
        Some(Command::CreateOutput {
            creator: actor.clone(),
            draft: Draft::Relationship {
                from_ref: pair[0].clone(),
                to_ref: pair[1].clone(),
                relation,
                comment: None,
            },
            visibility: self.visibility(spec),
        })
    }

    fn own_heads(&self, actor: &PersonId) -> Vec<crate::micro::MicroOutput> {
        self.engine
            .state()
            .outputs()
            .heads()
            .filter(|o| &o.core.creator == actor)
            .cloned()
            .collect()
    }

    fn revision(&mut self, actor: &PersonId, items: &[ScholarlyItem]) -> Option<Command> {
        let heads = self.own_heads(actor);
        let old = heads.choose(&mut self.rng)?;
        let draft = match Draft::from_body(&old.body) {
            Draft::Comment { anchor, .. } => Draft::Comment {
                anchor,
                body: words(&mut self.rng, 6),
            },
            Draft::Relationship { from_ref, to_ref, relation, .. } => Draft::Relationship {
                from_ref,
                to_ref,
                relation,
                comment: Some(words(&mut self.rng, 4)),
            },
            d if d.kind() == crate::micro::OutputKind::Quotation => match self.anchored_draft(items) {
                q @ Draft::Quotation { .. } => q,
                _ => d,
            },
            d => d,
        };
        Some(Command::ReviseOutput {
            editor: actor.clone(),
            output_id: old.id().clone(),
            draft,
        })
    }

    fn publish(&mut self, actor: &PersonId) -> Option<Command> {
        let private: Vec<_> = self
            .own_heads(actor)
            .into_iter()
            .filter(|o| !o.is_public())
            .collect();
        let o = private.choose(&mut self.rng)?;
        Some(Command::SetVisibility {
            actor: actor.clone(),
            output_id: o.id().clone(),
            visibility: Visibility::Public,
        })
    }

    fn conversation(&mut self, actor: &PersonId, persons: &[PersonId]) -> Option<Command> {
        let comms = self.engine.state().comms();
        match self.rng.random_range(0..4) {
            0 => {
                let inbox = comms.list_inbox(actor, None);
                let n = inbox.choose(&mut self.rng)?;
                Some(Command::OpenThread {
                    notification_id: n.notification_id.clone(),
                    opener: actor.clone(),
                    first_message: words(&mut self.rng, 6),
                    visibility: if self.rng.random_bool(0.2) {
                        Visibility::Private
                    } else {
                        Visibility::Public
                    },
                })
            }
            1 => {
                let threads: Vec<_> = comms.threads().filter(|t| t.is_participant(actor)).collect();
                let t = threads.choose(&mut self.rng)?;
                Some(Command::PostMessage {
                    thread_id: t.thread_id.clone(),
                    author: actor.clone(),
                    body: words(&mut self.rng, 5),
                    attached_output: None,
                })
            }
            2 => {
                let threads: Vec<_> = comms
                    .threads()
                    .filter(|t| t.visibility == Visibility::Public && !t.original_pair().contains(actor))
                    .collect();
                let t = threads.choose(&mut self.rng)?.thread_id.clone();
                let mine = self.own_heads(actor);
                let offered = mine.iter().filter(|o| o.is_public()).collect::<Vec<_>>();
                let o = offered.choose(&mut self.rng)?;
                Some(Command::SubmitOffer {
                    thread_id: t,
                    challenger: actor.clone(),
                    offered: OutputRef::micro(o.id()),
                    note: words(&mut self.rng, 4),
                })
            }
            _ => {
                let _ = persons;
                let inbox = comms.list_inbox(actor, Some(crate::comms::NotificationState::Pending));
                let n = inbox.choose(&mut self.rng)?;
                Some(Command::SetNotificationState {
                    recipient: actor.clone(),
                    notification_id: n.notification_id.clone(),
                    state: crate::comms::NotificationState::Read,
                    via: crate::comms::DeliveryChannel::Inbox,
                })
            }
        }
    }
}
