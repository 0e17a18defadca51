//! The engine state and the command set that mutates it.
//!
//! Every mutation is a [`Command`] applied with an explicit timestamp, so a
//! log of commands replays into byte-identical state. Commands validate
//! fully before touching anything: a failed command leaves the state as it
//! was.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::aggregation::Aggregation;
use crate::anchoring::AnchorConfig;
use crate::comms::{
    ActionKind, Comms, CompetingOffer, DeliveryChannel, Notification, NotificationState,
    ReputationPortrait, Thread, UsageEvent,
};
use crate::error::{Error, Result};
use crate::graph::{neighbors_of, EdgeLabel, NeighborReport, NodeId, NodeKind, UsageGraph};
use crate::ids::{AggregationId, NotificationId, OutputId, PersonId, ThreadId, Timestamp};
use crate::micro::{
    Draft, MicroOutput, MicroOutputCore, OutputBody, OutputRef, OutputStore, RefKind, Taxonomy,
    Visibility,
};
use crate::redif::{collect_archive, ArchiveDescriptor, FetchError, Handle, IngestReport, ResourceFetcher};
use crate::registry::{Claim, PersonProfile, Registry, ScholarlyItem, UpsertOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiToken {
    pub token: String,
    pub person_id: PersonId,
    pub issued_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    registry: Registry,
    outputs: OutputStore,
    graph: UsageGraph,
    comms: Comms,
    aggregations: BTreeMap<AggregationId, Aggregation>,
    next_aggregation: u64,
    tokens: BTreeMap<String, ApiToken>,
    taxonomy: Taxonomy,
    anchor_config: AnchorConfig,
}

impl Default for State {
    fn default() -> Self {
        State::new(Taxonomy::starter(), AnchorConfig::default())
    }
}

impl State {
    pub fn new(taxonomy: Taxonomy, anchor_config: AnchorConfig) -> Self {
        State {
            registry: Registry::default(),
            outputs: OutputStore::default(),
            graph: UsageGraph::default(),
            comms: Comms::default(),
            aggregations: BTreeMap::new(),
            next_aggregation: 0,
            tokens: BTreeMap::new(),
            taxonomy,
            anchor_config,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn outputs(&self) -> &OutputStore {
        &self.outputs
    }

    pub fn graph(&self) -> &UsageGraph {
        &self.graph
    }

    pub fn comms(&self) -> &Comms {
        &self.comms
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn anchor_config(&self) -> &AnchorConfig {
        &self.anchor_config
    }

    pub fn aggregation(&self, id: &AggregationId) -> Option<&Aggregation> {
        self.aggregations.get(id)
    }

    pub fn token(&self, token: &str) -> Option<&ApiToken> {
        self.tokens.get(token)
    }

    /// Canonical serialization; equal states give equal bytes.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    /// Persons owning what `r` points at.
    pub fn owners(&self, r: &OutputRef) -> BTreeSet<PersonId> {
        match r.kind {
            RefKind::Item => r
                .handle()
                .map(|h| self.registry.resolve_authors(&h))
                .unwrap_or_default(),
            RefKind::Micro => r
                .output_id()
                .and_then(|id| self.outputs.get(&id))
                .map(|o| BTreeSet::from([o.core.creator.clone()]))
                .unwrap_or_default(),
        }
    }

    /// Normalizes `r` and checks it points at something `viewer` can see.
    pub fn resolve_ref(&self, r: &OutputRef, viewer: &PersonId) -> Result<OutputRef> {
        let r = r.normalized()?;
        let found = match r.kind {
            RefKind::Item => r.handle().is_some_and(|h| self.registry.get_item(&h).is_some()),
            RefKind::Micro => r
                .output_id()
                .and_then(|id| self.outputs.get(&id))
                .is_some_and(|o| o.visible_to(Some(viewer))),
        };
        if found {
            Ok(r)
        } else {
            Err(Error::DanglingRef(r.to_string()))
        }
    }

    fn require_person(&self, p: &PersonId) -> Result<&PersonProfile> {
        self.registry.require_person(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    UpsertItems {
        items: Vec<ScholarlyItem>,
    },
    RegisterPerson {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        contact: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        affiliation: Option<String>,
    },
    ClaimWork {
        person: PersonId,
        handle: Handle,
    },
    CreateOutput {
        creator: PersonId,
        draft: Draft,
        visibility: Visibility,
    },
    ReviseOutput {
        editor: PersonId,
        output_id: OutputId,
        draft: Draft,
    },
    SetVisibility {
        actor: PersonId,
        output_id: OutputId,
        visibility: Visibility,
    },
    OpenThread {
        notification_id: NotificationId,
        opener: PersonId,
        first_message: String,
        visibility: Visibility,
    },
    PostMessage {
        thread_id: ThreadId,
        author: PersonId,
        body: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        attached_output: Option<OutputRef>,
    },
    SubmitOffer {
        thread_id: ThreadId,
        challenger: PersonId,
        offered: OutputRef,
        note: String,
    },
    SetNotificationState {
        recipient: PersonId,
        notification_id: NotificationId,
        state: NotificationState,
        via: DeliveryChannel,
    },
    CompileAggregation {
        editor: PersonId,
        title: String,
        members: Vec<OutputRef>,
    },
    IssueToken {
        person: PersonId,
        token: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Outcome {
    Items {
        outcomes: Vec<UpsertOutcome>,
    },
    Person {
        profile: PersonProfile,
    },
    Claim {
        claim: Claim,
    },
    Output {
        output: MicroOutput,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        event: Option<UsageEvent>,
        notifications: Vec<Notification>,
    },
    Thread {
        thread: Thread,
    },
    Offer {
        offer: CompetingOffer,
        notification: Notification,
    },
    Notification {
        notification: Notification,
    },
    Aggregation {
        aggregation: Aggregation,
    },
    Token {
        token: ApiToken,
    },
}

impl Outcome {
    /// Notifications this command created.
    pub fn new_notifications(&self) -> Vec<Notification> {
        match self {
            Outcome::Output { notifications, .. } => notifications.clone(),
            Outcome::Offer { notification, .. } => vec![notification.clone()],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    DanglingEdge { from: NodeId, to: NodeId, missing: NodeId },
    OrphanNode { node: NodeId, reason: String },
    BrokenRelationship { output_id: OutputId, reference: String },
    Registry { detail: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Engine {
    state: State,
}

macro_rules! expect_outcome {
    ($outcome:expr, $pat:pat => $val:expr) => {
        match $outcome {
            $pat => $val,
            other => unreachable!("unexpected outcome {other:?}"),
        }
    };
}

impl Engine {
    pub fn new() -> Self {
        Engine::default()
    }

    pub fn with_config(taxonomy: Taxonomy, anchor_config: AnchorConfig) -> Self {
        Engine {
            state: State::new(taxonomy, anchor_config),
        }
    }

    pub fn from_state(state: State) -> Self {
        Engine { state }
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn into_state(self) -> State {
        self.state
    }

    /// Test hook: direct mutable access for deliberate corruption.
    #[doc(hidden)]
    pub fn state_mut_for_tests(&mut self) -> (&mut UsageGraph, &mut OutputStore) {
        (&mut self.state.graph, &mut self.state.outputs)
    }

    pub fn execute(&mut self, cmd: &Command, at: Timestamp) -> Result<Outcome> {
        match cmd {
            Command::UpsertItems { items } => self.apply_upserts(items),
            Command::RegisterPerson {
                name,
                contact,
                affiliation,
            } => {
                let profile = self
                    .state
                    .registry
                    .register_person(name, contact.clone(), affiliation.clone())?;
                self.state.graph.add_person(&profile.person_id);
                Ok(Outcome::Person { profile })
            }
            Command::ClaimWork { person, handle } => {
                let claim = self.state.registry.claim_work(person, handle, at)?;
                self.state.graph.add_claim(person, handle);
                Ok(Outcome::Claim { claim })
            }
            Command::CreateOutput {
                creator,
                draft,
                visibility,
            } => self.apply_create(creator, draft, *visibility, at),
            Command::ReviseOutput {
                editor,
                output_id,
                draft,
            } => self.apply_revise(editor, output_id, draft, at),
            Command::SetVisibility {
                actor,
                output_id,
                visibility,
            } => self.apply_visibility(actor, output_id, *visibility, at),
            Command::OpenThread {
                notification_id,
                opener,
                first_message,
                visibility,
            } => {
                self.state.require_person(opener)?;
                let thread = self.state.comms.open_thread(
                    notification_id,
                    opener,
                    first_message,
                    *visibility,
                    at,
                )?;
                Ok(Outcome::Thread { thread })
            }
            Command::PostMessage {
                thread_id,
                author,
                body,
                attached_output,
            } => {
                self.state.require_person(author)?;
                self.state.comms.check_post(thread_id, author, body)?;
                let attached = attached_output
                    .as_ref()
                    .map(|r| self.state.resolve_ref(r, author))
                    .transpose()?;
                let thread = self
                    .state
                    .comms
                    .post_message(thread_id, author, body, attached, at)?;
                Ok(Outcome::Thread { thread })
            }
            Command::SubmitOffer {
                thread_id,
                challenger,
                offered,
                note,
            } => {
                self.state.require_person(challenger)?;
                self.state.comms.check_offer(thread_id, challenger)?;
                let offered = self.state.resolve_ref(offered, challenger)?;
                let (offer, notification) = self
                    .state
                    .comms
                    .submit_offer(thread_id, challenger, offered, note, at)?;
                Ok(Outcome::Offer { offer, notification })
            }
            Command::SetNotificationState {
                recipient,
                notification_id,
                state,
                via,
            } => {
                let notification = self
                    .state
                    .comms
                    .set_state(recipient, notification_id, *state, *via)?;
                Ok(Outcome::Notification { notification })
            }
            Command::CompileAggregation {
                editor,
                title,
                members,
            } => self.apply_aggregation(editor, title, members, at),
            Command::IssueToken { person, token } => {
                self.state.require_person(person)?;
                if token.trim().is_empty() {
                    return Err(Error::EmptyField("token"));
                }
                if self.state.tokens.contains_key(token) {
                    return Err(Error::DuplicateToken);
                }
                let token = ApiToken {
                    token: token.clone(),
                    person_id: person.clone(),
                    issued_at: at,
                };
                self.state.tokens.insert(token.token.clone(), token.clone());
                Ok(Outcome::Token { token })
            }
        }
    }

    fn apply_upserts(&mut self, items: &[ScholarlyItem]) -> Result<Outcome> {
        for item in items {
            item.validate()?;
        }
        let mut outcomes = Vec::with_capacity(items.len());
        for item in items {
            let handle = item.handle.clone();
            let outcome = self.state.registry.upsert_item(item.clone())?;
            if outcome == UpsertOutcome::Created {
                self.state.graph.add_item(&handle);
            }
            outcomes.push(outcome);
        }
        Ok(Outcome::Items { outcomes })
    }

    fn store_output(&mut self, output: MicroOutput, kind: ActionKind, at: Timestamp) -> Outcome {
        let creator = output.core.creator.clone();
        let visibility = output.core.visibility;
        let targets = output.body.targets();
        self.state.graph.add_output(&output);
        self.state.outputs.insert(output.clone());
        let (event, notifications) =
            self.record_and_notify(&creator, kind, output.id().clone(), targets, visibility, at);
        Outcome::Output {
            output,
            event: Some(event),
            notifications,
        }
    }

    fn record_and_notify(
        &mut self,
        actor: &PersonId,
        kind: ActionKind,
        output_id: OutputId,
        targets: Vec<OutputRef>,
        visibility: Visibility,
        at: Timestamp,
    ) -> (UsageEvent, Vec<Notification>) {
        let event_id = self
            .state
            .comms
            .record_usage_event(actor, kind, Some(output_id), targets, visibility, at);
        let state = &mut self.state;
        let (registry, outputs) = (&state.registry, &state.outputs);
        let owners = |r: &OutputRef| owners_of(registry, outputs, r);
        let notifications = if visibility == Visibility::Public {
            state.comms.fan_out_notifications(event_id, owners)
        } else {
            Vec::new()
        };
        let event = state.comms.event(event_id).expect("just recorded").clone();
        (event, notifications)
    }

    fn checked_draft(&self, actor: &PersonId, draft: &Draft) -> Result<Draft> {
        let draft = draft.checked(&self.state.anchor_config, &self.state.taxonomy)?;
        if let Draft::Relationship {
            from_ref, to_ref, ..
        } = &draft
        {
            self.state.resolve_ref(from_ref, actor)?;
            self.state.resolve_ref(to_ref, actor)?;
        }
        Ok(draft)
    }

    fn apply_create(
        &mut self,
        creator: &PersonId,
        draft: &Draft,
        visibility: Visibility,
        at: Timestamp,
    ) -> Result<Outcome> {
        if self.state.registry.person(creator).is_none() {
            return Err(Error::UnknownCreator(creator.to_string()));
        }
        let draft = self.checked_draft(creator, draft)?;
        let kind = draft.kind();
        let output = MicroOutput {
            core: MicroOutputCore {
                output_id: self.state.outputs.next_id(),
                creator: creator.clone(),
                created_at: at,
                visibility,
                version: 1,
                supersedes: None,
            },
            body: draft.into_body(creator, at),
        };
        Ok(self.store_output(output, kind.into(), at))
    }

    fn head_owned_by(&self, actor: &PersonId, id: &OutputId) -> Result<&MicroOutput> {
        let old = self.state.outputs.require(id)?;
        if &old.core.creator != actor {
            return Err(Error::NotOwner(id.to_string()));
        }
        if !self.state.outputs.is_head(id) {
            return Err(Error::StaleVersion(id.to_string()));
        }
        Ok(old)
    }

    fn apply_revise(&mut self, editor: &PersonId, id: &OutputId, draft: &Draft, at: Timestamp) -> Result<Outcome> {
        let old = self.head_owned_by(editor, id)?;
        if draft.kind() != old.kind() {
            return Err(Error::KindMismatch {
                expected: old.kind().as_str(),
                found: draft.kind().as_str(),
            });
        }
        let draft = self.checked_draft(editor, draft)?;
        let output = MicroOutput {
            core: MicroOutputCore {
                output_id: self.state.outputs.next_id(),
                creator: editor.clone(),
                created_at: at,
                visibility: old.core.visibility,
                version: old.core.version + 1,
                supersedes: Some(id.clone()),
            },
            body: draft.into_body(editor, at),
        };
        Ok(self.store_output(output, ActionKind::Revision, at))
    }

    fn apply_visibility(
        &mut self,
        actor: &PersonId,
        id: &OutputId,
        visibility: Visibility,
        at: Timestamp,
    ) -> Result<Outcome> {
        let current = self.head_owned_by(actor, id)?.clone();
        match (current.core.visibility, visibility) {
            (Visibility::Public, Visibility::Private) => Err(Error::VisibilityDowngrade),
            (a, b) if a == b => Ok(Outcome::Output {
                output: current,
                event: None,
                notifications: Vec::new(),
            }),
            _ => {
                self.state.outputs.set_visibility(id, Visibility::Public);
                let output = self.state.outputs.get(id).expect("exists").clone();
                let (event, notifications) = self.record_and_notify(
                    actor,
                    ActionKind::VisibilityChange,
                    id.clone(),
                    output.body.targets(),
                    Visibility::Public,
                    at,
                );
                Ok(Outcome::Output {
                    output,
                    event: Some(event),
                    notifications,
                })
            }
        }
    }

    fn apply_aggregation(
        &mut self,
        editor: &PersonId,
        title: &str,
        members: &[OutputRef],
        at: Timestamp,
    ) -> Result<Outcome> {
        self.state.require_person(editor)?;
        if title.trim().is_empty() {
            return Err(Error::EmptyField("title"));
        }
        if members.is_empty() {
            return Err(Error::EmptyAggregation);
        }
        let members = members
            .iter()
            .map(|m| self.state.resolve_ref(m, editor))
            .collect::<Result<Vec<_>>>()?;
        let keys: BTreeSet<(RefKind, &str)> = members.iter().map(|m| m.key()).collect();
        let edges = self
            .state
            .outputs
            .heads()
            .filter(|o| o.visible_to(Some(editor)))
            .filter_map(|o| match &o.body {
                OutputBody::Relationship(r)
                    if keys.contains(&r.from_ref.key()) && keys.contains(&r.to_ref.key()) =>
                {
                    Some(o.id().clone())
                }
                _ => None,
            })
            .collect();
        self.state.next_aggregation += 1;
        let aggregation = Aggregation {
            aggregation_id: AggregationId::from_seq(self.state.next_aggregation),
            title: title.to_string(),
            editor: editor.clone(),
            members: members.clone(),
            edges,
            compiled_at: at,
        };
        self.state
            .aggregations
            .insert(aggregation.aggregation_id.clone(), aggregation.clone());
        Ok(Outcome::Aggregation { aggregation })
    }

    // Typed conveniences over `execute`.

    pub fn upsert_item(&mut self, item: ScholarlyItem, at: Timestamp) -> Result<UpsertOutcome> {
        let out = self.execute(&Command::UpsertItems { items: vec![item] }, at)?;
        Ok(expect_outcome!(out, Outcome::Items { outcomes } => outcomes[0]))
    }

    pub fn register_person(&mut self, name: &str, contact: Option<String>, at: Timestamp) -> Result<PersonProfile> {
        let cmd = Command::RegisterPerson {
            name: name.to_string(),
            contact,
            affiliation: None,
        };
        Ok(expect_outcome!(self.execute(&cmd, at)?, Outcome::Person { profile } => profile))
    }

    pub fn claim_work(&mut self, person: &PersonId, handle: &Handle, at: Timestamp) -> Result<Claim> {
        let cmd = Command::ClaimWork {
            person: person.clone(),
            handle: handle.clone(),
        };
        Ok(expect_outcome!(self.execute(&cmd, at)?, Outcome::Claim { claim } => claim))
    }

    pub fn create_output(
        &mut self,
        creator: &PersonId,
        draft: Draft,
        visibility: Visibility,
        at: Timestamp,
    ) -> Result<(MicroOutput, Vec<Notification>)> {
        let cmd = Command::CreateOutput {
            creator: creator.clone(),
            draft,
            visibility,
        };
        Ok(expect_outcome!(
            self.execute(&cmd, at)?,
            Outcome::Output { output, notifications, .. } => (output, notifications)
        ))
    }

    pub fn revise_output(
        &mut self,
        editor: &PersonId,
        output_id: &OutputId,
        draft: Draft,
        at: Timestamp,
    ) -> Result<MicroOutput> {
        let cmd = Command::ReviseOutput {
            editor: editor.clone(),
            output_id: output_id.clone(),
            draft,
        };
        Ok(expect_outcome!(self.execute(&cmd, at)?, Outcome::Output { output, .. } => output))
    }

    pub fn publish(&mut self, actor: &PersonId, output_id: &OutputId, at: Timestamp) -> Result<Vec<Notification>> {
        let cmd = Command::SetVisibility {
            actor: actor.clone(),
            output_id: output_id.clone(),
            visibility: Visibility::Public,
        };
        Ok(expect_outcome!(
            self.execute(&cmd, at)?,
            Outcome::Output { notifications, .. } => notifications
        ))
    }

    pub fn open_thread(
        &mut self,
        notification_id: &NotificationId,
        opener: &PersonId,
        first_message: &str,
        visibility: Visibility,
        at: Timestamp,
    ) -> Result<Thread> {
        let cmd = Command::OpenThread {
            notification_id: notification_id.clone(),
            opener: opener.clone(),
            first_message: first_message.to_string(),
            visibility,
        };
        Ok(expect_outcome!(self.execute(&cmd, at)?, Outcome::Thread { thread } => thread))
    }

    pub fn post_message(
        &mut self,
        thread_id: &ThreadId,
        author: &PersonId,
        body: &str,
        attached_output: Option<OutputRef>,
        at: Timestamp,
    ) -> Result<Thread> {
        let cmd = Command::PostMessage {
            thread_id: thread_id.clone(),
            author: author.clone(),
            body: body.to_string(),
            attached_output,
        };
        Ok(expect_outcome!(self.execute(&cmd, at)?, Outcome::Thread { thread } => thread))
    }

    pub fn submit_offer(
        &mut self,
        thread_id: &ThreadId,
        challenger: &PersonId,
        offered: OutputRef,
        note: &str,
        at: Timestamp,
    ) -> Result<(CompetingOffer, Notification)> {
        let cmd = Command::SubmitOffer {
            thread_id: thread_id.clone(),
            challenger: challenger.clone(),
            offered,
            note: note.to_string(),
        };
        Ok(expect_outcome!(
            self.execute(&cmd, at)?,
            Outcome::Offer { offer, notification } => (offer, notification)
        ))
    }

    pub fn mark_read(&mut self, recipient: &PersonId, id: &NotificationId, at: Timestamp) -> Result<Notification> {
        let cmd = Command::SetNotificationState {
            recipient: recipient.clone(),
            notification_id: id.clone(),
            state: NotificationState::Read,
            via: DeliveryChannel::Inbox,
        };
        Ok(expect_outcome!(self.execute(&cmd, at)?, Outcome::Notification { notification } => notification))
    }

    pub fn compile_aggregation(
        &mut self,
        editor: &PersonId,
        title: &str,
        members: Vec<OutputRef>,
        at: Timestamp,
    ) -> Result<Aggregation> {
        let cmd = Command::CompileAggregation {
            editor: editor.clone(),
            title: title.to_string(),
            members,
        };
        Ok(expect_outcome!(self.execute(&cmd, at)?, Outcome::Aggregation { aggregation } => aggregation))
    }

    /// Fetches and parses an archive, then upserts whatever changed.
    pub fn harvest_archive(
        &mut self,
        desc: &ArchiveDescriptor,
        fetcher: &dyn ResourceFetcher,
        at: Timestamp,
    ) -> Result<IngestReport, FetchError> {
        let (items, mut report) = collect_archive(desc, fetcher)?;
        let changed = self.plan_upserts(items, &mut report);
        if !changed.is_empty() {
            self.execute(&Command::UpsertItems { items: changed }, at)
                .expect("harvested items are valid");
        }
        Ok(report)
    }

    // Queries.

    /// Keeps the items that would change the registry and tallies the rest.
    pub fn plan_upserts(&self, items: Vec<ScholarlyItem>, report: &mut IngestReport) -> Vec<ScholarlyItem> {
        let mut changed = Vec::new();
        for item in items {
            match self.state.registry.upsert_preview(&item) {
                UpsertOutcome::Created => {
                    report.items_created += 1;
                    changed.push(item);
                }
                UpsertOutcome::Updated => {
                    report.items_updated += 1;
                    changed.push(item);
                }
                UpsertOutcome::Unchanged => report.items_unchanged += 1,
            }
        }
        changed
    }

    pub fn resolve_authors(&self, handle: &Handle) -> BTreeSet<PersonId> {
        self.state.registry.resolve_authors(handle)
    }

    pub fn list_outputs_for(&self, target: &Handle, viewer: Option<&PersonId>) -> Vec<MicroOutput> {
        self.state
            .outputs
            .list_for(target, viewer)
            .into_iter()
            .cloned()
            .collect()
    }

    pub fn list_inbox(&self, person: &PersonId, filter: Option<NotificationState>) -> Result<Vec<Notification>> {
        self.state.require_person(person)?;
        Ok(self
            .state
            .comms
            .list_inbox(person, filter)
            .into_iter()
            .cloned()
            .collect())
    }

    pub fn compute_portrait(&self, person: &PersonId) -> Result<ReputationPortrait> {
        self.state.require_person(person)?;
        Ok(self.state.comms.compute_portrait(person))
    }

    pub fn neighbors_of(&self, person: &PersonId, max_results: usize) -> Result<NeighborReport> {
        self.state.require_person(person)?;
        Ok(neighbors_of(
            &self.state.graph,
            &self.state.outputs,
            person,
            max_results,
        ))
    }

    pub fn export_aggregation(&self, id: &AggregationId, format: crate::aggregation::ExportFormat) -> Result<String> {
        let agg = self
            .state
            .aggregations
            .get(id)
            .ok_or_else(|| Error::UnknownAggregation(id.to_string()))?;
        Ok(match format {
            crate::aggregation::ExportFormat::Json => agg.to_json(),
            crate::aggregation::ExportFormat::Text => agg.to_text(&self.state),
        })
    }

    /// Structural consistency of the graph against the stores.
    pub fn integrity_check(&self) -> Vec<Violation> {
        let s = &self.state;
        let g = &s.graph;
        let mut out = Vec::new();
        for e in g.edges() {
            for end in [&e.from, &e.to] {
                if !g.contains(end) {
                    out.push(Violation::DanglingEdge {
                        from: e.from.clone(),
                        to: e.to.clone(),
                        missing: end.clone(),
                    });
                }
            }
        }
        for (node, kind) in g.nodes() {
            let backed = match kind {
                NodeKind::Item => node
                    .local()
                    .parse::<Handle>()
                    .ok()
                    .is_some_and(|h| s.registry.get_item(&h).is_some()),
                NodeKind::Micro => s.outputs.get(&OutputId::new(node.local())).is_some(),
                NodeKind::Person => s.registry.person(&PersonId::new(node.local())).is_some(),
            };
            if !backed {
                out.push(Violation::OrphanNode {
                    node: node.clone(),
                    reason: "no backing entity".into(),
                });
            } else if kind == NodeKind::Micro
                && !g.incoming(node).any(|e| e.label == EdgeLabel::Created)
            {
                out.push(Violation::OrphanNode {
                    node: node.clone(),
                    reason: "micro output without creator edge".into(),
                });
            }
        }
        for o in s.outputs.all() {
            if let OutputBody::Relationship(r) = &o.body {
                for end in [&r.from_ref, &r.to_ref] {
                    let ok = match end.kind {
                        RefKind::Item => end.handle().is_some_and(|h| s.registry.get_item(&h).is_some()),
                        RefKind::Micro => end.output_id().is_some_and(|id| s.outputs.get(&id).is_some()),
                    };
                    if !ok {
                        out.push(Violation::BrokenRelationship {
                            output_id: o.id().clone(),
                            reference: end.to_string(),
                        });
                    }
                }
            }
        }
        out.extend(
            s.registry
                .violations()
                .into_iter()
                .map(|detail| Violation::Registry { detail }),
        );
        out
    }
}

fn owners_of(registry: &Registry, outputs: &OutputStore, r: &OutputRef) -> BTreeSet<PersonId> {
    match r.kind {
        RefKind::Item => r
            .handle()
            .map(|h| registry.resolve_authors(&h))
            .unwrap_or_default(),
        RefKind::Micro => r
            .output_id()
            .and_then(|id| outputs.get(&id))
            .map(|o| BTreeSet::from([o.core.creator.clone()]))
            .unwrap_or_default(),
    }
}
