//! Usage events, notifications, assistance threads and competing offers.
//!
//! Every action that uses somebody's work is appended to the event log.
//! Public events fan out one notification per distinct owner of the used
//! targets (never to the actor); a notified party may open a thread with the
//! user, and third parties may join public threads with competing offers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{EventId, NotificationId, OutputId, PersonId, ThreadId, Timestamp};
use crate::micro::{OutputKind, OutputRef, Visibility};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Comment,
    Assertion,
    Quotation,
    Micropaper,
    Relationship,
    Revision,
    VisibilityChange,
    Message,
}

impl From<OutputKind> for ActionKind {
    fn from(k: OutputKind) -> Self {
        match k {
            OutputKind::Comment => ActionKind::Comment,
            OutputKind::Assertion => ActionKind::Assertion,
            OutputKind::Quotation => ActionKind::Quotation,
            OutputKind::Micropaper => ActionKind::Micropaper,
            OutputKind::Relationship => ActionKind::Relationship,
        }
    }
}

impl ActionKind {
    /// Kinds whose public events notify the owners of what was used.
    pub fn is_usage(self) -> bool {
        !matches!(self, ActionKind::Message)
    }

    pub fn is_creation(self) -> bool {
        matches!(
            self,
            ActionKind::Comment
                | ActionKind::Assertion
                | ActionKind::Quotation
                | ActionKind::Micropaper
                | ActionKind::Relationship
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageEvent {
    pub event_id: EventId,
    pub actor: PersonId,
    pub action_kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_id: Option<OutputId>,
    pub used_targets: Vec<OutputRef>,
    pub at: Timestamp,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NotificationState {
    Pending,
    Delivered,
    Read,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeliveryChannel {
    Inbox,
    Webhook,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub notification_id: NotificationId,
    pub recipient: PersonId,
    pub event_id: EventId,
    pub state: NotificationState,
    pub delivered_via: DeliveryChannel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub author: PersonId,
    pub body: String,
    pub at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attached_output: Option<OutputRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub thread_id: ThreadId,
    pub origin_event: EventId,
    pub origin_notification: NotificationId,
    /// The event's actor first, then the notified author, then challengers.
    pub participants: Vec<PersonId>,
    pub messages: Vec<Message>,
    pub visibility: Visibility,
}

impl Thread {
    pub fn is_participant(&self, p: &PersonId) -> bool {
        self.participants.contains(p)
    }

    pub fn original_pair(&self) -> &[PersonId] {
        &self.participants[..2]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompetingOffer {
    pub thread_id: ThreadId,
    pub challenger: PersonId,
    pub offered: OutputRef,
    pub note: String,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReputationPortrait {
    pub person_id: PersonId,
    /// Public events by the person, per action kind.
    pub created_counts: BTreeMap<ActionKind, u64>,
    /// The person's private events; only shown to the person.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub private_counts: Option<BTreeMap<ActionKind, u64>>,
    pub received_usage_count: u64,
    pub notifications_responded: u64,
    pub notifications_received: u64,
    pub threads_joined: u64,
    pub offers_made: u64,
    /// Time of the newest event folded in, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub computed_at: Option<Timestamp>,
}

impl ReputationPortrait {
    pub fn public_view(mut self) -> Self {
        self.private_counts = None;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Comms {
    events: Vec<UsageEvent>,
    notifications: BTreeMap<NotificationId, Notification>,
    notified: BTreeSet<(EventId, PersonId)>,
    inbox: BTreeMap<PersonId, Vec<NotificationId>>,
    threads: BTreeMap<ThreadId, Thread>,
    thread_keys: BTreeSet<(EventId, PersonId, PersonId)>,
    offers: Vec<CompetingOffer>,
    next_notification: u64,
    next_thread: u64,
}

impl Comms {
    pub fn events(&self) -> &[UsageEvent] {
        &self.events
    }

    pub fn event(&self, id: EventId) -> Option<&UsageEvent> {
        // ids start at 1 and are dense
        self.events.get((id as usize).checked_sub(1)?)
    }

    pub fn notifications(&self) -> impl Iterator<Item = &Notification> {
        self.notifications.values()
    }

    pub fn notification(&self, id: &NotificationId) -> Option<&Notification> {
        self.notifications.get(id)
    }

    pub fn threads(&self) -> impl Iterator<Item = &Thread> {
        self.threads.values()
    }

    pub fn thread(&self, id: &ThreadId) -> Option<&Thread> {
        self.threads.get(id)
    }

    pub fn offers(&self) -> &[CompetingOffer] {
        &self.offers
    }

    /// Appends an event and returns its id.
    pub(crate) fn record_usage_event(
        &mut self,
        actor: &PersonId,
        action_kind: ActionKind,
        output_id: Option<OutputId>,
        used_targets: Vec<OutputRef>,
        visibility: Visibility,
        at: Timestamp,
    ) -> EventId {
        let event_id = self.events.len() as EventId + 1;
        self.events.push(UsageEvent {
            event_id,
            actor: actor.clone(),
            action_kind,
            output_id,
            used_targets,
            at,
            visibility,
        });
        event_id
    }

    fn notify(&mut self, event_id: EventId, recipient: &PersonId) -> Option<Notification> {
        if !self.notified.insert((event_id, recipient.clone())) {
            return None;
        }
        self.next_notification += 1;
        let n = Notification {
            notification_id: NotificationId::from_seq(self.next_notification),
            recipient: recipient.clone(),
            event_id,
            state: NotificationState::Pending,
            delivered_via: DeliveryChannel::Inbox,
        };
        self.inbox
            .entry(recipient.clone())
            .or_default()
            .push(n.notification_id.clone());
        self.notifications.insert(n.notification_id.clone(), n.clone());
        Some(n)
    }

    /// Notifies every owner of the event's targets except the actor, at most
    /// once per recipient. Re-running for the same event creates nothing.
    pub(crate) fn fan_out_notifications<F>(&mut self, event_id: EventId, owners: F) -> Vec<Notification>
    where
        F: Fn(&OutputRef) -> BTreeSet<PersonId>,
    {
        let Some(event) = self.event(event_id) else {
            return Vec::new();
        };
        if event.visibility != Visibility::Public || !event.action_kind.is_usage() {
            return Vec::new();
        }
        let actor = event.actor.clone();
        let recipients: BTreeSet<PersonId> = event
            .used_targets
            .iter()
            .flat_map(&owners)
            .filter(|p| *p != actor)
            .collect();
        recipients
            .iter()
            .filter_map(|r| self.notify(event_id, r))
            .collect()
    }

    pub fn require_notification(&self, id: &NotificationId) -> Result<&Notification> {
        self.notifications
            .get(id)
            .ok_or_else(|| Error::UnknownNotification(id.to_string()))
    }

    pub fn require_thread(&self, id: &ThreadId) -> Result<&Thread> {
        self.threads
            .get(id)
            .ok_or_else(|| Error::UnknownThread(id.to_string()))
    }

    pub(crate) fn check_open_thread(&self, notification_id: &NotificationId, opener: &PersonId, first_message: &str) -> Result<(PersonId, PersonId, EventId)> {
        let n = self.require_notification(notification_id)?;
        let event = self.event(n.event_id).expect("notifications reference logged events");
        if opener != &n.recipient && opener != &event.actor {
            return Err(Error::NotParty);
        }
        let key = (n.event_id, event.actor.clone(), n.recipient.clone());
        if self.thread_keys.contains(&key) {
            return Err(Error::DuplicateThread);
        }
        if first_message.trim().is_empty() {
            return Err(Error::EmptyField("message"));
        }
        Ok((event.actor.clone(), n.recipient.clone(), n.event_id))
    }

    pub(crate) fn open_thread(
        &mut self,
        notification_id: &NotificationId,
        opener: &PersonId,
        first_message: &str,
        visibility: Visibility,
        at: Timestamp,
    ) -> Result<Thread> {
        let (user, author, origin_event) = self.check_open_thread(notification_id, opener, first_message)?;
        self.thread_keys
            .insert((origin_event, user.clone(), author.clone()));
        self.next_thread += 1;
        let thread = Thread {
            thread_id: ThreadId::from_seq(self.next_thread),
            origin_event,
            origin_notification: notification_id.clone(),
            participants: vec![user, author],
            messages: vec![Message {
                author: opener.clone(),
                body: first_message.to_string(),
                at,
                attached_output: None,
            }],
            visibility,
        };
        self.record_usage_event(opener, ActionKind::Message, None, Vec::new(), visibility, at);
        self.threads.insert(thread.thread_id.clone(), thread.clone());
        Ok(thread)
    }

    pub(crate) fn check_post(&self, thread_id: &ThreadId, author: &PersonId, body: &str) -> Result<()> {
        let thread = self.require_thread(thread_id)?;
        if !thread.is_participant(author) {
            return Err(Error::NotParticipant);
        }
        if body.trim().is_empty() {
            return Err(Error::EmptyField("body"));
        }
        Ok(())
    }

    pub(crate) fn post_message(
        &mut self,
        thread_id: &ThreadId,
        author: &PersonId,
        body: &str,
        attached_output: Option<OutputRef>,
        at: Timestamp,
    ) -> Result<Thread> {
        self.check_post(thread_id, author, body)?;
        let thread = self.threads.get_mut(thread_id).expect("checked");
        thread.messages.push(Message {
            author: author.clone(),
            body: body.to_string(),
            at,
            attached_output: attached_output.clone(),
        });
        let visibility = thread.visibility;
        let snapshot = thread.clone();
        self.record_usage_event(
            author,
            ActionKind::Message,
            None,
            attached_output.into_iter().collect(),
            visibility,
            at,
        );
        Ok(snapshot)
    }

    pub(crate) fn check_offer(&self, thread_id: &ThreadId, challenger: &PersonId) -> Result<()> {
        let thread = self.require_thread(thread_id)?;
        if thread.visibility != Visibility::Public {
            return Err(Error::PrivateThread);
        }
        if thread.original_pair().contains(challenger) {
            return Err(Error::NotEligible);
        }
        Ok(())
    }

    /// Records the offer as a public message from the challenger, adds them
    /// to the thread and notifies the user side of the original pair.
    pub(crate) fn submit_offer(
        &mut self,
        thread_id: &ThreadId,
        challenger: &PersonId,
        offered: OutputRef,
        note: &str,
        at: Timestamp,
    ) -> Result<(CompetingOffer, Notification)> {
        self.check_offer(thread_id, challenger)?;
        let thread = self.threads.get_mut(thread_id).expect("checked");
        if !thread.is_participant(challenger) {
            thread.participants.push(challenger.clone());
        }
        thread.messages.push(Message {
            author: challenger.clone(),
            body: note.to_string(),
            at,
            attached_output: Some(offered.clone()),
        });
        let user = thread.participants[0].clone();
        let event_id = self.record_usage_event(
            challenger,
            ActionKind::Message,
            None,
            vec![offered.clone()],
            Visibility::Public,
            at,
        );
        let notification = self
            .notify(event_id, &user)
            .expect("fresh event has no notifications");
        let offer = CompetingOffer {
            thread_id: thread_id.clone(),
            challenger: challenger.clone(),
            offered,
            note: note.to_string(),
            at,
        };
        self.offers.push(offer.clone());
        Ok((offer, notification))
    }

    /// The person's notifications, newest first.
    pub fn list_inbox(&self, person: &PersonId, filter: Option<NotificationState>) -> Vec<&Notification> {
        let mut out: Vec<&Notification> = self
            .inbox
            .get(person)
            .into_iter()
            .flatten()
            .filter_map(|id| self.notifications.get(id))
            .filter(|n| filter.is_none_or(|s| n.state == s))
            .collect();
        out.sort_by(|a, b| {
            (b.event_id, &b.notification_id).cmp(&(a.event_id, &a.notification_id))
        });
        out
    }

    pub(crate) fn check_transition(&self, recipient: &PersonId, id: &NotificationId, to: NotificationState) -> Result<()> {
        let n = self
            .notifications
            .get(id)
            .filter(|n| &n.recipient == recipient)
            .ok_or_else(|| Error::UnknownNotification(id.to_string()))?;
        let ok = match (n.state, to) {
            (NotificationState::Pending, NotificationState::Delivered) => true,
            (NotificationState::Pending | NotificationState::Delivered, NotificationState::Read) => true,
            (a, b) => a == b,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidTransition)
        }
    }

    pub(crate) fn set_state(&mut self, recipient: &PersonId, id: &NotificationId, to: NotificationState, via: DeliveryChannel) -> Result<Notification> {
        self.check_transition(recipient, id, to)?;
        let n = self.notifications.get_mut(id).expect("checked");
        if to == NotificationState::Delivered {
            n.delivered_via = via;
        }
        n.state = to;
        Ok(n.clone())
    }

    /// Folds the event log and thread store into the person's portrait.
    pub fn compute_portrait(&self, person: &PersonId) -> ReputationPortrait {
        let mut created = BTreeMap::new();
        let mut private = BTreeMap::new();
        for e in self.events.iter().filter(|e| &e.actor == person) {
            let bucket = match e.visibility {
                Visibility::Public => &mut created,
                Visibility::Private => &mut private,
            };
            *bucket.entry(e.action_kind).or_insert(0u64) += 1;
        }

        let mine = self.list_inbox(person, None);
        let received = mine.len() as u64;
        let received_usage = mine
            .iter()
            .filter(|n| {
                self.event(n.event_id)
                    .is_some_and(|e| e.action_kind.is_usage())
            })
            .count() as u64;
        let responded = mine
            .iter()
            .filter(|n| {
                self.threads.values().any(|t| {
                    t.origin_notification == n.notification_id && t.messages.iter().any(|m| &m.author == person)
                })
            })
            .count() as u64;

        ReputationPortrait {
            person_id: person.clone(),
            created_counts: created,
            private_counts: Some(private),
            received_usage_count: received_usage,
            notifications_responded: responded,
            notifications_received: received,
            threads_joined: self
                .threads
                .values()
                .filter(|t| t.is_participant(person))
                .count() as u64,
            offers_made: self.offers.iter().filter(|o| &o.challenger == person).count() as u64,
            computed_at: self.events.last().map(|e| e.at),
        }
    }
}
