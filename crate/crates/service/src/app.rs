use std::sync::Arc;

use chrono::Utc;
use parking_lot::Mutex;
use prepub_core::comms::{DeliveryChannel, Notification, NotificationState};
use prepub_core::redif::IngestReport;
use prepub_core::registry::ScholarlyItem;
use prepub_core::{Command, Outcome, PersonId, State, Store, StoreError, Timestamp};

use crate::config::ServiceConfig;
use crate::webhook::{self, Delivery};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Principal {
    Admin,
    Person(PersonId),
}

impl Principal {
    pub fn person(&self) -> Option<&PersonId> {
        match self {
            Principal::Admin => None,
            Principal::Person(p) => Some(p),
        }
    }
}

struct Inner {
    store: Store,
    last_at: Option<Timestamp>,
    since_snapshot: u64,
}

/// Shared service state. All writes go through one lock, so commands are
/// applied and journaled in a single total order.
pub struct App {
    inner: Mutex<Inner>,
    config: ServiceConfig,
    http: Option<reqwest::Client>,
}

pub type Shared = Arc<App>;

impl App {
    pub fn open(config: ServiceConfig) -> Result<Shared, StoreError> {
        let base = config
            .base_state()
            .map_err(|e| StoreError::Corruption(format!("bad relation taxonomy: {e}")))?;
        let store = match &config.data_dir {
            Some(dir) => Store::open_with(dir, base)?,
            None => Store::in_memory_with(base),
        };
        Ok(Self::with_store(config, store))
    }

    pub fn with_store(config: ServiceConfig, store: Store) -> Shared {
        let http = config.webhook.as_ref().map(|w| {
            reqwest::Client::builder()
                .timeout(std::time::Duration::from_millis(w.timeout_ms))
                .build()
                .expect("http client builds")
        });
        Arc::new(App {
            inner: Mutex::new(Inner {
                store,
                last_at: None,
                since_snapshot: 0,
            }),
            config,
            http,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn read<R>(&self, f: impl FnOnce(&Store) -> R) -> R {
        f(&self.inner.lock().store)
    }

    pub fn state<R>(&self, f: impl FnOnce(&State) -> R) -> R {
        f(self.inner.lock().store.state())
    }

    /// Resolves a bearer token to a principal.
    pub fn authenticate(&self, token: &str) -> Option<Principal> {
        if self.config.admin_token.as_deref() == Some(token) {
            return Some(Principal::Admin);
        }
        if let Some(p) = self.config.tokens.get(token) {
            return Some(Principal::Person(p.clone()));
        }
        self.state(|s| s.token(token).map(|t| Principal::Person(t.person_id.clone())))
    }

    pub fn commit(self: &Arc<Self>, cmd: Command) -> Result<Outcome, StoreError> {
        let (outcome, deliveries) = {
            let mut inner = self.inner.lock();
            self.commit_locked(&mut inner, cmd)?
        };
        self.dispatch(deliveries);
        Ok(outcome)
    }

    /// Upserts whichever harvested items would change the registry. Planning
    /// and committing happen under one lock.
    pub fn commit_harvest(
        self: &Arc<Self>,
        items: Vec<ScholarlyItem>,
        report: &mut IngestReport,
    ) -> Result<(), StoreError> {
        let mut inner = self.inner.lock();
        let changed = inner.store.engine().plan_upserts(items, report);
        if !changed.is_empty() {
            self.commit_locked(&mut inner, Command::UpsertItems { items: changed })?;
        }
        Ok(())
    }

    fn commit_locked(&self, inner: &mut Inner, cmd: Command) -> Result<(Outcome, Vec<Delivery>), StoreError> {
        // Wall clock, but never earlier than the previous commit.
        let now = Utc::now();
        let at = inner.last_at.map_or(now, |last| last.max(now));
        let outcome = inner.store.commit(cmd, at)?;
        inner.last_at = Some(at);
        inner.since_snapshot += 1;
        if self.config.snapshot_every > 0 && inner.since_snapshot >= self.config.snapshot_every {
            match inner.store.snapshot() {
                Ok(()) => inner.since_snapshot = 0,
                Err(e) => log::error!("snapshot failed: {e}"),
            }
        }
        let deliveries = self.deliveries(inner.store.state(), &outcome.new_notifications());
        Ok((outcome, deliveries))
    }

    pub fn snapshot(&self) -> Result<(), StoreError> {
        let mut inner = self.inner.lock();
        inner.store.snapshot()?;
        inner.since_snapshot = 0;
        Ok(())
    }

    /// Re-sends every notification still pending, e.g. after a restart.
    pub fn redeliver_pending(self: &Arc<Self>) {
        let deliveries = {
            let inner = self.inner.lock();
            let pending: Vec<Notification> = inner
                .store
                .state()
                .comms()
                .notifications()
                .filter(|n| n.state == NotificationState::Pending)
                .cloned()
                .collect();
            self.deliveries(inner.store.state(), &pending)
        };
        self.dispatch(deliveries);
    }

    fn deliveries(&self, state: &State, notifications: &[Notification]) -> Vec<Delivery> {
        if self.http.is_none() {
            return Vec::new();
        }
        notifications
            .iter()
            .filter_map(|n| Delivery::new(state, n))
            .collect()
    }

    fn dispatch(self: &Arc<Self>, deliveries: Vec<Delivery>) {
        let (Some(http), Some(cfg)) = (&self.http, &self.config.webhook) else {
            return;
        };
        let Ok(rt) = tokio::runtime::Handle::try_current() else {
            if !deliveries.is_empty() {
                log::warn!("no runtime; {} webhook deliveries left pending", deliveries.len());
            }
            return;
        };
        for d in deliveries {
            let app = Arc::clone(self);
            let http = http.clone();
            let cfg = cfg.clone();
            rt.spawn(async move {
                if webhook::send(&http, &cfg, &d).await {
                    app.mark_delivered(&d);
                }
            });
        }
    }

    fn mark_delivered(self: &Arc<Self>, d: &Delivery) {
        let cmd = Command::SetNotificationState {
            recipient: d.recipient.clone(),
            notification_id: d.notification_id.clone(),
            state: NotificationState::Delivered,
            via: DeliveryChannel::Webhook,
        };
        // Already read through the inbox is fine; anything else is worth a log line.
        if let Err(e) = self.commit(cmd) {
            log::debug!("{} not marked delivered: {e}", d.notification_id);
        }
    }
}
