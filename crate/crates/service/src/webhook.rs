use prepub_core::comms::Notification;
use prepub_core::{NotificationId, PersonId, State};
use serde_json::{json, Value};

use crate::config::WebhookConfig;

/// One notification on its way to the webhook.
#[derive(Debug, Clone)]
pub struct Delivery {
    pub notification_id: NotificationId,
    pub recipient: PersonId,
    pub payload: Value,
}

impl Delivery {
    pub fn new(state: &State, n: &Notification) -> Option<Delivery> {
        let ev = state.comms().event(n.event_id)?;
        Some(Delivery {
            notification_id: n.notification_id.clone(),
            recipient: n.recipient.clone(),
            payload: json!({
                "notification_id": n.notification_id,
                "recipient": n.recipient,
                "event": {
                    "event_id": ev.event_id,
                    "actor": ev.actor,
                    "action_kind": ev.action_kind,
                    "output_id": ev.output_id,
                    "used_targets": ev.used_targets,
                    "at": ev.at,
                },
            }),
        })
    }
}

/// Posts the payload, retrying with exponential backoff. Returns whether a
/// 2xx answer came back.
pub async fn send(http: &reqwest::Client, cfg: &WebhookConfig, d: &Delivery) -> bool {
    let body = d.payload.to_string();
    for attempt in 0..=cfg.retries {
        if attempt > 0 {
            tokio::time::sleep(cfg.backoff(attempt - 1)).await;
        }
        let res = http
            .post(&cfg.url)
            .header("content-type", "application/json")
            .body(body.clone())
            .send()
            .await;
        match res {
            Ok(r) if r.status().is_success() => return true,
            Ok(r) => log::warn!("webhook {} answered {}", d.notification_id, r.status()),
            Err(e) => log::warn!("webhook {} failed: {e}", d.notification_id),
        }
    }
    log::error!("giving up on webhook for {}", d.notification_id);
    false
}
