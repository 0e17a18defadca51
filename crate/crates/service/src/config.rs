use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use prepub_core::anchoring::AnchorConfig;
use prepub_core::micro::{RelationType, Taxonomy};
use prepub_core::{PersonId, State};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Directory for the journal and snapshot; in-memory when unset.
    pub data_dir: Option<PathBuf>,
    pub admin_token: Option<String>,
    /// Statically configured person tokens.
    pub tokens: BTreeMap<String, PersonId>,
    pub webhook: Option<WebhookConfig>,
    /// Write a snapshot after this many commits; 0 disables.
    pub snapshot_every: u64,
    pub anchor: AnchorConfig,
    /// Replaces the starter relation taxonomy when set.
    pub relation_types: Option<Vec<RelationType>>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: None,
            admin_token: None,
            tokens: BTreeMap::new(),
            webhook: None,
            snapshot_every: 1000,
            anchor: AnchorConfig::default(),
            relation_types: None,
        }
    }
}

impl ServiceConfig {
    pub fn base_state(&self) -> Result<State, String> {
        let taxonomy = match &self.relation_types {
            Some(types) => Taxonomy::from_types(types.iter().cloned())?,
            None => Taxonomy::starter(),
        };
        Ok(State::new(taxonomy, self.anchor))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WebhookConfig {
    pub url: String,
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
}

impl Default for WebhookConfig {
    fn default() -> Self {
        WebhookConfig {
            url: String::new(),
            retries: 3,
            backoff_ms: 1000,
            timeout_ms: 5000,
        }
    }
}

impl WebhookConfig {
    pub fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.backoff_ms.saturating_mul(1 << attempt.min(16)))
    }
}
