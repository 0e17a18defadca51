//! Core engine for pre-publication scholarly communication.
//!
//! Harvested research items (ReDIF metadata) are the anchor points for
//! small, citable outputs: comments, assertions, quotations, micro papers and
//! typed relationships. Using someone's work notifies its owners, replies
//! become threads, and per-person portraits are folded from the event log.
//!
//! All mutation goes through [`engine::Command`]; [`store::Store`] journals
//! commands so state can be rebuilt by replay.

pub mod aggregation;
pub mod anchoring;
pub mod comms;
pub mod engine;
pub mod error;
pub mod graph;
pub mod ids;
pub mod journal;
pub mod micro;
pub mod redif;
pub mod registry;
pub mod store;
pub mod testkit;

pub use engine::{Command, Engine, Outcome, State, Violation};
pub use error::{Error, ErrorClass, Result};
pub use ids::{AggregationId, EventId, NotificationId, OutputId, PersonId, ThreadId, Timestamp};
pub use store::{Store, StoreError};
