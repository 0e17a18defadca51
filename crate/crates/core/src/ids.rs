use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub type Timestamp = DateTime<Utc>;

macro_rules! opaque_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub const PREFIX: &'static str = $prefix;

            pub(crate) fn from_seq(n: u64) -> Self {
                $name(format!("{}-{:06}", $prefix, n))
            }

            pub fn new(raw: impl Into<String>) -> Self {
                $name(raw.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

opaque_id!(
    /// Registered researcher.
    PersonId,
    "p"
);
opaque_id!(
    /// One version of a micro output. Revisions get fresh ids.
    OutputId,
    "mo"
);
opaque_id!(ThreadId, "t");
opaque_id!(NotificationId, "n");
opaque_id!(AggregationId, "ag");

/// Position in the usage event log; strictly increasing from 1.
pub type EventId = u64;
