use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// The grammar rule a candidate handle broke first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HandleRule {
    SegmentCount,
    EmptySegment,
    Whitespace,
    Prefix,
}

impl fmt::Display for HandleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HandleRule::SegmentCount => "segment-count",
            HandleRule::EmptySegment => "empty-segment",
            HandleRule::Whitespace => "whitespace",
            HandleRule::Prefix => "prefix",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed handle {raw:?}: {rule}")]
pub struct MalformedHandle {
    pub raw: String,
    pub rule: HandleRule,
}

/// A RePEc-style identifier, `RePEc:<archive>:<series>:<id>`.
///
/// The first two segments are case-insensitive and stored normalized
/// (`RePEc`, lowercase archive); series and id keep their case. Derived
/// equality and ordering therefore implement the handle comparison rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Handle {
    raw: String,
}

pub const HANDLE_PREFIX: &str = "RePEc";

pub fn validate_handle(raw: &str) -> Result<Handle, MalformedHandle> {
    let fail = |rule| MalformedHandle {
        raw: raw.to_string(),
        rule,
    };
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 4 {
        return Err(fail(HandleRule::SegmentCount));
    }
    if parts.iter().any(|p| p.is_empty()) {
        return Err(fail(HandleRule::EmptySegment));
    }
    if parts.iter().any(|p| p.chars().any(char::is_whitespace)) {
        return Err(fail(HandleRule::Whitespace));
    }
    if !parts[0].eq_ignore_ascii_case("repec") {
        return Err(fail(HandleRule::Prefix));
    }
    Ok(Handle {
        raw: format!(
            "{HANDLE_PREFIX}:{}:{}:{}",
            parts[1].to_lowercase(),
            parts[2],
            parts[3]
        ),
    })
}

impl Handle {
    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn parts(&self) -> Vec<&str> {
        self.raw.split(':').collect()
    }

    pub fn archive(&self) -> &str {
        self.raw.split(':').nth(1).unwrap_or_default()
    }

    pub fn series(&self) -> &str {
        self.raw.split(':').nth(2).unwrap_or_default()
    }

    pub fn id(&self) -> &str {
        self.raw.split(':').nth(3).unwrap_or_default()
    }
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FromStr for Handle {
    type Err = MalformedHandle;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        validate_handle(s)
    }
}

impl Serialize for Handle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for Handle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        validate_handle(&raw).map_err(serde::de::Error::custom)
    }
}
