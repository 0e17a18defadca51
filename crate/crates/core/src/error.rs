use thiserror::Error;

use crate::anchoring::InvalidSpan;
use crate::redif::MalformedHandle;

/// Domain errors raised by engine operations.
///
/// [`Error::code`] gives the stable machine-readable name used on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    MalformedHandle(#[from] MalformedHandle),
    #[error(transparent)]
    InvalidSpan(#[from] InvalidSpan),
    #[error("name must not be empty")]
    EmptyName,
    #[error("unknown person {0}")]
    UnknownPerson(String),
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("{person} already claimed {handle}")]
    DuplicateClaim { person: String, handle: String },
    #[error("invalid item: {0}")]
    InvalidItem(String),
    #[error("unknown creator {0}")]
    UnknownCreator(String),
    #[error("field `{0}` must not be empty")]
    EmptyField(&'static str),
    #[error("field `{field}` too long (max {max} chars)")]
    FieldTooLong { field: &'static str, max: usize },
    #[error("malformed anchor: {0}")]
    MalformedAnchor(String),
    #[error("reference {0} does not resolve")]
    DanglingRef(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("relationship endpoints must differ")]
    SelfLoop,
    #[error("unknown output {0}")]
    UnknownOutput(String),
    #[error("only the creator may change {0}")]
    NotOwner(String),
    #[error("{0} has already been revised; revise the latest version")]
    StaleVersion(String),
    #[error("revision must keep kind {expected}, got {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("public outputs cannot become private")]
    VisibilityDowngrade,
    #[error("unknown notification {0}")]
    UnknownNotification(String),
    #[error("person is not a party to this notification")]
    NotParty,
    #[error("a thread already exists for this notification")]
    DuplicateThread,
    #[error("unknown thread {0}")]
    UnknownThread(String),
    #[error("person is not a participant of this thread")]
    NotParticipant,
    #[error("offers are only accepted on public threads")]
    PrivateThread,
    #[error("original participants cannot submit competing offers")]
    NotEligible,
    #[error("aggregation needs at least one member")]
    EmptyAggregation,
    #[error("unknown aggregation {0}")]
    UnknownAggregation(String),
    #[error("invalid notification state transition")]
    InvalidTransition,
    #[error("token already issued")]
    DuplicateToken,
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedHandle(_) => "MalformedHandle",
            Error::InvalidSpan(_) => "InvalidSpan",
            Error::EmptyName => "EmptyName",
            Error::UnknownPerson(_) => "UnknownPerson",
            Error::UnknownItem(_) => "UnknownItem",
            Error::DuplicateClaim { .. } => "DuplicateClaim",
            Error::InvalidItem(_) => "InvalidItem",
            Error::UnknownCreator(_) => "UnknownCreator",
            Error::EmptyField(_) => "EmptyField",
            Error::FieldTooLong { .. } => "FieldTooLong",
            Error::MalformedAnchor(_) => "MalformedAnchor",
            Error::DanglingRef(_) => "DanglingRef",
            Error::UnknownRelation(_) => "UnknownRelation",
            Error::SelfLoop => "SelfLoop",
            Error::UnknownOutput(_) => "UnknownOutput",
            Error::NotOwner(_) => "NotOwner",
            Error::StaleVersion(_) => "StaleVersion",
            Error::KindMismatch { .. } => "KindMismatch",
            Error::VisibilityDowngrade => "VisibilityDowngrade",
            Error::UnknownNotification(_) => "UnknownNotification",
            Error::NotParty => "NotParty",
            Error::DuplicateThread => "DuplicateThread",
            Error::UnknownThread(_) => "UnknownThread",
            Error::NotParticipant => "NotParticipant",
            Error::PrivateThread => "PrivateThread",
            Error::NotEligible => "NotEligible",
            Error::EmptyAggregation => "EmptyAggregation",
            Error::UnknownAggregation(_) => "UnknownAggregation",
            Error::InvalidTransition => "InvalidTransition",
            Error::DuplicateToken => "DuplicateToken",
        }
    }

    /// Coarse class used by transports to pick a status code.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            UnknownPerson(_) | UnknownItem(_) | UnknownOutput(_) | UnknownNotification(_)
            | UnknownThread(_) | UnknownAggregation(_) => ErrorClass::NotFound,
            DuplicateClaim { .. } | DuplicateThread | StaleVersion(_) | DuplicateToken
            | VisibilityDowngrade | InvalidTransition => ErrorClass::Conflict,
            NotOwner(_) | NotParty | NotParticipant | NotEligible => ErrorClass::Forbidden,
            _ => ErrorClass::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    NotFound,
    Conflict,
    Forbidden,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
