use axum::extract::{FromRequest, FromRequestParts, Query, Request};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::Json;
use prepub_core::PersonId;
use serde::de::DeserializeOwned;

use crate::app::{Principal, Shared};
use crate::error::ApiError;

fn bearer(parts: &Parts) -> Option<&str> {
    let value = parts.headers.get(AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}

/// An authenticated caller. Missing or unknown tokens are rejected with 401.
pub struct Caller(pub Principal);

impl Caller {
    /// The person acting; the admin token cannot act as a person.
    pub fn person(&self) -> Result<&PersonId, ApiError> {
        self.0
            .person()
            .ok_or_else(|| ApiError::forbidden("this action needs a person token"))
    }

    pub fn require_admin(&self) -> Result<(), ApiError> {
        match self.0 {
            Principal::Admin => Ok(()),
            Principal::Person(_) => Err(ApiError::forbidden("admin token required")),
        }
    }
}

impl FromRequestParts<Shared> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, app: &Shared) -> Result<Self, ApiError> {
        let token = bearer(parts).ok_or_else(ApiError::unauthorized)?;
        app.authenticate(token).map(Caller).ok_or_else(ApiError::unauthorized)
    }
}

/// Optional authentication for public reads. A token that is present but
/// unknown is still rejected.
pub struct Viewer(pub Option<Principal>);

impl Viewer {
    pub fn person(&self) -> Option<&PersonId> {
        self.0.as_ref().and_then(Principal::person)
    }
}

impl FromRequestParts<Shared> for Viewer {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, app: &Shared) -> Result<Self, ApiError> {
        match bearer(parts) {
            None => Ok(Viewer(None)),
            Some(token) => app
                .authenticate(token)
                .map(|p| Viewer(Some(p)))
                .ok_or_else(ApiError::unauthorized),
        }
    }
}

/// JSON body whose rejections use the service error shape.
pub struct Body<T>(pub T);

impl<T: DeserializeOwned, S: Send + Sync> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let Json(v) = Json::<T>::from_request(req, state).await?;
        Ok(Body(v))
    }
}

/// Query string whose rejections use the service error shape.
pub struct Params<T>(pub T);

impl<T: DeserializeOwned, S: Send + Sync> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        let Query(v) = Query::<T>::from_request_parts(parts, state)
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        Ok(Params(v))
    }
}
