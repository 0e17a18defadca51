use axum::extract::{Path, State as AxState};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use prepub_core::aggregation::ExportFormat;
use prepub_core::comms::{DeliveryChannel, NotificationState};
use prepub_core::micro::{Draft, OutputRef, Visibility};
use prepub_core::redif::{collect_archive, validate_handle, ArchiveDescriptor, Handle};
use prepub_core::registry::ScholarlyItem;
use prepub_core::{AggregationId, Command, Error, NotificationId, OutputId, PersonId, ThreadId};
use rand::distr::{Alphanumeric, SampleString};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::app::{Principal, Shared};
use crate::auth::{Body, Caller, Params, Viewer};
use crate::error::ApiError;
use crate::fetch::AnyFetcher;

type ApiResult<T = Json<Value>> = Result<T, ApiError>;

pub fn router(app: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/items", get(list_items).post(upsert_items))
        .route("/items/{handle}", get(get_item))
        .route("/items/{handle}/outputs", get(item_outputs))
        .route("/outputs", post(create_output))
        .route("/outputs/{id}", get(get_output))
        .route("/outputs/{id}/revise", post(revise_output))
        .route("/outputs/{id}/publish", post(publish_output))
        .route("/persons", get(list_persons).post(register_person))
        .route("/persons/{id}/portrait", get(portrait))
        .route("/persons/{id}/neighbors", get(neighbors))
        .route("/persons/{id}/claims", post(claim))
        .route("/tokens", post(issue_token))
        .route("/notifications", get(inbox))
        .route("/notifications/{id}/read", post(mark_read))
        .route("/threads", post(open_thread))
        .route("/threads/{id}", get(get_thread))
        .route("/threads/{id}/messages", post(post_message))
        .route("/threads/{id}/offers", post(submit_offer))
        .route("/aggregations", post(compile_aggregation))
        .route("/aggregations/{id}", get(get_aggregation))
        .route("/aggregations/{id}/export", get(export_aggregation))
        .route("/harvest", post(harvest))
        .route("/integrity", get(integrity))
        .with_state(app)
}

fn to_json(v: impl serde::Serialize) -> Json<Value> {
    Json(serde_json::to_value(v).expect("response serializes"))
}

fn created(v: impl serde::Serialize) -> Response {
    (StatusCode::CREATED, to_json(v)).into_response()
}

fn handle(raw: &str) -> Result<Handle, ApiError> {
    validate_handle(raw).map_err(|e| Error::from(e).into())
}

async fn health(AxState(app): AxState<Shared>) -> Json<Value> {
    let (items, persons, records) = app.read(|s| {
        (
            s.state().registry().item_count(),
            s.state().registry().persons().count(),
            s.records().len(),
        )
    });
    Json(json!({ "status": "ok", "items": items, "persons": persons, "journal_records": records }))
}

#[derive(Deserialize)]
struct Page {
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

async fn list_items(AxState(app): AxState<Shared>, Params(p): Params<Page>) -> Json<Value> {
    app.state(|s| {
        let total = s.registry().item_count();
        let items: Vec<&ScholarlyItem> = s
            .registry()
            .items()
            .skip(p.offset)
            .take(p.limit.unwrap_or(100))
            .collect();
        Json(json!({ "total": total, "items": items }))
    })
}

#[derive(Deserialize)]
struct ItemsReq {
    items: Vec<ScholarlyItem>,
}

async fn upsert_items(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Body(req): Body<ItemsReq>,
) -> ApiResult<Response> {
    caller.require_admin()?;
    let outcome = app.commit(Command::UpsertItems { items: req.items })?;
    Ok(to_json(outcome).into_response())
}

async fn get_item(AxState(app): AxState<Shared>, Path(raw): Path<String>) -> ApiResult {
    let h = handle(&raw)?;
    app.state(|s| {
        let item = s
            .registry()
            .get_item(&h)
            .ok_or_else(|| ApiError::from(Error::UnknownItem(h.to_string())))?;
        Ok(Json(json!({ "item": item, "authors": s.registry().resolve_authors(&h) })))
    })
}

async fn item_outputs(AxState(app): AxState<Shared>, viewer: Viewer, Path(raw): Path<String>) -> ApiResult {
    let h = handle(&raw)?;
    Ok(app.read(|s| to_json(s.engine().list_outputs_for(&h, viewer.person()))))
}

#[derive(Deserialize)]
struct CreateReq {
    #[serde(flatten)]
    draft: Draft,
    visibility: Option<Visibility>,
}

async fn create_output(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Body(req): Body<CreateReq>,
) -> ApiResult<Response> {
    let outcome = app.commit(Command::CreateOutput {
        creator: caller.person()?.clone(),
        draft: req.draft,
        visibility: req.visibility.unwrap_or(Visibility::Public),
    })?;
    Ok(created(outcome))
}

async fn get_output(AxState(app): AxState<Shared>, viewer: Viewer, Path(id): Path<String>) -> ApiResult {
    let id = OutputId::new(id);
    app.state(|s| {
        let out = s
            .outputs()
            .get(&id)
            .filter(|o| o.visible_to(viewer.person()))
            .ok_or_else(|| ApiError::from(Error::UnknownOutput(id.to_string())))?;
        let history: Vec<&OutputId> = s.outputs().history(&id).into_iter().map(|o| o.id()).collect();
        Ok(Json(json!({
            "output": out,
            "superseded_by": s.outputs().superseded_by(&id),
            "history": history,
        })))
    })
}

async fn revise_output(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Path(id): Path<String>,
    Body(draft): Body<Draft>,
) -> ApiResult<Response> {
    let outcome = app.commit(Command::ReviseOutput {
        editor: caller.person()?.clone(),
        output_id: OutputId::new(id),
        draft,
    })?;
    Ok(created(outcome))
}

async fn publish_output(AxState(app): AxState<Shared>, caller: Caller, Path(id): Path<String>) -> ApiResult {
    let outcome = app.commit(Command::SetVisibility {
        actor: caller.person()?.clone(),
        output_id: OutputId::new(id),
        visibility: Visibility::Public,
    })?;
    Ok(to_json(outcome))
}

async fn list_persons(AxState(app): AxState<Shared>) -> Json<Value> {
    app.state(|s| {
        let persons: Vec<Value> = s
            .registry()
            .persons()
            .map(|p| json!({ "person_id": p.person_id, "display_name": p.display_name, "affiliation": p.affiliation, "claimed": p.claimed }))
            .collect();
        Json(Value::Array(persons))
    })
}

#[derive(Deserialize)]
struct PersonReq {
    name: String,
    contact: Option<String>,
    affiliation: Option<String>,
}

async fn register_person(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Body(req): Body<PersonReq>,
) -> ApiResult<Response> {
    caller.require_admin()?;
    let outcome = app.commit(Command::RegisterPerson {
        name: req.name,
        contact: req.contact,
        affiliation: req.affiliation,
    })?;
    Ok(created(outcome))
}

async fn portrait(AxState(app): AxState<Shared>, viewer: Viewer, Path(id): Path<String>) -> ApiResult {
    let id = PersonId::new(id);
    let p = app.read(|s| s.engine().compute_portrait(&id))?;
    let p = if viewer.person() == Some(&id) { p } else { p.public_view() };
    Ok(to_json(p))
}

#[derive(Deserialize)]
struct NeighborsQ {
    max: Option<usize>,
}

async fn neighbors(AxState(app): AxState<Shared>, Path(id): Path<String>, Params(q): Params<NeighborsQ>) -> ApiResult {
    let id = PersonId::new(id);
    let report = app.read(|s| s.engine().neighbors_of(&id, q.max.unwrap_or(10)))?;
    Ok(to_json(report))
}

#[derive(Deserialize)]
struct ClaimReq {
    handle: String,
}

async fn claim(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Path(id): Path<String>,
    Body(req): Body<ClaimReq>,
) -> ApiResult<Response> {
    let id = PersonId::new(id);
    if caller.0 != Principal::Person(id.clone()) {
        return Err(ApiError::forbidden("persons may only claim for themselves"));
    }
    let outcome = app.commit(Command::ClaimWork {
        person: id,
        handle: handle(&req.handle)?,
    })?;
    Ok(created(outcome))
}

#[derive(Deserialize)]
struct TokenReq {
    person: PersonId,
    token: Option<String>,
}

async fn issue_token(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Body(req): Body<TokenReq>,
) -> ApiResult<Response> {
    caller.require_admin()?;
    let token = req
        .token
        .unwrap_or_else(|| Alphanumeric.sample_string(&mut rand::rng(), 32));
    let outcome = app.commit(Command::IssueToken {
        person: req.person,
        token,
    })?;
    Ok(created(outcome))
}

#[derive(Deserialize)]
struct InboxQ {
    state: Option<NotificationState>,
}

async fn inbox(AxState(app): AxState<Shared>, caller: Caller, Params(q): Params<InboxQ>) -> ApiResult {
    let me = caller.person()?.clone();
    app.read(|s| {
        let list = s.engine().list_inbox(&me, q.state)?;
        let comms = s.state().comms();
        let entries: Vec<Value> = list
            .iter()
            .map(|n| json!({ "notification": n, "event": comms.event(n.event_id) }))
            .collect();
        Ok(Json(Value::Array(entries)))
    })
}

async fn mark_read(AxState(app): AxState<Shared>, caller: Caller, Path(id): Path<String>) -> ApiResult {
    let outcome = app.commit(Command::SetNotificationState {
        recipient: caller.person()?.clone(),
        notification_id: NotificationId::new(id),
        state: NotificationState::Read,
        via: DeliveryChannel::Inbox,
    })?;
    Ok(to_json(outcome))
}

#[derive(Deserialize)]
struct ThreadReq {
    notification_id: NotificationId,
    first_message: String,
    visibility: Option<Visibility>,
}

async fn open_thread(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Body(req): Body<ThreadReq>,
) -> ApiResult<Response> {
    let outcome = app.commit(Command::OpenThread {
        notification_id: req.notification_id,
        opener: caller.person()?.clone(),
        first_message: req.first_message,
        visibility: req.visibility.unwrap_or(Visibility::Public),
    })?;
    Ok(created(outcome))
}

async fn get_thread(AxState(app): AxState<Shared>, viewer: Viewer, Path(id): Path<String>) -> ApiResult {
    let id = ThreadId::new(id);
    app.state(|s| {
        let t = s
            .comms()
            .thread(&id)
            .filter(|t| t.visibility == Visibility::Public || viewer.person().is_some_and(|p| t.is_participant(p)))
            .ok_or_else(|| ApiError::from(Error::UnknownThread(id.to_string())))?;
        let offers: Vec<_> = s.comms().offers().iter().filter(|o| o.thread_id == id).collect();
        Ok(Json(json!({ "thread": t, "offers": offers })))
    })
}

#[derive(Deserialize)]
struct MessageReq {
    body: String,
    attached_output: Option<OutputRef>,
}

async fn post_message(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Path(id): Path<String>,
    Body(req): Body<MessageReq>,
) -> ApiResult<Response> {
    let outcome = app.commit(Command::PostMessage {
        thread_id: ThreadId::new(id),
        author: caller.person()?.clone(),
        body: req.body,
        attached_output: req.attached_output,
    })?;
    Ok(created(outcome))
}

#[derive(Deserialize)]
struct OfferReq {
    offered: OutputRef,
    #[serde(default)]
    note: String,
}

async fn submit_offer(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Path(id): Path<String>,
    Body(req): Body<OfferReq>,
) -> ApiResult<Response> {
    let outcome = app.commit(Command::SubmitOffer {
        thread_id: ThreadId::new(id),
        challenger: caller.person()?.clone(),
        offered: req.offered,
        note: req.note,
    })?;
    Ok(created(outcome))
}

#[derive(Deserialize)]
struct AggregationReq {
    title: String,
    members: Vec<OutputRef>,
}

async fn compile_aggregation(
    AxState(app): AxState<Shared>,
    caller: Caller,
    Body(req): Body<AggregationReq>,
) -> ApiResult<Response> {
    let outcome = app.commit(Command::CompileAggregation {
        editor: caller.person()?.clone(),
        title: req.title,
        members: req.members,
    })?;
    Ok(created(outcome))
}

async fn get_aggregation(AxState(app): AxState<Shared>, Path(id): Path<String>) -> ApiResult {
    let id = AggregationId::new(id);
    app.state(|s| {
        s.aggregation(&id)
            .map(to_json)
            .ok_or_else(|| Error::UnknownAggregation(id.to_string()).into())
    })
}

#[derive(Deserialize)]
struct ExportQ {
    format: Option<String>,
}

async fn export_aggregation(
    AxState(app): AxState<Shared>,
    Path(id): Path<String>,
    Params(q): Params<ExportQ>,
) -> ApiResult<Response> {
    let format: ExportFormat = q
        .format
        .as_deref()
        .unwrap_or("json")
        .parse()
        .map_err(ApiError::bad_request)?;
    let body = app.read(|s| s.engine().export_aggregation(&AggregationId::new(id), format))?;
    let content_type = match format {
        ExportFormat::Json => "application/json",
        ExportFormat::Text => "text/plain; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}

#[derive(Deserialize)]
struct HarvestReq {
    archive_code: String,
    base_url: String,
}

async fn harvest(AxState(app): AxState<Shared>, caller: Caller, Body(req): Body<HarvestReq>) -> ApiResult {
    caller.require_admin()?;
    let desc = ArchiveDescriptor::new(req.archive_code, req.base_url)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    // Fetching can be slow; it runs off the lock and off the async workers.
    let collected = tokio::task::spawn_blocking(move || collect_archive(&desc, &AnyFetcher::default()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?;
    let (items, mut report) =
        collected.map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, "FetchFailed", e.to_string()))?;
    app.commit_harvest(items, &mut report)?;
    Ok(to_json(report))
}

async fn integrity(AxState(app): AxState<Shared>) -> Json<Value> {
    app.read(|s| to_json(s.engine().integrity_check()))
}
