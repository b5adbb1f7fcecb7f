use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use echo_core::action::AssetBinding;
use echo_core::catalog::{annotate_asset, AssetRecord, Embedder};
use echo_core::diag::Diagnostic;
use echo_core::engine::{LogEntry, ManualOp, Session, SuggestionEntry, Workbench};
use echo_core::pipeline::{Condition, PipelineConfig};
use echo_core::scene::{render_top_view, FieldValue, ObjectParams, RoomBounds};
use echo_core::{fixtures, ColorRGB, Material, SceneGraph, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ApiError, AppState, Body, Params};
use crate::store::{scene_of_session, valid_scene_id};

type St = State<Arc<AppState>>;

pub fn routes() -> Router<Arc<AppState>> {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/scenes", post(create_scene).get(list_scenes))
        .route("/scenes/{id}", get(get_scene).delete(delete_scene))
        .route("/scenes/{id}/topview", get(topview))
        .route("/scenes/{id}/log", get(scene_log))
        .route("/scenes/{id}/objects", post(add_object))
        .route(
            "/scenes/{id}/objects/{name}",
            axum::routing::patch(mutate_object).delete(destroy_object),
        )
        .route("/scenes/{id}/manual-undo", post(manual_undo))
        .route("/scenes/{id}/instruct", post(instruct))
        .route("/sessions/{sid}", get(get_session))
        .route("/sessions/{sid}/suggestions/{sugid}/apply", post(apply))
        .route("/sessions/{sid}/suggestions/{sugid}/undo", post(undo))
        .route(
            "/sessions/{sid}/suggestions/{sugid}/regenerate",
            post(regenerate),
        )
        .route("/assets/search", get(search_assets))
        .route("/assets/label", post(label_asset))
}

pub async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

pub async fn method_not_allowed() -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        "METHOD_NOT_ALLOWED",
        "method not allowed on this route",
    )
}

async fn healthz(State(state): St) -> Json<Value> {
    Json(json!({ "status": "ok", "scenes": state.scene_ids().len() }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateScene {
    scene_id: Option<String>,
    bounds: Option<RoomBounds>,
    /// Start from the bundled living room instead of an empty room.
    #[serde(default)]
    seed: bool,
}

async fn create_scene(
    State(state): St,
    Body(req): Body<CreateScene>,
) -> Result<Response, ApiError> {
    if req.seed && req.bounds.is_some() {
        return Err(ApiError::validation(
            "`seed` and `bounds` are mutually exclusive",
        ));
    }
    let bounds = req
        .bounds
        .map(|b| RoomBounds::new(b.min, b.max))
        .transpose()?;
    let mut scenes = state.scenes.write().expect("scene map lock");
    let scene_id = match req.scene_id {
        Some(id) if !valid_scene_id(&id) => {
            return Err(ApiError::validation(format!(
                "scene_id {id:?} must be 1-64 characters of A-Z, a-z, 0-9, `_` or `-`"
            )))
        }
        Some(id) if scenes.contains_key(&id) => {
            return Err(ApiError::conflict(format!("scene {id:?} exists")))
        }
        Some(id) => id,
        None => (1..)
            .map(|n| format!("scene{n}"))
            .find(|id| !scenes.contains_key(id))
            .expect("unbounded"),
    };
    let scene = match (req.seed, bounds) {
        (true, _) => fixtures::seed_scene(&scene_id)?,
        (false, Some(b)) => SceneGraph::with_bounds(&scene_id, b),
        (false, None) => SceneGraph::new(&scene_id),
    };
    let wb = Workbench::new(scene).with_clock(crate::clock::SystemClock);
    state.store.create(&wb)?;
    let revision = wb.scene().revision();
    scenes.insert(scene_id.clone(), Arc::new(Mutex::new(Some(wb))));
    Ok((
        StatusCode::CREATED,
        Json(json!({ "scene_id": scene_id, "revision": revision })),
    )
        .into_response())
}

async fn list_scenes(State(state): St) -> Result<Json<Vec<Value>>, ApiError> {
    let mut out = Vec::new();
    for id in state.scene_ids() {
        // A scene deleted since the id listing is skipped.
        if let Ok(v) = state.read(&id, |wb| {
            json!({ "scene_id": id, "revision": wb.scene().revision(), "objects": wb.scene().len() })
        }) {
            out.push(v);
        }
    }
    Ok(Json(out))
}

/// `GET /scenes/{id}` body. The revision travels in `X-Scene-Revision` so
/// equal scenes give equal bodies.
#[derive(Serialize)]
struct SceneBody {
    scene_id: String,
    bounds: RoomBounds,
    objects: Vec<ObjectParams>,
}

pub const REVISION_HEADER: &str = "x-scene-revision";

async fn get_scene(State(state): St, Path(id): Path<String>) -> Result<Response, ApiError> {
    let (body, revision) = state.read(&id, |wb| {
        let scene = wb.scene();
        let objects = serde_json::from_str(&scene.serialize_parameters())
            .expect("parameter list round-trips");
        (
            SceneBody {
                scene_id: id.clone(),
                bounds: *scene.bounds(),
                objects,
            },
            scene.revision(),
        )
    })?;
    let mut response = Json(body).into_response();
    response
        .headers_mut()
        .insert(REVISION_HEADER, HeaderValue::from(revision));
    Ok(response)
}

async fn delete_scene(State(state): St, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let slot = state
        .scenes
        .write()
        .expect("scene map lock")
        .remove(&id)
        .ok_or_else(|| ApiError::not_found(format!("no scene {id:?}")))?;
    let wb = slot.lock().expect("scene lock").take();
    if let Some(wb) = wb {
        state.store.delete(&wb)?;
    }
    Ok(Json(json!({ "scene_id": id, "deleted": true })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopviewQuery {
    res: Option<u32>,
    format: Option<String>,
}

async fn topview(
    State(state): St,
    Path(id): Path<String>,
    Params(q): Params<TopviewQuery>,
) -> Result<Response, ApiError> {
    let png = match q.format.as_deref() {
        None | Some("png") => true,
        Some("ppm") => false,
        Some(other) => {
            return Err(ApiError::validation(format!(
                "format {other:?} is not png or ppm"
            )))
        }
    };
    let res = q.res.unwrap_or(PipelineConfig::default().image_resolution);
    let view = state.read(&id, |wb| render_top_view(wb.scene(), res))??;
    let ppm = view.to_ppm();
    let (bytes, mime) = if png {
        (
            crate::imaging::to_png(&ppm).map_err(|e| ApiError::internal(e.to_string()))?,
            "image/png",
        )
    } else {
        (ppm, "image/x-portable-pixmap")
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

async fn scene_log(
    State(state): St,
    Path(id): Path<String>,
) -> Result<Json<Vec<LogEntry>>, ApiError> {
    state.read(&id, |wb| Json(wb.log().entries().to_vec()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddObject {
    asset_id: Option<String>,
    category: Option<String>,
    query: Option<String>,
    position: Vector3,
    /// Defaults to the asset's name.
    name: Option<String>,
}

fn binding(record: &AssetRecord) -> AssetBinding {
    AssetBinding {
        asset_id: record.asset_id.clone(),
        category: record.category.clone(),
        description: record.description.clone(),
        default_scale: record.default_scale,
    }
}

async fn add_object(
    State(state): St,
    Path(id): Path<String>,
    Body(req): Body<AddObject>,
) -> Result<Json<Value>, ApiError> {
    let record = match (&req.asset_id, &req.category, &req.query) {
        (Some(asset), None, None) => state
            .catalog
            .find(asset)
            .ok_or_else(|| ApiError::not_found(format!("no asset {asset:?}")))?,
        (None, Some(category), Some(query)) => {
            let hits = state
                .catalog
                .search(&state.embedder, Some(category), query)?;
            let best = hits
                .first()
                .ok_or_else(|| ApiError::not_found(format!("category {category:?} is empty")))?;
            state
                .catalog
                .get(&best.asset_id)
                .expect("hits come from the catalog")
        }
        _ => {
            return Err(ApiError::validation(
                "give either `asset_id` or both `category` and `query`",
            ))
        }
    };
    let name = req
        .name
        .clone()
        .unwrap_or_else(|| record.name.replace(' ', "_"));
    let op = ManualOp::Add {
        name,
        position: req.position,
        asset: Some(binding(record)),
    };
    let (revision, name) = state.write(&id, None, |wb| {
        let revision = wb.manual_op(op)?;
        let name = wb
            .scene()
            .objects()
            .last()
            .map(|o| o.name.clone())
            .unwrap_or_default();
        Ok((revision, name))
    })?;
    Ok(Json(
        json!({ "revision": revision, "name": name, "asset_id": record.asset_id }),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MutateObject {
    position: Option<Vector3>,
    rotation: Option<Vector3>,
    scale: Option<Vector3>,
    color: Option<ColorRGB>,
    material: Option<Material>,
}

async fn mutate_object(
    State(state): St,
    Path((id, name)): Path<(String, String)>,
    Body(req): Body<MutateObject>,
) -> Result<Json<Value>, ApiError> {
    if req.material == Some(Material::Unset) {
        return Err(ApiError::validation("material `Unset` cannot be assigned"));
    }
    let values: Vec<FieldValue> = [
        req.position.map(FieldValue::Position),
        req.rotation.map(FieldValue::Rotation),
        req.scale.map(FieldValue::Scale),
        req.color.map(FieldValue::Color),
        req.material.map(FieldValue::Material),
    ]
    .into_iter()
    .flatten()
    .collect();
    if values.is_empty() {
        return Err(ApiError::validation("no fields to change"));
    }
    let revision = state.write(&id, None, |wb| {
        Ok(wb.manual_op(ManualOp::Mutate { name, values })?)
    })?;
    Ok(Json(json!({ "revision": revision })))
}

async fn destroy_object(
    State(state): St,
    Path((id, name)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let revision = state.write(
        &id,
        None,
        |wb| Ok(wb.manual_op(ManualOp::Destroy { name })?),
    )?;
    Ok(Json(json!({ "revision": revision })))
}

async fn manual_undo(State(state): St, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let (revision, warnings) = state.write(&id, None, |wb| Ok(wb.manual_undo()?))?;
    Ok(Json(json!({ "revision": revision, "warnings": warnings })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Instruct {
    instruction: String,
    config: Option<PipelineConfig>,
    /// Shorthand for the config of a named condition, e.g. `V+OP`.
    condition: Option<String>,
}

async fn instruct(
    State(state): St,
    Path(id): Path<String>,
    Body(req): Body<Instruct>,
) -> Result<Json<Value>, ApiError> {
    let mut config = match (req.config, req.condition) {
        (Some(_), Some(_)) => {
            return Err(ApiError::validation(
                "`config` and `condition` are mutually exclusive",
            ))
        }
        (Some(c), None) => c,
        (None, Some(label)) => PipelineConfig::for_condition(label.parse::<Condition>()?),
        (None, None) => PipelineConfig::default(),
    };
    config.provider_id = state.provider.id().to_string();
    config.validate()?;
    if req.instruction.trim().is_empty() {
        return Err(echo_core::engine::EngineError::EmptyInstruction.into());
    }
    let scene = state.read(&id, |wb| wb.scene().clone())?;

    let suggestions = {
        let state = Arc::clone(&state);
        let (config, instruction) = (config.clone(), req.instruction.clone());
        tokio::task::spawn_blocking(move || {
            Workbench::request_suggestions(&config, &scene, &instruction, state.provider.as_ref())
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
    };
    let failure = suggestions
        .as_ref()
        .err()
        .map(|e| ApiError::from(e.clone()));
    let (session_id, jobs) = state.write(&id, None, |wb| {
        Ok(wb.create_session(&req.instruction, config, suggestions)?)
    })?;
    let count = jobs.len();
    state.spawn_generation(id, jobs);
    match failure {
        Some(e) => {
            let kind = e.details.as_ref().and_then(|d| d.get("kind")).cloned();
            Err(e.with_details(json!({ "session_id": session_id, "kind": kind })))
        }
        None => Ok(Json(
            json!({ "session_id": session_id, "suggestions": count }),
        )),
    }
}

/// One suggestion as the polling client sees it.
#[derive(Serialize)]
struct SuggestionView<'a> {
    suggestion_id: &'a str,
    text: &'a str,
    state: &'static str,
    generation: u32,
    actions: Vec<&'a str>,
    diagnostics: &'a [Diagnostic],
}

impl<'a> From<&'a SuggestionEntry> for SuggestionView<'a> {
    fn from(e: &'a SuggestionEntry) -> Self {
        Self {
            suggestion_id: &e.suggestion_id,
            text: &e.text,
            state: e.state().name(),
            generation: e.generation,
            actions: e.steps.iter().map(|s| s.command_text.as_str()).collect(),
            diagnostics: &e.diagnostics,
        }
    }
}

fn session_view(s: &Session) -> Value {
    let suggestions: Vec<SuggestionView> = s.entries.iter().map(SuggestionView::from).collect();
    json!({
        "session_id": s.session_id,
        "scene_id": s.scene_id,
        "instruction": s.instruction,
        "condition": s.config.condition().map(|c| c.label()),
        "processing": s.is_processing(),
        "suggestions": suggestions,
        "diagnostics": s.diagnostics,
    })
}

fn scene_for(sid: &str) -> Result<&str, ApiError> {
    scene_of_session(sid).ok_or_else(|| ApiError::not_found(format!("no session {sid:?}")))
}

async fn get_session(State(state): St, Path(sid): Path<String>) -> Result<Json<Value>, ApiError> {
    let view = state.read(scene_for(&sid)?, |wb| wb.session(&sid).map(session_view))?;
    view.map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no session {sid:?}")))
}

async fn apply(
    State(state): St,
    Path((sid, sugid)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let revision = state.write(scene_for(&sid)?, None, |wb| Ok(wb.apply(&sid, &sugid)?))?;
    Ok(Json(json!({ "revision": revision })))
}

async fn undo(
    State(state): St,
    Path((sid, sugid)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let revision = state.write(scene_for(&sid)?, None, |wb| Ok(wb.undo(&sid, &sugid)?))?;
    Ok(Json(json!({ "revision": revision })))
}

async fn regenerate(
    State(state): St,
    Path((sid, sugid)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let scene_id = scene_for(&sid)?.to_string();
    let job = state.write(&scene_id, None, |wb| Ok(wb.begin_regenerate(&sid, &sugid)?))?;
    let (generation, revision) = (job.generation, job.scene.revision());
    state.spawn_generation(scene_id, vec![job]);
    let body = json!({ "accepted": true, "generation": generation, "revision": revision });
    Ok((StatusCode::ACCEPTED, Json(body)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchQuery {
    q: String,
    category: Option<String>,
    limit: Option<usize>,
}

async fn search_assets(
    State(state): St,
    Params(q): Params<SearchQuery>,
) -> Result<Json<Value>, ApiError> {
    let category = q.category.as_deref().filter(|c| !c.is_empty());
    let hits = state.catalog.search(&state.embedder, category, &q.q)?;
    let results: Vec<Value> = hits
        .iter()
        .take(q.limit.unwrap_or(10))
        .map(|h| {
            let r = state.catalog.get(&h.asset_id).expect("hits come from the catalog");
            json!({ "asset_id": r.asset_id, "name": r.name, "category": r.category, "score": h.score })
        })
        .collect();
    Ok(Json(json!({ "results": results })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRequest {
    object_name: String,
    /// Standard base64 of the thumbnail image.
    thumbnail_base64: String,
}

pub const ADMIN_HEADER: &str = "x-admin-token";

async fn label_asset(
    State(state): St,
    headers: HeaderMap,
    Body(req): Body<LabelRequest>,
) -> Result<Json<AssetRecord>, ApiError> {
    let expected = state.admin_token.as_deref().ok_or_else(|| {
        ApiError::new(
            StatusCode::FORBIDDEN,
            "FORBIDDEN",
            "labeling is disabled: no admin token configured",
        )
    })?;
    if headers.get(ADMIN_HEADER).and_then(|v| v.to_str().ok()) != Some(expected) {
        return Err(ApiError::new(
            StatusCode::UNAUTHORIZED,
            "UNAUTHORIZED",
            "missing or wrong X-Admin-Token",
        ));
    }
    let thumbnail = STANDARD
        .decode(req.thumbnail_base64.trim())
        .map_err(|e| ApiError::validation(format!("thumbnail_base64: {e}")))?;
    let labeled = {
        let state = Arc::clone(&state);
        tokio::task::spawn_blocking(move || {
            annotate_asset(&req.object_name, &thumbnail, state.provider.as_ref())
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
    };
    let mut record = labeled.map_err(|e| {
        let status = if matches!(e, echo_core::catalog::LabelError::EmptyThumbnail) {
            ApiError::validation(e.to_string())
        } else {
            ApiError::new(StatusCode::BAD_GATEWAY, "PROVIDER_ERROR", e.to_string())
        };
        status.with_details(json!({ "kind": e.kind() }))
    })?;
    record.embedding = Some(
        state
            .embedder
            .embed(&record.description)
            .map_err(|e| ApiError::internal(e.to_string()))?,
    );
    Ok(Json(record))
}
