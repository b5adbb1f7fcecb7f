use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Request};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use echo_core::catalog::CatalogError;
use echo_core::engine::EngineError;
use echo_core::pipeline::PipelineError;
use echo_core::scene::SceneError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::store::StoreError;

/// The body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "VALIDATION", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "CONFLICT", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }

    fn kind(self, kind: &str) -> Self {
        self.with_details(json!({ "kind": kind }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<SceneError> for ApiError {
    fn from(e: SceneError) -> Self {
        let kind = e.kind();
        match e {
            SceneError::NotFound(_) => ApiError::not_found(e.to_string()),
            SceneError::DuplicateName(_) => ApiError::conflict(e.to_string()),
            _ => ApiError::validation(e.to_string()),
        }
        .kind(kind)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let kind = e.kind();
        match e {
            PipelineError::InvalidConfig(_)
            | PipelineError::Scene(_)
            | PipelineError::MissingSlot(_) => ApiError::validation(e.to_string()),
            _ => ApiError::new(StatusCode::BAD_GATEWAY, "PROVIDER_ERROR", e.to_string()),
        }
        .kind(kind)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let kind = e.kind();
        match e {
            EngineError::WrongState {
                ref suggestion_id,
                state,
                operation,
            } => ApiError::new(StatusCode::CONFLICT, "WRONG_STATE", e.to_string()).with_details(
                json!({
                    "suggestion_id": suggestion_id,
                    "state": state.name(),
                    "operation": operation,
                }),
            ),
            EngineError::AtomicRollback {
                ref suggestion_id,
                failed_step,
                ref message,
            } => ApiError::new(StatusCode::CONFLICT, "ATOMIC_ROLLBACK", e.to_string())
                .with_details(json!({
                    "suggestion_id": suggestion_id,
                    "failed_step": failed_step,
                    "reason": message,
                })),
            EngineError::NoManualOp => {
                ApiError::new(StatusCode::CONFLICT, "WRONG_STATE", e.to_string()).kind(kind)
            }
            EngineError::UnknownSession(_) | EngineError::UnknownSuggestion(_) => {
                ApiError::not_found(e.to_string()).kind(kind)
            }
            EngineError::EmptyInstruction => ApiError::validation(e.to_string()).kind(kind),
            EngineError::Pipeline(p) => p.into(),
            EngineError::Scene(s) => s.into(),
            EngineError::Exec(x) => match x {
                echo_core::action::ExecError::Scene(s) => s.into(),
                other => ApiError::not_found(other.to_string()).kind(other.kind()),
            },
            EngineError::LogCorrupt { .. } => ApiError::internal(e.to_string()).kind(kind),
        }
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        let kind = e.kind();
        match e {
            CatalogError::UnknownAsset(_) | CatalogError::UnknownCategory(_) => {
                ApiError::not_found(e.to_string())
            }
            CatalogError::EmptyCatalog => ApiError::validation(e.to_string()),
            _ => ApiError::internal(e.to_string()),
        }
        .kind(kind)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        tracing::error!(error = %e, "persistence failure");
        ApiError::internal(e.to_string()).kind("io_error")
    }
}

/// JSON body extractor whose rejections are [`ApiError`]s.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(json_rejection(e)),
        }
    }
}

fn json_rejection(e: JsonRejection) -> ApiError {
    let status = match e {
        JsonRejection::MissingJsonContentType(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
        JsonRejection::JsonSyntaxError(_) => StatusCode::BAD_REQUEST,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    };
    ApiError::new(status, "VALIDATION", e.body_text())
}

/// Query-string extractor whose rejections are [`ApiError`]s.
pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        axum::extract::Query::<T>::from_request_parts(parts, state)
            .await
            .map(|q| Params(q.0))
            .map_err(|e: QueryRejection| ApiError::validation(e.body_text()))
    }
}
