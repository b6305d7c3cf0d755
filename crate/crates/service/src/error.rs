use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("session {0} has no remaining tasks")]
    SessionComplete(String),
    #[error("invalid choice: {0}")]
    InvalidChoice(String),
    #[error("task {0} is not part of this session")]
    UnknownTask(String),
    #[error("stale session state: {0}")]
    StaleSession(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Core(#[from] phonaudit_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::SessionComplete(_) => "session_complete",
            Self::InvalidChoice(_) => "invalid_choice",
            Self::UnknownTask(_) => "unknown_task",
            Self::StaleSession(_) => "stale_session",
            Self::NotFound(_) => "not_found",
            Self::Conflict(_) => "conflict",
            Self::BadRequest(_) => "bad_request",
            Self::Core(_) | Self::Io(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            Self::SessionComplete(_) | Self::StaleSession(_) | Self::Conflict(_) => StatusCode::CONFLICT,
            Self::InvalidChoice(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::UnknownTask(_) | Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::Core(_) | Self::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            log::error!("{self}");
        }
        let body = ErrorBody { error: self.code(), message: self.to_string() };
        (self.status(), Json(body)).into_response()
    }
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;
