use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: message.into(),
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message: format!("no {what} `{id}`"),
        }
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::CONFLICT,
            code: "conflict",
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: message.into(),
        }
    }
}

impl From<hazgrid::Error> for ApiError {
    fn from(e: hazgrid::Error) -> Self {
        use hazgrid::Error::*;
        let (status, code) = match &e {
            Parse { .. } | Json(_) => (StatusCode::BAD_REQUEST, "parse_error"),
            Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "io_error"),
            Reference(_) => (StatusCode::UNPROCESSABLE_ENTITY, "reference_error"),
            Spec(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_scenario"),
            Infeasible(_) | Instance(_) | Budget { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_instance")
            }
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_input"),
        };
        ApiError {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": self.code, "message": self.message })),
        )
            .into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
