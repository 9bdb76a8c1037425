//! HTTP API over a [`Store`].
//!
//! Every route except `/api/health` needs `Authorization: Bearer <token>`.
//! Errors come back as `{"error": CODE, "detail": text}`, with `issues` or
//! `parseError` attached when there is more to say.

use std::collections::BTreeSet;
use std::future::Future;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::game::{CourseConfig, LeaderboardKind};
use crate::store::{Store, StoreError, UserAccount};

#[derive(Debug)]
pub enum ApiError {
    Unauthorized,
    Forbidden,
    BadRequest(String),
    Store(StoreError),
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::Store(e)
    }
}

fn status_for(e: &StoreError) -> StatusCode {
    match e {
        StoreError::ParseFailed(_)
        | StoreError::InvalidExercise(_)
        | StoreError::InvalidConfig(_)
        | StoreError::InvalidId(_)
        | StoreError::IdMismatch => StatusCode::UNPROCESSABLE_ENTITY,
        StoreError::UnknownExercise(_) | StoreError::UnknownStudent(_) => StatusCode::NOT_FOUND,
        StoreError::AlreadyCompleted(_) | StoreError::ExerciseExists(_) => StatusCode::CONFLICT,
        StoreError::NotUnlocked(_) => StatusCode::FORBIDDEN,
        StoreError::Game(g) => match g.code() {
            "PROP_NOT_OWNED" => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::CONFLICT,
        },
        StoreError::CorruptLog { .. } | StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::Unauthorized => (
                StatusCode::UNAUTHORIZED,
                json!({"error": "UNAUTHORIZED", "detail": "missing or unknown bearer token"}),
            ),
            ApiError::Forbidden => (
                StatusCode::FORBIDDEN,
                json!({"error": "FORBIDDEN", "detail": "teacher account required"}),
            ),
            ApiError::BadRequest(detail) => (
                StatusCode::BAD_REQUEST,
                json!({"error": "INVALID_REQUEST", "detail": detail}),
            ),
            ApiError::Store(e) => {
                let status = status_for(&e);
                if status == StatusCode::INTERNAL_SERVER_ERROR {
                    tracing::error!(error = %e, "request failed");
                }
                let mut body = json!({"error": e.code(), "detail": e.to_string()});
                match &e {
                    StoreError::InvalidExercise(issues) => body["issues"] = json!(issues),
                    StoreError::ParseFailed(p) => body["parseError"] = json!(p),
                    _ => {}
                }
                (status, body)
            }
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn caller(store: &Store, headers: &HeaderMap) -> Result<UserAccount, ApiError> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .and_then(|token| store.authenticate(token.trim()))
        .ok_or(ApiError::Unauthorized)
}

fn teacher(store: &Store, headers: &HeaderMap) -> Result<UserAccount, ApiError> {
    let user = caller(store, headers)?;
    if user.is_teacher {
        Ok(user)
    } else {
        Err(ApiError::Forbidden)
    }
}

/// Store calls touch the disk, so they run off the async workers.
async fn blocking<T, F>(store: &Arc<Store>, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Store) -> Result<T, StoreError> + Send + 'static,
{
    let store = store.clone();
    match tokio::task::spawn_blocking(move || f(&store)).await {
        Ok(r) => r.map_err(ApiError::Store),
        Err(e) => Err(ApiError::Store(StoreError::Io(std::io::Error::other(e.to_string())))),
    }
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/api/health", get(|| async { Json(json!({"status": "ok"})) }))
        .route("/api/exercises", get(list_exercises).post(create_exercise))
        .route("/api/exercises/{id}", get(exercise_detail).put(replace_exercise))
        .route("/api/exercises/{id}/checks", post(check))
        .route("/api/exercises/{id}/solutions", get(solutions))
        .route("/api/leaderboards/xp", get(board_xp))
        .route("/api/leaderboards/completed", get(board_completed))
        .route("/api/leaderboards/exercise/{id}", get(board_exercise))
        .route("/api/profile", get(profile))
        .route("/api/profile/avatar", put(equip))
        .route("/api/course/config", get(get_config).put(put_config))
        .with_state(store)
}

/// Serves until `shutdown` resolves, then drains open connections.
pub async fn serve(
    store: Arc<Store>,
    listener: tokio::net::TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn check(
    State(store): State<Arc<Store>>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Value> {
    let user = caller(&store, &headers)?;
    let response = blocking(&store, move |s| s.handle_check(&user.user_id, &id, &body)).await?;
    Ok(Json(json!(response)))
}

async fn list_exercises(State(store): State<Arc<Store>>, headers: HeaderMap) -> ApiResult<Value> {
    let user = caller(&store, &headers)?;
    Ok(Json(json!(store.list_exercises(&user.user_id)?)))
}

async fn exercise_detail(
    State(store): State<Arc<Store>>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Value> {
    let user = caller(&store, &headers)?;
    Ok(Json(json!(store.exercise_detail(&user.user_id, &id)?)))
}

async fn solutions(State(store): State<Arc<Store>>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Value> {
    let user = caller(&store, &headers)?;
    Ok(Json(json!(store.get_solution_view(&user.user_id, &id)?)))
}

async fn create_exercise(State(store): State<Arc<Store>>, headers: HeaderMap, body: String) -> Response {
    let result = async {
        teacher(&store, &headers)?;
        blocking(&store, move |s| s.put_exercise(&body, None, false)).await
    }
    .await;
    match result {
        Ok(spec) => (StatusCode::CREATED, Json(json!(spec))).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn replace_exercise(
    State(store): State<Arc<Store>>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Value> {
    teacher(&store, &headers)?;
    let spec = blocking(&store, move |s| s.put_exercise(&body, Some(&id), true)).await?;
    Ok(Json(json!(spec)))
}

async fn board(store: &Store, headers: &HeaderMap, kind: LeaderboardKind) -> ApiResult<Value> {
    caller(store, headers)?;
    Ok(Json(json!({ "kind": kind, "entries": store.leaderboard(&kind)? })))
}

async fn board_xp(State(store): State<Arc<Store>>, headers: HeaderMap) -> ApiResult<Value> {
    board(&store, &headers, LeaderboardKind::XpLevel).await
}

async fn board_completed(State(store): State<Arc<Store>>, headers: HeaderMap) -> ApiResult<Value> {
    board(&store, &headers, LeaderboardKind::CompletedCount).await
}

async fn board_exercise(
    State(store): State<Arc<Store>>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Value> {
    board(&store, &headers, LeaderboardKind::ExerciseScore(id)).await
}

async fn profile(State(store): State<Arc<Store>>, headers: HeaderMap) -> ApiResult<Value> {
    let user = caller(&store, &headers)?;
    Ok(Json(json!(store.profile(&user.user_id)?)))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct EquipRequest {
    equipped_props: BTreeSet<String>,
}

async fn equip(State(store): State<Arc<Store>>, headers: HeaderMap, body: String) -> ApiResult<Value> {
    let user = caller(&store, &headers)?;
    let req: EquipRequest = serde_json::from_str(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let state = blocking(&store, move |s| s.equip(&user.user_id, req.equipped_props)).await?;
    Ok(Json(json!(state)))
}

async fn get_config(State(store): State<Arc<Store>>, headers: HeaderMap) -> ApiResult<CourseConfig> {
    teacher(&store, &headers)?;
    Ok(Json(store.config()))
}

async fn put_config(State(store): State<Arc<Store>>, headers: HeaderMap, body: String) -> ApiResult<CourseConfig> {
    teacher(&store, &headers)?;
    let config: CourseConfig =
        serde_json::from_str(&body).map_err(|e| ApiError::Store(StoreError::InvalidConfig(e.to_string())))?;
    let saved = config.clone();
    blocking(&store, move |s| s.put_config(config)).await?;
    Ok(Json(saved))
}
