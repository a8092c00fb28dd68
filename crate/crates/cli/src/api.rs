//! HTTP service over one store handle.
//!
//! Responses are JSON except blob bytes, changeset bytes and the XML
//! export. Errors carry `{"error": code, "message": text}` where `code` is
//! the library error name.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pndb_core::conversion::internalize;
use pndb_core::evolution::materialize_view;
use pndb_core::exchange::{self, ImportReport};
use pndb_core::{sync, Error, ModelError, ObjectRef, ScopePath, Store, StoreMode, Timestamp, HEAD};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::json::*;

pub const CHECKSUM_HEADER: &str = "x-checksum-sha256";
pub const TO_SEQ_HEADER: &str = "x-pndb-to-seq";

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: code.to_string(),
                message: message.into(),
            },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }
}

/// HTTP status for a library error.
pub fn status_of(err: &Error) -> StatusCode {
    use Error::*;
    match err {
        UnknownClass(_) | NotFound(_) | UnknownBlob(_) | UnknownFolder(_) | UnknownTag(_) | NoValidEntry(_) => {
            StatusCode::NOT_FOUND
        }
        StoreLocked
        | DuplicateFolder(_)
        | NonMonotonicSince { .. }
        | DuplicateTag(_)
        | EmptyHead(_)
        | FutureSequence { .. }
        | WrongMaster
        | NonContiguous { .. }
        | LocalMutationConflict
        | DuplicateConverter(_)
        | CacheContextMismatch => StatusCode::CONFLICT,
        ReadOnlyStore => StatusCode::FORBIDDEN,
        ValidationFailed(_) | IncompatibleEvolution { .. } | Model(ModelError::NoDefaultForBlob(_)) => {
            StatusCode::UNPROCESSABLE_ENTITY
        }
        Io(_) | Corrupt(_) | BlobChecksumMismatch(_) => StatusCode::INTERNAL_SERVER_ERROR,
        Model(_)
        | MalformedPath(_)
        | ReservedTagName(_)
        | MalformedAddress(_)
        | XmlParseError(_)
        | MalformedRow { .. }
        | MalformedChangeset(_)
        | ChecksumMismatch
        | NoConverter(_)
        | ConversionFailed(_) => StatusCode::BAD_REQUEST,
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        ApiError::new(status_of(&err), err.code(), err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = State<Arc<Store>>;

async fn blocking<T, F>(store: &Arc<Store>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Store) -> pndb_core::Result<T> + Send + 'static,
{
    let store = Arc::clone(store);
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
        .map_err(ApiError::from)
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn json_body<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

fn text_body(body: Bytes) -> ApiResult<String> {
    String::from_utf8(body.to_vec()).map_err(|_| ApiError::bad_request("body is not UTF-8"))
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/api/store", get(store_info))
        .route("/api/scopes", get(scopes))
        .route("/api/classes", get(classes))
        .route("/api/classes/{class}/dictionary", get(dictionary))
        .route("/api/objects/{class}/{instance}", get(object))
        .route("/api/objects/{class}/{instance}/versions", get(versions))
        .route("/api/address", get(address))
        .route("/api/folders", get(folders))
        .route("/api/iov/{*path}", get(iov_get).post(iov_post).put(iov_put))
        .route("/api/export/xml", get(export_xml))
        .route("/api/import/table", post(import_table))
        .route("/api/import/xml", post(import_xml))
        .route("/api/blobs/{id}", get(blob))
        .route("/api/sync/changes", get(changes))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NoRoute", "no such endpoint") })
        .with_state(store)
}

fn hex_id(id: &[u8]) -> String {
    id.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn store_view(store: &Store) -> StoreView {
    StoreView {
        store_id: hex_id(&store.store_id()),
        mode: match store.mode() {
            StoreMode::ReadWrite => "read-write",
            StoreMode::ReadOnly => "read-only",
            StoreMode::Replica => "replica",
        }
        .to_string(),
        seq: store.current_seq(),
        master_id: store.master_id().map(|id| hex_id(&id)),
    }
}

async fn store_info(State(store): Shared) -> Json<StoreView> {
    Json(store_view(&store))
}

#[derive(Deserialize)]
struct ScopeQuery {
    path: Option<String>,
}

async fn scopes(State(store): Shared, q: Result<Query<ScopeQuery>, QueryRejection>) -> ApiResult<Json<ScopeView>> {
    let q = query(q)?;
    let path = ScopePath::parse(q.path.as_deref().unwrap_or("/")).map_err(Error::from)?;
    let listing = store.list_scope(&path);
    Ok(Json(ScopeView::new(&path, &listing)))
}

async fn classes(State(store): Shared) -> Json<Vec<ClassView>> {
    Json(
        store
            .classes()
            .into_iter()
            .map(|(class, latest_version)| ClassView { class, latest_version })
            .collect(),
    )
}

#[derive(Deserialize)]
struct DictQuery {
    d: Option<u32>,
}

async fn dictionary(
    State(store): Shared,
    Path(class): Path<String>,
    q: Result<Query<DictQuery>, QueryRejection>,
) -> ApiResult<Json<DictionaryView>> {
    let q = query(q)?;
    let dict = store.get_dictionary(&class, q.d)?;
    Ok(Json(DictionaryView::from(&dict)))
}

#[derive(Deserialize)]
struct ObjectQuery {
    v: Option<u32>,
    d: Option<u32>,
}

/// Library-side answer of `GET /api/objects/{class}/{instance}`.
pub fn object_view(
    store: &Store,
    class: &str,
    instance: &str,
    object_version: Option<u32>,
    dict_version: Option<u32>,
) -> pndb_core::Result<ObjectView> {
    let stored = store.get_object(class, instance, object_version)?;
    match dict_version {
        Some(d) if d != stored.dict_version => {
            let reference = ObjectRef {
                class_name: stored.class_name.clone(),
                instance_name: stored.instance_name.clone(),
                object_version: stored.object_version,
                dict_version: stored.dict_version,
            };
            let view = materialize_view(store, &reference, d)?;
            let dict = store.get_dictionary(class, Some(d))?;
            Ok(ObjectView::new(&view.instance, &dict).with_notices(&view.notices))
        }
        _ => {
            let dict = store.get_dictionary(class, Some(stored.dict_version))?;
            Ok(ObjectView::new(&stored, &dict))
        }
    }
}

async fn object(
    State(store): Shared,
    Path((class, instance)): Path<(String, String)>,
    q: Result<Query<ObjectQuery>, QueryRejection>,
) -> ApiResult<Json<ObjectView>> {
    let q = query(q)?;
    blocking(&store, move |s| object_view(s, &class, &instance, q.v, q.d))
        .await
        .map(Json)
}

async fn versions(
    State(store): Shared,
    Path((class, instance)): Path<(String, String)>,
) -> ApiResult<Json<Vec<RevisionView>>> {
    let revs = store.object_versions(&class, &instance)?;
    Ok(Json(revs.iter().map(RevisionView::from).collect()))
}

#[derive(Deserialize)]
struct AddressQuery {
    addr: String,
}

async fn address(q: Result<Query<AddressQuery>, QueryRejection>) -> ApiResult<Json<AddressView>> {
    let q = query(q)?;
    let addr = internalize(&q.addr)?;
    Ok(Json(AddressView::from(&addr)))
}

async fn folders(State(store): Shared) -> Json<Vec<FolderView>> {
    Json(store.folders().iter().map(FolderView::from).collect())
}

#[derive(Deserialize)]
struct IovQuery {
    tag: Option<String>,
    t: Option<u64>,
}

// `/entries` and `/tags` suffixes take precedence over folder names.
async fn iov_get(
    State(store): Shared,
    Path(path): Path<String>,
    q: Result<Query<IovQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let q = query(q)?;
    let tag = q.tag.unwrap_or_else(|| HEAD.to_string());
    if let Some(folder) = path.strip_suffix("/entries") {
        let entries = store.iov_list(folder, &tag)?;
        return Ok(Json(entries.iter().map(IovEntryView::from).collect::<Vec<_>>()).into_response());
    }
    if let Some(folder) = path.strip_suffix("/tags") {
        return Ok(Json(store.tags(folder)?).into_response());
    }
    let t = q.t.ok_or_else(|| ApiError::bad_request("missing query parameter `t`"))?;
    let entry = store.iov_resolve_entry(&path, &tag, Timestamp(t))?;
    Ok(Json(IovEntryView::from(&entry)).into_response())
}

/// Tag bodies are `{"tag": name}` or the bare name as text.
fn tag_name(body: &[u8]) -> ApiResult<String> {
    if body.first() == Some(&b'{') {
        return json_body::<TagRequest>(body).map(|r| r.tag);
    }
    let name = std::str::from_utf8(body)
        .map_err(|_| ApiError::bad_request("body is not UTF-8"))?
        .trim();
    if name.is_empty() {
        return Err(ApiError::bad_request("missing tag name"));
    }
    Ok(name.to_string())
}

async fn iov_post(State(store): Shared, Path(path): Path<String>, body: Bytes) -> ApiResult<Response> {
    if let Some(folder) = path.strip_suffix("/tags") {
        let folder = folder.to_string();
        let tag = tag_name(&body)?;
        let (f, t) = (folder.clone(), tag.clone());
        let entries = blocking(&store, move |s| s.tag_head(&f, &t)).await?;
        let resp = TagResponse { folder, tag, entries };
        return Ok((StatusCode::CREATED, Json(resp)).into_response());
    }
    let req: IovStoreRequest = json_body(&body)?;
    let entry = blocking(&store, move |s| s.iov_store(&path, Timestamp(req.since), &req.payload)).await?;
    Ok((StatusCode::CREATED, Json(IovEntryView::from(&entry))).into_response())
}

async fn iov_put(State(store): Shared, Path(path): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req = if body.iter().all(u8::is_ascii_whitespace) {
        CreateFolderRequest {
            description: String::new(),
        }
    } else {
        json_body(&body)?
    };
    let folder = blocking(&store, move |s| s.create_folder(&path, &req.description)).await?;
    Ok((StatusCode::CREATED, Json(FolderView::from(&folder))).into_response())
}

#[derive(Deserialize)]
struct ExportQuery {
    scope: Option<String>,
}

async fn export_xml(State(store): Shared, q: Result<Query<ExportQuery>, QueryRejection>) -> ApiResult<Response> {
    let q = query(q)?;
    let scope = q.scope.map(|s| ScopePath::parse(&s)).transpose().map_err(Error::from)?;
    let doc = blocking(&store, move |s| exchange::export_xml(s, scope.as_ref())).await?;
    Ok(([(header::CONTENT_TYPE, "application/xml; charset=utf-8")], doc).into_response())
}

async fn import_table(State(store): Shared, body: Bytes) -> ApiResult<Json<ImportReport>> {
    let text = text_body(body)?;
    blocking(&store, move |s| exchange::import_table(s, &text)).await.map(Json)
}

async fn import_xml(State(store): Shared, body: Bytes) -> ApiResult<Json<ImportReport>> {
    let text = text_body(body)?;
    blocking(&store, move |s| exchange::import_xml(s, &text)).await.map(Json)
}

async fn blob(State(store): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let id: u64 = id
        .parse()
        .map_err(|_| ApiError::bad_request(format!("blob id `{id}` is not an integer")))?;
    let (reference, bytes) = blocking(&store, move |s| {
        let reference = s.blob_ref(id)?;
        let bytes = s.get_blob(&reference)?;
        Ok((reference, bytes))
    })
    .await?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/octet-stream".to_string()),
            (header::HeaderName::from_static(CHECKSUM_HEADER), reference.checksum_hex()),
        ],
        bytes,
    )
        .into_response())
}

#[derive(Deserialize)]
struct SinceQuery {
    since: Option<u64>,
}

async fn changes(State(store): Shared, q: Result<Query<SinceQuery>, QueryRejection>) -> ApiResult<Response> {
    let since = query(q)?.since.unwrap_or(0);
    let cs = blocking(&store, move |s| sync::export_changes(s, since)).await?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/octet-stream".to_string()),
            (header::HeaderName::from_static(TO_SEQ_HEADER), cs.to_seq.to_string()),
        ],
        cs.encode(),
    )
        .into_response())
}
