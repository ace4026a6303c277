//! HTTP facade over the quad store and the reconciliation review loop.

mod review;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use km4_core::address::QualifierTable;
use km4_core::evaluator::{manual_review_queue, GoldAlignment, MUNICIPALITIES};
use km4_core::ingestion::{DatasetDescriptor, Pipeline};
use km4_core::quadstore::{GeoPoint, Iri, Literal, Pattern, Quad, QuadStore, Term};
use km4_core::reconciler::{
    apply_decision, catalog_from_store, reconcile_corpus, reconciliation_context, services_from_store, MethodConfig,
    ReconcileError, RunSummary, Strategy,
};
use km4_core::schema::{load_schema, Schema};
use km4_core::vocab;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use review::{
    AuditEntry, MetricsView, ReviewBook, ReviewError, ReviewFilters, ReviewQueueView, ReviewSummary, Verdict,
};

pub const PAGE_SIZE: usize = 50;
const MAX_PAGE: usize = 1000;
pub const OPERATOR_HEADER: &str = "x-operator";
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn body(&self) -> Value {
        json!({ "error": self.to_string() })
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        match e {
            ReviewError::NotFound(_) => ApiError::NotFound(e.to_string()),
            ReviewError::Conflict { .. } => ApiError::Conflict(e.to_string()),
            _ => ApiError::BadRequest(e.to_string()),
        }
    }
}

impl From<ReconcileError> for ApiError {
    fn from(e: ReconcileError) -> Self {
        match e {
            ReconcileError::AccessConflict { .. } => ApiError::Conflict(e.to_string()),
            ReconcileError::Config(_) => ApiError::BadRequest(e.to_string()),
            _ => ApiError::Internal(e.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Inner {
    store: QuadStore,
    schema: Schema,
    base: String,
    aliases: Vec<(String, String)>,
    gold: Option<GoldAlignment>,
    book: ReviewBook,
    replies: HashMap<String, (StatusCode, Value)>,
}

/// Shared server state. Reads take a shared lock, so every response sees
/// one consistent store version; writes and decisions are serialised.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<RwLock<Inner>>,
}

impl AppState {
    pub fn new(store: QuadStore, base: &str) -> Self {
        let aliases = MUNICIPALITIES
            .iter()
            .flat_map(|(name, aliases, _, _)| aliases.iter().map(move |a| (a.to_string(), name.to_string())))
            .collect();
        AppState {
            inner: Arc::new(RwLock::new(Inner {
                store,
                schema: load_schema(),
                base: base.trim_end_matches('/').to_string(),
                aliases,
                gold: None,
                book: ReviewBook::default(),
                replies: HashMap::new(),
            })),
        }
    }

    /// Gold alignment used for the live metrics.
    pub fn with_gold(self, gold: GoldAlignment) -> Self {
        self.write().gold = Some(gold);
        self
    }

    /// Replaces the (alias, municipality) pairs consulted by the
    /// knowledge-based metric.
    pub fn with_aliases(self, aliases: Vec<(String, String)>) -> Self {
        self.write().aliases = aliases;
        self
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Runs `f` against the store under the read lock.
    pub fn with_store<T>(&self, f: impl FnOnce(&QuadStore) -> T) -> T {
        f(&self.read().store)
    }

    pub fn with_book<T>(&self, f: impl FnOnce(&ReviewBook) -> T) -> T {
        f(&self.read().book)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/quads", get(quads))
        .route("/geo/near", get(geo_near))
        .route("/reconcile/run", post(reconcile_run))
        .route("/review", get(review_list))
        .route("/review/{id}/decision", post(review_decide))
        .route("/metrics", get(metrics))
        .route("/datasets", get(datasets))
        .route("/audit", get(audit))
        .with_state(state)
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

fn idempotency_key(headers: &HeaderMap, route: &str) -> ApiResult<Option<String>> {
    headers
        .get(IDEMPOTENCY_HEADER)
        .map(|v| {
            v.to_str()
                .map(|t| format!("{route} {t}"))
                .map_err(|_| ApiError::BadRequest("idempotency key must be visible ASCII".into()))
        })
        .transpose()
}

fn reply(status: StatusCode, body: Value) -> Response {
    (status, Json(body)).into_response()
}

/// Runs a state-changing handler once per request token: a retry with the
/// same token gets the stored reply without touching the state again.
fn once(
    inner: &mut Inner,
    key: Option<String>,
    f: impl FnOnce(&mut Inner) -> ApiResult<Value>,
) -> Response {
    if let Some((status, body)) = key.as_ref().and_then(|k| inner.replies.get(k)) {
        return reply(*status, body.clone());
    }
    let (status, body) = match f(inner) {
        Ok(body) => (StatusCode::OK, body),
        Err(e) => (e.status(), e.body()),
    };
    if let Some(k) = key {
        inner.replies.insert(k, (status, body.clone()));
    }
    reply(status, body)
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let inner = state.read();
    Json(json!({
        "status": "ok",
        "quads": inner.store.len(),
        "contexts": inner.store.contexts().len(),
    }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct QuadQuery {
    s: Option<String>,
    p: Option<String>,
    o: Option<String>,
    /// Object as a plain string literal.
    lit: Option<String>,
    c: Option<String>,
    closure: bool,
    cursor: Option<String>,
    limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadItem {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub context: String,
    pub nquad: String,
}

impl QuadItem {
    fn of(q: &Quad) -> Self {
        QuadItem {
            subject: q.subject.to_string(),
            predicate: q.predicate.to_string(),
            object: format!("{:?}", q.object),
            context: q.context.to_string(),
            nquad: km4_core::quadstore::nquads::quad_to_line(q),
        }
    }
}

fn iri_param(name: &str, value: &Option<String>) -> ApiResult<Option<Iri>> {
    value
        .as_deref()
        .map(|v| Iri::new(v).map_err(|e| ApiError::BadRequest(format!("{name}: {e}"))))
        .transpose()
}

fn page_limit(limit: Option<usize>) -> ApiResult<usize> {
    match limit {
        Some(0) => Err(ApiError::BadRequest("limit must be positive".into())),
        Some(n) => Ok(n.min(MAX_PAGE)),
        None => Ok(PAGE_SIZE),
    }
}

async fn quads(State(state): State<AppState>, Query(q): Query<QuadQuery>) -> ApiResult<Json<Value>> {
    let mut pattern = Pattern::any();
    if let Some(s) = iri_param("s", &q.s)? {
        pattern = pattern.s(&s);
    }
    if let Some(p) = iri_param("p", &q.p)? {
        pattern = pattern.p(&p);
    }
    match (iri_param("o", &q.o)?, &q.lit) {
        (Some(_), Some(_)) => return Err(ApiError::BadRequest("give either o or lit".into())),
        (Some(o), None) => pattern = pattern.o(o),
        (None, Some(l)) => pattern = pattern.o(Term::from(Literal::string(l))),
        (None, None) => {}
    }
    if let Some(c) = iri_param("c", &q.c)? {
        pattern = pattern.c(&c);
    }
    let limit = page_limit(q.limit)?;
    let inner = state.read();
    let found = if q.closure {
        inner.store.match_with_closure(&pattern)
    } else {
        inner.store.match_pattern(&pattern)
    };
    let mut items: Vec<QuadItem> = found.iter().map(QuadItem::of).collect();
    items.sort_by(|a, b| a.nquad.cmp(&b.nquad));
    items.dedup_by(|a, b| a.nquad == b.nquad);
    if let Some(cursor) = &q.cursor {
        items.retain(|i| &i.nquad > cursor);
    }
    let next = (items.len() > limit).then(|| items[limit - 1].nquad.clone());
    items.truncate(limit);
    Ok(Json(json!({ "items": items, "nextCursor": next })))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GeoQuery {
    lat: f64,
    long: f64,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_distance")]
    max_distance: f64,
    class: Option<String>,
}

fn default_k() -> usize {
    10
}

fn default_distance() -> f64 {
    1000.0
}

fn display_name(store: &QuadStore, entity: &Iri) -> Option<String> {
    ["name", "roadName", "lotName", "lineNumber"].iter().find_map(|p| {
        let p = Iri::new(vocab::km4c(p)).unwrap();
        store
            .matches(Some(entity), Some(&p), None, None)
            .into_iter()
            .find_map(|q| q.object.as_literal().map(|l| l.lexical().to_string()))
    })
}

fn entity_class(store: &QuadStore, entity: &Iri) -> Option<String> {
    let ty = Iri::new(vocab::RDF_TYPE).unwrap();
    let mut classes: Vec<String> = store
        .matches(Some(entity), Some(&ty), None, None)
        .into_iter()
        .filter_map(|q| q.object.as_iri().map(|c| vocab::local_name(c.as_str()).to_string()))
        .collect();
    classes.sort();
    classes.into_iter().next()
}

async fn geo_near(State(state): State<AppState>, Query(q): Query<GeoQuery>) -> ApiResult<Json<Value>> {
    if q.k == 0 {
        return Err(ApiError::BadRequest("k must be positive".into()));
    }
    if !(q.max_distance >= 0.0) {
        return Err(ApiError::BadRequest("maxDistance must be a non-negative number".into()));
    }
    let point = GeoPoint::new(q.lat, q.long).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let inner = state.read();
    let classes: Option<Vec<Iri>> = match &q.class {
        Some(c) if inner.schema.class(c).is_none() => {
            return Err(ApiError::BadRequest(format!("unknown class {c}")));
        }
        Some(c) => Some(
            inner
                .schema
                .subclasses(c)
                .into_iter()
                .map(|s| Iri::new(vocab::km4c(s)).unwrap())
                .collect(),
        ),
        None => None,
    };
    let found = inner.store.geo_near(point, q.k.min(MAX_PAGE), q.max_distance, classes.as_deref());
    let items: Vec<Value> = found
        .iter()
        .map(|(entity, d)| {
            json!({
                "entity": entity.as_str(),
                "distance": d,
                "class": entity_class(&inner.store, entity),
                "name": display_name(&inner.store, entity),
            })
        })
        .collect();
    Ok(Json(json!({ "items": items })))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRequest {
    /// exact, levenshtein, dice, jaccard or kb-levenshtein.
    pub method: String,
    pub accept_threshold: Option<f64>,
    pub review_threshold: Option<f64>,
    /// Candidates kept per review item.
    pub shown: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunResponse {
    pub method: String,
    pub summary: RunSummary,
    pub quads_written: usize,
    /// Auto links refused because the service already had another access.
    pub conflicts: Vec<String>,
    pub queued: usize,
    pub live_metrics: Option<km4_core::evaluator::MetricsReport>,
}

fn run_reconciliation(inner: &mut Inner, req: RunRequest) -> ApiResult<Value> {
    let strategy =
        Strategy::parse(&req.method).ok_or_else(|| ApiError::BadRequest(format!("unknown method {}", req.method)))?;
    let mut cfg = MethodConfig::default();
    if let Strategy::Discover(metric) = strategy {
        cfg.metric = metric;
    }
    if let Some(t) = req.accept_threshold {
        cfg.accept_threshold = t;
    }
    if let Some(t) = req.review_threshold {
        cfg.review_threshold = t;
    }
    cfg.validate()?;
    let shown = req.shown.unwrap_or(5).max(1);
    let classes = inner.schema.subclasses("Service");
    let services = services_from_store(&inner.store, &classes);
    let catalog = catalog_from_store(&inner.store, QualifierTable::seed()).with_aliases(inner.aliases.iter().cloned());
    let mut run = reconcile_corpus(&services, &catalog, strategy, &cfg);
    let queue = match strategy {
        Strategy::Exact => manual_review_queue(&services, &catalog, &run.links, &cfg, shown, 1),
        Strategy::Discover(_) => {
            for item in &mut run.review_queue {
                item.candidates.truncate(shown);
            }
            std::mem::take(&mut run.review_queue)
        }
    };
    let ctx = reconciliation_context(&inner.base);
    let mut written = 0;
    let mut conflicts = Vec::new();
    let mut auto = Vec::new();
    for link in run.links {
        match apply_decision(&mut inner.store, &link, &ctx) {
            Ok(q) => {
                written += q.len();
                auto.push(link);
            }
            Err(ReconcileError::AccessConflict { .. }) => conflicts.push(link.service.to_string()),
            Err(e) => return Err(e.into()),
        }
    }
    let towns = services.iter().map(|s| (s.iri.clone(), s.address.municipality.clone())).collect();
    let queued = queue.len();
    inner.book = ReviewBook::new(auto, queue, towns, inner.gold.clone()).continuing(&inner.book);
    let response = RunResponse {
        method: req.method,
        summary: run.summary,
        quads_written: written,
        conflicts,
        queued,
        live_metrics: inner.book.live_metrics(),
    };
    serde_json::to_value(response).map_err(|e| ApiError::Internal(e.to_string()))
}

async fn reconcile_run(State(state): State<AppState>, headers: HeaderMap, body: Json<RunRequest>) -> Response {
    let key = match idempotency_key(&headers, "/reconcile/run") {
        Ok(k) => k,
        Err(e) => return e.into_response(),
    };
    let mut inner = state.write();
    once(&mut inner, key, |inner| run_reconciliation(inner, body.0))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "camelCase")]
struct ReviewQuery {
    method: Option<String>,
    municipality: Option<String>,
    score_band: Option<String>,
    state: Option<String>,
    cursor: Option<String>,
    limit: Option<usize>,
}

async fn review_list(State(state): State<AppState>, Query(q): Query<ReviewQuery>) -> ApiResult<Json<ReviewQueueView>> {
    let filters = ReviewFilters {
        method: q.method,
        municipality: q.municipality,
        score_band: q.score_band,
        state: q.state,
    };
    let limit = page_limit(q.limit)?;
    Ok(Json(state.read().book.view(&filters, q.cursor.as_deref(), limit)?))
}

fn decide(inner: &mut Inner, id: u64, verdict: Verdict, operator: &str) -> ApiResult<Value> {
    let written = match inner.book.check(id, verdict)? {
        Some(link) => apply_decision(&mut inner.store, &link, &reconciliation_context(&inner.base))?,
        None => Vec::new(),
    };
    let entry = inner.book.commit(id, verdict, operator, Utc::now())?.clone();
    let queue = inner.book.view(&ReviewFilters::default(), None, PAGE_SIZE)?;
    let quads: Vec<QuadItem> = written.iter().map(QuadItem::of).collect();
    Ok(json!({ "audit": entry, "quads": quads, "queue": queue }))
}

async fn review_decide(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    body: Json<Verdict>,
) -> Response {
    let key = match idempotency_key(&headers, &format!("/review/{id}/decision")) {
        Ok(k) => k,
        Err(e) => return e.into_response(),
    };
    let operator = match headers.get(OPERATOR_HEADER).and_then(|v| v.to_str().ok()).map(str::trim) {
        Some(op) if !op.is_empty() => op.to_string(),
        _ => return ApiError::BadRequest(format!("missing {OPERATOR_HEADER} header")).into_response(),
    };
    let mut inner = state.write();
    once(&mut inner, key, |inner| decide(inner, id, body.0, &operator))
}

async fn metrics(State(state): State<AppState>) -> Json<MetricsView> {
    Json(state.read().book.metrics())
}

async fn audit(State(state): State<AppState>) -> Json<Value> {
    Json(json!({ "items": state.read().book.audit() }))
}

async fn datasets(State(state): State<AppState>) -> ApiResult<Json<Value>> {
    let inner = state.read();
    let pipeline = Pipeline::new(&inner.base);
    let meta = pipeline.metadata_context();
    let ty = Iri::new(vocab::RDF_TYPE).unwrap();
    let dataset = Term::from(Iri::new(vocab::km4c("Dataset")).unwrap());
    let mut items = Vec::new();
    for q in inner.store.matches(None, Some(&ty), Some(&dataset), Some(&meta)) {
        let quads = inner.store.matches(Some(&q.subject), None, None, Some(&meta));
        let descriptor =
            DatasetDescriptor::from_quads(&q.subject, &quads).map_err(|e| ApiError::Internal(e.to_string()))?;
        let context = pipeline.data_context(&descriptor.id);
        let count = inner.store.matches(None, None, None, Some(&context)).len();
        items.push(json!({ "descriptor": descriptor, "context": context.as_str(), "quads": count }));
    }
    Ok(Json(json!({ "items": items })))
}
