//! HTTP interface for interactive screening.
//!
//! | method | path                        |                                         |
//! |--------|-----------------------------|-----------------------------------------|
//! | POST   | `/corpora`                  | upload documents, topics and qrels      |
//! | GET    | `/corpora/{id}`             | corpus and per-topic summary            |
//! | POST   | `/sessions`                 | start screening from seed documents     |
//! | GET    | `/sessions/{id}/ranking`    | page through the current ranking        |
//! | POST   | `/sessions/{id}/labels`     | stage labels for the next update        |
//! | POST   | `/sessions/{id}/update`     | apply staged labels and re-rank         |
//! | GET    | `/sessions/{id}/progress`   | labeling curve, recall when judged      |
//! | GET    | `/sessions/{id}/export`     | session state plus TREC run             |
//!
//! Errors come back as `{"error": <code>, "message": <text>}`.

pub mod store;

use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use anyhow::Context;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mirrormatch::corpus::{Document, TopicSpec};
use mirrormatch::embeddings::EmbeddingParams;
use mirrormatch::baselines::BaselineError;
use mirrormatch::ranking::{ModelKind, ModelScorer, ModelSpec, RankError, RankedList, ScoreError, TopicIndex, UnknownModel};
use mirrormatch::screening::{Label, LabelEntry, Session, ScreeningError};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::data::{corpus_hash, sha256_hex, EmbeddingSource, TopicSummary, Workspace};
use crate::pipeline::model_spec;
use store::{EmbeddingMode, IdempotentReply, QrelEntry, Store, StoredCorpus, StoredSession};

pub const DEFAULT_PAGE: usize = 20;
const MAX_PAGE: usize = 1000;
const SNIPPET_CHARS: usize = 240;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn invalid(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} {id}"))
    }

    fn internal(err: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", r.body_text())
    }
}

impl From<ScoreError> for ApiError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::MissingEmbeddings(_) => Self::invalid("missing_embeddings", e.to_string()),
            ScoreError::Match(_) | ScoreError::Baseline(BaselineError::InvalidParameter(_)) => {
                Self::invalid("invalid_parameters", e.to_string())
            }
            other => Self::internal(other),
        }
    }
}

impl From<ScreeningError> for ApiError {
    fn from(e: ScreeningError) -> Self {
        match e {
            ScreeningError::AlreadyLabeled(_) => Self::new(StatusCode::CONFLICT, "already_labeled", e.to_string()),
            ScreeningError::UnknownDoc(_) => Self::invalid("unknown_doc", e.to_string()),
            ScreeningError::NoSeeds => Self::invalid("no_seeds", e.to_string()),
            ScreeningError::MissingEmbeddings(_) => Self::invalid("missing_embeddings", e.to_string()),
            ScreeningError::Score(s) => s.into(),
            ScreeningError::Rank(RankError::EmptyCandidateSet) => Self::invalid("empty_candidate_set", e.to_string()),
            other => Self::internal(other),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub struct LoadedCorpus {
    pub stored: StoredCorpus,
    pub workspace: Workspace,
}

struct LiveSession {
    stored: StoredSession,
    ranking: RankedList,
    corpus: Arc<LoadedCorpus>,
}

impl LiveSession {
    fn index(&self) -> &TopicIndex {
        &self.corpus.workspace.indices[&self.stored.session.sr_id]
    }
}

struct Inner {
    store: Store,
    default_seed: Option<u64>,
    next_session: AtomicU64,
    reserved: std::sync::Mutex<HashSet<String>>,
    corpora: RwLock<HashMap<String, Arc<LoadedCorpus>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<LiveSession>>>>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

fn load_corpus(stored: StoredCorpus, store: &Store) -> anyhow::Result<LoadedCorpus> {
    let corpus = stored.corpus()?;
    let (source, params) = match (stored.mode, stored.embeddings) {
        (EmbeddingMode::Train, Some(p)) => (EmbeddingSource::Train, p),
        (EmbeddingMode::Train, None) => anyhow::bail!("corpus {} has no embedding parameters", stored.corpus_id),
        (EmbeddingMode::None, _) => (EmbeddingSource::None, EmbeddingParams::default()),
    };
    let workspace = Workspace::build(corpus, &source, &params, Some(&store.cache_dir()))?;
    Ok(LoadedCorpus { stored, workspace })
}

fn live_session(stored: StoredSession, corpus: Arc<LoadedCorpus>) -> anyhow::Result<LiveSession> {
    let s = &stored.session;
    let index = corpus.workspace.index(&s.sr_id)?;
    let scorer = ModelScorer::new(s.model, index)?;
    let ranking = s.rank(index, &scorer)?;
    Ok(LiveSession {
        stored,
        ranking,
        corpus,
    })
}

impl AppState {
    /// Open `data_dir`, rebuilding every stored corpus and session. Models
    /// are deterministic, so restored rankings equal the ones served before.
    pub fn open(data_dir: impl Into<PathBuf>, default_seed: Option<u64>) -> anyhow::Result<Self> {
        let store = Store::open(data_dir)?;
        let mut corpora = HashMap::new();
        for stored in store.corpora()? {
            let id = stored.corpus_id.clone();
            let loaded = load_corpus(stored, &store).with_context(|| format!("restoring corpus {id}"))?;
            corpora.insert(id, Arc::new(loaded));
        }
        let mut sessions = HashMap::new();
        for stored in store.sessions()? {
            let id = stored.session.session_id.clone();
            let corpus_id = stored.session.corpus_id.clone().unwrap_or_default();
            let corpus = corpora
                .get(&corpus_id)
                .cloned()
                .with_context(|| format!("session {id} refers to missing corpus {corpus_id}"))?;
            let live = live_session(stored, corpus).with_context(|| format!("restoring session {id}"))?;
            sessions.insert(id, Arc::new(Mutex::new(live)));
        }
        let next = sessions.keys().filter_map(|id| session_number(id)).max().map_or(1, |n| n + 1);
        Ok(Self(Arc::new(Inner {
            store,
            default_seed,
            next_session: AtomicU64::new(next),
            reserved: Default::default(),
            corpora: RwLock::new(corpora),
            sessions: RwLock::new(sessions),
        })))
    }

    fn corpus(&self, id: &str) -> Option<Arc<LoadedCorpus>> {
        self.0.corpora.read().unwrap().get(id).cloned()
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<LiveSession>>> {
        self.0
            .sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }
}

/// Frees a reserved session id when creation finishes or fails.
struct Reservation(AppState, String);

impl Drop for Reservation {
    fn drop(&mut self) {
        self.0 .0.reserved.lock().unwrap().remove(&self.1);
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/corpora", post(create_corpus))
        .route("/corpora/{id}", get(get_corpus))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/ranking", get(get_ranking))
        .route("/sessions/{id}/labels", post(post_labels))
        .route("/sessions/{id}/update", post(post_update))
        .route("/sessions/{id}/progress", get(get_progress))
        .route("/sessions/{id}/export", get(get_export))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

// ---- corpora ---------------------------------------------------------------

/// Training settings. The seed is not part of the request: it comes from the
/// service configuration so all randomness traces back to one value.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingRequest {
    #[serde(default)]
    mode: EmbeddingMode,
    dim: Option<usize>,
    window: Option<usize>,
    min_count: Option<usize>,
    negative_samples: Option<usize>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
}

impl EmbeddingRequest {
    fn resolve(&self, default_seed: Option<u64>) -> ApiResult<Option<EmbeddingParams>> {
        if self.mode == EmbeddingMode::None {
            return Ok(None);
        }
        let seed = default_seed.ok_or_else(|| {
            ApiError::invalid(
                "seed_required",
                "embedding training needs a seed: start the service with --seed, or upload with embeddings.mode = \"none\"",
            )
        })?;
        let d = EmbeddingParams::with_seed(seed);
        let p = EmbeddingParams {
            dim: self.dim.unwrap_or(d.dim),
            window: self.window.unwrap_or(d.window),
            min_count: self.min_count.unwrap_or(d.min_count),
            negative_samples: self.negative_samples.unwrap_or(d.negative_samples),
            epochs: self.epochs.unwrap_or(d.epochs),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            rng_seed: seed,
        };
        p.validate().map_err(|e| ApiError::invalid("invalid_embeddings", e.to_string()))?;
        Ok(Some(p))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusRequest {
    corpus_id: Option<String>,
    documents: Vec<Document>,
    topics: Option<Vec<TopicSpec>>,
    #[serde(default)]
    qrels: Vec<QrelEntry>,
    #[serde(default)]
    embeddings: EmbeddingRequest,
}

#[derive(Debug, Serialize)]
struct CorpusSummary {
    corpus_id: String,
    hash: String,
    documents: usize,
    mode: EmbeddingMode,
    embeddings: Option<EmbeddingParams>,
    topics: Vec<TopicSummary>,
}

fn corpus_summary(c: &LoadedCorpus) -> CorpusSummary {
    CorpusSummary {
        corpus_id: c.stored.corpus_id.clone(),
        hash: c.workspace.hash.clone(),
        documents: c.workspace.corpus.docs.len(),
        mode: c.stored.mode,
        embeddings: c.stored.embeddings,
        topics: c.workspace.summaries(),
    }
}

/// Same resolved content and settings give the same id, whatever the order
/// of the qrels in the upload.
fn content_id(corpus_hash: &str, stored: &StoredCorpus) -> String {
    let settings = serde_json::to_vec(&(stored.mode, &stored.embeddings)).expect("settings serialize");
    format!("c-{}", &sha256_hex(&[corpus_hash.as_bytes(), &settings])[..16])
}

async fn create_corpus(State(state): State<AppState>, payload: Result<Json<CorpusRequest>, JsonRejection>) -> ApiResult<Response> {
    let Json(req) = payload?;
    let embeddings = req.embeddings.resolve(state.0.default_seed)?;
    let mut stored = StoredCorpus {
        corpus_id: String::new(),
        documents: req.documents,
        topics: req.topics,
        qrels: req.qrels,
        mode: req.embeddings.mode,
        embeddings,
    };
    let corpus = stored.corpus().map_err(|e| ApiError::invalid("invalid_corpus", format!("{e:#}")))?;
    let derived = content_id(&corpus_hash(&corpus), &stored);
    stored.corpus_id = match req.corpus_id {
        Some(id) if !Store::check_id(&id) => return Err(ApiError::invalid("invalid_id", format!("invalid corpus id {id:?}"))),
        Some(id) => id,
        None => derived.clone(),
    };
    if let Some(existing) = state.corpus(&stored.corpus_id) {
        return if content_id(&existing.workspace.hash, &existing.stored) == derived {
            Ok((StatusCode::OK, Json(corpus_summary(&existing))).into_response())
        } else {
            Err(ApiError::new(
                StatusCode::CONFLICT,
                "corpus_exists",
                format!("corpus {} already exists with different content", stored.corpus_id),
            ))
        };
    }

    let st = state.clone();
    let loaded = blocking(move || {
        let loaded = load_corpus(stored, &st.0.store).map_err(|e| ApiError::invalid("invalid_corpus", format!("{e:#}")))?;
        st.0.store.save_corpus(&loaded.stored).map_err(ApiError::internal)?;
        Ok(Arc::new(loaded))
    })
    .await?;
    let summary = corpus_summary(&loaded);
    state.0.corpora.write().unwrap().insert(summary.corpus_id.clone(), loaded);
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn get_corpus(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<CorpusSummary>> {
    let c = state.corpus(&id).ok_or_else(|| ApiError::not_found("corpus", &id))?;
    Ok(Json(corpus_summary(&c)))
}

// ---- sessions --------------------------------------------------------------

/// Model parameters; anything omitted keeps its default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsRequest {
    lambda: Option<f64>,
    use_position: Option<bool>,
    use_two_way: Option<bool>,
    bm25_k1: Option<f64>,
    bm25_b: Option<f64>,
    jm_lambda: Option<f64>,
}

impl ParamsRequest {
    fn spec(&self, kind: ModelKind) -> ApiResult<ModelSpec> {
        let d = ModelSpec::new(kind);
        let mut spec = model_spec(
            kind,
            self.lambda.unwrap_or(d.mmatch.lambda),
            self.use_position.unwrap_or(d.mmatch.use_position),
            self.use_two_way.unwrap_or(d.mmatch.use_two_way),
        )
        .map_err(|e| ApiError::invalid("invalid_parameters", e.to_string()))?;
        spec.bm25.k1 = self.bm25_k1.unwrap_or(d.bm25.k1);
        spec.bm25.b = self.bm25_b.unwrap_or(d.bm25.b);
        spec.jm.lambda = self.jm_lambda.unwrap_or(d.jm.lambda);
        spec.validate().map_err(|e| ApiError::invalid("invalid_parameters", e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionRequest {
    corpus_id: String,
    /// May be omitted when the corpus has a single topic.
    sr_id: Option<String>,
    seed_doc_ids: Vec<String>,
    #[serde(default = "default_model")]
    model: String,
    #[serde(default)]
    params: ParamsRequest,
    session_id: Option<String>,
    limit: Option<usize>,
}

fn default_model() -> String {
    ModelKind::MMatch.name().to_string()
}

#[derive(Debug, Serialize)]
struct PageEntry {
    rank: usize,
    doc_id: String,
    score: f64,
    title: String,
    snippet: String,
}

#[derive(Debug, Serialize)]
struct RankingPage {
    round: usize,
    offset: usize,
    limit: usize,
    total: usize,
    entries: Vec<PageEntry>,
}

fn snippet(text: &str) -> String {
    match text.char_indices().nth(SNIPPET_CHARS) {
        Some((cut, _)) => format!("{}...", text[..cut].trim_end()),
        None => text.to_string(),
    }
}

fn page(live: &LiveSession, offset: usize, limit: usize) -> RankingPage {
    let docs = &live.corpus.workspace.corpus.docs;
    let limit = limit.min(MAX_PAGE);
    let entries = live
        .ranking
        .entries
        .iter()
        .skip(offset)
        .take(limit)
        .map(|e| {
            let doc = &docs[&e.doc_id];
            PageEntry {
                rank: e.rank,
                doc_id: e.doc_id.clone(),
                score: e.score,
                title: doc.title.clone(),
                snippet: snippet(&doc.abstract_text),
            }
        })
        .collect();
    RankingPage {
        round: live.stored.session.round(),
        offset,
        limit,
        total: live.ranking.len(),
        entries,
    }
}

#[derive(Debug, Serialize)]
struct SessionCreated {
    session_id: String,
    sr_id: String,
    model: String,
    seeds: Vec<String>,
    ranking: RankingPage,
}

fn session_number(id: &str) -> Option<u64> {
    id.strip_prefix("s-")?.parse().ok()
}

async fn create_session(State(state): State<AppState>, payload: Result<Json<SessionRequest>, JsonRejection>) -> ApiResult<Response> {
    let Json(req) = payload?;
    let corpus = state
        .corpus(&req.corpus_id)
        .ok_or_else(|| ApiError::invalid("unknown_corpus", format!("no corpus {}", req.corpus_id)))?;
    let sr_id = match req.sr_id {
        Some(id) => id,
        None if corpus.workspace.indices.len() == 1 => corpus.workspace.indices.keys().next().unwrap().clone(),
        None => return Err(ApiError::invalid("sr_id_required", "corpus has several topics; pass sr_id")),
    };
    if !corpus.workspace.indices.contains_key(&sr_id) {
        return Err(ApiError::invalid("unknown_topic", format!("no topic {sr_id} in corpus {}", req.corpus_id)));
    }
    let kind: ModelKind = req.model.parse().map_err(|e: UnknownModel| ApiError::invalid("unknown_model", e.to_string()))?;
    let spec = req.params.spec(kind)?;
    let session_id = match req.session_id {
        Some(id) if !Store::check_id(&id) => return Err(ApiError::invalid("invalid_id", format!("invalid session id {id:?}"))),
        Some(id) => id,
        None => format!("s-{:06}", state.0.next_session.fetch_add(1, Ordering::SeqCst)),
    };
    // Reserve the id until the session is built.
    if !state.0.reserved.lock().unwrap().insert(session_id.clone()) || state.0.sessions.read().unwrap().contains_key(&session_id) {
        return Err(ApiError::new(StatusCode::CONFLICT, "session_exists", format!("session {session_id} exists")));
    }
    let release = Reservation(state.clone(), session_id.clone());
    let limit = req.limit.unwrap_or(DEFAULT_PAGE);

    let st = state.clone();
    let seeds = req.seed_doc_ids;
    let live = blocking(move || {
        let index = &corpus.workspace.indices[&sr_id];
        let scorer = ModelScorer::new(spec, index)?;
        let (mut session, ranking) = Session::create(session_id, index, spec, &seeds, &scorer)?;
        session.corpus_id = Some(corpus.stored.corpus_id.clone());
        let stored = StoredSession {
            session,
            idempotency: Default::default(),
        };
        st.0.store.save_session(&stored).map_err(ApiError::internal)?;
        Ok(LiveSession {
            stored,
            ranking,
            corpus,
        })
    })
    .await?;
    let s = &live.stored.session;
    let body = SessionCreated {
        session_id: s.session_id.clone(),
        sr_id: s.sr_id.clone(),
        model: s.model.name.name().to_string(),
        seeds: s.seed_ids.clone(),
        ranking: page(&live, 0, limit),
    };
    state
        .0
        .sessions
        .write()
        .unwrap()
        .insert(body.session_id.clone(), Arc::new(Mutex::new(live)));
    drop(release);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Debug, Deserialize)]
struct PageQuery {
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

async fn get_ranking(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<PageQuery>, QueryRejection>,
) -> ApiResult<Json<RankingPage>> {
    let Query(q) = query?;
    let entry = state.session(&id)?;
    let live = entry.lock().await;
    Ok(Json(page(&live, q.offset, q.limit.unwrap_or(DEFAULT_PAGE))))
}

/// A bare array of labels, or the same wrapped as `{"labels": [...]}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum LabelsRequest {
    Bare(Vec<LabelEntry>),
    Wrapped { labels: Vec<LabelEntry> },
}

impl LabelsRequest {
    fn entries(&self) -> &[LabelEntry] {
        match self {
            Self::Bare(v) | Self::Wrapped { labels: v } => v,
        }
    }
}

#[derive(Debug, Serialize)]
struct LabelsStaged {
    staged: usize,
    pending: usize,
}

const IDEMPOTENCY_HEADER: &str = "idempotency-key";

async fn post_labels(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<LabelsRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = payload?;
    let key = headers
        .get(IDEMPOTENCY_HEADER)
        .map(|v| v.to_str().map(str::to_string))
        .transpose()
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "Idempotency-Key must be ASCII"))?;
    let request_hash = sha256_hex(&[&serde_json::to_vec(req.entries()).expect("labels serialize")]);
    let entry = state.session(&id)?;
    let mut live = entry.lock().await;

    if let Some(key) = &key {
        if let Some(prev) = live.stored.idempotency.get(key) {
            if prev.request_hash != request_hash {
                return Err(ApiError::invalid(
                    "idempotency_key_reused",
                    format!("Idempotency-Key {key} was used with a different request"),
                ));
            }
            let status = StatusCode::from_u16(prev.status).map_err(ApiError::internal)?;
            return Ok((status, [(header::CONTENT_TYPE, "application/json")], prev.body.clone()).into_response());
        }
    }

    let mut next = live.stored.clone();
    next.session.stage_labels(req.entries())?;
    let body = serde_json::to_string(&LabelsStaged {
        staged: req.entries().len(),
        pending: next.session.pending.len(),
    })
    .map_err(ApiError::internal)?;
    if let Some(key) = key {
        next.idempotency.insert(
            key,
            IdempotentReply {
                request_hash,
                status: StatusCode::OK.as_u16(),
                body: body.clone(),
            },
        );
    }
    state.0.store.save_session(&next).map_err(ApiError::internal)?;
    live.stored = next;
    Ok((StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], body).into_response())
}

#[derive(Debug, Serialize)]
struct Updated {
    round: usize,
    labels_applied: usize,
    new_seeds: Vec<String>,
    ranking: RankingPage,
}

async fn post_update(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<PageQuery>, QueryRejection>,
) -> ApiResult<Json<Updated>> {
    let Query(q) = query?;
    let entry = state.session(&id)?;
    let mut live = entry.lock_owned().await;
    if live.stored.session.pending.is_empty() {
        return Err(ApiError::invalid("no_pending_labels", "stage labels before updating"));
    }
    let st = state.clone();
    blocking(move || {
        let mut next = live.stored.clone();
        let corpus = live.corpus.clone();
        let index = &corpus.workspace.indices[&next.session.sr_id];
        let scorer = ModelScorer::new(next.session.model, index)?;
        let ranking = next.session.update(index, &scorer)?;
        st.0.store.save_session(&next).map_err(ApiError::internal)?;
        live.stored = next;
        live.ranking = ranking;
        let last = live.stored.session.history.last().expect("update records a round");
        Ok(Json(Updated {
            round: last.round,
            labels_applied: last.labels_added.len(),
            new_seeds: last.new_seeds.clone(),
            ranking: page(&live, q.offset, q.limit.unwrap_or(DEFAULT_PAGE)),
        }))
    })
    .await
}

#[derive(Debug, Serialize)]
struct CurvePoint {
    round: usize,
    labeled: usize,
    relevant: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    recall: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Progress {
    session_id: String,
    round: usize,
    labeled: usize,
    relevant_found: usize,
    unlabeled: usize,
    pending: usize,
    /// Judged relevant documents in the topic, when qrels exist.
    total_relevant: Option<usize>,
    curve: Vec<CurvePoint>,
}

async fn get_progress(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Progress>> {
    let entry = state.session(&id)?;
    let live = entry.lock().await;
    let s = &live.stored.session;
    let index = live.index();
    let total_relevant = (!index.qrels.is_empty()).then(|| index.relevant_ids().len()).filter(|&n| n > 0);
    let (mut labeled, mut relevant) = (0, 0);
    let curve = s
        .history
        .iter()
        .map(|r| {
            labeled += r.labels_added.len();
            relevant += r.labels_added.iter().filter(|e| e.label == Label::Relevant).count();
            CurvePoint {
                round: r.round,
                labeled,
                relevant,
                recall: total_relevant.map(|t| relevant as f64 / t as f64),
            }
        })
        .collect();
    Ok(Json(Progress {
        session_id: s.session_id.clone(),
        round: s.round(),
        labeled: s.labels.len(),
        relevant_found: s.labels.values().filter(|l| **l == Label::Relevant).count(),
        unlabeled: s.unlabeled().len(),
        pending: s.pending.len(),
        total_relevant,
        curve,
    }))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

#[derive(Debug, Serialize)]
struct Export<'a> {
    session: &'a Session,
    run: &'a str,
}

async fn get_export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<ExportQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let entry = state.session(&id)?;
    let live = entry.lock().await;
    let s = &live.stored.session;
    let run = s.history.last().map_or("", |r| r.snapshot.as_str());
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(Export { session: s, run }).into_response()),
        Some("trec") => Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], run.to_string()).into_response()),
        Some(other) => Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", format!("unknown export format {other}"))),
    }
}
