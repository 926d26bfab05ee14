//! HTTP/JSON front end for the crawler operations.
//!
//! Every route runs its operation on the blocking thread pool. Crawls are
//! long-running, so `POST /v1/crawls` returns a job immediately and the
//! caller polls `GET /v1/crawls/{id}`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::{TcpListener, ToSocketAddrs};
use tokio::task::JoinHandle;
use tracing::{info, warn};

use treasure_core::api::{
    self, ApiError, BuildTGraphRequest, BuildTGraphResponse, ClassifyRequest, ClassifyResponse, CompareRequest,
    CompareResponse, CrawlJob, CrawlRequest, ErrorKind, GalaxyRequest, GalaxyResponse, GenerateCorpusRequest, Health,
    JobState, MetricsRequest, MetricsResponse, StemRequest, StemResponse,
};
use treasure_core::eval::GeneratedCorpus;

#[derive(Default)]
struct Jobs {
    next_id: u64,
    jobs: BTreeMap<u64, CrawlJob>,
}

#[derive(Clone, Default)]
struct AppState {
    jobs: Arc<Mutex<Jobs>>,
}

/// JSON error body with a status derived from the error kind.
pub struct Failure(pub ApiError);

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure(e)
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let status = match self.0.kind {
            ErrorKind::BadRequest => StatusCode::BAD_REQUEST,
            ErrorKind::Failed => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Conflict => StatusCode::CONFLICT,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(self.0)).into_response()
    }
}

type Reply<T> = Result<Json<T>, Failure>;

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

async fn health() -> Json<Health> {
    Json(api::health())
}

async fn stem(Json(req): Json<StemRequest>) -> Json<StemResponse> {
    Json(api::stem(&req))
}

async fn galaxy(Json(req): Json<GalaxyRequest>) -> Reply<GalaxyResponse> {
    Ok(Json(blocking(move || api::galaxy(&req)).await?))
}

async fn classify(Json(req): Json<ClassifyRequest>) -> Reply<ClassifyResponse> {
    Ok(Json(blocking(move || api::classify(&req)).await?))
}

async fn build_tgraph(Json(req): Json<BuildTGraphRequest>) -> Reply<BuildTGraphResponse> {
    Ok(Json(blocking(move || api::build_tgraph(&req)).await?))
}

async fn generate_corpus(Json(req): Json<GenerateCorpusRequest>) -> Reply<GeneratedCorpus> {
    Ok(Json(blocking(move || api::generate(&req)).await?))
}

async fn metrics(Json(req): Json<MetricsRequest>) -> Reply<MetricsResponse> {
    Ok(Json(blocking(move || api::metrics(&req)).await?))
}

async fn compare(Json(req): Json<CompareRequest>) -> Reply<CompareResponse> {
    Ok(Json(blocking(move || api::compare(&req)).await?))
}

async fn start_crawl(State(state): State<AppState>, Json(req): Json<CrawlRequest>) -> Result<(StatusCode, Json<CrawlJob>), Failure> {
    let prepared = req.clone();
    let config = blocking(move || prepared.prepare()).await?;
    let job = {
        let mut jobs = state.jobs.lock().expect("job table poisoned");
        let busy = jobs
            .jobs
            .values()
            .any(|j| j.state == JobState::Running && j.repository == config.repository_path);
        if busy {
            return Err(ApiError::conflict(format!(
                "a crawl into {} is already running",
                config.repository_path.display()
            ))
            .into());
        }
        jobs.next_id += 1;
        let job = CrawlJob {
            id: jobs.next_id,
            state: JobState::Running,
            repository: config.repository_path.clone(),
            summary: None,
            error: None,
        };
        jobs.jobs.insert(job.id, job.clone());
        job
    };
    info!(id = job.id, repository = %job.repository.display(), "crawl started");
    let id = job.id;
    let table = state.jobs.clone();
    tokio::spawn(async move {
        let result = blocking(move || api::crawl_prepared(&config, &req)).await;
        let mut jobs = table.lock().expect("job table poisoned");
        let Some(job) = jobs.jobs.get_mut(&id) else { return };
        match result {
            Ok(summary) => {
                info!(id, pages = summary.counters.pages_attempted, "crawl finished");
                job.state = JobState::Succeeded;
                job.summary = Some(summary);
            }
            Err(e) => {
                warn!(id, "crawl failed: {e}");
                job.state = JobState::Failed;
                job.error = Some(e);
            }
        }
    });
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn crawl_status(State(state): State<AppState>, Path(id): Path<u64>) -> Reply<CrawlJob> {
    let jobs = state.jobs.lock().expect("job table poisoned");
    jobs.jobs
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no crawl job {id}")).into())
}

async fn list_crawls(State(state): State<AppState>) -> Json<Vec<CrawlJob>> {
    let jobs = state.jobs.lock().expect("job table poisoned");
    Json(jobs.jobs.values().cloned().collect())
}

pub fn router() -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/stem", post(stem))
        .route("/v1/galaxy", post(galaxy))
        .route("/v1/classify", post(classify))
        .route("/v1/tgraph/build", post(build_tgraph))
        .route("/v1/corpus/generate", post(generate_corpus))
        .route("/v1/crawls", post(start_crawl).get(list_crawls))
        .route("/v1/crawls/{id}", get(crawl_status))
        .route("/v1/metrics", post(metrics))
        .route("/v1/compare", post(compare))
        .with_state(AppState::default())
}

/// Serves until the returned future is dropped or the listener fails.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

/// Binds `addr` and serves in a background task. Returns the bound
/// address, which matters when the port was 0.
pub async fn spawn(addr: impl ToSocketAddrs) -> std::io::Result<(SocketAddr, JoinHandle<std::io::Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((local, tokio::spawn(serve(listener))))
}
