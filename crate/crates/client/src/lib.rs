//! Typed async client for the crawler service.

use std::time::Duration;

use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use treasure_core::api::{
    ApiError, BuildTGraphRequest, BuildTGraphResponse, ClassifyRequest, ClassifyResponse, CompareRequest,
    CompareResponse, CrawlJob, CrawlRequest, GalaxyRequest, GalaxyResponse, GenerateCorpusRequest, Health, JobState,
    MetricsRequest, MetricsResponse, StemRequest, StemResponse,
};
use treasure_core::eval::GeneratedCorpus;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot reach the service: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service answered with an error body.
    #[error("{0}")]
    Api(ApiError),
    /// The service answered with something that is not an API error.
    #[error("unexpected {status} response: {body}")]
    Unexpected { status: StatusCode, body: String },
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_owned(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    async fn call<B: Serialize, T: DeserializeOwned>(&self, method: Method, path: &str, body: Option<&B>) -> Result<T, ClientError> {
        let mut req = self.http.request(method, format!("{}/v1/{path}", self.base));
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let body = resp.text().await?;
        Err(match serde_json::from_str::<ApiError>(&body) {
            Ok(e) => ClientError::Api(e),
            Err(_) => ClientError::Unexpected { status, body },
        })
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        self.call(Method::POST, path, Some(body)).await
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        self.call::<(), T>(Method::GET, path, None).await
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.get("health").await
    }

    pub async fn stem(&self, req: &StemRequest) -> Result<StemResponse, ClientError> {
        self.post("stem", req).await
    }

    pub async fn galaxy(&self, req: &GalaxyRequest) -> Result<GalaxyResponse, ClientError> {
        self.post("galaxy", req).await
    }

    pub async fn classify(&self, req: &ClassifyRequest) -> Result<ClassifyResponse, ClientError> {
        self.post("classify", req).await
    }

    pub async fn build_tgraph(&self, req: &BuildTGraphRequest) -> Result<BuildTGraphResponse, ClientError> {
        self.post("tgraph/build", req).await
    }

    pub async fn generate_corpus(&self, req: &GenerateCorpusRequest) -> Result<GeneratedCorpus, ClientError> {
        self.post("corpus/generate", req).await
    }

    pub async fn start_crawl(&self, req: &CrawlRequest) -> Result<CrawlJob, ClientError> {
        self.post("crawls", req).await
    }

    pub async fn crawl_status(&self, id: u64) -> Result<CrawlJob, ClientError> {
        self.get(&format!("crawls/{id}")).await
    }

    pub async fn crawls(&self) -> Result<Vec<CrawlJob>, ClientError> {
        self.get("crawls").await
    }

    /// Polls a job until it leaves the running state.
    pub async fn wait_for_crawl(&self, id: u64, every: Duration) -> Result<CrawlJob, ClientError> {
        loop {
            let job = self.crawl_status(id).await?;
            if job.state != JobState::Running {
                return Ok(job);
            }
            tokio::time::sleep(every).await;
        }
    }

    /// Starts a crawl and waits for it; a failed job becomes an error.
    pub async fn crawl(&self, req: &CrawlRequest) -> Result<CrawlJob, ClientError> {
        let job = self.start_crawl(req).await?;
        let job = self.wait_for_crawl(job.id, Duration::from_millis(100)).await?;
        match (&job.state, &job.error) {
            (JobState::Failed, Some(e)) => Err(ClientError::Api(e.clone())),
            _ => Ok(job),
        }
    }

    pub async fn metrics(&self, req: &MetricsRequest) -> Result<MetricsResponse, ClientError> {
        self.post("metrics", req).await
    }

    pub async fn compare(&self, req: &CompareRequest) -> Result<CompareResponse, ClientError> {
        self.post("compare", req).await
    }
}
