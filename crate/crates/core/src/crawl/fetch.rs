//! Fetch adapters. Every failure is folded into a [`FetchOutcome`]; a single
//! bad fetch never stops the crawl.

use std::collections::HashMap;
use std::io::Read;
use std::thread;
use std::time::{Duration, Instant};

use url::Url;

use crate::html::canonicalize;

use super::corpus::CorpusManifest;
use super::robots::{robots_allowed, RobotsCache, RobotsFetch};

pub const MAX_REDIRECTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchStatus {
    /// An empty `body` is a legitimate empty response, not a failure.
    Success {
        final_url: Url,
        body: Vec<u8>,
        content_type: Option<String>,
    },
    HttpError { code: u16 },
    NetworkError { error: String },
    RobotsDenied,
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchOutcome {
    pub url: Url,
    pub status: FetchStatus,
}

impl FetchOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self.status, FetchStatus::Success { .. })
    }
}

pub trait Fetcher {
    fn fetch(&mut self, url: &Url) -> FetchOutcome;

    /// robots.txt fetches that failed and were treated as allow-all.
    fn robots_failures(&self) -> usize {
        0
    }
}

/// Serves pages from a snapshot; robots.txt is not consulted.
#[derive(Debug)]
pub struct CorpusFetcher {
    manifest: CorpusManifest,
}

impl CorpusFetcher {
    pub fn new(manifest: CorpusManifest) -> Self {
        CorpusFetcher { manifest }
    }

    pub fn manifest(&self) -> &CorpusManifest {
        &self.manifest
    }
}

impl Fetcher for CorpusFetcher {
    fn fetch(&mut self, url: &Url) -> FetchOutcome {
        let mut current = url.clone();
        let status = 'walk: {
            for _ in 0..=MAX_REDIRECTS {
                let Some(entry) = self.manifest.get(&current) else {
                    break 'walk FetchStatus::HttpError { code: 404 };
                };
                match entry.status {
                    200..=299 => {
                        break 'walk match self.manifest.read_body(entry) {
                            Ok(body) => FetchStatus::Success {
                                final_url: current,
                                body,
                                content_type: Some(entry.content_type.clone()),
                            },
                            Err(e) => FetchStatus::NetworkError {
                                error: format!("snapshot file {}: {e}", entry.path),
                            },
                        };
                    }
                    300..=399 => match current.join(&entry.path).map(canonicalize) {
                        Ok(Ok(next)) => current = next,
                        _ => break 'walk FetchStatus::HttpError { code: entry.status },
                    },
                    code => break 'walk FetchStatus::HttpError { code },
                }
            }
            FetchStatus::NetworkError {
                error: "too many redirects".into(),
            }
        };
        FetchOutcome {
            url: url.clone(),
            status,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiveOptions {
    pub user_agent: String,
    pub delay: Duration,
    pub timeout: Duration,
    pub size_cap: usize,
    pub robots_ttl: Duration,
}

/// HTTP(S) fetcher with robots.txt checks and a per-host delay between
/// consecutive requests.
pub struct LiveFetcher {
    client: reqwest::blocking::Client,
    options: LiveOptions,
    robots: RobotsCache,
    last_request: HashMap<String, Instant>,
}

impl LiveFetcher {
    pub fn new(options: LiveOptions) -> Result<Self, reqwest::Error> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(options.user_agent.clone())
            .redirect(reqwest::redirect::Policy::limited(MAX_REDIRECTS))
            .timeout(options.timeout)
            .build()?;
        Ok(LiveFetcher {
            client,
            robots: RobotsCache::new(options.robots_ttl),
            options,
            last_request: HashMap::new(),
        })
    }

    fn wait_for_host(&mut self, url: &Url) {
        let host = url.host_str().unwrap_or_default().to_owned();
        if let Some(last) = self.last_request.get(&host) {
            let elapsed = last.elapsed();
            if elapsed < self.options.delay {
                thread::sleep(self.options.delay - elapsed);
            }
        }
        self.last_request.insert(host, Instant::now());
    }

    fn get(&mut self, url: &Url) -> Result<(reqwest::blocking::Response, Url), reqwest::Error> {
        self.wait_for_host(url);
        let resp = self.client.get(url.clone()).send()?;
        let final_url = resp.url().clone();
        Ok((resp, final_url))
    }

    fn read_capped(&self, resp: reqwest::blocking::Response) -> Result<Option<Vec<u8>>, std::io::Error> {
        let cap = self.options.size_cap;
        let mut body = Vec::new();
        resp.take(cap as u64 + 1).read_to_end(&mut body)?;
        Ok((body.len() <= cap).then_some(body))
    }
}

fn error_kind(e: &reqwest::Error) -> String {
    let kind = if e.is_timeout() {
        "timeout"
    } else if e.is_redirect() {
        "too many redirects"
    } else if e.is_connect() {
        "connect"
    } else if e.is_body() || e.is_decode() {
        "body"
    } else {
        "request"
    };
    format!("{kind}: {e}")
}

impl Fetcher for LiveFetcher {
    fn fetch(&mut self, url: &Url) -> FetchOutcome {
        let outcome = |status| FetchOutcome {
            url: url.clone(),
            status,
        };
        let agent = self.options.user_agent.clone();
        let mut robots = std::mem::replace(&mut self.robots, RobotsCache::new(Duration::ZERO));
        let allowed = robots_allowed(&mut robots, url, &agent, |robots_url| match self.get(robots_url) {
            Ok((resp, _)) if resp.status().is_success() => match self.read_capped(resp) {
                Ok(Some(body)) => RobotsFetch::Found(String::from_utf8_lossy(&body).into_owned()),
                _ => RobotsFetch::Failed,
            },
            Ok((resp, _)) if resp.status().is_client_error() => RobotsFetch::Missing,
            _ => RobotsFetch::Failed,
        });
        self.robots = robots;
        if !allowed {
            return outcome(FetchStatus::RobotsDenied);
        }
        let (resp, final_url) = match self.get(url) {
            Ok(r) => r,
            Err(e) => return outcome(FetchStatus::NetworkError { error: error_kind(&e) }),
        };
        if !resp.status().is_success() {
            return outcome(FetchStatus::HttpError {
                code: resp.status().as_u16(),
            });
        }
        let content_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned);
        let final_url = canonicalize(final_url.clone()).unwrap_or(final_url);
        match self.read_capped(resp) {
            Ok(Some(body)) => outcome(FetchStatus::Success {
                final_url,
                body,
                content_type,
            }),
            Ok(None) => outcome(FetchStatus::Skipped {
                reason: format!("body exceeds size cap of {} bytes", self.options.size_cap),
            }),
            Err(e) => outcome(FetchStatus::NetworkError {
                error: format!("body: {e}"),
            }),
        }
    }

    fn robots_failures(&self) -> usize {
        self.robots.failures
    }
}
