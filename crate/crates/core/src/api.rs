//! Request and response bodies of the HTTP service, and the blocking
//! operations behind them. The server only adds routing and job tracking;
//! the client and the CLI share these types.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::crawl::config::{CrawlConfig, Strategy};
use crate::crawl::engine::{load_lexicon, load_tgraph, process_page, run_crawl, CrawlOptions, CrawlSummary, ProcessDeps};
use crate::crawl::fetch::{FetchOutcome, FetchStatus};
use crate::crawl::repository::{CrawlRecord, LinkRecord};
use crate::eval::metrics::{self, render_table, MetricsReport, DEFAULT_CURVE_EVERY};
use crate::eval::{self, generate_corpus, load_labels, read_url_list, CorpusParams, GeneratedCorpus, StrategyResult};
use crate::galaxy::{find_galaxy, is_on_topic, plot_dots, Dot, TopicConfig, DEFAULT_OFF_TOPIC_PRIORITY, DEFAULT_REFINEMENT_DEPTH};
use crate::html::{canonical_url, BoundaryWord, DEFAULT_SIZE_CAP};
use crate::text::{stemmed_terms, tokenize};
use crate::tgraph::DEFAULT_OSM_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// The request itself is malformed or inconsistent.
    BadRequest,
    /// The request was understood but the operation failed.
    Failed,
    NotFound,
    /// Another job is already using the same repository.
    Conflict,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{message}")]
pub struct ApiError {
    pub kind: ErrorKind,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            kind: ErrorKind::BadRequest,
            message: message.into(),
        }
    }

    pub fn failed(message: impl ToString) -> Self {
        ApiError {
            kind: ErrorKind::Failed,
            message: message.to_string(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            kind: ErrorKind::NotFound,
            message: message.into(),
        }
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        ApiError {
            kind: ErrorKind::Conflict,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError {
            kind: ErrorKind::Internal,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

pub fn health() -> Health {
    Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemResponse {
    pub tokens: Vec<String>,
    pub stems: Vec<String>,
}

pub fn stem(req: &StemRequest) -> StemResponse {
    StemResponse {
        tokens: tokenize(&req.text).into_iter().map(|t| t.text).collect(),
        stems: stemmed_terms(&req.text),
    }
}

/// Galaxy of a free-text boundary. `anchor` words carry the anchor impact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalaxyRequest {
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub anchor: String,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub topics: BTreeSet<String>,
    #[serde(default)]
    pub lexicon_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalaxyResponse {
    pub dots: Vec<Dot>,
    pub prefixes: Option<BTreeSet<String>>,
    pub weight: f64,
    /// Present when topics were given.
    pub on_topic: Option<bool>,
}

pub fn galaxy(req: &GalaxyRequest) -> Result<GalaxyResponse, ApiError> {
    let depth = req.depth.unwrap_or(DEFAULT_REFINEMENT_DEPTH);
    if depth == 0 {
        return Err(ApiError::bad_request("depth must be at least 1"));
    }
    let lexicon = load_lexicon(req.lexicon_path.as_deref()).map_err(ApiError::failed)?;
    let words = |text: &str, is_anchor| {
        stemmed_terms(text)
            .into_iter()
            .map(move |term| BoundaryWord { term, is_anchor })
    };
    let boundary: Vec<BoundaryWord> = words(&req.text, false).chain(words(&req.anchor, true)).collect();
    let dots = plot_dots(&boundary, &lexicon);
    let result = find_galaxy(&dots, depth);
    let on_topic = if req.topics.is_empty() {
        None
    } else {
        let config = TopicConfig {
            topics: req.topics.clone(),
            refinement_depth: depth,
            off_topic_priority: DEFAULT_OFF_TOPIC_PRIORITY,
        };
        config.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
        Some(is_on_topic(result.as_ref().map(|g| &g.prefixes), &config))
    };
    Ok(GalaxyResponse {
        dots,
        weight: result.as_ref().map_or(0.0, |g| g.weight),
        prefixes: result.map(|g| g.prefixes),
        on_topic,
    })
}

/// Classifies one HTML page and its links exactly as a crawl would.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub url: String,
    pub html: String,
    pub topics: BTreeSet<String>,
    #[serde(default)]
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub tgraph_path: Option<PathBuf>,
    #[serde(default)]
    pub lexicon_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub page_prefixes: BTreeSet<String>,
    pub on_topic: bool,
    pub links: Vec<LinkRecord>,
    pub note: Option<String>,
}

pub fn classify(req: &ClassifyRequest) -> Result<ClassifyResponse, ApiError> {
    let url = canonical_url(&req.url).map_err(|e| ApiError::bad_request(format!("{}: {e}", req.url)))?;
    let topics = TopicConfig::new(req.topics.iter().cloned()).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let strategy = req.strategy.unwrap_or(Strategy::Treasure);
    let tgraph = match (&req.tgraph_path, strategy) {
        (Some(p), _) => Some(load_tgraph(p).map_err(ApiError::failed)?),
        (None, Strategy::Treasure) => {
            return Err(ApiError::bad_request("the treasure strategy needs tgraph_path"));
        }
        (None, _) => None,
    };
    let lexicon = load_lexicon(req.lexicon_path.as_deref()).map_err(ApiError::failed)?;
    let outcome = FetchOutcome {
        url: url.clone(),
        status: FetchStatus::Success {
            final_url: url,
            body: req.html.clone().into_bytes(),
            content_type: Some("text/html".into()),
        },
    };
    let deps = ProcessDeps {
        lexicon: &lexicon,
        tgraph: tgraph.as_ref(),
        topics: &topics,
        strategy,
        size_cap: DEFAULT_SIZE_CAP,
    };
    let CrawlRecord {
        page_prefixes,
        on_topic,
        links,
        note,
        ..
    } = process_page(&outcome, 0, 0, &deps).record;
    Ok(ClassifyResponse {
        page_prefixes,
        on_topic,
        links,
        note,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildTGraphRequest {
    pub sample_root: PathBuf,
    /// Target URLs; merged with `targets_file` when both are given.
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default)]
    pub targets_file: Option<PathBuf>,
    pub output: PathBuf,
    #[serde(default)]
    pub osm_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildTGraphResponse {
    pub output: PathBuf,
    pub nodes: usize,
    pub targets: usize,
    pub unreachable: usize,
    pub level_count: u32,
}

pub fn build_tgraph(req: &BuildTGraphRequest) -> Result<BuildTGraphResponse, ApiError> {
    let mut targets: Vec<Url> = req
        .targets
        .iter()
        .map(|t| canonical_url(t).map_err(|e| ApiError::bad_request(format!("target {t}: {e}"))))
        .collect::<Result<_, _>>()?;
    if let Some(file) = &req.targets_file {
        targets.extend(read_url_list(file).map_err(ApiError::failed)?);
    }
    let osm = req.osm_threshold.unwrap_or(DEFAULT_OSM_THRESHOLD);
    if !(0.0..=1.0).contains(&osm) {
        return Err(ApiError::bad_request("osm_threshold must lie in [0, 1]"));
    }
    let graph = eval::build_tgraph(&req.sample_root, &targets, &req.output, osm).map_err(ApiError::failed)?;
    Ok(BuildTGraphResponse {
        output: req.output.clone(),
        nodes: graph.nodes().len(),
        targets: graph.nodes().iter().filter(|n| n.is_target).count(),
        unreachable: graph.nodes().iter().filter(|n| n.unreachable).count(),
        level_count: graph.level_count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateCorpusRequest {
    pub output: PathBuf,
    #[serde(default)]
    pub params: CorpusParams,
}

pub fn generate(req: &GenerateCorpusRequest) -> Result<GeneratedCorpus, ApiError> {
    generate_corpus(&req.params, &req.output).map_err(ApiError::failed)
}

/// Where a crawl or comparison takes its configuration from: a file, an
/// inline configuration, or both (the file wins and `config` is ignored).
/// Overrides are applied last, in order, with the file's key syntax.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigSource {
    #[serde(default)]
    pub config_path: Option<PathBuf>,
    #[serde(default)]
    pub config: Option<CrawlConfig>,
    #[serde(default)]
    pub overrides: Vec<(String, String)>,
}

impl ConfigSource {
    pub fn resolve(&self) -> Result<CrawlConfig, ApiError> {
        let mut config = match (&self.config_path, &self.config) {
            (Some(p), _) => CrawlConfig::from_file(p).map_err(|e| ApiError::bad_request(e.to_string()))?,
            (None, Some(c)) => c.clone(),
            (None, None) => return Err(ApiError::bad_request("either config_path or config is required")),
        };
        for (k, v) in &self.overrides {
            config.set(k, v).map_err(|e| ApiError::bad_request(e.to_string()))?;
        }
        config.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrawlRequest {
    #[serde(flatten)]
    pub source: ConfigSource,
    #[serde(default)]
    pub resume: bool,
    #[serde(default)]
    pub fresh: bool,
}

impl CrawlRequest {
    /// Checks the options and resolves the configuration.
    pub fn prepare(&self) -> Result<CrawlConfig, ApiError> {
        if self.resume && self.fresh {
            return Err(ApiError::bad_request("resume and fresh are mutually exclusive"));
        }
        self.source.resolve()
    }
}

pub fn crawl(req: &CrawlRequest) -> Result<CrawlSummary, ApiError> {
    let config = req.prepare()?;
    crawl_prepared(&config, req)
}

pub fn crawl_prepared(config: &CrawlConfig, req: &CrawlRequest) -> Result<CrawlSummary, ApiError> {
    run_crawl(
        config,
        CrawlOptions {
            resume: req.resume,
            fresh: req.fresh,
            stop_after: None,
        },
    )
    .map_err(ApiError::failed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlJob {
    pub id: u64,
    pub state: JobState,
    pub repository: PathBuf,
    pub summary: Option<CrawlSummary>,
    pub error: Option<ApiError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRequest {
    pub repository: PathBuf,
    pub labels: PathBuf,
    #[serde(default)]
    pub curve_every: Option<usize>,
    /// Write `metrics.csv` and `harvest_curve.csv` into the repository.
    #[serde(default)]
    pub write_csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsResponse {
    pub report: MetricsReport,
    pub table: String,
    pub csv: Option<PathBuf>,
}

pub fn metrics(req: &MetricsRequest) -> Result<MetricsResponse, ApiError> {
    let labels = load_labels(&req.labels).map_err(ApiError::failed)?;
    let every = req.curve_every.unwrap_or(DEFAULT_CURVE_EVERY);
    let report = eval::metrics_for_repository(&req.repository, &labels, every).map_err(ApiError::failed)?;
    let name = req
        .repository
        .file_name()
        .map_or_else(|| "crawl".to_owned(), |n| n.to_string_lossy().into_owned());
    let csv = if req.write_csv {
        metrics::write_csv(&req.repository, &name, &report).map_err(ApiError::failed)?;
        Some(req.repository.join(metrics::METRICS_CSV))
    } else {
        None
    };
    Ok(MetricsResponse {
        table: render_table(&[(name, &report)]),
        report,
        csv,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRequest {
    #[serde(flatten)]
    pub source: ConfigSource,
    /// Defaults to every strategy.
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    pub labels: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub curve_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub results: Vec<StrategyResult>,
    pub table: String,
    /// One row per strategy.
    pub csv: PathBuf,
}

pub fn compare(req: &CompareRequest) -> Result<CompareResponse, ApiError> {
    let config = req.source.resolve()?;
    let labels = load_labels(&req.labels).map_err(ApiError::failed)?;
    let strategies = if req.strategies.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        req.strategies.clone()
    };
    let every = req.curve_every.unwrap_or(DEFAULT_CURVE_EVERY);
    let results = eval::compare(&config, &strategies, &labels, &req.output_dir, every).map_err(ApiError::failed)?;
    let csv = req.output_dir.join(metrics::METRICS_CSV);
    write_summary_csv(&csv, &results).map_err(ApiError::failed)?;
    let rows: Vec<(String, &MetricsReport)> = results.iter().map(|r| (r.strategy.to_string(), &r.metrics)).collect();
    Ok(CompareResponse {
        table: render_table(&rows),
        results,
        csv,
    })
}

fn write_summary_csv(path: &Path, results: &[StrategyResult]) -> std::io::Result<()> {
    let mut out = format!("{}\n", metrics::metrics_csv_header());
    for r in results {
        out.push_str(&metrics::metrics_csv_row(r.strategy.name(), &r.metrics));
        out.push('\n');
    }
    fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn galaxy_of_free_text() {
        let r = galaxy(&GalaxyRequest {
            text: "shinto and taoism".into(),
            anchor: "druid".into(),
            depth: None,
            topics: ["299".to_owned()].into(),
            lexicon_path: None,
        })
        .unwrap();
        assert_eq!(r.dots.len(), 3);
        assert_eq!(r.prefixes, Some(["299".to_owned()].into()));
        assert_eq!(r.on_topic, Some(true));
    }

    #[test]
    fn galaxy_without_matches_has_no_region() {
        let r = galaxy(&GalaxyRequest {
            text: "zzz qqq".into(),
            anchor: String::new(),
            depth: Some(2),
            topics: BTreeSet::new(),
            lexicon_path: None,
        })
        .unwrap();
        assert!(r.dots.is_empty() && r.prefixes.is_none());
        assert_eq!(r.on_topic, None);
    }

    #[test]
    fn config_source_needs_something() {
        assert_eq!(ConfigSource::default().resolve().unwrap_err().kind, ErrorKind::BadRequest);
        let inline = ConfigSource {
            config: Some(CrawlConfig {
                seeds: vec![Url::parse("http://a.test/").unwrap()],
                topics: ["299".to_owned()].into(),
                corpus_path: Some("/tmp".into()),
                ..CrawlConfig::default()
            }),
            overrides: vec![("max_pages".into(), "7".into())],
            ..ConfigSource::default()
        };
        assert_eq!(inline.resolve().unwrap().max_pages, 7);
        let bad = ConfigSource {
            overrides: vec![("nope".into(), "1".into())],
            ..inline
        };
        assert!(bad.resolve().is_err());
    }

    #[test]
    fn treasure_classification_needs_a_graph() {
        let err = classify(&ClassifyRequest {
            url: "http://a.test/".into(),
            html: "<p>x</p>".into(),
            topics: ["299".to_owned()].into(),
            strategy: None,
            tgraph_path: None,
            lexicon_path: None,
        })
        .unwrap_err();
        assert_eq!(err.kind, ErrorKind::BadRequest);
    }

    #[test]
    fn anchor_only_classification() {
        let r = classify(&ClassifyRequest {
            url: "http://a.test/".into(),
            html: "<h1>Shinto</h1><p>shrines <a href=\"/t\">taoism</a> and <a href=\"/c\">recipe</a></p>".into(),
            topics: ["299".to_owned()].into(),
            strategy: Some(Strategy::BestFirstAnchorOnly),
            tgraph_path: None,
            lexicon_path: None,
        })
        .unwrap();
        assert!(r.on_topic);
        let flags: Vec<bool> = r.links.iter().map(|l| l.on_topic).collect();
        assert_eq!(flags, [true, false]);
    }
}
