//! The crawl loop.
//!
//! One iteration is one cycle: dequeue the best URL, fetch it, run the
//! relevance pipeline on the result, store the record and enqueue the
//! scored links. The loop is single-threaded, which makes corpus crawls
//! reproducible byte for byte.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, info, warn};
use url::Url;

use crate::galaxy::{classify_anchor_only, classify_link, classify_page, is_on_topic, TopicConfig};
use crate::html::{extract_page_elements, parse_html};
use crate::lexicon::DdcLexicon;
use crate::tgraph::{LinkContext, ScoreBasis, TGraph};

use super::config::{AdapterKind, CrawlConfig, Strategy};
use super::corpus::CorpusManifest;
use super::fetch::{CorpusFetcher, FetchOutcome, FetchStatus, Fetcher, LiveFetcher, LiveOptions};
use super::frontier::{Enqueued, Frontier, FrontierError, FrontierState, QueueDiscipline};
use super::repository::{
    CrawlRecord, EnqueueResult, LinkBasis, LinkRecord, OutcomeSummary, Repository, RepositoryError,
    RepositoryMeta, StoreLengths, INDEX_FILE, META_FILE, PAGES_DIR, RECORDS_FILE,
};

pub const CRAWL_LOG_FILE: &str = "crawl_order.log";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot load lexicon {path}: {message}")]
    Lexicon { path: PathBuf, message: String },
    #[error("cannot load T-Graph {path}: {message}")]
    TGraph { path: PathBuf, message: String },
    #[error("the {0} strategy needs tgraph_path")]
    MissingTGraph(Strategy),
    #[error("cannot load corpus: {0}")]
    Corpus(String),
    #[error("cannot start HTTP client: {0}")]
    Http(String),
    #[error("{0}")]
    Repository(#[from] RepositoryError),
    #[error("crawl storage: {0}")]
    Io(#[from] io::Error),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("repository {0} already holds a crawl; resume it or start fresh")]
    NotEmpty(PathBuf),
    #[error("frontier: {0}")]
    Frontier(#[from] FrontierError),
}

/// Read-only inputs of the relevance pipeline.
#[derive(Debug, Clone, Copy)]
pub struct ProcessDeps<'a> {
    pub lexicon: &'a DdcLexicon,
    /// Required by the treasure strategy only.
    pub tgraph: Option<&'a TGraph>,
    pub topics: &'a TopicConfig,
    pub strategy: Strategy,
    pub size_cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedPage {
    /// Links are marked accepted until the frontier says otherwise.
    pub record: CrawlRecord,
    pub enqueue: Vec<(Url, f64)>,
}

fn is_html(content_type: Option<&str>) -> bool {
    content_type.is_none_or(|ct| {
        let ct = ct.to_ascii_lowercase();
        ct.contains("html") || ct.trim().is_empty()
    })
}

fn charset(content_type: Option<&str>) -> Option<&str> {
    content_type?
        .split(';')
        .filter_map(|p| p.trim().split_once('='))
        .find(|(k, _)| k.trim().eq_ignore_ascii_case("charset"))
        .map(|(_, v)| v.trim().trim_matches('"'))
}

fn summarize(status: &FetchStatus) -> OutcomeSummary {
    match status {
        FetchStatus::Success {
            final_url,
            body,
            content_type,
        } => OutcomeSummary::Success {
            final_url: final_url.clone(),
            content_type: content_type.clone(),
            bytes: body.len(),
        },
        FetchStatus::HttpError { code } => OutcomeSummary::HttpError { code: *code },
        FetchStatus::NetworkError { error } => OutcomeSummary::NetworkError { error: error.clone() },
        FetchStatus::RobotsDenied => OutcomeSummary::RobotsDenied,
        FetchStatus::Skipped { reason } => OutcomeSummary::Skipped { reason: reason.clone() },
    }
}

/// Parses a fetched page, classifies it and scores its links. Failed
/// fetches and non-HTML bodies produce a record without links.
pub fn process_page(outcome: &FetchOutcome, cycle: u64, fetched_at: u64, deps: &ProcessDeps<'_>) -> ProcessedPage {
    let mut record = CrawlRecord {
        cycle,
        url: outcome.url.clone(),
        fetched_at,
        outcome: summarize(&outcome.status),
        page_prefixes: BTreeSet::new(),
        on_topic: false,
        links: Vec::new(),
        raw_html: None,
        note: None,
    };
    let FetchStatus::Success {
        final_url,
        body,
        content_type,
    } = &outcome.status
    else {
        return ProcessedPage {
            record,
            enqueue: Vec::new(),
        };
    };
    let content_type = content_type.as_deref();
    if !is_html(content_type) {
        record.note = Some("non-HTML content".into());
        return ProcessedPage {
            record,
            enqueue: Vec::new(),
        };
    }
    let tree = match parse_html(body, charset(content_type), deps.size_cap) {
        Ok(t) => t,
        Err(e) => {
            record.note = Some(format!("parse skipped: {e}"));
            return ProcessedPage {
                record,
                enqueue: Vec::new(),
            };
        }
    };
    let page = extract_page_elements(&tree, final_url);
    if let Some(g) = classify_page(&page, deps.lexicon, deps.topics) {
        record.page_prefixes = g.prefixes;
    }
    record.on_topic = is_on_topic(Some(&record.page_prefixes), deps.topics);

    let mut enqueue = Vec::with_capacity(page.links.len());
    for link in &page.links {
        let galaxy = match deps.strategy {
            Strategy::BestFirstAnchorOnly => classify_anchor_only(link, deps.lexicon, deps.topics),
            Strategy::Treasure | Strategy::BreadthFirst => classify_link(link, deps.lexicon, deps.topics),
        };
        let prefixes = galaxy.map(|g| g.prefixes).unwrap_or_default();
        let on_topic = is_on_topic(Some(&prefixes), deps.topics);
        let basis = match (deps.strategy, on_topic) {
            (Strategy::BreadthFirst, _) => LinkBasis::Unscored,
            (_, false) => LinkBasis::OffTopic,
            (Strategy::BestFirstAnchorOnly, true) => LinkBasis::AnchorOnly,
            (Strategy::Treasure, true) => {
                let graph = deps.tgraph.expect("treasure strategy runs with a T-Graph");
                match graph.score_link(&LinkContext::from_link(link)) {
                    ScoreBasis::Matched { min_distance } => LinkBasis::Matched { min_distance },
                    ScoreBasis::Fallback { level_count } => LinkBasis::Fallback { level_count },
                }
            }
        };
        let priority = basis.priority(deps.topics);
        enqueue.push((link.absolute_url.clone(), priority));
        record.links.push(LinkRecord {
            url: link.absolute_url.clone(),
            prefixes,
            on_topic,
            priority,
            basis,
            enqueued: EnqueueResult::Accepted,
        });
    }
    ProcessedPage { record, enqueue }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CrawlOptions {
    /// Continue from the last checkpoint instead of starting over.
    pub resume: bool,
    /// Clear an existing repository before starting.
    pub fresh: bool,
    /// Stop without a final checkpoint once this many pages have been
    /// attempted in total; simulates an interruption.
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxPages,
    FrontierExhausted,
    Interrupted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub pages_attempted: usize,
    pub fetched: usize,
    pub http_errors: usize,
    pub network_errors: usize,
    pub robots_denied: usize,
    /// Fetch-level skips plus pages that could not be parsed.
    pub skipped: usize,
    pub non_html: usize,
    pub on_topic_pages: usize,
    pub links_seen: usize,
    pub links_enqueued: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlSummary {
    pub strategy: Strategy,
    pub stop_reason: StopReason,
    pub counters: Counters,
    pub cycles: u64,
    pub frontier_remaining: usize,
    pub robots_failures: usize,
    pub repository: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    cycle: u64,
    counters: Counters,
    frontier: FrontierState,
    /// Final URLs already fetched, so redirects cannot cause refetches.
    fetched: BTreeSet<String>,
    store: StoreLengths,
    log_len: u64,
}

pub fn load_lexicon(path: Option<&Path>) -> Result<DdcLexicon, CrawlError> {
    let Some(path) = path else {
        return Ok(DdcLexicon::seed());
    };
    let err = |message: String| CrawlError::Lexicon {
        path: path.to_owned(),
        message,
    };
    let file = File::open(path).map_err(|e| err(e.to_string()))?;
    let load = DdcLexicon::load(BufReader::new(file)).map_err(|e| err(e.to_string()))?;
    for d in &load.diagnostics {
        warn!(lexicon = %path.display(), "{d}");
    }
    if load.lexicon.is_empty() {
        return Err(err("no usable entries".into()));
    }
    Ok(load.lexicon)
}

pub fn load_tgraph(path: &Path) -> Result<TGraph, CrawlError> {
    let err = |message: String| CrawlError::TGraph {
        path: path.to_owned(),
        message,
    };
    let bytes = fs::read(path).map_err(|e| err(e.to_string()))?;
    TGraph::from_json(&bytes).map_err(|e| err(e.to_string()))
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn clear_repository(dir: &Path, checkpoint: &Path) -> io::Result<()> {
    for name in [RECORDS_FILE, INDEX_FILE, META_FILE, CRAWL_LOG_FILE] {
        match fs::remove_file(dir.join(name)) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e),
            _ => {}
        }
    }
    match fs::remove_file(checkpoint) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e),
        _ => {}
    }
    match fs::remove_dir_all(dir.join(PAGES_DIR)) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

fn make_fetcher(config: &CrawlConfig) -> Result<Box<dyn Fetcher>, CrawlError> {
    match config.adapter {
        AdapterKind::Corpus => {
            let root = config
                .corpus_path
                .as_deref()
                .ok_or_else(|| CrawlError::Config("corpus adapter needs corpus_path".into()))?;
            let manifest = CorpusManifest::load(root).map_err(|e| CrawlError::Corpus(e.to_string()))?;
            Ok(Box::new(CorpusFetcher::new(manifest)))
        }
        AdapterKind::Live => {
            let live = LiveFetcher::new(LiveOptions {
                user_agent: config.user_agent.clone(),
                delay: Duration::from_millis(config.delay_ms),
                timeout: Duration::from_secs(config.timeout_secs.max(1)),
                size_cap: config.size_cap,
                robots_ttl: Duration::from_secs(config.robots_ttl_secs),
            })
            .map_err(|e| CrawlError::Http(e.to_string()))?;
            Ok(Box::new(live))
        }
    }
}

/// Runs a crawl to completion (or to `options.stop_after`).
pub fn run_crawl(config: &CrawlConfig, options: CrawlOptions) -> Result<CrawlSummary, CrawlError> {
    config.validate().map_err(|e| CrawlError::Config(e.to_string()))?;
    let topics = config.topic_config().map_err(|e| CrawlError::Config(e.to_string()))?;
    let lexicon = load_lexicon(config.lexicon_path.as_deref())?;
    let tgraph = match (&config.tgraph_path, config.strategy) {
        (Some(p), _) => {
            let mut g = load_tgraph(p)?;
            g.set_osm_threshold(config.osm_threshold);
            Some(g)
        }
        (None, Strategy::Treasure) => return Err(CrawlError::MissingTGraph(Strategy::Treasure)),
        (None, _) => None,
    };
    let mut fetcher = make_fetcher(config)?;
    let logical_time = config.adapter == AdapterKind::Corpus;

    let dir = &config.repository_path;
    let checkpoint_path = config.checkpoint_file();
    if options.fresh && !options.resume {
        clear_repository(dir, &checkpoint_path)?;
    }
    let meta = RepositoryMeta {
        strategy: config.strategy,
        topics: topics.clone(),
    };
    let mut repo = Repository::open_or_create(dir, meta)?;
    let log_path = dir.join(CRAWL_LOG_FILE);
    let mut log = OpenOptions::new().create(true).append(true).read(true).open(&log_path)?;

    let discipline = match config.strategy {
        Strategy::BreadthFirst => QueueDiscipline::Fifo,
        _ => QueueDiscipline::Priority,
    };
    let checkpoint_err = |message: String| CrawlError::Checkpoint {
        path: checkpoint_path.clone(),
        message,
    };

    let (mut frontier, mut cycle, mut counters, mut fetched) = if options.resume && checkpoint_path.exists() {
        let text = fs::read(&checkpoint_path)?;
        let cp: Checkpoint = serde_json::from_slice(&text).map_err(|e| checkpoint_err(e.to_string()))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(checkpoint_err(format!("unsupported version {}", cp.version)));
        }
        repo.truncate_to(cp.store)?;
        log.set_len(cp.log_len)?;
        info!(cycle = cp.cycle, pages = cp.counters.pages_attempted, "resuming crawl");
        (Frontier::restore(&cp.frontier)?, cp.cycle, cp.counters, cp.fetched)
    } else {
        if repo.lengths()?.records > 0 || log.metadata()?.len() > 0 {
            return Err(CrawlError::NotEmpty(dir.clone()));
        }
        let mut f = Frontier::new(discipline, config.aging_delta)?;
        for seed in &config.seeds {
            f.enqueue(seed, 1.0, 0)?;
        }
        (f, 0u64, Counters::default(), BTreeSet::new())
    };

    let deps = ProcessDeps {
        lexicon: &lexicon,
        tgraph: tgraph.as_ref(),
        topics: &topics,
        strategy: config.strategy,
        size_cap: config.size_cap,
    };

    let save_checkpoint = |repo: &Repository,
                           log: &File,
                           frontier: &Frontier,
                           cycle: u64,
                           counters: Counters,
                           fetched: &BTreeSet<String>|
     -> Result<(), CrawlError> {
        repo.sync()?;
        log.sync_data()?;
        let cp = Checkpoint {
            version: CHECKPOINT_VERSION,
            cycle,
            counters,
            frontier: frontier.snapshot(),
            fetched: fetched.clone(),
            store: repo.lengths()?,
            log_len: log.metadata()?.len(),
        };
        let text = serde_json::to_vec(&cp).map_err(|e| checkpoint_err(e.to_string()))?;
        write_atomic(&checkpoint_path, &text)?;
        debug!(cycle, "checkpoint written");
        Ok(())
    };

    let stop_reason = loop {
        if counters.pages_attempted >= config.max_pages {
            break StopReason::MaxPages;
        }
        if options.stop_after.is_some_and(|n| counters.pages_attempted >= n) {
            break StopReason::Interrupted;
        }
        let Some(item) = frontier.dequeue_highest(cycle) else {
            break StopReason::FrontierExhausted;
        };
        writeln!(
            log,
            "{cycle}\t{}\t{}\t{}",
            item.url, item.base_priority, item.effective_priority
        )?;
        let fetched_at = if logical_time { cycle } else { now_millis() };
        let outcome = if fetched.contains(item.url.as_str()) {
            FetchOutcome {
                url: item.url.clone(),
                status: FetchStatus::Skipped {
                    reason: "already fetched through a redirect".into(),
                },
            }
        } else {
            let mut outcome = fetcher.fetch(&item.url);
            if let FetchStatus::Success { final_url, .. } = &outcome.status {
                if !fetched.insert(final_url.as_str().to_owned()) {
                    outcome.status = FetchStatus::Skipped {
                        reason: format!("redirects to already fetched {final_url}"),
                    };
                } else {
                    frontier.mark_seen(final_url);
                }
            }
            fetched.insert(item.url.as_str().to_owned());
            outcome
        };
        let raw = match &outcome.status {
            FetchStatus::Success { body, .. } => Some(body.clone()),
            _ => None,
        };
        let ProcessedPage { mut record, enqueue } = process_page(&outcome, cycle, fetched_at, &deps);
        cycle += 1;
        counters.pages_attempted += 1;
        match &outcome.status {
            FetchStatus::Success { .. } => counters.fetched += 1,
            FetchStatus::HttpError { .. } => counters.http_errors += 1,
            FetchStatus::NetworkError { .. } => counters.network_errors += 1,
            FetchStatus::RobotsDenied => counters.robots_denied += 1,
            FetchStatus::Skipped { .. } => counters.skipped += 1,
        }
        match record.note.as_deref() {
            Some(n) if n.starts_with("non-HTML") => counters.non_html += 1,
            Some(_) => counters.skipped += 1,
            None => {}
        }
        counters.on_topic_pages += usize::from(record.on_topic);
        for (link, (url, priority)) in record.links.iter_mut().zip(&enqueue) {
            counters.links_seen += 1;
            link.enqueued = match frontier.enqueue(url, *priority, cycle)? {
                Enqueued::Accepted => {
                    counters.links_enqueued += 1;
                    EnqueueResult::Accepted
                }
                Enqueued::Duplicate => EnqueueResult::Duplicate,
            };
        }
        let stored_raw = if record.note.is_none() { raw.as_deref() } else { None };
        repo.store(record, stored_raw)?;
        if config.checkpoint_every > 0 && counters.pages_attempted % config.checkpoint_every == 0 {
            save_checkpoint(&repo, &log, &frontier, cycle, counters, &fetched)?;
        }
    };
    log.flush()?;
    if stop_reason != StopReason::Interrupted {
        save_checkpoint(&repo, &log, &frontier, cycle, counters, &fetched)?;
    }
    let summary = CrawlSummary {
        strategy: config.strategy,
        stop_reason,
        counters,
        cycles: cycle,
        frontier_remaining: frontier.len(),
        robots_failures: fetcher.robots_failures(),
        repository: dir.clone(),
    };
    info!(?stop_reason, pages = counters.pages_attempted, "crawl finished");
    Ok(summary)
}
