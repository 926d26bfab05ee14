//! Offline evaluation: T-Graph construction from a sample snapshot,
//! synthetic corpora, harvest/precision/recall metrics and strategy
//! comparisons.

pub mod generate;
pub mod metrics;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::crawl::config::{AdapterKind, CrawlConfig, Strategy};
use crate::crawl::corpus::CorpusManifest;
use crate::crawl::engine::{run_crawl, CrawlError, CrawlOptions, CrawlSummary};
use crate::crawl::repository::Repository;
use crate::html::{canonical_url, extract_page_elements, parse_html};
use crate::tgraph::{SamplePage, TGraph};

pub use generate::{generate_corpus, CorpusParams, GeneratedCorpus};
pub use metrics::{compute_metrics, load_labels, CurvePoint, Labels, MetricsReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Crawl(#[from] CrawlError),
    #[error("T-Graph construction failed: {0}")]
    TGraph(#[from] crate::tgraph::TGraphError),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Reads a URL list: one URL per line, `#` comments allowed.
pub fn read_url_list(path: &Path) -> Result<Vec<Url>, EvalError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| canonical_url(l).map_err(|e| EvalError::Invalid(format!("{}: `{l}`: {e}", path.display()))))
        .collect()
}

/// Parses every stored 2xx page of a snapshot.
pub fn load_sample(root: &Path, size_cap: usize) -> Result<Vec<SamplePage>, EvalError> {
    let manifest = CorpusManifest::load(root).map_err(|e| EvalError::Invalid(e.to_string()))?;
    let mut pages = Vec::new();
    for (url, entry) in manifest.iter() {
        if !(200..300).contains(&entry.status) {
            continue;
        }
        let body = manifest.read_body(entry).map_err(io_err(&root.join(&entry.path)))?;
        match parse_html(&body, None, size_cap) {
            Ok(tree) => pages.push(SamplePage {
                url: url.clone(),
                elements: extract_page_elements(&tree, url),
            }),
            Err(e) => tracing::warn!(%url, "sample page skipped: {e}"),
        }
    }
    Ok(pages)
}

/// Builds a T-Graph from a sample snapshot and writes it to `output`.
pub fn build_tgraph(
    sample_root: &Path,
    targets: &[Url],
    output: &Path,
    osm_threshold: f64,
) -> Result<TGraph, EvalError> {
    let pages = load_sample(sample_root, crate::html::DEFAULT_SIZE_CAP)?;
    let targets: BTreeSet<Url> = targets.iter().cloned().collect();
    let graph = TGraph::build_from_corpus(&pages, &targets, osm_threshold)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(output, graph.to_json()).map_err(io_err(output))?;
    Ok(graph)
}

/// Metrics for the crawl stored in a repository directory.
pub fn metrics_for_repository(repo_dir: &Path, labels: &Labels, every: usize) -> Result<MetricsReport, EvalError> {
    let repo = Repository::open(repo_dir).map_err(|e| EvalError::Invalid(e.to_string()))?;
    let records = repo.records().map_err(|e| EvalError::Invalid(e.to_string()))?;
    Ok(compute_metrics(&records, labels, every))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub summary: CrawlSummary,
    pub metrics: MetricsReport,
}

/// Runs each strategy on the same snapshot and budget. Each run gets its
/// own repository under `output_dir/<strategy>`, cleared first; a strategy
/// listed twice is run twice into the same directory.
pub fn compare(
    config: &CrawlConfig,
    strategies: &[Strategy],
    labels: &Labels,
    output_dir: &Path,
    every: usize,
) -> Result<Vec<StrategyResult>, EvalError> {
    if config.adapter != AdapterKind::Corpus {
        return Err(EvalError::Invalid(
            "compare needs a frozen corpus; the live adapter is refused".into(),
        ));
    }
    if strategies.is_empty() {
        return Err(EvalError::Invalid("no strategies requested".into()));
    }
    let mut results = Vec::new();
    for &strategy in strategies {
        let mut cfg = config.clone();
        cfg.strategy = strategy;
        cfg.repository_path = output_dir.join(strategy.name());
        cfg.checkpoint_path = None;
        let summary = run_crawl(
            &cfg,
            CrawlOptions {
                fresh: true,
                ..CrawlOptions::default()
            },
        )?;
        let metrics = metrics_for_repository(&cfg.repository_path, labels, every)?;
        metrics::write_csv(&cfg.repository_path, strategy.name(), &metrics).map_err(io_err(&cfg.repository_path))?;
        results.push(StrategyResult {
            strategy,
            summary,
            metrics,
        });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_lists_skip_comments() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.txt");
        fs::write(&p, "# targets\nhttp://A/x#y\n\n  http://b/  \n").unwrap();
        let urls = read_url_list(&p).unwrap();
        assert_eq!(urls.len(), 2);
        assert_eq!(urls[0].as_str(), "http://a/x");
        fs::write(&p, "mailto:x@y\n").unwrap();
        assert!(read_url_list(&p).is_err());
    }

    #[test]
    fn zero_targets_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        CorpusManifest::new(dir.path()).save().unwrap();
        let err = build_tgraph(dir.path(), &[], &dir.path().join("g.json"), 0.05).unwrap_err();
        assert!(matches!(err, EvalError::TGraph(_)));
    }
}
