//! Harvest ratio, precision and recall over a stored crawl.
//!
//! * harvest ratio: relevant fetched pages / fetched pages
//! * precision: relevant pages stored as on-topic / pages stored as on-topic
//! * recall: relevant fetched pages / pages labeled relevant
//!
//! Pages without a label count as fetched but never as relevant.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::crawl::repository::{CrawlRecord, OutcomeSummary};
use crate::html::canonical_url;

use super::{io_err, EvalError};

pub const DEFAULT_CURVE_EVERY: usize = 1000;
pub const METRICS_CSV: &str = "metrics.csv";
pub const CURVE_CSV: &str = "harvest_curve.csv";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels {
    map: BTreeMap<Url, bool>,
}

impl Labels {
    pub fn new() -> Self {
        Labels::default()
    }

    pub fn insert(&mut self, url: Url, relevant: bool) {
        self.map.insert(url, relevant);
    }

    pub fn get(&self, url: &Url) -> Option<bool> {
        self.map.get(url).copied()
    }

    pub fn relevant_count(&self) -> usize {
        self.map.values().filter(|r| **r).count()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `url<TAB>relevant|irrelevant` lines, sorted by URL.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (url, rel) in &self.map {
            out.push_str(&format!("{url}\t{}\n", if *rel { "relevant" } else { "irrelevant" }));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut labels = Labels::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| format!("labels line {}: {m}", idx + 1);
            let (url, value) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `url<TAB>label`".into()))?;
            let relevant = match value.trim().to_ascii_lowercase().as_str() {
                "relevant" | "1" | "true" | "yes" => true,
                "irrelevant" | "0" | "false" | "no" => false,
                other => return Err(err(format!("unknown label `{other}`"))),
            };
            let url = canonical_url(url).map_err(|e| err(format!("{url}: {e}")))?;
            labels.insert(url, relevant);
        }
        Ok(labels)
    }
}

pub fn load_labels(path: &Path) -> Result<Labels, EvalError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Labels::parse(&text).map_err(EvalError::Invalid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub pages_fetched: usize,
    pub relevant_fetched: usize,
    pub harvest_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pages_fetched: usize,
    pub relevant_fetched: usize,
    pub stored_on_topic: usize,
    pub relevant_on_topic: usize,
    pub labeled_relevant: usize,
    pub harvest_ratio: f64,
    pub precision: f64,
    pub recall: f64,
    pub curve: Vec<CurvePoint>,
    pub warnings: Vec<String>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Pure function of the records and labels. The curve gets a point every
/// `every` fetched pages and always ends with the totals.
pub fn compute_metrics(records: &[CrawlRecord], labels: &Labels, every: usize) -> MetricsReport {
    let every = every.max(1);
    let mut fetched = 0;
    let mut relevant = 0;
    let mut on_topic = 0;
    let mut relevant_on_topic = 0;
    let mut curve = Vec::new();
    for r in records {
        let OutcomeSummary::Success { final_url, .. } = &r.outcome else {
            continue;
        };
        fetched += 1;
        let is_relevant = labels.get(final_url).or_else(|| labels.get(&r.url)).unwrap_or(false);
        relevant += usize::from(is_relevant);
        if r.on_topic {
            on_topic += 1;
            relevant_on_topic += usize::from(is_relevant);
        }
        if fetched % every == 0 {
            curve.push(CurvePoint {
                pages_fetched: fetched,
                relevant_fetched: relevant,
                harvest_ratio: ratio(relevant, fetched),
            });
        }
    }
    if curve.last().is_none_or(|p| p.pages_fetched != fetched) {
        curve.push(CurvePoint {
            pages_fetched: fetched,
            relevant_fetched: relevant,
            harvest_ratio: ratio(relevant, fetched),
        });
    }
    let mut warnings = Vec::new();
    if fetched == 0 {
        warnings.push("no pages were fetched; all metrics are zero".to_owned());
    }
    if labels.relevant_count() == 0 {
        warnings.push("labels mark no page relevant; recall is zero".to_owned());
    }
    MetricsReport {
        pages_fetched: fetched,
        relevant_fetched: relevant,
        stored_on_topic: on_topic,
        relevant_on_topic,
        labeled_relevant: labels.relevant_count(),
        harvest_ratio: ratio(relevant, fetched),
        precision: ratio(relevant_on_topic, on_topic),
        recall: ratio(relevant, labels.relevant_count()),
        curve,
        warnings,
    }
}

pub fn metrics_csv_header() -> &'static str {
    "strategy,pages_fetched,relevant_fetched,stored_on_topic,relevant_on_topic,labeled_relevant,harvest_ratio,precision,recall"
}

pub fn metrics_csv_row(label: &str, m: &MetricsReport) -> String {
    format!(
        "{label},{},{},{},{},{},{:.6},{:.6},{:.6}",
        m.pages_fetched,
        m.relevant_fetched,
        m.stored_on_topic,
        m.relevant_on_topic,
        m.labeled_relevant,
        m.harvest_ratio,
        m.precision,
        m.recall
    )
}

/// Writes `metrics.csv` and `harvest_curve.csv` into `dir`.
pub fn write_csv(dir: &Path, label: &str, m: &MetricsReport) -> io::Result<()> {
    fs::write(
        dir.join(METRICS_CSV),
        format!("{}\n{}\n", metrics_csv_header(), metrics_csv_row(label, m)),
    )?;
    let mut curve = String::from("pages_fetched,relevant_fetched,harvest_ratio\n");
    for p in &m.curve {
        curve.push_str(&format!("{},{},{:.6}\n", p.pages_fetched, p.relevant_fetched, p.harvest_ratio));
    }
    fs::write(dir.join(CURVE_CSV), curve)
}

/// Fixed-width table for terminals.
pub fn render_table(rows: &[(String, &MetricsReport)]) -> String {
    let mut out = format!(
        "{:<24} {:>8} {:>9} {:>8} {:>9} {:>7}\n",
        "strategy", "fetched", "relevant", "harvest", "precision", "recall"
    );
    for (name, m) in rows {
        out.push_str(&format!(
            "{:<24} {:>8} {:>9} {:>8.4} {:>9.4} {:>7.4}\n",
            name, m.pages_fetched, m.relevant_fetched, m.harvest_ratio, m.precision, m.recall
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn rec(i: usize, fetched: bool, on_topic: bool) -> CrawlRecord {
        let url = Url::parse(&format!("http://h/{i}")).unwrap();
        CrawlRecord {
            cycle: i as u64,
            url: url.clone(),
            fetched_at: i as u64,
            outcome: if fetched {
                OutcomeSummary::Success {
                    final_url: url,
                    content_type: None,
                    bytes: 0,
                }
            } else {
                OutcomeSummary::HttpError { code: 404 }
            },
            page_prefixes: BTreeSet::new(),
            on_topic,
            links: vec![],
            raw_html: None,
            note: None,
        }
    }

    fn labels(relevant: &[usize], total: usize) -> Labels {
        let mut l = Labels::new();
        for i in 0..total {
            l.insert(Url::parse(&format!("http://h/{i}")).unwrap(), relevant.contains(&i));
        }
        l
    }

    #[test]
    fn counting_example() {
        // 10 fetched, 4 relevant, 5 stored on-topic of which 4 relevant
        let records: Vec<_> = (0..10).map(|i| rec(i, true, i < 5)).collect();
        let m = compute_metrics(&records, &labels(&[0, 1, 2, 3], 12), 4);
        assert_eq!(m.harvest_ratio, 0.4);
        assert_eq!(m.precision, 0.8);
        assert_eq!(m.recall, 1.0);
        let pts: Vec<usize> = m.curve.iter().map(|p| p.pages_fetched).collect();
        assert_eq!(pts, [4, 8, 10]);
        assert_eq!(m.curve.last().unwrap().harvest_ratio, m.harvest_ratio);
    }

    #[test]
    fn all_or_none_relevant() {
        let records: Vec<_> = (0..3).map(|i| rec(i, true, true)).collect();
        assert_eq!(compute_metrics(&records, &labels(&[0, 1, 2], 3), 10).harvest_ratio, 1.0);
        assert_eq!(compute_metrics(&records, &labels(&[], 3), 10).harvest_ratio, 0.0);
    }

    #[test]
    fn failed_fetches_do_not_count() {
        let records = vec![rec(0, true, false), rec(1, false, false)];
        let m = compute_metrics(&records, &labels(&[0, 1], 2), 10);
        assert_eq!(m.pages_fetched, 1);
        assert_eq!(m.recall, 0.5);
    }

    #[test]
    fn empty_repository_reports_zeros() {
        let m = compute_metrics(&[], &labels(&[0], 1), 10);
        assert_eq!((m.harvest_ratio, m.precision, m.recall), (0.0, 0.0, 0.0));
        assert!(!m.warnings.is_empty());
    }

    #[test]
    fn labels_round_trip() {
        let l = labels(&[1], 3);
        assert_eq!(Labels::parse(&l.to_text()).unwrap(), l);
        assert!(Labels::parse("http://h/\tmaybe\n").is_err());
    }
}
