//! Append-only crawl repository.
//!
//! Layout of a repository directory:
//!
//! * `meta.json`: the scoring settings every record was produced under
//! * `records.jsonl`: one JSON [`CrawlRecord`] per line, append-only
//! * `index.tsv`: `cycle<TAB>fetched_at<TAB>offset<TAB>length<TAB>url`, one
//!   line per record, pointing into `records.jsonl`
//! * `pages/<sha256>.html`: raw bytes of every successfully fetched page

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use url::Url;

use crate::galaxy::is_on_topic;
use crate::galaxy::TopicConfig;

use super::config::Strategy;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const INDEX_FILE: &str = "index.tsv";
pub const META_FILE: &str = "meta.json";
pub const PAGES_DIR: &str = "pages";

/// Tolerance when re-deriving a stored priority; covers the last-place
/// rounding of a decimal round trip.
const PRIORITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RepositoryError {
    #[error("repository I/O: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt repository file {file}: {message}")]
    Corrupt { file: String, message: String },
    #[error("repository at {0} was written with different settings")]
    MetaMismatch(PathBuf),
}

/// Settings needed to re-derive every stored priority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepositoryMeta {
    pub strategy: Strategy,
    pub topics: TopicConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeSummary {
    Success {
        final_url: Url,
        content_type: Option<String>,
        bytes: usize,
    },
    HttpError {
        code: u16,
    },
    NetworkError {
        error: String,
    },
    RobotsDenied,
    Skipped {
        reason: String,
    },
}

/// Where a link's priority came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkBasis {
    /// Galaxy missing or outside the topics: the off-topic floor.
    OffTopic,
    /// T-Graph match; priority is the reciprocal of the distance.
    Matched { min_distance: u32 },
    /// No T-Graph node matched; priority from the level count.
    Fallback { level_count: u32 },
    /// On-topic by anchor text alone.
    AnchorOnly,
    /// Strategy does not rank links.
    Unscored,
}

impl LinkBasis {
    pub fn priority(self, topics: &TopicConfig) -> f64 {
        match self {
            LinkBasis::OffTopic => topics.off_topic_priority,
            LinkBasis::Matched { min_distance } => 1.0 / f64::from(min_distance.max(1)),
            LinkBasis::Fallback { level_count } => 1.0 / (f64::from(level_count) + 1.0),
            LinkBasis::AnchorOnly | LinkBasis::Unscored => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnqueueResult {
    Accepted,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub url: Url,
    pub prefixes: BTreeSet<String>,
    pub on_topic: bool,
    pub priority: f64,
    pub basis: LinkBasis,
    pub enqueued: EnqueueResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlRecord {
    pub cycle: u64,
    pub url: Url,
    /// Milliseconds since the Unix epoch for live crawls; the cycle number
    /// for corpus crawls, so that reruns are byte-identical.
    pub fetched_at: u64,
    pub outcome: OutcomeSummary,
    pub page_prefixes: BTreeSet<String>,
    pub on_topic: bool,
    pub links: Vec<LinkRecord>,
    /// SHA-256 of the raw page, naming its file under `pages/`.
    pub raw_html: Option<String>,
    /// Why a fetched page yielded no links (non-HTML, over the size cap).
    pub note: Option<String>,
}

impl CrawlRecord {
    pub fn is_fetched(&self) -> bool {
        matches!(self.outcome, OutcomeSummary::Success { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordQuery {
    pub url: Option<Url>,
    /// Matches records whose page prefixes start with this topic.
    pub topic: Option<String>,
    pub since: Option<u64>,
    pub until: Option<u64>,
}

impl RecordQuery {
    pub fn matches(&self, r: &CrawlRecord) -> bool {
        self.url.as_ref().is_none_or(|u| *u == r.url)
            && self
                .topic
                .as_ref()
                .is_none_or(|t| r.page_prefixes.iter().any(|p| p.starts_with(t.as_str())))
            && self.since.is_none_or(|s| r.fetched_at >= s)
            && self.until.is_none_or(|u| r.fetched_at <= u)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based line in `records.jsonl`, 0 for repository-wide problems.
    pub line: usize,
    pub url: Option<Url>,
    pub message: String,
}

/// Byte lengths of the append-only files, as saved in checkpoints.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreLengths {
    pub records: u64,
    pub index: u64,
}

#[derive(Debug)]
pub struct Repository {
    dir: PathBuf,
    meta: RepositoryMeta,
    records: File,
    index: File,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn append_handle(path: &Path) -> io::Result<File> {
    OpenOptions::new().create(true).append(true).read(true).open(path)
}

impl Repository {
    /// Opens a repository, creating it if needed. An existing repository
    /// must have been written under the same settings.
    pub fn open_or_create(dir: &Path, meta: RepositoryMeta) -> Result<Self, RepositoryError> {
        fs::create_dir_all(dir.join(PAGES_DIR))?;
        let meta_path = dir.join(META_FILE);
        if meta_path.exists() {
            let existing = Self::read_meta(dir)?;
            if existing != meta {
                return Err(RepositoryError::MetaMismatch(dir.to_owned()));
            }
        } else {
            let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
            fs::write(&meta_path, text + "\n")?;
        }
        Ok(Repository {
            records: append_handle(&dir.join(RECORDS_FILE))?,
            index: append_handle(&dir.join(INDEX_FILE))?,
            dir: dir.to_owned(),
            meta,
        })
    }

    /// Opens an existing repository for reading and checking.
    pub fn open(dir: &Path) -> Result<Self, RepositoryError> {
        let meta = Self::read_meta(dir)?;
        Self::open_or_create(dir, meta)
    }

    fn read_meta(dir: &Path) -> Result<RepositoryMeta, RepositoryError> {
        let text = fs::read_to_string(dir.join(META_FILE))?;
        serde_json::from_str(&text).map_err(|e| RepositoryError::Corrupt {
            file: META_FILE.into(),
            message: e.to_string(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn meta(&self) -> &RepositoryMeta {
        &self.meta
    }

    pub fn page_path(&self, hash: &str) -> PathBuf {
        self.dir.join(PAGES_DIR).join(format!("{hash}.html"))
    }

    /// Appends a record; `raw` is stored content-addressed and its hash
    /// placed in the record.
    pub fn store(&mut self, mut record: CrawlRecord, raw: Option<&[u8]>) -> Result<CrawlRecord, RepositoryError> {
        if let Some(raw) = raw {
            let hash = sha256_hex(raw);
            let path = self.page_path(&hash);
            if !path.exists() {
                let tmp = path.with_extension("tmp");
                fs::write(&tmp, raw)?;
                fs::rename(&tmp, &path)?;
            }
            record.raw_html = Some(hash);
        }
        let mut line = serde_json::to_string(&record).expect("records serialize");
        line.push('\n');
        let offset = self.records.seek(SeekFrom::End(0))?;
        self.records.write_all(line.as_bytes())?;
        self.records.flush()?;
        writeln!(
            self.index,
            "{}\t{}\t{}\t{}\t{}",
            record.cycle,
            record.fetched_at,
            offset,
            line.len(),
            record.url
        )?;
        self.index.flush()?;
        Ok(record)
    }

    pub fn lengths(&self) -> Result<StoreLengths, RepositoryError> {
        Ok(StoreLengths {
            records: self.records.metadata()?.len(),
            index: self.index.metadata()?.len(),
        })
    }

    /// Drops everything appended after a checkpoint.
    pub fn truncate_to(&mut self, lengths: StoreLengths) -> Result<(), RepositoryError> {
        self.records.set_len(lengths.records)?;
        self.index.set_len(lengths.index)?;
        Ok(())
    }

    pub fn sync(&self) -> Result<(), RepositoryError> {
        self.records.sync_data()?;
        self.index.sync_data()?;
        Ok(())
    }

    /// All records in append order.
    pub fn records(&self) -> Result<Vec<CrawlRecord>, RepositoryError> {
        self.load_records(&RecordQuery::default())
    }

    pub fn load_records(&self, query: &RecordQuery) -> Result<Vec<CrawlRecord>, RepositoryError> {
        let file = File::open(self.dir.join(RECORDS_FILE))?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let r: CrawlRecord = serde_json::from_str(&line).map_err(|e| RepositoryError::Corrupt {
                file: RECORDS_FILE.into(),
                message: format!("line {}: {e}", i + 1),
            })?;
            if query.matches(&r) {
                out.push(r);
            }
        }
        Ok(out)
    }

    /// Re-derives every stored measurement from the stored inputs and
    /// reports each disagreement.
    pub fn check(&self) -> Result<Vec<Violation>, RepositoryError> {
        let mut violations = Vec::new();
        let mut raw = String::new();
        File::open(self.dir.join(RECORDS_FILE))?.read_to_string(&mut raw)?;
        let index_text = fs::read_to_string(self.dir.join(INDEX_FILE))?;
        let mut index = index_text.lines();
        let topics = &self.meta.topics;
        let mut offset = 0usize;
        let mut fetched = BTreeSet::new();
        for (i, line) in raw.split_inclusive('\n').enumerate() {
            let lineno = i + 1;
            let mut flag = |url: Option<&Url>, message: String| {
                violations.push(Violation {
                    line: lineno,
                    url: url.cloned(),
                    message,
                })
            };
            let record: CrawlRecord = match serde_json::from_str(line.trim_end()) {
                Ok(r) => r,
                Err(e) => {
                    flag(None, format!("unreadable record: {e}"));
                    offset += line.len();
                    index.next();
                    continue;
                }
            };
            let url = Some(&record.url);
            let expected = format!(
                "{}\t{}\t{}\t{}\t{}",
                record.cycle,
                record.fetched_at,
                offset,
                line.len(),
                record.url
            );
            match index.next() {
                Some(got) if got == expected => {}
                Some(got) => flag(url, format!("index line `{got}` does not match record")),
                None => flag(url, "record missing from index".into()),
            }
            offset += line.len();
            if record.is_fetched() && !fetched.insert(record.url.clone()) {
                flag(url, "URL fetched twice".into());
            }
            if record.on_topic != is_on_topic(Some(&record.page_prefixes), topics) {
                flag(url, "page on-topic flag disagrees with its prefixes".into());
            }
            if let Some(hash) = &record.raw_html {
                match fs::read(self.page_path(hash)) {
                    Ok(bytes) if sha256_hex(&bytes) == *hash => {}
                    Ok(_) => flag(url, format!("page file {hash} does not match its hash")),
                    Err(_) => flag(url, format!("page file {hash} is missing")),
                }
            }
            for link in &record.links {
                let on_topic = is_on_topic(Some(&link.prefixes), topics);
                if link.on_topic != on_topic {
                    flag(url, format!("link {}: on-topic flag disagrees with its prefixes", link.url));
                    continue;
                }
                let basis_ok = match (self.meta.strategy, link.basis) {
                    (Strategy::BreadthFirst, b) => b == LinkBasis::Unscored,
                    (_, LinkBasis::OffTopic) => !on_topic,
                    (Strategy::Treasure, LinkBasis::Matched { .. } | LinkBasis::Fallback { .. }) => on_topic,
                    (Strategy::BestFirstAnchorOnly, LinkBasis::AnchorOnly) => on_topic,
                    _ => false,
                };
                if !basis_ok {
                    flag(url, format!("link {}: basis {:?} not valid here", link.url, link.basis));
                    continue;
                }
                let derived = link.basis.priority(topics);
                if (link.priority - derived).abs() > PRIORITY_TOLERANCE {
                    flag(
                        url,
                        format!("link {}: stored priority {} but inputs give {}", link.url, link.priority, derived),
                    );
                }
            }
        }
        if index.next().is_some() {
            violations.push(Violation {
                line: 0,
                url: None,
                message: "index has entries beyond the last record".into(),
            });
        }
        Ok(violations)
    }
}
