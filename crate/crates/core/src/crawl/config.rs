//! Crawler configuration: a flat `key = value` text file.
//!
//! Lines starting with `#` are comments. `seeds` and `topics` take
//! comma- or space-separated lists and may be repeated. Relative paths are
//! resolved against the directory holding the file.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::galaxy::{TopicConfig, DEFAULT_OFF_TOPIC_PRIORITY, DEFAULT_REFINEMENT_DEPTH};
use crate::html::{canonical_url, DEFAULT_SIZE_CAP};
use crate::tgraph::DEFAULT_OSM_THRESHOLD;

use super::frontier::DEFAULT_AGING_DELTA;

pub const DEFAULT_USER_AGENT: &str = "TreasureCrawler/0.1 (+http://localhost/treasure-crawler/contact)";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    Live,
    Corpus,
}

/// How links are prioritized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Boundary galaxy plus T-Graph link distance.
    Treasure,
    /// FIFO order, priorities ignored.
    BreadthFirst,
    /// Galaxy of the anchor text alone; on-topic links get the maximum.
    BestFirstAnchorOnly,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Treasure, Strategy::BreadthFirst, Strategy::BestFirstAnchorOnly];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Treasure => "treasure",
            Strategy::BreadthFirst => "breadth_first",
            Strategy::BestFirstAnchorOnly => "best_first_anchor_only",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == norm)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlConfig {
    pub seeds: Vec<Url>,
    pub topics: BTreeSet<String>,
    pub refinement_depth: usize,
    pub off_topic_priority: f64,
    pub tgraph_path: Option<PathBuf>,
    /// None means the built-in seed lexicon.
    pub lexicon_path: Option<PathBuf>,
    pub adapter: AdapterKind,
    pub corpus_path: Option<PathBuf>,
    pub delay_ms: u64,
    pub aging_delta: f64,
    pub max_pages: usize,
    pub size_cap: usize,
    pub checkpoint_every: usize,
    pub user_agent: String,
    pub repository_path: PathBuf,
    /// Defaults to `checkpoint.json` inside the repository directory.
    pub checkpoint_path: Option<PathBuf>,
    pub osm_threshold: f64,
    pub robots_ttl_secs: u64,
    pub timeout_secs: u64,
    pub strategy: Strategy,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            seeds: Vec::new(),
            topics: BTreeSet::new(),
            refinement_depth: DEFAULT_REFINEMENT_DEPTH,
            off_topic_priority: DEFAULT_OFF_TOPIC_PRIORITY,
            tgraph_path: None,
            lexicon_path: None,
            adapter: AdapterKind::Corpus,
            corpus_path: None,
            delay_ms: 1000,
            aging_delta: DEFAULT_AGING_DELTA,
            max_pages: 1000,
            size_cap: DEFAULT_SIZE_CAP,
            checkpoint_every: 50,
            user_agent: DEFAULT_USER_AGENT.to_owned(),
            repository_path: PathBuf::from("repository"),
            checkpoint_path: None,
            osm_threshold: DEFAULT_OSM_THRESHOLD,
            robots_ttl_secs: 3600,
            timeout_secs: 20,
            strategy: Strategy::Treasure,
        }
    }
}

pub const KEYS: &[&str] = &[
    "seeds",
    "topics",
    "refinement_depth",
    "off_topic_priority",
    "tgraph_path",
    "lexicon_path",
    "adapter",
    "corpus_path",
    "delay_ms",
    "aging_delta",
    "max_pages",
    "size_cap",
    "checkpoint_every",
    "user_agent",
    "repository_path",
    "checkpoint_path",
    "osm_threshold",
    "robots_ttl_secs",
    "timeout_secs",
    "strategy",
];

fn list(value: &str) -> impl Iterator<Item = &str> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.to_owned(),
        message: e.to_string(),
    })
}

impl CrawlConfig {
    /// Parses configuration text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut config = CrawlConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    message: format!("expected `key = value`, found `{line}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if key == "seeds" {
                for s in list(value) {
                    config.set("seeds", s)?;
                }
                continue;
            }
            config.set(key, value)?;
            if let Some(p) = config.path_mut(key) {
                if p.is_relative() {
                    *p = base_dir.join(&*p);
                }
            }
        }
        if config.repository_path.is_relative() {
            config.repository_path = base_dir.join(&config.repository_path);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn path_mut(&mut self, key: &str) -> Option<&mut PathBuf> {
        match key {
            "tgraph_path" => self.tgraph_path.as_mut(),
            "lexicon_path" => self.lexicon_path.as_mut(),
            "corpus_path" => self.corpus_path.as_mut(),
            "checkpoint_path" => self.checkpoint_path.as_mut(),
            "repository_path" => Some(&mut self.repository_path),
            _ => None,
        }
    }

    /// Sets one key from its textual value. `seeds` appends; `topics`
    /// replaces the whole set. Used both by the file parser and for
    /// command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |message: String| ConfigError::Value {
            key: key.to_owned(),
            message,
        };
        match key {
            "seeds" => {
                let url = canonical_url(value).map_err(|e| bad(format!("{value}: {e}")))?;
                if !self.seeds.contains(&url) {
                    self.seeds.push(url);
                }
            }
            "topics" => self.topics = list(value).map(str::to_owned).collect(),
            "refinement_depth" => self.refinement_depth = number(key, value)?,
            "off_topic_priority" => self.off_topic_priority = number(key, value)?,
            "tgraph_path" => self.tgraph_path = Some(PathBuf::from(value)),
            "lexicon_path" => self.lexicon_path = Some(PathBuf::from(value)),
            "adapter" => {
                self.adapter = match value {
                    "live" => AdapterKind::Live,
                    "corpus" => AdapterKind::Corpus,
                    other => return Err(bad(format!("expected `live` or `corpus`, found `{other}`"))),
                }
            }
            "corpus_path" => self.corpus_path = Some(PathBuf::from(value)),
            "delay_ms" => self.delay_ms = number(key, value)?,
            "aging_delta" => self.aging_delta = number(key, value)?,
            "max_pages" => self.max_pages = number(key, value)?,
            "size_cap" => self.size_cap = number(key, value)?,
            "checkpoint_every" => self.checkpoint_every = number(key, value)?,
            "user_agent" => self.user_agent = value.to_owned(),
            "repository_path" => self.repository_path = PathBuf::from(value),
            "checkpoint_path" => self.checkpoint_path = Some(PathBuf::from(value)),
            "osm_threshold" => self.osm_threshold = number(key, value)?,
            "robots_ttl_secs" => self.robots_ttl_secs = number(key, value)?,
            "timeout_secs" => self.timeout_secs = number(key, value)?,
            "strategy" => self.strategy = value.parse().map_err(bad)?,
            other => return Err(ConfigError::UnknownKey(other.to_owned())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.seeds.is_empty() {
            return invalid("at least one seed URL is required");
        }
        if !(self.aging_delta > 0.0 && self.aging_delta.is_finite()) {
            return invalid("aging_delta must be positive");
        }
        if self.max_pages < 1 {
            return invalid("max_pages must be at least 1");
        }
        if self.size_cap == 0 {
            return invalid("size_cap must be positive");
        }
        if !(0.0..=1.0).contains(&self.osm_threshold) {
            return invalid("osm_threshold must lie in [0, 1]");
        }
        self.topic_config()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        match self.adapter {
            AdapterKind::Corpus if self.corpus_path.is_none() => {
                invalid("the corpus adapter needs corpus_path")
            }
            AdapterKind::Live if !self.user_agent.contains("http") => {
                invalid("user_agent must carry a contact URL for live crawling")
            }
            _ => Ok(()),
        }
    }

    pub fn topic_config(&self) -> Result<TopicConfig, crate::galaxy::TopicConfigError> {
        let tc = TopicConfig {
            topics: self.topics.clone(),
            refinement_depth: self.refinement_depth,
            off_topic_priority: self.off_topic_priority,
        };
        tc.validate()?;
        Ok(tc)
    }

    pub fn checkpoint_file(&self) -> PathBuf {
        self.checkpoint_path
            .clone()
            .unwrap_or_else(|| self.repository_path.join("checkpoint.json"))
    }

    /// Renders the configuration back into the file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let seeds: Vec<&str> = self.seeds.iter().map(Url::as_str).collect();
        put("seeds", seeds.join(", "));
        put("topics", self.topics.iter().cloned().collect::<Vec<_>>().join(", "));
        put("refinement_depth", self.refinement_depth.to_string());
        put("off_topic_priority", self.off_topic_priority.to_string());
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        if let Some(p) = path(&self.tgraph_path) {
            put("tgraph_path", p);
        }
        if let Some(p) = path(&self.lexicon_path) {
            put("lexicon_path", p);
        }
        put(
            "adapter",
            match self.adapter {
                AdapterKind::Live => "live",
                AdapterKind::Corpus => "corpus",
            }
            .into(),
        );
        if let Some(p) = path(&self.corpus_path) {
            put("corpus_path", p);
        }
        put("delay_ms", self.delay_ms.to_string());
        put("aging_delta", self.aging_delta.to_string());
        put("max_pages", self.max_pages.to_string());
        put("size_cap", self.size_cap.to_string());
        put("checkpoint_every", self.checkpoint_every.to_string());
        put("user_agent", self.user_agent.clone());
        put("repository_path", self.repository_path.display().to_string());
        if let Some(p) = path(&self.checkpoint_path) {
            put("checkpoint_path", p);
        }
        put("osm_threshold", self.osm_threshold.to_string());
        put("robots_ttl_secs", self.robots_ttl_secs.to_string());
        put("timeout_secs", self.timeout_secs.to_string());
        put("strategy", self.strategy.to_string());
        out
    }
}
