//! The crawl loop: frontier, fetch adapters, page processing, repository
//! and checkpoints.

pub mod config;
pub mod corpus;
pub mod engine;
pub mod fetch;
pub mod frontier;
pub mod repository;
pub mod robots;

pub use config::{AdapterKind, ConfigError, CrawlConfig, Strategy};
pub use corpus::{CorpusManifest, ManifestEntry};
pub use engine::{process_page, run_crawl, CrawlError, CrawlOptions, CrawlSummary, ProcessDeps, StopReason};
pub use fetch::{CorpusFetcher, FetchOutcome, FetchStatus, Fetcher, LiveFetcher};
pub use frontier::{Enqueued, Frontier, FrontierItem, QueueDiscipline};
pub use repository::{CrawlRecord, LinkBasis, LinkRecord, RecordQuery, Repository, Violation};
