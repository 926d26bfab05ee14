//! `treasure`: command-line client of the crawler service. Without
//! `--server` it starts a private in-process instance on a loopback port.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tracing_subscriber::EnvFilter;

use treasure_client::Client;
use treasure_core::api::{
    BuildTGraphRequest, CompareRequest, ConfigSource, CrawlRequest, GenerateCorpusRequest, JobState, MetricsRequest,
};
use treasure_core::crawl::config::Strategy;
use treasure_core::eval::CorpusParams;

#[derive(Parser)]
#[command(name = "treasure", version, about = "Focused crawler: corpus generation, T-Graph building, crawling and evaluation")]
struct Cli {
    /// Base URL of a running service; an in-process one is started if omitted.
    #[arg(long, global = true, env = "TREASURE_SERVER")]
    server: Option<String>,
    /// Print raw JSON responses instead of the human-readable summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service in the foreground.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
    /// Write a synthetic snapshot with labels, a sample and a crawl config.
    GenCorpus(GenCorpus),
    /// Build a T-Graph from a sample snapshot and a list of target URLs.
    BuildTgraph(BuildTgraph),
    /// Crawl according to a configuration file.
    Crawl(Crawl),
    /// Harvest ratio, precision and recall of a stored crawl.
    Metrics(Metrics),
    /// Run several strategies on the same snapshot and tabulate them.
    Compare(Compare),
}

#[derive(Args)]
struct GenCorpus {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    pages: Option<usize>,
    #[arg(long)]
    cluster: Option<usize>,
    /// Off-topic pages between the seed and the first on-topic page.
    #[arg(long)]
    bridge: Option<usize>,
    /// Comma-separated three-digit topic classes.
    #[arg(long, value_delimiter = ',')]
    topics: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pages copied into the T-Graph sample.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long)]
    out_degree: Option<usize>,
    #[arg(long)]
    host: Option<String>,
}

#[derive(Args)]
struct BuildTgraph {
    /// Snapshot directory holding the sample pages and their manifest.
    #[arg(long)]
    sample: PathBuf,
    /// File with one target URL per line.
    #[arg(long)]
    targets: Option<PathBuf>,
    /// A target URL; may be repeated.
    #[arg(long = "target")]
    target: Vec<String>,
    /// Where to write the graph (JSON).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    osm: Option<f64>,
}

/// Config file plus command-line overrides of its keys.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set delay_ms=0`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    max_pages: Option<usize>,
    /// Repository directory; overrides `repository_path`.
    #[arg(long)]
    repository: Option<PathBuf>,
}

#[derive(Args)]
struct Crawl {
    #[command(flatten)]
    config: ConfigArgs,
    /// Continue from the last checkpoint.
    #[arg(long, conflicts_with = "fresh")]
    resume: bool,
    /// Discard any previous crawl in the repository first.
    #[arg(long)]
    fresh: bool,
}

#[derive(Args)]
struct Metrics {
    #[arg(long)]
    repository: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Harvest-curve resolution in fetched pages.
    #[arg(long)]
    every: Option<usize>,
    /// Do not write the CSV files into the repository.
    #[arg(long)]
    no_csv: bool,
}

#[derive(Args)]
struct Compare {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    labels: PathBuf,
    /// Directory receiving one repository per strategy plus the summary CSV.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated; defaults to all strategies.
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<Strategy>,
    #[arg(long)]
    every: Option<usize>,
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("cannot resolve {}", p.display()))
}

const PATH_KEYS: [&str; 5] = ["tgraph_path", "lexicon_path", "corpus_path", "checkpoint_path", "repository_path"];

impl ConfigArgs {
    fn source(&self) -> Result<ConfigSource> {
        let mut overrides = Vec::new();
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{kv}`");
            };
            let (k, v) = (k.trim(), v.trim());
            // the service resolves nothing against our working directory
            let v = if PATH_KEYS.contains(&k) {
                absolute(Path::new(v))?.display().to_string()
            } else {
                v.to_owned()
            };
            overrides.push((k.to_owned(), v));
        }
        if let Some(s) = self.strategy {
            overrides.push(("strategy".into(), s.to_string()));
        }
        if let Some(n) = self.max_pages {
            overrides.push(("max_pages".into(), n.to_string()));
        }
        if let Some(r) = &self.repository {
            overrides.push(("repository_path".into(), absolute(r)?.display().to_string()));
        }
        Ok(ConfigSource {
            config_path: Some(absolute(&self.config)?),
            config: None,
            overrides,
        })
    }
}

fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce(&T) -> String) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", human(value));
    }
    Ok(())
}

async fn run(cli: Cli) -> Result<()> {
    if let Command::Serve { bind } = cli.command {
        let listener = tokio::net::TcpListener::bind(bind).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        treasure_server::serve(listener).await?;
        return Ok(());
    }
    let client = match &cli.server {
        Some(url) => Client::new(url.clone()),
        None => {
            let (addr, _) = treasure_server::spawn("127.0.0.1:0").await?;
            Client::new(format!("http://{addr}"))
        }
    };
    let json = cli.json;
    match cli.command {
        Command::Serve { .. } => unreachable!("handled above"),
        Command::GenCorpus(a) => {
            let d = CorpusParams::default();
            let params = CorpusParams {
                total_pages: a.pages.unwrap_or(d.total_pages),
                cluster_size: a.cluster.unwrap_or(d.cluster_size),
                bridge_length: a.bridge.unwrap_or(d.bridge_length),
                topics: if a.topics.is_empty() { d.topics.clone() } else { a.topics.into_iter().collect() },
                seed: a.seed.unwrap_or(d.seed),
                sample_size: a.sample.unwrap_or(d.sample_size),
                out_degree: a.out_degree.unwrap_or(d.out_degree),
                host: a.host.unwrap_or(d.host),
            };
            let g = client
                .generate_corpus(&GenerateCorpusRequest {
                    output: absolute(&a.out)?,
                    params,
                })
                .await?;
            emit(json, &g, |g| {
                format!(
                    "snapshot   {}\nseeds      {}\ncluster    {} pages\nbridge     {} pages\nsample     {} ({} targets)\nconfig     {}\nlabels     {}\n",
                    g.root.display(),
                    g.seeds.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "),
                    g.cluster.len(),
                    g.bridge.len(),
                    g.sample_root.display(),
                    g.targets.len(),
                    g.config_path.display(),
                    g.labels_path.display()
                )
            })
        }
        Command::BuildTgraph(a) => {
            if a.targets.is_none() && a.target.is_empty() {
                bail!("give --targets FILE or at least one --target URL");
            }
            let r = client
                .build_tgraph(&BuildTGraphRequest {
                    sample_root: absolute(&a.sample)?,
                    targets: a.target,
                    targets_file: a.targets.as_deref().map(absolute).transpose()?,
                    output: absolute(&a.out)?,
                    osm_threshold: a.osm,
                })
                .await?;
            emit(json, &r, |r| {
                format!(
                    "wrote {}: {} nodes ({} targets, {} unreachable), {} levels\n",
                    r.output.display(),
                    r.nodes,
                    r.targets,
                    r.unreachable,
                    r.level_count
                )
            })
        }
        Command::Crawl(a) => {
            let job = client
                .crawl(&CrawlRequest {
                    source: a.config.source()?,
                    resume: a.resume,
                    fresh: a.fresh,
                })
                .await?;
            if job.state != JobState::Succeeded {
                bail!("crawl job {} ended as {:?}", job.id, job.state);
            }
            let summary = job.summary.context("finished job without a summary")?;
            emit(json, &summary, |s| {
                let c = &s.counters;
                format!(
                    "strategy        {}\nstopped         {:?}\npages attempted {}\nfetched         {}\non-topic pages  {}\nhttp errors     {}\nnetwork errors  {}\nrobots denied   {}\nskipped         {}\nnon-HTML        {}\nlinks enqueued  {} of {}\nfrontier left   {}\nrepository      {}\n",
                    s.strategy,
                    s.stop_reason,
                    c.pages_attempted,
                    c.fetched,
                    c.on_topic_pages,
                    c.http_errors,
                    c.network_errors,
                    c.robots_denied,
                    c.skipped,
                    c.non_html,
                    c.links_enqueued,
                    c.links_seen,
                    s.frontier_remaining,
                    s.repository.display()
                )
            })
        }
        Command::Metrics(a) => {
            let r = client
                .metrics(&MetricsRequest {
                    repository: absolute(&a.repository)?,
                    labels: absolute(&a.labels)?,
                    curve_every: a.every,
                    write_csv: !a.no_csv,
                })
                .await?;
            emit(json, &r, |r| {
                let mut out = r.table.clone();
                for w in &r.report.warnings {
                    out.push_str(&format!("warning: {w}\n"));
                }
                if let Some(csv) = &r.csv {
                    out.push_str(&format!("csv: {}\n", csv.display()));
                }
                out
            })
        }
        Command::Compare(a) => {
            let r = client
                .compare(&CompareRequest {
                    source: a.config.source()?,
                    strategies: a.strategies,
                    labels: absolute(&a.labels)?,
                    output_dir: absolute(&a.out)?,
                    curve_every: a.every,
                })
                .await?;
            emit(json, &r, |r| format!("{}csv: {}\n", r.table, r.csv.display()))
        }
    }
}

#[tokio::main]
async fn main() -> std::process::ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
