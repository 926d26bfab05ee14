//! Seeded synthetic web for desk-scale experiments.
//!
//! The generated site has three parts:
//!
//! * an off-topic region whose first page is the seed,
//! * a chain of off-topic bridge pages hanging off the seed page,
//! * a relevant cluster reachable only through the bridge.
//!
//! Page vocabulary comes from the seed lexicon: cluster pages use terms
//! filed under the configured topics, the rest use terms from unrelated
//! classes. The output directory is a corpus snapshot plus `labels.tsv`,
//! `seeds.txt`, `crawl.conf`, and a `sample/` snapshot of cluster pages with
//! `sample/targets.txt` for building a T-Graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use url::Url;

use crate::crawl::corpus::{CorpusManifest, ManifestEntry};
use crate::galaxy::TopicConfig;
use crate::lexicon::{DdcLexicon, SEED_LEXICON};
use crate::text::stemmed_terms;

use super::metrics::Labels;
use super::{io_err, EvalError};

const FILLER: &[&str] = &[
    "the", "and", "with", "about", "from", "into", "over", "this", "that", "which", "their", "where",
    "while", "other", "every", "notes", "more", "here", "also", "various", "some", "many", "often",
    "across", "during", "early", "later", "around", "among", "along",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusParams {
    pub total_pages: usize,
    pub cluster_size: usize,
    pub bridge_length: usize,
    pub topics: BTreeSet<String>,
    pub seed: u64,
    /// Cluster pages copied into the T-Graph sample.
    pub sample_size: usize,
    /// Links per page.
    pub out_degree: usize,
    pub host: String,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            total_pages: 500,
            cluster_size: 100,
            bridge_length: 3,
            topics: ["299".to_owned()].into(),
            seed: 1,
            sample_size: 20,
            out_degree: 4,
            host: "http://synthetic.test".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedCorpus {
    pub root: PathBuf,
    pub seeds: Vec<Url>,
    pub cluster: Vec<Url>,
    pub bridge: Vec<Url>,
    pub sample_root: PathBuf,
    pub targets: Vec<Url>,
    pub config_path: PathBuf,
    pub labels_path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Off,
    Bridge,
    Cluster,
}

struct Page {
    url: Url,
    region: Region,
    links: Vec<usize>,
    dead_link: Option<Url>,
}

/// Surface terms of the seed lexicon grouped by code.
fn seed_vocabulary() -> Vec<(String, String)> {
    SEED_LEXICON
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let (code, term) = l.split_once('\t').or_else(|| l.split_once(char::is_whitespace))?;
            Some((code.trim().to_owned(), term.trim().to_owned()))
        })
        .collect()
}

struct Vocab {
    cluster: Vec<String>,
    /// Off-topic terms per DDC class digit.
    classes: Vec<Vec<String>>,
    filler: Vec<String>,
}

fn build_vocab(topics: &BTreeSet<String>) -> Result<Vocab, EvalError> {
    let lexicon = DdcLexicon::seed();
    let records = seed_vocabulary();
    let topic_classes: BTreeSet<char> = topics.iter().filter_map(|t| t.chars().next()).collect();
    // surface words must stem back onto their own lexicon entry
    let usable = |term: &str| !lexicon.lookup(&stemmed_terms(term).join(" ")).is_empty();
    let mut by_term: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (code, term) in &records {
        by_term.entry(term.as_str()).or_default().push(code.as_str());
    }
    let mut cluster = Vec::new();
    let mut classes: BTreeMap<char, Vec<String>> = BTreeMap::new();
    for (term, codes) in by_term {
        if !usable(term) {
            continue;
        }
        if codes.iter().all(|c| topics.iter().any(|t| c.starts_with(t.as_str()))) {
            cluster.push(term.to_owned());
        } else if codes
            .iter()
            .all(|c| c.chars().next().is_some_and(|d| !topic_classes.contains(&d)))
        {
            let class = codes[0].chars().next().expect("codes are non-empty");
            if codes.iter().all(|c| c.starts_with(class)) {
                classes.entry(class).or_default().push(term.to_owned());
            }
        }
    }
    if cluster.is_empty() {
        return Err(EvalError::Invalid(format!(
            "the seed lexicon has no terms filed under {topics:?}"
        )));
    }
    let classes: Vec<Vec<String>> = classes.into_values().filter(|v| v.len() >= 3).collect();
    if classes.is_empty() {
        return Err(EvalError::Invalid("no off-topic vocabulary left".into()));
    }
    let filler = FILLER
        .iter()
        .filter(|w| lexicon.lookup(&stemmed_terms(w).join(" ")).is_empty())
        .map(|w| (*w).to_owned())
        .collect();
    Ok(Vocab {
        cluster,
        classes,
        filler,
    })
}

fn validate(p: &CorpusParams) -> Result<(), EvalError> {
    let bad = |m: String| Err(EvalError::Invalid(m));
    if p.total_pages == 0 || p.cluster_size == 0 || p.out_degree == 0 {
        return bad("page counts and out-degree must be positive".into());
    }
    if p.cluster_size + p.bridge_length >= p.total_pages {
        return bad(format!(
            "cluster ({}) plus bridge ({}) must leave at least one off-topic page out of {}",
            p.cluster_size, p.bridge_length, p.total_pages
        ));
    }
    if p.sample_size == 0 || p.sample_size > p.cluster_size {
        return bad(format!(
            "sample size {} must lie between 1 and the cluster size {}",
            p.sample_size, p.cluster_size
        ));
    }
    TopicConfig::new(p.topics.iter().cloned()).map_err(|e| EvalError::Invalid(e.to_string()))?;
    Url::parse(&p.host).map_err(|e| EvalError::Invalid(format!("host {}: {e}", p.host)))?;
    Ok(())
}

fn paragraph(rng: &mut ChaCha8Rng, theme: &[String], filler: &[String], words: usize) -> String {
    let mut out = Vec::with_capacity(words);
    for _ in 0..words {
        let pool = if rng.random_bool(0.55) { theme } else { filler };
        out.push(pool.choose(rng).expect("pools are non-empty").as_str());
    }
    out.join(" ")
}

fn heading(rng: &mut ChaCha8Rng, theme: &[String], n: usize) -> String {
    (0..n)
        .map(|_| theme.choose(rng).expect("theme is non-empty").as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Generates the corpus into `out`, which is created if missing.
pub fn generate_corpus(params: &CorpusParams, out: &Path) -> Result<GeneratedCorpus, EvalError> {
    validate(params)?;
    let vocab = build_vocab(&params.topics)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let host = Url::parse(&params.host).map_err(|e| EvalError::Invalid(e.to_string()))?;
    let n_off = params.total_pages - params.cluster_size - params.bridge_length;
    let url = |path: String| host.join(&path).expect("generated paths are valid");

    let mut pages: Vec<Page> = Vec::with_capacity(params.total_pages);
    let mut push = |url: Url, region| {
        pages.push(Page {
            url,
            region,
            links: Vec::new(),
            dead_link: None,
        })
    };
    for i in 0..n_off {
        push(url(format!("/o/{i:04}.html")), Region::Off);
    }
    for i in 0..params.bridge_length {
        push(url(format!("/b/{i:02}.html")), Region::Bridge);
    }
    for i in 0..params.cluster_size {
        push(url(format!("/c/{i:04}.html")), Region::Cluster);
    }
    let off: Vec<usize> = (0..n_off).collect();
    let bridge: Vec<usize> = (n_off..n_off + params.bridge_length).collect();
    let cluster: Vec<usize> = (n_off + params.bridge_length..params.total_pages).collect();
    let entry = bridge.first().copied().unwrap_or(cluster[0]);

    let pick_distinct = |rng: &mut ChaCha8Rng, pool: &[usize], exclude: &[usize], n: usize| -> Vec<usize> {
        let mut candidates: Vec<usize> = pool.iter().copied().filter(|c| !exclude.contains(c)).collect();
        candidates.shuffle(rng);
        candidates.truncate(n);
        candidates
    };
    let extra = params.out_degree.saturating_sub(1);
    for &i in &off {
        let mut links = vec![off[(i + 1) % n_off]];
        links.retain(|&l| l != i);
        let mut exclude = links.clone();
        exclude.push(i);
        links.extend(pick_distinct(&mut rng, &off, &exclude, extra));
        if i == 0 {
            links.insert(0, entry);
        }
        pages[i].links = links;
        if rng.random_bool(0.1) {
            pages[i].dead_link = Some(url(format!("/missing/{i:04}.html")));
        }
    }
    for (k, &i) in bridge.iter().enumerate() {
        let next = bridge.get(k + 1).copied().unwrap_or(cluster[0]);
        let mut links = vec![next];
        links.extend(pick_distinct(&mut rng, &off, &[], extra));
        pages[i].links = links;
    }
    for (k, &i) in cluster.iter().enumerate() {
        let mut links: Vec<usize> = cluster.get(k + 1).copied().into_iter().collect();
        let mut exclude = links.clone();
        exclude.push(i);
        links.extend(pick_distinct(&mut rng, &cluster, &exclude, extra));
        if rng.random_bool(0.3) {
            links.extend(pick_distinct(&mut rng, &off, &[], 1));
        }
        pages[i].links = links;
    }

    // render
    let pages_dir = out.join("pages");
    fs::create_dir_all(&pages_dir).map_err(io_err(&pages_dir))?;
    let mut manifest = CorpusManifest::new(out);
    let mut labels = Labels::new();
    let mut bodies: Vec<String> = Vec::with_capacity(pages.len());
    for page in &pages {
        let theme: &[String] = match page.region {
            Region::Cluster => &vocab.cluster,
            Region::Off | Region::Bridge => vocab.classes.choose(&mut rng).expect("classes are non-empty"),
        };
        let mut html = String::new();
        let title = heading(&mut rng, theme, 2);
        let _ = write!(
            html,
            "<!DOCTYPE html>\n<html><head><title>{title}</title></head>\n<body>\n<h1>{title}</h1>\n<h2>{}</h2>\n",
            heading(&mut rng, theme, 2)
        );
        let n = rng.random_range(8..15);
        let _ = writeln!(html, "<p>{}</p>", paragraph(&mut rng, theme, &vocab.filler, n));
        let as_list = page.region == Region::Off && rng.random_bool(0.3);
        if as_list {
            html.push_str("<h3>see also</h3>\n<ul>\n");
        }
        for &target in &page.links {
            let link_theme: &[String] = match (page.region, pages[target].region) {
                (Region::Cluster, Region::Cluster) => &vocab.cluster,
                (Region::Cluster, _) => vocab.classes.choose(&mut rng).expect("classes are non-empty"),
                _ => theme,
            };
            let anchor_words = rng.random_range(1..3);
            let anchor = heading(&mut rng, link_theme, anchor_words);
            let (before, after) = (rng.random_range(3..8), rng.random_range(3..8));
            let href = pages[target].url.path();
            let (open, close) = if as_list { ("<li>", "</li>") } else { ("<p>", "</p>") };
            let _ = writeln!(
                html,
                "{open}{} <a href=\"{href}\">{anchor}</a> {}{close}",
                paragraph(&mut rng, link_theme, &vocab.filler, before),
                paragraph(&mut rng, link_theme, &vocab.filler, after)
            );
        }
        if as_list {
            html.push_str("</ul>\n");
        }
        if let Some(dead) = &page.dead_link {
            let _ = writeln!(
                html,
                "<p>{} <a href=\"{}\">{}</a></p>",
                paragraph(&mut rng, theme, &vocab.filler, 4),
                dead.path(),
                heading(&mut rng, theme, 1)
            );
        }
        html.push_str("</body></html>\n");
        bodies.push(html);
    }
    for (page, body) in pages.iter().zip(&bodies) {
        let rel = format!("pages{}", page.url.path().replace('/', "_").replacen('_', "/", 1));
        let path = out.join(&rel);
        fs::write(&path, body).map_err(io_err(&path))?;
        manifest.insert(
            page.url.clone(),
            ManifestEntry {
                status: 200,
                content_type: "text/html; charset=utf-8".into(),
                path: rel,
            },
        );
        labels.insert(page.url.clone(), page.region == Region::Cluster);
    }
    manifest.save().map_err(io_err(out))?;

    // sample: breadth-first over cluster links from the cluster entry
    let cluster_set: BTreeSet<usize> = cluster.iter().copied().collect();
    let mut order = Vec::new();
    let mut seen = BTreeSet::from([cluster[0]]);
    let mut queue = VecDeque::from([cluster[0]]);
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &l in &pages[i].links {
            if cluster_set.contains(&l) && seen.insert(l) {
                queue.push_back(l);
            }
        }
    }
    order.truncate(params.sample_size);
    let n_targets = (params.sample_size / 4).max(1);
    let targets: Vec<Url> = order[order.len() - n_targets..]
        .iter()
        .map(|&i| pages[i].url.clone())
        .collect();
    let sample_root = out.join("sample");
    let mut sample = CorpusManifest::new(&sample_root);
    for &i in &order {
        let entry = manifest.get(&pages[i].url).expect("page is in the manifest").clone();
        let to = sample_root.join(&entry.path);
        fs::create_dir_all(to.parent().expect("page paths have a parent")).map_err(io_err(&to))?;
        fs::write(&to, &bodies[i]).map_err(io_err(&to))?;
        sample.insert(pages[i].url.clone(), entry);
    }
    sample.save().map_err(io_err(&sample_root))?;
    let targets_text: String = targets.iter().map(|u| format!("{u}\n")).collect();
    let targets_path = sample_root.join("targets.txt");
    fs::write(&targets_path, targets_text).map_err(io_err(&targets_path))?;

    let seeds = vec![pages[0].url.clone()];
    let write = |name: &str, text: String| -> Result<PathBuf, EvalError> {
        let p = out.join(name);
        fs::write(&p, text).map_err(io_err(&p))?;
        Ok(p)
    };
    let labels_path = write("labels.tsv", labels.to_text())?;
    write("seeds.txt", format!("{}\n", seeds[0]))?;
    let topics: Vec<&str> = params.topics.iter().map(String::as_str).collect();
    let config_path = write(
        "crawl.conf",
        format!(
            "# corpus-mode crawl of the generated snapshot\nseeds = {}\ntopics = {}\nadapter = corpus\ncorpus_path = .\ntgraph_path = tgraph.json\nrepository_path = repository\nmax_pages = {}\ncheckpoint_every = 50\n",
            seeds[0],
            topics.join(", "),
            params.total_pages / 2
        ),
    )?;
    Ok(GeneratedCorpus {
        root: out.to_owned(),
        seeds,
        cluster: cluster.iter().map(|&i| pages[i].url.clone()).collect(),
        bridge: bridge.iter().map(|&i| pages[i].url.clone()).collect(),
        sample_root,
        targets,
        config_path,
        labels_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> CorpusParams {
        CorpusParams {
            total_pages: 60,
            cluster_size: 15,
            bridge_length: 2,
            sample_size: 8,
            seed,
            ..CorpusParams::default()
        }
    }

    fn snapshot_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
        let mut out = BTreeMap::new();
        let mut stack = vec![dir.to_owned()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.insert(p.strip_prefix(dir).unwrap().to_owned(), fs::read(&p).unwrap());
                }
            }
        }
        out
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        generate_corpus(&small(7), a.path()).unwrap();
        generate_corpus(&small(7), b.path()).unwrap();
        generate_corpus(&small(8), c.path()).unwrap();
        assert_eq!(snapshot_bytes(a.path()), snapshot_bytes(b.path()));
        assert_ne!(snapshot_bytes(a.path()), snapshot_bytes(c.path()));
    }

    #[test]
    fn labels_mark_exactly_the_cluster() {
        let dir = tempfile::tempdir().unwrap();
        let params = CorpusParams {
            total_pages: 200,
            cluster_size: 50,
            ..small(3)
        };
        let g = generate_corpus(&params, dir.path()).unwrap();
        let labels = super::super::load_labels(&g.labels_path).unwrap();
        assert_eq!(labels.len(), 200);
        assert_eq!(labels.relevant_count(), 50);
        assert_eq!(CorpusManifest::load(dir.path()).unwrap().len(), 200);
    }

    #[test]
    fn zero_bridge_links_seed_into_cluster() {
        let dir = tempfile::tempdir().unwrap();
        let g = generate_corpus(
            &CorpusParams {
                bridge_length: 0,
                ..small(1)
            },
            dir.path(),
        )
        .unwrap();
        let seed_html = fs::read_to_string(dir.path().join("pages/o_0000.html")).unwrap();
        assert!(seed_html.contains(&format!("href=\"{}\"", g.cluster[0].path())));
        assert!(g.bridge.is_empty());
    }

    #[test]
    fn contradictory_parameters_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for p in [
            CorpusParams {
                cluster_size: 60,
                ..small(1)
            },
            CorpusParams {
                sample_size: 0,
                ..small(1)
            },
            CorpusParams {
                topics: ["29".to_owned()].into(),
                ..small(1)
            },
        ] {
            assert!(generate_corpus(&p, dir.path()).is_err());
        }
    }
}
