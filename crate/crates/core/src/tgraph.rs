//! T-Graph: leveled exemplar graph used to score on-topic links.
//!
//! Every node describes one link-bearing paragraph (or list) of a sample
//! page with four term-frequency vectors (immediate subheading, section
//! heading, main heading, paragraph text) and its link distance to the
//! nearest target document. Target documents are level-0 nodes. A node's
//! level equals its link distance, and edges only point to lower levels.
//!
//! Serialized form (JSON, `version` = [`FORMAT_VERSION`]):
//!
//! ```text
//! { "format": "tgraph", "version": 1, "level_count": L, "osm_threshold": t,
//!   "nodes": [ { "id", "level", "dic_link_distance", "is_target",
//!                "unreachable", "source_url", "block_index", "out_links",
//!                "child_ids", "ish", "sh", "mh", "dc" } ] }
//! ```
//!
//! where `ish`/`sh`/`mh`/`dc` map stemmed terms to counts.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::html::{PageElements, UnvisitedLink};
use crate::text::{cosine, stemmed_terms, TermFrequencyVector};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_OSM_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TGraphError {
    #[error("no target documents given")]
    NoTargets,
    #[error("target {0} is not part of the sample")]
    UnknownTarget(String),
    #[error("malformed T-Graph: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported T-Graph version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("invalid T-Graph: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TGraphNode {
    pub id: usize,
    pub level: u32,
    pub dic_link_distance: u32,
    pub is_target: bool,
    /// No downward path to a target; level and distance hold the sentinel
    /// value `level_count`.
    pub unreachable: bool,
    pub source_url: Url,
    /// Paragraph index in the source page; `None` for target nodes.
    pub block_index: Option<usize>,
    /// Pages linked from the paragraph, in document order.
    pub out_links: Vec<Url>,
    pub child_ids: Vec<usize>,
    pub ish: TermFrequencyVector,
    pub sh: TermFrequencyVector,
    pub mh: TermFrequencyVector,
    pub dc: TermFrequencyVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TGraph {
    format: String,
    version: u32,
    level_count: u32,
    osm_threshold: f64,
    nodes: Vec<TGraphNode>,
}

/// Stemmed text of an unvisited link's surroundings, as term vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkContext {
    pub u_terms: TermFrequencyVector,
    pub sh_terms: TermFrequencyVector,
    pub mh_terms: TermFrequencyVector,
    pub boundary_terms: TermFrequencyVector,
}

impl LinkContext {
    pub fn from_link(link: &UnvisitedLink) -> Self {
        LinkContext {
            u_terms: TermFrequencyVector::from_terms(stemmed_terms(&link.subheading_u)),
            sh_terms: TermFrequencyVector::from_terms(stemmed_terms(&link.section_heading)),
            mh_terms: TermFrequencyVector::from_terms(stemmed_terms(&link.main_heading)),
            boundary_terms: TermFrequencyVector::from_terms(
                link.boundary.iter().map(|w| w.term.clone()),
            ),
        }
    }
}

/// How a link priority was derived from the graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreBasis {
    /// At least one node passed the threshold; the minimum link distance.
    Matched { min_distance: u32 },
    /// No node passed; scored from the number of graph levels.
    Fallback { level_count: u32 },
}

impl ScoreBasis {
    pub fn priority(self) -> f64 {
        match self {
            // a target-node match (distance 0) is clamped to the maximum
            ScoreBasis::Matched { min_distance } => 1.0 / f64::from(min_distance.max(1)),
            ScoreBasis::Fallback { level_count } => 1.0 / (f64::from(level_count) + 1.0),
        }
    }
}

/// Cosine similarities (ISH, SH, MH, DC) between a node and a link context.
pub fn node_similarity(node: &TGraphNode, ctx: &LinkContext) -> [f64; 4] {
    [
        cosine(&node.ish, &ctx.u_terms),
        cosine(&node.sh, &ctx.sh_terms),
        cosine(&node.mh, &ctx.mh_terms),
        cosine(&node.dc, &ctx.boundary_terms),
    ]
}

/// Overall similarity: the mean of the four component similarities.
pub fn osm(sims: [f64; 4]) -> f64 {
    (sims[0] + sims[1] + sims[2] + sims[3]) / 4.0
}

/// A page of the admin-provided sample, already parsed.
#[derive(Debug, Clone)]
pub struct SamplePage {
    pub url: Url,
    pub elements: PageElements,
}

/// Re-fetched content of a sample page, observed during a crawl.
#[derive(Debug, Clone)]
pub struct PageObservation {
    pub url: Url,
    pub elements: PageElements,
}

impl TGraph {
    /// Two-stage construction: nodes and edges from the interlinked sample,
    /// then link distances by breadth-first search from the targets.
    pub fn build_from_corpus(
        sample: &[SamplePage],
        targets: &BTreeSet<Url>,
        osm_threshold: f64,
    ) -> Result<TGraph, TGraphError> {
        if targets.is_empty() {
            return Err(TGraphError::NoTargets);
        }
        let by_url: BTreeMap<&Url, &SamplePage> = sample.iter().map(|p| (&p.url, p)).collect();
        if let Some(t) = targets.iter().find(|t| !by_url.contains_key(t)) {
            return Err(TGraphError::UnknownTarget(t.to_string()));
        }
        let mut nodes = Vec::new();
        for (url, page) in &by_url {
            let pe = &page.elements;
            let mh = TermFrequencyVector::from_terms(stemmed_terms(&pe.main_heading));
            if targets.contains(*url) {
                nodes.push(TGraphNode {
                    id: nodes.len(),
                    level: 0,
                    dic_link_distance: 0,
                    is_target: true,
                    unreachable: false,
                    source_url: (*url).clone(),
                    block_index: None,
                    out_links: Vec::new(),
                    child_ids: Vec::new(),
                    ish: TermFrequencyVector::new(),
                    sh: TermFrequencyVector::new(),
                    mh,
                    dc: TermFrequencyVector::from_terms(pe.body_terms.iter().cloned()),
                });
                continue;
            }
            for (idx, para) in pe.paragraphs.iter().enumerate() {
                let out_links = block_links(pe, idx);
                if out_links.is_empty() || para.terms.is_empty() {
                    continue;
                }
                nodes.push(TGraphNode {
                    id: nodes.len(),
                    level: 0,
                    dic_link_distance: 0,
                    is_target: false,
                    unreachable: false,
                    source_url: (*url).clone(),
                    block_index: Some(idx),
                    out_links,
                    child_ids: Vec::new(),
                    ish: TermFrequencyVector::from_terms(stemmed_terms(&para.context.subheading)),
                    sh: TermFrequencyVector::from_terms(stemmed_terms(
                        &para.context.section_heading,
                    )),
                    mh: mh.clone(),
                    dc: TermFrequencyVector::from_terms(para.terms.iter().cloned()),
                });
            }
        }
        let mut graph = TGraph {
            format: "tgraph".into(),
            version: FORMAT_VERSION,
            level_count: 1,
            osm_threshold,
            nodes,
        };
        graph.link_and_measure();
        Ok(graph)
    }

    /// Rebuilds edges from each node's outgoing links, then recomputes
    /// distances and levels and drops edges that do not point downward.
    fn link_and_measure(&mut self) {
        let mut page_nodes: HashMap<&Url, Vec<usize>> = HashMap::new();
        for n in &self.nodes {
            page_nodes.entry(&n.source_url).or_default().push(n.id);
        }
        let children: Vec<Vec<usize>> = self
            .nodes
            .iter()
            .map(|n| {
                let mut ids: Vec<usize> = n
                    .out_links
                    .iter()
                    .filter_map(|u| page_nodes.get(u))
                    .flatten()
                    .copied()
                    .collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            })
            .collect();
        let dist = shortest_distances(&children, self.nodes.iter().map(|n| n.is_target));
        let max_level = dist.iter().flatten().copied().max().unwrap_or(0);
        self.level_count = max_level + 1;
        for (n, kids) in self.nodes.iter_mut().zip(children) {
            match dist[n.id] {
                Some(d) => {
                    n.level = d;
                    n.dic_link_distance = d;
                    n.unreachable = false;
                }
                None => {
                    n.level = max_level + 1;
                    n.dic_link_distance = max_level + 1;
                    n.unreachable = true;
                }
            }
            n.child_ids = kids;
        }
        let levels: Vec<u32> = self.nodes.iter().map(|n| n.level).collect();
        for n in &mut self.nodes {
            let level = n.level;
            n.child_ids.retain(|&c| levels[c] < level);
        }
    }

    pub fn nodes(&self) -> &[TGraphNode] {
        &self.nodes
    }

    pub fn level_count(&self) -> u32 {
        self.level_count
    }

    pub fn osm_threshold(&self) -> f64 {
        self.osm_threshold
    }

    pub fn set_osm_threshold(&mut self, threshold: f64) {
        self.osm_threshold = threshold;
    }

    /// Nodes whose overall similarity reaches the threshold (inclusive).
    pub fn matching_nodes(&self, ctx: &LinkContext) -> Vec<(&TGraphNode, f64)> {
        self.nodes
            .iter()
            .map(|n| (n, osm(node_similarity(n, ctx))))
            .filter(|(_, s)| *s >= self.osm_threshold)
            .collect()
    }

    pub fn score_link(&self, ctx: &LinkContext) -> ScoreBasis {
        match self
            .matching_nodes(ctx)
            .iter()
            .map(|(n, _)| n.dic_link_distance)
            .min()
        {
            Some(min_distance) => ScoreBasis::Matched { min_distance },
            None => ScoreBasis::Fallback {
                level_count: self.level_count,
            },
        }
    }

    /// Priority of an on-topic link: inverse minimum link distance over the
    /// matching nodes, or `1 / (levels + 1)` when nothing matches.
    pub fn priority_for_link(&self, ctx: &LinkContext) -> f64 {
        self.score_link(ctx).priority()
    }

    /// Refreshes the nodes of re-fetched pages and recomputes distances.
    pub fn watchdog_rescore(&self, observations: &[PageObservation]) -> TGraph {
        let mut g = self.clone();
        if observations.is_empty() {
            return g;
        }
        let observed: HashMap<&Url, &PageElements> =
            observations.iter().map(|o| (&o.url, &o.elements)).collect();
        for n in &mut g.nodes {
            let Some(pe) = observed.get(&n.source_url) else {
                continue;
            };
            n.mh = TermFrequencyVector::from_terms(stemmed_terms(&pe.main_heading));
            match n.block_index {
                None => n.dc = TermFrequencyVector::from_terms(pe.body_terms.iter().cloned()),
                Some(idx) => match pe.paragraphs.get(idx).filter(|p| !p.terms.is_empty()) {
                    Some(para) => {
                        n.ish = TermFrequencyVector::from_terms(stemmed_terms(&para.context.subheading));
                        n.sh = TermFrequencyVector::from_terms(stemmed_terms(
                            &para.context.section_heading,
                        ));
                        n.dc = TermFrequencyVector::from_terms(para.terms.iter().cloned());
                        n.out_links = block_links(pe, idx);
                    }
                    None => n.out_links.clear(),
                },
            }
        }
        g.link_and_measure();
        g
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("T-Graph is always serializable");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> Result<TGraph, TGraphError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_slice(bytes)?;
        if header.version != FORMAT_VERSION {
            return Err(TGraphError::Version {
                found: header.version,
            });
        }
        let g: TGraph = serde_json::from_slice(bytes)?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), TGraphError> {
        let bad = |m: String| Err(TGraphError::Invariant(m));
        if self.format != "tgraph" {
            return bad(format!("unknown format tag {:?}", self.format));
        }
        if !(0.0..=1.0).contains(&self.osm_threshold) {
            return bad(format!("threshold {} outside [0, 1]", self.osm_threshold));
        }
        if !self.nodes.iter().any(|n| n.is_target) {
            return bad("no target node".into());
        }
        let mut max_level = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return bad(format!("node at position {i} has id {}", n.id));
            }
            if n.dic_link_distance != n.level {
                return bad(format!("node {i}: level {} but distance {}", n.level, n.dic_link_distance));
            }
            if n.is_target != (n.level == 0) {
                return bad(format!("node {i}: target flag disagrees with level {}", n.level));
            }
            if !n.is_target && n.dc.is_empty() {
                return bad(format!("node {i}: empty data component"));
            }
            for &c in &n.child_ids {
                let Some(child) = self.nodes.get(c) else {
                    return bad(format!("node {i}: unknown child {c}"));
                };
                if child.level >= n.level {
                    return bad(format!(
                        "node {i} (level {}) points to node {c} at level {}",
                        n.level, child.level
                    ));
                }
            }
            if !n.unreachable {
                max_level = max_level.max(n.level);
            }
        }
        if self.level_count != max_level + 1 {
            return bad(format!(
                "level_count {} but deepest level is {max_level}",
                self.level_count
            ));
        }
        if let Some(n) = self
            .nodes
            .iter()
            .find(|n| n.unreachable && n.level != self.level_count)
        {
            return bad(format!("unreachable node {} lacks the sentinel level", n.id));
        }
        Ok(())
    }
}

/// Distinct absolute URLs linked from paragraph `idx`, in document order.
fn block_links(pe: &PageElements, idx: usize) -> Vec<Url> {
    let mut seen = BTreeSet::new();
    pe.links
        .iter()
        .filter(|l| l.block_index == idx)
        .filter(|l| seen.insert(l.absolute_url.clone()))
        .map(|l| l.absolute_url.clone())
        .collect()
}

/// Multi-source BFS over reversed edges from the target nodes.
fn shortest_distances(
    children: &[Vec<usize>],
    is_target: impl Iterator<Item = bool>,
) -> Vec<Option<u32>> {
    let mut parents = vec![Vec::new(); children.len()];
    for (p, kids) in children.iter().enumerate() {
        for &c in kids {
            parents[c].push(p);
        }
    }
    let mut dist = vec![None; children.len()];
    let mut queue = VecDeque::new();
    for (i, t) in is_target.enumerate() {
        if t {
            dist[i] = Some(0);
            queue.push_back(i);
        }
    }
    while let Some(n) = queue.pop_front() {
        let d = dist[n].expect("queued nodes have a distance");
        for &p in &parents[n] {
            if dist[p].is_none() {
                dist[p] = Some(d + 1);
                queue.push_back(p);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::html::{extract_page_elements, parse_html, DEFAULT_SIZE_CAP};

    fn page(url: &str, html: &str) -> SamplePage {
        let url = Url::parse(url).unwrap();
        let tree = parse_html(html.as_bytes(), None, DEFAULT_SIZE_CAP).unwrap();
        SamplePage {
            elements: extract_page_elements(&tree, &url),
            url,
        }
    }

    fn targets(urls: &[&str]) -> BTreeSet<Url> {
        urls.iter().map(|u| Url::parse(u).unwrap()).collect()
    }

    #[test]
    fn single_paragraph_to_target() {
        let sample = [
            page("http://s/p", "<h1>Pagan rites</h1><p>see the <a href='/t'>druid</a> shrine</p>"),
            page("http://s/t", "<h1>Druids</h1><p>druid lore</p>"),
        ];
        let g = TGraph::build_from_corpus(&sample, &targets(&["http://s/t"]), 0.05).unwrap();
        assert_eq!(g.nodes().len(), 2);
        let p = g.nodes().iter().find(|n| !n.is_target).unwrap();
        let t = g.nodes().iter().find(|n| n.is_target).unwrap();
        assert_eq!((p.level, p.dic_link_distance), (1, 1));
        assert_eq!(p.child_ids, [t.id]);
        assert_eq!(g.level_count(), 2);
        g.validate().unwrap();
    }

    #[test]
    fn missing_targets_fail() {
        let sample = [page("http://s/p", "<p><a href='/t'>x</a></p>")];
        assert!(matches!(
            TGraph::build_from_corpus(&sample, &BTreeSet::new(), 0.05),
            Err(TGraphError::NoTargets)
        ));
        assert!(matches!(
            TGraph::build_from_corpus(&sample, &targets(&["http://s/zz"]), 0.05),
            Err(TGraphError::UnknownTarget(_))
        ));
    }

    #[test]
    fn unreachable_nodes_get_sentinel() {
        let sample = [
            page("http://s/a", "<p>go <a href='/b'>b</a></p><p>off <a href='http://elsewhere/'>x</a></p>"),
            page("http://s/b", "<p>target text</p>"),
        ];
        let g = TGraph::build_from_corpus(&sample, &targets(&["http://s/b"]), 0.05).unwrap();
        let lost: Vec<_> = g.nodes().iter().filter(|n| n.unreachable).collect();
        assert_eq!(lost.len(), 1);
        assert_eq!(lost[0].level, g.level_count());
        assert_eq!(lost[0].dic_link_distance, 2);
        g.validate().unwrap();
    }

    #[test]
    fn score_basis_priorities() {
        assert_eq!(ScoreBasis::Matched { min_distance: 2 }.priority(), 0.5);
        assert_eq!(ScoreBasis::Matched { min_distance: 1 }.priority(), 1.0);
        assert_eq!(ScoreBasis::Matched { min_distance: 0 }.priority(), 1.0);
        assert_eq!(ScoreBasis::Fallback { level_count: 3 }.priority(), 0.25);
    }

    #[test]
    fn osm_is_the_mean() {
        assert_eq!(osm([1.0; 4]), 1.0);
        assert_eq!(osm([0.0; 4]), 0.0);
        assert_eq!(osm([0.2, 0.0, 0.0, 0.0]), 0.05);
    }

    #[test]
    fn truncated_and_wrong_version_rejected() {
        let sample = [
            page("http://s/p", "<p><a href='/t'>druid</a></p>"),
            page("http://s/t", "<p>t</p>"),
        ];
        let g = TGraph::build_from_corpus(&sample, &targets(&["http://s/t"]), 0.05).unwrap();
        let json = g.to_json();
        assert!(TGraph::from_json(&json.as_bytes()[..json.len() / 2]).is_err());
        let v2 = json.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            TGraph::from_json(v2.as_bytes()),
            Err(TGraphError::Version { found: 2 })
        ));
        assert_eq!(TGraph::from_json(json.as_bytes()).unwrap(), g);
    }
}
