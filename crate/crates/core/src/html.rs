//! Tolerant HTML parsing and extraction of the structural elements used for
//! relevance prediction: headings, paragraphs, lists, and unvisited links
//! with their anchor text and topical boundary.
//!
//! Parsing is delegated to html5ever (through `scraper`), which applies the
//! WHATWG error-recovery rules; the result is copied into an owned arena
//! [`TagTree`] so that pages can be handed between workers freely. Traversals
//! are iterative, so arbitrarily deep nesting cannot exhaust the stack.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::text::{stem, tokenize};

/// Default per-page size cap (2 MiB).
pub const DEFAULT_SIZE_CAP: usize = 2 * 1024 * 1024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HtmlError {
    #[error("page of {size} bytes exceeds the {cap}-byte cap")]
    TooLarge { size: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Element {
        name: String,
        attrs: Vec<(String, String)>,
    },
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

/// Owned tag tree rooted at the document element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagTree {
    nodes: Vec<Node>,
}

impl TagTree {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tag(&self, id: NodeId) -> Option<&str> {
        match &self.node(id).kind {
            NodeKind::Element { name, .. } => Some(name),
            NodeKind::Text(_) => None,
        }
    }

    pub fn attr(&self, id: NodeId, key: &str) -> Option<&str> {
        match &self.node(id).kind {
            NodeKind::Element { attrs, .. } => attrs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str()),
            NodeKind::Text(_) => None,
        }
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.node(id).children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), move |&n| self.parent(n))
    }

    /// All nodes in document order.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev());
        }
        out
    }

    /// First element with the given tag, in document order.
    pub fn find(&self, tag: &str) -> Option<NodeId> {
        self.descendants(self.root())
            .into_iter()
            .find(|&n| self.tag(n) == Some(tag))
    }

    /// Visible text chunks below `id`, one per text node, script/style skipped.
    pub fn text_chunks(&self, id: NodeId) -> Vec<&str> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match &self.node(n).kind {
                NodeKind::Text(t) => out.push(t.as_str()),
                NodeKind::Element { name, .. } => {
                    if !is_invisible(name) {
                        stack.extend(self.children(n).iter().rev());
                    }
                }
            }
        }
        out
    }

    pub fn text(&self, id: NodeId) -> String {
        join_chunks(&self.text_chunks(id))
    }

    fn push(&mut self, kind: NodeKind, parent: Option<NodeId>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            kind,
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p.0].children.push(id);
        }
        id
    }
}

fn join_chunks(chunks: &[&str]) -> String {
    let mut s = String::new();
    for c in chunks {
        let c = c.split_whitespace().collect::<Vec<_>>().join(" ");
        if c.is_empty() {
            continue;
        }
        if !s.is_empty() {
            s.push(' ');
        }
        s.push_str(&c);
    }
    s
}

fn is_invisible(tag: &str) -> bool {
    matches!(tag, "script" | "style" | "noscript" | "template" | "head")
}

fn is_block(tag: &str) -> bool {
    matches!(
        tag,
        "p" | "div"
            | "li"
            | "ul"
            | "ol"
            | "dl"
            | "dd"
            | "dt"
            | "table"
            | "tbody"
            | "thead"
            | "tfoot"
            | "tr"
            | "td"
            | "th"
            | "section"
            | "article"
            | "aside"
            | "nav"
            | "header"
            | "footer"
            | "main"
            | "blockquote"
            | "pre"
            | "h1"
            | "h2"
            | "h3"
            | "h4"
            | "h5"
            | "h6"
            | "body"
            | "html"
            | "form"
            | "fieldset"
            | "figure"
            | "figcaption"
            | "address"
            | "center"
            | "details"
            | "summary"
    )
}

fn heading_level(tag: &str) -> Option<u8> {
    match tag {
        "h1" => Some(1),
        "h2" => Some(2),
        "h3" => Some(3),
        "h4" => Some(4),
        "h5" => Some(5),
        "h6" => Some(6),
        _ => None,
    }
}

/// Decodes and parses arbitrary bytes into a tag tree. Never fails on
/// malformed markup; only pages over `size_cap` are refused.
pub fn parse_html(
    raw: &[u8],
    declared_encoding: Option<&str>,
    size_cap: usize,
) -> Result<TagTree, HtmlError> {
    if raw.len() > size_cap {
        return Err(HtmlError::TooLarge {
            size: raw.len(),
            cap: size_cap,
        });
    }
    let encoding = declared_encoding
        .and_then(|l| encoding_rs::Encoding::for_label(l.trim().as_bytes()))
        .unwrap_or(encoding_rs::UTF_8);
    let (text, _, _) = encoding.decode(raw);
    let doc = scraper::Html::parse_document(&text);
    Ok(convert(&doc))
}

fn convert(doc: &scraper::Html) -> TagTree {
    let mut tree = TagTree { nodes: Vec::new() };
    let root_el = doc
        .tree
        .root()
        .children()
        .find(|c| c.value().is_element());
    let Some(root_el) = root_el else {
        tree.push(
            NodeKind::Element {
                name: "html".into(),
                attrs: Vec::new(),
            },
            None,
        );
        return tree;
    };
    let mut stack = vec![(root_el, None)];
    while let Some((node, parent)) = stack.pop() {
        let kind = match node.value() {
            scraper::Node::Element(el) => NodeKind::Element {
                name: el.name().to_ascii_lowercase(),
                attrs: el
                    .attrs()
                    .map(|(k, v)| (k.to_ascii_lowercase(), v.to_owned()))
                    .collect(),
            },
            scraper::Node::Text(t) => NodeKind::Text(t.text.to_string()),
            _ => continue,
        };
        let id = tree.push(kind, parent);
        let children: Vec<_> = node.children().collect();
        for c in children.into_iter().rev() {
            stack.push((c, Some(id)));
        }
    }
    tree
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryWord {
    pub term: String,
    pub is_anchor: bool,
}

/// Which break-point rule produced a boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Paragraph,
    List,
    Other,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadingContext {
    /// Deepest h2-h6 heading whose section contains the position.
    pub subheading: String,
    /// The next shallower heading above `subheading`.
    pub section_heading: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub context: HeadingContext,
    pub kind: BlockKind,
    pub text: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnvisitedLink {
    pub absolute_url: Url,
    pub anchor_text: String,
    pub boundary: Vec<BoundaryWord>,
    pub subheading_u: String,
    pub section_heading: String,
    pub main_heading: String,
    pub from_list: bool,
    /// Index into [`PageElements::paragraphs`] of the boundary block.
    pub block_index: usize,
}

impl UnvisitedLink {
    pub fn anchor_terms(&self) -> impl Iterator<Item = &str> {
        self.boundary
            .iter()
            .filter(|w| w.is_anchor)
            .map(|w| w.term.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageElements {
    pub base_url: Url,
    pub main_heading: String,
    pub body_terms: Vec<String>,
    pub links: Vec<UnvisitedLink>,
    pub paragraphs: Vec<Paragraph>,
    /// Anchors whose href was unresolvable or used a rejected scheme.
    pub dropped_links: usize,
}

/// Topical boundary of one anchor element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicalBoundary {
    pub words: Vec<BoundaryWord>,
    pub from_list: bool,
    pub block: NodeId,
    pub kind: BlockKind,
}

/// Stemmed words between the break points around an anchor: the whole list
/// when the anchor sits in a list item, else the enclosing paragraph, else
/// the direct text of the nearest block-level ancestor.
pub fn topical_boundary(anchor: NodeId, tree: &TagTree) -> TopicalBoundary {
    let (block, kind) = boundary_block(anchor, tree);
    let mut words = Vec::new();
    // (node, inside anchor)
    let mut stack = vec![(block, block == anchor)];
    while let Some((n, in_anchor)) = stack.pop() {
        match &tree.node(n).kind {
            NodeKind::Text(t) => {
                for tok in tokenize(t) {
                    words.push(BoundaryWord {
                        term: stem(&tok.text),
                        is_anchor: in_anchor,
                    });
                }
            }
            NodeKind::Element { name, .. } => {
                if is_invisible(name) {
                    continue;
                }
                let descend = n == block
                    || in_anchor
                    || n == anchor
                    || kind != BlockKind::Other
                    || !is_block(name)
                    || tree.ancestors(anchor).any(|a| a == n);
                if !descend {
                    continue;
                }
                for &c in tree.children(n).iter().rev() {
                    stack.push((c, in_anchor || c == anchor));
                }
            }
        }
    }
    TopicalBoundary {
        words,
        from_list: kind == BlockKind::List,
        block,
        kind,
    }
}

fn boundary_block(anchor: NodeId, tree: &TagTree) -> (NodeId, BlockKind) {
    for a in tree.ancestors(anchor) {
        let Some(tag) = tree.tag(a) else { continue };
        match tag {
            "p" => return (a, BlockKind::Paragraph),
            "ul" | "ol" => return (a, BlockKind::List),
            "li" => {
                if let Some(p) = tree.parent(a) {
                    if matches!(tree.tag(p), Some("ul" | "ol")) {
                        return (p, BlockKind::List);
                    }
                }
                return (a, BlockKind::Other);
            }
            t if is_block(t) => return (a, BlockKind::Other),
            _ => {}
        }
    }
    (tree.root(), BlockKind::Other)
}

/// Text and stems of a boundary block, as used for T-Graph data components.
fn block_text(tree: &TagTree, boundary: &TopicalBoundary) -> String {
    match boundary.kind {
        BlockKind::Other => {
            let mut chunks = Vec::new();
            let mut stack = vec![boundary.block];
            while let Some(n) = stack.pop() {
                match &tree.node(n).kind {
                    NodeKind::Text(t) => chunks.push(t.as_str()),
                    NodeKind::Element { name, .. } => {
                        if is_invisible(name) || (n != boundary.block && is_block(name)) {
                            continue;
                        }
                        stack.extend(tree.children(n).iter().rev());
                    }
                }
            }
            join_chunks(&chunks)
        }
        _ => tree.text(boundary.block),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrlRejection {
    #[error("unresolvable href: {0}")]
    Unresolvable(String),
    #[error("scheme {0:?} is not crawlable")]
    Scheme(String),
}

/// Resolves `href` against `base` and canonicalizes the result. Only http
/// and https are accepted.
pub fn resolve_url(base: &Url, href: &str) -> Result<Url, UrlRejection> {
    let href = href.trim();
    let url = base
        .join(href)
        .map_err(|e| UrlRejection::Unresolvable(format!("{href}: {e}")))?;
    canonicalize(url)
}

/// Scheme and host lowercased, default port removed, fragment stripped,
/// percent escapes uppercased and unreserved escapes decoded in the path.
pub fn canonicalize(mut url: Url) -> Result<Url, UrlRejection> {
    match url.scheme() {
        "http" | "https" => {}
        other => return Err(UrlRejection::Scheme(other.to_owned())),
    }
    if url.host_str().is_none_or(str::is_empty) {
        return Err(UrlRejection::Unresolvable(url.to_string()));
    }
    url.set_fragment(None);
    let path = normalize_percent(url.path());
    if path != url.path() {
        url.set_path(&path);
    }
    if let Some(q) = url.query() {
        let q = normalize_percent(q);
        url.set_query(Some(&q));
    }
    Ok(url)
}

/// Parses and canonicalizes an absolute URL string.
pub fn canonical_url(s: &str) -> Result<Url, UrlRejection> {
    let url = Url::parse(s.trim()).map_err(|e| UrlRejection::Unresolvable(format!("{s}: {e}")))?;
    canonicalize(url)
}

fn normalize_percent(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).unwrap_or("");
            if let Ok(v) = u8::from_str_radix(hex, 16) {
                if v.is_ascii_alphanumeric() || matches!(v, b'-' | b'.' | b'_' | b'~') {
                    out.push(v as char);
                } else {
                    out.push('%');
                    out.push_str(&hex.to_ascii_uppercase());
                }
                i += 3;
                continue;
            }
        }
        let ch = s[i..].chars().next().expect("index is on a char boundary");
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

/// Extracts main heading, body text, paragraphs and unvisited links.
pub fn extract_page_elements(tree: &TagTree, base_url: &Url) -> PageElements {
    let main_heading = tree
        .find("h1")
        .map(|h| tree.text(h))
        .filter(|t| !t.is_empty())
        .or_else(|| tree.find("title").map(|t| tree.text(t)))
        .unwrap_or_default();

    let body = tree.find("body").unwrap_or(tree.root());
    let mut body_terms = Vec::new();
    for chunk in tree.text_chunks(body) {
        body_terms.extend(tokenize(chunk).iter().map(|t| stem(&t.text)));
    }

    let mut headings: Vec<(u8, String)> = Vec::new();
    let mut paragraphs = Vec::new();
    let mut block_index: HashMap<NodeId, usize> = HashMap::new();
    let mut links = Vec::new();
    let mut dropped_links = 0;

    let context_of = |headings: &[(u8, String)]| -> HeadingContext {
        match headings.iter().rposition(|(level, _)| *level >= 2) {
            Some(u) if u == headings.len() - 1 => HeadingContext {
                subheading: headings[u].1.clone(),
                section_heading: u
                    .checked_sub(1)
                    .map(|s| headings[s].1.clone())
                    .unwrap_or_default(),
            },
            _ => HeadingContext::default(),
        }
    };

    let mut stack = vec![body];
    while let Some(n) = stack.pop() {
        let Some(tag) = tree.tag(n) else { continue };
        if is_invisible(tag) {
            continue;
        }
        if let Some(level) = heading_level(tag) {
            while headings.last().is_some_and(|(l, _)| *l >= level) {
                headings.pop();
            }
            headings.push((level, tree.text(n)));
        }
        if tag == "p" && !block_index.contains_key(&n) {
            let text = tree.text(n);
            block_index.insert(n, paragraphs.len());
            paragraphs.push(Paragraph {
                context: context_of(&headings),
                kind: BlockKind::Paragraph,
                terms: tokenize(&text).iter().map(|t| stem(&t.text)).collect(),
                text,
            });
        }
        if tag == "a" {
            if let Some(href) = tree.attr(n, "href") {
                match resolve_url(base_url, href) {
                    Ok(absolute_url) => {
                        let boundary = topical_boundary(n, tree);
                        let idx = *block_index.entry(boundary.block).or_insert_with(|| {
                            let text = block_text(tree, &boundary);
                            paragraphs.push(Paragraph {
                                context: context_of(&headings),
                                kind: boundary.kind,
                                terms: tokenize(&text).iter().map(|t| stem(&t.text)).collect(),
                                text,
                            });
                            paragraphs.len() - 1
                        });
                        let ctx = context_of(&headings);
                        links.push(UnvisitedLink {
                            absolute_url,
                            anchor_text: tree.text(n),
                            from_list: boundary.from_list,
                            boundary: boundary.words,
                            subheading_u: ctx.subheading,
                            section_heading: ctx.section_heading,
                            main_heading: main_heading.clone(),
                            block_index: idx,
                        });
                    }
                    Err(e) => {
                        tracing::debug!("dropping link: {e}");
                        dropped_links += 1;
                    }
                }
            }
        }
        stack.extend(tree.children(n).iter().rev());
    }

    PageElements {
        base_url: base_url.clone(),
        main_heading,
        body_terms,
        links,
        paragraphs,
        dropped_links,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> TagTree {
        parse_html(s.as_bytes(), None, DEFAULT_SIZE_CAP).unwrap()
    }

    fn base() -> Url {
        Url::parse("http://example.org/dir/page.html").unwrap()
    }

    fn paragraph_texts(tree: &TagTree) -> Vec<String> {
        tree.descendants(tree.root())
            .into_iter()
            .filter(|&n| tree.tag(n) == Some("p"))
            .map(|n| tree.text(n))
            .collect()
    }

    #[test]
    fn well_formed_paragraph() {
        let tree = parse("<html><body><p>hi</p></body></html>");
        assert_eq!(tree.tag(tree.root()), Some("html"));
        assert_eq!(paragraph_texts(&tree), ["hi"]);
    }

    #[test]
    fn unclosed_paragraphs_become_siblings() {
        let tree = parse("<p>a<p>b");
        assert_eq!(paragraph_texts(&tree), ["a", "b"]);
        let ps: Vec<_> = tree
            .descendants(tree.root())
            .into_iter()
            .filter(|&n| tree.tag(n) == Some("p"))
            .collect();
        assert_eq!(tree.parent(ps[0]), tree.parent(ps[1]));
    }

    #[test]
    fn empty_input_has_empty_body() {
        let tree = parse("");
        let body = tree.find("body").expect("body");
        assert!(tree.children(body).is_empty());
    }

    #[test]
    fn size_cap_is_enforced() {
        let err = parse_html(&[b'a'; 11], None, 10).unwrap_err();
        assert_eq!(err, HtmlError::TooLarge { size: 11, cap: 10 });
    }

    #[test]
    fn declared_encoding_is_honoured() {
        let tree = parse_html(b"<p>caf\xe9</p>", Some("latin1"), DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(paragraph_texts(&tree), ["café"]);
        let tree = parse_html(b"<p>caf\xe9</p>", None, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(paragraph_texts(&tree), ["caf\u{fffd}"]);
    }

    #[test]
    fn main_heading_prefers_h1_then_title() {
        let pe = extract_page_elements(&parse("<title>Y</title><h1>X</h1>"), &base());
        assert_eq!(pe.main_heading, "X");
        let pe = extract_page_elements(&parse("<title>Y</title><p>body</p>"), &base());
        assert_eq!(pe.main_heading, "Y");
        let pe = extract_page_elements(&parse("<p>body</p>"), &base());
        assert_eq!(pe.main_heading, "");
    }

    #[test]
    fn heading_attribution() {
        let html = "<h1>M</h1><h2>S</h2><h3>U</h3><p><a href='x.html'>go</a></p>\
                    <h2>T</h2><p><a href='y.html'>again</a></p>";
        let pe = extract_page_elements(&parse(html), &base());
        assert_eq!(pe.links.len(), 2);
        assert_eq!(pe.links[0].subheading_u, "U");
        assert_eq!(pe.links[0].section_heading, "S");
        assert_eq!(pe.links[0].main_heading, "M");
        assert_eq!(pe.links[1].subheading_u, "T");
        assert_eq!(pe.links[1].section_heading, "M");
        assert_eq!(
            pe.links[0].absolute_url.as_str(),
            "http://example.org/dir/x.html"
        );
    }

    fn words(b: &[BoundaryWord]) -> Vec<(String, bool)> {
        b.iter().map(|w| (w.term.clone(), w.is_anchor)).collect()
    }

    #[test]
    fn paragraph_boundary_flags_anchor_words() {
        let pe = extract_page_elements(
            &parse("<p>alpha <a href='/b'>beta</a> gamma</p>"),
            &base(),
        );
        assert_eq!(
            words(&pe.links[0].boundary),
            [
                ("alpha".into(), false),
                ("beta".into(), true),
                ("gamma".into(), false)
            ]
        );
        assert!(!pe.links[0].from_list);
    }

    #[test]
    fn list_boundary_covers_all_items() {
        let pe = extract_page_elements(
            &parse("<ul><li><a href='/1'>one</a></li><li>two</li></ul>"),
            &base(),
        );
        let link = &pe.links[0];
        assert!(link.from_list);
        assert_eq!(
            words(&link.boundary),
            [("on".into(), true), ("two".into(), false)]
        );
    }

    #[test]
    fn empty_anchor_keeps_paragraph_words() {
        let pe = extract_page_elements(&parse("<p>x<a href='/e'></a></p>"), &base());
        assert_eq!(words(&pe.links[0].boundary), [("x".into(), false)]);
    }

    #[test]
    fn other_block_uses_direct_text_only() {
        let html = "<div>intro <a href='/z'>zeta</a><p>nested paragraph</p></div>";
        let pe = extract_page_elements(&parse(html), &base());
        assert_eq!(
            words(&pe.links[0].boundary),
            [("intro".into(), false), ("zeta".into(), true)]
        );
        let para = &pe.paragraphs[pe.links[0].block_index];
        assert_eq!(para.text, "intro zeta");
    }

    #[test]
    fn script_and_style_are_invisible() {
        let pe = extract_page_elements(
            &parse("<p>seen<script>hidden()</script><style>p{}</style></p>"),
            &base(),
        );
        assert_eq!(pe.body_terms, ["seen"]);
    }

    #[test]
    fn links_in_one_paragraph_share_a_block() {
        let pe = extract_page_elements(
            &parse("<p><a href='/a'>a</a> and <a href='/b'>b</a></p><p><a href='/c'>c</a></p>"),
            &base(),
        );
        let blocks: Vec<usize> = pe.links.iter().map(|l| l.block_index).collect();
        assert_eq!(blocks, [0, 0, 1]);
    }

    #[test]
    fn rejected_hrefs_are_counted() {
        let pe = extract_page_elements(
            &parse("<p><a href='mailto:x@y'>m</a><a href='javascript:void(0)'>j</a><a href='ok.html'>k</a><a>no href</a></p>"),
            &base(),
        );
        assert_eq!(pe.links.len(), 1);
        assert_eq!(pe.dropped_links, 2);
    }

    #[test]
    fn resolve_examples() {
        let b = Url::parse("http://a/b/").unwrap();
        assert_eq!(resolve_url(&b, "c.html").unwrap().as_str(), "http://a/b/c.html");
        assert_eq!(resolve_url(&b, "#frag").unwrap(), b);
        assert!(matches!(
            resolve_url(&b, "mailto:x@y"),
            Err(UrlRejection::Scheme(_))
        ));
        assert!(resolve_url(&b, "data:text/plain,hi").is_err());
        assert!(resolve_url(&b, "javascript:alert(1)").is_err());
    }

    #[test]
    fn canonicalization() {
        let u = canonical_url("HTTP://Example.COM:80/a/%7euser/%2f?q=%3d#top").unwrap();
        assert_eq!(u.as_str(), "http://example.com/a/~user/%2F?q=%3D");
        let u = canonical_url("https://example.com:443").unwrap();
        assert_eq!(u.as_str(), "https://example.com/");
        let u = canonical_url("https://example.com:8443/x").unwrap();
        assert_eq!(u.as_str(), "https://example.com:8443/x");
    }
}
