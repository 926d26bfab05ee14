//! Corpus snapshots: a directory holding `manifest.tsv` and page files.
//!
//! Each manifest line is `url<TAB>status<TAB>content_type<TAB>path`, with
//! `path` relative to the snapshot directory. A status in the 3xx range
//! stores the redirect target URL in the `path` column instead. Lines
//! starting with `#` are comments.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;
use url::Url;

use crate::html::canonical_url;

pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read snapshot manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Line { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub status: u16,
    pub content_type: String,
    /// File path relative to the snapshot root, or the redirect target.
    pub path: String,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusManifest {
    root: PathBuf,
    entries: BTreeMap<Url, ManifestEntry>,
}

impl CorpusManifest {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        CorpusManifest {
            root: root.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn load(root: &Path) -> Result<Self, CorpusError> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })?;
        Self::parse(root, &text)
    }

    pub fn parse(root: &Path, text: &str) -> Result<Self, CorpusError> {
        let mut m = CorpusManifest::new(root);
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CorpusError::Line { line: idx + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            let [url, status, content_type, path] = cols[..] else {
                return Err(err(format!("expected 4 tab-separated columns, found {}", cols.len())));
            };
            let url = canonical_url(url).map_err(|e| err(format!("{url}: {e}")))?;
            let status: u16 = status.parse().map_err(|_| err(format!("bad status `{status}`")))?;
            m.entries.insert(
                url,
                ManifestEntry {
                    status,
                    content_type: content_type.to_owned(),
                    path: path.to_owned(),
                },
            );
        }
        Ok(m)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn insert(&mut self, url: Url, entry: ManifestEntry) {
        self.entries.insert(url, entry);
    }

    pub fn get(&self, url: &Url) -> Option<&ManifestEntry> {
        self.entries.get(url)
    }

    pub fn contains(&self, url: &Url) -> bool {
        self.entries.contains_key(url)
    }

    pub fn urls(&self) -> impl Iterator<Item = &Url> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Url, &ManifestEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stored bytes of a page entry.
    pub fn read_body(&self, entry: &ManifestEntry) -> io::Result<Vec<u8>> {
        fs::read(self.root.join(&entry.path))
    }

    /// Manifest text, sorted by URL.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# url\tstatus\tcontent_type\tpath\n");
        for (url, e) in &self.entries {
            out.push_str(&format!("{url}\t{}\t{}\t{}\n", e.status, e.content_type, e.path));
        }
        out
    }

    pub fn save(&self) -> io::Result<()> {
        fs::create_dir_all(&self.root)?;
        fs::write(self.root.join(MANIFEST_FILE), self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render() {
        let text = "# comment\nhttp://A.example/x#f\t200\ttext/html\tpages/x.html\nhttp://a.example/old\t301\t-\thttp://a.example/x\n";
        let m = CorpusManifest::parse(Path::new("/snap"), text).unwrap();
        assert_eq!(m.len(), 2);
        let x = m.get(&Url::parse("http://a.example/x").unwrap()).unwrap();
        assert_eq!(x.status, 200);
        assert_eq!(x.path, "pages/x.html");
        let again = CorpusManifest::parse(Path::new("/snap"), &m.to_text()).unwrap();
        assert_eq!(again.to_text(), m.to_text());
    }

    #[test]
    fn malformed_lines_are_reported() {
        let e = CorpusManifest::parse(Path::new("/"), "http://a/\t200\n").unwrap_err();
        assert!(matches!(e, CorpusError::Line { line: 1, .. }));
        let e = CorpusManifest::parse(Path::new("/"), "\nhttp://a/\tok\ttext/html\tp\n").unwrap_err();
        assert!(matches!(e, CorpusError::Line { line: 2, .. }));
    }
}
