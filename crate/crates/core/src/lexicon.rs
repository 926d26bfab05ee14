//! Dewey-Decimal term lexicon.
//!
//! Each record maps a stemmed word or phrase to one or more D-Numbers. The
//! on-disk format is one `code<TAB>term` record per line, `#` starting a
//! comment. Terms are stemmed word-by-word at load time unless the stream
//! starts with the [`STEMMED_PRAGMA`] line, which is what [`DdcLexicon::to_lines`]
//! writes so that a saved lexicon reloads without re-stemming.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{stem, tokenize};

/// Seed lexicon shipped with the crate. Covers all ten top-level classes.
pub const SEED_LEXICON: &str = include_str!("../data/ddc_seed.tsv");

/// First line of a lexicon whose terms are already stemmed.
pub const STEMMED_PRAGMA: &str = "#!stemmed";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DNumberError {
    #[error("empty D-Number")]
    Empty,
    #[error("invalid character {0:?} in D-Number")]
    InvalidChar(char),
    #[error("more than one decimal point")]
    MultiplePoints,
    #[error("integer part must have 1 to 3 digits, got {0}")]
    IntegerDigits(usize),
    #[error("digit position {position} out of range for D-Number of length {length}")]
    OutOfRange { position: usize, length: usize },
}

/// A Dewey Decimal code: 1-3 integer digits plus optional fraction digits.
///
/// Digits are kept as written; codes are never padded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DNumber {
    digits: String,
    integer_len: usize,
}

impl DNumber {
    pub fn parse(s: &str) -> Result<Self, DNumberError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(DNumberError::Empty);
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => {
                if f.contains('.') {
                    return Err(DNumberError::MultiplePoints);
                }
                (i, f)
            }
            None => (s, ""),
        };
        if let Some(c) = int_part.chars().chain(frac_part.chars()).find(|c| !c.is_ascii_digit()) {
            return Err(DNumberError::InvalidChar(c));
        }
        if int_part.is_empty() || int_part.len() > 3 {
            return Err(DNumberError::IntegerDigits(int_part.len()));
        }
        Ok(DNumber {
            digits: format!("{int_part}{frac_part}"),
            integer_len: int_part.len(),
        })
    }

    /// Number of digits, integer and fraction, the decimal point not counted.
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    /// Always false; kept for the `len`/`is_empty` pairing.
    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Digit at a 0-based position, integer digits first, decimal point skipped.
    pub fn digit(&self, position: usize) -> Result<char, DNumberError> {
        self.digits
            .as_bytes()
            .get(position)
            .map(|&b| b as char)
            .ok_or(DNumberError::OutOfRange {
                position,
                length: self.len(),
            })
    }

    /// All digits without the decimal point.
    pub fn digits(&self) -> &str {
        &self.digits
    }

    pub fn integer_digits(&self) -> &str {
        &self.digits[..self.integer_len]
    }

    pub fn fraction_digits(&self) -> &str {
        &self.digits[self.integer_len..]
    }
}

/// Length of a D-Number as used in the region weight.
pub fn dnumber_length(d: &DNumber) -> usize {
    d.len()
}

pub fn dnumber_digit(d: &DNumber, position: usize) -> Result<char, DNumberError> {
    d.digit(position)
}

impl fmt::Display for DNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.integer_digits())?;
        if self.integer_len < self.digits.len() {
            write!(f, ".{}", self.fraction_digits())?;
        }
        Ok(())
    }
}

impl FromStr for DNumber {
    type Err = DNumberError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DNumber::parse(s)
    }
}

impl TryFrom<String> for DNumber {
    type Error = DNumberError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        DNumber::parse(&s)
    }
}

impl From<DNumber> for String {
    fn from(d: DNumber) -> String {
        d.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub term: String,
    pub codes: Vec<DNumber>,
}

/// A rejected lexicon line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconDiagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LexiconDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DdcLexicon {
    entries: BTreeMap<String, LexiconEntry>,
    max_phrase_words: usize,
}

/// Result of loading a lexicon: the lexicon plus every rejected line.
#[derive(Debug)]
pub struct LexiconLoad {
    pub lexicon: DdcLexicon,
    pub diagnostics: Vec<LexiconDiagnostic>,
}

impl DdcLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The lexicon shipped in `data/ddc_seed.tsv`.
    pub fn seed() -> Self {
        Self::load(SEED_LEXICON.as_bytes())
            .expect("reading from a byte slice cannot fail")
            .lexicon
    }

    pub fn load<R: BufRead>(source: R) -> std::io::Result<LexiconLoad> {
        let mut lexicon = DdcLexicon::new();
        let mut diagnostics = Vec::new();
        let mut pre_stemmed = false;
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if idx == 0 && line.trim_end() == STEMMED_PRAGMA {
                pre_stemmed = true;
                continue;
            }
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (code, term) = match trimmed.split_once('\t') {
                Some(pair) => pair,
                None => match trimmed.split_once(char::is_whitespace) {
                    Some(pair) => pair,
                    None => {
                        diagnostics.push(LexiconDiagnostic {
                            line: line_no,
                            message: "expected `code<TAB>term`".into(),
                        });
                        continue;
                    }
                },
            };
            let code = match DNumber::parse(code) {
                Ok(c) => c,
                Err(e) => {
                    diagnostics.push(LexiconDiagnostic {
                        line: line_no,
                        message: format!("malformed code {code:?}: {e}"),
                    });
                    continue;
                }
            };
            let term = if pre_stemmed {
                term.split_whitespace().collect::<Vec<_>>().join(" ")
            } else {
                normalize_term(term)
            };
            if term.is_empty() {
                diagnostics.push(LexiconDiagnostic {
                    line: line_no,
                    message: "term has no word characters".into(),
                });
                continue;
            }
            lexicon.insert(term, code);
        }
        for d in &diagnostics {
            tracing::warn!(line = d.line, "lexicon record rejected: {}", d.message);
        }
        if lexicon.is_empty() {
            tracing::warn!("lexicon contains no valid records");
        }
        Ok(LexiconLoad {
            lexicon,
            diagnostics,
        })
    }

    /// Adds a code to an already-stemmed term. Duplicate codes are ignored.
    pub fn insert(&mut self, term: String, code: DNumber) {
        let words = term.split(' ').count();
        self.max_phrase_words = self.max_phrase_words.max(words);
        let entry = self.entries.entry(term.clone()).or_insert_with(|| LexiconEntry {
            term,
            codes: Vec::new(),
        });
        if !entry.codes.contains(&code) {
            entry.codes.push(code);
            entry.codes.sort();
        }
    }

    /// Exact-match codes for a stemmed term or phrase.
    pub fn lookup(&self, candidate: &str) -> &[DNumber] {
        self.entries
            .get(candidate)
            .map(|e| e.codes.as_slice())
            .unwrap_or(&[])
    }

    pub fn entry(&self, term: &str) -> Option<&LexiconEntry> {
        self.entries.get(term)
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Word count of the longest phrase present (0 for an empty lexicon).
    pub fn max_phrase_words(&self) -> usize {
        self.max_phrase_words
    }

    /// Serializes to the line format with the stemmed pragma.
    pub fn to_lines(&self) -> String {
        let mut out = String::from(STEMMED_PRAGMA);
        out.push('\n');
        for entry in self.entries.values() {
            for code in &entry.codes {
                out.push_str(&format!("{code}\t{}\n", entry.term));
            }
        }
        out
    }

    /// Terms whose codes start with any of the given digit prefixes.
    pub fn terms_with_prefix<'a>(&'a self, prefixes: &'a BTreeSet<String>) -> impl Iterator<Item = &'a LexiconEntry> + 'a {
        self.entries.values().filter(move |e| {
            e.codes
                .iter()
                .any(|c| prefixes.iter().any(|p| c.digits().starts_with(p.as_str())))
        })
    }
}

/// Tokenizes, stems and re-joins a raw term.
pub fn normalize_term(raw: &str) -> String {
    tokenize(raw)
        .iter()
        .map(|t| stem(&t.text))
        .collect::<Vec<_>>()
        .join(" ")
}
