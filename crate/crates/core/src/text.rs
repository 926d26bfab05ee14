//! Tokenization, stemming, phrase candidates and term-frequency vectors.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use crate::porter::stem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Byte range of the token in the source text.
    pub span: Range<usize>,
}

pub type TokenSequence = Vec<Token>;

/// Lowercased maximal runs of Unicode letters and digits.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            tokens.extend(make_token(text, s..i));
        }
    }
    if let Some(s) = start {
        tokens.extend(make_token(text, s..text.len()));
    }
    tokens
}

fn make_token(text: &str, span: Range<usize>) -> Option<Token> {
    // lowercasing can introduce combining marks (e.g. U+0130); drop them
    let lowered: String = text[span.clone()]
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric())
        .collect();
    (!lowered.is_empty()).then_some(Token { text: lowered, span })
}

/// Tokenize then stem every token.
pub fn stemmed_terms(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| stem(&t.text)).collect()
}

/// A contiguous n-gram of stemmed tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseCandidate {
    pub start: usize,
    pub words: usize,
    pub text: String,
}

/// All contiguous n-grams, n descending from `max_words` to 1, each stemmed
/// word by word. Within one n, candidates appear in token order.
pub fn phrase_candidates(tokens: &[Token], max_words: usize) -> Vec<PhraseCandidate> {
    let stems: Vec<String> = tokens.iter().map(|t| stem(&t.text)).collect();
    let max_words = max_words.max(1).min(stems.len());
    let mut out = Vec::new();
    for n in (1..=max_words).rev() {
        for start in 0..=stems.len() - n {
            out.push(PhraseCandidate {
                start,
                words: n,
                text: stems[start..start + n].join(" "),
            });
        }
    }
    out
}

/// Sparse term-frequency vector over stemmed terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermFrequencyVector {
    counts: BTreeMap<String, u32>,
}

impl TermFrequencyVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Self::new();
        for t in terms {
            v.add(t.into(), 1);
        }
        v
    }

    /// Builds from explicit counts; zero counts are dropped.
    pub fn from_counts<I: IntoIterator<Item = (String, u32)>>(counts: I) -> Self {
        let mut v = Self::new();
        for (t, c) in counts {
            v.add(t, c);
        }
        v
    }

    pub fn add(&mut self, term: String, count: u32) {
        if count > 0 {
            *self.counts.entry(term).or_insert(0) += count;
        }
    }

    pub fn get(&self, term: &str) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn magnitude(&self) -> f64 {
        self.counts
            .values()
            .map(|&c| f64::from(c) * f64::from(c))
            .sum::<f64>()
            .sqrt()
    }

    /// Dot product over the shared terms, accumulated in ascending term order
    /// so that `a.dot(b) == b.dot(a)` bit for bit.
    pub fn dot(&self, other: &Self) -> f64 {
        let mut a = self.counts.iter().peekable();
        let mut b = other.counts.iter().peekable();
        let mut sum = 0.0;
        while let (Some((ka, va)), Some((kb, vb))) = (a.peek(), b.peek()) {
            match ka.cmp(kb) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += f64::from(**va) * f64::from(**vb);
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }
}

pub fn build_tf_vector<S: AsRef<str>>(terms: &[S]) -> TermFrequencyVector {
    TermFrequencyVector::from_terms(terms.iter().map(|t| t.as_ref().to_owned()))
}

/// Cosine similarity of two term-frequency vectors; 0 when either is empty.
pub fn cosine(x: &TermFrequencyVector, y: &TermFrequencyVector) -> f64 {
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let denom = x.magnitude() * y.magnitude();
    (x.dot(y) / denom).clamp(0.0, 1.0)
}
