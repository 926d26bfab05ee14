//! Topical-focus prediction by D-Number galaxy detection.
//!
//! Words of a topical boundary are looked up in the DDC lexicon and every
//! (occurrence, code) pair becomes a [`Dot`]. Dots are then partitioned by
//! successive digit prefixes; at each level the region(s) with the maximum
//! weight `W = n * sum(length * anchor_impact)` survive. Tied regions are
//! pooled and refined together, each keeping its own prefix.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::html::{BoundaryWord, PageElements, UnvisitedLink};
use crate::lexicon::{DNumber, DdcLexicon};
use crate::text::stemmed_terms;

/// Anchor-text words weigh about 40% more than surrounding text.
pub const ANCHOR_IMPACT: f64 = 1.4;
pub const PLAIN_IMPACT: f64 = 1.0;
/// Main-heading terms of a page reuse the anchor impact.
pub const HEADING_IMPACT: f64 = ANCHOR_IMPACT;
/// Priority given to links predicted off-topic.
pub const DEFAULT_OFF_TOPIC_PRIORITY: f64 = 0.01;
pub const DEFAULT_REFINEMENT_DEPTH: usize = 3;

/// Relative tolerance under which two region weights count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dot {
    pub code: DNumber,
    pub is_anchor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorImpact {
    pub anchored: f64,
    pub plain: f64,
}

impl Default for AnchorImpact {
    fn default() -> Self {
        AnchorImpact {
            anchored: ANCHOR_IMPACT,
            plain: PLAIN_IMPACT,
        }
    }
}

impl AnchorImpact {
    fn of(&self, dot: &Dot) -> f64 {
        if dot.is_anchor {
            self.anchored
        } else {
            self.plain
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalaxyResult {
    pub prefixes: BTreeSet<String>,
    pub weight: f64,
    pub dot_count: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum TopicConfigError {
    #[error("at least one topic is required")]
    NoTopics,
    #[error("topic {topic:?} must be exactly {depth} digits")]
    BadTopic { topic: String, depth: usize },
    #[error("refinement depth must be at least 1")]
    BadDepth,
    #[error("off-topic priority {0} must lie strictly between 0 and 1")]
    BadOffTopicPriority(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicConfig {
    pub topics: BTreeSet<String>,
    pub refinement_depth: usize,
    pub off_topic_priority: f64,
}

impl TopicConfig {
    pub fn new<I, S>(topics: I) -> Result<Self, TopicConfigError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let cfg = TopicConfig {
            topics: topics.into_iter().map(Into::into).collect(),
            refinement_depth: DEFAULT_REFINEMENT_DEPTH,
            off_topic_priority: DEFAULT_OFF_TOPIC_PRIORITY,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), TopicConfigError> {
        if self.refinement_depth == 0 {
            return Err(TopicConfigError::BadDepth);
        }
        if self.topics.is_empty() {
            return Err(TopicConfigError::NoTopics);
        }
        for t in &self.topics {
            if t.len() != self.refinement_depth || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(TopicConfigError::BadTopic {
                    topic: t.clone(),
                    depth: self.refinement_depth,
                });
            }
        }
        if !(self.off_topic_priority > 0.0 && self.off_topic_priority < 1.0) {
            return Err(TopicConfigError::BadOffTopicPriority(self.off_topic_priority));
        }
        Ok(())
    }
}

/// Greedy longest-first phrase matching over stemmed terms. Returns the
/// start index, word count and codes of each match.
pub fn match_terms<'a, S: AsRef<str>>(
    terms: &[S],
    lexicon: &'a DdcLexicon,
) -> Vec<(usize, usize, &'a [DNumber])> {
    let max = lexicon.max_phrase_words().max(1);
    let mut out = Vec::new();
    let mut i = 0;
    while i < terms.len() {
        let longest = max.min(terms.len() - i);
        let mut matched = false;
        for n in (1..=longest).rev() {
            let key = terms[i..i + n]
                .iter()
                .map(AsRef::as_ref)
                .collect::<Vec<_>>()
                .join(" ");
            let codes = lexicon.lookup(&key);
            if !codes.is_empty() {
                out.push((i, n, codes));
                i += n;
                matched = true;
                break;
            }
        }
        if !matched {
            i += 1;
        }
    }
    out
}

/// One dot per (matched occurrence, code). A phrase match takes its anchor
/// flag from its first word.
pub fn plot_dots(boundary: &[BoundaryWord], lexicon: &DdcLexicon) -> Vec<Dot> {
    let terms: Vec<&str> = boundary.iter().map(|w| w.term.as_str()).collect();
    match_terms(&terms, lexicon)
        .into_iter()
        .flat_map(|(start, _, codes)| {
            let is_anchor = boundary[start].is_anchor;
            codes.iter().map(move |c| Dot {
                code: c.clone(),
                is_anchor,
            })
        })
        .collect()
}

pub fn region_weight(dots: &[Dot]) -> f64 {
    region_weight_with(dots, AnchorImpact::default())
}

pub fn region_weight_with<'a, I>(dots: I, impact: AnchorImpact) -> f64
where
    I: IntoIterator<Item = &'a Dot>,
{
    let mut n = 0usize;
    let mut sum = 0.0;
    for d in dots {
        n += 1;
        sum += d.code.len() as f64 * impact.of(d);
    }
    n as f64 * sum
}

pub fn find_galaxy(dots: &[Dot], depth: usize) -> Option<GalaxyResult> {
    find_galaxy_with(dots, depth, AnchorImpact::default())
}

pub fn find_galaxy_with(dots: &[Dot], depth: usize, impact: AnchorImpact) -> Option<GalaxyResult> {
    let mut survivors: Vec<&Dot> = dots.iter().collect();
    let mut kept = BTreeSet::new();
    let mut best = 0.0;
    for position in 0..depth.max(1) {
        let mut regions: BTreeMap<&str, Vec<&Dot>> = BTreeMap::new();
        for d in survivors {
            if d.code.len() > position {
                regions
                    .entry(&d.code.digits()[..=position])
                    .or_default()
                    .push(d);
            }
        }
        if regions.is_empty() {
            return None;
        }
        let weights: Vec<(&str, f64)> = regions
            .iter()
            .map(|(p, ds)| (*p, region_weight_with(ds.iter().copied(), impact)))
            .collect();
        best = weights.iter().map(|(_, w)| *w).fold(f64::MIN, f64::max);
        kept = weights
            .iter()
            .filter(|(_, w)| ties(*w, best))
            .map(|(p, _)| (*p).to_owned())
            .collect::<BTreeSet<String>>();
        survivors = regions
            .into_iter()
            .filter(|(p, _)| kept.contains(*p))
            .flat_map(|(_, ds)| ds)
            .collect();
    }
    Some(GalaxyResult {
        prefixes: kept,
        weight: best,
        dot_count: survivors.len(),
    })
}

fn ties(w: f64, best: f64) -> bool {
    (best - w).abs() <= TIE_TOLERANCE * best.abs().max(1.0)
}

pub fn classify_link(
    link: &UnvisitedLink,
    lexicon: &DdcLexicon,
    config: &TopicConfig,
) -> Option<GalaxyResult> {
    find_galaxy(&plot_dots(&link.boundary, lexicon), config.refinement_depth)
}

/// Galaxy over anchor words only; the ablation baseline.
pub fn classify_anchor_only(
    link: &UnvisitedLink,
    lexicon: &DdcLexicon,
    config: &TopicConfig,
) -> Option<GalaxyResult> {
    let anchor: Vec<BoundaryWord> = link
        .boundary
        .iter()
        .filter(|w| w.is_anchor)
        .cloned()
        .collect();
    find_galaxy(&plot_dots(&anchor, lexicon), config.refinement_depth)
}

/// Body terms plot unweighted dots; main-heading terms plot dots with the
/// heading impact.
pub fn classify_page(
    page: &PageElements,
    lexicon: &DdcLexicon,
    config: &TopicConfig,
) -> Option<GalaxyResult> {
    let mut dots = plot_dots(&as_boundary(&page.body_terms, false), lexicon);
    let heading = stemmed_terms(&page.main_heading);
    dots.extend(plot_dots(&as_boundary(&heading, true), lexicon));
    let impact = AnchorImpact {
        anchored: HEADING_IMPACT,
        plain: PLAIN_IMPACT,
    };
    find_galaxy_with(&dots, config.refinement_depth, impact)
}

fn as_boundary(terms: &[String], is_anchor: bool) -> Vec<BoundaryWord> {
    terms
        .iter()
        .map(|t| BoundaryWord {
            term: t.clone(),
            is_anchor,
        })
        .collect()
}

pub fn is_on_topic(prefixes: Option<&BTreeSet<String>>, config: &TopicConfig) -> bool {
    prefixes.is_some_and(|p| p.iter().any(|x| config.topics.contains(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::stem;

    fn dot(code: &str, is_anchor: bool) -> Dot {
        Dot {
            code: DNumber::parse(code).unwrap(),
            is_anchor,
        }
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn region_weight_examples() {
        assert_eq!(region_weight(&[dot("291", false), dot("292", false)]), 12.0);
        let w = region_weight(&[dot("291", true), dot("292", false)]);
        assert!((w - 14.4).abs() < 1e-12);
        assert_eq!(region_weight(&[]), 0.0);
    }

    #[test]
    fn duplicating_dots_quadruples_weight() {
        let dots = vec![dot("155.95", true), dot("391", false), dot("7", false)];
        let mut doubled = dots.clone();
        doubled.extend(dots.clone());
        assert!((region_weight(&doubled) - 4.0 * region_weight(&dots)).abs() < 1e-9);
    }

    #[test]
    fn four_way_tie_at_third_digit() {
        let dots: Vec<Dot> = ["291", "292", "293", "299"]
            .iter()
            .map(|c| dot(c, false))
            .collect();
        let g = find_galaxy(&dots, 3).unwrap();
        assert_eq!(g.prefixes, set(&["291", "292", "293", "299"]));
        assert_eq!(g.weight, 3.0);
        assert_eq!(g.dot_count, 4);
        assert_eq!(find_galaxy(&dots, 2).unwrap().prefixes, set(&["29"]));
        assert_eq!(find_galaxy(&dots, 1).unwrap().prefixes, set(&["2"]));
    }

    #[test]
    fn religion_side_wins_mixed_dots() {
        let dots = vec![
            dot("391", false),
            dot("291", false),
            dot("291", false),
            dot("291", false),
        ];
        let g = find_galaxy(&dots, 3).unwrap();
        assert_eq!(g.prefixes, set(&["291"]));
        assert_eq!(g.weight, 27.0);
    }

    #[test]
    fn empty_and_short_codes() {
        assert_eq!(find_galaxy(&[], 3), None);
        assert_eq!(find_galaxy(&[dot("2", false)], 3), None);
        assert_eq!(
            find_galaxy(&[dot("2", false)], 1).unwrap().prefixes,
            set(&["2"])
        );
    }

    #[test]
    fn tied_regions_keep_their_own_prefixes() {
        // '2' and '7' tie at the first digit; refinement must not merge 29x with 79x
        let dots = vec![dot("291", false), dot("795", false), dot("796", false), dot("299", false)];
        let g = find_galaxy(&dots, 2).unwrap();
        assert_eq!(g.prefixes, set(&["29", "79"]));
    }

    #[test]
    fn plot_dots_clothing() {
        let lex = DdcLexicon::seed();
        let b = vec![BoundaryWord {
            term: stem("clothing"),
            is_anchor: true,
        }];
        let dots = plot_dots(&b, &lex);
        assert_eq!(dots.len(), 3);
        assert!(dots.iter().all(|d| d.is_anchor));
        let codes: BTreeSet<String> = dots.iter().map(|d| d.code.to_string()).collect();
        assert_eq!(codes, set(&["155.95", "391", "746.92"]));
    }

    #[test]
    fn plot_dots_duplicates_and_misses() {
        let lex = DdcLexicon::seed();
        let w = |t: &str| BoundaryWord {
            term: stem(t),
            is_anchor: false,
        };
        assert!(plot_dots(&[w("zzzz"), w("the")], &lex).is_empty());
        assert_eq!(plot_dots(&[w("shinto"), w("and"), w("shinto")], &lex).len(), 2);
    }

    #[test]
    fn phrase_takes_precedence_over_words() {
        let lex = DdcLexicon::load("297\tislamic art\n700\tart\n".as_bytes())
            .unwrap()
            .lexicon;
        let b = vec![
            BoundaryWord { term: stem("islamic"), is_anchor: true },
            BoundaryWord { term: stem("art"), is_anchor: false },
            BoundaryWord { term: stem("art"), is_anchor: false },
        ];
        let dots = plot_dots(&b, &lex);
        assert_eq!(dots, vec![dot("297", true), dot("700", false)]);
    }

    #[test]
    fn on_topic_is_set_intersection() {
        let cfg = TopicConfig::new(["299"]).unwrap();
        assert!(is_on_topic(Some(&set(&["299"])), &cfg));
        assert!(!is_on_topic(None, &cfg));
        let cfg = TopicConfig::new(["299", "641"]).unwrap();
        assert!(is_on_topic(Some(&set(&["291", "299"])), &cfg));
        assert!(!is_on_topic(Some(&set(&["291"])), &cfg));
    }

    #[test]
    fn topic_config_validation() {
        assert_eq!(TopicConfig::new(Vec::<String>::new()), Err(TopicConfigError::NoTopics));
        assert!(TopicConfig::new(["29"]).is_err());
        assert!(TopicConfig::new(["2x9"]).is_err());
        let mut cfg = TopicConfig::new(["299"]).unwrap();
        cfg.off_topic_priority = 1.0;
        assert!(cfg.validate().is_err());
    }
}
