//! Focused crawler engine.
//!
//! Unvisited links are classified by plotting the Dewey-Decimal codes of the
//! words around them and picking the heaviest digit-prefix region (the
//! "galaxy"). On-topic links are then scored against a T-Graph of exemplar
//! pages whose nodes record the link distance to target documents.

pub mod api;
pub mod crawl;
pub mod eval;
pub mod galaxy;
pub mod html;
pub mod lexicon;
mod porter;
pub mod text;
pub mod tgraph;

pub use galaxy::{Dot, GalaxyResult, TopicConfig};
pub use html::{PageElements, TagTree, UnvisitedLink};
pub use lexicon::{DNumber, DdcLexicon};
pub use text::{stem, TermFrequencyVector};
pub use tgraph::TGraph;
