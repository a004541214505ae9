//! Fact-checks mobile-app privacy policies against static-analysis
//! evidence of user-interaction data collection.
//!
//! The pipeline has two sides. The policy side segments policy text,
//! extracts collection claims and labels them with a closed taxonomy of
//! interaction data types, collection techniques and contexts. The code
//! side parses a decoded app bundle (layout XML plus smali), links UI
//! elements to their handlers and derives collection evidence from
//! analytics invocations and API heuristics. The fact-check stage maps
//! claims to evidence and computes consistency and coverage rates.

pub mod app_model;
pub mod error;
pub mod evidence;
pub mod factcheck;
pub mod policy;
pub mod report;
mod text;
pub mod vocabulary;

pub use error::{Error, Result};
pub use vocabulary::{
    load_lexicon, CollectionContext, CollectionTechnique, InteractionDataType, Lexicon,
    TaxonomyLabel,
};
