//! Policy-side analysis: sentence segmentation, claim extraction,
//! multi-label claim classification, completeness categorization and
//! bigram diagnostics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;
use crate::vocabulary::{
    CollectionContext, CollectionTechnique, InteractionDataType, Lexicon, TaxonomyLabel,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub source_id: String,
    pub raw_text: String,
    pub sentences: Vec<PolicySentence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySentence {
    pub index: usize,
    pub text: String,
    pub relevant: bool,
}

/// One policy sentence with the taxonomy values it claims. A sentence can
/// carry any combination of data types, techniques and contexts at once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionClaim {
    pub sentence_index: usize,
    pub data_types: BTreeSet<InteractionDataType>,
    pub techniques: BTreeSet<CollectionTechnique>,
    pub contexts: BTreeSet<CollectionContext>,
    /// Lexicon entry ids that fired on this sentence. Never empty.
    pub matched_patterns: Vec<String>,
    /// Negated claims ("we do not collect clicks") keep their labels for
    /// audit but are excluded from the claimed unions.
    pub negated: bool,
}

/// Disclosure specificity of a whole policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Completeness {
    Both,
    DataTypeOnly,
    TechniqueOnly,
    MentionOnly,
    None,
}

impl Completeness {
    pub const ALL: [Completeness; 5] = [
        Completeness::Both,
        Completeness::DataTypeOnly,
        Completeness::TechniqueOnly,
        Completeness::MentionOnly,
        Completeness::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Completeness::Both => "Both",
            Completeness::DataTypeOnly => "DataTypeOnly",
            Completeness::TechniqueOnly => "TechniqueOnly",
            Completeness::MentionOnly => "MentionOnly",
            Completeness::None => "None",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Completeness::Both => "both type and technique",
            Completeness::DataTypeOnly => "data type only",
            Completeness::TechniqueOnly => "collection technique only",
            Completeness::MentionOnly => "mention the collection only",
            Completeness::None => "none",
        }
    }
}

impl std::fmt::Display for Completeness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyClaimSummary {
    pub source_id: String,
    pub taxonomy_version: u32,
    pub claims: Vec<CollectionClaim>,
    pub completeness: Completeness,
    pub claimed_data_types: BTreeSet<InteractionDataType>,
    pub claimed_techniques: BTreeSet<CollectionTechnique>,
    pub claimed_contexts: BTreeSet<CollectionContext>,
}

/// Splits raw policy text (plain text or HTML) into indexed sentences.
/// HTML is stripped and entity-decoded first; whitespace is normalized;
/// common abbreviations do not end sentences.
pub fn segment(source_id: &str, raw: &str) -> Result<PolicyDocument> {
    let plain = if text::looks_like_html(raw) {
        text::strip_html(raw)
    } else {
        raw.to_string()
    };
    let sentences: Vec<PolicySentence> = text::split_sentences(&plain)
        .into_iter()
        .enumerate()
        .map(|(index, text)| PolicySentence {
            index,
            text,
            relevant: false,
        })
        .collect();
    if sentences.is_empty() {
        return Err(Error::EmptyDocument);
    }
    Ok(PolicyDocument {
        source_id: source_id.to_string(),
        raw_text: raw.to_string(),
        sentences,
    })
}

/// Marks each sentence relevant iff at least one claim pattern matches.
pub fn extract_claims(mut doc: PolicyDocument, lexicon: &Lexicon) -> PolicyDocument {
    for sentence in &mut doc.sentences {
        let (raw, stems) = text::tokenize(&sentence.text);
        sentence.relevant = lexicon
            .claim_patterns
            .iter()
            .any(|p| p.matches(&raw, &stems));
    }
    doc
}

const NEGATION_CUES: [&str; 3] = ["not", "never", "neither"];

/// Labels one relevant sentence with every matching pattern's labels.
/// Relevance-only patterns count toward `matched_patterns` but contribute
/// no labels.
pub fn classify_claim(sentence: &PolicySentence, lexicon: &Lexicon) -> Result<CollectionClaim> {
    if !sentence.relevant {
        return Err(Error::IrrelevantSentence {
            index: sentence.index,
        });
    }
    let (raw, stems) = text::tokenize(&sentence.text);
    let mut claim = CollectionClaim {
        sentence_index: sentence.index,
        data_types: BTreeSet::new(),
        techniques: BTreeSet::new(),
        contexts: BTreeSet::new(),
        matched_patterns: Vec::new(),
        negated: raw.iter().any(|t| NEGATION_CUES.contains(&t.as_str())),
    };
    for pattern in &lexicon.claim_patterns {
        if !pattern.matches(&raw, &stems) {
            continue;
        }
        claim.matched_patterns.push(pattern.id.clone());
        if pattern.relevance_only {
            continue;
        }
        for label in &pattern.labels {
            match label {
                TaxonomyLabel::Data(v) => {
                    claim.data_types.insert(*v);
                }
                TaxonomyLabel::Technique(v) => {
                    claim.techniques.insert(*v);
                }
                TaxonomyLabel::Context(v) => {
                    claim.contexts.insert(*v);
                }
            }
        }
    }
    debug_assert!(!claim.matched_patterns.is_empty());
    Ok(claim)
}

/// Classifies every relevant sentence and folds the claims into a summary.
pub fn summarize(doc: &PolicyDocument, lexicon: &Lexicon) -> Result<PolicyClaimSummary> {
    let mut claims = Vec::new();
    for sentence in doc.sentences.iter().filter(|s| s.relevant) {
        claims.push(classify_claim(sentence, lexicon)?);
    }
    let mut summary = PolicyClaimSummary {
        source_id: doc.source_id.clone(),
        taxonomy_version: lexicon.taxonomy_version,
        claims,
        completeness: Completeness::None,
        claimed_data_types: BTreeSet::new(),
        claimed_techniques: BTreeSet::new(),
        claimed_contexts: BTreeSet::new(),
    };
    for claim in summary.claims.iter().filter(|c| !c.negated) {
        summary.claimed_data_types.extend(claim.data_types.iter());
        summary.claimed_techniques.extend(claim.techniques.iter());
        summary.claimed_contexts.extend(claim.contexts.iter());
    }
    summary.completeness = completeness_level(&summary);
    Ok(summary)
}

/// Five-way disclosure category. `DeviceData` alone does not count as a
/// disclosed data type.
pub fn completeness_level(summary: &PolicyClaimSummary) -> Completeness {
    let has_types = summary
        .claimed_data_types
        .iter()
        .any(|t| !t.is_non_interaction());
    let has_techniques = !summary.claimed_techniques.is_empty();
    let mentions = !summary.claims.is_empty();
    match (has_types, has_techniques, mentions) {
        (true, true, _) => Completeness::Both,
        (true, false, _) => Completeness::DataTypeOnly,
        (false, true, _) => Completeness::TechniqueOnly,
        (false, false, true) => Completeness::MentionOnly,
        (false, false, false) => Completeness::None,
    }
}

/// Bigram counts over the relevant sentences, descending by count with
/// lexicographic tie-breaks, truncated to `top_k`. Bigrams never cross
/// sentence boundaries.
pub fn bigram_frequencies(sentences: &[PolicySentence], top_k: usize) -> Vec<(String, u64)> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for sentence in sentences.iter().filter(|s| s.relevant) {
        let (raw, _) = text::tokenize(&sentence.text);
        for pair in raw.windows(2) {
            *counts.entry(format!("{} {}", pair[0], pair[1])).or_insert(0) += 1;
        }
    }
    let mut ordered: Vec<(String, u64)> = counts.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ordered.truncate(top_k);
    ordered
}
