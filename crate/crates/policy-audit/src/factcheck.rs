//! Claim-to-evidence mapping and the consistency, coverage and evaluation
//! metrics.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{CollectionEvidence, EvidenceSummary};
use crate::policy::{Completeness, PolicyClaimSummary};
use crate::vocabulary::{
    CollectionContext, CollectionTechnique, InteractionDataType, TaxonomyLabel,
};

/// An exact rate. A zero denominator means "not applicable".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateFraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl RateFraction {
    pub fn new(numerator: u64, denominator: u64) -> RateFraction {
        assert!(numerator <= denominator, "rate numerator exceeds denominator");
        RateFraction { numerator, denominator }
    }

    pub fn value(&self) -> Option<f64> {
        if self.denominator == 0 {
            None
        } else {
            Some(self.numerator as f64 / self.denominator as f64)
        }
    }
}

impl fmt::Display for RateFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denominator == 0 {
            f.write_str("n/a")
        } else {
            write!(f, "{}/{}", self.numerator, self.denominator)
        }
    }
}

/// Taxonomy values split by dimension, used for difference lists.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomySets {
    pub data_types: BTreeSet<InteractionDataType>,
    pub techniques: BTreeSet<CollectionTechnique>,
    pub contexts: BTreeSet<CollectionContext>,
}

/// Per-app fact-check result: the two interaction rates, the context rate
/// and both difference directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub app_id: String,
    pub include_device_data: bool,
    pub data_type_rate: RateFraction,
    pub technique_rate: RateFraction,
    pub context_rate: RateFraction,
    /// Evident but never claimed (the transparency gap).
    pub unclaimed_evidence: TaxonomySets,
    /// Claimed but never evidenced.
    pub claimed_without_evidence: TaxonomySets,
    pub completeness: Completeness,
}

/// Evidence items supporting one claimed taxonomy value, by item index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimEvidenceMapping {
    pub label: TaxonomyLabel,
    pub evidence_items: Vec<usize>,
}

/// For each claimed taxonomy value, the evidence items carrying it.
/// Fails when the two summaries were computed with different taxonomy
/// versions.
pub fn map_claims(
    claims: &PolicyClaimSummary,
    evidence: &EvidenceSummary,
) -> Result<Vec<ClaimEvidenceMapping>> {
    if claims.taxonomy_version != evidence.taxonomy_version {
        return Err(Error::TaxonomyMismatch {
            claims: claims.taxonomy_version,
            evidence: evidence.taxonomy_version,
        });
    }
    let mut mappings = Vec::new();
    for dt in &claims.claimed_data_types {
        mappings.push(ClaimEvidenceMapping {
            label: (*dt).into(),
            evidence_items: item_indices(&evidence.items, |item| item.data_type == *dt),
        });
    }
    for tech in &claims.claimed_techniques {
        mappings.push(ClaimEvidenceMapping {
            label: (*tech).into(),
            evidence_items: item_indices(&evidence.items, |item| item.techniques.contains(tech)),
        });
    }
    for ctx in &claims.claimed_contexts {
        mappings.push(ClaimEvidenceMapping {
            label: (*ctx).into(),
            evidence_items: item_indices(&evidence.items, |item| item.contexts.contains(ctx)),
        });
    }
    Ok(mappings)
}

fn item_indices(
    items: &[CollectionEvidence],
    predicate: impl Fn(&CollectionEvidence) -> bool,
) -> Vec<usize> {
    items
        .iter()
        .enumerate()
        .filter(|(_, item)| predicate(item))
        .map(|(i, _)| i)
        .collect()
}

/// Computes the evidence-anchored consistency rates: each rate is the
/// share of evident values that the policy also claims. Device data is
/// excluded from the data-type dimension unless `include_device_data`.
pub fn consistency(
    claims: &PolicyClaimSummary,
    evidence: &EvidenceSummary,
    include_device_data: bool,
) -> ConsistencyReport {
    let keep = |t: &InteractionDataType| include_device_data || !t.is_non_interaction();
    let claimed_types: BTreeSet<_> = claims.claimed_data_types.iter().copied().filter(keep).collect();
    let evident_types: BTreeSet<_> = evidence.evident_data_types.iter().copied().filter(keep).collect();

    let data_type_rate = intersection_rate(&claimed_types, &evident_types);
    let technique_rate = intersection_rate(&claims.claimed_techniques, &evidence.evident_techniques);
    let context_rate = intersection_rate(&claims.claimed_contexts, &evidence.evident_contexts);

    ConsistencyReport {
        app_id: evidence.app_id.clone(),
        include_device_data,
        data_type_rate,
        technique_rate,
        context_rate,
        unclaimed_evidence: TaxonomySets {
            data_types: evident_types.difference(&claimed_types).copied().collect(),
            techniques: evidence
                .evident_techniques
                .difference(&claims.claimed_techniques)
                .copied()
                .collect(),
            contexts: evidence
                .evident_contexts
                .difference(&claims.claimed_contexts)
                .copied()
                .collect(),
        },
        claimed_without_evidence: TaxonomySets {
            data_types: claimed_types.difference(&evident_types).copied().collect(),
            techniques: claims
                .claimed_techniques
                .difference(&evidence.evident_techniques)
                .copied()
                .collect(),
            contexts: claims
                .claimed_contexts
                .difference(&evidence.evident_contexts)
                .copied()
                .collect(),
        },
        completeness: claims.completeness,
    }
}

fn intersection_rate<T: Ord>(claimed: &BTreeSet<T>, evident: &BTreeSet<T>) -> RateFraction {
    RateFraction::new(
        claimed.intersection(evident).count() as u64,
        evident.len() as u64,
    )
}

/// One manually annotated collection instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthInstance {
    pub data_type: InteractionDataType,
    #[serde(default)]
    pub techniques: BTreeSet<CollectionTechnique>,
    #[serde(default)]
    pub contexts: BTreeSet<CollectionContext>,
    pub file: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub app_id: String,
    pub instances: Vec<GroundTruthInstance>,
}

impl GroundTruth {
    pub fn load(path: &Path) -> Result<GroundTruth> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::ReportSchema {
            path: path.to_path_buf(),
            detail: format!("line {}, column {}: {e}", e.line(), e.column()),
        })
    }

    /// Checks that every instance anchor names a file present in the
    /// bundle.
    pub fn validate_anchors(&self, bundle: &crate::app_model::AppBundle) -> Result<()> {
        let mut files: BTreeSet<&str> = bundle.layouts.iter().map(|l| l.path.as_str()).collect();
        for unit in &bundle.code_units {
            for method in &unit.methods {
                files.insert(method.source.file.as_str());
            }
        }
        for instance in &self.instances {
            if instance.line == 0 || !files.contains(instance.file.as_str()) {
                return Err(Error::ReportSchema {
                    path: instance.file.clone().into(),
                    detail: format!(
                        "ground-truth anchor {}:{} does not resolve inside the bundle",
                        instance.file, instance.line
                    ),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub interaction_coverage: RateFraction,
    pub context_coverage: RateFraction,
}

/// How much of the annotated ground truth the analyzer detects.
///
/// An instance counts as interaction-covered when some found item has its
/// data type and, for each annotated technique, some same-type item shows
/// that technique. Context coverage is analogous over annotated contexts.
pub fn coverage(found: &EvidenceSummary, truth: &GroundTruth) -> Result<CoverageReport> {
    ensure_same_app(found, truth)?;
    let total = truth.instances.len() as u64;
    let mut interaction_hits = 0u64;
    let mut context_hits = 0u64;
    for instance in &truth.instances {
        let same_type: Vec<&CollectionEvidence> = found
            .items
            .iter()
            .filter(|item| item.data_type == instance.data_type)
            .collect();
        if same_type.is_empty() {
            continue;
        }
        if instance
            .techniques
            .iter()
            .all(|t| same_type.iter().any(|item| item.techniques.contains(t)))
        {
            interaction_hits += 1;
        }
        if instance
            .contexts
            .iter()
            .all(|c| same_type.iter().any(|item| item.contexts.contains(c)))
        {
            context_hits += 1;
        }
    }
    Ok(CoverageReport {
        interaction_coverage: RateFraction::new(interaction_hits, total),
        context_coverage: RateFraction::new(context_hits, total),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMetrics {
    pub precision: RateFraction,
    pub recall: RateFraction,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f1: Option<f64>,
}

/// Instance-level precision/recall against ground truth. A found item and
/// a truth instance match when they agree on data type and their technique
/// sets overlap (or are both empty).
pub fn evaluate(found: &EvidenceSummary, truth: &GroundTruth) -> Result<EvaluationMetrics> {
    ensure_same_app(found, truth)?;
    let matches = |item: &CollectionEvidence, instance: &GroundTruthInstance| {
        item.data_type == instance.data_type
            && (instance.techniques.is_empty() && item.techniques.is_empty()
                || instance.techniques.intersection(&item.techniques).next().is_some())
    };
    let matched_found = found
        .items
        .iter()
        .filter(|item| truth.instances.iter().any(|i| matches(item, i)))
        .count() as u64;
    let matched_truth = truth
        .instances
        .iter()
        .filter(|instance| found.items.iter().any(|item| matches(item, instance)))
        .count() as u64;
    let precision = RateFraction::new(matched_found, found.items.len() as u64);
    let recall = RateFraction::new(matched_truth, truth.instances.len() as u64);
    let f1 = match (precision.value(), recall.value()) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(EvaluationMetrics { precision, recall, f1 })
}

fn ensure_same_app(found: &EvidenceSummary, truth: &GroundTruth) -> Result<()> {
    if found.app_id != truth.app_id {
        return Err(Error::AppIdMismatch {
            found: found.app_id.clone(),
            truth: truth.app_id.clone(),
        });
    }
    Ok(())
}
