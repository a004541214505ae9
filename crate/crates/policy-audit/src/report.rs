//! Per-app report assembly, JSON/markdown serialization and corpus-level
//! aggregation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::app_model::AppBundle;
use crate::error::{Error, Result};
use crate::evidence::{extract_evidence, EvidenceSummary};
use crate::factcheck::{
    consistency, coverage, evaluate, map_claims, ClaimEvidenceMapping, ConsistencyReport,
    GroundTruth, RateFraction,
};
use crate::policy::{self, Completeness, PolicyClaimSummary};
use crate::vocabulary::{
    load_lexicon, CollectionTechnique, InteractionDataType, Lexicon,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Coverage and evaluation against a user-supplied ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSection {
    pub interaction_coverage: RateFraction,
    pub context_coverage: RateFraction,
    pub precision: RateFraction,
    pub recall: RateFraction,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f1: Option<f64>,
}

/// The complete fact-check result for one app. Serializes to canonical
/// JSON (fixed key order, sorted sets) so identical inputs yield identical
/// bytes and reports round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub app_id: String,
    pub lexicon_version: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generated_at: Option<String>,
    pub claims: PolicyClaimSummary,
    pub evidence: EvidenceSummary,
    pub consistency: ConsistencyReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coverage: Option<CoverageSection>,
    pub claim_evidence_map: Vec<ClaimEvidenceMapping>,
}

impl AppReport {
    pub fn to_json(&self) -> Result<String> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(raw: &str) -> Result<AppReport> {
        Ok(serde_json::from_str(raw)?)
    }
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub ground_truth: Option<PathBuf>,
    pub include_device_data: bool,
    /// When false the report carries no timestamp (golden-test mode).
    pub timestamps: bool,
    /// When set, the JSON and markdown reports are written here.
    pub out_dir: Option<PathBuf>,
}

/// Runs the whole pipeline for one app: policy analysis, bundle analysis,
/// consistency and optional coverage. Any stage failure aborts with the
/// stage name; partial reports are never written.
pub fn analyze_app(
    policy_path: &Path,
    bundle_path: &Path,
    lexicon_path: &str,
    options: &AnalyzeOptions,
) -> Result<AppReport> {
    let lexicon = load_lexicon(lexicon_path).map_err(|e| Error::stage("load_lexicon", e))?;

    let raw_policy = std::fs::read_to_string(policy_path)
        .map_err(|e| Error::stage("read_policy", Error::io(policy_path, e)))?;
    let source_id = policy_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "policy".to_string());
    let doc = policy::segment(&source_id, &raw_policy).map_err(|e| Error::stage("segment", e))?;
    let doc = policy::extract_claims(doc, &lexicon);
    let claims = policy::summarize(&doc, &lexicon).map_err(|e| Error::stage("classify_claims", e))?;

    let bundle = AppBundle::load(bundle_path).map_err(|e| Error::stage("parse_bundle", e))?;
    let evidence = extract_evidence(&bundle, &lexicon);

    let consistency_report = consistency(&claims, &evidence, options.include_device_data);
    let claim_evidence_map =
        map_claims(&claims, &evidence).map_err(|e| Error::stage("map_claims", e))?;

    let coverage_section = match &options.ground_truth {
        Some(path) => {
            let truth = GroundTruth::load(path).map_err(|e| Error::stage("coverage", e))?;
            truth
                .validate_anchors(&bundle)
                .map_err(|e| Error::stage("coverage", e))?;
            let cov = coverage(&evidence, &truth).map_err(|e| Error::stage("coverage", e))?;
            let metrics = evaluate(&evidence, &truth).map_err(|e| Error::stage("coverage", e))?;
            Some(CoverageSection {
                interaction_coverage: cov.interaction_coverage,
                context_coverage: cov.context_coverage,
                precision: metrics.precision,
                recall: metrics.recall,
                f1: metrics.f1,
            })
        }
        None => None,
    };

    let report = AppReport {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: tool_version(),
        app_id: bundle.app_id.clone(),
        lexicon_version: lexicon.taxonomy_version,
        generated_at: options
            .timestamps
            .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        claims,
        evidence,
        consistency: consistency_report,
        coverage: coverage_section,
        claim_evidence_map,
    };

    if let Some(out_dir) = &options.out_dir {
        write_app_report(&report, out_dir)?;
    }
    Ok(report)
}

/// Writes `<app_id>.report.json` and `<app_id>.report.md`.
pub fn write_app_report(report: &AppReport, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let json_path = out_dir.join(format!("{}.report.json", report.app_id));
    let md_path = out_dir.join(format!("{}.report.md", report.app_id));
    std::fs::write(&json_path, report.to_json()?).map_err(|e| Error::io(&json_path, e))?;
    std::fs::write(&md_path, app_report_markdown(report)).map_err(|e| Error::io(&md_path, e))?;
    Ok((json_path, md_path))
}

fn joined<T: std::fmt::Display>(values: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
    if parts.is_empty() {
        "—".to_string()
    } else {
        parts.join(", ")
    }
}

/// Two-column claims/evidence markdown for human review.
pub fn app_report_markdown(report: &AppReport) -> String {
    let mut md = String::new();
    md.push_str(&format!("# Fact-check report: {}\n\n", report.app_id));
    md.push_str(&format!(
        "Completeness of the policy: **{}**\n\n",
        report.consistency.completeness
    ));
    md.push_str("## Consistency rates\n\n");
    md.push_str("| Metric | Rate |\n|---|---|\n");
    md.push_str(&format!(
        "| Interaction consistency (data types) | {} |\n",
        report.consistency.data_type_rate
    ));
    md.push_str(&format!(
        "| Interaction consistency (techniques) | {} |\n",
        report.consistency.technique_rate
    ));
    md.push_str(&format!(
        "| Context consistency | {} |\n\n",
        report.consistency.context_rate
    ));

    md.push_str("## Policy claims vs. collection evidence\n\n");
    md.push_str("| Dimension | Policy claims | Collection evidence |\n|---|---|---|\n");
    md.push_str(&format!(
        "| Data types | {} | {} |\n",
        joined(&report.claims.claimed_data_types),
        joined(&report.evidence.evident_data_types)
    ));
    md.push_str(&format!(
        "| Techniques | {} | {} |\n",
        joined(&report.claims.claimed_techniques),
        joined(&report.evidence.evident_techniques)
    ));
    md.push_str(&format!(
        "| Contexts | {} | {} |\n\n",
        joined(&report.claims.claimed_contexts),
        joined(&report.evidence.evident_contexts)
    ));

    md.push_str("## Collected but not disclosed\n\n");
    md.push_str(&format!(
        "- data types: {}\n- techniques: {}\n- contexts: {}\n\n",
        joined(&report.consistency.unclaimed_evidence.data_types),
        joined(&report.consistency.unclaimed_evidence.techniques),
        joined(&report.consistency.unclaimed_evidence.contexts)
    ));
    md.push_str("## Claimed but not evidenced\n\n");
    md.push_str(&format!(
        "- data types: {}\n- techniques: {}\n- contexts: {}\n\n",
        joined(&report.consistency.claimed_without_evidence.data_types),
        joined(&report.consistency.claimed_without_evidence.techniques),
        joined(&report.consistency.claimed_without_evidence.contexts)
    ));

    if let Some(cov) = &report.coverage {
        md.push_str("## Coverage against ground truth\n\n");
        md.push_str("| Metric | Value |\n|---|---|\n");
        md.push_str(&format!("| Interaction coverage | {} |\n", cov.interaction_coverage));
        md.push_str(&format!("| Context coverage | {} |\n", cov.context_coverage));
        md.push_str(&format!("| Precision | {} |\n", cov.precision));
        md.push_str(&format!("| Recall | {} |\n", cov.recall));
        if let Some(f1) = cov.f1 {
            md.push_str(&format!("| F1 | {f1:.3} |\n"));
        }
        md.push('\n');
    }

    md.push_str("## Evidence items\n\n");
    if report.evidence.items.is_empty() {
        md.push_str("No collection evidence found.\n\n");
    } else {
        md.push_str("| # | Data type | Techniques | Contexts | UI element | Library | Event | Source |\n");
        md.push_str("|---|---|---|---|---|---|---|---|\n");
        for (i, item) in report.evidence.items.iter().enumerate() {
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {}:{} |\n",
                i,
                item.data_type,
                joined(&item.techniques),
                joined(&item.contexts),
                item.ui_element
                    .as_ref()
                    .map(|e| e.element_class.clone())
                    .unwrap_or_else(|| "—".into()),
                item.analytics
                    .as_ref()
                    .map(|a| a.library_name.clone())
                    .unwrap_or_else(|| "—".into()),
                item.analytics
                    .as_ref()
                    .and_then(|a| a.event_name.clone())
                    .unwrap_or_else(|| "—".into()),
                item.source.file,
                item.source.line
            ));
        }
        md.push('\n');
    }

    md.push_str("## Relevant policy sentences\n\n");
    let mut any = false;
    for claim in &report.claims.claims {
        any = true;
        let mut labels: Vec<String> = Vec::new();
        labels.extend(claim.data_types.iter().map(|v| v.to_string()));
        labels.extend(claim.techniques.iter().map(|v| v.to_string()));
        labels.extend(claim.contexts.iter().map(|v| v.to_string()));
        let negated = if claim.negated { " [negated]" } else { "" };
        md.push_str(&format!(
            "- sentence {}{}: {}\n",
            claim.sentence_index,
            negated,
            if labels.is_empty() {
                "mention only".to_string()
            } else {
                labels.join(", ")
            }
        ));
    }
    if !any {
        md.push_str("None.\n");
    }
    md
}

/// Corpus rate under both conventions: mean of per-app fractions and
/// pooled counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRate {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_of_fractions: Option<f64>,
    /// Apps contributing to the mean (defined fractions only).
    pub rated_app_count: u64,
    pub pooled: RateFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub app_count: u64,
    pub completeness_histogram: BTreeMap<Completeness, u64>,
    pub completeness_apps: BTreeMap<Completeness, Vec<String>>,
    /// Percentage of apps whose evidence shows each data type.
    pub data_type_distribution: BTreeMap<InteractionDataType, f64>,
    pub technique_distribution: BTreeMap<CollectionTechnique, f64>,
    pub data_type_consistency: CorpusRate,
    pub technique_consistency: CorpusRate,
    pub context_consistency: CorpusRate,
}

impl CorpusReport {
    pub fn to_json(&self) -> Result<String> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(raw: &str) -> Result<CorpusReport> {
        Ok(serde_json::from_str(raw)?)
    }
}

/// Aggregates every valid `*.json` app report in a directory. Files that
/// do not parse as app reports are skipped; an empty directory is an
/// error.
pub fn corpus(report_dir: &Path) -> Result<CorpusReport> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(report_dir)
        .map_err(|e| Error::io(report_dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();

    let mut reports = Vec::new();
    for path in &paths {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if let Ok(report) = AppReport::from_json(&raw) {
            reports.push(report);
        }
    }
    if reports.is_empty() {
        return Err(Error::NoReports {
            dir: report_dir.to_path_buf(),
        });
    }
    reports.sort_by(|a, b| a.app_id.cmp(&b.app_id));
    Ok(aggregate(&reports))
}

fn aggregate(reports: &[AppReport]) -> CorpusReport {
    let app_count = reports.len() as u64;

    let mut completeness_histogram: BTreeMap<Completeness, u64> =
        Completeness::ALL.iter().map(|c| (*c, 0)).collect();
    let mut completeness_apps: BTreeMap<Completeness, Vec<String>> =
        Completeness::ALL.iter().map(|c| (*c, Vec::new())).collect();
    for report in reports {
        *completeness_histogram.entry(report.consistency.completeness).or_default() += 1;
        completeness_apps
            .entry(report.consistency.completeness)
            .or_default()
            .push(report.app_id.clone());
    }

    let mut data_type_distribution: BTreeMap<InteractionDataType, f64> = BTreeMap::new();
    for dt in InteractionDataType::ALL {
        let hits = reports
            .iter()
            .filter(|r| r.evidence.evident_data_types.contains(&dt))
            .count() as f64;
        data_type_distribution.insert(dt, 100.0 * hits / app_count as f64);
    }
    let mut technique_distribution: BTreeMap<CollectionTechnique, f64> = BTreeMap::new();
    for tech in CollectionTechnique::ALL {
        let hits = reports
            .iter()
            .filter(|r| r.evidence.evident_techniques.contains(&tech))
            .count() as f64;
        technique_distribution.insert(tech, 100.0 * hits / app_count as f64);
    }

    CorpusReport {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: tool_version(),
        app_count,
        completeness_histogram,
        completeness_apps,
        data_type_distribution,
        technique_distribution,
        data_type_consistency: corpus_rate(reports, |r| r.consistency.data_type_rate),
        technique_consistency: corpus_rate(reports, |r| r.consistency.technique_rate),
        context_consistency: corpus_rate(reports, |r| r.consistency.context_rate),
    }
}

fn corpus_rate(reports: &[AppReport], pick: impl Fn(&AppReport) -> RateFraction) -> CorpusRate {
    let fractions: Vec<RateFraction> = reports.iter().map(&pick).collect();
    let defined: Vec<f64> = fractions.iter().filter_map(|f| f.value()).collect();
    let pooled = RateFraction::new(
        fractions.iter().map(|f| f.numerator).sum(),
        fractions.iter().map(|f| f.denominator).sum(),
    );
    CorpusRate {
        mean_of_fractions: if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        },
        rated_app_count: defined.len() as u64,
        pooled,
    }
}

pub fn corpus_markdown(report: &CorpusReport) -> String {
    let mut md = String::new();
    md.push_str(&format!("# Corpus report ({} apps)\n\n", report.app_count));

    md.push_str("## Policy completeness\n\n| Category | Apps | Share |\n|---|---|---|\n");
    for c in Completeness::ALL {
        let count = report.completeness_histogram.get(&c).copied().unwrap_or(0);
        md.push_str(&format!(
            "| {} | {} | {:.1}% |\n",
            c,
            count,
            100.0 * count as f64 / report.app_count as f64
        ));
    }

    md.push_str("\n## Evident data types (% of apps)\n\n| Data type | Share |\n|---|---|\n");
    for (dt, pct) in &report.data_type_distribution {
        md.push_str(&format!("| {dt} | {pct:.1}% |\n"));
    }
    md.push_str("\n## Evident techniques (% of apps)\n\n| Technique | Share |\n|---|---|\n");
    for (tech, pct) in &report.technique_distribution {
        md.push_str(&format!("| {tech} | {pct:.1}% |\n"));
    }

    md.push_str("\n## Consistency rates (two conventions)\n\n");
    md.push_str("| Dimension | Mean of per-app fractions | Pooled |\n|---|---|---|\n");
    let row = |name: &str, rate: &CorpusRate| {
        format!(
            "| {} | {} | {} ({}) |\n",
            name,
            rate.mean_of_fractions
                .map(|m| format!("{:.3} over {} apps", m, rate.rated_app_count))
                .unwrap_or_else(|| "n/a".into()),
            rate.pooled,
            rate.pooled
                .value()
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "n/a".into())
        )
    };
    md.push_str(&row("Data types", &report.data_type_consistency));
    md.push_str(&row("Techniques", &report.technique_consistency));
    md.push_str(&row("Contexts", &report.context_consistency));

    md.push_str("\n## Apps per completeness category\n\n");
    for c in Completeness::ALL {
        let apps = report
            .completeness_apps
            .get(&c)
            .map(|v| v.join(", "))
            .unwrap_or_default();
        md.push_str(&format!("- {}: {}\n", c, if apps.is_empty() { "—".into() } else { apps }));
    }
    md
}

/// Writes `corpus.json` and `corpus.md`.
pub fn write_corpus_report(report: &CorpusReport, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let json_path = out_dir.join("corpus.json");
    let md_path = out_dir.join("corpus.md");
    std::fs::write(&json_path, report.to_json()?).map_err(|e| Error::io(&json_path, e))?;
    std::fs::write(&md_path, corpus_markdown(report)).map_err(|e| Error::io(&md_path, e))?;
    Ok((json_path, md_path))
}

/// Collects relevant sentences from every policy file in a directory and
/// returns the top-k bigrams. Files that fail to segment (e.g. empty) are
/// skipped.
pub fn corpus_bigrams(policies_dir: &Path, lexicon: &Lexicon, top_k: usize) -> Result<Vec<(String, u64)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(policies_dir)
        .map_err(|e| Error::io(policies_dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|e| e == "txt" || e == "html" || e == "htm" || e == "md")
        })
        .collect();
    paths.sort();

    let mut sentences = Vec::new();
    for path in &paths {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let source_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        let Ok(doc) = policy::segment(&source_id, &raw) else {
            continue;
        };
        let doc = policy::extract_claims(doc, lexicon);
        sentences.extend(doc.sentences);
    }
    Ok(policy::bigram_frequencies(&sentences, top_k))
}
