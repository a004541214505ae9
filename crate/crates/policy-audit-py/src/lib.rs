//! Python bindings for the policy-audit pipeline.
//!
//! Structured results cross the boundary as canonical JSON strings (the
//! same schema the CLI writes); simple lookups return native values.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use policy_audit::policy;
use policy_audit::report::{self, AnalyzeOptions};
use policy_audit::vocabulary::{load_lexicon, Lexicon as CoreLexicon};

fn to_py_err(err: policy_audit::Error) -> PyErr {
    match &err {
        policy_audit::Error::Io { .. } => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// The collection vocabulary: phrase patterns, API signatures, UI-element
/// mappings and context criteria.
#[pyclass(frozen)]
pub struct Lexicon {
    inner: CoreLexicon,
}

#[pymethods]
impl Lexicon {
    /// The embedded default lexicon.
    #[staticmethod]
    fn builtin() -> Lexicon {
        Lexicon {
            inner: CoreLexicon::builtin(),
        }
    }

    /// Loads a lexicon file; the sentinel "builtin" yields the default.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Lexicon> {
        Ok(Lexicon {
            inner: load_lexicon(path).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn taxonomy_version(&self) -> u32 {
        self.inner.taxonomy_version
    }

    /// Most specific interaction data type for a UI element class, or
    /// None when neither the class nor an ancestor is mapped.
    fn classify_ui_element(&self, element_class: &str) -> Option<&'static str> {
        self.inner
            .classify_ui_element(element_class)
            .map(|dt| dt.name())
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Lexicon(taxonomy_version={}, claim_patterns={}, api_signatures={})",
            self.inner.taxonomy_version,
            self.inner.claim_patterns.len(),
            self.inner.api_signatures.len()
        )
    }
}

fn resolve_lexicon(lexicon: Option<&Lexicon>) -> CoreLexicon {
    match lexicon {
        Some(l) => l.inner.clone(),
        None => CoreLexicon::builtin(),
    }
}

/// Runs the full pipeline for one app and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (policy_path, bundle_path, lexicon_path="builtin", ground_truth=None, include_device_data=false, timestamps=false, out_dir=None))]
fn analyze_app(
    policy_path: PathBuf,
    bundle_path: PathBuf,
    lexicon_path: &str,
    ground_truth: Option<PathBuf>,
    include_device_data: bool,
    timestamps: bool,
    out_dir: Option<PathBuf>,
) -> PyResult<String> {
    let options = AnalyzeOptions {
        ground_truth,
        include_device_data,
        timestamps,
        out_dir,
    };
    let report =
        report::analyze_app(&policy_path, &bundle_path, lexicon_path, &options).map_err(to_py_err)?;
    report.to_json().map_err(to_py_err)
}

/// Segments and classifies policy text; returns the claim summary as JSON.
#[pyfunction]
#[pyo3(signature = (text, lexicon=None, source_id="policy"))]
fn analyze_policy_text(text: &str, lexicon: Option<&Lexicon>, source_id: &str) -> PyResult<String> {
    let lexicon = resolve_lexicon(lexicon);
    let doc = policy::segment(source_id, text).map_err(to_py_err)?;
    let doc = policy::extract_claims(doc, &lexicon);
    let summary = policy::summarize(&doc, &lexicon).map_err(to_py_err)?;
    serde_json::to_string_pretty(&summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Parses a decoded bundle and returns the evidence summary as JSON.
#[pyfunction]
#[pyo3(signature = (bundle_path, lexicon=None))]
fn extract_bundle_evidence(bundle_path: PathBuf, lexicon: Option<&Lexicon>) -> PyResult<String> {
    let lexicon = resolve_lexicon(lexicon);
    let bundle = policy_audit::app_model::AppBundle::load(&bundle_path).map_err(to_py_err)?;
    let summary = policy_audit::evidence::extract_evidence(&bundle, &lexicon);
    serde_json::to_string_pretty(&summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Top-k bigrams over the relevant sentences of the given policy texts.
#[pyfunction]
#[pyo3(signature = (texts, top_k, lexicon=None))]
fn bigram_frequencies(
    texts: Vec<String>,
    top_k: usize,
    lexicon: Option<&Lexicon>,
) -> PyResult<Vec<(String, u64)>> {
    let lexicon = resolve_lexicon(lexicon);
    let mut sentences = Vec::new();
    for (i, text) in texts.iter().enumerate() {
        let Ok(doc) = policy::segment(&format!("text{i}"), text) else {
            continue;
        };
        let doc = policy::extract_claims(doc, &lexicon);
        sentences.extend(doc.sentences);
    }
    Ok(policy::bigram_frequencies(&sentences, top_k))
}

#[pymodule]
fn policy_audit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Lexicon>()?;
    m.add_function(wrap_pyfunction!(analyze_app, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_policy_text, m)?)?;
    m.add_function(wrap_pyfunction!(extract_bundle_evidence, m)?)?;
    m.add_function(wrap_pyfunction!(bigram_frequencies, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
