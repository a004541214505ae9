use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the analysis pipeline.
///
/// Variants are grouped by exit-code class: input problems (bad paths,
/// malformed files, contract violations caused by user data) map to exit
/// code 1, internal faults to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("lexicon {path}: {detail}")]
    LexiconSchema { path: String, detail: String },

    #[error("lexicon validation: {detail}")]
    LexiconValidation { detail: String },

    #[error("empty document: no sentences after normalization")]
    EmptyDocument,

    #[error("sentence {index} is not marked relevant; classify_claim requires a relevant sentence")]
    IrrelevantSentence { index: usize },

    #[error("{path}:{line}: XML parse error: {detail}")]
    XmlParse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("{path}:{line}: smali parse error: {detail}")]
    SmaliParse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("taxonomy version mismatch: claims use v{claims}, evidence uses v{evidence}")]
    TaxonomyMismatch { claims: u32, evidence: u32 },

    #[error("app id mismatch: evidence is for {found:?}, ground truth for {truth:?}")]
    AppIdMismatch { found: String, truth: String },

    #[error("no valid app reports found in {dir}")]
    NoReports { dir: PathBuf },

    #[error("report {path}: {detail}")]
    ReportSchema { path: PathBuf, detail: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("JSON serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// CLI exit code: 0 success, 1 input error, 2 internal error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::IrrelevantSentence { .. } | Error::Json(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
