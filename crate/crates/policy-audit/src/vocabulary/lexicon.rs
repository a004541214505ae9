use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocabulary::{CollectionContext, InteractionDataType, TaxonomyLabel};

/// Sentinel accepted by [`load_lexicon`] in place of a file path.
pub const BUILTIN_LEXICON_PATH: &str = "builtin";

/// UI element classes every lexicon must map. Baseline Android widget
/// coverage; a lexicon that drops one of these is rejected at load.
pub const REQUIRED_UI_ELEMENTS: [&str; 20] = [
    "View",
    "TextView",
    "VideoView",
    "WebView",
    "Button",
    "ImageButton",
    "CheckBox",
    "AbsSpinner",
    "Spinner",
    "CompoundButton",
    "RadioButton",
    "Switch",
    "RatingBar",
    "EditText",
    "AutoCompleteTextView",
    "SearchView",
    "GestureDetector",
    "ViewPager",
    "SwipeRefreshLayout",
    "ScaleGestureDetector",
];

const BUILTIN_JSON: &str = include_str!("builtin.json");

/// A phrase pattern matched against policy sentences.
///
/// The pattern string is a whitespace-separated token list. A bare `*`
/// matches any run of tokens (including none); a token containing `*`
/// glob-matches a single token. Other tokens match a sentence token whose
/// raw or stemmed form equals the pattern token. Matching is
/// case-insensitive (patterns are lowercased at load).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimPattern {
    pub id: String,
    pub pattern: String,
    #[serde(default)]
    pub labels: BTreeSet<TaxonomyLabel>,
    /// When true the pattern only marks a sentence as relevant and
    /// contributes no labels.
    #[serde(default)]
    pub relevance_only: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PatternToken {
    /// Bare `*`: any run of tokens, possibly empty.
    Gap,
    /// Token containing `*`: glob over a single token.
    Glob(String),
    Word(String),
}

impl ClaimPattern {
    fn compiled(&self) -> Vec<PatternToken> {
        self.pattern
            .split_whitespace()
            .map(|tok| {
                let tok = tok.to_lowercase();
                if tok == "*" {
                    PatternToken::Gap
                } else if tok.contains('*') {
                    PatternToken::Glob(tok)
                } else {
                    PatternToken::Word(tok)
                }
            })
            .collect()
    }

    /// Matches against a tokenized sentence. `raw` and `stems` are parallel:
    /// `stems[i]` is the lightly stemmed form of `raw[i]`.
    pub fn matches(&self, raw: &[String], stems: &[String]) -> bool {
        debug_assert_eq!(raw.len(), stems.len());
        let pat = self.compiled();
        if pat.is_empty() {
            return false;
        }
        (0..=raw.len()).any(|start| match_from(&pat, raw, stems, 0, start))
    }
}

fn token_matches(tok: &PatternToken, raw: &str, stem: &str) -> bool {
    match tok {
        PatternToken::Gap => unreachable!("gaps are handled by match_from"),
        PatternToken::Word(w) => w == raw || w == stem,
        PatternToken::Glob(g) => glob_match(g, raw) || glob_match(g, stem),
    }
}

fn match_from(pat: &[PatternToken], raw: &[String], stems: &[String], pi: usize, ti: usize) -> bool {
    if pi == pat.len() {
        return true;
    }
    match &pat[pi] {
        PatternToken::Gap => (ti..=raw.len()).any(|t| match_from(pat, raw, stems, pi + 1, t)),
        tok => {
            ti < raw.len()
                && token_matches(tok, &raw[ti], &stems[ti])
                && match_from(pat, raw, stems, pi + 1, ti + 1)
        }
    }
}

/// Glob match where `*` matches any (possibly empty) substring.
/// Case-sensitive; callers lowercase both sides for phrase tokens.
pub(crate) fn glob_match(pattern: &str, text: &str) -> bool {
    let pat: Vec<char> = pattern.chars().collect();
    let txt: Vec<char> = text.chars().collect();
    let (mut p, mut t) = (0usize, 0usize);
    let (mut star, mut mark) = (None::<usize>, 0usize);
    while t < txt.len() {
        if p < pat.len() && (pat[p] == txt[t]) {
            p += 1;
            t += 1;
        } else if p < pat.len() && pat[p] == '*' {
            star = Some(p);
            mark = t;
            p += 1;
        } else if let Some(s) = star {
            p = s + 1;
            mark += 1;
            t = mark;
        } else {
            return false;
        }
    }
    while p < pat.len() && pat[p] == '*' {
        p += 1;
    }
    p == pat.len()
}

/// An API signature matched against smali invocations.
///
/// `class_pattern` and `method_pattern` are case-sensitive globs over the
/// invocation's target class descriptor and method name. When
/// `event_name_pattern` is set the signature additionally requires a
/// resolved analytics event name matching the glob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiSignature {
    pub id: String,
    pub class_pattern: String,
    pub method_pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_name_pattern: Option<String>,
    /// Data type implied by the sink when evidence is not linked to a UI
    /// element. Defaults to `AppPresentation` (screen/view logging).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_type: Option<InteractionDataType>,
    #[serde(default)]
    pub labels: BTreeSet<TaxonomyLabel>,
    #[serde(default)]
    pub is_analytics_sink: bool,
    pub library_name: String,
}

impl ApiSignature {
    /// Matches class descriptor + method name, ignoring any event-name
    /// requirement.
    pub fn matches_call(&self, target_class: &str, target_method: &str) -> bool {
        glob_match(&self.class_pattern, target_class)
            && glob_match(&self.method_pattern, target_method)
    }

    /// Full match including the event-name requirement, if any.
    pub fn matches(&self, target_class: &str, target_method: &str, event_name: Option<&str>) -> bool {
        if !self.matches_call(target_class, target_method) {
            return false;
        }
        match &self.event_name_pattern {
            None => true,
            Some(pat) => event_name.is_some_and(|name| glob_match(pat, name)),
        }
    }
}

/// A parsed context criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContextCriterion {
    /// `api:<class_glob>-><method_glob>` — matches invocations.
    Api { class: String, method: String },
    /// `element:<class_glob>` — matches UI element classes by simple name.
    Element { class: String },
}

impl ContextCriterion {
    pub fn parse(raw: &str) -> Result<ContextCriterion> {
        if let Some(rest) = raw.strip_prefix("api:") {
            let (class, method) = rest.split_once("->").ok_or_else(|| Error::LexiconValidation {
                detail: format!("context criterion {raw:?} lacks '->' between class and method"),
            })?;
            if class.is_empty() || method.is_empty() {
                return Err(Error::LexiconValidation {
                    detail: format!("context criterion {raw:?} has an empty class or method pattern"),
                });
            }
            Ok(ContextCriterion::Api {
                class: class.to_string(),
                method: method.to_string(),
            })
        } else if let Some(class) = raw.strip_prefix("element:") {
            if class.is_empty() {
                return Err(Error::LexiconValidation {
                    detail: format!("context criterion {raw:?} has an empty element pattern"),
                });
            }
            Ok(ContextCriterion::Element {
                class: class.to_string(),
            })
        } else {
            Err(Error::LexiconValidation {
                detail: format!("context criterion {raw:?} must start with 'api:' or 'element:'"),
            })
        }
    }
}

/// The collection vocabulary: phrase patterns, analytics API signatures,
/// UI-element mappings and context criteria. Immutable after load; shared
/// read-only by all analysis stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lexicon {
    #[serde(default = "default_taxonomy_version")]
    pub taxonomy_version: u32,
    pub claim_patterns: Vec<ClaimPattern>,
    pub api_signatures: Vec<ApiSignature>,
    /// Simple class name -> data type. Resolution walks `ui_hierarchy`
    /// upward and the nearest mapped class wins.
    pub ui_element_map: BTreeMap<String, InteractionDataType>,
    /// Simple class name -> parent simple class name.
    pub ui_hierarchy: BTreeMap<String, String>,
    pub context_criteria: BTreeMap<CollectionContext, Vec<String>>,
    #[serde(default)]
    pub gameplay_package_prefixes: Vec<String>,
}

fn default_taxonomy_version() -> u32 {
    1
}

impl Lexicon {
    /// The embedded default lexicon.
    pub fn builtin() -> Lexicon {
        let lexicon: Lexicon =
            serde_json::from_str(BUILTIN_JSON).expect("embedded lexicon must parse");
        lexicon.validate().expect("embedded lexicon must validate");
        lexicon
    }

    /// Loads and validates a lexicon file.
    pub fn load(path: &Path) -> Result<Lexicon> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lexicon: Lexicon = serde_json::from_str(&raw).map_err(|e| Error::LexiconSchema {
            path: path.display().to_string(),
            detail: format!("line {}, column {}: {e}", e.line(), e.column()),
        })?;
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn validate(&self) -> Result<()> {
        let missing: Vec<&str> = REQUIRED_UI_ELEMENTS
            .iter()
            .copied()
            .filter(|name| !self.ui_element_map.contains_key(*name))
            .collect();
        if !missing.is_empty() {
            return Err(Error::LexiconValidation {
                detail: format!("ui_element_map is missing required elements: {}", missing.join(", ")),
            });
        }

        // Hierarchy must be acyclic so classification terminates.
        for start in self.ui_hierarchy.keys() {
            let mut seen = BTreeSet::new();
            let mut current = start.as_str();
            seen.insert(current);
            while let Some(parent) = self.ui_hierarchy.get(current) {
                if !seen.insert(parent.as_str()) {
                    return Err(Error::LexiconValidation {
                        detail: format!("ui_hierarchy contains a cycle through {start:?}"),
                    });
                }
                current = parent;
            }
        }

        let mut ids = BTreeSet::new();
        for pattern in &self.claim_patterns {
            if pattern.id.is_empty() {
                return Err(Error::LexiconValidation {
                    detail: format!("claim pattern {:?} has an empty id", pattern.pattern),
                });
            }
            if !ids.insert(&pattern.id) {
                return Err(Error::LexiconValidation {
                    detail: format!("duplicate pattern id {:?}", pattern.id),
                });
            }
            let compiled = pattern.compiled();
            if compiled.is_empty() || compiled.iter().all(|t| matches!(t, PatternToken::Gap)) {
                return Err(Error::LexiconValidation {
                    detail: format!("claim pattern {:?} matches everything", pattern.id),
                });
            }
        }
        for sig in &self.api_signatures {
            if sig.id.is_empty() {
                return Err(Error::LexiconValidation {
                    detail: format!("api signature for {:?} has an empty id", sig.class_pattern),
                });
            }
            if !ids.insert(&sig.id) {
                return Err(Error::LexiconValidation {
                    detail: format!("duplicate pattern id {:?}", sig.id),
                });
            }
            if sig.class_pattern.is_empty() || sig.method_pattern.is_empty() {
                return Err(Error::LexiconValidation {
                    detail: format!("api signature {:?} has an empty pattern", sig.id),
                });
            }
            if sig.labels.iter().any(|l| matches!(l, TaxonomyLabel::Data(_))) {
                return Err(Error::LexiconValidation {
                    detail: format!(
                        "api signature {:?} labels must be techniques or contexts; use data_type for sink semantics",
                        sig.id
                    ),
                });
            }
        }

        for (context, criteria) in &self.context_criteria {
            for raw in criteria {
                ContextCriterion::parse(raw).map_err(|e| Error::LexiconValidation {
                    detail: format!("{}: {e}", context.name()),
                })?;
            }
        }
        Ok(())
    }

    /// Classifies a UI element class by the most specific mapped class:
    /// exact entry first, then the `ui_hierarchy` parent chain. Absence is
    /// a value, not an error.
    pub fn classify_ui_element(&self, element_class: &str) -> Option<InteractionDataType> {
        if let Some(t) = self.ui_element_map.get(element_class) {
            return Some(*t);
        }
        let mut current = simple_class_name(element_class);
        loop {
            if let Some(t) = self.ui_element_map.get(current) {
                return Some(*t);
            }
            current = self.ui_hierarchy.get(current)?;
        }
    }

    pub fn analytics_sinks(&self) -> impl Iterator<Item = &ApiSignature> {
        self.api_signatures.iter().filter(|s| s.is_analytics_sink)
    }

    /// Parsed criteria per context. Panics only if validation was skipped.
    pub fn parsed_context_criteria(&self) -> BTreeMap<CollectionContext, Vec<ContextCriterion>> {
        self.context_criteria
            .iter()
            .map(|(ctx, raws)| {
                let parsed = raws
                    .iter()
                    .map(|r| ContextCriterion::parse(r).expect("criteria validated at load"))
                    .collect();
                (*ctx, parsed)
            })
            .collect()
    }

    /// Contexts triggered by a UI element class (matched by simple name).
    pub fn element_contexts(&self, element_class: &str) -> BTreeSet<CollectionContext> {
        let simple = simple_class_name(element_class);
        let mut out = BTreeSet::new();
        for (ctx, criteria) in self.parsed_context_criteria() {
            if criteria.iter().any(|c| match c {
                ContextCriterion::Element { class } => glob_match(class, simple),
                ContextCriterion::Api { .. } => false,
            }) {
                out.insert(ctx);
            }
        }
        out
    }

    /// True when the class descriptor belongs to a configured gameplay
    /// package. Prefixes are dotted package prefixes ("com.unity3d.").
    pub fn is_gameplay_class(&self, class_descriptor: &str) -> bool {
        if self.gameplay_package_prefixes.is_empty() {
            return false;
        }
        let dotted = descriptor_to_dotted(class_descriptor);
        self.gameplay_package_prefixes
            .iter()
            .any(|p| dotted.starts_with(p.as_str()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Loads a lexicon from a path, or the embedded default when `path` is the
/// `"builtin"` sentinel.
pub fn load_lexicon(path: &str) -> Result<Lexicon> {
    if path == BUILTIN_LEXICON_PATH {
        Ok(Lexicon::builtin())
    } else {
        Lexicon::load(Path::new(path))
    }
}

/// Last segment of a dotted or slashed class name; strips smali descriptor
/// decoration ("Landroid/widget/Button;" -> "Button").
pub(crate) fn simple_class_name(class: &str) -> &str {
    let trimmed = class.strip_prefix('L').unwrap_or(class);
    let trimmed = trimmed.strip_suffix(';').unwrap_or(trimmed);
    trimmed
        .rsplit(['/', '.'])
        .next()
        .unwrap_or(trimmed)
}

/// "Lcom/example/Foo;" or "com/example/Foo" -> "com.example.Foo".
pub(crate) fn descriptor_to_dotted(class: &str) -> String {
    let trimmed = class.strip_prefix('L').unwrap_or(class);
    let trimmed = trimmed.strip_suffix(';').unwrap_or(trimmed);
    trimmed.replace('/', ".")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text;
    use crate::vocabulary::CollectionTechnique;

    fn tokens(s: &str) -> (Vec<String>, Vec<String>) {
        text::tokenize(s)
    }

    #[test]
    fn builtin_lexicon_loads_and_has_full_element_map() {
        let lexicon = load_lexicon(BUILTIN_LEXICON_PATH).unwrap();
        assert_eq!(lexicon.ui_element_map.len(), 20);
        for name in REQUIRED_UI_ELEMENTS {
            assert!(
                lexicon.classify_ui_element(name).is_some(),
                "{name} must classify"
            );
        }
    }

    #[test]
    fn classification_prefers_most_specific_class() {
        let lexicon = Lexicon::builtin();
        assert_eq!(
            lexicon.classify_ui_element("Button"),
            Some(InteractionDataType::Binary)
        );
        // EditText subclasses TextView (whose ancestor View is app
        // presentation) but must resolve to its own mapping.
        assert_eq!(
            lexicon.classify_ui_element("EditText"),
            Some(InteractionDataType::UserInput)
        );
        assert_eq!(
            lexicon.classify_ui_element("TextView"),
            Some(InteractionDataType::AppPresentation)
        );
        assert_eq!(lexicon.classify_ui_element("com.example.CustomChart"), None);
    }

    #[test]
    fn classification_walks_hierarchy_for_unmapped_subclasses() {
        let lexicon = Lexicon::builtin();
        // ToggleButton is not mapped directly; CompoundButton is.
        assert_eq!(
            lexicon.classify_ui_element("ToggleButton"),
            Some(InteractionDataType::Categorical)
        );
        assert_eq!(
            lexicon.classify_ui_element("android.widget.ToggleButton"),
            Some(InteractionDataType::Categorical)
        );
        assert_eq!(
            lexicon.classify_ui_element("androidx.appcompat.widget.AppCompatEditText"),
            Some(InteractionDataType::UserInput)
        );
    }

    #[test]
    fn directly_mapped_classes_always_win_over_ancestors() {
        // Specificity: for every mapped class, classification returns its
        // own mapping regardless of what its ancestors map to.
        let lexicon = Lexicon::builtin();
        for (class, expected) in &lexicon.ui_element_map {
            assert_eq!(lexicon.classify_ui_element(class), Some(*expected), "{class}");
        }
    }

    #[test]
    fn lexicon_is_shareable_across_threads() {
        fn assert_sync_send<T: Sync + Send>() {}
        assert_sync_send::<Lexicon>();
    }

    #[test]
    fn missing_required_element_is_reported_by_name() {
        let mut lexicon = Lexicon::builtin();
        lexicon.ui_element_map.remove("Button");
        let err = lexicon.validate().unwrap_err();
        assert!(err.to_string().contains("Button"), "got: {err}");
    }

    #[test]
    fn custom_signature_extends_builtin() {
        let mut lexicon = Lexicon::builtin();
        let builtin_count = lexicon.api_signatures.len();
        lexicon.api_signatures.push(ApiSignature {
            id: "custom.mytracker.record".into(),
            class_pattern: "Lcom/example/MyTracker;".into(),
            method_pattern: "record".into(),
            event_name_pattern: None,
            data_type: None,
            labels: [TaxonomyLabel::Technique(CollectionTechnique::Frequency)].into(),
            is_analytics_sink: true,
            library_name: "MyTracker".into(),
        });
        lexicon.validate().unwrap();
        let json = lexicon.to_json().unwrap();
        let dir = std::env::temp_dir().join("policy-audit-lexicon-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("custom.json");
        std::fs::write(&path, json).unwrap();
        let loaded = load_lexicon(path.to_str().unwrap()).unwrap();
        assert_eq!(loaded.api_signatures.len(), builtin_count + 1);
        assert_eq!(loaded, lexicon);
    }

    #[test]
    fn malformed_lexicon_reports_line_and_field() {
        let dir = std::env::temp_dir().join("policy-audit-lexicon-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("broken.json");
        std::fs::write(&path, "{\n  \"claim_patterns\": [\n    {\"id\": 3}\n  ]\n}").unwrap();
        let err = Lexicon::load(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "got: {msg}");
    }

    #[test]
    fn phrase_patterns_match_stems_and_gaps() {
        let pat = ClaimPattern {
            id: "p".into(),
            pattern: "time * spend".into(),
            labels: BTreeSet::new(),
            relevance_only: false,
        };
        let (raw, stems) = tokens("the time you spend watching content");
        assert!(pat.matches(&raw, &stems));
        let (raw, stems) = tokens("the times you click a page");
        assert!(!pat.matches(&raw, &stems));

        let plural = ClaimPattern {
            id: "q".into(),
            pattern: "times you".into(),
            labels: BTreeSet::new(),
            relevance_only: false,
        };
        let (raw, stems) = tokens("the times you click a page");
        assert!(plural.matches(&raw, &stems));
        let (raw, stems) = tokens("the time you spend watching");
        assert!(!plural.matches(&raw, &stems));
    }

    #[test]
    fn glob_matching() {
        assert!(glob_match("setOn*Listener", "setOnClickListener"));
        assert!(glob_match("Lcom/android/billingclient/api/*;", "Lcom/android/billingclient/api/BillingClient;"));
        assert!(!glob_match("setOn*Listener", "setText"));
        assert!(glob_match("*", "anything"));
        assert!(glob_match("track", "track"));
        assert!(!glob_match("track", "trackMap"));
    }

    #[test]
    fn context_criteria_parse_forms() {
        assert!(matches!(
            ContextCriterion::parse("api:Landroid/app/NotificationManager;->*").unwrap(),
            ContextCriterion::Api { .. }
        ));
        assert!(matches!(
            ContextCriterion::parse("element:SearchView").unwrap(),
            ContextCriterion::Element { .. }
        ));
        assert!(ContextCriterion::parse("NotificationManager").is_err());
        assert!(ContextCriterion::parse("api:no-arrow").is_err());
    }
}
