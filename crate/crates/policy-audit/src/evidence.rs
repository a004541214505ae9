//! Converts a parsed bundle plus lexicon into categorized collection
//! evidence: which analytics libraries are invoked, which interaction data
//! types are collected, via which techniques and in which contexts.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::app_model::{
    first_string_param, param_register, AppBundle, CodeUnit, HandlerLink, Invocation, MethodBody,
    SourceAnchor, UiElement,
};
use crate::vocabulary::{
    glob_match, simple_class_name, CollectionContext, CollectionTechnique, ContextCriterion,
    InteractionDataType, Lexicon, TaxonomyLabel,
};

/// Identifies the method enclosing an invocation in reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodId {
    pub class_name: String,
    pub method_name: String,
    pub descriptor: String,
}

/// One invocation of an analytics sink.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyticsInvocation {
    pub library_name: String,
    pub invocation: Invocation,
    pub enclosing_method: MethodId,
    /// Nearest preceding string constant assigned to the sink's event-name
    /// register, when resolvable within the same body.
    pub event_name: Option<String>,
}

/// Snapshot of the UI element an evidence item is tied to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiElementInfo {
    pub element_class: String,
    pub android_id: Option<String>,
    pub source: SourceAnchor,
}

/// One code-derived collection instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionEvidence {
    pub data_type: InteractionDataType,
    pub techniques: BTreeSet<CollectionTechnique>,
    pub contexts: BTreeSet<CollectionContext>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ui_element: Option<UiElementInfo>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub analytics: Option<AnalyticsInvocation>,
    pub source: SourceAnchor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSummary {
    pub app_id: String,
    pub taxonomy_version: u32,
    pub items: Vec<CollectionEvidence>,
    pub evident_data_types: BTreeSet<InteractionDataType>,
    pub evident_techniques: BTreeSet<CollectionTechnique>,
    pub evident_contexts: BTreeSet<CollectionContext>,
    /// All analytics libraries invoked anywhere in the bundle.
    pub libraries: BTreeSet<String>,
}

impl EvidenceSummary {
    pub fn empty(app_id: &str, taxonomy_version: u32) -> EvidenceSummary {
        EvidenceSummary {
            app_id: app_id.to_string(),
            taxonomy_version,
            items: Vec::new(),
            evident_data_types: BTreeSet::new(),
            evident_techniques: BTreeSet::new(),
            evident_contexts: BTreeSet::new(),
            libraries: BTreeSet::new(),
        }
    }
}

/// Event name visible to each invocation: the last `const-string` written
/// to the invocation's first string parameter register, in body order.
fn resolve_event_names(method: &MethodBody) -> Vec<Option<String>> {
    use crate::app_model::BodyEvent;
    let mut strings: HashMap<&str, &str> = HashMap::new();
    let mut names = vec![None; method.invocations.len()];
    for event in &method.events {
        match event {
            BodyEvent::ConstString(i) => {
                let sc = &method.string_constants[*i];
                strings.insert(sc.register.as_str(), sc.value.as_str());
            }
            BodyEvent::Invoke(idx) => {
                let inv = &method.invocations[*idx];
                if let Some(pi) = first_string_param(&inv.target_descriptor) {
                    if let Some(reg) = param_register(inv, pi) {
                        names[*idx] = strings.get(reg.as_str()).map(|s| s.to_string());
                    }
                }
            }
            _ => {}
        }
    }
    names
}

fn method_analytics(
    unit: &CodeUnit,
    method: &MethodBody,
    lexicon: &Lexicon,
) -> Vec<AnalyticsInvocation> {
    let names = resolve_event_names(method);
    let mut out = Vec::new();
    for (idx, invocation) in method.invocations.iter().enumerate() {
        let event_name = names[idx].as_deref();
        let sink = lexicon.analytics_sinks().find(|sig| {
            sig.matches(&invocation.target_class, &invocation.target_method, event_name)
        });
        if let Some(sig) = sink {
            out.push(AnalyticsInvocation {
                library_name: sig.library_name.clone(),
                invocation: invocation.clone(),
                enclosing_method: MethodId {
                    class_name: unit.class_name.clone(),
                    method_name: method.name.clone(),
                    descriptor: method.descriptor.clone(),
                },
                event_name: names[idx].clone(),
            });
        }
    }
    out
}

/// All analytics-sink invocations in the bundle, in file order.
pub fn identify_analytics(bundle: &AppBundle, lexicon: &Lexicon) -> Vec<AnalyticsInvocation> {
    let mut out = Vec::new();
    for unit in &bundle.code_units {
        for method in &unit.methods {
            out.extend(method_analytics(unit, method, lexicon));
        }
    }
    out
}

/// Techniques implied by the method body: union of the technique labels of
/// every fully matching API signature (including event-name criteria).
pub fn infer_techniques(method: &MethodBody, lexicon: &Lexicon) -> BTreeSet<CollectionTechnique> {
    let names = resolve_event_names(method);
    let mut techniques = BTreeSet::new();
    for (idx, invocation) in method.invocations.iter().enumerate() {
        for sig in &lexicon.api_signatures {
            if sig.matches(
                &invocation.target_class,
                &invocation.target_method,
                names[idx].as_deref(),
            ) {
                for label in &sig.labels {
                    if let TaxonomyLabel::Technique(t) = label {
                        techniques.insert(*t);
                    }
                }
            }
        }
    }
    techniques
}

/// Contexts implied by the method and its enclosing unit. API criteria and
/// gameplay prefixes match the body's invocations; element criteria match
/// UI classes invoked anywhere in the unit.
pub fn infer_contexts(
    method: &MethodBody,
    unit: &CodeUnit,
    lexicon: &Lexicon,
) -> BTreeSet<CollectionContext> {
    let mut contexts = BTreeSet::new();
    let criteria = lexicon.parsed_context_criteria();

    let unit_classes: BTreeSet<&str> = unit
        .methods
        .iter()
        .flat_map(|m| m.invocations.iter())
        .map(|inv| simple_class_name(&inv.target_class))
        .collect();

    for (context, rules) in &criteria {
        let hit = rules.iter().any(|rule| match rule {
            ContextCriterion::Api { class, method: m } => method
                .invocations
                .iter()
                .any(|inv| glob_match(class, &inv.target_class) && glob_match(m, &inv.target_method)),
            ContextCriterion::Element { class } => {
                unit_classes.iter().any(|c| glob_match(class, c))
            }
        });
        if hit {
            contexts.insert(*context);
        }
    }

    if method
        .invocations
        .iter()
        .any(|inv| lexicon.is_gameplay_class(&inv.target_class))
    {
        contexts.insert(CollectionContext::GameplayInteractions);
    }

    // Context labels of matching API signatures also count.
    let names = resolve_event_names(method);
    for (idx, invocation) in method.invocations.iter().enumerate() {
        for sig in &lexicon.api_signatures {
            if sig.matches(
                &invocation.target_class,
                &invocation.target_method,
                names[idx].as_deref(),
            ) {
                for label in &sig.labels {
                    if let TaxonomyLabel::Context(c) = label {
                        contexts.insert(*c);
                    }
                }
            }
        }
    }
    contexts
}

/// Data type for evidence with no classified UI element: the matching
/// sink's declared semantics, defaulting to screen/view logging.
fn elementless_data_type(
    analytics: &[AnalyticsInvocation],
    lexicon: &Lexicon,
) -> InteractionDataType {
    for inv in analytics {
        let sig = lexicon.analytics_sinks().find(|sig| {
            sig.matches(
                &inv.invocation.target_class,
                &inv.invocation.target_method,
                inv.event_name.as_deref(),
            )
        });
        if let Some(dt) = sig.and_then(|s| s.data_type) {
            return dt;
        }
    }
    InteractionDataType::AppPresentation
}

/// Anchor for an evidence item: the triggering sink, else the first
/// signature- or criterion-matching invocation, else the method itself.
fn item_anchor(
    method: &MethodBody,
    analytics: &[AnalyticsInvocation],
    lexicon: &Lexicon,
) -> SourceAnchor {
    if let Some(first) = analytics.first() {
        return first.invocation.source.clone();
    }
    let names = resolve_event_names(method);
    let criteria = lexicon.parsed_context_criteria();
    for (idx, inv) in method.invocations.iter().enumerate() {
        let sig_hit = lexicon.api_signatures.iter().any(|sig| {
            sig.matches(&inv.target_class, &inv.target_method, names[idx].as_deref())
        });
        let ctx_hit = criteria.values().flatten().any(|rule| match rule {
            ContextCriterion::Api { class, method: m } => {
                glob_match(class, &inv.target_class) && glob_match(m, &inv.target_method)
            }
            ContextCriterion::Element { .. } => false,
        });
        if sig_hit || ctx_hit || lexicon.is_gameplay_class(&inv.target_class) {
            return inv.source.clone();
        }
    }
    method.source.clone()
}

fn element_info(element: &UiElement) -> UiElementInfo {
    UiElementInfo {
        element_class: element.element_class.clone(),
        android_id: element.android_id.clone(),
        source: element.source.clone(),
    }
}

/// Derives the evidence summary for a bundle.
///
/// One item per handler link whose method shows an analytics sink or any
/// technique/context match; one item per (library, method) for sink
/// invocations in methods with no link. Unions fold over items; libraries
/// cover the whole bundle.
pub fn extract_evidence(bundle: &AppBundle, lexicon: &Lexicon) -> EvidenceSummary {
    let mut summary = EvidenceSummary::empty(&bundle.app_id, lexicon.taxonomy_version);

    for link in &bundle.handler_links {
        let unit = bundle.unit(link.method);
        let method = bundle.method(link.method);
        let analytics = method_analytics(unit, method, lexicon);
        let techniques = infer_techniques(method, lexicon);
        let mut contexts = infer_contexts(method, unit, lexicon);
        let element = link.element.map(|re| bundle.element(re));
        if let Some(element) = element {
            contexts.extend(lexicon.element_contexts(&element.element_class));
        }
        if analytics.is_empty() && techniques.is_empty() && contexts.is_empty() {
            continue;
        }
        let data_type = match element {
            Some(el) => lexicon
                .classify_ui_element(&el.element_class)
                // Every layout element is a View; screen presentation is
                // the hierarchy-sound fallback for unmapped classes.
                .unwrap_or(InteractionDataType::AppPresentation),
            None => elementless_data_type(&analytics, lexicon),
        };
        summary.items.push(CollectionEvidence {
            data_type,
            techniques,
            contexts,
            ui_element: element.map(element_info),
            analytics: analytics.first().cloned(),
            source: item_anchor(method, &analytics, lexicon),
        });
    }

    // Sink invocations in methods no link points at.
    let linked: BTreeSet<(usize, usize)> = bundle
        .handler_links
        .iter()
        .map(|l| (l.method.unit, l.method.method))
        .collect();
    for (ui, unit) in bundle.code_units.iter().enumerate() {
        for (mi, method) in unit.methods.iter().enumerate() {
            if linked.contains(&(ui, mi)) {
                continue;
            }
            let analytics = method_analytics(unit, method, lexicon);
            if analytics.is_empty() {
                continue;
            }
            let techniques = infer_techniques(method, lexicon);
            let contexts = infer_contexts(method, unit, lexicon);
            let mut by_library: BTreeMap<&str, Vec<&AnalyticsInvocation>> = BTreeMap::new();
            for inv in &analytics {
                by_library.entry(&inv.library_name).or_default().push(inv);
            }
            for (_, invocations) in by_library {
                let first = invocations[0];
                summary.items.push(CollectionEvidence {
                    data_type: elementless_data_type(std::slice::from_ref(first), lexicon),
                    techniques: techniques.clone(),
                    contexts: contexts.clone(),
                    ui_element: None,
                    analytics: Some(first.clone()),
                    source: first.invocation.source.clone(),
                });
            }
        }
    }

    for item in &summary.items {
        summary.evident_data_types.insert(item.data_type);
        summary.evident_techniques.extend(item.techniques.iter());
        summary.evident_contexts.extend(item.contexts.iter());
    }
    summary.libraries = identify_analytics(bundle, lexicon)
        .into_iter()
        .map(|a| a.library_name)
        .collect();
    summary
}

/// True when a handler link would produce no evidence; exposed for tests.
#[doc(hidden)]
pub fn link_is_silent(bundle: &AppBundle, link: &HandlerLink, lexicon: &Lexicon) -> bool {
    let unit = bundle.unit(link.method);
    let method = bundle.method(link.method);
    method_analytics(unit, method, lexicon).is_empty()
        && infer_techniques(method, lexicon).is_empty()
        && infer_contexts(method, unit, lexicon).is_empty()
}
