//! Decoded-bundle model: layout XML documents, smali code units and the
//! links between UI elements and the methods that handle them.

mod layout;
mod smali;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use layout::{parse_layout, parse_layout_source};
pub use smali::{parse_smali, parse_smali_source};
pub(crate) use smali::{first_string_param, param_register, parse_param_types};

use crate::error::{Error, Result};
use crate::vocabulary::glob_match;

/// A file/line position inside the bundle. Paths are bundle-relative with
/// forward slashes so reports are machine-independent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceAnchor {
    pub file: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiElement {
    /// Tag name as written in the XML ("Button", "com.example.MyView").
    pub element_class: String,
    pub android_id: Option<String>,
    pub on_click: Option<String>,
    /// Index of the enclosing element within the same document.
    pub parent: Option<usize>,
    pub source: SourceAnchor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub path: String,
    pub elements: Vec<UiElement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvocationKind {
    Virtual,
    Static,
    Direct,
    Interface,
    Super,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invocation {
    pub target_class: String,
    pub target_method: String,
    pub target_descriptor: String,
    pub kind: InvocationKind,
    pub registers: Vec<String>,
    pub source: SourceAnchor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringConstant {
    pub register: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdConstant {
    pub register: String,
    pub id_name: String,
}

/// Body instructions in textual order, reduced to what analysis needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BodyEvent {
    /// Index into [`MethodBody::invocations`].
    Invoke(usize),
    /// Index into [`MethodBody::string_constants`].
    ConstString(usize),
    IdConst(IdConstant),
    NewInstance { register: String, class: String },
    MoveResultObject { register: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodBody {
    pub name: String,
    pub descriptor: String,
    pub is_public: bool,
    pub invocations: Vec<Invocation>,
    pub string_constants: Vec<StringConstant>,
    pub events: Vec<BodyEvent>,
    pub source: SourceAnchor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeUnit {
    /// Smali class descriptor, e.g. "Lcom/example/Main;".
    pub class_name: String,
    pub super_name: String,
    pub methods: Vec<MethodBody>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ElementRef {
    pub layout: usize,
    pub element: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MethodRef {
    pub unit: usize,
    pub method: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkMechanism {
    XmlOnClick,
    ListenerRegistration,
}

/// Association between a UI element and the method run on interaction.
/// `element` is `None` for listener registrations whose receiver could not
/// be resolved; those links still count as evidence but are excluded from
/// per-element reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandlerLink {
    pub element: Option<ElementRef>,
    pub method: MethodRef,
    pub mechanism: LinkMechanism,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppBundle {
    pub app_id: String,
    pub layouts: Vec<LayoutDocument>,
    pub code_units: Vec<CodeUnit>,
    pub handler_links: Vec<HandlerLink>,
}

impl AppBundle {
    /// Loads an apktool-style decoded bundle: layouts from
    /// `res/layout*/*.xml`, code from `smali*/**/*.smali`. File traversal
    /// is sorted by path so identical directories yield identical bundles.
    pub fn load(root: &Path) -> Result<AppBundle> {
        if !root.is_dir() {
            return Err(Error::io(
                root,
                std::io::Error::new(std::io::ErrorKind::NotFound, "bundle directory not found"),
            ));
        }
        let app_id = root
            .file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "app".to_string());

        let mut layout_files = Vec::new();
        let res_dir = root.join("res");
        if res_dir.is_dir() {
            for entry in std::fs::read_dir(&res_dir).map_err(|e| Error::io(&res_dir, e))? {
                let entry = entry.map_err(|e| Error::io(&res_dir, e))?;
                let name = entry.file_name().to_string_lossy().to_string();
                if entry.path().is_dir() && name.starts_with("layout") {
                    for file in std::fs::read_dir(entry.path()).map_err(|e| Error::io(entry.path(), e))? {
                        let file = file.map_err(|e| Error::io(entry.path(), e))?;
                        let path = file.path();
                        if path.extension().is_some_and(|e| e == "xml") && path.is_file() {
                            layout_files.push(path);
                        }
                    }
                }
            }
        }
        layout_files.sort();

        let mut layouts = Vec::new();
        for path in &layout_files {
            let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            layouts.push(layout::parse_layout_source(&content, &relative_name(root, path))?);
        }

        let mut smali_files = Vec::new();
        for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
            let entry = entry.map_err(|e| Error::io(root, e))?;
            let name = entry.file_name().to_string_lossy().to_string();
            if entry.path().is_dir() && name.starts_with("smali") {
                for file in walkdir::WalkDir::new(entry.path())
                    .sort_by_file_name()
                    .into_iter()
                    .filter_map(|e| e.ok())
                {
                    let path = file.path().to_path_buf();
                    if file.file_type().is_file() && path.extension().is_some_and(|e| e == "smali") {
                        smali_files.push(path);
                    }
                }
            }
        }
        smali_files.sort();

        let mut code_units = Vec::new();
        for path in &smali_files {
            let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            code_units.push(smali::parse_smali_source(&content, &relative_name(root, path))?);
        }

        Ok(AppBundle::from_parts(app_id, layouts, code_units))
    }

    /// Assembles a bundle from already-parsed parts and computes links.
    pub fn from_parts(
        app_id: impl Into<String>,
        layouts: Vec<LayoutDocument>,
        code_units: Vec<CodeUnit>,
    ) -> AppBundle {
        let handler_links = link_ui_handlers(&layouts, &code_units);
        AppBundle {
            app_id: app_id.into(),
            layouts,
            code_units,
            handler_links,
        }
    }

    pub fn element(&self, re: ElementRef) -> &UiElement {
        &self.layouts[re.layout].elements[re.element]
    }

    pub fn method(&self, rm: MethodRef) -> &MethodBody {
        &self.code_units[rm.unit].methods[rm.method]
    }

    pub fn unit(&self, rm: MethodRef) -> &CodeUnit {
        &self.code_units[rm.unit]
    }
}

fn relative_name(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

/// Callback names recognized when a listener class is resolvable.
const CALLBACK_NAMES: [&str; 23] = [
    "onClick",
    "onLongClick",
    "onTouch",
    "onFocusChange",
    "onQueryTextSubmit",
    "onQueryTextChange",
    "onCheckedChanged",
    "onItemSelected",
    "onItemClick",
    "onRatingChanged",
    "onProgressChanged",
    "onStopTrackingTouch",
    "onRefresh",
    "onPageSelected",
    "onScale",
    "onScaleBegin",
    "onFling",
    "onScroll",
    "onDown",
    "onSingleTapUp",
    "onEditorAction",
    "onKey",
    "onMenuItemClick",
];

#[derive(Debug, Clone)]
enum RegValue {
    IdConst(String),
    ViewWithId(String),
    Instance(String),
}

/// Links UI elements to handler methods.
///
/// XML `onClick` attributes link to every public method of that name with
/// a single `View` parameter. `setOn*Listener` registrations link the
/// receiver element (resolved through a preceding `findViewById` on an
/// `R$id` constant in the same body) to the listener class's callback
/// methods, or to the registering method when the listener class is not
/// resolvable. Unresolvable receivers degrade to element-less links.
pub fn link_ui_handlers(layouts: &[LayoutDocument], code_units: &[CodeUnit]) -> Vec<HandlerLink> {
    let mut links: Vec<HandlerLink> = Vec::new();
    let push = |link: HandlerLink, links: &mut Vec<HandlerLink>| {
        if !links.contains(&link) {
            links.push(link);
        }
    };

    for (li, layout) in layouts.iter().enumerate() {
        for (ei, element) in layout.elements.iter().enumerate() {
            let Some(handler) = &element.on_click else {
                continue;
            };
            for (ui, unit) in code_units.iter().enumerate() {
                for (mi, method) in unit.methods.iter().enumerate() {
                    if method.name == *handler
                        && method.is_public
                        && parse_param_types(&method.descriptor) == ["Landroid/view/View;"]
                    {
                        push(
                            HandlerLink {
                                element: Some(ElementRef { layout: li, element: ei }),
                                method: MethodRef { unit: ui, method: mi },
                                mechanism: LinkMechanism::XmlOnClick,
                            },
                            &mut links,
                        );
                    }
                }
            }
        }
    }

    for (ui, unit) in code_units.iter().enumerate() {
        for (mi, method) in unit.methods.iter().enumerate() {
            let registering = MethodRef { unit: ui, method: mi };
            for link in listener_links(method, registering, layouts, code_units) {
                push(link, &mut links);
            }
        }
    }
    links
}

fn listener_links(
    method: &MethodBody,
    registering: MethodRef,
    layouts: &[LayoutDocument],
    code_units: &[CodeUnit],
) -> Vec<HandlerLink> {
    let mut links = Vec::new();
    let mut registers: HashMap<String, RegValue> = HashMap::new();
    let mut last_invoke: Option<usize> = None;

    for event in &method.events {
        match event {
            BodyEvent::IdConst(c) => {
                registers.insert(c.register.clone(), RegValue::IdConst(c.id_name.clone()));
                last_invoke = None;
            }
            BodyEvent::ConstString(i) => {
                registers.remove(&method.string_constants[*i].register);
                last_invoke = None;
            }
            BodyEvent::NewInstance { register, class } => {
                registers.insert(register.clone(), RegValue::Instance(class.clone()));
                last_invoke = None;
            }
            BodyEvent::MoveResultObject { register } => {
                let mut resolved = None;
                if let Some(idx) = last_invoke {
                    let inv = &method.invocations[idx];
                    if inv.target_method == "findViewById" {
                        if let Some(arg) = param_register(inv, 0) {
                            if let Some(RegValue::IdConst(id)) = registers.get(arg) {
                                resolved = Some(RegValue::ViewWithId(id.clone()));
                            }
                        }
                    }
                }
                match resolved {
                    Some(v) => {
                        registers.insert(register.clone(), v);
                    }
                    None => {
                        registers.remove(register);
                    }
                }
                last_invoke = None;
            }
            BodyEvent::Invoke(idx) => {
                let inv = &method.invocations[*idx];
                if glob_match("setOn*Listener", &inv.target_method)
                    && inv.kind != InvocationKind::Static
                {
                    let element = inv
                        .registers
                        .first()
                        .and_then(|r| registers.get(r))
                        .and_then(|v| match v {
                            RegValue::ViewWithId(id) => find_element_by_id(layouts, id),
                            _ => None,
                        });
                    let targets = param_register(inv, 0)
                        .and_then(|r| registers.get(r))
                        .and_then(|v| match v {
                            RegValue::Instance(class) => callback_targets(code_units, class),
                            _ => None,
                        })
                        .unwrap_or_else(|| vec![registering]);
                    for target in targets {
                        links.push(HandlerLink {
                            element,
                            method: target,
                            mechanism: LinkMechanism::ListenerRegistration,
                        });
                    }
                }
                last_invoke = Some(*idx);
            }
        }
    }
    links
}

fn find_element_by_id(layouts: &[LayoutDocument], id: &str) -> Option<ElementRef> {
    for (li, layout) in layouts.iter().enumerate() {
        for (ei, element) in layout.elements.iter().enumerate() {
            if element.android_id.as_deref() == Some(id) {
                return Some(ElementRef { layout: li, element: ei });
            }
        }
    }
    None
}

fn callback_targets(code_units: &[CodeUnit], listener_class: &str) -> Option<Vec<MethodRef>> {
    let ui = code_units.iter().position(|u| u.class_name == listener_class)?;
    let targets: Vec<MethodRef> = code_units[ui]
        .methods
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_public && CALLBACK_NAMES.contains(&m.name.as_str()))
        .map(|(mi, _)| MethodRef { unit: ui, method: mi })
        .collect();
    if targets.is_empty() {
        None
    } else {
        Some(targets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(xml: &str) -> LayoutDocument {
        layout::parse_layout_source(xml, "res/layout/main.xml").unwrap()
    }

    fn unit(src: &str) -> CodeUnit {
        smali::parse_smali_source(src, "smali/test.smali").unwrap()
    }

    #[test]
    fn onclick_attribute_links_to_matching_method() {
        let layouts = vec![layout(r#"<Button android:onClick="buttonClick"/>"#)];
        let units = vec![unit(
            ".class public La/Main;\n.super Ljava/lang/Object;\n.method public buttonClick(Landroid/view/View;)V\n    return-void\n.end method\n",
        )];
        let links = link_ui_handlers(&layouts, &units);
        assert_eq!(links.len(), 1);
        assert_eq!(links[0].mechanism, LinkMechanism::XmlOnClick);
        assert_eq!(links[0].element, Some(ElementRef { layout: 0, element: 0 }));
    }

    #[test]
    fn mismatched_handler_names_produce_no_links() {
        let layouts = vec![layout(r#"<Button android:onClick="missing"/>"#)];
        let units = vec![unit(
            ".class public La/Main;\n.super Ljava/lang/Object;\n.method public other(Landroid/view/View;)V\n    return-void\n.end method\n",
        )];
        assert!(link_ui_handlers(&layouts, &units).is_empty());
    }

    #[test]
    fn private_or_wrong_arity_methods_do_not_link() {
        let layouts = vec![layout(r#"<Button android:onClick="h"/>"#)];
        let units = vec![unit(
            ".class public La/Main;\n.super Ljava/lang/Object;\n.method private h(Landroid/view/View;)V\n    return-void\n.end method\n.method public h()V\n    return-void\n.end method\n",
        )];
        assert!(link_ui_handlers(&layouts, &units).is_empty());
    }

    const REGISTRATION: &str = "\
.class public La/Main;
.super Landroid/app/Activity;
.method public onCreate()V
    sget v0, La/R$id;->search_box:I
    invoke-virtual {p0, v0}, La/Main;->findViewById(I)Landroid/view/View;
    move-result-object v1
    new-instance v2, La/Watcher;
    invoke-direct {v2}, La/Watcher;-><init>()V
    invoke-virtual {v1, v2}, Landroid/widget/SearchView;->setOnQueryTextListener(La/Watcher;)V
    return-void
.end method
";

    const WATCHER: &str = "\
.class public La/Watcher;
.super Ljava/lang/Object;
.method public onQueryTextSubmit(Ljava/lang/String;)Z
    const/4 v0, 0x0
    return v0
.end method
";

    #[test]
    fn listener_registration_resolves_element_and_callback() {
        let layouts = vec![layout(r#"<SearchView android:id="@+id/search_box"/>"#)];
        let units = vec![unit(REGISTRATION), unit(WATCHER)];
        let links = link_ui_handlers(&layouts, &units);
        assert_eq!(links.len(), 1);
        let link = &links[0];
        assert_eq!(link.mechanism, LinkMechanism::ListenerRegistration);
        assert_eq!(link.element, Some(ElementRef { layout: 0, element: 0 }));
        assert_eq!(link.method, MethodRef { unit: 1, method: 0 });
    }

    #[test]
    fn unresolvable_receiver_degrades_to_elementless_link() {
        // No findViewById: the receiver register is unknown.
        let src = "\
.class public La/Main;
.super Landroid/app/Activity;
.method public onCreate()V
    new-instance v2, La/Watcher;
    invoke-direct {v2}, La/Watcher;-><init>()V
    invoke-virtual {v1, v2}, Landroid/widget/Button;->setOnClickListener(La/Watcher;)V
    return-void
.end method
";
        let units = vec![unit(src), unit(WATCHER)];
        let links = link_ui_handlers(&[], &units);
        assert_eq!(links.len(), 1);
        assert_eq!(links[0].element, None);
        // The listener class is resolvable, so its callback is the target.
        assert_eq!(links[0].method, MethodRef { unit: 1, method: 0 });
    }

    #[test]
    fn unknown_listener_class_falls_back_to_registering_method() {
        let src = "\
.class public La/Main;
.super Landroid/app/Activity;
.method public onCreate()V
    invoke-virtual {v1, v2}, Landroid/widget/Button;->setOnClickListener(Lb/External;)V
    return-void
.end method
";
        let units = vec![unit(src)];
        let links = link_ui_handlers(&[], &units);
        assert_eq!(links.len(), 1);
        assert_eq!(links[0].method, MethodRef { unit: 0, method: 0 });
    }
}
