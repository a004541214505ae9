use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::app_model::{LayoutDocument, SourceAnchor, UiElement};
use crate::error::{Error, Result};

/// Root tags of non-layout resource XML (drawables, value files, menus).
/// Such documents yield an empty element list rather than an error.
const RESOURCE_ROOTS: [&str; 18] = [
    "resources",
    "selector",
    "shape",
    "vector",
    "layer-list",
    "set",
    "menu",
    "ripple",
    "inset",
    "clip",
    "scale",
    "color",
    "font-family",
    "adaptive-icon",
    "animated-vector",
    "animation-list",
    "objectanimator",
    "paths",
];

/// Parses one decoded layout XML file into a [`LayoutDocument`].
/// Captures `android:id` and `android:onClick` (namespace prefixes are
/// dropped); nesting is recorded through parent indices.
pub fn parse_layout(path: &Path) -> Result<LayoutDocument> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_layout_source(&content, &path.display().to_string())
}

pub fn parse_layout_source(content: &str, display_path: &str) -> Result<LayoutDocument> {
    let mut reader = Reader::from_str(content);
    let mut elements: Vec<UiElement> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut saw_root = false;
    let mut resource_file = false;

    loop {
        let pos = reader.buffer_position() as usize;
        match reader.read_event() {
            Ok(Event::Start(e)) => {
                if handle_element(&e, content, pos, display_path, &mut elements, &stack, &mut saw_root, &mut resource_file)? {
                    stack.push(elements.len() - 1);
                } else if resource_file {
                    break;
                } else {
                    // Shouldn't happen: handle_element only declines resource roots.
                    break;
                }
            }
            Ok(Event::Empty(e)) => {
                if !handle_element(&e, content, pos, display_path, &mut elements, &stack, &mut saw_root, &mut resource_file)? && resource_file {
                    break;
                }
            }
            Ok(Event::End(_)) => {
                stack.pop();
            }
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(err) => {
                return Err(Error::XmlParse {
                    path: display_path.into(),
                    line: line_of(content, reader.error_position() as usize),
                    detail: err.to_string(),
                });
            }
        }
    }

    if !saw_root && !resource_file {
        return Err(Error::XmlParse {
            path: display_path.into(),
            line: 1,
            detail: "no root element".into(),
        });
    }
    Ok(LayoutDocument {
        path: display_path.to_string(),
        elements,
    })
}

#[allow(clippy::too_many_arguments)]
fn handle_element(
    e: &BytesStart<'_>,
    content: &str,
    pos: usize,
    display_path: &str,
    elements: &mut Vec<UiElement>,
    stack: &[usize],
    saw_root: &mut bool,
    resource_file: &mut bool,
) -> Result<bool> {
    let tag = String::from_utf8_lossy(e.name().as_ref()).to_string();
    if !*saw_root {
        *saw_root = true;
        if RESOURCE_ROOTS.contains(&tag.to_lowercase().as_str()) {
            *resource_file = true;
            return Ok(false);
        }
    }
    if *resource_file {
        return Ok(false);
    }

    let mut android_id = None;
    let mut on_click = None;
    for attr in e.attributes().flatten() {
        let local = String::from_utf8_lossy(attr.key.local_name().as_ref()).to_string();
        let value = attr
            .unescape_value()
            .map(|v| v.to_string())
            .unwrap_or_else(|_| String::from_utf8_lossy(&attr.value).to_string());
        match local.as_str() {
            "id" => android_id = Some(normalize_id(&value)),
            "onClick" => on_click = Some(value),
            _ => {}
        }
    }

    elements.push(UiElement {
        element_class: tag,
        android_id,
        on_click,
        parent: stack.last().copied(),
        source: SourceAnchor {
            file: display_path.to_string(),
            line: line_of(content, pos),
        },
    });
    Ok(true)
}

/// "@+id/send_button" / "@id/send_button" / "@android:id/list" -> "send_button" / "list".
fn normalize_id(raw: &str) -> String {
    match raw.rsplit_once('/') {
        Some((_, name)) => name.to_string(),
        None => raw.to_string(),
    }
}

fn line_of(content: &str, byte_pos: usize) -> usize {
    let clamped = byte_pos.min(content.len());
    content[..clamped].bytes().filter(|b| *b == b'\n').count() + 1
}
