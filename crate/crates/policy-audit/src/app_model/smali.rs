use std::path::Path;

use crate::app_model::{
    BodyEvent, CodeUnit, IdConstant, Invocation, InvocationKind, MethodBody, SourceAnchor,
    StringConstant,
};
use crate::error::{Error, Result};

/// Parses one smali disassembly file.
///
/// Recognized subset: `.class`, `.super`, `.method` … `.end method`, the
/// five `invoke-*` forms and `const-string` inside bodies. `sget` of
/// `R$id` fields, `new-instance` and `move-result-object` are additionally
/// captured because listener-link resolution needs them. Everything else
/// is skipped verbatim.
pub fn parse_smali(path: &Path) -> Result<CodeUnit> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_smali_source(&content, &path.display().to_string())
}

struct OpenMethod {
    name: String,
    descriptor: String,
    is_public: bool,
    start_line: usize,
    invocations: Vec<Invocation>,
    string_constants: Vec<StringConstant>,
    events: Vec<BodyEvent>,
}

pub fn parse_smali_source(content: &str, display_path: &str) -> Result<CodeUnit> {
    let mut class_name: Option<String> = None;
    let mut super_name = String::new();
    let mut methods: Vec<MethodBody> = Vec::new();
    let mut open: Option<OpenMethod> = None;

    let err = |line: usize, detail: String| Error::SmaliParse {
        path: display_path.into(),
        line,
        detail,
    };

    for (idx, raw_line) in content.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }

        if let Some(rest) = line.strip_prefix(".class") {
            let descriptor = rest.split_whitespace().last().unwrap_or("").to_string();
            if !descriptor.starts_with('L') || !descriptor.ends_with(';') {
                return Err(err(line_no, format!("invalid class descriptor {descriptor:?}")));
            }
            class_name = Some(descriptor);
        } else if let Some(rest) = line.strip_prefix(".super") {
            super_name = rest.trim().to_string();
        } else if line == ".end method" {
            match open.take() {
                Some(m) => methods.push(MethodBody {
                    name: m.name,
                    descriptor: m.descriptor,
                    is_public: m.is_public,
                    invocations: m.invocations,
                    string_constants: m.string_constants,
                    events: m.events,
                    source: SourceAnchor {
                        file: display_path.to_string(),
                        line: m.start_line,
                    },
                }),
                None => return Err(err(line_no, ".end method without open .method".into())),
            }
        } else if line.starts_with(".method") {
            if let Some(prev) = &open {
                return Err(err(
                    prev.start_line,
                    format!("method {:?} is missing .end method", prev.name),
                ));
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let signature = tokens.last().copied().unwrap_or("");
            let paren = signature.find('(').ok_or_else(|| {
                err(line_no, format!("method signature {signature:?} lacks a parameter list"))
            })?;
            open = Some(OpenMethod {
                name: signature[..paren].to_string(),
                descriptor: signature[paren..].to_string(),
                is_public: tokens[1..tokens.len() - 1].contains(&"public"),
                start_line: line_no,
                invocations: Vec::new(),
                string_constants: Vec::new(),
                events: Vec::new(),
            });
        } else if let Some(m) = open.as_mut() {
            parse_body_line(line, line_no, display_path, m)?;
        }
    }

    if let Some(m) = &open {
        return Err(err(
            m.start_line,
            format!("method {:?} is missing .end method", m.name),
        ));
    }
    let class_name =
        class_name.ok_or_else(|| err(1, "missing .class directive".into()))?;
    Ok(CodeUnit {
        class_name,
        super_name,
        methods,
    })
}

fn parse_body_line(
    line: &str,
    line_no: usize,
    display_path: &str,
    method: &mut OpenMethod,
) -> Result<()> {
    let err = |detail: String| Error::SmaliParse {
        path: display_path.into(),
        line: line_no,
        detail,
    };

    if line.starts_with("invoke-") {
        if let Some(invocation) = parse_invoke(line, display_path, line_no)? {
            method.events.push(BodyEvent::Invoke(method.invocations.len()));
            method.invocations.push(invocation);
        }
    } else if line.starts_with("const-string") {
        let rest = line
            .split_once(char::is_whitespace)
            .map(|(_, r)| r.trim())
            .ok_or_else(|| err("const-string lacks operands".into()))?;
        let (register, quoted) = rest
            .split_once(',')
            .ok_or_else(|| err("const-string lacks a comma".into()))?;
        let value = unquote(quoted.trim()).ok_or_else(|| err("const-string value is not quoted".into()))?;
        method.events.push(BodyEvent::ConstString(method.string_constants.len()));
        method.string_constants.push(StringConstant {
            register: register.trim().to_string(),
            value,
            line: line_no,
        });
    } else if line.starts_with("sget") {
        // Only R$id field reads matter: they are the symbolic view ids.
        if let Some((register, field_class, field_name)) = parse_field_access(line) {
            if field_class.ends_with("R$id;") {
                method.events.push(BodyEvent::IdConst(IdConstant {
                    register,
                    id_name: field_name,
                }));
            }
        }
    } else if line.starts_with("new-instance") {
        if let Some(rest) = line.split_once(char::is_whitespace).map(|(_, r)| r.trim()) {
            if let Some((register, class)) = rest.split_once(',') {
                method.events.push(BodyEvent::NewInstance {
                    register: register.trim().to_string(),
                    class: class.trim().to_string(),
                });
            }
        }
    } else if line.starts_with("move-result-object") {
        if let Some(register) = line.split_whitespace().nth(1) {
            method.events.push(BodyEvent::MoveResultObject {
                register: register.to_string(),
            });
        }
    }
    Ok(())
}

/// `sget v0, Lcom/app/R$id;->search_view:I` -> (v0, Lcom/app/R$id;, search_view)
fn parse_field_access(line: &str) -> Option<(String, String, String)> {
    let rest = line.split_once(char::is_whitespace)?.1.trim();
    let (register, target) = rest.split_once(',')?;
    let (class, field_and_type) = target.trim().split_once("->")?;
    let (field, _ty) = field_and_type.split_once(':')?;
    Some((
        register.trim().to_string(),
        class.trim().to_string(),
        field.trim().to_string(),
    ))
}

fn parse_invoke(line: &str, display_path: &str, line_no: usize) -> Result<Option<Invocation>> {
    let err = |detail: String| Error::SmaliParse {
        path: display_path.into(),
        line: line_no,
        detail,
    };

    let (opcode, rest) = line
        .split_once(char::is_whitespace)
        .ok_or_else(|| err("invoke without operands".into()))?;
    let kind_name = opcode
        .strip_prefix("invoke-")
        .unwrap_or("")
        .split('/')
        .next()
        .unwrap_or("");
    let kind = match kind_name {
        "virtual" => InvocationKind::Virtual,
        "static" => InvocationKind::Static,
        "direct" => InvocationKind::Direct,
        "interface" => InvocationKind::Interface,
        "super" => InvocationKind::Super,
        // invoke-polymorphic / invoke-custom are outside the recognized subset.
        _ => return Ok(None),
    };

    let rest = rest.trim();
    let open = rest.find('{').ok_or_else(|| err("invoke lacks a register list".into()))?;
    let close = rest.find('}').ok_or_else(|| err("invoke register list is unterminated".into()))?;
    let registers = parse_registers(&rest[open + 1..close]).map_err(&err)?;
    let target = rest[close + 1..].trim_start_matches(',').trim();
    let (target_class, method_part) = target
        .split_once("->")
        .ok_or_else(|| err(format!("invoke target {target:?} lacks '->'")))?;
    let paren = method_part
        .find('(')
        .ok_or_else(|| err(format!("invoke target {method_part:?} lacks a descriptor")))?;

    Ok(Some(Invocation {
        target_class: target_class.trim().to_string(),
        target_method: method_part[..paren].to_string(),
        target_descriptor: method_part[paren..].to_string(),
        kind,
        registers,
        source: SourceAnchor {
            file: display_path.to_string(),
            line: line_no,
        },
    }))
}

fn parse_registers(spec: &str) -> std::result::Result<Vec<String>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((from, to)) = spec.split_once("..") {
        let from = from.trim();
        let to = to.trim();
        let prefix = &from[..1];
        let start: usize = from[1..]
            .parse()
            .map_err(|_| format!("bad register range start {from:?}"))?;
        let end: usize = to[1..]
            .parse()
            .map_err(|_| format!("bad register range end {to:?}"))?;
        if to[..1] != from[..1] || end < start {
            return Err(format!("bad register range {spec:?}"));
        }
        return Ok((start..=end).map(|i| format!("{prefix}{i}")).collect());
    }
    Ok(spec.split(',').map(|r| r.trim().to_string()).collect())
}

fn unquote(raw: &str) -> Option<String> {
    let inner = raw.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some('"') => out.push('"'),
            Some('\'') => out.push('\''),
            Some('u') => {
                let hex: String = chars.by_ref().take(4).collect();
                match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    Some(c) => out.push(c),
                    None => out.push_str(&format!("\\u{hex}")),
                }
            }
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    Some(out)
}

/// Parameter type descriptors of a method descriptor.
pub(crate) fn parse_param_types(descriptor: &str) -> Vec<String> {
    let inner = descriptor
        .strip_prefix('(')
        .and_then(|d| d.split_once(')'))
        .map(|(params, _)| params)
        .unwrap_or("");
    let mut params = Vec::new();
    let chars: Vec<char> = inner.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let start = i;
        while i < chars.len() && chars[i] == '[' {
            i += 1;
        }
        match chars.get(i) {
            Some('L') => {
                while i < chars.len() && chars[i] != ';' {
                    i += 1;
                }
                i += 1;
            }
            Some(_) => i += 1,
            None => break,
        }
        params.push(chars[start..i.min(chars.len())].iter().collect());
    }
    params
}

/// Register slot width of a type descriptor (wide J/D take two).
fn slot_width(ty: &str) -> usize {
    if ty == "J" || ty == "D" {
        2
    } else {
        1
    }
}

/// Register holding the given parameter, accounting for the implicit
/// receiver of non-static calls and for wide parameters.
pub(crate) fn param_register(invocation: &Invocation, param_index: usize) -> Option<&String> {
    let params = parse_param_types(&invocation.target_descriptor);
    if param_index >= params.len() {
        return None;
    }
    let mut slot = usize::from(invocation.kind != InvocationKind::Static);
    for ty in &params[..param_index] {
        slot += slot_width(ty);
    }
    invocation.registers.get(slot)
}

/// Index of the first `Ljava/lang/String;` parameter, if any.
pub(crate) fn first_string_param(descriptor: &str) -> Option<usize> {
    parse_param_types(descriptor)
        .iter()
        .position(|t| t == "Ljava/lang/String;")
}
