//! Text utilities shared by policy analysis: HTML stripping, sentence
//! segmentation, tokenization and light stemming.

/// Abbreviations that never terminate a sentence. Compared lowercase,
/// without the final period.
const ABBREVIATIONS: [&str; 24] = [
    "e.g", "i.e", "etc", "cf", "vs", "mr", "mrs", "ms", "dr", "prof", "inc", "ltd", "co", "corp",
    "no", "fig", "figs", "et", "al", "approx", "dept", "jr", "sr", "st",
];

const BLOCK_TAGS: [&str; 22] = [
    "p", "div", "br", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "table",
    "section", "article", "header", "footer", "blockquote", "title", "dt", "dd",
];

/// Lowercases and tokenizes into alphanumeric runs, returning parallel
/// (raw, stemmed) token lists. "n't" contractions expand to "not".
pub(crate) fn tokenize(text: &str) -> (Vec<String>, Vec<String>) {
    let lowered = text.to_lowercase().replace("n't", " not");
    let mut raw = Vec::new();
    let mut current = String::new();
    for ch in lowered.chars() {
        if ch.is_alphanumeric() {
            current.push(ch);
        } else if !current.is_empty() {
            raw.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        raw.push(current);
    }
    let stems = raw.iter().map(|t| stem(t)).collect();
    (raw, stems)
}

/// Light suffix stripping: plural "s"/"ies", "ing", "ed". Deliberately not
/// a full stemmer; pattern authors can use globs for irregular forms.
pub(crate) fn stem(token: &str) -> String {
    let n = token.len();
    if n > 4 && token.ends_with("ies") {
        return format!("{}y", &token[..n - 3]);
    }
    if n > 5 && token.ends_with("ing") {
        return token[..n - 3].to_string();
    }
    if n > 4 && token.ends_with("ed") {
        return token[..n - 2].to_string();
    }
    if n > 3
        && token.ends_with('s')
        && !token.ends_with("ss")
        && !token.ends_with("us")
        && !token.ends_with("is")
    {
        return token[..n - 1].to_string();
    }
    token.to_string()
}

pub(crate) fn looks_like_html(input: &str) -> bool {
    let lowered = input.to_lowercase();
    ["<html", "<body", "<head", "<p", "<div", "<br", "</", "<span", "<li"]
        .iter()
        .any(|t| lowered.contains(t))
}

/// Removes tags, scripts, styles and comments; decodes common entities.
/// Block-level tags become paragraph breaks so headings and list items do
/// not fuse with the following text.
pub(crate) fn strip_html(input: &str) -> String {
    let chars: Vec<char> = input.chars().collect();
    let mut out = String::with_capacity(input.len());
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch == '<' {
            if rest_starts_with(&chars, i, "<!--") {
                i = skip_until(&chars, i + 4, "-->");
                continue;
            }
            if rest_starts_with_ci(&chars, i, "<script") {
                i = skip_until_ci(&chars, i, "</script");
                i = skip_until(&chars, i, ">");
                continue;
            }
            if rest_starts_with_ci(&chars, i, "<style") {
                i = skip_until_ci(&chars, i, "</style");
                i = skip_until(&chars, i, ">");
                continue;
            }
            let tag_end = find_from(&chars, i + 1, '>').unwrap_or(chars.len());
            let tag: String = chars[i + 1..tag_end.min(chars.len())]
                .iter()
                .collect::<String>()
                .trim_start_matches('/')
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric())
                .collect::<String>()
                .to_lowercase();
            if BLOCK_TAGS.contains(&tag.as_str()) {
                out.push_str("\n\n");
            } else {
                out.push(' ');
            }
            i = tag_end.saturating_add(1);
        } else if ch == '&' {
            let (decoded, consumed) = decode_entity(&chars[i..]);
            out.push_str(&decoded);
            i += consumed;
        } else {
            out.push(ch);
            i += 1;
        }
    }
    out
}

fn rest_starts_with(chars: &[char], at: usize, needle: &str) -> bool {
    chars[at..]
        .iter()
        .zip(needle.chars())
        .filter(|(c, n)| **c == *n)
        .count()
        == needle.len()
}

fn rest_starts_with_ci(chars: &[char], at: usize, needle: &str) -> bool {
    chars[at..]
        .iter()
        .zip(needle.chars())
        .filter(|(c, n)| c.to_lowercase().eq(n.to_lowercase()))
        .count()
        == needle.len()
}

fn skip_until(chars: &[char], mut from: usize, needle: &str) -> usize {
    while from < chars.len() && !rest_starts_with(chars, from, needle) {
        from += 1;
    }
    (from + needle.len()).min(chars.len())
}

fn skip_until_ci(chars: &[char], mut from: usize, needle: &str) -> usize {
    while from < chars.len() && !rest_starts_with_ci(chars, from, needle) {
        from += 1;
    }
    (from + needle.len()).min(chars.len())
}

fn find_from(chars: &[char], from: usize, needle: char) -> Option<usize> {
    chars[from..].iter().position(|c| *c == needle).map(|p| p + from)
}

fn decode_entity(chars: &[char]) -> (String, usize) {
    let semi = chars.iter().take(10).position(|c| *c == ';');
    let Some(semi) = semi else {
        return ("&".to_string(), 1);
    };
    let body: String = chars[1..semi].iter().collect();
    let decoded = match body.as_str() {
        "amp" => Some("&".to_string()),
        "lt" => Some("<".to_string()),
        "gt" => Some(">".to_string()),
        "quot" => Some("\"".to_string()),
        "apos" => Some("'".to_string()),
        "nbsp" => Some(" ".to_string()),
        _ => {
            if let Some(num) = body.strip_prefix("#x").or_else(|| body.strip_prefix("#X")) {
                u32::from_str_radix(num, 16).ok().and_then(char::from_u32).map(String::from)
            } else if let Some(num) = body.strip_prefix('#') {
                num.parse::<u32>().ok().and_then(char::from_u32).map(String::from)
            } else {
                None
            }
        }
    };
    match decoded {
        Some(d) => (d, semi + 1),
        None => ("&".to_string(), 1),
    }
}

/// Splits normalized plain text into sentences. Paragraph breaks (blank
/// lines) always end a sentence; terminators followed by a sentence-start
/// character end one unless they belong to an abbreviation or a decimal.
pub(crate) fn split_sentences(text: &str) -> Vec<String> {
    let unified = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut sentences = Vec::new();
    for paragraph in split_paragraphs(&unified) {
        let flat = collapse_whitespace(&paragraph);
        if flat.is_empty() {
            continue;
        }
        split_paragraph_sentences(&flat, &mut sentences);
    }
    sentences
}

fn split_paragraphs(text: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut current = String::new();
    let mut newline_run = 0usize;
    for ch in text.chars() {
        if ch == '\n' {
            newline_run += 1;
            current.push(' ');
        } else {
            if newline_run >= 2 {
                paragraphs.push(std::mem::take(&mut current));
            }
            newline_run = 0;
            current.push(ch);
        }
    }
    paragraphs.push(current);
    paragraphs
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn split_paragraph_sentences(flat: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = flat.chars().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let ch = chars[i];
        if ch == '.' || ch == '!' || ch == '?' {
            // Include trailing closers in the current sentence.
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], ')' | ']' | '"' | '\'' | '\u{201d}' | '\u{2019}') {
                end += 1;
            }
            if is_sentence_break(&chars, i, end) {
                let sentence: String = chars[start..end].iter().collect();
                let trimmed = sentence.trim();
                if !trimmed.is_empty() {
                    out.push(trimmed.to_string());
                }
                start = end;
            }
            i = end;
        } else {
            i += 1;
        }
    }
    let tail: String = chars[start..].iter().collect();
    let trimmed = tail.trim();
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
}

fn is_sentence_break(chars: &[char], terminator: usize, end: usize) -> bool {
    // Next non-space character must start a sentence (or be the end).
    let mut next = end;
    while next < chars.len() && chars[next] == ' ' {
        next += 1;
    }
    if next == end && end < chars.len() {
        return false; // no whitespace after terminator: "3.5", "e.g"
    }
    if next < chars.len() {
        let c = chars[next];
        let starts_sentence = c.is_uppercase()
            || c.is_ascii_digit()
            || matches!(c, '§' | '(' | '[' | '"' | '\u{201c}' | '\u{2018}' | '•' | '-' | '*');
        if !starts_sentence {
            return false;
        }
    }
    if chars[terminator] != '.' {
        return true;
    }
    // Decimal guard: digit on both sides.
    if terminator > 0
        && terminator + 1 < chars.len()
        && chars[terminator - 1].is_ascii_digit()
        && chars[terminator + 1].is_ascii_digit()
    {
        return false;
    }
    // Abbreviation guard on the word before the period.
    let mut word_end = terminator;
    while word_end > 0 && matches!(chars[word_end - 1], ')' | ']' | '"' | '\'') {
        word_end -= 1;
    }
    let mut word_start = word_end;
    while word_start > 0 && (chars[word_start - 1].is_ascii_alphabetic() || chars[word_start - 1] == '.') {
        word_start -= 1;
    }
    let word: String = chars[word_start..word_end].iter().collect::<String>().to_lowercase();
    let word = word.trim_matches('.');
    if word.len() == 1 {
        return false; // initials such as "B. M."
    }
    !ABBREVIATIONS.contains(&word)
}
