//! Reader and writer for the restricted YAML subset used by scenario files.
//!
//! Supported: nested block maps and lists with 2-space indentation, `- `
//! list items (including maps that start on the item line), one level of
//! inline scalar lists `[a, b]`, plain / single-quoted / double-quoted
//! scalars and `#` comments. Anchors, aliases, tags, flow maps, block
//! scalars and multi-document streams are rejected.

use super::ConfigError;

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    /// Scalars stay untyped until decoded against the schema.
    Scalar { text: String, quoted: bool },
    List(Vec<Node>),
    Map(Vec<(String, Node)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub line: usize,
    pub col: usize,
}

impl Node {
    pub fn scalar(text: impl Into<String>) -> Node {
        Node::synthetic(NodeKind::Scalar {
            text: text.into(),
            quoted: false,
        })
    }

    pub fn string(text: impl Into<String>) -> Node {
        let text = text.into();
        let quoted = needs_quotes(&text);
        Node::synthetic(NodeKind::Scalar { text, quoted })
    }

    pub fn list(items: Vec<Node>) -> Node {
        Node::synthetic(NodeKind::List(items))
    }

    pub fn map(entries: Vec<(&str, Node)>) -> Node {
        Node::synthetic(NodeKind::Map(
            entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        ))
    }

    fn synthetic(kind: NodeKind) -> Node {
        Node { kind, line: 0, col: 0 }
    }
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

#[derive(Clone, Debug)]
struct Line {
    no: usize,
    indent: usize,
    /// Content with the indentation and any comment removed.
    text: String,
}

impl Line {
    fn col(&self, offset: usize) -> usize {
        self.indent + offset + 1
    }
}

/// Byte index of a `#` comment start outside quotes, if any.
fn comment_start(s: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    let mut prev_ws = true;
    let mut chars = s.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match quote {
            Some('"') if c == '\\' => {
                chars.next();
            }
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '#' && prev_ws => return Some(i),
            None if (c == '"' || c == '\'') && prev_ws_or_delim(s, i) => quote = Some(c),
            None => {}
        }
        prev_ws = c.is_whitespace();
    }
    None
}

fn prev_ws_or_delim(s: &str, i: usize) -> bool {
    s[..i]
        .chars()
        .next_back()
        .is_none_or(|p| p.is_whitespace() || matches!(p, '[' | ',' | ':' | '-'))
}

fn split_lines(text: &str) -> Result<Vec<Line>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let body = match comment_start(raw) {
            Some(k) => &raw[..k],
            None => raw,
        };
        let trimmed = body.trim_end();
        if trimmed.trim_start().is_empty() {
            continue;
        }
        let indent = trimmed.len() - trimmed.trim_start_matches(' ').len();
        let text = &trimmed[indent..];
        if text.starts_with('\t') {
            return Err(syntax(no, indent + 1, "tab characters are not allowed for indentation"));
        }
        if indent % 2 != 0 {
            return Err(syntax(no, 1, "indentation must be a multiple of 2 spaces"));
        }
        if text == "---" || text == "..." {
            return Err(syntax(no, indent + 1, "multi-document streams are not supported"));
        }
        out.push(Line {
            no,
            indent,
            text: text.to_string(),
        });
    }
    Ok(out)
}

pub fn parse_document(text: &str) -> Result<Node, ConfigError> {
    let lines = split_lines(text)?;
    if lines.is_empty() {
        return Err(syntax(1, 1, "empty document"));
    }
    if lines[0].indent != 0 {
        return Err(syntax(lines[0].no, 1, "document must start at column 1"));
    }
    let mut p = Parser { lines, pos: 0 };
    let node = p.block(0)?;
    if let Some(l) = p.lines.get(p.pos) {
        return Err(syntax(l.no, l.col(0), "unexpected content after document root"));
    }
    Ok(node)
}

struct Parser {
    lines: Vec<Line>,
    pos: usize,
}

fn is_list_item(text: &str) -> bool {
    text == "-" || text.starts_with("- ")
}

/// Splits `key: rest` at the first `: ` (or trailing `:`) outside quotes.
fn split_key(text: &str) -> Option<(&str, &str)> {
    if text.starts_with('"') || text.starts_with('\'') || text.starts_with('[') {
        return None;
    }
    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b':' && (i + 1 == bytes.len() || bytes[i + 1] == b' ') {
            return Some((&text[..i], text[i + 1..].trim_start()));
        }
    }
    None
}

impl Parser {
    fn block(&mut self, indent: usize) -> Result<Node, ConfigError> {
        let first = &self.lines[self.pos];
        if is_list_item(&first.text) {
            self.list(indent)
        } else {
            self.map(indent)
        }
    }

    fn map(&mut self, indent: usize) -> Result<Node, ConfigError> {
        let (line, col) = (self.lines[self.pos].no, self.lines[self.pos].col(0));
        let mut entries: Vec<(String, Node)> = Vec::new();
        while let Some(l) = self.lines.get(self.pos).cloned() {
            if l.indent < indent {
                break;
            }
            if l.indent > indent {
                return Err(syntax(l.no, l.col(0), "unexpected indentation"));
            }
            if is_list_item(&l.text) {
                return Err(syntax(l.no, l.col(0), "list item where a map key was expected"));
            }
            let (key, rest) = split_key(&l.text)
                .ok_or_else(|| syntax(l.no, l.col(0), "expected `key: value`"))?;
            validate_key(key).map_err(|m| syntax(l.no, l.col(0), m))?;
            if entries.iter().any(|(k, _)| k == key) {
                return Err(syntax(l.no, l.col(0), format!("duplicate key `{key}`")));
            }
            let value_off = l.text.len() - rest.len();
            self.pos += 1;
            let value = if rest.is_empty() {
                self.nested(&l, indent)?
            } else {
                inline_value(rest, l.no, l.col(value_off))?
            };
            entries.push((key.to_string(), value));
        }
        Ok(Node {
            kind: NodeKind::Map(entries),
            line,
            col,
        })
    }

    /// Block value introduced by a bare `key:` or `-`.
    fn nested(&mut self, parent: &Line, indent: usize) -> Result<Node, ConfigError> {
        match self.lines.get(self.pos) {
            Some(next) if next.indent == indent + 2 => self.block(indent + 2),
            Some(next) if next.indent > indent + 2 => {
                Err(syntax(next.no, next.col(0), "unexpected indentation"))
            }
            _ => Err(syntax(parent.no, parent.col(parent.text.len()), "missing value")),
        }
    }

    fn list(&mut self, indent: usize) -> Result<Node, ConfigError> {
        let (line, col) = (self.lines[self.pos].no, self.lines[self.pos].col(0));
        let mut items = Vec::new();
        while let Some(l) = self.lines.get(self.pos).cloned() {
            if l.indent < indent {
                break;
            }
            if l.indent > indent {
                return Err(syntax(l.no, l.col(0), "unexpected indentation"));
            }
            if !is_list_item(&l.text) {
                return Err(syntax(l.no, l.col(0), "expected `- ` list item"));
            }
            let rest = l.text[1..].trim_start();
            if rest.is_empty() {
                self.pos += 1;
                items.push(self.nested(&l, indent)?);
            } else if split_key(rest).is_some() {
                // `- key: value` opens a map whose first entry sits on the item line.
                let shift = l.text.len() - rest.len();
                self.lines[self.pos] = Line {
                    no: l.no,
                    indent: indent + shift,
                    text: rest.to_string(),
                };
                if shift != 2 {
                    return Err(syntax(l.no, l.col(1), "expected one space after `-`"));
                }
                items.push(self.map(indent + 2)?);
            } else {
                self.pos += 1;
                items.push(inline_value(rest, l.no, l.col(l.text.len() - rest.len()))?);
            }
        }
        Ok(Node {
            kind: NodeKind::List(items),
            line,
            col,
        })
    }
}

fn validate_key(key: &str) -> Result<(), String> {
    if key.is_empty() {
        return Err("empty key".into());
    }
    if let Some(c) = key
        .chars()
        .find(|c| !(c.is_alphanumeric() || *c == '_' || *c == '-'))
    {
        return Err(format!("invalid character {c:?} in key `{key}`"));
    }
    Ok(())
}

/// Parses the value part of a line: an inline list or a scalar.
pub fn inline_value(text: &str, line: usize, col: usize) -> Result<Node, ConfigError> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix('[') {
        let Some(inner) = inner.strip_suffix(']') else {
            return Err(syntax(line, col, "unterminated inline list"));
        };
        let mut items = Vec::new();
        if !inner.trim().is_empty() {
            let mut offset = 1;
            for part in split_commas(inner).map_err(|m| syntax(line, col, m))? {
                let lead = part.len() - part.trim_start().len();
                let item_col = col + offset + lead;
                if part.trim().starts_with('[') {
                    return Err(syntax(line, item_col, "nested inline lists are not supported"));
                }
                if part.trim().is_empty() {
                    return Err(syntax(line, item_col, "empty inline list item"));
                }
                items.push(scalar(part.trim(), line, item_col)?);
                offset += part.len() + 1;
            }
        }
        return Ok(Node {
            kind: NodeKind::List(items),
            line,
            col,
        });
    }
    scalar(text, line, col)
}

fn split_commas(s: &str) -> Result<Vec<&str>, String> {
    let mut parts = Vec::new();
    let mut quote: Option<char> = None;
    let mut start = 0;
    let mut chars = s.char_indices();
    while let Some((i, c)) = chars.next() {
        match quote {
            Some('"') if c == '\\' => {
                chars.next();
            }
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c == ',' => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            None => {}
        }
    }
    if quote.is_some() {
        return Err("unterminated quoted string".into());
    }
    parts.push(&s[start..]);
    Ok(parts)
}

fn scalar(text: &str, line: usize, col: usize) -> Result<Node, ConfigError> {
    let err = |m: &str| syntax(line, col, m);
    let (text, quoted) = match text.chars().next() {
        Some('"') => (unescape_double(text).map_err(|m| err(&m))?, true),
        Some('\'') => {
            let body = text
                .strip_prefix('\'')
                .and_then(|t| t.strip_suffix('\''))
                .filter(|_| text.len() >= 2)
                .ok_or_else(|| err("unterminated quoted string"))?;
            if body.replace("''", "").contains('\'') {
                return Err(err("stray quote inside single-quoted string"));
            }
            (body.replace("''", "'"), true)
        }
        Some('&') | Some('*') => return Err(err("anchors and aliases are not supported")),
        Some('!') => return Err(err("tags are not supported")),
        Some('{') => return Err(err("flow-style maps are not supported")),
        Some('|') | Some('>') => return Err(err("block scalars are not supported")),
        Some(']') => return Err(err("unexpected `]`")),
        _ => {
            if text.contains(": ") || text.ends_with(':') {
                return Err(err("unexpected `:` in plain scalar"));
            }
            (text.to_string(), false)
        }
    };
    Ok(Node {
        kind: NodeKind::Scalar { text, quoted },
        line,
        col,
    })
}

fn unescape_double(text: &str) -> Result<String, String> {
    let mut out = String::new();
    let mut chars = text[1..].chars();
    loop {
        match chars.next() {
            None => return Err("unterminated quoted string".into()),
            Some('"') => break,
            Some('\\') => match chars.next() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('u') => {
                    let hex: String = chars.by_ref().take(4).collect();
                    let c = u32::from_str_radix(&hex, 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| format!("bad unicode escape \\u{hex}"))?;
                    out.push(c);
                }
                other => return Err(format!("unknown escape \\{}", other.unwrap_or(' '))),
            },
            Some(c) => out.push(c),
        }
    }
    if chars.next().is_some() {
        return Err("unexpected text after closing quote".into());
    }
    Ok(out)
}

/// Whether a string must be double-quoted to read back as the same text.
fn needs_quotes(s: &str) -> bool {
    let plain_char = |c: char| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '/' | ' ');
    s.is_empty()
        || s.starts_with(['-', ' '])
        || s.ends_with(' ')
        || !s.chars().all(plain_char)
        || s.parse::<f64>().is_ok()
        || matches!(s, "true" | "false" | "null" | "~")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn emit_scalar(text: &str, quoted: bool) -> String {
    if quoted || needs_quotes(text) && !is_number_like(text) {
        quote(text)
    } else {
        text.to_string()
    }
}

fn is_number_like(s: &str) -> bool {
    s.parse::<f64>().is_ok() || matches!(s, "true" | "false")
}

fn is_flat_list(items: &[Node]) -> bool {
    items
        .iter()
        .all(|n| matches!(n.kind, NodeKind::Scalar { .. }))
}

/// Writes a node tree back out in block style.
pub fn emit(node: &Node) -> String {
    let mut out = String::new();
    emit_block(node, 0, &mut out);
    out
}

fn emit_inline(node: &Node) -> Option<String> {
    match &node.kind {
        NodeKind::Scalar { text, quoted } => Some(emit_scalar(text, *quoted)),
        NodeKind::List(items) if is_flat_list(items) => Some(format!(
            "[{}]",
            items
                .iter()
                .map(|n| emit_inline(n).unwrap())
                .collect::<Vec<_>>()
                .join(", ")
        )),
        _ => None,
    }
}

fn emit_block(node: &Node, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match &node.kind {
        NodeKind::Map(entries) => {
            for (k, v) in entries {
                match emit_inline(v) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        emit_block(v, indent + 2, out);
                    }
                }
            }
        }
        NodeKind::List(items) => {
            for item in items {
                match (&item.kind, emit_inline(item)) {
                    (_, Some(s)) => out.push_str(&format!("{pad}- {s}\n")),
                    (NodeKind::Map(_), None) => {
                        let mut inner = String::new();
                        emit_block(item, indent + 2, &mut inner);
                        // First entry moves onto the `- ` line.
                        out.push_str(&format!("{pad}- {}", &inner[indent + 2..]));
                    }
                    _ => {
                        out.push_str(&format!("{pad}-\n"));
                        emit_block(item, indent + 2, out);
                    }
                }
            }
        }
        NodeKind::Scalar { .. } => {
            out.push_str(&format!("{pad}{}\n", emit_inline(node).unwrap()));
        }
    }
}
