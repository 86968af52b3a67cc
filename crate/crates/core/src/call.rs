//! Canonical call syntax: `tool_name("arg", "arg")`, arguments as JSON
//! string literals. Both MiniDB and the realization layer speak it.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    pub args: Vec<String>,
}

impl ToolCall {
    pub fn new(name: &str, args: &[&str]) -> Self {
        Self { name: name.into(), args: args.iter().map(|s| s.to_string()).collect() }
    }

    pub fn render(&self) -> String {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| serde_json::to_string(a).expect("strings serialize"))
            .collect();
        format!("{}({})", self.name, args.join(", "))
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Parse a JSON string literal at the start of `s`; returns the value and
/// the number of bytes consumed.
fn json_string_prefix(s: &str) -> Option<(String, usize)> {
    if !s.starts_with('"') {
        return None;
    }
    let bytes = s.as_bytes();
    let mut i = 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => {
                let lit = &s[..=i];
                return serde_json::from_str::<String>(lit).ok().map(|v| (v, i + 1));
            }
            _ => i += 1,
        }
    }
    None
}

/// Parse `name(args)` at the start of `s`. Returns the call and bytes used.
pub fn parse_call_prefix(s: &str) -> Option<(ToolCall, usize)> {
    let name_len = s.find(|c: char| !is_ident_char(c)).unwrap_or(s.len());
    if name_len == 0 || s[..name_len].starts_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    let name = &s[..name_len];
    let mut rest = s[name_len..].trim_start().strip_prefix('(')?;
    let mut args = Vec::new();
    loop {
        rest = rest.trim_start();
        if let Some(r) = rest.strip_prefix(')') {
            return Some((ToolCall { name: name.into(), args }, s.len() - r.len()));
        }
        if !args.is_empty() {
            rest = rest.strip_prefix(',')?.trim_start();
        }
        let (value, n) = json_string_prefix(rest)?;
        args.push(value);
        rest = &rest[n..];
    }
}

/// The whole (trimmed) text must be exactly one call.
pub fn parse_call_strict(text: &str) -> Option<ToolCall> {
    let t = text.trim();
    let (call, used) = parse_call_prefix(t)?;
    (used == t.len()).then_some(call)
}

/// First call anywhere in `text` whose name is one of `names`.
pub fn find_embedded_call(text: &str, names: &[&str]) -> Option<ToolCall> {
    let mut best: Option<(usize, ToolCall)> = None;
    for name in names {
        let mut from = 0;
        while let Some(pos) = text[from..].find(name) {
            let at = from + pos;
            let boundary = text[..at].chars().next_back().map_or(true, |c| !is_ident_char(c));
            if boundary {
                if let Some((call, _)) = parse_call_prefix(&text[at..]) {
                    if call.name == *name {
                        if best.as_ref().map_or(true, |(b, _)| at < *b) {
                            best = Some((at, call));
                        }
                        break;
                    }
                }
            }
            from = at + name.len();
        }
    }
    best.map(|(_, c)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse() {
        let c = ToolCall::new("execute_query", &["SELECT \"x\" FROM t"]);
        let text = c.render();
        assert_eq!(text, r#"execute_query("SELECT \"x\" FROM t")"#);
        assert_eq!(parse_call_strict(&text), Some(c));
        assert_eq!(parse_call_strict("finish()"), Some(ToolCall::new("finish", &[])));
        assert_eq!(parse_call_strict(r#"f("a", "b")"#), Some(ToolCall::new("f", &["a", "b"])));
    }

    #[test]
    fn strict_rejects_trailing_text() {
        assert!(parse_call_strict(r#"f("a") and more"#).is_none());
        assert!(parse_call_strict("I will take the mug").is_none());
        assert!(parse_call_strict(r#"f("unterminated)"#).is_none());
    }

    #[test]
    fn embedded() {
        let t = r#"Sure, running execute_query("SELECT 1") now"#;
        assert_eq!(find_embedded_call(t, &["execute_query"]), Some(ToolCall::new("execute_query", &["SELECT 1"])));
        assert!(find_embedded_call("my_execute_query(\"x\")", &["execute_query"]).is_none());
    }
}
