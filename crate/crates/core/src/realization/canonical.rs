//! Conservative rewrites: fuzzy admissible matching and identifier quoting.

use crate::env::minidb::SchemaMap;
use crate::env::sql;
use crate::text::{similarity, tokenize};

pub const DEFAULT_SIMILARITY: f64 = 0.85;

/// Verb spellings treated as the canonical verb.
pub const VERB_ALIASES: [(&str, &str); 3] = [("goto", "go"), ("grab", "take"), ("place", "put")];

fn leading_verb(action: &str) -> Option<String> {
    let first = tokenize(action).into_iter().next()?;
    Some(VERB_ALIASES.iter().find(|(a, _)| *a == first).map_or(first, |(_, v)| v.to_string()))
}

/// The unique admissible action close to `action` with a compatible verb.
pub fn canonicalize(action: &str, admissible: &[String], threshold: f64) -> Option<String> {
    let action = action.trim();
    if admissible.iter().any(|a| a == action) {
        return Some(action.to_string());
    }
    let lowered = action.to_lowercase();
    let verb = leading_verb(&lowered)?;
    let mut hits = admissible
        .iter()
        .filter(|a| similarity(&lowered, a) >= threshold && leading_verb(a).as_deref() == Some(verb.as_str()));
    let first = hits.next()?;
    hits.next().is_none().then(|| first.clone())
}

enum Span<'a> {
    Code(&'a str),
    Quoted(&'a str),
}

/// Split into code and quoted spans (single-quoted literals, backtick names).
fn spans(query: &str) -> Vec<Span<'_>> {
    let bytes = query.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        let q = bytes[i];
        if q == b'\'' || q == b'`' {
            if start < i {
                out.push(Span::Code(&query[start..i]));
            }
            let mut j = i + 1;
            while j < bytes.len() {
                if bytes[j] == q {
                    if q == b'\'' && bytes.get(j + 1) == Some(&b'\'') {
                        j += 2;
                        continue;
                    }
                    break;
                }
                j += 1;
            }
            let end = (j + 1).min(bytes.len());
            out.push(Span::Quoted(&query[i..end]));
            start = end;
            i = end;
        } else {
            i += 1;
        }
    }
    if start < bytes.len() {
        out.push(Span::Code(&query[start..]));
    }
    out
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn followed_by_by(rest: &str) -> bool {
    let t = rest.trim_start();
    t.len() >= 2 && t[..2].eq_ignore_ascii_case("by") && t.as_bytes().get(2).map_or(true, |b| !is_word_byte(*b))
}

fn quote_code(code: &str, idents: &[&str]) -> String {
    let lower = code.to_ascii_lowercase();
    let bytes = code.as_bytes();
    let mut out = String::with_capacity(code.len() + 8);
    let mut i = 0;
    'scan: while i < bytes.len() {
        let boundary_before = i == 0 || !is_word_byte(bytes[i - 1]);
        if boundary_before {
            for ident in idents {
                let n = ident.len();
                if lower[i..].starts_with(&ident.to_ascii_lowercase())
                    && bytes.get(i + n).map_or(true, |b| !is_word_byte(*b))
                    && !(sql::is_reserved(ident) && followed_by_by(&code[i + n..]))
                {
                    out.push('`');
                    out.push_str(ident);
                    out.push('`');
                    i += n;
                    continue 'scan;
                }
            }
        }
        let ch = code[i..].chars().next().expect("in bounds");
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

/// Wrap known identifiers that need quoting in backticks, leaving string
/// literals and already-quoted names alone. Returns the query unchanged when
/// it already parses or when the repaired text would not parse.
pub fn backtick_repair(query: &str, schema: &SchemaMap) -> String {
    if sql::parse(query).is_ok() {
        return query.to_string();
    }
    let mut idents = schema.quoted_identifiers();
    idents.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    if idents.is_empty() {
        return query.to_string();
    }
    let repaired: String = spans(query)
        .into_iter()
        .map(|s| match s {
            Span::Code(c) => quote_code(c, &idents),
            Span::Quoted(q) => q.to_string(),
        })
        .collect();
    if sql::parse(&repaired).is_ok() {
        repaired
    } else {
        query.to_string()
    }
}
