//! Recovering a tool call from malformed model text.

use std::sync::OnceLock;

use regex::Regex;

use crate::call::{find_embedded_call, parse_call_strict, ToolCall};
use crate::contract::{Contract, ToolSpec};
use crate::trajectory::RescuePath;

/// Keep only calls whose tool exists and whose required arguments are all
/// present. Extra arguments are dropped; nothing is filled in.
fn admit(contract: &Contract, name: &str, args: Vec<String>) -> Option<ToolCall> {
    let tool = contract.tool(name)?;
    let required = tool.required_params().count();
    if args.len() < required {
        return None;
    }
    let args = args.into_iter().take(tool.parameters.len()).collect();
    Some(ToolCall { name: name.into(), args })
}

fn call_tools(contract: &Contract) -> Vec<&ToolSpec> {
    contract
        .tools
        .iter()
        .filter(|t| t.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
        .collect()
}

fn json_value_text(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn from_json(text: &str, contract: &Contract) -> Option<ToolCall> {
    for (i, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<serde_json::Value>();
        let Some(Ok(serde_json::Value::Object(obj))) = stream.next() else { continue };
        let Some(name) = obj.get("name").or_else(|| obj.get("tool")).and_then(|v| v.as_str()) else {
            continue;
        };
        let Some(tool) = contract.tool(name) else { continue };
        let arguments = match obj.get("arguments").or_else(|| obj.get("args")) {
            Some(serde_json::Value::String(s)) => serde_json::from_str(s).unwrap_or(serde_json::Value::Null),
            Some(v) => v.clone(),
            None => serde_json::Value::Object(Default::default()),
        };
        let mut args = Vec::new();
        for p in &tool.parameters {
            match arguments.get(&p.name).and_then(json_value_text) {
                Some(v) => args.push(v),
                None => break,
            }
        }
        if let Some(call) = admit(contract, name, args) {
            return Some(call);
        }
    }
    None
}

fn from_keyword(text: &str, contract: &Contract) -> Option<ToolCall> {
    let tools = call_tools(contract);
    let names: Vec<&str> = tools.iter().map(|t| t.name.as_str()).collect();
    if let Some(call) = find_embedded_call(text, &names) {
        if let Some(c) = admit(contract, &call.name, call.args) {
            return Some(c);
        }
    }
    for line in text.lines() {
        let Some((head, value)) = line.split_once(':') else { continue };
        let head = head.trim();
        let value = value.trim();
        if let Some(tool) = tools.iter().find(|t| t.name == head) {
            let args = if tool.parameters.is_empty() || value.is_empty() { vec![] } else { vec![value.to_string()] };
            if let Some(c) = admit(contract, head, args) {
                return Some(c);
            }
        }
    }
    None
}

fn from_fence(text: &str, contract: &Contract) -> Option<ToolCall> {
    static FENCE: OnceLock<Regex> = OnceLock::new();
    let re = FENCE.get_or_init(|| Regex::new(r"(?s)```[A-Za-z0-9_-]*[ \t]*\n?(.*?)```").expect("static regex"));
    let tool = contract.protocol.command_tool.as_deref()?;
    let body = re.captures(text)?.get(1)?.as_str().trim();
    if body.is_empty() {
        return None;
    }
    admit(contract, tool, vec![body.to_string()])
}

fn from_xml(text: &str, contract: &Contract) -> Option<ToolCall> {
    for tool in call_tools(contract) {
        let open = format!("<{}>", tool.name);
        let close = format!("</{}>", tool.name);
        let Some(start) = text.find(&open) else { continue };
        let rest = &text[start + open.len()..];
        let Some(end) = rest.find(&close) else { continue };
        let body = rest[..end].trim();
        let args = if body.is_empty() { vec![] } else { vec![body.to_string()] };
        if let Some(c) = admit(contract, &tool.name, args) {
            return Some(c);
        }
    }
    None
}

/// Try JSON, keyword, fenced and XML-like forms in that order.
pub fn rescue_tool_call(text: &str, contract: &Contract) -> Option<(ToolCall, RescuePath)> {
    if let Some(call) = parse_call_strict(text) {
        if let Some(c) = admit(contract, &call.name, call.args) {
            return Some((c, RescuePath::None));
        }
    }
    from_json(text, contract)
        .map(|c| (c, RescuePath::Json))
        .or_else(|| from_keyword(text, contract).map(|c| (c, RescuePath::Keyword)))
        .or_else(|| from_fence(text, contract).map(|c| (c, RescuePath::Fenced)))
        .or_else(|| from_xml(text, contract).map(|c| (c, RescuePath::XmlLike)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::minidb::base_contract;

    fn rescue(text: &str) -> Option<(ToolCall, RescuePath)> {
        rescue_tool_call(text, &base_contract())
    }

    #[test]
    fn keyword_form() {
        let (c, p) = rescue(r#"Let me run execute_query("SELECT * FROM t") now."#).unwrap();
        assert_eq!(c, ToolCall::new("execute_query", &["SELECT * FROM t"]));
        assert_eq!(p, RescuePath::Keyword);
        let (c, _) = rescue("commit_final_answer: 42").unwrap();
        assert_eq!(c, ToolCall::new("commit_final_answer", &["42"]));
    }

    #[test]
    fn json_form() {
        let (c, p) = rescue(r#"{"name": "execute_query", "arguments": {"query": "SELECT 1"}}"#).unwrap();
        assert_eq!(c.args, vec!["SELECT 1"]);
        assert_eq!(p, RescuePath::Json);
        assert!(rescue(r#"{"name": "execute_query", "arguments": {}}"#).is_none());
    }

    #[test]
    fn fenced_and_xml() {
        let (c, p) = rescue("Here:\n```sql\nSELECT name FROM staff\n```").unwrap();
        assert_eq!(c, ToolCall::new("execute_query", &["SELECT name FROM staff"]));
        assert_eq!(p, RescuePath::Fenced);
        let (c, p) = rescue("<commit_final_answer>7</commit_final_answer>").unwrap();
        assert_eq!(c, ToolCall::new("commit_final_answer", &["7"]));
        assert_eq!(p, RescuePath::XmlLike);
    }

    #[test]
    fn passthrough_and_prose() {
        assert_eq!(rescue("finish()").unwrap().1, RescuePath::None);
        assert!(rescue("I will take the mug").is_none());
        assert!(rescue("execute_query()").is_none());
    }
}
