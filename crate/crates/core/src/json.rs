//! Tolerant extraction of a JSON object from free-form provider output.
//!
//! Providers are asked to answer with bare JSON but routinely wrap it in prose
//! or code fences, or leave a trailing comma behind. The extractor walks every
//! `{` in order, cuts out the balanced object starting there (string-aware),
//! and returns the first candidate that parses as a JSON object, retrying once
//! with trailing commas removed. It never panics and always terminates.

use alloc::string::{String, ToString};

use serde_json::{Map, Value};

/// Upper bound on candidate start positions tried per input.
const MAX_CANDIDATES: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("no JSON object found in provider output")]
    NoJsonFound,
    #[error("provider output contains no parseable JSON object: {0}")]
    Malformed(String),
}

impl ExtractError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExtractError::NoJsonFound => "no_json_found",
            ExtractError::Malformed(_) => "malformed_json",
        }
    }
}

/// The first parseable top-level JSON object in `text`.
pub fn extract_object(text: &str) -> Result<Map<String, Value>, ExtractError> {
    let mut last_error = None;
    for candidate in candidates(text) {
        match candidate {
            Ok(map) => return Ok(map),
            Err(e) => last_error = Some(e),
        }
    }
    Err(finish(last_error))
}

/// The first parseable object that has `key`, so a stray object in the prose
/// ahead of the payload is skipped. When no object has the key but the first
/// candidate parsed, that one is returned and the caller reports the schema.
pub fn extract_keyed(text: &str, key: &str) -> Result<Map<String, Value>, ExtractError> {
    let mut first: Option<Result<Map<String, Value>, String>> = None;
    let mut last_error = None;
    for candidate in candidates(text) {
        match candidate {
            Ok(map) if map.contains_key(key) => return Ok(map),
            Err(ref e) => last_error = Some(e.clone()),
            Ok(_) => {}
        }
        first.get_or_insert(candidate);
    }
    match first {
        Some(Ok(map)) => Ok(map),
        _ => Err(finish(last_error)),
    }
}

/// `None` means no `{` was seen at all.
fn finish(last_error: Option<String>) -> ExtractError {
    match last_error {
        Some(e) => ExtractError::Malformed(e),
        None => ExtractError::NoJsonFound,
    }
}

/// Every balanced object starting at a `{`, parsed, in order of position.
fn candidates(text: &str) -> impl Iterator<Item = Result<Map<String, Value>, String>> + '_ {
    text.match_indices('{')
        .take(MAX_CANDIDATES)
        .map(move |(start, _)| {
            let end = balanced_end(text, start).ok_or_else(|| "unterminated object".to_string())?;
            let candidate = &text[start..end];
            parse_object(candidate)
                .or_else(|e| parse_object(&strip_trailing_commas(candidate)).map_err(|_| e))
        })
}

fn parse_object(candidate: &str) -> Result<Map<String, Value>, String> {
    match serde_json::from_str::<Value>(candidate) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err("not an object".to_string()),
        Err(e) => Err(e.to_string()),
    }
}

/// Byte index one past the `}` closing the object that opens at `start`.
fn balanced_end(text: &str, start: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Drops commas that directly precede `}` or `]` outside strings.
fn strip_trailing_commas(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let chars: alloc::vec::Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        if c == '"' {
            in_string = true;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}
