//! Lenient JSON extraction from model output.
//!
//! Repairs are bounded: code fences and surrounding prose are dropped, the
//! first balanced object or array is taken, and trailing commas are removed.
//! Nothing else is guessed.

use serde_json::Value;

pub fn extract_json(text: &str) -> Result<Value, String> {
    let body = strip_fences(text.trim());
    if let Ok(v) = serde_json::from_str(body) {
        return Ok(v);
    }
    let candidate = first_balanced(body).ok_or_else(|| "no JSON object found in response".to_string())?;
    if let Ok(v) = serde_json::from_str(candidate) {
        return Ok(v);
    }
    serde_json::from_str(&drop_trailing_commas(candidate)).map_err(|e| format!("invalid JSON: {e}"))
}

/// Contents of the first fenced block, if any.
fn strip_fences(s: &str) -> &str {
    let Some(open) = s.find("```") else {
        return s;
    };
    let after = &s[open + 3..];
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => body[..close].trim(),
        None => body.trim(),
    }
}

fn first_balanced(s: &str) -> Option<&str> {
    let start = s.find(['{', '['])?;
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in s[start..].char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '{' | '[' => depth += 1,
            '}' | ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&s[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

fn drop_trailing_commas(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut in_str = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
        } else if c == '"' {
            in_str = true;
        } else if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}
