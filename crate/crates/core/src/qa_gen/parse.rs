//! Tolerant parser for model-produced question/answer lists.
//!
//! Accepts the layouts chat models actually emit: fenced or bare, numbered or
//! not, `Q:`/`A:` or `Question:`/`Answer:` in any case, with continuation
//! lines folded into the open field.

use super::GenError;

/// The content inside ``` fences when any exist, otherwise the whole text.
fn body(raw: &str) -> String {
    let mut inside = false;
    let mut fenced = String::new();
    let mut saw_fence = false;
    for line in raw.lines() {
        if line.trim_start().starts_with("```") {
            saw_fence = true;
            inside = !inside;
            continue;
        }
        if inside {
            fenced.push_str(line);
            fenced.push('\n');
        }
    }
    if saw_fence {
        fenced
    } else {
        raw.to_string()
    }
}

/// Strips leading list markers: digits followed by `.` or `)`, or a bullet.
fn strip_numbering(line: &str) -> &str {
    let trimmed = line.trim_start();
    if let Some(rest) = trimmed.strip_prefix(['-', '*']) {
        return rest.trim_start();
    }
    let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &trimmed[digits..];
        if let Some(rest) = rest.strip_prefix(['.', ')']) {
            return rest.trim_start();
        }
    }
    trimmed
}

fn field_after_tag<'a>(line: &'a str, tags: &[&str]) -> Option<&'a str> {
    let lower = line.to_lowercase();
    for tag in tags {
        if lower.starts_with(tag) {
            return Some(line[tag.len()..].trim_start());
        }
    }
    None
}

/// Parses (question, answer) pairs out of raw provider output. Pairs missing
/// either field are dropped; zero usable pairs is an error carrying the raw
/// text for diagnosis.
pub(super) fn parse_pairs(raw: &str) -> Result<Vec<(String, String)>, GenError> {
    let text = body(raw);
    let mut pairs = Vec::new();
    let mut question: Option<String> = None;
    let mut answer: Option<String> = None;

    let mut flush = |question: &mut Option<String>, answer: &mut Option<String>| {
        if let (Some(q), Some(a)) = (question.take(), answer.take()) {
            let (q, a) = (q.trim().to_string(), a.trim().to_string());
            if !q.is_empty() && !a.is_empty() {
                pairs.push((q, a));
            }
        }
        *question = None;
        *answer = None;
    };

    for line in text.lines() {
        let line = strip_numbering(line);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = field_after_tag(line, &["q:", "question:"]) {
            flush(&mut question, &mut answer);
            question = Some(rest.to_string());
        } else if let Some(rest) = field_after_tag(line, &["a:", "answer:"]) {
            if question.is_some() {
                answer = Some(rest.to_string());
            }
        } else if let Some(a) = answer.as_mut() {
            a.push(' ');
            a.push_str(line);
        } else if let Some(q) = question.as_mut() {
            q.push(' ');
            q.push_str(line);
        }
    }
    flush(&mut question, &mut answer);

    if pairs.is_empty() {
        return Err(GenError::Unparseable {
            raw: raw.to_string(),
        });
    }
    Ok(pairs)
}
