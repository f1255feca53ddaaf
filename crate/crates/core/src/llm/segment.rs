use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::extract::extract_json;
use super::{ChatClient, PipelineConfig, PipelineError};
use crate::sop::{Segment, SopDocument};

/// One segment as proposed by the model: verbatim first and last
/// sentences. A missing `end` extends the segment to the next segment's
/// start, or to the end of the text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSpan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub start: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<String>,
}

/// Asks the model for segment boundaries and cuts the document at them.
///
/// Segments come back ordered, non-overlapping and covering the document
/// up to whitespace between them. Segments longer than the configured
/// threshold are segmented once more.
pub fn segment(doc: &SopDocument, client: &dyn ChatClient, cfg: &PipelineConfig) -> Result<Vec<Segment>, PipelineError> {
    let mut ranges = propose(&doc.text, client, cfg)?;
    if let Some(limit) = cfg.second_pass_chars {
        let mut refined = Vec::with_capacity(ranges.len());
        for (a, b) in ranges {
            if b - a <= limit {
                refined.push((a, b));
                continue;
            }
            let inner = char_slice(&doc.text, a, b);
            refined.extend(propose(inner, client, cfg)?.into_iter().map(|(x, y)| (a + x, a + y)));
        }
        ranges = refined;
    }
    let segments: Vec<Segment> = ranges
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| Segment {
            seg_id: format!("seg{}", i + 1),
            start_offset: a,
            end_offset: b,
            text: char_slice(&doc.text, a, b).to_string(),
        })
        .collect();
    debug_assert!(covers(&doc.text, &segments));
    Ok(segments)
}

fn propose(text: &str, client: &dyn ChatClient, cfg: &PipelineConfig) -> Result<Vec<(usize, usize)>, PipelineError> {
    let prompt = cfg.render("segment", &[("document", text)])?;
    let reply = client.complete(&cfg.request(prompt))?;
    let spans = parse_spans(&reply.text)?;
    locate_segments(text, &spans)
}

fn parse_spans(reply: &str) -> Result<Vec<SegmentSpan>, PipelineError> {
    let schema = |m: String| PipelineError::Schema { findings: vec![m] };
    let value = extract_json(reply).map_err(schema)?;
    let list = match value {
        Value::Object(mut o) => o.remove("segments").unwrap_or(Value::Null),
        other => other,
    };
    let spans: Vec<SegmentSpan> =
        serde_json::from_value(list).map_err(|e| schema(format!("segment list: {e}")))?;
    if spans.is_empty() {
        return Err(schema("segment list is empty".into()));
    }
    Ok(spans)
}

/// Locates each span in `text` in order and returns character ranges.
pub fn locate_segments(text: &str, spans: &[SegmentSpan]) -> Result<Vec<(usize, usize)>, PipelineError> {
    // Byte ranges; an open end is closed by the next start.
    let mut out: Vec<(usize, Option<usize>)> = Vec::with_capacity(spans.len());
    let mut covered = 0;
    for span in spans {
        let (s0, s1) = find_anchor(text, &span.start, covered)?;
        match out.last_mut() {
            Some((_, end @ None)) => *end = Some(s0),
            _ => check_gap(text, covered, s0)?,
        }
        let end = match &span.end {
            Some(anchor) => Some(find_anchor(text, anchor, s0)?.1),
            None => None,
        };
        covered = end.unwrap_or(s1);
        out.push((s0, end));
    }
    if let Some((_, end @ None)) = out.last_mut() {
        *end = Some(text.len());
    } else {
        check_gap(text, covered, text.len())?;
    }
    Ok(out
        .into_iter()
        .map(|(a, b)| {
            let b = b.expect("every end is closed");
            (char_index(text, a), char_index(text, b))
        })
        .collect())
}

fn check_gap(text: &str, from: usize, to: usize) -> Result<(), PipelineError> {
    match text[from..to].char_indices().find(|(_, c)| !c.is_whitespace()) {
        Some((i, _)) => Err(PipelineError::CoverageGap {
            offset: char_index(text, from + i),
        }),
        None => Ok(()),
    }
}

/// Byte range of `anchor` in `text` at or after byte `from`: exact match
/// first, then a match with whitespace runs collapsed on both sides.
fn find_anchor(text: &str, anchor: &str, from: usize) -> Result<(usize, usize), PipelineError> {
    let needle = anchor.trim();
    let not_found = || PipelineError::AnchorNotFound {
        anchor: anchor.to_string(),
    };
    if needle.is_empty() {
        return Err(not_found());
    }
    if let Some(i) = text[from..].find(needle) {
        return Ok((from + i, from + i + needle.len()));
    }
    let (hay, map) = collapse_whitespace(&text[from..]);
    let (needle, _) = collapse_whitespace(needle);
    let i = hay.find(&needle).ok_or_else(not_found)?;
    let last = i + needle.len() - 1;
    let last_orig = from + map[last];
    let last_len = text[last_orig..].chars().next().map_or(1, char::len_utf8);
    Ok((from + map[i], last_orig + last_len))
}

/// Collapses whitespace runs to one space; `map[j]` is the byte offset in
/// `s` of the character that produced byte `j` of the result.
fn collapse_whitespace(s: &str) -> (String, Vec<usize>) {
    let mut out = String::with_capacity(s.len());
    let mut map = Vec::with_capacity(s.len());
    let mut in_space = false;
    for (i, c) in s.char_indices() {
        if c.is_whitespace() {
            if !in_space {
                out.push(' ');
                map.push(i);
            }
            in_space = true;
            continue;
        }
        in_space = false;
        out.push(c);
        map.extend(std::iter::repeat_n(i, c.len_utf8()));
    }
    (out, map)
}

fn char_index(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

fn char_slice(text: &str, a: usize, b: usize) -> &str {
    let byte = |n: usize| text.char_indices().nth(n).map_or(text.len(), |(i, _)| i);
    &text[byte(a)..byte(b)]
}

/// Ordered, non-overlapping, and only whitespace left uncovered.
pub(crate) fn covers(text: &str, segments: &[Segment]) -> bool {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    for s in segments {
        if s.start_offset < pos || s.end_offset < s.start_offset || s.end_offset > chars.len() {
            return false;
        }
        if chars[pos..s.start_offset].iter().any(|c| !c.is_whitespace()) {
            return false;
        }
        pos = s.end_offset;
    }
    chars[pos..].iter().all(|c| c.is_whitespace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::MockClient;

    const RECIPE: &str = "Mix together both cans of corn, crackers, egg, 2 teaspoons of melted butter and pepper.  Place in a buttered baking dish. Dot with remaining butter. Bake at 350°F for 1 hour.";

    fn span(start: &str, end: Option<&str>) -> SegmentSpan {
        SegmentSpan {
            title: None,
            start: start.into(),
            end: end.map(str::to_string),
        }
    }

    fn doc() -> SopDocument {
        SopDocument::new("corn", RECIPE).unwrap()
    }

    #[test]
    fn single_segment_is_whole_text() {
        let client = MockClient::answers([r#"{"segments": [{"start": "Mix together both cans of corn", "end": "for 1 hour."}]}"#]);
        let segs = segment(&doc(), &client, &PipelineConfig::default()).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].text, RECIPE);
        assert_eq!(segs[0].end_offset, RECIPE.chars().count());
    }

    #[test]
    fn two_anchors_split_contiguously() {
        let client = MockClient::answers([
            r#"{"segments": [{"start": "Mix together"}, {"start": "Place in a buttered baking dish."}]}"#,
        ]);
        let segs = segment(&doc(), &client, &PipelineConfig::default()).unwrap();
        let split = RECIPE.find("Place in a buttered").unwrap();
        let split = RECIPE[..split].chars().count();
        assert_eq!((segs[0].start_offset, segs[0].end_offset), (0, split));
        assert_eq!(segs[1].start_offset, split);
        assert!(segs[1].text.starts_with("Place in a buttered baking dish."));
        assert!(covers(RECIPE, &segs));
    }

    #[test]
    fn missing_anchor() {
        let client = MockClient::answers([r#"{"segments": [{"start": "Preheat the oven."}]}"#]);
        let err = segment(&doc(), &client, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, PipelineError::AnchorNotFound { anchor } if anchor == "Preheat the oven."));
    }

    #[test]
    fn whitespace_tolerant_match() {
        let spans = [span("pepper.\n Place   in a buttered", None)];
        let r = locate_segments("x pepper.  Place in a buttered dish", &spans);
        assert!(matches!(r, Err(PipelineError::CoverageGap { offset: 0 })));
        let r = locate_segments("pepper.  Place in a buttered dish", &spans).unwrap();
        assert_eq!(r, [(0, 33)]);
    }

    #[test]
    fn gap_between_segments() {
        let spans = [span("Mix", Some("pepper.")), span("Dot with", None)];
        let err = locate_segments(RECIPE, &spans).unwrap_err();
        let at = RECIPE.find("Place").unwrap();
        assert!(matches!(err, PipelineError::CoverageGap { offset } if offset == RECIPE[..at].chars().count()));
    }

    #[test]
    fn second_pass_splits_long_segments() {
        let client = MockClient::answers([
            r#"{"segments": [{"start": "Mix"}]}"#,
            r#"{"segments": [{"start": "Mix"}, {"start": "Dot with"}]}"#,
        ]);
        let cfg = PipelineConfig {
            second_pass_chars: Some(40),
            ..PipelineConfig::default()
        };
        let segs = segment(&doc(), &client, &cfg).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[1].seg_id, "seg2");
        assert!(segs[1].text.starts_with("Dot with"));
        assert!(covers(RECIPE, &segs));
    }

    #[test]
    fn char_offsets_past_multibyte() {
        let text = "Heat to 350°F. Then serve.";
        let r = locate_segments(text, &[span("Heat", None), span("Then", None)]).unwrap();
        assert_eq!(r[1].0, text.chars().position(|c| c == 'T').unwrap());
    }
}
