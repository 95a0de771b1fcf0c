//! Tag patterns: regular expressions over whole part-of-speech tags.
//!
//! A pattern such as `<DT>?<JJ.*>*<NN.*>+` is written in angle-bracket
//! units. Each unit matches exactly one tag, and regex operators may appear
//! both between units and inside them (`<NN|DT>`). Inside a unit `.` matches
//! any character except `{`, `}`, `<` and `>`, so `<NN.*>` can never run
//! past the end of a tag. Whitespace in a pattern is ignored.

use std::fmt;

use regex::Regex;

use super::ChunkError;

#[derive(Clone)]
pub struct TagPattern {
    source: String,
    regex: Regex,
}

impl fmt::Debug for TagPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("TagPattern").field(&self.source).finish()
    }
}

impl PartialEq for TagPattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

const TAG_CHAR: &str = "[^{}<>]";

fn syntax(pattern: &str, message: impl Into<String>) -> ChunkError {
    ChunkError::PatternSyntax { pattern: pattern.to_owned(), message: message.into() }
}

/// Translates a tag pattern into an ordinary regular expression over the
/// `<TAG><TAG>...` encoding.
pub fn tag_pattern_to_regex(pattern: &str) -> Result<String, ChunkError> {
    let compact: String = pattern.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(syntax(pattern, "empty pattern"));
    }
    let mut out = String::with_capacity(compact.len() * 2);
    let mut chars = compact.chars();
    let mut in_unit = false;
    let mut unit_len = 0;
    let mut in_class = false;
    while let Some(c) = chars.next() {
        if !in_unit {
            match c {
                '<' => {
                    in_unit = true;
                    unit_len = 0;
                    out.push_str("(?:<(?:");
                }
                '(' => out.push_str("(?:"),
                ')' | '|' | '*' | '+' | '?' => out.push(c),
                _ => return Err(syntax(pattern, format!("unexpected '{c}' outside <...>"))),
            }
            continue;
        }
        unit_len += 1;
        match c {
            '\\' => {
                let escaped = chars.next().ok_or_else(|| syntax(pattern, "dangling '\\'"))?;
                if matches!(escaped, '<' | '>' | '{' | '}') {
                    return Err(syntax(pattern, format!("'{escaped}' cannot appear in a tag")));
                }
                out.push_str(&regex::escape(&escaped.to_string()));
            }
            '{' | '}' | '<' => return Err(syntax(pattern, format!("'{c}' inside <...>"))),
            '[' if !in_class => {
                in_class = true;
                out.push(c);
            }
            ']' if in_class => {
                in_class = false;
                out.push(c);
            }
            '.' if !in_class => out.push_str(TAG_CHAR),
            '>' if !in_class => {
                if unit_len == 1 {
                    return Err(syntax(pattern, "empty <>"));
                }
                in_unit = false;
                out.push_str(")>)");
            }
            _ => out.push(c),
        }
    }
    if in_unit {
        return Err(syntax(pattern, "unbalanced '<'"));
    }
    Ok(out)
}

impl TagPattern {
    pub fn compile(source: &str) -> Result<Self, ChunkError> {
        let body = tag_pattern_to_regex(source)?;
        let anchored = format!("^(?:{body})$");
        let regex = Regex::new(&anchored).map_err(|e| syntax(source, e.to_string()))?;
        Ok(TagPattern { source: source.to_owned(), regex })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Whether the pattern matches the whole of an encoded tag sequence.
    pub fn is_match_encoded(&self, encoded: &str) -> bool {
        self.regex.is_match(encoded)
    }

    pub fn matches_tags<S: AsRef<str>>(&self, tags: &[S]) -> bool {
        self.is_match_encoded(&encode_tags(tags))
    }
}

pub fn encode_tags<S: AsRef<str>>(tags: &[S]) -> String {
    tags.iter().map(|t| format!("<{}>", t.as_ref())).collect()
}

/// A tag sequence pre-encoded so that any contiguous range can be matched
/// without re-allocating.
pub(crate) struct EncodedTags {
    text: String,
    offsets: Vec<usize>,
}

impl EncodedTags {
    pub(crate) fn new<S: AsRef<str>>(tags: &[S]) -> Self {
        let mut text = String::new();
        let mut offsets = vec![0];
        for t in tags {
            text.push('<');
            text.push_str(t.as_ref());
            text.push('>');
            offsets.push(text.len());
        }
        EncodedTags { text, offsets }
    }

    pub(crate) fn matches(&self, pattern: &TagPattern, start: usize, end: usize) -> bool {
        pattern.is_match_encoded(&self.text[self.offsets[start]..self.offsets[end]])
    }

    /// The longest non-empty match starting at `start` and ending at or before `limit`.
    pub(crate) fn longest_from(&self, pattern: &TagPattern, start: usize, limit: usize) -> Option<usize> {
        (start + 1..=limit).rev().find(|&end| self.matches(pattern, start, end))
    }

    /// Leftmost-longest non-overlapping matches inside `start..end`.
    pub(crate) fn find_all(&self, pattern: &TagPattern, start: usize, end: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut pos = start;
        while pos < end {
            match self.longest_from(pattern, pos, end) {
                Some(stop) => {
                    out.push((pos, stop));
                    pos = stop;
                }
                None => pos += 1,
            }
        }
        out
    }
}
