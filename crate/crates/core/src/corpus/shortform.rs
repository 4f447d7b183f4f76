//! Abbreviation detection and expansion.
//!
//! A definition is a parenthesized all-letter token that directly follows a
//! phrase of as many words as the token has letters, where the words'
//! initials spell the token (case-insensitively): `congestive heart failure
//! (CHF)`. The `(CHF)` marker is removed and every later standalone `CHF` in
//! the same text is replaced by the long form.

use std::collections::HashMap;

/// Longest short form considered; longer parenthesized tokens are ordinary text.
const MAX_SHORT_FORM: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Definition {
    /// Byte offset where the removed span starts (whitespace before `(`).
    start: usize,
    /// Byte offset just past the closing `)`.
    end: usize,
    short: String,
    long: String,
}

/// Replace detected short forms by their long forms.
pub fn expand_short_forms(text: &str) -> String {
    let defs = find_definitions(text);
    if defs.is_empty() {
        return text.to_string();
    }

    let mut out = String::with_capacity(text.len() + 64);
    let mut active: HashMap<&str, &str> = HashMap::new();
    let mut next_def = 0;
    let mut pos = 0;
    let bytes_len = text.len();

    while pos < bytes_len {
        if next_def < defs.len() && pos == defs[next_def].start {
            let def = &defs[next_def];
            active.insert(def.short.as_str(), def.long.as_str());
            pos = def.end;
            next_def += 1;
            continue;
        }
        let ch = text[pos..].chars().next().expect("pos is a char boundary");
        if ch.is_alphanumeric() {
            // Read the whole word, stopping early at a definition boundary.
            let limit = defs.get(next_def).map_or(bytes_len, |d| d.start);
            let mut end = pos;
            for (off, c) in text[pos..].char_indices() {
                if pos + off >= limit || !c.is_alphanumeric() {
                    break;
                }
                end = pos + off + c.len_utf8();
            }
            let word = &text[pos..end];
            match active.get(word) {
                Some(long) => out.push_str(long),
                None => out.push_str(word),
            }
            pos = end;
        } else {
            out.push(ch);
            pos += ch.len_utf8();
        }
    }
    out
}

pub(crate) fn find_definitions(text: &str) -> Vec<Definition> {
    let mut defs = Vec::new();
    let mut search_from = 0;
    while let Some(rel) = text[search_from..].find('(') {
        let open = search_from + rel;
        search_from = open + 1;
        let Some(close_rel) = text[open + 1..].find(')') else {
            break;
        };
        let close = open + 1 + close_rel;
        let short = &text[open + 1..close];
        if !is_short_form_candidate(short) {
            continue;
        }
        // The opening paren must not be glued to a preceding word.
        if let Some(prev) = text[..open].chars().next_back() {
            if prev.is_alphanumeric() {
                continue;
            }
        }
        let Some((phrase_start, phrase_end)) = match_phrase(&text[..open], short) else {
            continue;
        };
        defs.push(Definition {
            start: phrase_end,
            end: close + 1,
            short: short.to_string(),
            long: text[phrase_start..phrase_end].to_string(),
        });
        search_from = close + 1;
    }
    defs
}

fn is_short_form_candidate(token: &str) -> bool {
    let n = token.chars().count();
    (2..=MAX_SHORT_FORM).contains(&n)
        && token.chars().all(|c| c.is_ascii_alphabetic())
        && token.chars().any(|c| c.is_ascii_uppercase())
}

/// Walk backwards over `prefix` collecting one word per letter of `short`.
/// Returns the byte span of the phrase when the initials match.
fn match_phrase(prefix: &str, short: &str) -> Option<(usize, usize)> {
    let wanted: Vec<char> = short.chars().map(|c| c.to_ascii_lowercase()).collect();
    let chars: Vec<(usize, char)> = prefix.char_indices().collect();
    let mut idx = chars.len();

    // Only whitespace may separate the phrase from the paren.
    while idx > 0 && chars[idx - 1].1.is_whitespace() {
        idx -= 1;
    }
    if idx == 0 {
        return None;
    }
    let phrase_end = chars.get(idx).map_or(prefix.len(), |&(b, _)| b);

    let mut phrase_start = phrase_end;
    for (k, want) in wanted.iter().rev().enumerate() {
        if k > 0 {
            // Separators between words of the phrase.
            let sep_end = idx;
            while idx > 0 && matches!(chars[idx - 1].1, ' ' | '\t' | '-' | '/') {
                idx -= 1;
            }
            if idx == sep_end || idx == 0 {
                return None;
            }
        }
        let word_end = idx;
        while idx > 0 && chars[idx - 1].1.is_alphanumeric() {
            idx -= 1;
        }
        if idx == word_end {
            return None;
        }
        let initial = chars[idx].1.to_lowercase().next()?;
        if initial != *want {
            return None;
        }
        phrase_start = chars[idx].0;
    }
    // The phrase must start at a word boundary.
    if idx > 0 && chars[idx - 1].1.is_alphanumeric() {
        return None;
    }
    Some((phrase_start, phrase_end))
}
