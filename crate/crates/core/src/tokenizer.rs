//! Deterministic word/punctuation tokenizer with sentence segmentation.
//!
//! Rules, applied over extended grapheme clusters:
//! - a maximal run of letters and digits is one token; an apostrophe or
//!   hyphen joins two such runs (`O'Brien`, `Jean-Paul`);
//! - every other non-whitespace grapheme is a token of its own;
//! - a run from the abbreviation list directly followed by `.` keeps the
//!   period (`Dr.`) and never ends a sentence;
//! - `.`, `!` and `?` end a sentence. Consecutive terminators and closing
//!   brackets or quotes right after them stay in the ending sentence.

use std::collections::HashSet;

use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::{Document, Token};

pub const DEFAULT_ABBREVIATIONS: &[&str] = &["Dr", "Mr", "Mrs", "Ms", "St", "Jr", "Sr"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Word,
    Joiner,
    Space,
    Other,
}

fn classify(g: &str) -> Class {
    let c = g.chars().next().unwrap_or(' ');
    if c.is_alphanumeric() {
        Class::Word
    } else if c.is_whitespace() {
        Class::Space
    } else if matches!(c, '\'' | '’' | '-' | '‐') {
        Class::Joiner
    } else {
        Class::Other
    }
}

fn is_terminator(text: &str) -> bool {
    matches!(text, "." | "!" | "?")
}

fn is_closer(text: &str) -> bool {
    matches!(text, ")" | "]" | "”" | "’" | "»")
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    abbreviations: HashSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl Tokenizer {
    /// Abbreviations are given without their trailing period.
    pub fn with_abbreviations<'a>(abbrevs: impl IntoIterator<Item = &'a str>) -> Self {
        Tokenizer {
            abbreviations: abbrevs
                .into_iter()
                .map(|a| a.trim_end_matches('.').to_string())
                .collect(),
        }
    }

    /// Splits `text` into token byte ranges, without sentence information.
    fn split(&self, text: &str) -> Vec<(usize, usize)> {
        let graphemes: Vec<(usize, &str, Class)> =
            text.grapheme_indices(true).map(|(i, g)| (i, g, classify(g))).collect();
        let end_of = |k: usize| graphemes.get(k).map_or(text.len(), |g| g.0);

        let mut out = Vec::new();
        let mut i = 0;
        while i < graphemes.len() {
            let (start, g, class) = graphemes[i];
            match class {
                Class::Space => i += 1,
                Class::Word => {
                    let mut j = i + 1;
                    while j < graphemes.len() {
                        match graphemes[j].2 {
                            Class::Word => j += 1,
                            Class::Joiner if graphemes.get(j + 1).is_some_and(|n| n.2 == Class::Word) => j += 2,
                            _ => break,
                        }
                    }
                    let word = &text[start..end_of(j)];
                    if self.abbreviations.contains(word) && graphemes.get(j).is_some_and(|n| n.1 == ".") {
                        j += 1;
                    }
                    out.push((start, end_of(j)));
                    i = j;
                }
                Class::Joiner | Class::Other => {
                    out.push((start, start + g.len()));
                    i += 1;
                }
            }
        }
        out
    }

    pub fn tokenize(&self, page_title: &str, text: &str) -> Document {
        let mut tokens = Vec::new();
        let mut sentence_index = 0;
        let mut pending = false;
        for (doc_index, (char_start, char_end)) in self.split(text).into_iter().enumerate() {
            let tok = &text[char_start..char_end];
            if pending && !is_terminator(tok) && !is_closer(tok) {
                sentence_index += 1;
                pending = false;
            }
            if is_terminator(tok) {
                pending = true;
            }
            tokens.push(Token {
                text: tok.to_string(),
                doc_index,
                sentence_index,
                char_start,
                char_end,
            });
        }
        Document {
            page_title: page_title.to_string(),
            tokens,
            source_text: text.to_string(),
        }
    }

    pub fn tokenize_bytes(&self, page_title: &str, bytes: &[u8]) -> Result<Document, TokenizeError> {
        let text = std::str::from_utf8(bytes).map_err(|_| TokenizeError::NotUtf8)?;
        Ok(self.tokenize(page_title, text))
    }

    /// Token texts only; used to match multi-token names against documents.
    pub fn words(&self, text: &str) -> Vec<String> {
        self.split(text)
            .into_iter()
            .map(|(s, e)| text[s..e].to_string())
            .collect()
    }
}

/// Tokenizes with the default abbreviation list.
pub fn tokenize(page_title: &str, text: &str) -> Document {
    Tokenizer::default().tokenize(page_title, text)
}
