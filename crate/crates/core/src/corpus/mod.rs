//! Documents, gold annotations and infobox profiles.
//!
//! The gold format is a 4-column, tab-separated file with one token per line
//! (`<TAB>` stands for a tab character):
//!
//! ```text
//! #doc Alex_Guarnaschelli
//! Alex<TAB>Y<TAB>Y<TAB>Alex_Guarnaschelli
//! cooks
//! ```
//!
//! Column 2 flags person names, column 3 flags person mentions (names and
//! pronouns), column 4 carries the Wikipedia title of the mention, if any. A
//! blank line separates sentences.

mod gold;
mod profile;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use gold::{parse_gold_tsv, write_gold_tsv, GoldError};
pub use profile::{parse_profile_xml, ProfileError};

/// A single token of a page, with byte offsets into the page source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub doc_index: usize,
    pub sentence_index: usize,
    pub char_start: usize,
    pub char_end: usize,
}

impl Token {
    /// True when the first character is an uppercase letter.
    pub fn is_capitalized(&self) -> bool {
        is_capitalized(&self.text)
    }
}

pub(crate) fn is_capitalized(text: &str) -> bool {
    text.chars().next().is_some_and(char::is_uppercase)
}

/// A tokenized page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub page_title: String,
    pub tokens: Vec<Token>,
    pub source_text: String,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of Unicode scalar values in the source text.
    pub fn char_len(&self) -> usize {
        self.source_text.chars().count()
    }

    pub fn sentence_count(&self) -> usize {
        self.tokens.last().map_or(0, |t| t.sentence_index + 1)
    }

    /// Token index ranges, one per sentence, in order.
    pub fn sentences(&self) -> Vec<Range<usize>> {
        let mut out: Vec<Range<usize>> = Vec::new();
        for (i, tok) in self.tokens.iter().enumerate() {
            match out.last_mut() {
                Some(r) if self.tokens[r.start].sentence_index == tok.sentence_index => r.end = i + 1,
                _ => out.push(i..i + 1),
            }
        }
        out
    }

    /// Byte range of the source text covered by tokens `start..end`.
    pub fn byte_range(&self, start: usize, end: usize) -> Range<usize> {
        self.tokens[start].char_start..self.tokens[end - 1].char_end
    }

    /// Checks the offset invariants of tokens against the source text.
    pub fn validate(&self) -> Result<(), String> {
        if self.page_title.is_empty() {
            return Err("empty page title".into());
        }
        let mut prev_end = 0;
        let mut prev_sentence = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            if t.doc_index != i {
                return Err(format!("token {i} has doc_index {}", t.doc_index));
            }
            if t.text.is_empty() || t.text.contains(['\t', '\r', '\n']) {
                return Err(format!("token {i} has illegal text {:?}", t.text));
            }
            if t.char_start >= t.char_end || t.char_start < prev_end {
                return Err(format!("token {i} offsets out of order"));
            }
            if self.source_text.get(t.char_start..t.char_end) != Some(t.text.as_str()) {
                return Err(format!("token {i} does not match source text"));
            }
            if t.sentence_index < prev_sentence {
                return Err(format!("token {i} sentence index decreases"));
            }
            prev_end = t.char_end;
            prev_sentence = t.sentence_index;
        }
        Ok(())
    }
}

/// One line of a gold (or prediction) annotation file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRow {
    pub token: String,
    pub is_name: bool,
    pub is_mention: bool,
    pub link: Option<String>,
}

impl GoldRow {
    pub fn negative(token: impl Into<String>) -> Self {
        GoldRow {
            token: token.into(),
            is_name: false,
            is_mention: false,
            link: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldDocument {
    pub page_title: String,
    pub rows: Vec<GoldRow>,
    /// Row indices that start a new sentence (each preceded by a blank line
    /// in the file). Strictly increasing, never 0.
    #[serde(default)]
    pub sentence_breaks: Vec<usize>,
}

impl GoldDocument {
    pub fn new(page_title: impl Into<String>, rows: Vec<GoldRow>) -> Self {
        GoldDocument {
            page_title: page_title.into(),
            rows,
            sentence_breaks: Vec::new(),
        }
    }

    /// Checks the row-level invariants. Returns the 0-based offending row.
    pub fn validate(&self) -> Result<(), String> {
        if self.page_title.trim().is_empty() || self.page_title.contains(['\t', '\r', '\n']) {
            return Err(format!("illegal page title {:?}", self.page_title));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.token.is_empty() || row.token.contains(['\t', '\r', '\n']) {
                return Err(format!("row {i}: illegal token {:?}", row.token));
            }
            if row.is_name && !row.is_mention {
                return Err(format!("row {i}: name without mention"));
            }
            if let Some(link) = &row.link {
                if link.is_empty() || link.contains(['\t', '\r', '\n']) {
                    return Err(format!("row {i}: illegal link {link:?}"));
                }
                if !row.is_mention {
                    return Err(format!("row {i}: link without mention"));
                }
            }
        }
        let mut prev = 0;
        for &b in &self.sentence_breaks {
            if b <= prev || b >= self.rows.len() {
                return Err(format!("sentence break {b} out of order or range"));
            }
            prev = b;
        }
        Ok(())
    }

    /// Rebuilds a [`Document`] from the gold tokens, joining them with single
    /// spaces. Sentence indices follow `sentence_breaks`.
    pub fn to_document(&self) -> Document {
        let mut source_text = String::new();
        let mut tokens = Vec::with_capacity(self.rows.len());
        let mut sentence_index = 0;
        let mut breaks = self.sentence_breaks.iter().peekable();
        for (i, row) in self.rows.iter().enumerate() {
            if breaks.next_if(|&&b| b == i).is_some() {
                sentence_index += 1;
            }
            if i > 0 {
                source_text.push(' ');
            }
            let char_start = source_text.len();
            source_text.push_str(&row.token);
            tokens.push(Token {
                text: row.token.clone(),
                doc_index: i,
                sentence_index,
                char_start,
                char_end: source_text.len(),
            });
        }
        Document {
            page_title: self.page_title.clone(),
            tokens,
            source_text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    #[default]
    Unknown,
}

impl Gender {
    /// "male"/"female" (any case) map to their variants, everything else to
    /// `Unknown`.
    pub fn from_label(label: &str) -> Self {
        match label.trim().to_lowercase().as_str() {
            "male" => Gender::Male,
            "female" => Gender::Female,
            _ => Gender::Unknown,
        }
    }
}

/// Facts about the page subject taken from the Wikipedia infobox.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonProfile {
    pub wiki_title: String,
    pub first_name: String,
    pub middle_name: Option<String>,
    pub last_name: Option<String>,
    pub gender: Gender,
    pub professions: Vec<String>,
    /// Stage names and full alternative names.
    pub aliases: Vec<String>,
    /// Short forms such as diminutives.
    pub nicknames: Vec<String>,
}

impl PersonProfile {
    pub fn new(wiki_title: impl Into<String>, first_name: impl Into<String>) -> Self {
        PersonProfile {
            wiki_title: wiki_title.into(),
            first_name: first_name.into(),
            middle_name: None,
            last_name: None,
            gender: Gender::Unknown,
            professions: Vec::new(),
            aliases: Vec::new(),
            nicknames: Vec::new(),
        }
    }

    /// Whitespace-separated pieces of first, middle and last name.
    pub fn name_parts(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.first_name.as_str())
            .chain(self.middle_name.as_deref())
            .chain(self.last_name.as_deref())
            .flat_map(str::split_whitespace)
    }
}
