//! Pronoun mentions: base coreference chains filtered to pronouns, plus the
//! gender sieve that claims remaining pronouns for the page subject.

use std::collections::HashSet;

use thiserror::Error;

use crate::corpus::{Document, Gender, PersonProfile};
use crate::mentions::{MentionKind, MentionSource, MentionSpan, StandoffAnnotations};

const DEFAULT_LEXICON: &str = include_str!("../data/pronouns.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("line {0}: expected `set:word`")]
    Malformed(usize),
    #[error("line {line}: unknown pronoun set {set:?}")]
    UnknownSet { line: usize, set: String },
    #[error("pronoun {0:?} appears in more than one set")]
    Overlap(String),
}

/// Pronoun sets. A word written with an uppercase letter ("I") matches only
/// that exact spelling; all other words match case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronounLexicon {
    pub male: HashSet<String>,
    pub female: HashSet<String>,
    pub first_person: HashSet<String>,
    pub excluded_plural: HashSet<String>,
}

impl Default for PronounLexicon {
    fn default() -> Self {
        PronounLexicon::from_text(DEFAULT_LEXICON).expect("shipped pronoun lexicon is valid")
    }
}

fn matches_set(set: &HashSet<String>, token: &str) -> bool {
    let lower = token.to_lowercase();
    set.iter().any(|w| {
        if w.chars().any(char::is_uppercase) {
            w == token
        } else {
            *w == lower
        }
    })
}

impl PronounLexicon {
    /// Parses `set:word` lines; `#` starts a comment line.
    pub fn from_text(text: &str) -> Result<Self, LexiconError> {
        let mut lex = PronounLexicon {
            male: HashSet::new(),
            female: HashSet::new(),
            first_person: HashSet::new(),
            excluded_plural: HashSet::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (set, word) = line
                .split_once(':')
                .map(|(s, w)| (s.trim(), w.trim()))
                .filter(|(_, w)| !w.is_empty())
                .ok_or(LexiconError::Malformed(i + 1))?;
            let target = match set {
                "male" => &mut lex.male,
                "female" => &mut lex.female,
                "first_person" => &mut lex.first_person,
                "excluded_plural" => &mut lex.excluded_plural,
                other => {
                    return Err(LexiconError::UnknownSet {
                        line: i + 1,
                        set: other.to_string(),
                    })
                }
            };
            target.insert(word.to_string());
        }
        let sets = [&lex.male, &lex.female, &lex.first_person, &lex.excluded_plural];
        let mut seen = HashSet::new();
        for set in sets {
            for w in set {
                if !seen.insert(w.to_lowercase()) {
                    return Err(LexiconError::Overlap(w.clone()));
                }
            }
        }
        Ok(lex)
    }

    pub fn is_plural(&self, token: &str) -> bool {
        matches_set(&self.excluded_plural, token)
    }

    /// True when the sieve may claim `token` for a subject of this gender.
    pub fn claims(&self, gender: Gender, token: &str) -> bool {
        if self.is_plural(token) {
            return false;
        }
        let gendered = match gender {
            Gender::Male => matches_set(&self.male, token),
            Gender::Female => matches_set(&self.female, token),
            Gender::Unknown => false,
        };
        gendered || matches_set(&self.first_person, token)
    }
}

/// Keeps the single-token pronoun members of every coreference chain. Each
/// resulting span records its chain representative as `antecedent`.
pub fn filter_pronoun_chains(doc: &Document, annotations: &StandoffAnnotations) -> Vec<MentionSpan> {
    let mut out = Vec::new();
    for chain in &annotations.coref {
        let Some(rep) = chain.iter().find(|m| m.representative) else {
            continue;
        };
        for m in chain
            .iter()
            .filter(|m| m.is_pronoun && m.end == m.start + 1 && m.end <= doc.len())
        {
            let mut span = MentionSpan::pronoun(m.start, MentionSource::BaseCoref);
            if (rep.start, rep.end) != (m.start, m.end) {
                span.antecedent = Some((rep.start, rep.end));
            }
            if !out.iter().any(|s: &MentionSpan| s.start == span.start) {
                out.push(span);
            }
        }
    }
    out.sort_by_key(|s| s.start);
    out
}

/// Decides who each chain pronoun refers to. A pronoun whose representative
/// overlaps a NAME mention of someone other than the subject keeps the
/// representative as its antecedent; every other pronoun is attributed to
/// the subject. Plural pronouns are dropped.
pub fn attribute_chain_pronouns(
    doc: &Document,
    pronouns: &[MentionSpan],
    names: &[MentionSpan],
    profile: &PersonProfile,
    lexicon: &PronounLexicon,
) -> Vec<MentionSpan> {
    pronouns
        .iter()
        .filter(|p| !lexicon.is_plural(&doc.tokens[p.start].text))
        .map(|p| {
            let rep_name = p
                .antecedent
                .and_then(|(s, e)| names.iter().find(|n| n.kind == MentionKind::Name && n.overlaps(s, e)));
            let mut p = p.clone();
            match rep_name {
                Some(n) if n.subject_hint.as_deref() != Some(profile.wiki_title.as_str()) => {
                    p.subject_hint = None;
                }
                _ => {
                    p.subject_hint = Some(profile.wiki_title.clone());
                }
            }
            p
        })
        .collect()
}

pub fn gender_sieve(
    doc: &Document,
    profile: &PersonProfile,
    existing: &[MentionSpan],
    lexicon: &PronounLexicon,
) -> Vec<MentionSpan> {
    doc.tokens
        .iter()
        .filter(|t| !existing.iter().any(|s| s.overlaps(t.doc_index, t.doc_index + 1)))
        .filter(|t| lexicon.claims(profile.gender, &t.text))
        .map(|t| MentionSpan::pronoun(t.doc_index, MentionSource::GenderSieve).with_hint(&profile.wiki_title))
        .collect()
}
