//! Linking mentions to Wikipedia titles.
//!
//! Two backends sit behind small client traits: a search client that returns
//! ranked page titles for a query, and a TagMe-style annotator that returns
//! linked spots for a text. Each has a fixture-backed offline implementation
//! and an HTTP implementation with rate limiting, retries and a persistent
//! response cache.

mod cache;
mod fixture;
mod online;

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coref::filter_pronoun_chains;
use crate::corpus::{Document, PersonProfile};
use crate::mentions::{MentionKind, MentionSource, MentionSpan, StandoffAnnotations};

pub use cache::{CacheError, CacheStats, ResponseCache};
pub use fixture::{FixtureSearchClient, FixtureTagmeClient, Fixtures};
pub use online::{
    CachedSearchClient, CachedTagmeClient, HttpSettings, RateLimiter, RetryPolicy, TagmeHttpClient,
    WikiSearchHttpClient,
};

/// Default document length (in characters) up to which TagMe receives the
/// whole page in a single request.
pub const DEFAULT_LENGTH_LIMIT: usize = 5000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinkError {
    #[error("linking service unavailable: {0}")]
    ClientUnavailable(String),
    #[error("invalid fixture: {0}")]
    Fixture(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkerId {
    Wikisearch,
    Tagme,
    SieveInherit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedMention {
    pub span: MentionSpan,
    pub title: String,
    pub linker_id: LinkerId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Ranked Wikipedia search.
pub trait SearchClient: Send + Sync {
    /// Page titles for `query`, best first. May be empty.
    fn search(&self, query: &str) -> Result<Vec<String>, LinkError>;
}

/// A spot returned by the TagMe annotator. Offsets count Unicode scalar
/// values of the request text, end exclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagmeAnnotation {
    pub start: usize,
    pub end: usize,
    pub title: String,
    pub rho: f64,
    pub is_person: bool,
}

pub trait TagmeClient: Send + Sync {
    fn tag(&self, text: &str) -> Result<Vec<TagmeAnnotation>, LinkError>;
}

impl<T: SearchClient + ?Sized> SearchClient for &T {
    fn search(&self, query: &str) -> Result<Vec<String>, LinkError> {
        (**self).search(query)
    }
}

impl<T: TagmeClient + ?Sized> TagmeClient for &T {
    fn tag(&self, text: &str) -> Result<Vec<TagmeAnnotation>, LinkError> {
        (**self).tag(text)
    }
}

impl<T: SearchClient + ?Sized> SearchClient for Box<T> {
    fn search(&self, query: &str) -> Result<Vec<String>, LinkError> {
        (**self).search(query)
    }
}

impl<T: TagmeClient + ?Sized> TagmeClient for Box<T> {
    fn tag(&self, text: &str) -> Result<Vec<TagmeAnnotation>, LinkError> {
        (**self).tag(text)
    }
}

/// Token texts of the span joined by single spaces.
pub fn mention_query(doc: &Document, span: &MentionSpan) -> String {
    doc.tokens[span.start..span.end]
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Links each NAME mention to the top search hit for its query. Mentions
/// whose query has no hit are left unlinked. Identical queries reach the
/// client once.
pub fn link_wikisearch(
    doc: &Document,
    mentions: &[MentionSpan],
    client: &dyn SearchClient,
) -> Result<Vec<LinkedMention>, LinkError> {
    let mut seen: HashMap<String, Option<String>> = HashMap::new();
    let mut out = Vec::new();
    for span in mentions.iter().filter(|s| s.kind == MentionKind::Name) {
        let query = mention_query(doc, span);
        let top = match seen.get(&query) {
            Some(hit) => hit.clone(),
            None => {
                let hit = client.search(&query)?.into_iter().next();
                seen.insert(query, hit.clone());
                hit
            }
        };
        if let Some(title) = top {
            out.push(LinkedMention {
                span: span.clone(),
                title,
                linker_id: LinkerId::Wikisearch,
                score: None,
            });
        }
    }
    Ok(out)
}

/// Which parts of a document go to TagMe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chunking {
    /// Sentences containing at least one mention.
    MentionSentences,
    AllSentences,
}

/// A TagMe spot mapped back to byte offsets of the document source text.
struct PlacedAnnotation {
    bytes: Range<usize>,
    ann: TagmeAnnotation,
}

fn char_to_byte(text: &str, char_offset: usize) -> Option<usize> {
    text.char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .nth(char_offset)
}

fn tagme_requests(
    doc: &Document,
    mentions: &[MentionSpan],
    length_limit: usize,
    chunking: Chunking,
) -> Vec<Range<usize>> {
    if doc.is_empty() {
        return Vec::new();
    }
    if doc.char_len() <= length_limit {
        #[allow(clippy::single_range_in_vec_init)]
        return vec![0..doc.source_text.len()];
    }
    doc.sentences()
        .into_iter()
        .filter(|r| chunking == Chunking::AllSentences || mentions.iter().any(|m| m.overlaps(r.start, r.end)))
        .map(|r| doc.byte_range(r.start, r.end))
        .collect()
}

fn run_tagme(
    doc: &Document,
    requests: Vec<Range<usize>>,
    client: &dyn TagmeClient,
) -> Result<Vec<PlacedAnnotation>, LinkError> {
    let mut out = Vec::new();
    for range in requests {
        let text = &doc.source_text[range.clone()];
        for ann in client.tag(text)? {
            let (Some(s), Some(e)) = (char_to_byte(text, ann.start), char_to_byte(text, ann.end)) else {
                log::warn!("TagMe spot {}..{} lies outside its request text", ann.start, ann.end);
                continue;
            };
            if s < e {
                out.push(PlacedAnnotation {
                    bytes: range.start + s..range.start + e,
                    ann,
                });
            }
        }
    }
    Ok(out)
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

/// Links NAME mentions through TagMe. Short documents go out whole; longer
/// ones one sentence at a time, only for sentences holding a mention. Per
/// mention, the overlapping person spot with the highest rho wins.
pub fn link_tagme(
    doc: &Document,
    mentions: &[MentionSpan],
    client: &dyn TagmeClient,
    length_limit: usize,
) -> Result<Vec<LinkedMention>, LinkError> {
    let names: Vec<&MentionSpan> = mentions.iter().filter(|s| s.kind == MentionKind::Name).collect();
    let owned: Vec<MentionSpan> = names.iter().map(|s| (*s).clone()).collect();
    let requests = tagme_requests(doc, &owned, length_limit.max(1), Chunking::MentionSentences);
    let placed = run_tagme(doc, requests, client)?;

    let mut out = Vec::new();
    for span in names {
        let bytes = doc.byte_range(span.start, span.end);
        let mut best: Option<&PlacedAnnotation> = None;
        for p in placed.iter().filter(|p| p.ann.is_person && overlaps(&p.bytes, &bytes)) {
            if best.is_none_or(|b| p.ann.rho > b.ann.rho) {
                best = Some(p);
            }
        }
        if let Some(p) = best {
            out.push(LinkedMention {
                span: span.clone(),
                title: p.ann.title.clone(),
                linker_id: LinkerId::Tagme,
                score: Some(p.ann.rho),
            });
        }
    }
    Ok(out)
}

/// Links pronouns: subject-attributed pronouns take the profile title, chain
/// pronouns take the title linked at their representative.
pub fn propagate_pronoun_links(
    pronouns: &[MentionSpan],
    named_links: &[LinkedMention],
    profile: &PersonProfile,
) -> Vec<LinkedMention> {
    pronouns
        .iter()
        .filter(|p| p.kind == MentionKind::Pronoun)
        .filter_map(|p| {
            let title = if p.subject_hint.as_deref() == Some(profile.wiki_title.as_str()) {
                Some(profile.wiki_title.clone())
            } else {
                inherited_title(p, named_links)
            }?;
            Some(LinkedMention {
                span: p.clone(),
                title,
                linker_id: LinkerId::SieveInherit,
                score: None,
            })
        })
        .collect()
}

fn inherited_title(pronoun: &MentionSpan, named_links: &[LinkedMention]) -> Option<String> {
    let (s, e) = pronoun.antecedent?;
    named_links
        .iter()
        .find(|l| l.span.overlaps(s, e))
        .map(|l| l.title.clone())
}

/// The baseline model: TagMe over the page (all sentences when chunking),
/// spots kept when they are persons or overlap a base NER person, and base
/// coreference pronouns inheriting their representative's link.
pub fn baseline_pipeline(
    doc: &Document,
    annotations: &StandoffAnnotations,
    tagme: &dyn TagmeClient,
    length_limit: usize,
) -> Result<Vec<LinkedMention>, LinkError> {
    let requests = tagme_requests(doc, &[], length_limit.max(1), Chunking::AllSentences);
    let placed = run_tagme(doc, requests, tagme)?;

    let mut candidates: Vec<LinkedMention> = Vec::new();
    for p in placed {
        let covered: Vec<usize> = doc
            .tokens
            .iter()
            .filter(|t| overlaps(&(t.char_start..t.char_end), &p.bytes))
            .map(|t| t.doc_index)
            .collect();
        let (Some(&start), Some(&last)) = (covered.first(), covered.last()) else {
            continue;
        };
        let end = last + 1;
        let near_person = annotations.person_spans().any(|n| n.start < end && start < n.end);
        if p.ann.is_person || near_person {
            candidates.push(LinkedMention {
                span: MentionSpan::name(start, end, MentionSource::BaseNer),
                title: p.ann.title,
                linker_id: LinkerId::Tagme,
                score: Some(p.ann.rho),
            });
        }
    }

    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.span.start.cmp(&b.span.start))
    });
    let mut named: Vec<LinkedMention> = Vec::new();
    for c in candidates {
        if !named.iter().any(|n| n.span.overlaps(c.span.start, c.span.end)) {
            named.push(c);
        }
    }
    named.sort_by_key(|l| l.span.start);

    let pronouns: Vec<MentionSpan> = filter_pronoun_chains(doc, annotations)
        .into_iter()
        .filter(|p| !named.iter().any(|n| n.span.overlaps(p.start, p.end)))
        .collect();
    let mut out: Vec<LinkedMention> = pronouns
        .iter()
        .filter_map(|p| {
            inherited_title(p, &named).map(|title| LinkedMention {
                span: p.clone(),
                title,
                linker_id: LinkerId::SieveInherit,
                score: None,
            })
        })
        .collect();
    out.extend(named);
    out.sort_by_key(|l| l.span.start);
    Ok(out)
}
