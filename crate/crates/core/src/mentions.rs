//! Person-name mention detection: a base annotator (external standoff or the
//! built-in heuristic) combined with profile-driven rules.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{is_capitalized, Document, PersonProfile};
use crate::tokenizer::Tokenizer;

/// Upper bound on rule passes when widening spans to a fixed point.
pub const MAX_FIXED_POINT_PASSES: usize = 8;

const DEFAULT_TITLES: &str = include_str!("../data/titles.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MentionError {
    #[error("malformed standoff annotations: {0}")]
    MalformedStandoff(String),
    #[error("span [{start},{end}) out of range for a document of {len} tokens")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("span widening did not reach a fixed point within {0} passes")]
    FixedPointNotReached(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MentionKind {
    Name,
    Pronoun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MentionSource {
    BaseNer,
    BaseCoref,
    RuleNamePart,
    RuleTitle,
    RuleNameOfPlace,
    RuleAlias,
    GenderSieve,
}

impl MentionSource {
    /// Tie-break rank used by [`merge_spans`]; higher wins.
    pub fn priority(self) -> u8 {
        match self {
            MentionSource::RuleNameOfPlace => 7,
            MentionSource::RuleTitle => 6,
            MentionSource::RuleAlias => 5,
            MentionSource::RuleNamePart => 4,
            MentionSource::BaseNer => 3,
            MentionSource::BaseCoref => 2,
            MentionSource::GenderSieve => 1,
        }
    }
}

/// A contiguous token range `[start, end)` tagged as a name or a pronoun.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MentionSpan {
    pub start: usize,
    pub end: usize,
    pub kind: MentionKind,
    pub source: MentionSource,
    /// Wikipedia title of the page subject, when a rule attributed the span
    /// to the subject.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_hint: Option<String>,
    /// Representative span of the coreference chain a pronoun came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antecedent: Option<(usize, usize)>,
}

impl MentionSpan {
    pub fn name(start: usize, end: usize, source: MentionSource) -> Self {
        MentionSpan {
            start,
            end,
            kind: MentionKind::Name,
            source,
            subject_hint: None,
            antecedent: None,
        }
    }

    pub fn pronoun(index: usize, source: MentionSource) -> Self {
        MentionSpan {
            start: index,
            end: index + 1,
            kind: MentionKind::Pronoun,
            source,
            subject_hint: None,
            antecedent: None,
        }
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.subject_hint = Some(hint.into());
        self
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }

    pub fn contains(&self, start: usize, end: usize) -> bool {
        self.start <= start && end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityLabel {
    Person,
    Location,
    Other,
}

impl EntityLabel {
    fn from_label(label: &str) -> Self {
        match label.to_ascii_uppercase().as_str() {
            "PERSON" => EntityLabel::Person,
            "LOCATION" => EntityLabel::Location,
            _ => EntityLabel::Other,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            EntityLabel::Person => "PERSON",
            EntityLabel::Location => "LOCATION",
            EntityLabel::Other => "OTHER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NerSpan {
    pub start: usize,
    pub end: usize,
    pub label: EntityLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainMember {
    pub start: usize,
    pub end: usize,
    pub is_pronoun: bool,
    pub representative: bool,
}

/// NER spans and coreference chains produced outside this crate, indexed by
/// token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StandoffAnnotations {
    pub ner: Vec<NerSpan>,
    pub coref: Vec<Vec<ChainMember>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStandoff {
    ner: Vec<(usize, usize, String)>,
    coref: Vec<Vec<(usize, usize, bool, bool)>>,
}

impl StandoffAnnotations {
    pub fn person_spans(&self) -> impl Iterator<Item = &NerSpan> {
        self.ner.iter().filter(|s| s.label == EntityLabel::Person)
    }

    /// Serializes to the standoff JSON format read by [`load_standoff`].
    pub fn to_json(&self) -> String {
        let raw = RawStandoff {
            ner: self
                .ner
                .iter()
                .map(|s| (s.start, s.end, s.label.as_str().to_string()))
                .collect(),
            coref: self
                .coref
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|m| (m.start, m.end, m.is_pronoun, m.representative))
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("standoff serialization is infallible")
    }

    fn validate(&self, len: usize) -> Result<(), MentionError> {
        let check = |start: usize, end: usize| {
            if start < end && end <= len {
                Ok(())
            } else {
                Err(MentionError::SpanOutOfRange { start, end, len })
            }
        };
        for s in &self.ner {
            check(s.start, s.end)?;
        }
        for (i, chain) in self.coref.iter().enumerate() {
            for m in chain {
                check(m.start, m.end)?;
            }
            if !chain.iter().any(|m| m.representative) {
                return Err(MentionError::MalformedStandoff(format!(
                    "coref chain {i} has no representative"
                )));
            }
        }
        Ok(())
    }
}

/// Reads `{"ner": [[start,end,"LABEL"],...], "coref": [[[start,end,is_pronoun,representative],...],...]}`.
pub fn load_standoff(bytes: &[u8], doc: &Document) -> Result<StandoffAnnotations, MentionError> {
    let raw: RawStandoff = serde_json::from_slice(bytes).map_err(|e| MentionError::MalformedStandoff(e.to_string()))?;
    let ann = StandoffAnnotations {
        ner: raw
            .ner
            .into_iter()
            .map(|(start, end, label)| NerSpan {
                start,
                end,
                label: EntityLabel::from_label(&label),
            })
            .collect(),
        coref: raw
            .coref
            .into_iter()
            .map(|chain| {
                chain
                    .into_iter()
                    .map(|(start, end, is_pronoun, representative)| ChainMember {
                        start,
                        end,
                        is_pronoun,
                        representative,
                    })
                    .collect()
            })
            .collect(),
    };
    ann.validate(doc.len())?;
    Ok(ann)
}

/// Honorific titles that may precede a name ("Sir", "Dr.", ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TitleList {
    titles: HashSet<String>,
}

impl Default for TitleList {
    fn default() -> Self {
        TitleList::from_text(DEFAULT_TITLES)
    }
}

impl TitleList {
    /// One title per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Self {
        TitleList {
            titles: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.titles.contains(token)
    }

    pub fn len(&self) -> usize {
        self.titles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.titles.is_empty()
    }
}

pub fn heuristic_base_ner(doc: &Document, profile: &PersonProfile) -> StandoffAnnotations {
    let tokenizer = Tokenizer::default();
    let mut keys: HashSet<String> = profile.name_parts().map(str::to_lowercase).collect();
    for alias in &profile.aliases {
        keys.extend(tokenizer.words(alias).iter().map(|w| w.to_lowercase()));
    }

    let mut ner = Vec::new();
    let mut i = 0;
    while i < doc.len() {
        if !doc.tokens[i].is_capitalized() {
            i += 1;
            continue;
        }
        let sentence = doc.tokens[i].sentence_index;
        let mut j = i;
        while j < doc.len() && doc.tokens[j].is_capitalized() && doc.tokens[j].sentence_index == sentence {
            j += 1;
        }
        if doc.tokens[i..j].iter().any(|t| keys.contains(&t.text.to_lowercase())) {
            ner.push(NerSpan {
                start: i,
                end: j,
                label: EntityLabel::Person,
            });
        }
        i = j;
    }
    StandoffAnnotations { ner, coref: vec![] }
}

pub fn rule_name_part(doc: &Document, profile: &PersonProfile) -> Vec<MentionSpan> {
    let parts: HashSet<&str> = profile.name_parts().collect();
    doc.tokens
        .iter()
        .filter(|t| t.is_capitalized() && parts.contains(t.text.as_str()))
        .map(|t| {
            MentionSpan::name(t.doc_index, t.doc_index + 1, MentionSource::RuleNamePart).with_hint(&profile.wiki_title)
        })
        .collect()
}

fn title_widenings(doc: &Document, spans: &[MentionSpan], titles: &TitleList) -> Vec<MentionSpan> {
    spans
        .iter()
        .filter(|s| s.kind == MentionKind::Name && s.start > 0)
        .filter(|s| {
            let prev = &doc.tokens[s.start - 1];
            prev.is_capitalized() && titles.contains(&prev.text)
        })
        .map(|s| MentionSpan {
            start: s.start - 1,
            source: MentionSource::RuleTitle,
            ..s.clone()
        })
        .collect()
}

fn place_widenings(doc: &Document, spans: &[MentionSpan], annotations: &StandoffAnnotations) -> Vec<MentionSpan> {
    let mut out = Vec::new();
    for s in spans.iter().filter(|s| s.kind == MentionKind::Name) {
        if !doc.tokens[s.start].is_capitalized() || doc.tokens.get(s.end).is_none_or(|t| t.text != "of") {
            continue;
        }
        for loc in annotations
            .ner
            .iter()
            .filter(|n| n.label == EntityLabel::Location && n.start == s.end + 1)
        {
            out.push(MentionSpan {
                end: loc.end,
                source: MentionSource::RuleNameOfPlace,
                ..s.clone()
            });
        }
    }
    out
}

fn with_additions(mut spans: Vec<MentionSpan>, extra: Vec<MentionSpan>) -> Vec<MentionSpan> {
    for e in extra {
        if !spans.iter().any(|s| s.start == e.start && s.end == e.end) {
            spans.push(e);
        }
    }
    spans
}

/// Adds a copy of each NAME span widened by one leading honorific title.
/// The input spans are returned unchanged, followed by any new widenings.
pub fn rule_title(doc: &Document, spans: &[MentionSpan], titles: &TitleList) -> Vec<MentionSpan> {
    with_additions(spans.to_vec(), title_widenings(doc, spans, titles))
}

/// Adds a `Name of Place` span for each NAME span followed by `of` and a
/// LOCATION span. The input spans are returned unchanged, followed by any new
/// widenings.
pub fn rule_name_of_place(
    doc: &Document,
    spans: &[MentionSpan],
    annotations: &StandoffAnnotations,
) -> Vec<MentionSpan> {
    with_additions(spans.to_vec(), place_widenings(doc, spans, annotations))
}

pub fn rule_alias(doc: &Document, profile: &PersonProfile) -> Vec<MentionSpan> {
    let tokenizer = Tokenizer::default();
    let patterns: Vec<Vec<String>> = profile
        .aliases
        .iter()
        .chain(&profile.nicknames)
        .map(|a| tokenizer.words(a))
        .filter(|w| w.first().is_some_and(|f| is_capitalized(f)))
        .collect();

    let mut out = Vec::new();
    for pattern in &patterns {
        let n = pattern.len();
        if n > doc.len() {
            continue;
        }
        for start in 0..=doc.len() - n {
            let hit = doc.tokens[start..start + n]
                .iter()
                .zip(pattern)
                .all(|(t, p)| t.text == *p);
            if hit && !out.iter().any(|s: &MentionSpan| s.start == start && s.end == start + n) {
                out.push(MentionSpan::name(start, start + n, MentionSource::RuleAlias).with_hint(&profile.wiki_title));
            }
        }
    }
    out.sort_by_key(|s| (s.start, s.end));
    out
}

/// Resolves overlapping candidates: longest span first, then source
/// priority, then smaller start. A winner without a subject hint takes the
/// hint of a candidate it contains.
pub fn merge_spans(candidates: &[MentionSpan]) -> Vec<MentionSpan> {
    let mut order: Vec<&MentionSpan> = candidates.iter().collect();
    order.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then(b.source.priority().cmp(&a.source.priority()))
            .then(a.start.cmp(&b.start))
    });

    let mut chosen: Vec<MentionSpan> = Vec::new();
    for c in order {
        if !chosen.iter().any(|s| s.overlaps(c.start, c.end)) {
            chosen.push(c.clone());
        }
    }
    for s in chosen.iter_mut().filter(|s| s.subject_hint.is_none()) {
        s.subject_hint = candidates
            .iter()
            .filter(|c| c.subject_hint.is_some() && s.contains(c.start, c.end))
            .max_by_key(|c| c.source.priority())
            .and_then(|c| c.subject_hint.clone());
    }
    chosen.sort_by_key(|s| s.start);
    chosen
}

/// Grows output spans so every base NER span lies inside one of them.
fn cover_base_spans(mut spans: Vec<MentionSpan>, base: &[MentionSpan]) -> Vec<MentionSpan> {
    for b in base {
        if spans.iter().any(|s| s.contains(b.start, b.end)) {
            continue;
        }
        let (hit, mut rest): (Vec<_>, Vec<_>) = spans.into_iter().partition(|s| s.overlaps(b.start, b.end));
        let mut hull = hit.iter().max_by_key(|s| s.len()).cloned().unwrap_or_else(|| b.clone());
        hull.start = hit.iter().map(|s| s.start).chain([b.start]).min().unwrap_or(b.start);
        hull.end = hit.iter().map(|s| s.end).chain([b.end]).max().unwrap_or(b.end);
        hull.source = MentionSource::BaseNer;
        rest.push(hull);
        rest.sort_by_key(|s| s.start);
        spans = rest;
    }
    spans
}

/// Which profile rules take part in detection. All are on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleToggles {
    pub name_part: bool,
    pub title: bool,
    pub name_of_place: bool,
    pub alias: bool,
}

impl Default for RuleToggles {
    fn default() -> Self {
        RuleToggles {
            name_part: true,
            title: true,
            name_of_place: true,
            alias: true,
        }
    }
}

impl RuleToggles {
    pub fn none() -> Self {
        RuleToggles {
            name_part: false,
            title: false,
            name_of_place: false,
            alias: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MentionDetector {
    pub titles: TitleList,
    pub rules: RuleToggles,
}

impl MentionDetector {
    pub fn new(titles: TitleList) -> Self {
        MentionDetector {
            titles,
            rules: RuleToggles::default(),
        }
    }

    /// Applies the title and name-of-place rules until no new span appears.
    pub fn widen_to_fixed_point(
        &self,
        doc: &Document,
        mut spans: Vec<MentionSpan>,
        annotations: &StandoffAnnotations,
    ) -> Result<Vec<MentionSpan>, MentionError> {
        for _ in 0..MAX_FIXED_POINT_PASSES {
            let before = spans.len();
            if self.rules.title {
                spans = with_additions(spans.clone(), title_widenings(doc, &spans, &self.titles));
            }
            if self.rules.name_of_place {
                spans = with_additions(spans.clone(), place_widenings(doc, &spans, annotations));
            }
            if spans.len() == before {
                return Ok(spans);
            }
        }
        Err(MentionError::FixedPointNotReached(MAX_FIXED_POINT_PASSES))
    }

    pub fn detect(
        &self,
        doc: &Document,
        profile: &PersonProfile,
        annotations: &StandoffAnnotations,
    ) -> Result<Vec<MentionSpan>, MentionError> {
        annotations.validate(doc.len())?;
        let base: Vec<MentionSpan> = annotations
            .person_spans()
            .map(|s| MentionSpan::name(s.start, s.end, MentionSource::BaseNer))
            .collect();
        let mut candidates = base.clone();
        if self.rules.name_part {
            candidates.extend(rule_name_part(doc, profile));
        }
        if self.rules.alias {
            candidates.extend(rule_alias(doc, profile));
        }
        let candidates = self.widen_to_fixed_point(doc, candidates, annotations)?;
        Ok(cover_base_spans(merge_spans(&candidates), &base))
    }
}

/// Detects NAME mentions with the default title list and all rules enabled.
pub fn detect_mentions(
    doc: &Document,
    profile: &PersonProfile,
    annotations: &StandoffAnnotations,
) -> Result<Vec<MentionSpan>, MentionError> {
    MentionDetector::default().detect(doc, profile, annotations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Gender;
    use crate::tokenizer::tokenize;
    use proptest::prelude::*;

    fn ranges(spans: &[MentionSpan]) -> Vec<(usize, usize)> {
        spans.iter().map(|s| (s.start, s.end)).collect()
    }

    fn person(start: usize, end: usize) -> NerSpan {
        NerSpan {
            start,
            end,
            label: EntityLabel::Person,
        }
    }

    fn location(start: usize, end: usize) -> NerSpan {
        NerSpan {
            start,
            end,
            label: EntityLabel::Location,
        }
    }

    #[test]
    fn load_standoff_examples() {
        let doc = tokenize("T", "Andrew Trollope fought");
        let ann = load_standoff(br#"{"ner":[[0,2,"PERSON"]],"coref":[]}"#, &doc).unwrap();
        assert_eq!(ann.ner, vec![person(0, 2)]);
        assert_eq!(
            load_standoff(br#"{"ner":[],"coref":[]}"#, &doc).unwrap(),
            StandoffAnnotations::default()
        );
        assert_eq!(
            load_standoff(br#"{"ner":[[0,9,"PERSON"]],"coref":[]}"#, &doc),
            Err(MentionError::SpanOutOfRange {
                start: 0,
                end: 9,
                len: 3
            })
        );
        assert!(matches!(
            load_standoff(br#"{"ner":[[0,1]],"coref":[]}"#, &doc),
            Err(MentionError::MalformedStandoff(_))
        ));
        assert!(matches!(
            load_standoff(br#"{"ner":[],"coref":[[[0,1,true,false]]]}"#, &doc),
            Err(MentionError::MalformedStandoff(_))
        ));
        let ann = load_standoff(
            br#"{"ner":[[0,2,"ORGANIZATION"]],"coref":[[[0,2,false,true],[2,3,true,false]]]}"#,
            &doc,
        )
        .unwrap();
        assert_eq!(ann.ner[0].label, EntityLabel::Other);
        assert_eq!(load_standoff(ann.to_json().as_bytes(), &doc).unwrap(), ann);
    }

    #[test]
    fn heuristic_ner() {
        let profile = PersonProfile::new("Margaret_of_Anjou", "Margaret");
        let doc = tokenize("T", "Margaret was born");
        assert_eq!(heuristic_base_ner(&doc, &profile).ner, vec![person(0, 1)]);
        let doc = tokenize("T", "she was born in a small town");
        assert_eq!(heuristic_base_ner(&doc, &profile), StandoffAnnotations::default());
        let doc = tokenize("T", "The Oprah Winfrey Show aired");
        assert!(heuristic_base_ner(&doc, &profile).ner.is_empty());
        let doc = tokenize("T", "He met Queen Margaret. Anjou was far.");
        assert_eq!(heuristic_base_ner(&doc, &profile).ner, vec![person(2, 4)]);
    }

    #[test]
    fn name_part_rule() {
        let mut profile = PersonProfile::new("Alex_Guarnaschelli", "Alexandra");
        profile.last_name = Some("Guarnaschelli".into());
        let doc = tokenize("T", "Guarnaschelli cooks");
        let spans = rule_name_part(&doc, &profile);
        assert_eq!(ranges(&spans), [(0, 1)]);
        assert_eq!(spans[0].source, MentionSource::RuleNamePart);
        assert_eq!(spans[0].subject_hint.as_deref(), Some("Alex_Guarnaschelli"));

        let profile = PersonProfile::new("Margaret_of_Anjou", "Margaret");
        assert!(rule_name_part(&tokenize("T", "The queen ruled"), &profile).is_empty());
        assert!(rule_name_part(&tokenize("T", "margaret ruled"), &profile).is_empty());
    }

    #[test]
    fn title_rule() {
        let titles = TitleList::default();
        assert_eq!(titles.len(), 20);
        let doc = tokenize("T", "Sir Andrew Trollope");
        let spans = vec![MentionSpan::name(1, 3, MentionSource::BaseNer)];
        let out = rule_title(&doc, &spans, &titles);
        assert_eq!(ranges(&out), [(1, 3), (0, 3)]);
        assert_eq!(out[1].source, MentionSource::RuleTitle);
        assert_eq!(ranges(&merge_spans(&out)), [(0, 3)]);

        let doc = tokenize("T", "Andrew Trollope , Sir");
        let spans = vec![MentionSpan::name(0, 2, MentionSource::BaseNer)];
        assert_eq!(rule_title(&doc, &spans, &titles), spans);

        // lowercase "sir" is not a title
        let doc = tokenize("T", "sir Andrew");
        let spans = vec![MentionSpan::name(1, 2, MentionSource::BaseNer)];
        assert_eq!(rule_title(&doc, &spans, &titles), spans);
    }

    #[test]
    fn chained_titles_reach_fixed_point() {
        let doc = tokenize("T", "Lord Dr. John");
        let titles = TitleList::default();
        let spans = vec![MentionSpan::name(2, 3, MentionSource::RuleNamePart)];
        let once = rule_title(&doc, &spans, &titles);
        assert_eq!(ranges(&once), [(2, 3), (1, 3)]);
        let twice = rule_title(&doc, &once, &titles);
        assert_eq!(ranges(&twice), [(2, 3), (1, 3), (0, 3)]);
        assert_eq!(rule_title(&doc, &twice, &titles), twice);

        let detector = MentionDetector::default();
        let fixed = detector
            .widen_to_fixed_point(&doc, spans, &StandoffAnnotations::default())
            .unwrap();
        assert_eq!(ranges(&merge_spans(&fixed)), [(0, 3)]);
    }

    #[test]
    fn fixed_point_cap() {
        let text = "Sir ".repeat(MAX_FIXED_POINT_PASSES + 1) + "John";
        let doc = tokenize("T", &text);
        let last = doc.len() - 1;
        let spans = vec![MentionSpan::name(last, last + 1, MentionSource::RuleNamePart)];
        let err = MentionDetector::default().widen_to_fixed_point(&doc, spans.clone(), &StandoffAnnotations::default());
        assert_eq!(err, Err(MentionError::FixedPointNotReached(MAX_FIXED_POINT_PASSES)));

        let doc = tokenize("T", &("Sir ".repeat(MAX_FIXED_POINT_PASSES - 1) + "John"));
        let last = doc.len() - 1;
        let spans = vec![MentionSpan::name(last, last + 1, MentionSource::RuleNamePart)];
        assert!(MentionDetector::default()
            .widen_to_fixed_point(&doc, spans, &StandoffAnnotations::default())
            .is_ok());
    }

    #[test]
    fn name_of_place_rule() {
        let doc = tokenize("T", "Margarate of Anjou");
        let spans = vec![MentionSpan::name(0, 1, MentionSource::BaseNer)];
        let ann = StandoffAnnotations {
            ner: vec![person(0, 1), location(2, 3)],
            coref: vec![],
        };
        let out = rule_name_of_place(&doc, &spans, &ann);
        assert_eq!(ranges(&out), [(0, 1), (0, 3)]);
        assert_eq!(out[1].source, MentionSource::RuleNameOfPlace);

        let other = StandoffAnnotations {
            ner: vec![NerSpan {
                start: 2,
                end: 3,
                label: EntityLabel::Other,
            }],
            coref: vec![],
        };
        assert_eq!(rule_name_of_place(&doc, &spans, &other), spans);
        assert_eq!(rule_name_of_place(&doc, &spans, &StandoffAnnotations::default()), spans);
    }

    #[test]
    fn alias_rule() {
        let mut profile = PersonProfile::new("Vin_Diesel", "Mark");
        profile.aliases = vec!["Vin Diesel".into()];
        let doc = tokenize("T", "Vin Diesel acts");
        let out = rule_alias(&doc, &profile);
        assert_eq!(ranges(&out), [(0, 2)]);
        assert_eq!(out[0].source, MentionSource::RuleAlias);

        let mut profile = PersonProfile::new("Alex_Guarnaschelli", "Alexandra");
        profile.nicknames = vec!["Alex".into()];
        assert_eq!(ranges(&rule_alias(&tokenize("T", "Alex cooks"), &profile)), [(0, 1)]);

        let profile = PersonProfile::new("X", "Y");
        assert!(rule_alias(&tokenize("T", "Alex cooks"), &profile).is_empty());
    }

    #[test]
    fn merge_examples() {
        let a = MentionSpan::name(0, 1, MentionSource::RuleNamePart);
        let b = MentionSpan::name(0, 3, MentionSource::RuleNameOfPlace);
        assert_eq!(merge_spans(&[a.clone(), b.clone()]), vec![b.clone()]);

        let c = MentionSpan::name(5, 6, MentionSource::BaseNer);
        assert_eq!(ranges(&merge_spans(&[c.clone(), b.clone()])), [(0, 3), (5, 6)]);

        let d = MentionSpan::name(5, 6, MentionSource::RuleAlias);
        let merged = merge_spans(&[c, d]);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].source, MentionSource::RuleAlias);

        // equal length, equal priority: smaller start wins
        let e = MentionSpan::name(1, 3, MentionSource::BaseNer);
        let f = MentionSpan::name(2, 4, MentionSource::BaseNer);
        assert_eq!(ranges(&merge_spans(&[f, e])), [(1, 3)]);
    }

    #[test]
    fn merge_inherits_contained_hint() {
        let base = MentionSpan::name(0, 2, MentionSource::BaseNer);
        let part = MentionSpan::name(1, 2, MentionSource::RuleNamePart).with_hint("S");
        let merged = merge_spans(&[base, part]);
        assert_eq!(merged[0].source, MentionSource::BaseNer);
        assert_eq!(merged[0].subject_hint.as_deref(), Some("S"));
    }

    #[test]
    fn detect_sir_andrew_trollope() {
        let doc = tokenize(
            "Andrew_Trollope",
            "Sir Andrew Trollope (died 1461) was an English soldier during the later stages of the Hundred Years' War.",
        );
        let mut profile = PersonProfile::new("Andrew_Trollope", "Andrew");
        profile.last_name = Some("Trollope".into());
        profile.gender = Gender::Male;
        let ann = StandoffAnnotations {
            ner: vec![person(1, 3)],
            coref: vec![],
        };
        let spans = detect_mentions(&doc, &profile, &ann).unwrap();
        assert_eq!(ranges(&spans), [(0, 3)]);
        assert_eq!(spans[0].kind, MentionKind::Name);
        assert_eq!(spans[0].source, MentionSource::RuleTitle);
    }

    #[test]
    fn detect_empty_and_rule_only() {
        let profile = PersonProfile::new("X", "Y");
        let empty = tokenize("X", "");
        assert!(detect_mentions(&empty, &profile, &StandoffAnnotations::default())
            .unwrap()
            .is_empty());

        let mut profile = PersonProfile::new("Alex_Guarnaschelli", "Alexandra");
        profile.last_name = Some("Guarnaschelli".into());
        let doc = tokenize("T", "Chef Guarnaschelli cooks.");
        let spans = detect_mentions(&doc, &profile, &StandoffAnnotations::default()).unwrap();
        assert_eq!(ranges(&spans), [(1, 2)]);
        assert_eq!(spans[0].source, MentionSource::RuleNamePart);
    }

    #[test]
    fn base_span_partially_overlapped_is_covered() {
        let mut profile = PersonProfile::new("Vin_Diesel", "Mark");
        profile.aliases = vec!["Big Vin Diesel".into()];
        let doc = tokenize("T", "Big Vin Diesel Sinclair");
        let ann = StandoffAnnotations {
            ner: vec![person(2, 4)],
            coref: vec![],
        };
        let spans = detect_mentions(&doc, &profile, &ann).unwrap();
        assert_eq!(ranges(&spans), [(0, 4)]);
    }

    fn arb_case() -> impl Strategy<Value = (Document, PersonProfile, StandoffAnnotations)> {
        let words = prop::sample::select(vec![
            "Sir", "Lord", "Dr.", "Margaret", "of", "Anjou", "the", "Vin", "Diesel", "he", "King", "was", ".",
            "margaret", "Andrew",
        ]);
        (
            prop::collection::vec(words, 0..24),
            prop::collection::vec((0usize..24, 1usize..4, any::<bool>()), 0..6),
        )
            .prop_map(|(words, raw)| {
                let doc = tokenize("T", &words.join(" "));
                let n = doc.len();
                let ner = raw
                    .into_iter()
                    .filter(|&(s, l, _)| s + l <= n)
                    .map(|(s, l, is_person)| NerSpan {
                        start: s,
                        end: s + l,
                        label: if is_person {
                            EntityLabel::Person
                        } else {
                            EntityLabel::Location
                        },
                    })
                    .collect();
                let mut profile = PersonProfile::new("Margaret_of_Anjou", "Margaret");
                profile.last_name = Some("Andrew".into());
                profile.aliases = vec!["Vin Diesel".into()];
                (doc, profile, StandoffAnnotations { ner, coref: vec![] })
            })
    }

    proptest! {
        #[test]
        fn detection_invariants((doc, profile, ann) in arb_case()) {
            let spans = detect_mentions(&doc, &profile, &ann).unwrap();
            for w in spans.windows(2) {
                prop_assert!(w[0].end <= w[1].start, "overlap or unsorted: {:?}", spans);
            }
            for p in ann.person_spans() {
                prop_assert!(spans.iter().any(|s| s.contains(p.start, p.end)));
            }
            for s in &spans {
                prop_assert!(s.start < s.end && s.end <= doc.len());
                if s.source != MentionSource::BaseNer {
                    prop_assert!(doc.tokens[s.start].is_capitalized());
                }
            }
        }

        #[test]
        fn widening_is_idempotent((doc, profile, ann) in arb_case()) {
            let detector = MentionDetector::default();
            let mut seed = rule_name_part(&doc, &profile);
            seed.extend(ann.person_spans().map(|s| MentionSpan::name(s.start, s.end, MentionSource::BaseNer)));
            let once = detector.widen_to_fixed_point(&doc, seed.clone(), &ann).unwrap();
            let twice = detector.widen_to_fixed_point(&doc, once.clone(), &ann).unwrap();
            prop_assert_eq!(&once, &twice);
            for s in &seed {
                prop_assert!(once.contains(s));
            }
        }
    }
}
