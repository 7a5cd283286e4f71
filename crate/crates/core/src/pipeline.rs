//! End-to-end models: detect mentions, resolve pronouns, link, project onto
//! tokens.

use thiserror::Error;

use crate::coref::{attribute_chain_pronouns, filter_pronoun_chains, gender_sieve, PronounLexicon};
use crate::corpus::{Document, PersonProfile};
use crate::eval::{project_predictions, EvalError, TokenPrediction};
use crate::linker::{
    baseline_pipeline, link_tagme, link_wikisearch, propagate_pronoun_links, LinkError, LinkedMention, SearchClient,
    TagmeClient, DEFAULT_LENGTH_LIMIT,
};
use crate::mentions::{
    merge_spans, MentionDetector, MentionError, MentionKind, MentionSource, MentionSpan, StandoffAnnotations,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Mention(#[from] MentionError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Backend selection for [`Pipeline::run`].
#[derive(Clone, Copy)]
pub enum Linker<'a> {
    Wikisearch(&'a dyn SearchClient),
    Tagme(&'a dyn TagmeClient),
    Baseline(&'a dyn TagmeClient),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub mentions: Vec<MentionSpan>,
    pub links: Vec<LinkedMention>,
    pub predictions: Vec<TokenPrediction>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub detector: MentionDetector,
    pub lexicon: PronounLexicon,
    pub gender_sieve: bool,
    pub length_limit: usize,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline {
            detector: MentionDetector::default(),
            lexicon: PronounLexicon::default(),
            gender_sieve: true,
            length_limit: DEFAULT_LENGTH_LIMIT,
        }
    }
}

impl Pipeline {
    /// Mentions of the improved models: names from the detector, chain
    /// pronouns attributed to the subject where possible, then the gender
    /// sieve over whatever is left uncovered.
    pub fn improved_mentions(
        &self,
        doc: &Document,
        profile: &PersonProfile,
        annotations: &StandoffAnnotations,
    ) -> Result<Vec<MentionSpan>, PipelineError> {
        let names = self.detector.detect(doc, profile, annotations)?;
        let chain = filter_pronoun_chains(doc, annotations);
        let chain = attribute_chain_pronouns(doc, &chain, &names, profile, &self.lexicon);
        let mut candidates = names;
        candidates.extend(chain);
        let mut spans = merge_spans(&candidates);
        if self.gender_sieve {
            let extra = gender_sieve(doc, profile, &spans, &self.lexicon);
            spans.extend(extra);
            spans.sort_by_key(|s| s.start);
        }
        Ok(spans)
    }

    /// Mentions of the baseline model: base NER persons and chain pronouns.
    pub fn baseline_mentions(&self, doc: &Document, annotations: &StandoffAnnotations) -> Vec<MentionSpan> {
        let mut spans: Vec<MentionSpan> = annotations
            .person_spans()
            .map(|s| MentionSpan::name(s.start, s.end, MentionSource::BaseNer))
            .collect();
        spans.extend(filter_pronoun_chains(doc, annotations));
        merge_spans(&spans)
    }

    pub fn run(
        &self,
        doc: &Document,
        profile: &PersonProfile,
        annotations: &StandoffAnnotations,
        linker: Linker<'_>,
    ) -> Result<PipelineOutput, PipelineError> {
        let (mentions, links) = match linker {
            Linker::Baseline(client) => {
                let mentions = self.baseline_mentions(doc, annotations);
                let links = baseline_pipeline(doc, annotations, client, self.length_limit)?;
                (mentions, links)
            }
            Linker::Wikisearch(_) | Linker::Tagme(_) => {
                let mentions = self.improved_mentions(doc, profile, annotations)?;
                let named = match linker {
                    Linker::Wikisearch(client) => link_wikisearch(doc, &mentions, client)?,
                    Linker::Tagme(client) | Linker::Baseline(client) => {
                        link_tagme(doc, &mentions, client, self.length_limit)?
                    }
                };
                let pronouns: Vec<MentionSpan> = mentions
                    .iter()
                    .filter(|s| s.kind == MentionKind::Pronoun)
                    .cloned()
                    .collect();
                let mut links = named.clone();
                links.extend(propagate_pronoun_links(&pronouns, &named, profile));
                links.sort_by_key(|l| l.span.start);
                (mentions, links)
            }
        };
        let predictions = project_predictions(doc, &links, &mentions)?;
        Ok(PipelineOutput {
            mentions,
            links,
            predictions,
        })
    }
}
