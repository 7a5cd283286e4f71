//! Token-level precision/recall/F1 against the gold format, per stage:
//! NER (column 2), mention detection (column 3) and entity linking
//! (column 4).

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, GoldDocument, GoldRow};
use crate::linker::LinkedMention;
use crate::mentions::{MentionKind, MentionSpan};

pub use report::{render_json, render_text, render_tsv, ReportFormat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("prediction has {predicted} rows but gold has {gold}")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("token text differs at row {0}")]
    TokenMismatch(usize),
    #[error("no documents to aggregate")]
    EmptyInput,
    #[error("spans [{0},{1}) and [{2},{3}) overlap")]
    OverlapViolation(usize, usize, usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ner,
    Mention,
    Linking,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Ner, Stage::Mention, Stage::Linking];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Average {
    Micro,
    Macro,
}

/// Per-token prediction, aligned with gold rows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPrediction {
    pub is_name: bool,
    pub is_mention: bool,
    pub link: Option<String>,
}

impl From<&GoldRow> for TokenPrediction {
    fn from(row: &GoldRow) -> Self {
        TokenPrediction {
            is_name: row.is_name,
            is_mention: row.is_mention,
            link: row.link.clone(),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageScores {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl StageScores {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        StageScores {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTriple {
    pub ner: StageScores,
    pub mention: StageScores,
    pub linking: StageScores,
}

impl StageTriple {
    pub fn get(&self, stage: Stage) -> &StageScores {
        match stage {
            Stage::Ner => &self.ner,
            Stage::Mention => &self.mention,
            Stage::Linking => &self.linking,
        }
    }

    fn from_fn(mut f: impl FnMut(Stage) -> StageScores) -> Self {
        StageTriple {
            ner: f(Stage::Ner),
            mention: f(Stage::Mention),
            linking: f(Stage::Linking),
        }
    }
}

/// Wikipedia title equality: underscores and spaces are interchangeable
/// and the first letter is case-insensitive.
pub fn normalize_title(title: &str) -> String {
    let spaced = title.trim().replace('_', " ");
    let mut chars = spaced.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[derive(Clone, Copy)]
enum Outcome {
    Tp,
    Fp,
    Fn,
    FpFn,
    Tn,
}

fn flag_outcome(gold: bool, pred: bool) -> Outcome {
    match (gold, pred) {
        (true, true) => Outcome::Tp,
        (false, true) => Outcome::Fp,
        (true, false) => Outcome::Fn,
        (false, false) => Outcome::Tn,
    }
}

fn row_outcome(gold: &GoldRow, pred: &TokenPrediction, stage: Stage) -> Outcome {
    match stage {
        Stage::Ner => flag_outcome(gold.is_name, pred.is_name),
        Stage::Mention => flag_outcome(gold.is_mention, pred.is_mention),
        Stage::Linking => match (&gold.link, &pred.link) {
            (Some(g), Some(p)) if normalize_title(g) == normalize_title(p) => Outcome::Tp,
            (Some(_), Some(_)) => Outcome::FpFn,
            (None, Some(_)) => Outcome::Fp,
            (Some(_), None) => Outcome::Fn,
            (None, None) => Outcome::Tn,
        },
    }
}

pub fn score_stage(gold: &GoldDocument, predicted: &[TokenPrediction], stage: Stage) -> Result<StageScores, EvalError> {
    if gold.rows.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.rows.len(),
            predicted: predicted.len(),
        });
    }
    let (tp, fp, fn_) = gold
        .rows
        .iter()
        .zip(predicted)
        .fold((0, 0, 0), |(tp, fp, fn_), (g, p)| match row_outcome(g, p, stage) {
            Outcome::Tp => (tp + 1, fp, fn_),
            Outcome::Fp => (tp, fp + 1, fn_),
            Outcome::Fn => (tp, fp, fn_ + 1),
            Outcome::FpFn => (tp, fp + 1, fn_ + 1),
            Outcome::Tn => (tp, fp, fn_),
        });
    Ok(StageScores::from_counts(tp, fp, fn_))
}

pub fn score_document(gold: &GoldDocument, predicted: &[TokenPrediction]) -> Result<StageTriple, EvalError> {
    Ok(StageTriple {
        ner: score_stage(gold, predicted, Stage::Ner)?,
        mention: score_stage(gold, predicted, Stage::Mention)?,
        linking: score_stage(gold, predicted, Stage::Linking)?,
    })
}

/// Micro pools tp/fp/fn and derives P/R/F once. Macro averages per-document
/// P, R and F separately (and sums the counts).
pub fn aggregate(per_doc: &[(String, StageTriple)], mode: Average) -> Result<StageTriple, EvalError> {
    if per_doc.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = per_doc.len() as f64;
    Ok(StageTriple::from_fn(|stage| {
        let scores = per_doc.iter().map(|(_, t)| t.get(stage));
        let tp = scores.clone().map(|s| s.tp).sum();
        let fp = scores.clone().map(|s| s.fp).sum();
        let fn_ = scores.clone().map(|s| s.fn_).sum();
        match mode {
            Average::Micro => StageScores::from_counts(tp, fp, fn_),
            Average::Macro => StageScores {
                tp,
                fp,
                fn_,
                precision: scores.clone().map(|s| s.precision).sum::<f64>() / n,
                recall: scores.clone().map(|s| s.recall).sum::<f64>() / n,
                f1: scores.map(|s| s.f1).sum::<f64>() / n,
            },
        }
    }))
}

/// Scores annotator `b` against reference annotator `a`.
pub fn iaa(gold_a: &GoldDocument, gold_b: &GoldDocument) -> Result<StageTriple, EvalError> {
    if gold_a.rows.len() != gold_b.rows.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold_a.rows.len(),
            predicted: gold_b.rows.len(),
        });
    }
    if let Some(i) = gold_a
        .rows
        .iter()
        .zip(&gold_b.rows)
        .position(|(a, b)| a.token != b.token)
    {
        return Err(EvalError::TokenMismatch(i));
    }
    let predicted: Vec<TokenPrediction> = gold_b.rows.iter().map(TokenPrediction::from).collect();
    score_document(gold_a, &predicted)
}

fn check_disjoint<'a>(spans: impl Iterator<Item = &'a MentionSpan>) -> Result<(), EvalError> {
    let mut sorted: Vec<&MentionSpan> = spans.collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for w in sorted.windows(2) {
        if w[0].end > w[1].start {
            return Err(EvalError::OverlapViolation(w[0].start, w[0].end, w[1].start, w[1].end));
        }
    }
    Ok(())
}

/// Projects spans onto tokens. Tokens covered by a NAME span (mention or
/// link) are names; covered by any span are mentions; covered by a link
/// take its title.
pub fn project_predictions(
    doc: &Document,
    links: &[LinkedMention],
    mentions: &[MentionSpan],
) -> Result<Vec<TokenPrediction>, EvalError> {
    check_disjoint(mentions.iter())?;
    check_disjoint(links.iter().map(|l| &l.span))?;
    let mut out = vec![TokenPrediction::default(); doc.len()];
    let spans = mentions.iter().chain(links.iter().map(|l| &l.span));
    for s in spans {
        for p in &mut out[s.start.min(doc.len())..s.end.min(doc.len())] {
            p.is_mention = true;
            p.is_name |= s.kind == MentionKind::Name;
        }
    }
    for l in links {
        for p in &mut out[l.span.start.min(doc.len())..l.span.end.min(doc.len())] {
            p.link = Some(l.title.clone());
        }
    }
    Ok(out)
}

/// Gold-format rows for a prediction, for writing prediction files.
pub fn predictions_to_gold(doc: &Document, predicted: &[TokenPrediction]) -> GoldDocument {
    let rows = doc
        .tokens
        .iter()
        .zip(predicted)
        .map(|(t, p)| GoldRow {
            token: t.text.clone(),
            is_name: p.is_name,
            is_mention: p.is_mention,
            link: p.link.clone(),
        })
        .collect();
    let sentence_breaks = doc.sentences().iter().skip(1).map(|r| r.start).collect();
    GoldDocument {
        page_title: doc.page_title.clone(),
        rows,
        sentence_breaks,
    }
}

/// Per-document scores plus the requested aggregates, documents keyed (and
/// therefore ordered) by page title.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub per_document: BTreeMap<String, StageTriple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate_micro: Option<StageTriple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate_macro: Option<StageTriple>,
}

impl EvalReport {
    pub fn build(
        system: impl Into<String>,
        per_document: BTreeMap<String, StageTriple>,
        averages: &[Average],
    ) -> Result<Self, EvalError> {
        let docs: Vec<(String, StageTriple)> = per_document.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let mut report = EvalReport {
            system: system.into(),
            per_document,
            aggregate_micro: None,
            aggregate_macro: None,
        };
        for &avg in averages {
            let agg = Some(aggregate(&docs, avg)?);
            match avg {
                Average::Micro => report.aggregate_micro = agg,
                Average::Macro => report.aggregate_macro = agg,
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linker::LinkerId;
    use crate::mentions::MentionSource;
    use crate::tokenizer::tokenize;
    use proptest::prelude::*;

    fn gold_with_mentions(n: usize, positives: &[usize]) -> GoldDocument {
        let rows = (0..n)
            .map(|i| GoldRow {
                token: format!("t{i}"),
                is_name: false,
                is_mention: positives.contains(&i),
                link: None,
            })
            .collect();
        GoldDocument::new("T", rows)
    }

    fn preds_with_mentions(n: usize, positives: &[usize]) -> Vec<TokenPrediction> {
        (0..n)
            .map(|i| TokenPrediction {
                is_mention: positives.contains(&i),
                ..Default::default()
            })
            .collect()
    }

    #[test]
    fn perfect_prediction() {
        let mut gold = gold_with_mentions(6, &[1, 2]);
        gold.rows[1].is_name = true;
        gold.rows[1].link = Some("A".into());
        let preds: Vec<TokenPrediction> = gold.rows.iter().map(TokenPrediction::from).collect();
        for stage in Stage::ALL {
            let s = score_stage(&gold, &preds, stage).unwrap();
            assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0), "{stage:?}");
        }
    }

    #[test]
    fn empty_prediction() {
        let gold = gold_with_mentions(4, &[0]);
        let s = score_stage(&gold, &preds_with_mentions(4, &[]), Stage::Mention).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (0, 0, 1));
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn counted_example() {
        let gold = gold_with_mentions(8, &[1, 2, 5]);
        let s = score_stage(&gold, &preds_with_mentions(8, &[1, 5, 7]), Stage::Mention).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (2, 1, 1));
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn linking_title_equality() {
        let mut gold = gold_with_mentions(1, &[0]);
        gold.rows[0].link = Some("Margaret_of_Anjou".into());
        let pred = |t: &str| {
            vec![TokenPrediction {
                is_name: false,
                is_mention: true,
                link: Some(t.into()),
            }]
        };
        let s = score_stage(&gold, &pred("Margaret_of_Anjou"), Stage::Linking).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 0));
        let s = score_stage(&gold, &pred("margaret of Anjou"), Stage::Linking).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 0));
        let s = score_stage(&gold, &pred("Anjou"), Stage::Linking).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (0, 1, 1));
        let s = score_stage(&gold, &pred("Margaret_Of_Anjou"), Stage::Linking).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (0, 1, 1));
    }

    #[test]
    fn length_mismatch() {
        let gold = gold_with_mentions(3, &[]);
        assert_eq!(
            score_stage(&gold, &preds_with_mentions(2, &[]), Stage::Ner),
            Err(EvalError::LengthMismatch { gold: 3, predicted: 2 })
        );
    }

    fn triple(tp: usize, fp: usize, fn_: usize) -> StageTriple {
        let s = StageScores::from_counts(tp, fp, fn_);
        StageTriple {
            ner: s,
            mention: s,
            linking: s,
        }
    }

    #[test]
    fn aggregation_examples() {
        let one = vec![("a".to_string(), triple(3, 1, 2))];
        assert_eq!(
            aggregate(&one, Average::Micro).unwrap(),
            aggregate(&one, Average::Macro).unwrap()
        );
        assert_eq!(aggregate(&one, Average::Micro).unwrap(), one[0].1);

        let two = vec![("a".to_string(), triple(2, 0, 0)), ("b".to_string(), triple(0, 2, 2))];
        let m = aggregate(&two, Average::Macro).unwrap().mention;
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
        let m = aggregate(&two, Average::Micro).unwrap().mention;
        assert_eq!((m.tp, m.fp, m.fn_), (2, 2, 2));
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));

        assert_eq!(aggregate(&[], Average::Micro), Err(EvalError::EmptyInput));
    }

    #[test]
    fn iaa_examples() {
        let positives: Vec<usize> = (0..10).collect();
        let a = gold_with_mentions(20, &positives);
        assert_eq!(iaa(&a, &a).unwrap().mention.f1, 1.0);

        let b = gold_with_mentions(20, &positives[1..]);
        let m = iaa(&a, &b).unwrap().mention;
        assert_eq!((m.precision, m.recall), (1.0, 0.9));
        assert!((m.f1 - 18.0 / 19.0).abs() < 1e-12);

        let mut c = a.clone();
        c.rows[3].token = "other".into();
        assert_eq!(iaa(&a, &c), Err(EvalError::TokenMismatch(3)));
    }

    #[test]
    fn projection() {
        let doc = tokenize("T", "Sir Andrew Trollope fought and then he died");
        let name = MentionSpan::name(0, 3, MentionSource::RuleTitle);
        let he = MentionSpan::pronoun(6, MentionSource::GenderSieve);
        let links = vec![
            LinkedMention {
                span: name.clone(),
                title: "T".into(),
                linker_id: LinkerId::Wikisearch,
                score: None,
            },
            LinkedMention {
                span: he.clone(),
                title: "T".into(),
                linker_id: LinkerId::SieveInherit,
                score: None,
            },
        ];
        let preds = project_predictions(&doc, &links, &[name.clone(), he.clone()]).unwrap();
        for p in &preds[..3] {
            assert_eq!(
                *p,
                TokenPrediction {
                    is_name: true,
                    is_mention: true,
                    link: Some("T".into())
                }
            );
        }
        assert_eq!(
            preds[6],
            TokenPrediction {
                is_name: false,
                is_mention: true,
                link: Some("T".into())
            }
        );
        assert_eq!(preds[4], TokenPrediction::default());

        let none = project_predictions(&doc, &[], &[]).unwrap();
        assert!(none.iter().all(|p| *p == TokenPrediction::default()));

        let clash = MentionSpan::name(2, 4, MentionSource::BaseNer);
        assert_eq!(
            project_predictions(&doc, &[], &[name, clash]),
            Err(EvalError::OverlapViolation(0, 3, 2, 4))
        );

        let gold = predictions_to_gold(&doc, &preds);
        gold.validate().unwrap();
        assert_eq!(gold.rows[0].token, "Sir");
    }

    fn arb_rows() -> impl Strategy<Value = Vec<(GoldRow, TokenPrediction)>> {
        let link = prop_oneof![Just(None), Just(Some("A".to_string())), Just(Some("B".to_string()))];
        proptest::collection::vec(
            (
                any::<bool>(),
                any::<bool>(),
                link.clone(),
                any::<bool>(),
                any::<bool>(),
                link,
            ),
            0..50,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .map(|(gn, gm, gl, pn, pm, pl)| {
                    let gold = GoldRow {
                        token: "w".into(),
                        is_name: gn && gm,
                        is_mention: gm || gl.is_some(),
                        link: gl,
                    };
                    (
                        gold,
                        TokenPrediction {
                            is_name: pn,
                            is_mention: pm,
                            link: pl,
                        },
                    )
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn count_identities(rows in arb_rows()) {
            let (gold_rows, preds): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            let gold = GoldDocument::new("T", gold_rows);
            let s = score_stage(&gold, &preds, Stage::Mention).unwrap();
            prop_assert_eq!(s.tp + s.fn_, gold.rows.iter().filter(|r| r.is_mention).count());
            prop_assert_eq!(s.tp + s.fp, preds.iter().filter(|p| p.is_mention).count());
            let l = score_stage(&gold, &preds, Stage::Linking).unwrap();
            prop_assert_eq!(l.tp + l.fn_, gold.rows.iter().filter(|r| r.link.is_some()).count());
            prop_assert_eq!(l.tp + l.fp, preds.iter().filter(|p| p.link.is_some()).count());
            if s.precision > 0.0 && s.recall > 0.0 {
                prop_assert!(s.f1 >= s.precision.min(s.recall) - 1e-12);
                prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-12);
            }
        }

        #[test]
        fn micro_permutation_invariant(counts in proptest::collection::vec((0usize..20, 0usize..20, 0usize..20), 1..8)) {
            let docs: Vec<(String, StageTriple)> =
                counts.iter().enumerate().map(|(i, &(a, b, c))| (i.to_string(), triple(a, b, c))).collect();
            let mut rev = docs.clone();
            rev.reverse();
            prop_assert_eq!(aggregate(&docs, Average::Micro).unwrap(), aggregate(&rev, Average::Micro).unwrap());
            let m = aggregate(&docs, Average::Micro).unwrap().ner;
            prop_assert_eq!(m.tp, counts.iter().map(|c| c.0).sum::<usize>());
        }
    }
}
