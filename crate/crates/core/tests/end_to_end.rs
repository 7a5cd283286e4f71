use personlink::corpus::{parse_gold_tsv, parse_profile_xml, write_gold_tsv};
use personlink::eval::{predictions_to_gold, score_document};
use personlink::linker::FixtureSearchClient;
use personlink::mentions::{load_standoff, MentionSource};
use personlink::pipeline::{Linker, Pipeline};
use personlink::tokenizer::tokenize;

const PROFILE: &str = r#"<person>
  <wikiTitle>Margaret_of_Anjou</wikiTitle>
  <firstName>Margaret</firstName>
  <gender>female</gender>
</person>"#;

const TEXT: &str = "Margaret of Anjou married the English king in 1445. She was crowned queen. Her son was born later.";

const STANDOFF: &str = r#"{"ner": [[0, 1, "PERSON"], [2, 3, "LOCATION"]], "coref": []}"#;

#[test]
fn text_to_scored_predictions() {
    let doc = tokenize("Margaret_of_Anjou", TEXT);
    let profile = parse_profile_xml(PROFILE.as_bytes()).unwrap();
    let ann = load_standoff(STANDOFF.as_bytes(), &doc).unwrap();
    let search = FixtureSearchClient::from_json(br#"{"Margaret of Anjou": ["Margaret_of_Anjou"]}"#).unwrap();

    let out = Pipeline::default()
        .run(&doc, &profile, &ann, Linker::Wikisearch(&search))
        .unwrap();
    let sources: Vec<MentionSource> = out.mentions.iter().map(|m| m.source).collect();
    assert_eq!(
        sources,
        vec![
            MentionSource::RuleNameOfPlace,
            MentionSource::GenderSieve,
            MentionSource::GenderSieve
        ]
    );
    assert_eq!(out.links.len(), 3);

    // the prediction file is itself valid gold and scores perfectly against itself
    let as_gold = predictions_to_gold(&doc, &out.predictions);
    let bytes = write_gold_tsv(&as_gold).unwrap();
    let reparsed = parse_gold_tsv(&bytes).unwrap();
    assert_eq!(reparsed, as_gold);
    assert_eq!(reparsed.sentence_breaks, vec![10, 15]);
    let scores = score_document(&reparsed, &out.predictions).unwrap();
    assert_eq!((scores.mention.f1, scores.linking.f1), (1.0, 1.0));
    assert_eq!(scores.mention.tp, 5);
}

#[test]
fn standoff_json_round_trip() {
    let doc = tokenize("Margaret_of_Anjou", TEXT);
    let ann = load_standoff(STANDOFF.as_bytes(), &doc).unwrap();
    let again = load_standoff(ann.to_json().as_bytes(), &doc).unwrap();
    assert_eq!(again, ann);
    assert!(load_standoff(br#"{"ner": [[0, 99, "PERSON"]], "coref": []}"#, &doc).is_err());
}
