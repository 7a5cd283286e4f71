use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use personlink::coref::PronounLexicon;
use personlink::corpus::{parse_gold_tsv, parse_profile_xml, Document, GoldDocument, PersonProfile};
use personlink::mentions::{heuristic_base_ner, load_standoff, StandoffAnnotations, TitleList};
use personlink::tokenizer::Tokenizer;

use crate::InputArgs;

/// A page ready for the pipeline.
pub struct Page {
    pub title: String,
    pub doc: Document,
    pub profile: PersonProfile,
    pub annotations: StandoffAnnotations,
    pub gold: Option<GoldDocument>,
}

pub fn read(path: &Path) -> Result<Vec<u8>, String> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Sorted stems of the files in `dir` with the given extension.
pub fn stems(dir: &Path, ext: &str) -> Result<BTreeSet<String>, String> {
    let entries = fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut out = BTreeSet::new();
    for entry in entries {
        let path = entry.map_err(|e| format!("{}: {e}", dir.display()))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string());
            }
        }
    }
    Ok(out)
}

pub fn load_gold(path: &Path) -> Result<GoldDocument, String> {
    parse_gold_tsv(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

pub struct Resources {
    pub titles: TitleList,
    pub lexicon: PronounLexicon,
}

impl Resources {
    pub fn load(args: &InputArgs) -> Result<Self, String> {
        let titles = match &args.titles {
            Some(p) => TitleList::from_text(&read_text(p)?),
            None => TitleList::default(),
        };
        let lexicon = match &args.pronouns {
            Some(p) => PronounLexicon::from_text(&read_text(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
            None => PronounLexicon::default(),
        };
        Ok(Resources { titles, lexicon })
    }
}

fn read_text(path: &Path) -> Result<String, String> {
    String::from_utf8(read(path)?).map_err(|_| format!("{}: not valid UTF-8", path.display()))
}

/// Page titles found in the corpus directory (.txt or .tsv).
pub fn page_titles(corpus: &Path) -> Result<Vec<String>, String> {
    let mut titles = stems(corpus, "txt")?;
    titles.extend(stems(corpus, "tsv")?);
    if titles.is_empty() {
        return Err(format!("{}: no documents found", corpus.display()));
    }
    Ok(titles.into_iter().collect())
}

fn in_dir(dir: &Path, title: &str, ext: &str) -> PathBuf {
    dir.join(format!("{title}.{ext}"))
}

/// Loads everything belonging to one page. The page text comes from
/// `<Title>.txt`, or is rebuilt from the gold rows when only the gold file
/// exists.
pub fn load_page(args: &InputArgs, title: &str, need_gold: bool) -> Result<Page, String> {
    let txt = in_dir(&args.corpus, title, "txt");
    let tsv = in_dir(&args.corpus, title, "tsv");
    let gold = if tsv.is_file() {
        Some(load_gold(&tsv)?)
    } else if need_gold {
        return Err(format!("{title}: missing gold file {}", tsv.display()));
    } else {
        None
    };
    let doc = if txt.is_file() {
        Tokenizer::default()
            .tokenize_bytes(title, &read(&txt)?)
            .map_err(|e| format!("{}: {e}", txt.display()))?
    } else {
        gold.as_ref()
            .expect("title came from a .txt or .tsv file")
            .to_document()
    };

    let profile_path = in_dir(&args.profiles, title, "xml");
    if !profile_path.is_file() {
        return Err(format!("{title}: missing profile {}", profile_path.display()));
    }
    let profile = parse_profile_xml(&read(&profile_path)?).map_err(|e| format!("{}: {e}", profile_path.display()))?;

    let annotations = match &args.standoff {
        Some(dir) => {
            let path = in_dir(dir, title, "json");
            if !path.is_file() {
                return Err(format!("{title}: missing standoff {}", path.display()));
            }
            load_standoff(&read(&path)?, &doc).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => heuristic_base_ner(&doc, &profile),
    };
    Ok(Page {
        title: title.to_string(),
        doc,
        profile,
        annotations,
        gold,
    })
}
