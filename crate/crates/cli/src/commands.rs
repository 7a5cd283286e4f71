use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use personlink::corpus::{write_gold_tsv, GoldDocument};
use personlink::eval::{
    iaa as score_iaa, predictions_to_gold, score_document, EvalError, EvalReport, ReportFormat, StageTriple,
    TokenPrediction,
};
use personlink::linker::{
    CachedSearchClient, CachedTagmeClient, Fixtures, HttpSettings, ResponseCache, SearchClient, TagmeClient,
    TagmeHttpClient, WikiSearchHttpClient,
};
use personlink::mentions::MentionDetector;
use personlink::pipeline::{Linker, Pipeline};

use crate::inputs::{load_gold, load_page, page_titles, stems, Resources};
use crate::{CacheAction, CacheArgs, DetectArgs, EvalArgs, IaaArgs, LinkerArg, ModeArg, ReportArgs, RunArgs};

pub type Diagnostics = Vec<String>;

fn pool(workers: usize) -> Result<rayon::ThreadPool, String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| e.to_string())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn print(text: &str) -> Result<(), String> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| e.to_string())
}

fn pipeline(res: Resources, length_limit: usize) -> Pipeline {
    Pipeline {
        detector: MentionDetector::new(res.titles),
        lexicon: res.lexicon,
        length_limit,
        ..Pipeline::default()
    }
}

/// Splits per-document results into successes and diagnostics, keeping the
/// input (title) order.
fn partition<T>(results: Vec<Result<T, String>>) -> (Vec<T>, Diagnostics) {
    let mut ok = Vec::new();
    let mut diagnostics = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(d) => diagnostics.push(d),
        }
    }
    (ok, diagnostics)
}

fn emit_report(
    system: &str,
    per_document: BTreeMap<String, StageTriple>,
    args: &ReportArgs,
    out: Option<&Path>,
    diagnostics: &mut Diagnostics,
) -> Result<(), String> {
    let format = ReportFormat::from(args.report);
    match EvalReport::build(system, per_document, &args.average.modes()) {
        Ok(report) => {
            let text = format.render(&report);
            if let Some(dir) = out {
                write_file(&dir.join(format!("report.{}", format.extension())), text.as_bytes())?;
            }
            print(&text)
        }
        Err(EvalError::EmptyInput) => {
            diagnostics.push("no documents could be scored".to_string());
            Ok(())
        }
        Err(e) => Err(e.to_string()),
    }
}

pub fn detect(args: &DetectArgs, workers: usize) -> Result<Diagnostics, String> {
    let titles = page_titles(&args.input.corpus)?;
    let pipeline = pipeline(Resources::load(&args.input)?, personlink::linker::DEFAULT_LENGTH_LIMIT);
    let results: Vec<Result<(String, String), String>> = pool(workers)?.install(|| {
        titles
            .par_iter()
            .map(|title| {
                let page = load_page(&args.input, title, false)?;
                let mentions = pipeline
                    .improved_mentions(&page.doc, &page.profile, &page.annotations)
                    .map_err(|e| format!("{title}: {e}"))?;
                let json = serde_json::json!({ "page_title": page.title, "mentions": mentions });
                Ok((page.title, json.to_string()))
            })
            .collect()
    });
    let (docs, diagnostics) = partition(results);
    for (title, json) in docs {
        match &args.out {
            Some(dir) => write_file(
                &dir.join(format!("{title}.mentions.json")),
                format!("{json}\n").as_bytes(),
            )?,
            None => print(&format!("{json}\n"))?,
        }
    }
    Ok(diagnostics)
}

enum Clients {
    Search(Box<dyn SearchClient>),
    Tagme(Box<dyn TagmeClient>),
}

fn clients(args: &RunArgs) -> Result<Clients, String> {
    let wants_search = args.linker == LinkerArg::Wikisearch;
    match args.mode {
        ModeArg::Offline => {
            let dir = args.fixtures.as_ref().ok_or("offline mode requires --fixtures")?;
            let f = Fixtures::load_dir(dir).map_err(|e| e.to_string())?;
            Ok(if wants_search {
                Clients::Search(Box::new(f.search))
            } else {
                Clients::Tagme(Box::new(f.tagme))
            })
        }
        ModeArg::Online => {
            let cache = Arc::new(ResponseCache::open(&args.cache).map_err(|e| e.to_string())?);
            let settings = HttpSettings {
                requests_per_second: args.rps,
                ..HttpSettings::default()
            };
            if wants_search {
                let client = WikiSearchHttpClient::new(&args.wikisearch_url, &settings).map_err(|e| e.to_string())?;
                Ok(Clients::Search(Box::new(CachedSearchClient::new(client, cache))))
            } else {
                let token = std::env::var(TagmeHttpClient::TOKEN_ENV).map_err(|_| {
                    format!(
                        "online TagMe needs the {} environment variable",
                        TagmeHttpClient::TOKEN_ENV
                    )
                })?;
                let client = TagmeHttpClient::new(
                    &args.tagme_url,
                    token,
                    &args.wikisearch_url,
                    &settings,
                    Some(cache.clone()),
                )
                .map_err(|e| e.to_string())?;
                Ok(Clients::Tagme(Box::new(CachedTagmeClient::new(client, cache))))
            }
        }
    }
}

fn check_alignment(
    title: &str,
    gold: &GoldDocument,
    predicted: &[TokenPrediction],
    tokens: &[String],
) -> Result<(), String> {
    if gold.rows.len() != predicted.len() {
        let e = EvalError::LengthMismatch {
            gold: gold.rows.len(),
            predicted: predicted.len(),
        };
        return Err(format!("{title}: {e}"));
    }
    if let Some(i) = gold.rows.iter().zip(tokens).position(|(g, t)| g.token != *t) {
        return Err(format!("{title}: {}", EvalError::TokenMismatch(i)));
    }
    Ok(())
}

pub fn run(args: &RunArgs, workers: usize) -> Result<Diagnostics, String> {
    let titles = page_titles(&args.input.corpus)?;
    let length_limit = usize::try_from(args.length_limit).map_err(|e| e.to_string())?;
    let pipeline = pipeline(Resources::load(&args.input)?, length_limit);
    let clients = clients(args)?;
    let linker = match (&clients, args.linker) {
        (Clients::Search(c), _) => Linker::Wikisearch(c.as_ref()),
        (Clients::Tagme(c), LinkerArg::Baseline) => Linker::Baseline(c.as_ref()),
        (Clients::Tagme(c), _) => Linker::Tagme(c.as_ref()),
    };
    let system = match args.linker {
        LinkerArg::Wikisearch => "wikisearch",
        LinkerArg::Tagme => "tagme",
        LinkerArg::Baseline => "baseline",
    };

    type Scored = (String, Vec<u8>, StageTriple);
    let results: Vec<Result<Scored, String>> = pool(workers)?.install(|| {
        titles
            .par_iter()
            .map(|title| {
                let page = load_page(&args.input, title, true)?;
                let gold = page.gold.as_ref().expect("gold required");
                let out = pipeline
                    .run(&page.doc, &page.profile, &page.annotations, linker)
                    .map_err(|e| format!("{title}: {e}"))?;
                let tokens: Vec<String> = page.doc.tokens.iter().map(|t| t.text.clone()).collect();
                check_alignment(title, gold, &out.predictions, &tokens)?;
                let scores = score_document(gold, &out.predictions).map_err(|e| format!("{title}: {e}"))?;
                let tsv = write_gold_tsv(&predictions_to_gold(&page.doc, &out.predictions))
                    .map_err(|e| format!("{title}: {e}"))?;
                Ok((page.title, tsv, scores))
            })
            .collect()
    });
    let (docs, mut diagnostics) = partition(results);
    let mut per_document = BTreeMap::new();
    for (title, tsv, scores) in docs {
        if let Some(dir) = &args.out {
            write_file(&dir.join("predictions").join(format!("{title}.tsv")), &tsv)?;
        }
        per_document.insert(title, scores);
    }
    emit_report(
        system,
        per_document,
        &args.report,
        args.out.as_deref(),
        &mut diagnostics,
    )?;
    Ok(diagnostics)
}

/// Scores every `<Title>.tsv` of `reference` against its namesake in
/// `other`.
fn score_dirs(
    reference: &Path,
    other: &Path,
    workers: usize,
    score: impl Fn(&GoldDocument, &GoldDocument) -> Result<StageTriple, EvalError> + Sync,
) -> Result<(BTreeMap<String, StageTriple>, Diagnostics), String> {
    let titles: Vec<String> = stems(reference, "tsv")?.into_iter().collect();
    if titles.is_empty() {
        return Err(format!("{}: no documents found", reference.display()));
    }
    let results: Vec<Result<(String, StageTriple), String>> = pool(workers)?.install(|| {
        titles
            .par_iter()
            .map(|title| {
                let a = load_gold(&reference.join(format!("{title}.tsv")))?;
                let b_path = other.join(format!("{title}.tsv"));
                if !b_path.is_file() {
                    return Err(format!("{title}: missing {}", b_path.display()));
                }
                let b = load_gold(&b_path)?;
                let scores = score(&a, &b).map_err(|e| format!("{title}: {e}"))?;
                Ok((title.clone(), scores))
            })
            .collect()
    });
    let (docs, diagnostics) = partition(results);
    Ok((docs.into_iter().collect(), diagnostics))
}

pub fn eval(args: &EvalArgs, workers: usize) -> Result<Diagnostics, String> {
    let (per_document, mut diagnostics) = score_dirs(&args.gold, &args.pred, workers, |gold, pred| {
        let predicted: Vec<TokenPrediction> = pred.rows.iter().map(TokenPrediction::from).collect();
        score_document(gold, &predicted)
    })?;
    emit_report("eval", per_document, &args.report, None, &mut diagnostics)?;
    Ok(diagnostics)
}

pub fn iaa(args: &IaaArgs, workers: usize) -> Result<Diagnostics, String> {
    let (per_document, mut diagnostics) = score_dirs(&args.gold_a, &args.gold_b, workers, score_iaa)?;
    emit_report("iaa", per_document, &args.report, None, &mut diagnostics)?;
    Ok(diagnostics)
}

pub fn cache(args: &CacheArgs) -> Result<Diagnostics, String> {
    let cache = ResponseCache::open(&args.cache).map_err(|e| e.to_string())?;
    match args.action {
        CacheAction::List => {
            let mut text = String::new();
            for key in cache.keys() {
                text.push_str(&key.escape_debug().to_string());
                text.push('\n');
            }
            print(&text)?;
        }
        CacheAction::Clear => cache.clear().map_err(|e| e.to_string())?,
        CacheAction::Stats => {
            let json = serde_json::to_string(&cache.stats()).map_err(|e| e.to_string())?;
            print(&format!("{json}\n"))?;
        }
    }
    Ok(Vec::new())
}
