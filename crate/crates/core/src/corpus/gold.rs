use thiserror::Error;

use super::{GoldDocument, GoldRow};

const HEADER_PREFIX: &str = "#doc ";

/// Errors raised while reading or writing the gold TSV format. Line numbers
/// are 1-based and count the header line.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GoldError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("missing `#doc <title>` header")]
    MissingDocHeader,
    #[error("line {0}: expected 4 tab-separated columns")]
    WrongColumnCount(usize),
    #[error("line {line}: illegal flag {value:?}, expected \"Y\" or empty")]
    IllegalFlag { line: usize, value: String },
    #[error("line {0}: link present but mention flag is not set")]
    LinkWithoutMention(usize),
    #[error("line {0}: name flag set but mention flag is not set")]
    NameWithoutMention(usize),
    #[error("line {0}: empty token")]
    EmptyToken(usize),
    #[error("invalid gold document: {0}")]
    InvariantViolation(String),
}

fn parse_flag(value: &str, line: usize) -> Result<bool, GoldError> {
    match value {
        "Y" => Ok(true),
        "" => Ok(false),
        other => Err(GoldError::IllegalFlag {
            line,
            value: other.to_string(),
        }),
    }
}

pub fn parse_gold_tsv(bytes: &[u8]) -> Result<GoldDocument, GoldError> {
    let text = std::str::from_utf8(bytes).map_err(|_| GoldError::NotUtf8)?;
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));

    let page_title = lines
        .next()
        .and_then(|h| h.strip_prefix(HEADER_PREFIX))
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or(GoldError::MissingDocHeader)?
        .to_string();

    let mut rows = Vec::new();
    let mut sentence_breaks = Vec::new();
    let mut pending_break = false;
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        if line.is_empty() {
            pending_break = !rows.is_empty();
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [token, name, mention, link] = fields[..] else {
            return Err(GoldError::WrongColumnCount(lineno));
        };
        if token.is_empty() {
            return Err(GoldError::EmptyToken(lineno));
        }
        let is_name = parse_flag(name, lineno)?;
        let is_mention = parse_flag(mention, lineno)?;
        if is_name && !is_mention {
            return Err(GoldError::NameWithoutMention(lineno));
        }
        let link = (!link.is_empty()).then(|| link.to_string());
        if link.is_some() && !is_mention {
            return Err(GoldError::LinkWithoutMention(lineno));
        }
        if pending_break {
            sentence_breaks.push(rows.len());
            pending_break = false;
        }
        rows.push(GoldRow {
            token: token.to_string(),
            is_name,
            is_mention,
            link,
        });
    }

    Ok(GoldDocument {
        page_title,
        rows,
        sentence_breaks,
    })
}

pub fn write_gold_tsv(doc: &GoldDocument) -> Result<Vec<u8>, GoldError> {
    doc.validate().map_err(GoldError::InvariantViolation)?;
    let flag = |b: bool| if b { "Y" } else { "" };
    let mut out = String::new();
    out.push_str(HEADER_PREFIX);
    out.push_str(&doc.page_title);
    out.push('\n');
    let mut breaks = doc.sentence_breaks.iter().peekable();
    for (i, row) in doc.rows.iter().enumerate() {
        if breaks.next_if(|&&b| b == i).is_some() {
            out.push('\n');
        }
        out.push_str(&row.token);
        out.push('\t');
        out.push_str(flag(row.is_name));
        out.push('\t');
        out.push_str(flag(row.is_mention));
        out.push('\t');
        out.push_str(row.link.as_deref().unwrap_or(""));
        out.push('\n');
    }
    Ok(out.into_bytes())
}
