use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{EvalReport, Stage, StageTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Json,
    Tsv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Text => "txt",
            ReportFormat::Json => "json",
            ReportFormat::Tsv => "tsv",
        }
    }

    pub fn render(self, report: &EvalReport) -> String {
        match self {
            ReportFormat::Text => render_text(report),
            ReportFormat::Json => render_json(report),
            ReportFormat::Tsv => render_tsv(report),
        }
    }
}

fn stage_label(stage: Stage) -> &'static str {
    match stage {
        Stage::Ner => "ner",
        Stage::Mention => "mention",
        Stage::Linking => "linking",
    }
}

fn blocks(report: &EvalReport) -> Vec<(&'static str, &StageTriple)> {
    let mut out = Vec::new();
    if let Some(t) = &report.aggregate_micro {
        out.push(("micro", t));
    }
    if let Some(t) = &report.aggregate_macro {
        out.push(("macro", t));
    }
    out
}

type Metric = fn(&super::StageScores) -> f64;

fn write_table(out: &mut String, label: &str, t: &StageTriple) {
    let _ = writeln!(out, "{label}");
    let rows: [(&str, Metric); 3] = [("P", |s| s.precision), ("R", |s| s.recall), ("F", |s| s.f1)];
    for (name, get) in rows {
        let _ = writeln!(
            out,
            "  {name:<3}{:>8.1}{:>20.1}{:>17.1}",
            get(&t.ner) * 100.0,
            get(&t.mention) * 100.0,
            get(&t.linking) * 100.0
        );
    }
}

/// Percentages with one decimal, rows P/R/F, columns per stage.
pub fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "system: {}", report.system);
    let _ = writeln!(out, "documents: {}", report.per_document.len());
    let _ = writeln!(
        out,
        "{:<5}{:>8}{:>20}{:>17}",
        "", "NER", "Mention Detection", "Entity Linking"
    );
    for (label, t) in blocks(report) {
        write_table(&mut out, &format!("{} ({label})", report.system), t);
    }
    out.push('\n');
    for (title, t) in &report.per_document {
        write_table(&mut out, title, t);
    }
    out
}

pub fn render_json(report: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// One row per (scope, stage) with raw counts and unrounded scores.
pub fn render_tsv(report: &EvalReport) -> String {
    let mut out = String::from("system\tscope\tstage\ttp\tfp\tfn\tprecision\trecall\tf1\n");
    let scoped = blocks(report)
        .into_iter()
        .map(|(l, t)| (l.to_string(), t))
        .chain(report.per_document.iter().map(|(k, t)| (format!("doc:{k}"), t)));
    for (scope, t) in scoped {
        for stage in Stage::ALL {
            let s = t.get(stage);
            let _ = writeln!(
                out,
                "{}\t{scope}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                report.system,
                stage_label(stage),
                s.tp,
                s.fp,
                s.fn_,
                s.precision,
                s.recall,
                s.f1
            );
        }
    }
    out
}
