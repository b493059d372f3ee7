//! Labeled document corpora in JSONL or CSV form.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Label = u8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<Label>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            label,
        }
    }

    pub fn labeled(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        Document::new(id, text, Some(label))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Some(CorpusFormat::Jsonl),
            "csv" => Some(CorpusFormat::Csv),
            _ => None,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::Config(format!("unknown corpus format `{other}`"))),
        }
    }
}

/// Column names and label handling for corpus ingestion.
#[derive(Debug, Clone, Serialize)]
pub struct IngestOptions {
    pub id_column: String,
    pub text_column: String,
    pub label_column: String,
    pub require_label: bool,
    /// When set, a label equal to this string is 1 and anything else 0
    /// (e.g. `spam` or `positive` for the Kaggle corpora).
    pub positive_label: Option<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            id_column: "id".into(),
            text_column: "text".into(),
            label_column: "label".into(),
            require_label: true,
            positive_label: None,
        }
    }
}

fn coerce_label(raw: &str, opts: &IngestOptions) -> std::result::Result<Label, String> {
    let raw = raw.trim();
    if let Some(pos) = &opts.positive_label {
        return Ok(u8::from(raw == pos));
    }
    match raw.to_ascii_lowercase().as_str() {
        "0" | "false" => return Ok(0),
        "1" | "true" => return Ok(1),
        _ => {}
    }
    match raw.parse::<f64>() {
        Ok(0.0) => Ok(0),
        Ok(1.0) => Ok(1),
        _ => Err(format!("non-binary label `{raw}`")),
    }
}

fn json_label(v: &serde_json::Value, opts: &IngestOptions) -> std::result::Result<Label, String> {
    match v {
        serde_json::Value::Bool(b) => Ok(u8::from(*b)),
        serde_json::Value::Number(n) => coerce_label(&n.to_string(), opts),
        serde_json::Value::String(s) => coerce_label(s, opts),
        other => Err(format!("non-binary label `{other}`")),
    }
}

fn json_id(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

pub fn ingest_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    opts: &IngestOptions,
) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Jsonl => parse_jsonl(&text, opts),
        CorpusFormat::Csv => parse_csv(&text, opts),
    }
}

pub fn parse_jsonl(text: &str, opts: &IngestOptions) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::Corpus(format!("line {row}: {e}")))?;
        let field = |name: &str| value.get(name).filter(|v| !v.is_null());
        let missing = |name: &str| Error::Corpus(format!("line {row}: missing `{name}`"));
        let id = field(&opts.id_column)
            .and_then(json_id)
            .ok_or_else(|| missing(&opts.id_column))?;
        let body = field(&opts.text_column)
            .and_then(|v| v.as_str())
            .ok_or_else(|| missing(&opts.text_column))?
            .to_string();
        let label = match field(&opts.label_column) {
            Some(v) => Some(
                json_label(v, opts).map_err(|e| Error::Corpus(format!("line {row}: {e}")))?,
            ),
            None if opts.require_label => return Err(missing(&opts.label_column)),
            None => None,
        };
        docs.push(Document::new(id, body, label));
    }
    finish(docs)
}

pub fn parse_csv(text: &str, opts: &IngestOptions) -> Result<Vec<Document>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let missing = |name: &str| Error::Corpus(format!("missing column `{name}`"));
    let id_col = column(&opts.id_column).ok_or_else(|| missing(&opts.id_column))?;
    let text_col = column(&opts.text_column).ok_or_else(|| missing(&opts.text_column))?;
    let label_col = column(&opts.label_column);
    if label_col.is_none() && opts.require_label {
        return Err(missing(&opts.label_column));
    }
    let mut docs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // Header is line 1.
        let row = i + 2;
        let get = |c: usize| record.get(c).unwrap_or("");
        let label = match label_col {
            Some(c) => Some(
                coerce_label(get(c), opts)
                    .map_err(|e| Error::Corpus(format!("row {row}: {e}")))?,
            ),
            None => None,
        };
        docs.push(Document::new(get(id_col), get(text_col), label));
    }
    finish(docs)
}

fn finish(docs: Vec<Document>) -> Result<Vec<Document>> {
    if docs.is_empty() {
        return Err(Error::Corpus("corpus is empty".into()));
    }
    let mut seen = HashSet::new();
    for d in &docs {
        if !seen.insert(d.id.as_str()) {
            return Err(Error::Corpus(format!("duplicate id `{}`", d.id)));
        }
        if d.text.trim().is_empty() {
            return Err(Error::Corpus(format!("document `{}` has empty text", d.id)));
        }
    }
    Ok(docs)
}

/// Deterministic shuffled split into `(train, test)`.
pub fn split_corpus(docs: &[Document], train_ratio: f64, seed: u64) -> Result<(Vec<Document>, Vec<Document>)> {
    use rand::seq::SliceRandom;
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::Config(format!(
            "split ratio must lie in (0, 1), got {train_ratio}"
        )));
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut crate::seed::rng_for(seed, "split"));
    let n_train = ((docs.len() as f64) * train_ratio).round() as usize;
    let n_train = n_train.clamp(1.min(docs.len()), docs.len().saturating_sub(1).max(1));
    let pick = |ids: &[usize]| {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids.into_iter().map(|i| docs[i].clone()).collect::<Vec<_>>()
    };
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_three_docs() {
        let text = r#"{"id": "a", "text": "he is fine", "label": 1}
{"id": "b", "text": "she is fine", "label": 0}
{"id": 3, "text": "ok", "label": true}
"#;
        let docs = parse_jsonl(text, &IngestOptions::default()).unwrap();
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[2].id, "3");
        assert_eq!(docs[2].label, Some(1));
    }

    #[test]
    fn csv_non_binary_label_names_row() {
        let text = "id,text,label\na,hello,1\nb,world,2\n";
        let err = parse_csv(text, &IngestOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3") && msg.contains("non-binary"), "{msg}");
    }

    #[test]
    fn duplicate_ids_and_empty_files() {
        let text = "id,text,label\na,x,1\na,y,0\n";
        assert!(parse_csv(text, &IngestOptions::default())
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        assert!(parse_jsonl("\n", &IngestOptions::default()).is_err());
        assert!(parse_csv("id,text,label\n", &IngestOptions::default()).is_err());
    }

    #[test]
    fn missing_columns() {
        let err = parse_csv("id,body\n1,x\n", &IngestOptions::default()).unwrap_err();
        assert!(err.to_string().contains("`text`"));
        let opts = IngestOptions {
            require_label: false,
            ..Default::default()
        };
        let docs = parse_csv("id,text\n1,x\n", &opts).unwrap();
        assert_eq!(docs[0].label, None);
    }

    #[test]
    fn positive_label_mapping() {
        let opts = IngestOptions {
            id_column: "id".into(),
            text_column: "review".into(),
            label_column: "sentiment".into(),
            require_label: true,
            positive_label: Some("positive".into()),
        };
        let docs = parse_csv(
            "id,review,sentiment\n1,great,positive\n2,awful,negative\n",
            &opts,
        )
        .unwrap();
        assert_eq!(docs[0].label, Some(1));
        assert_eq!(docs[1].label, Some(0));
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let docs: Vec<_> = (0..50)
            .map(|i| Document::labeled(i.to_string(), "x", (i % 2) as u8))
            .collect();
        let (a, b) = split_corpus(&docs, 0.8, 42).unwrap();
        assert_eq!((a.len(), b.len()), (40, 10));
        let (a2, _) = split_corpus(&docs, 0.8, 42).unwrap();
        assert_eq!(a, a2);
        assert!(a.iter().all(|d| !b.iter().any(|e| e.id == d.id)));
        assert!(split_corpus(&docs, 1.0, 1).is_err());
    }
}
