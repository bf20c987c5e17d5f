use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{read_to_string, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    News,
    Analysis,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::News, Category::Analysis];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::News => "news",
            Category::Analysis => "analysis",
        }
    }
}

/// Optional per-document scores produced upstream (sentiment model,
/// classifier, polarity/subjectivity scorer).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentScores {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subjectivity: Option<f64>,
}

impl DocumentScores {
    pub fn is_empty(&self) -> bool {
        self.sentiment.is_none()
            && self.class_prob.is_none()
            && self.polarity.is_none()
            && self.subjectivity.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: Option<f64>, lo: f64, hi: f64| match v {
            Some(x) if !(lo..=hi).contains(&x) => Err(Error::invalid(format!(
                "{name} score {x} outside [{lo}, {hi}]"
            ))),
            _ => Ok(()),
        };
        check("sentiment", self.sentiment, -1.0, 1.0)?;
        check("class_prob", self.class_prob, 0.0, 1.0)?;
        check("polarity", self.polarity, -1.0, 1.0)?;
        check("subjectivity", self.subjectivity, 0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub date: NaiveDate,
    pub category: Category,
    pub text: String,
    #[serde(default, skip_serializing_if = "DocumentScores::is_empty")]
    pub scores: DocumentScores,
}

pub fn parse_documents_jsonl(text: &str, source: &Path) -> Result<Vec<DocumentRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: source.to_path_buf(),
            line: i as u64 + 1,
            message,
        };
        let doc: DocumentRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        doc.scores.validate().map_err(|e| parse_err(e.to_string()))?;
        out.push(doc);
    }
    Ok(out)
}

pub fn load_documents_jsonl(path: &Path) -> Result<Vec<DocumentRecord>> {
    parse_documents_jsonl(&read_to_string(path)?, path)
}

pub fn write_documents_jsonl(docs: &[DocumentRecord], path: &Path) -> Result<()> {
    let mut buf = String::new();
    for d in docs {
        buf.push_str(&serde_json::to_string(d)?);
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_scores() {
        let text = r#"{"date":"2024-01-02","category":"news","text":"ECB holds rates"}
{"date":"2024-01-03","category":"analysis","text":"support at 1.08","scores":{"sentiment":-0.4,"class_prob":0.7}}
"#;
        let docs = parse_documents_jsonl(text, Path::new("d.jsonl")).unwrap();
        assert_eq!(docs.len(), 2);
        assert!(docs[0].scores.is_empty());
        assert_eq!(docs[1].category, Category::Analysis);
        assert_eq!(docs[1].scores.sentiment, Some(-0.4));
    }

    #[test]
    fn out_of_range_score_names_line() {
        let text = r#"{"date":"2024-01-02","category":"news","text":"x","scores":{"sentiment":1.5}}"#;
        let err = parse_documents_jsonl(text, Path::new("d.jsonl")).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("sentiment"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_category_is_rejected() {
        let text = r#"{"date":"2024-01-02","category":"blog","text":"x"}"#;
        assert!(parse_documents_jsonl(text, Path::new("d.jsonl")).is_err());
    }
}
