use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Category, DocumentRecord};
use crate::io_util::read_to_string;

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    /// One token per line; blank lines ignored.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizeOptions {
    pub min_len: usize,
    pub min_doc_freq: usize,
}

impl Default for TokenizeOptions {
    fn default() -> Self {
        Self {
            min_len: 2,
            min_doc_freq: 2,
        }
    }
}

/// Lowercased alphabetic runs of at least `min_len` chars that are not
/// stopwords. Punctuation, digits and other symbols split tokens.
pub fn tokenize_text(text: &str, stopwords: &Stopwords, min_len: usize) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= min_len && !stopwords.contains(t))
        .collect()
}

/// Integer-coded corpus, one entry per input document (documents may end up
/// empty). Vocabulary ids follow lexicographic token order.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedCorpus {
    pub vocabulary: Vec<String>,
    pub index: HashMap<String, usize>,
    pub docs: Vec<Vec<usize>>,
    pub doc_dates: Vec<NaiveDate>,
    pub doc_categories: Vec<Category>,
}

impl TokenizedCorpus {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Builds a corpus directly from token-id documents (synthetic tests).
    pub fn from_ids(
        vocabulary: Vec<String>,
        docs: Vec<Vec<usize>>,
        doc_dates: Vec<NaiveDate>,
        doc_categories: Vec<Category>,
    ) -> Result<Self> {
        let v = vocabulary.len();
        if docs.iter().flatten().any(|&w| w >= v) {
            return Err(Error::invalid("token id outside vocabulary"));
        }
        if doc_dates.len() != docs.len() || doc_categories.len() != docs.len() {
            return Err(Error::Shape("dates/categories must match document count".into()));
        }
        let index = vocabulary.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Self {
            vocabulary,
            index,
            docs,
            doc_dates,
            doc_categories,
        })
    }
}

pub fn tokenize(
    docs: &[DocumentRecord],
    stopwords: &Stopwords,
    opts: TokenizeOptions,
) -> Result<TokenizedCorpus> {
    let tokenized: Vec<Vec<String>> = docs
        .iter()
        .map(|d| tokenize_text(&d.text, stopwords, opts.min_len))
        .collect();
    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for toks in &tokenized {
        let distinct: BTreeSet<&str> = toks.iter().map(String::as_str).collect();
        for t in distinct {
            *doc_freq.entry(t).or_default() += 1;
        }
    }
    let vocabulary: Vec<String> = doc_freq
        .iter()
        .filter(|(_, &n)| n >= opts.min_doc_freq)
        .map(|(t, _)| t.to_string())
        .collect();
    let index: HashMap<String, usize> = vocabulary.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let ids: Vec<Vec<usize>> = tokenized
        .iter()
        .map(|toks| toks.iter().filter_map(|t| index.get(t).copied()).collect())
        .collect();
    if ids.iter().all(Vec::is_empty) {
        return Err(Error::invalid("every document is empty after token filtering"));
    }
    Ok(TokenizedCorpus {
        vocabulary,
        index,
        docs: ids,
        doc_dates: docs.iter().map(|d| d.date).collect(),
        doc_categories: docs.iter().map(|d| d.category).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DocumentScores;

    fn doc(text: &str) -> DocumentRecord {
        DocumentRecord {
            date: NaiveDate::from_ymd_opt(2024, 1, 2).unwrap(),
            category: Category::News,
            text: text.into(),
            scores: DocumentScores::default(),
        }
    }

    #[test]
    fn text_rules() {
        let sw = Stopwords::bundled();
        assert_eq!(tokenize_text("The EUR is at support!", &sw, 2), vec!["eur", "support"]);
        assert!(tokenize_text("the is at of and", &sw, 2).is_empty());
        assert!(tokenize_text("a", &Stopwords::default(), 2).is_empty());
        assert_eq!(tokenize_text("EUR/USD 1.08-level", &sw, 2), vec!["eur", "usd", "level"]);
    }

    #[test]
    fn vocabulary_respects_doc_freq() {
        let sw = Stopwords::bundled();
        let docs = [doc("ecb rate hike"), doc("ecb holds rate"), doc("fed")];
        let c = tokenize(&docs, &sw, TokenizeOptions::default()).unwrap();
        assert_eq!(c.vocabulary, vec!["ecb", "rate"]);
        assert_eq!(c.docs[0], vec![0, 1]);
        assert!(c.docs[2].is_empty());
        for w in c.docs.iter().flatten() {
            assert!(*w < c.vocab_size());
        }
    }

    #[test]
    fn all_empty_is_error() {
        let sw = Stopwords::bundled();
        let docs = [doc("the"), doc("is at")];
        assert!(tokenize(&docs, &sw, TokenizeOptions::default()).is_err());
    }

    #[test]
    fn deterministic() {
        let sw = Stopwords::bundled();
        let docs = [doc("zeta alpha beta"), doc("beta zeta gamma alpha")];
        let a = tokenize(&docs, &sw, TokenizeOptions::default()).unwrap();
        let b = tokenize(&docs, &sw, TokenizeOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.vocabulary, vec!["alpha", "beta", "zeta"]);
    }
}
