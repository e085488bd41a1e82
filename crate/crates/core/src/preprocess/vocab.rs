use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::TokenDoc;
use crate::{Error, Result};

/// Dense token ids, assigned in lexicographic token order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    id_of: HashMap<String, usize>,
    tokens: Vec<String>,
    df: Vec<usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, df)` pairs already sorted by token.
    pub fn from_sorted(entries: Vec<(String, usize)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput(
                "vocabulary tokens must be unique and sorted".into(),
            ));
        }
        let (tokens, df): (Vec<String>, Vec<usize>) = entries.into_iter().unzip();
        let id_of = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary { id_of, tokens, df })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.id_of.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn df(&self, id: usize) -> usize {
        self.df[id]
    }

    /// CSV `id,token,df`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "token", "df"])?;
        for (i, (t, df)) in self.tokens.iter().zip(&self.df).enumerate() {
            w.write_record([i.to_string(), t.clone(), df.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut entries = Vec::new();
        for (expected, row) in r.records().enumerate() {
            let row = row.map_err(|e| Error::InvalidInput(format!("vocabulary csv: {e}")))?;
            let bad = || Error::InvalidInput(format!("vocabulary csv: bad row {}", expected + 1));
            let id: usize = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let token = row.get(1).ok_or_else(bad)?.to_owned();
            let df: usize = row.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if id != expected {
                return Err(bad());
            }
            entries.push((token, df));
        }
        Self::from_sorted(entries)
    }
}

/// Keeps tokens whose document frequency lies in
/// `[min_df, max_df_ratio * docs.len()]`.
pub fn build_vocab(docs: &[TokenDoc], min_df: usize, max_df_ratio: f64) -> Result<Vocabulary> {
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "max_df_ratio must lie in (0, 1], got {max_df_ratio}"
        )));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let max_df = max_df_ratio * docs.len() as f64;
    let candidates = df.len();
    let kept: Vec<(String, usize)> = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df && n as f64 <= max_df)
        .map(|(t, n)| (t.to_owned(), n))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary {
            candidates,
            min_df,
            max_df_ratio,
        });
    }
    Vocabulary::from_sorted(kept)
}

/// A document as sparse word counts, word ids strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowDoc {
    pub doc_id: String,
    pub counts: Vec<(usize, u32)>,
}

impl BowDoc {
    /// Builds from raw word ids in any order.
    pub fn from_word_ids(doc_id: impl Into<String>, ids: impl IntoIterator<Item = usize>) -> Self {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for id in ids {
            *counts.entry(id).or_default() += 1;
        }
        BowDoc {
            doc_id: doc_id.into(),
            counts: counts.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().map(|&(_, c)| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn contains(&self, word: usize) -> bool {
        self.counts.binary_search_by_key(&word, |&(w, _)| w).is_ok()
    }
}

/// Drops out-of-vocabulary tokens; `None` when fewer than `min_len` remain.
pub fn to_bow(doc: &TokenDoc, vocab: &Vocabulary, min_len: usize) -> Option<BowDoc> {
    let ids: Vec<usize> = doc.tokens.iter().filter_map(|t| vocab.id(t)).collect();
    if ids.len() < min_len {
        return None;
    }
    Some(BowDoc::from_word_ids(doc.doc_id.clone(), ids))
}
