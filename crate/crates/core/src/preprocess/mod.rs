//! Raw text to bag-of-words documents.
//!
//! The stages run in this order: [`tokenize`], phrase merging
//! ([`fit_phrases`] / [`apply_phrases`]), [`lemmatize`], vocabulary pruning
//! ([`build_vocab`]) and the minimum-length filter ([`to_bow`]).
//! [`prepare_corpus`] chains them over a whole corpus.

mod lemma;
mod phrases;
mod tokenize;
mod vocab;

pub use lemma::{lemmatize, Lemmatizer, SuffixAction, SuffixRule};
pub use phrases::{apply_phrases, fit_phrases, PairStats, PhraseModel};
pub use tokenize::{tokenize, Stopwords};
pub use vocab::{build_vocab, to_bow, BowDoc, Vocabulary};

use serde::{Deserialize, Serialize};

use crate::Result;

/// A document as an ordered list of cleaned tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

impl TokenDoc {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenDoc {
            doc_id: doc_id.into(),
            tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub phrase_min_count: u64,
    pub phrase_threshold: f64,
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub min_doc_len: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            phrase_min_count: 20,
            phrase_threshold: 10.0,
            min_df: 2,
            max_df_ratio: 0.9,
            min_doc_len: 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub phrases: PhraseModel,
    pub vocab: Vocabulary,
    /// One entry per input document, in input order; `None` when the
    /// document fell below the minimum length.
    pub bows: Vec<Option<BowDoc>>,
}

impl PreparedCorpus {
    pub fn rejected(&self) -> usize {
        self.bows.iter().filter(|b| b.is_none()).count()
    }
}

/// Tokenizes, lemmatizes and merges phrases for a single text, given an
/// already fitted phrase model.
pub fn clean_tokens(text: &str, stopwords: &Stopwords, phrases: &PhraseModel, lemmatizer: &Lemmatizer) -> Vec<String> {
    let doc = TokenDoc::new("", tokenize(text, stopwords));
    finish_tokens(apply_phrases(phrases, &doc).tokens, stopwords, lemmatizer)
}

fn finish_tokens(tokens: Vec<String>, stopwords: &Stopwords, lemmatizer: &Lemmatizer) -> Vec<String> {
    tokens
        .into_iter()
        .map(|t| lemmatize(&t, lemmatizer))
        .filter(|t| t.len() > 1 && !stopwords.contains(t))
        .collect()
}

/// Runs the full preprocessing chain over `(doc_id, text)` pairs. Phrases
/// and the vocabulary are fit on the whole input.
pub fn prepare_corpus<'a, I>(
    docs: I,
    stopwords: &Stopwords,
    lemmatizer: &Lemmatizer,
    cfg: &PreprocessConfig,
) -> Result<PreparedCorpus>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let token_docs: Vec<TokenDoc> = docs
        .into_iter()
        .map(|(id, text)| TokenDoc::new(id, tokenize(text, stopwords)))
        .collect();
    let phrases = fit_phrases(&token_docs, cfg.phrase_min_count, cfg.phrase_threshold)?;
    let token_docs: Vec<TokenDoc> = token_docs
        .iter()
        .map(|d| {
            let merged = apply_phrases(&phrases, d);
            TokenDoc::new(merged.doc_id, finish_tokens(merged.tokens, stopwords, lemmatizer))
        })
        .collect();
    let vocab = build_vocab(&token_docs, cfg.min_df, cfg.max_df_ratio)?;
    let bows = token_docs.iter().map(|d| to_bow(d, &vocab, cfg.min_doc_len)).collect();
    Ok(PreparedCorpus { phrases, vocab, bows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_merges_lemmatizes_and_filters() {
        let mut texts: Vec<(String, String)> = Vec::new();
        let verbs = ["protect", "defend", "respect", "support", "honour"];
        let nouns = ["cases", "deaths", "tests", "patients", "nurses"];
        let trends = ["rising", "falling", "growing", "climbing", "dropping"];
        for i in 0..30 {
            let text = format!(
                "{} human rights during lockdown: {} {} quickly today",
                verbs[i % 5],
                nouns[i % 5],
                trends[(i / 5) % 5]
            );
            texts.push((format!("d{i}"), text));
        }
        texts.push(("short".into(), "human rights".into()));
        let cfg = PreprocessConfig {
            phrase_min_count: 10,
            phrase_threshold: 1.0,
            min_df: 1,
            max_df_ratio: 1.0,
            ..Default::default()
        };
        let prepared = prepare_corpus(
            texts.iter().map(|(a, b)| (a.as_str(), b.as_str())),
            &Stopwords::bundled(),
            &Lemmatizer::default(),
            &cfg,
        )
        .unwrap();
        assert!(prepared.vocab.id("human_right").is_some());
        assert!(prepared.vocab.id("case").is_some());
        assert!(prepared.vocab.id("rise").is_some());
        assert!(prepared.vocab.id("drop").is_some());
        assert!(prepared.vocab.id("human").is_none());
        assert_eq!(prepared.rejected(), 1);
        assert!(prepared.bows.last().unwrap().is_none());
    }
}
