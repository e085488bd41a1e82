use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::TokenDoc;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub count: u64,
    pub score: f64,
}

/// Adjacent-pair collocation table.
///
/// A pair `(a, b)` seen `n_ab` times scores
/// `(n_ab - min_count) * total / (n_a * n_b)`; pairs scoring above the
/// threshold are merged into a single `a_b` token. Only pairs seen at
/// least `min_count` times are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseModel {
    pub pairs: BTreeMap<(String, String), PairStats>,
    pub threshold: f64,
    pub min_count: u64,
    pub total_tokens: u64,
}

impl PhraseModel {
    pub fn empty(min_count: u64, threshold: f64) -> Self {
        PhraseModel {
            pairs: BTreeMap::new(),
            threshold,
            min_count,
            total_tokens: 0,
        }
    }

    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        // BTreeMap lookup needs owned keys; the table is small enough.
        self.pairs.get(&(a.to_owned(), b.to_owned())).map(|s| s.score)
    }

    pub fn is_phrase(&self, a: &str, b: &str) -> bool {
        self.score(a, b).is_some_and(|s| s > self.threshold)
    }

    /// Pairs that will be merged, in lexicographic order.
    pub fn phrases(&self) -> impl Iterator<Item = (&str, &str, &PairStats)> {
        self.pairs
            .iter()
            .filter(|(_, s)| s.score > self.threshold)
            .map(|((a, b), s)| (a.as_str(), b.as_str(), s))
    }
}

pub fn fit_phrases(docs: &[TokenDoc], min_count: u64, threshold: f64) -> Result<PhraseModel> {
    if min_count < 1 {
        return Err(Error::InvalidConfig("phrase min_count must be at least 1".into()));
    }
    let mut unigrams: HashMap<&str, u64> = HashMap::new();
    let mut bigrams: HashMap<(&str, &str), u64> = HashMap::new();
    let mut total = 0u64;
    for doc in docs {
        for t in &doc.tokens {
            *unigrams.entry(t.as_str()).or_default() += 1;
        }
        total += doc.tokens.len() as u64;
        for w in doc.tokens.windows(2) {
            *bigrams.entry((w[0].as_str(), w[1].as_str())).or_default() += 1;
        }
    }

    let pairs = bigrams
        .into_iter()
        .filter(|&(_, n)| n >= min_count)
        .map(|((a, b), n)| {
            let score = (n - min_count) as f64 * total as f64 / (unigrams[a] as f64 * unigrams[b] as f64);
            ((a.to_owned(), b.to_owned()), PairStats { count: n, score })
        })
        .collect();
    Ok(PhraseModel {
        pairs,
        threshold,
        min_count,
        total_tokens: total,
    })
}

/// One greedy left-to-right pass; a merged token never joins a third.
pub fn apply_phrases(model: &PhraseModel, doc: &TokenDoc) -> TokenDoc {
    let toks = &doc.tokens;
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    while i < toks.len() {
        if i + 1 < toks.len() && model.is_phrase(&toks[i], &toks[i + 1]) {
            out.push(format!("{}_{}", toks[i], toks[i + 1]));
            i += 2;
        } else {
            out.push(toks[i].clone());
            i += 1;
        }
    }
    TokenDoc::new(doc.doc_id.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tokens: &str) -> TokenDoc {
        TokenDoc::new("d", tokens.split_whitespace().map(String::from).collect())
    }

    fn rights_corpus() -> Vec<TokenDoc> {
        let mut docs = Vec::new();
        for i in 0..50 {
            let filler = ["protest", "court", "law", "vote", "march"][i % 5];
            docs.push(doc(&format!("{filler} human rights {filler}")));
        }
        docs
    }

    #[test]
    fn frequent_pair_scores_by_count_ratio() {
        let docs = rights_corpus();
        let model = fit_phrases(&docs, 5, 10.0).unwrap();
        // Brute-force recount over the constructed corpus.
        let total: u64 = docs.iter().map(|d| d.tokens.len() as u64).sum();
        let count = |w: &str| docs.iter().flat_map(|d| &d.tokens).filter(|t| *t == w).count() as f64;
        let joint = docs
            .iter()
            .flat_map(|d| d.tokens.windows(2))
            .filter(|w| w[0] == "human" && w[1] == "rights")
            .count() as f64;
        assert_eq!(joint, 50.0);
        let expected = (joint - 5.0) * total as f64 / (count("human") * count("rights"));
        let got = model.score("human", "rights").unwrap();
        assert!(got > 0.0);
        assert_eq!(got, expected);
        // 45 * 200 / (50 * 50) = 3.6
        assert!(!model.is_phrase("human", "rights"));
        let loose = fit_phrases(&docs, 5, 3.0).unwrap();
        assert!(loose.is_phrase("human", "rights"));
    }

    #[test]
    fn rare_pair_absent() {
        // ("protest", "human") occurs 10 times, ("human", "rights") 50 times.
        let model = fit_phrases(&rights_corpus(), 5, 0.0).unwrap();
        assert_eq!(model.pairs[&("protest".to_string(), "human".to_string())].count, 10);
        let model = fit_phrases(&rights_corpus(), 11, 0.0).unwrap();
        assert!(model.score("protest", "human").is_none());
        assert!(model.score("human", "rights").is_some());
    }

    #[test]
    fn single_token_docs_have_no_pairs() {
        let docs = vec![doc("alpha"), doc("beta"), doc("alpha")];
        let model = fit_phrases(&docs, 1, 0.0).unwrap();
        assert!(model.pairs.is_empty());
        assert!(fit_phrases(&[], 1, 0.0).unwrap().pairs.is_empty());
    }

    #[test]
    fn zero_min_count_rejected() {
        assert!(fit_phrases(&[], 0, 1.0).is_err());
    }

    fn model_with(pairs: &[(&str, &str)]) -> PhraseModel {
        let mut m = PhraseModel::empty(1, 0.0);
        for (a, b) in pairs {
            m.pairs
                .insert((a.to_string(), b.to_string()), PairStats { count: 1, score: 1.0 });
        }
        m
    }

    #[test]
    fn merges_greedily() {
        let m = model_with(&[("human", "rights")]);
        assert_eq!(
            apply_phrases(&m, &doc("human rights act")).tokens,
            ["human_rights", "act"]
        );
        assert_eq!(
            apply_phrases(&m, &doc("human rights human rights")).tokens,
            ["human_rights", "human_rights"]
        );
        let unchanged = doc("stay safe home");
        assert_eq!(apply_phrases(&m, &unchanged), unchanged);
    }

    #[test]
    fn merged_tokens_do_not_chain() {
        let m = model_with(&[("new", "york"), ("york", "city")]);
        assert_eq!(apply_phrases(&m, &doc("new york city")).tokens, ["new_york", "city"]);
    }
}
