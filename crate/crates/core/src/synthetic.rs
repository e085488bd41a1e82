//! Corpora drawn from known topics, for checking that fits recover them.

use ndarray::Array2;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::preprocess::BowDoc;

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub docs: Vec<BowDoc>,
    /// Dominant generating topic of each document.
    pub dominant: Vec<usize>,
}

/// `k` topics over disjoint blocks of `words_per_topic` words, uniform
/// within their block.
pub fn block_topics(k: usize, words_per_topic: usize) -> Array2<f64> {
    let v = k * words_per_topic;
    let mut phi = Array2::zeros((k, v));
    for t in 0..k {
        for w in 0..words_per_topic {
            phi[[t, t * words_per_topic + w]] = 1.0 / words_per_topic as f64;
        }
    }
    phi
}

/// Topics shaped as Gaussian bumps over word indices, evenly spaced, each
/// centre shifted by `shift * slice` words. Rows are normalized.
pub fn drifting_topics(k: usize, v: usize, slices: usize, width: f64, shift: f64) -> Vec<Array2<f64>> {
    let spacing = v as f64 / k as f64;
    (0..slices)
        .map(|t| {
            let mut phi = Array2::zeros((k, v));
            for topic in 0..k {
                let centre = spacing * (topic as f64 + 0.5) + shift * t as f64;
                for w in 0..v {
                    let d = (w as f64 - centre) / width;
                    phi[[topic, w]] = (-0.5 * d * d).exp() + 1e-4;
                }
                let s: f64 = phi.row(topic).sum();
                phi.row_mut(topic).mapv_inplace(|x| x / s);
            }
            phi
        })
        .collect()
}

/// Documents of `doc_len` tokens. Document `d` is dominated by topic
/// `d % K`: each token comes from it with probability `purity`, otherwise
/// from a uniformly chosen topic.
pub fn sample_corpus(
    phi: &Array2<f64>,
    n_docs: usize,
    doc_len: usize,
    purity: f64,
    seed: u64,
    id_prefix: &str,
) -> SyntheticCorpus {
    let k = phi.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word_dists: Vec<WeightedIndex<f64>> = phi
        .rows()
        .into_iter()
        .map(|row| WeightedIndex::new(row.iter().copied()).expect("valid topic row"))
        .collect();
    let mut docs = Vec::with_capacity(n_docs);
    let mut dominant = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let main = d % k;
        let words: Vec<usize> = (0..doc_len)
            .map(|_| {
                let topic = if rng.gen::<f64>() < purity {
                    main
                } else {
                    rng.gen_range(0..k)
                };
                word_dists[topic].sample(&mut rng)
            })
            .collect();
        docs.push(BowDoc::from_word_ids(format!("{id_prefix}{d}"), words));
        dominant.push(main);
    }
    SyntheticCorpus { docs, dominant }
}
