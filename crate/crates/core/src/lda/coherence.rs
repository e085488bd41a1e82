use std::collections::BTreeMap;

use log::warn;
use ndarray::Array2;

use super::{fit_lda, top_words, LdaModel, LdaPrior, LdaTemplate};
use crate::preprocess::BowDoc;
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Relative margin a larger K must win by in [`select_k`].
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Coherence {
    pub per_topic: Vec<f64>,
    pub mean: f64,
    /// Top words that occur in no document of the reference corpus.
    pub missing_words: usize,
}

pub fn coherence(model: &LdaModel, corpus: &[BowDoc], topn: usize, epsilon: f64) -> Result<Coherence> {
    coherence_of_phi(&model.phi, corpus, topn, epsilon)
}

/// Pairwise document co-occurrence coherence.
///
/// For each topic the `topn` most probable words `w_1..w_n` (descending) are
/// scored as `sum over i < j of ln((D(w_i, w_j) + epsilon) / D(w_j))`, where
/// `D` counts documents containing the word(s). A word missing from the
/// corpus has `D` floored at 1.
pub fn coherence_of_phi(phi: &Array2<f64>, corpus: &[BowDoc], topn: usize, epsilon: f64) -> Result<Coherence> {
    if topn < 2 {
        return Err(Error::InvalidConfig(format!("coherence needs topn >= 2, got {topn}")));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let tops: Vec<Vec<usize>> = phi
        .rows()
        .into_iter()
        .map(|row| top_words(row, topn).into_iter().map(|(w, _)| w).collect())
        .collect();

    // Postings for just the words that are scored.
    let mut postings: BTreeMap<usize, Vec<u32>> = tops.iter().flatten().map(|&w| (w, Vec::new())).collect();
    for (d, doc) in corpus.iter().enumerate() {
        for &(w, _) in &doc.counts {
            if let Some(list) = postings.get_mut(&w) {
                list.push(d as u32);
            }
        }
    }
    let missing: Vec<usize> = postings.iter().filter(|(_, l)| l.is_empty()).map(|(&w, _)| w).collect();
    if !missing.is_empty() {
        warn!(
            "{} top words never occur in the reference corpus: {:?}",
            missing.len(),
            missing
        );
    }

    let per_topic: Vec<f64> = tops
        .iter()
        .map(|words| {
            let mut score = 0.0;
            for j in 1..words.len() {
                let dj = &postings[&words[j]];
                let denom = dj.len().max(1) as f64;
                for wi in &words[..j] {
                    let joint = intersection_len(&postings[wi], dj) as f64;
                    score += ((joint + epsilon) / denom).ln();
                }
            }
            score
        })
        .collect();
    let mean = if per_topic.is_empty() {
        0.0
    } else {
        per_topic.iter().sum::<f64>() / per_topic.len() as f64
    };
    Ok(Coherence {
        per_topic,
        mean,
        missing_words: missing.len(),
    })
}

fn intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub best_k: usize,
    /// `(K, mean coherence)` for every K that fit.
    pub curve: Vec<(usize, f64)>,
    pub failed: Vec<(usize, String)>,
}

/// Fits one model per K on `first_slice` and picks the K with the highest
/// mean coherence; ties go to the smaller K.
pub fn select_k(
    first_slice: &[BowDoc],
    vocab_size: usize,
    grid: &[usize],
    template: &LdaTemplate,
    topn: usize,
    epsilon: f64,
) -> Result<KSelection> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("topic-number grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!(
            "topic-number grid must be strictly ascending: {grid:?}"
        )));
    }
    let mut curve = Vec::new();
    let mut failed = Vec::new();
    for &k in grid {
        let scored = fit_lda(first_slice, vocab_size, &template.config(k), &LdaPrior::default())
            .and_then(|m| coherence(&m, first_slice, topn, epsilon));
        match scored {
            Ok(c) => curve.push((k, c.mean)),
            Err(e) => {
                warn!("K={k} excluded: {e}");
                failed.push((k, e.to_string()));
            }
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for &(k, score) in &curve {
        // Means that differ only by summation rounding count as ties.
        if best.is_none_or(|(_, b)| score - b > TIE_TOLERANCE * b.abs().max(1.0)) {
            best = Some((k, score));
        }
    }
    match best {
        Some((best_k, _)) => Ok(KSelection { best_k, curve, failed }),
        None => Err(Error::InvalidInput(format!("no topic number in {grid:?} could be fit"))),
    }
}
