//! Static LDA for one time slice, topic coherence and topic-number selection.

mod coherence;
mod gibbs;

pub use coherence::{coherence, coherence_of_phi, select_k, Coherence, KSelection, DEFAULT_EPSILON};
pub use gibbs::GibbsSampler;

use std::io::Write;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::preprocess::BowDoc;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Defaults: alpha = 50/K, eta = 0.01, 200 sweeps with 100 burn-in.
    pub fn new(k: usize) -> Self {
        LdaTemplate::default().config(k)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.k < 1 {
            return bad("topic count must be at least 1".into());
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1".into());
        }
        if self.burn_in >= self.iterations {
            return bad(format!(
                "burn_in ({}) must be below iterations ({})",
                self.burn_in, self.iterations
            ));
        }
        Ok(())
    }
}

/// Settings shared by fits at different topic counts. A missing alpha means
/// 50/K for each K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaTemplate {
    pub alpha: Option<f64>,
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for LdaTemplate {
    fn default() -> Self {
        LdaTemplate {
            alpha: None,
            eta: 0.01,
            iterations: 200,
            burn_in: 100,
            seed: 0,
        }
    }
}

impl LdaTemplate {
    pub fn config(&self, k: usize) -> LdaConfig {
        LdaConfig {
            k,
            alpha: self.alpha.unwrap_or(50.0 / k as f64),
            eta: self.eta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
        }
    }
}

/// Optional informative priors, used to chain slices together.
///
/// With `phi` set, the topic-word prior becomes `eta + kappa * phi[k][w]`.
/// With `theta_mean` set, the document-topic prior becomes
/// `alpha * K * theta_mean[k]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LdaPrior<'a> {
    pub phi: Option<&'a Array2<f64>>,
    pub kappa: f64,
    pub theta_mean: Option<&'a [f64]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub doc_ids: Vec<String>,
    /// K × V topic-word probabilities.
    pub phi: Array2<f64>,
    /// D × K document-topic probabilities.
    pub theta: Array2<f64>,
    /// Final topic of every token, tokens grouped by ascending word id.
    pub z: Vec<Vec<u32>>,
    pub nkw: Array2<u32>,
    pub nk: Vec<u64>,
    pub ndk: Array2<u32>,
}

impl LdaModel {
    pub fn num_topics(&self) -> usize {
        self.phi.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.ncols()
    }

    /// Column means of theta; uniform when there are no documents.
    pub fn mean_theta(&self) -> Vec<f64> {
        let k = self.num_topics();
        if self.theta.nrows() == 0 {
            return vec![1.0 / k as f64; k];
        }
        let n = self.theta.nrows() as f64;
        self.theta.columns().into_iter().map(|c| c.sum() / n).collect()
    }

    /// A document-free model that only carries `phi`.
    pub fn from_phi(config: LdaConfig, phi: Array2<f64>) -> Self {
        let (k, v) = phi.dim();
        LdaModel {
            config,
            doc_ids: Vec::new(),
            theta: Array2::zeros((0, k)),
            z: Vec::new(),
            nkw: Array2::zeros((k, v)),
            nk: vec![0; k],
            ndk: Array2::zeros((0, k)),
            phi,
        }
    }

    pub fn top_words(&self, topic: usize, n: usize) -> Vec<(usize, f64)> {
        top_words(self.phi.row(topic), n)
    }

    /// CSV `topic,word_id,prob`.
    pub fn write_phi_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["topic", "word_id", "prob"])?;
        for ((k, word), p) in self.phi.indexed_iter() {
            w.write_record([k.to_string(), word.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV `doc_id,topic,prob`.
    pub fn write_theta_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["doc_id", "topic", "prob"])?;
        for ((d, k), p) in self.theta.indexed_iter() {
            w.write_record([self.doc_ids[d].clone(), k.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Collapsed Gibbs fit of one slice. Deterministic given `cfg.seed`.
pub fn fit_lda(corpus: &[BowDoc], vocab_size: usize, cfg: &LdaConfig, prior: &LdaPrior<'_>) -> Result<LdaModel> {
    let mut sampler = GibbsSampler::new(corpus, vocab_size, cfg, prior)?;
    sampler.run();
    Ok(sampler.into_model())
}

/// The `n` most probable entries of a distribution, ties by lower index.
pub fn top_words(row: ArrayView1<'_, f64>, n: usize) -> Vec<(usize, f64)> {
    let mut idx: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
    idx.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    idx.truncate(n);
    idx
}

/// Index of the largest entry; the lowest index wins ties.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}
