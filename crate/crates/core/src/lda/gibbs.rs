//! Collapsed Gibbs sampling for LDA.
//!
//! Sweeps are synchronous: every document is resampled against the global
//! topic-word counts as they stood at the start of the sweep, plus its own
//! changes made during the sweep. Count tables are merged after the sweep.
//! Together with one random stream per document this makes a fit
//! independent of document order and of how documents are spread over
//! threads.

use log::warn;
use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;

use super::{LdaConfig, LdaModel, LdaPrior};
use crate::preprocess::BowDoc;
use crate::rng::{doc_stream, SamplerRng};
use crate::{Error, Result};

struct DocState {
    /// Word id of every token, grouped by word.
    words: Vec<u32>,
    /// Index of each token's word within the document's unique words.
    local: Vec<u32>,
    unique: Vec<u32>,
    z: Vec<u32>,
    ndk: Vec<u32>,
    rng: SamplerRng,
}

pub struct GibbsSampler<'a> {
    docs: &'a [BowDoc],
    cfg: LdaConfig,
    vocab_size: usize,
    states: Vec<DocState>,
    /// K × V, row-major.
    nkw: Vec<u32>,
    nk: Vec<u64>,
    /// Per-cell topic-word prior; `None` means the symmetric `cfg.eta`.
    eta_kw: Option<Vec<f64>>,
    eta_sum: Vec<f64>,
    alpha_k: Vec<f64>,
    alpha_sum: f64,
    sweeps: usize,
    samples: usize,
    phi_acc: Vec<f64>,
    theta_acc: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(docs: &'a [BowDoc], vocab_size: usize, cfg: &LdaConfig, prior: &LdaPrior<'_>) -> Result<Self> {
        cfg.validate()?;
        if docs.is_empty() {
            return Err(Error::EmptyCorpus("no documents to fit".into()));
        }
        let k = cfg.k;
        if docs.len() < k {
            warn!("fitting {k} topics on only {} documents", docs.len());
        }
        for d in docs {
            if let Some(&(w, _)) = d.counts.last() {
                if w >= vocab_size {
                    return Err(Error::InvalidInput(format!(
                        "document {} uses word id {w} outside a vocabulary of {vocab_size}",
                        d.doc_id
                    )));
                }
            }
        }
        let (eta_kw, eta_sum) = topic_word_prior(cfg, vocab_size, prior)?;
        let alpha_k = doc_topic_prior(cfg, prior)?;
        let alpha_sum = alpha_k.iter().sum();

        let mut nkw = vec![0u32; k * vocab_size];
        let mut nk = vec![0u64; k];
        let mut states = Vec::with_capacity(docs.len());
        for doc in docs {
            let mut rng = doc_stream(cfg.seed, &doc.doc_id);
            let mut words = Vec::with_capacity(doc.len());
            let mut local = Vec::with_capacity(doc.len());
            for (li, &(w, c)) in doc.counts.iter().enumerate() {
                for _ in 0..c {
                    words.push(w as u32);
                    local.push(li as u32);
                }
            }
            let mut ndk = vec![0u32; k];
            let z: Vec<u32> = words
                .iter()
                .map(|&w| {
                    let t = rng.gen_range(0..k);
                    ndk[t] += 1;
                    nkw[t * vocab_size + w as usize] += 1;
                    nk[t] += 1;
                    t as u32
                })
                .collect();
            states.push(DocState {
                words,
                local,
                unique: doc.counts.iter().map(|&(w, _)| w as u32).collect(),
                z,
                ndk,
                rng,
            });
        }
        if nk.iter().sum::<u64>() == 0 {
            return Err(Error::EmptyCorpus("documents contain no tokens".into()));
        }

        Ok(GibbsSampler {
            docs,
            cfg: cfg.clone(),
            vocab_size,
            phi_acc: vec![0.0; k * vocab_size],
            theta_acc: vec![0.0; docs.len() * k],
            states,
            nkw,
            nk,
            eta_kw,
            eta_sum,
            alpha_k,
            alpha_sum,
            sweeps: 0,
            samples: 0,
        })
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps
    }

    /// Number of tokens assigned to each topic.
    pub fn topic_totals(&self) -> &[u64] {
        &self.nk
    }

    /// Tokens in the corpus being fit.
    pub fn token_mass(&self) -> u64 {
        self.states.iter().map(|s| s.words.len() as u64).sum()
    }

    /// Row sums of the topic-word count table.
    pub fn topic_word_row_sums(&self) -> Vec<u64> {
        self.nkw
            .chunks(self.vocab_size)
            .map(|row| row.iter().map(|&c| c as u64).sum())
            .collect()
    }

    pub fn assignments(&self) -> impl Iterator<Item = &[u32]> {
        self.states.iter().map(|s| s.z.as_slice())
    }

    /// One full pass over every token of every document.
    pub fn sweep(&mut self) {
        let k = self.cfg.k;
        let v = self.vocab_size;
        let nkw = &self.nkw;
        let nk = &self.nk;
        let eta = self.cfg.eta;
        let eta_kw = self.eta_kw.as_deref();
        let eta_sum = &self.eta_sum;
        let alpha_k = &self.alpha_k;

        let deltas: Vec<(Vec<i32>, Vec<i64>)> = self
            .states
            .par_iter_mut()
            .map(|st| {
                let n_unique = st.unique.len();
                let mut dkw = vec![0i32; k * n_unique];
                let mut dk = vec![0i64; k];
                let mut weights = vec![0f64; k];
                for i in 0..st.words.len() {
                    let w = st.words[i] as usize;
                    let lw = st.local[i] as usize;
                    let old = st.z[i] as usize;
                    st.ndk[old] -= 1;
                    dkw[old * n_unique + lw] -= 1;
                    dk[old] -= 1;

                    let mut total = 0.0;
                    for t in 0..k {
                        let cw = (nkw[t * v + w] as i64 + dkw[t * n_unique + lw] as i64) as f64;
                        let ct = (nk[t] as i64 + dk[t]) as f64;
                        let prior_w = match eta_kw {
                            Some(p) => p[t * v + w],
                            None => eta,
                        };
                        total += (st.ndk[t] as f64 + alpha_k[t]) * (cw + prior_w) / (ct + eta_sum[t]);
                        weights[t] = total;
                    }
                    let u = st.rng.gen::<f64>() * total;
                    let new = weights.iter().position(|&c| c > u).unwrap_or(k - 1);

                    st.z[i] = new as u32;
                    st.ndk[new] += 1;
                    dkw[new * n_unique + lw] += 1;
                    dk[new] += 1;
                }
                (dkw, dk)
            })
            .collect();

        for (st, (dkw, dk)) in self.states.iter().zip(&deltas) {
            let n_unique = st.unique.len();
            for t in 0..k {
                self.nk[t] = (self.nk[t] as i64 + dk[t]) as u64;
                for (lw, &w) in st.unique.iter().enumerate() {
                    let cell = &mut self.nkw[t * v + w as usize];
                    *cell = (*cell as i64 + dkw[t * n_unique + lw] as i64) as u32;
                }
            }
        }

        self.sweeps += 1;
        if self.sweeps > self.cfg.burn_in {
            self.accumulate();
        }
    }

    fn accumulate(&mut self) {
        let k = self.cfg.k;
        let v = self.vocab_size;
        for t in 0..k {
            let denom = self.nk[t] as f64 + self.eta_sum[t];
            for w in 0..v {
                let prior_w = match &self.eta_kw {
                    Some(p) => p[t * v + w],
                    None => self.cfg.eta,
                };
                self.phi_acc[t * v + w] += (self.nkw[t * v + w] as f64 + prior_w) / denom;
            }
        }
        for (d, st) in self.states.iter().enumerate() {
            let denom = st.words.len() as f64 + self.alpha_sum;
            for t in 0..k {
                self.theta_acc[d * k + t] += (st.ndk[t] as f64 + self.alpha_k[t]) / denom;
            }
        }
        self.samples += 1;
    }

    /// Runs the remaining sweeps up to `cfg.iterations`.
    pub fn run(&mut self) {
        while self.sweeps < self.cfg.iterations {
            self.sweep();
        }
    }

    /// Finishes sampling and returns posterior means.
    pub fn into_model(mut self) -> LdaModel {
        self.run();
        let k = self.cfg.k;
        let v = self.vocab_size;
        let n = self.samples as f64;

        let mut phi = Array2::from_shape_vec((k, v), self.phi_acc).expect("phi shape");
        normalize_rows(&mut phi, n);
        let mut theta = Array2::from_shape_vec((self.docs.len(), k), self.theta_acc).expect("theta shape");
        normalize_rows(&mut theta, n);

        let mut ndk = Array2::zeros((self.docs.len(), k));
        for (d, st) in self.states.iter().enumerate() {
            for t in 0..k {
                ndk[[d, t]] = st.ndk[t];
            }
        }
        LdaModel {
            config: self.cfg,
            doc_ids: self.docs.iter().map(|d| d.doc_id.clone()).collect(),
            phi,
            theta,
            z: self.states.into_iter().map(|s| s.z).collect(),
            nkw: Array2::from_shape_vec((k, v), self.nkw).expect("nkw shape"),
            nk: self.nk,
            ndk,
        }
    }
}

/// Averages accumulated rows over `samples`, then renormalizes each row so
/// rounding drift cannot push a row sum away from one.
fn normalize_rows(m: &mut Array2<f64>, samples: f64) {
    for mut row in m.rows_mut() {
        row.mapv_inplace(|x| x / samples);
        let s: f64 = row.sum();
        if s > 0.0 {
            row.mapv_inplace(|x| x / s);
        }
    }
}

fn topic_word_prior(cfg: &LdaConfig, v: usize, prior: &LdaPrior<'_>) -> Result<(Option<Vec<f64>>, Vec<f64>)> {
    let k = cfg.k;
    let base_sum = cfg.eta * v as f64;
    let Some(phi) = prior.phi else {
        return Ok((None, vec![base_sum; k]));
    };
    if !(prior.kappa.is_finite() && prior.kappa >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "kappa must be finite and >= 0, got {}",
            prior.kappa
        )));
    }
    if phi.dim() != (k, v) {
        return Err(Error::InvalidInput(format!(
            "prior phi is {:?}, expected ({k}, {v})",
            phi.dim()
        )));
    }
    let mut cells = Vec::with_capacity(k * v);
    let mut sums = Vec::with_capacity(k);
    for (t, row) in phi.rows().into_iter().enumerate() {
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(format!(
                "prior phi row {t} has negative or non-finite entries"
            )));
        }
        let row_sum: f64 = row.sum();
        if (row_sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!("prior phi row {t} sums to {row_sum}")));
        }
        cells.extend(row.iter().map(|p| cfg.eta + prior.kappa * p));
        // Kept as base + kappa * sum so that kappa = 0 reproduces the symmetric prior exactly.
        sums.push(base_sum + prior.kappa * row_sum);
    }
    Ok((Some(cells), sums))
}

fn doc_topic_prior(cfg: &LdaConfig, prior: &LdaPrior<'_>) -> Result<Vec<f64>> {
    let k = cfg.k;
    let Some(mean) = prior.theta_mean else {
        return Ok(vec![cfg.alpha; k]);
    };
    if mean.len() != k {
        return Err(Error::InvalidInput(format!(
            "prior theta mean has {} entries, expected {k}",
            mean.len()
        )));
    }
    if mean.iter().any(|m| !m.is_finite() || *m <= 0.0) {
        return Err(Error::InvalidInput(
            "prior theta mean entries must be positive and finite".into(),
        ));
    }
    Ok(mean.iter().map(|m| cfg.alpha * k as f64 * m).collect())
}
