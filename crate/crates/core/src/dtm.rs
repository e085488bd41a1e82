//! Dynamic topic model over day slices.
//!
//! Slices are fit in order. Slice 0 uses symmetric priors; slice `t > 0`
//! centres its topic-word prior on slice `t - 1`'s topics with pseudo-count
//! mass `kappa`, and (when `rho > 0`) shifts its document-topic prior towards
//! slice `t - 1`'s mean topic proportions with mass `rho`. Topic `k` at day
//! `t` therefore continues topic `k` at day `t - 1`; no alignment step is
//! needed. Large `kappa` plays the role of a small topic drift variance.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::lda::{argmax, top_words, GibbsSampler, LdaConfig, LdaModel, LdaPrior, LdaTemplate};
use crate::preprocess::BowDoc;
use crate::preprocess::Vocabulary;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtmConfig {
    pub k: usize,
    /// Pseudo-count mass carried over from the previous slice's topics.
    pub kappa: f64,
    /// Pseudo-count mass pulling document priors towards the previous
    /// slice's mean topic proportions.
    pub rho: f64,
    pub lda: LdaTemplate,
    /// Length of the per-slice top-word lists kept on the model.
    pub topn: usize,
}

impl DtmConfig {
    /// Defaults: kappa = 1000, rho = 10, ten top words.
    pub fn new(k: usize) -> Self {
        DtmConfig {
            k,
            kappa: 1000.0,
            rho: 10.0,
            lda: LdaTemplate::default(),
            topn: 10,
        }
    }

    pub fn slice_config(&self) -> LdaConfig {
        self.lda.config(self.k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "dynamic model needs K >= 2, got {}",
                self.k
            )));
        }
        for (name, v) in [("kappa", self.kappa), ("rho", self.rho)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        self.slice_config().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub doc_id: String,
    pub slice: usize,
    pub topic: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtmModel {
    pub config: DtmConfig,
    pub slices: Vec<LdaModel>,
    /// True where a slice had no documents and carries the previous topics.
    pub copied: Vec<bool>,
    /// `top_words[t][k]`: the `config.topn` most probable `(word, prob)` of
    /// topic `k` on slice `t`.
    pub top_words: Vec<Vec<Vec<(usize, f64)>>>,
    /// One row per document, slice order then document order.
    pub assignments: Vec<Assignment>,
}

impl DtmModel {
    pub fn num_topics(&self) -> usize {
        self.config.k
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.slices.first().map_or(0, |s| s.vocab_size())
    }
}

fn chained_theta_mean(alpha: f64, k: usize, rho: f64, prev_mean: &[f64]) -> Vec<f64> {
    let base = k as f64 * alpha;
    prev_mean.iter().map(|m| (alpha + rho * m) / (base + rho)).collect()
}

/// Fits every slice in order, chaining priors from one slice to the next.
pub fn fit_dtm(slices: &[Vec<BowDoc>], vocab_size: usize, cfg: &DtmConfig) -> Result<DtmModel> {
    fit_dtm_observed(slices, vocab_size, cfg, |_, _| {})
}

fn sample_slice<F>(
    t: usize,
    docs: &[BowDoc],
    vocab_size: usize,
    cfg: &LdaConfig,
    prior: &LdaPrior<'_>,
    observe: &mut F,
) -> Result<LdaModel>
where
    F: FnMut(usize, &GibbsSampler<'_>),
{
    let mut sampler = GibbsSampler::new(docs, vocab_size, cfg, prior)?;
    while sampler.sweeps_done() < cfg.iterations {
        sampler.sweep();
        observe(t, &sampler);
    }
    Ok(sampler.into_model())
}

/// [`fit_dtm`], calling `observe(slice, sampler)` after every Gibbs sweep.
pub fn fit_dtm_observed<F>(
    slices: &[Vec<BowDoc>],
    vocab_size: usize,
    cfg: &DtmConfig,
    mut observe: F,
) -> Result<DtmModel>
where
    F: FnMut(usize, &GibbsSampler<'_>),
{
    cfg.validate()?;
    match slices.first() {
        None => return Err(Error::EmptyCorpus("no slices".into())),
        Some(first) if first.is_empty() => {
            return Err(Error::EmptyCorpus("the first slice has no documents".into()));
        }
        _ => {}
    }
    let lda_cfg = cfg.slice_config();
    let mut models: Vec<LdaModel> = Vec::with_capacity(slices.len());
    let mut copied = Vec::with_capacity(slices.len());
    let mut last_mean_theta: Vec<f64> = Vec::new();

    for (t, docs) in slices.iter().enumerate() {
        if t > 0 && docs.is_empty() {
            warn!("slice {t} is empty; carrying topics over from slice {}", t - 1);
            let prev = &models[t - 1];
            models.push(LdaModel::from_phi(lda_cfg.clone(), prev.phi.clone()));
            copied.push(true);
            continue;
        }
        let model = if t == 0 {
            sample_slice(t, docs, vocab_size, &lda_cfg, &LdaPrior::default(), &mut observe)?
        } else {
            let theta_mean =
                (cfg.rho > 0.0).then(|| chained_theta_mean(lda_cfg.alpha, cfg.k, cfg.rho, &last_mean_theta));
            let prior = LdaPrior {
                phi: Some(&models[t - 1].phi),
                kappa: cfg.kappa,
                theta_mean: theta_mean.as_deref(),
            };
            sample_slice(t, docs, vocab_size, &lda_cfg, &prior, &mut observe)?
        };
        last_mean_theta = model.mean_theta();
        models.push(model);
        copied.push(false);
    }

    let mut assignments = Vec::new();
    for (t, m) in models.iter().enumerate() {
        for (d, doc_id) in m.doc_ids.iter().enumerate() {
            let row = m.theta.row(d);
            let topic = assign_topic(row.as_slice().expect("contiguous theta row"))?;
            assignments.push(Assignment {
                doc_id: doc_id.clone(),
                slice: t,
                topic,
            });
        }
    }
    let top = models
        .iter()
        .map(|m| (0..cfg.k).map(|k| top_words(m.phi.row(k), cfg.topn)).collect())
        .collect();

    Ok(DtmModel {
        config: cfg.clone(),
        slices: models,
        copied,
        top_words: top,
        assignments,
    })
}

/// Most probable topic of a document; the lowest index wins ties.
pub fn assign_topic(theta_row: &[f64]) -> Result<usize> {
    if let Some(bad) = theta_row.iter().find(|p| !p.is_finite()) {
        return Err(Error::NonFinite(format!("topic proportion {bad}")));
    }
    let sum: f64 = theta_row.iter().sum();
    if theta_row.is_empty() || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!("topic proportions sum to {sum}")));
    }
    Ok(argmax(theta_row.iter().copied()).expect("nonempty row"))
}

/// Top `topn` words of topic `k` on every slice, descending probability,
/// ties by word id.
pub fn topic_trajectory(model: &DtmModel, k: usize, topn: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    if k >= model.num_topics() {
        return Err(Error::InvalidInput(format!(
            "topic {k} out of range (K = {})",
            model.num_topics()
        )));
    }
    let v = model.vocab_size();
    if topn > v {
        warn!("requested {topn} words but the vocabulary has {v}; truncating");
    }
    Ok(model
        .slices
        .iter()
        .map(|m| top_words(m.phi.row(k), topn.min(v)))
        .collect())
}

/// Per slice, topics ranked by number of assigned documents (descending,
/// ties by topic index), truncated to `n`. Topics with no documents are
/// left out.
pub fn top_topics_per_slice(
    assignments: &[Assignment],
    num_slices: usize,
    n: usize,
) -> Result<Vec<Vec<(usize, usize)>>> {
    if n < 1 {
        return Err(Error::InvalidConfig("need at least one topic per slice".into()));
    }
    let mut volumes: Vec<std::collections::BTreeMap<usize, usize>> = vec![Default::default(); num_slices];
    for a in assignments {
        let day = volumes
            .get_mut(a.slice)
            .ok_or_else(|| Error::InvalidInput(format!("assignment for {} names slice {}", a.doc_id, a.slice)))?;
        *day.entry(a.topic).or_default() += 1;
    }
    Ok(volumes
        .into_iter()
        .map(|day| {
            let mut ranked: Vec<(usize, usize)> = day.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked.truncate(n);
            ranked
        })
        .collect())
}

/// CSV `day,topic,rank,word,prob`; ranks start at 1.
pub fn write_trajectories_csv<W: Write>(
    model: &DtmModel,
    vocab: &Vocabulary,
    days: &[String],
    topn: usize,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    w.write_record(["day", "topic", "rank", "word", "prob"])
        .map_err(csv_err)?;
    for k in 0..model.num_topics() {
        for (t, words) in topic_trajectory(model, k, topn)?.into_iter().enumerate() {
            for (rank, (word, p)) in words.into_iter().enumerate() {
                w.write_record([
                    days[t].clone(),
                    k.to_string(),
                    (rank + 1).to_string(),
                    vocab.token(word).to_owned(),
                    p.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("trajectories", e))?;
    Ok(())
}

/// CSV `doc_id,day,topic`.
pub fn write_assignments_csv<W: Write>(assignments: &[Assignment], days: &[String], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["doc_id", "day", "topic"])?;
    for a in assignments {
        w.write_record([a.doc_id.as_str(), days[a.slice].as_str(), &a.topic.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV `day,rank,topic,volume`; ranks start at 1.
pub fn write_top_topics_csv<W: Write>(ranking: &[Vec<(usize, usize)>], days: &[String], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day", "rank", "topic", "volume"])?;
    for (t, day) in ranking.iter().enumerate() {
        for (rank, (topic, volume)) in day.iter().enumerate() {
            w.write_record([
                days[t].clone(),
                (rank + 1).to_string(),
                topic.to_string(),
                volume.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
