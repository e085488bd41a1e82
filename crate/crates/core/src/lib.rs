//! Topic and sentiment dynamics over time-sliced short-text corpora.
//!
//! The pipeline runs in five stages, each living in its own module:
//!
//! * [`corpus`] loads document records, filters them by language and buckets
//!   them into calendar-day slices.
//! * [`preprocess`] turns raw text into bag-of-words documents over a pruned
//!   vocabulary (tokenization, phrase merging, lemmatization).
//! * [`lda`] fits a static topic model per slice with collapsed Gibbs
//!   sampling and scores topics by pairwise co-occurrence coherence.
//! * [`dtm`] chains per-slice fits through their priors so topics evolve
//!   smoothly from one day to the next.
//! * [`sentiment`] scores raw text with a lexicon rule cascade, and
//!   [`analytics`] joins topics with polarities into a day × topic count cube.

pub mod analytics;
pub mod corpus;
pub mod dtm;
pub mod error;
pub mod lda;
pub mod preprocess;
pub mod rng;
pub mod sentiment;
pub mod synthetic;

pub use error::{Error, Result};
