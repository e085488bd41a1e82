//! Seeded random streams.
//!
//! Every stochastic routine draws from ChaCha8 (`rand_chacha::ChaCha8Rng`).
//! A run seed selects the key; each document gets its own stream number,
//! derived from a 64-bit FNV-1a hash of the document id, so a document's
//! draws do not depend on where it sits in the corpus.

use std::hash::Hasher;

use fnv::FnvHasher;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SamplerRng = ChaCha8Rng;

/// Stable 64-bit FNV-1a hash of a document id.
pub fn doc_hash(doc_id: &str) -> u64 {
    let mut hasher = FnvHasher::default();
    hasher.write(doc_id.as_bytes());
    hasher.finish()
}

/// Generator for the stream owned by `doc_id` under `seed`.
pub fn doc_stream(seed: u64, doc_id: &str) -> SamplerRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(doc_hash(doc_id));
    rng
}
