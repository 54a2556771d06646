//! Shared fixtures for the benchmarks: synthetic corpora with known topics.

use ope_core::synth::{synthesize, SynthConfig, SynthCorpus};
use ope_core::{Corpus, DocBatch};

/// Synthetic corpus with `alpha = 0.1` and the default topic concentration.
pub fn corpus(k: usize, v: usize, d: usize, doc_length: usize) -> SynthCorpus {
    let mut cfg = SynthConfig::new(k, v, d, doc_length);
    cfg.alpha = 0.1;
    cfg.seed = 42;
    synthesize(&cfg).expect("valid synthetic config")
}

/// The first `s` documents as one minibatch.
pub fn first_batch(corpus: &Corpus, s: usize) -> DocBatch<'_> {
    DocBatch::from_range(corpus, 0..s.min(corpus.len())).expect("non-empty batch")
}
