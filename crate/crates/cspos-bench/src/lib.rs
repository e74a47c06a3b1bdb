//! Shared fixtures for the criterion benchmarks.

use cspos_core::corpus::{split_by_purity, Corpus};
use cspos_core::pipeline::{build_resources, PipelineOpts};
use cspos_core::strategies::ResourceBundle;
use cspos_core::synth::{generate, SynthConfig};

/// A small far-pair corpus pair sized for benchmarking single operations.
pub fn bench_corpora(seed: u64, n_sentences: usize) -> (Corpus, Corpus) {
    let config = SynthConfig {
        n_sentences,
        vocab_per_lang: 300,
        ..SynthConfig::base(seed)
    };
    let out = generate(&config).expect("benchmark config is valid");
    (out.train, out.test)
}

/// Trained resources over a small corpus, plus its held-out test set.
pub fn bench_bundle(seed: u64, n_sentences: usize) -> (ResourceBundle, Corpus) {
    let (train, test) = bench_corpora(seed, n_sentences);
    let built = build_resources(&train, &PipelineOpts::default())
        .expect("benchmark training data is well-formed");
    (built.bundle, test)
}

/// The code-switched slice of a test corpus, for chunk-heavy paths.
pub fn cs_sentences(corpus: &Corpus) -> Corpus {
    split_by_purity(corpus)
        .expect("generated corpora carry labels")
        .code_switched
}
