//! POS tagging strategies for code-switched text.
//!
//! The crate builds the full experimental stack for comparing ways of
//! tagging sentences that mix two languages: a corpus layer, tagset
//! mapping, character-model language identification, a trainable
//! first-order sequence tagger, a stacking classifier over two taggers'
//! outputs, the seven combination/integration strategies, evaluation with
//! a per-purity breakdown, and a deterministic synthetic-corpus generator
//! so everything runs without licensed data.

pub mod corpus;
pub mod eval;
pub mod lid;
pub mod modelfile;
pub mod pipeline;
pub mod stacker;
pub mod strategies;
pub mod synth;
pub mod tagger;
pub mod tagmap;
pub mod types;

pub use corpus::{Corpus, CorpusStats};
pub use types::{
    purity_from_labels, purity_of, LangLabel, OtherKind, PurityClass, Sentence, TaggedToken,
    TaggerOutput, UPosTag,
};

/// Caps the global rayon thread pool from the `CSPOS_THREADS` environment
/// variable. Call once, early; later calls are no-ops.
pub fn init_thread_cap() {
    if let Ok(v) = std::env::var("CSPOS_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
