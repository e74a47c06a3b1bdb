use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use cspos_bench::{bench_bundle, cs_sentences};
use cspos_core::stacker::{build_features, FeatureOpts};
use cspos_core::strategies::{run_combined, run_stacked, CombStrategy};

fn core_ops(c: &mut Criterion) {
    let (bundle, test) = bench_bundle(42, 1200);
    let cs = cs_sentences(&test);
    let sentence = cs
        .sentences()
        .iter()
        .max_by_key(|s| s.len())
        .expect("test corpus contains code-switched sentences")
        .clone();

    c.bench_function("tagger/viterbi_decode", |b| {
        b.iter(|| bundle.tagger_l1().viterbi_tag(&sentence).unwrap())
    });

    c.bench_function("tagger/token_posteriors", |b| {
        b.iter(|| bundle.tagger_l1().token_posteriors(&sentence).unwrap())
    });

    c.bench_function("lid/label_sentence", |b| {
        b.iter(|| bundle.lid().label_sentence(&sentence).unwrap())
    });

    c.bench_function("lid/token_score", |b| {
        let text = sentence.tokens()[0].text();
        b.iter(|| bundle.lid().lm1().token_log_score(text).unwrap())
    });

    c.bench_function("strategies/comb1_chunked", |b| {
        b.iter(|| run_combined(&bundle, CombStrategy::LidThenTag, &sentence).unwrap())
    });

    c.bench_function("strategies/comb4_stacked", |b| {
        b.iter(|| run_stacked(&bundle, &sentence).unwrap())
    });

    c.bench_function("stacker/build_features", |b| {
        let out1 = bundle.tagger_l1().viterbi_tag(&sentence).unwrap();
        let out2 = bundle.tagger_l2().viterbi_tag(&sentence).unwrap();
        b.iter_batched(
            || (out1.clone(), out2.clone()),
            |(o1, o2)| {
                for i in 0..o1.len() {
                    build_features(&o1, &o2, i, FeatureOpts::default()).unwrap();
                }
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, core_ops);
criterion_main!(benches);
