//! Diagnostic: confidence calibration, LID quality, and the table-oracle
//! ceiling of the stacker feature space on synthetic data.

use std::collections::BTreeMap;

use cspos_core::corpus::split_by_purity;
use cspos_core::pipeline::{build_resources, PipelineOpts};
use cspos_core::stacker::{build_features, FeatureOpts};
use cspos_core::strategies::build_stack_training;
use cspos_core::synth::{generate, SynthConfig};
use cspos_core::types::{LangLabel, UPosTag};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let config = SynthConfig::preset("far-pair", seed).unwrap();
    let out = generate(&config).unwrap();
    let built = build_resources(&out.train, &PipelineOpts::default()).unwrap();
    let bundle = &built.bundle;

    let mut stats = vec![[0.0f64; 7]; 4];
    let mut lid_correct = 0usize;
    let mut lid_total = 0usize;
    for sentence in out.test.iter() {
        let out1 = bundle.tagger_l1().viterbi_tag(sentence).unwrap();
        let out2 = bundle.tagger_l2().viterbi_tag(sentence).unwrap();
        let lid = bundle.lid().label_sentence(sentence).unwrap();
        for (i, token) in sentence.tokens().iter().enumerate() {
            let lang = token.gold_lang().unwrap();
            let gold = token.gold_tag().unwrap();
            if lid.labels[i] == lang {
                lid_correct += 1;
            }
            lid_total += 1;
            for (t, output) in [(0usize, &out1), (1, &out2)] {
                let row = t * 2 + usize::from(lang == LangLabel::L2);
                let conf = output.confidences()[i];
                let correct = f64::from(output.tags()[i] == gold);
                stats[row][0] += 1.0;
                stats[row][1] += conf;
                stats[row][2] += correct;
                if conf >= 0.8 {
                    stats[row][3] += correct;
                    stats[row][4] += 1.0;
                } else if conf < 0.5 {
                    stats[row][5] += correct;
                    stats[row][6] += 1.0;
                }
            }
        }
    }
    println!("token LID accuracy: {:.4}", lid_correct as f64 / lid_total as f64);
    println!("stacker CV accuracy: {:.4}", built.cv_mean_accuracy);
    let names = ["t1 on L1", "t1 on L2", "t2 on L1", "t2 on L2"];
    for (name, s) in names.iter().zip(&stats) {
        println!(
            "{name}: n={:.0} mean_conf={:.3} acc={:.3} | high: n={:.0} acc={:.3} | low: n={:.0} acc={:.3}",
            s[0],
            s[1] / s[0],
            s[2] / s[0],
            s[4],
            if s[4] > 0.0 { s[3] / s[4] } else { 0.0 },
            s[6],
            if s[6] > 0.0 { s[5] / s[6] } else { 0.0 },
        );
    }

    // Routing ceiling: pick the gold-language tagger per token.
    let mut routed = [0usize; 2];
    for sentence in out.test.iter() {
        let out1 = bundle.tagger_l1().viterbi_tag(sentence).unwrap();
        let out2 = bundle.tagger_l2().viterbi_tag(sentence).unwrap();
        for (i, token) in sentence.tokens().iter().enumerate() {
            let pick = if token.gold_lang().unwrap() == LangLabel::L2 {
                out2.tags()[i]
            } else {
                out1.tags()[i]
            };
            routed[0] += usize::from(pick == token.gold_tag().unwrap());
            routed[1] += 1;
        }
    }
    println!("gold routing ceiling: {:.4}", routed[0] as f64 / routed[1] as f64);

    // Table-oracle ceiling over the stacker feature space: majority gold
    // tag per exact feature vector, trained on the CS training split.
    for (label, opts) in [
        ("paper features", FeatureOpts { context: false }),
        ("with context", FeatureOpts { context: true }),
    ] {
        let split = split_by_purity(&out.train).unwrap();
        let train_groups = build_stack_training(bundle, &split.code_switched, opts).unwrap();
        let mut table: BTreeMap<String, BTreeMap<UPosTag, u32>> = BTreeMap::new();
        for group in &train_groups {
            for (features, gold) in group {
                *table
                    .entry(features.names().join("|"))
                    .or_default()
                    .entry(*gold)
                    .or_insert(0) += 1;
            }
        }
        let fallback: BTreeMap<UPosTag, u32> =
            table.values().flatten().fold(BTreeMap::new(), |mut acc, (t, c)| {
                *acc.entry(*t).or_insert(0) += c;
                acc
            });
        let majority = |counts: &BTreeMap<UPosTag, u32>| {
            counts
                .iter()
                .max_by_key(|(_, c)| **c)
                .map(|(t, _)| *t)
                .unwrap()
        };
        let mut hit = 0usize;
        let mut total = 0usize;
        for sentence in out.test.iter() {
            let out1 = bundle.tagger_l1().viterbi_tag(sentence).unwrap();
            let out2 = bundle.tagger_l2().viterbi_tag(sentence).unwrap();
            for (i, token) in sentence.tokens().iter().enumerate() {
                let features = build_features(&out1, &out2, i, opts).unwrap();
                let key = features.names().join("|");
                let pred = match table.get(&key) {
                    Some(counts) => majority(counts),
                    None => majority(&fallback),
                };
                hit += usize::from(pred == token.gold_tag().unwrap());
                total += 1;
            }
        }
        println!("table-oracle ({label}): {:.4}", hit as f64 / total as f64);
    }
}
