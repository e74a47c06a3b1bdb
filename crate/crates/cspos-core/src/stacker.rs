//! Stacking combiner over the two monolingual taggers' outputs: sparse
//! indicator features per token, sentence-level fold construction, and an
//! averaged online max-margin multiclass learner.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError};
use crate::types::{Sentence, TaggerOutput, UPosTag};

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_EPOCHS: usize = 10;
/// Updates fire whenever the gold class fails to beat the runner-up by
/// this margin.
pub const MARGIN: f64 = 1.0;

#[derive(Debug, Error)]
pub enum StackError {
    #[error("tagger outputs cover {left} and {right} tokens; they must match")]
    OutputMismatch { left: usize, right: usize },
    #[error("token index {index} is out of range for {len} tokens")]
    BadIndex { index: usize, len: usize },
    #[error("cannot train a stacker on an empty example set")]
    EmptyTraining,
    #[error("{k} folds requested but the corpus has only {n} sentences")]
    TooFewSentences { k: usize, n: usize },
    #[error("fold count must be at least 2, got {0}")]
    BadFoldCount(usize),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Which feature templates to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureOpts {
    /// Neighboring-tag features (`prev_t1=`, `next_t1=`, ...). On by
    /// default; switch off to keep only the minimal per-token set.
    pub context: bool,
}

impl Default for FeatureOpts {
    fn default() -> Self {
        FeatureOpts { context: true }
    }
}

/// Sparse named binary features for one token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackFeatures {
    names: Vec<String>,
}

impl StackFeatures {
    pub fn names(&self) -> &[String] {
        &self.names
    }
}

fn confidence_bucket(c: f64) -> &'static str {
    if c < 0.5 {
        "low"
    } else if c < 0.8 {
        "mid"
    } else {
        "high"
    }
}

/// Features for the token at `index`: both taggers' tags, agreement,
/// bucketed confidences, and (optionally) the neighboring tags from each
/// tagger with `NONE` at sentence boundaries.
pub fn build_features(
    out1: &TaggerOutput,
    out2: &TaggerOutput,
    index: usize,
    opts: FeatureOpts,
) -> Result<StackFeatures, StackError> {
    if out1.len() != out2.len() {
        return Err(StackError::OutputMismatch {
            left: out1.len(),
            right: out2.len(),
        });
    }
    if index >= out1.len() {
        return Err(StackError::BadIndex {
            index,
            len: out1.len(),
        });
    }
    let t1 = out1.tags()[index];
    let t2 = out2.tags()[index];
    let mut names = Vec::with_capacity(if opts.context { 9 } else { 5 });
    names.push(format!("t1={t1}"));
    names.push(format!("t2={t2}"));
    names.push(format!("agree={}", u8::from(t1 == t2)));
    names.push(format!("c1={}", confidence_bucket(out1.confidences()[index])));
    names.push(format!("c2={}", confidence_bucket(out2.confidences()[index])));
    if opts.context {
        let tag_at = |out: &TaggerOutput, i: Option<usize>| match i {
            Some(i) => out.tags()[i].name().to_string(),
            None => "NONE".to_string(),
        };
        let prev = index.checked_sub(1);
        let next = if index + 1 < out1.len() {
            Some(index + 1)
        } else {
            None
        };
        names.push(format!("prev_t1={}", tag_at(out1, prev)));
        names.push(format!("next_t1={}", tag_at(out1, next)));
        names.push(format!("prev_t2={}", tag_at(out2, prev)));
        names.push(format!("next_t2={}", tag_at(out2, next)));
    }
    Ok(StackFeatures { names })
}

/// Seeded shuffle followed by a contiguous split into `k` index groups
/// whose sizes differ by at most one.
pub fn fold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, StackError> {
    if k < 2 {
        return Err(StackError::BadFoldCount(k));
    }
    if k > n {
        return Err(StackError::TooFewSentences { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / k;
    let remainder = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut cursor = 0usize;
    for i in 0..k {
        let size = base + usize::from(i < remainder);
        folds.push(order[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(folds)
}

/// Disjoint sentence-level folds over a corpus.
pub fn make_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, StackError> {
    fold_partition(corpus.len(), k, seed)
}

/// Materializes one fold as a corpus, preserving original sentence order.
pub fn fold_corpus(corpus: &Corpus, fold: &[usize]) -> Result<Corpus, StackError> {
    let mut indices = fold.to_vec();
    indices.sort_unstable();
    let sentences: Vec<Sentence> = indices
        .iter()
        .map(|&i| corpus.sentences()[i].clone())
        .collect();
    Ok(Corpus::new(format!("{}.fold", corpus.name()), sentences)?)
}

/// Training provenance carried inside a stack model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackMeta {
    pub epochs: usize,
    pub seed: u64,
    /// Fold count when the model came out of the cross-validation
    /// protocol; absent for direct training.
    pub folds: Option<usize>,
    pub feature_opts: FeatureOpts,
}

/// Linear multiclass model: one weight vector per tag over named features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StackModel {
    classes: Vec<UPosTag>,
    feature_names: Vec<String>,
    /// weights[class][feature]
    weights: Vec<Vec<f64>>,
    meta: StackMeta,
}

impl StackModel {
    pub fn classes(&self) -> &[UPosTag] {
        &self.classes
    }

    pub fn meta(&self) -> &StackMeta {
        &self.meta
    }

    pub fn feature_opts(&self) -> FeatureOpts {
        self.meta.feature_opts
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Uniformly scales every weight (argmax predictions are invariant
    /// under positive scaling).
    pub fn scaled(&self, factor: f64) -> StackModel {
        let mut scaled = self.clone();
        for row in &mut scaled.weights {
            for w in row {
                *w *= factor;
            }
        }
        scaled
    }

    fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.binary_search_by(|f| f.as_str().cmp(name)).ok()
    }

    fn scores(&self, features: &StackFeatures) -> Vec<f64> {
        let mut scores = vec![0.0; self.classes.len()];
        for name in features.names() {
            // Features never seen in training carry no weight.
            if let Some(f) = self.feature_index(name) {
                for (c, row) in self.weights.iter().enumerate() {
                    scores[c] += row[f];
                }
            }
        }
        scores
    }

    /// Argmax class; exact ties go to the earliest tag in the fixed
    /// enumeration order.
    pub fn predict(&self, features: &StackFeatures) -> UPosTag {
        let scores = self.scores(features);
        let mut best = 0usize;
        let mut best_score = scores[0];
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > best_score {
                best_score = s;
                best = c;
            }
        }
        self.classes[best]
    }
}

/// Trains the averaged online margin learner. Examples are shuffled with
/// the seeded generator before each epoch; an update fires whenever the
/// gold class fails to beat the best other class by [`MARGIN`].
pub fn train_stacker(
    examples: &[(StackFeatures, UPosTag)],
    epochs: usize,
    seed: u64,
    feature_opts: FeatureOpts,
) -> Result<StackModel, StackError> {
    if examples.is_empty() {
        return Err(StackError::EmptyTraining);
    }
    // Feature and class dictionaries in deterministic order.
    let mut feature_set: BTreeMap<&str, ()> = BTreeMap::new();
    let mut class_seen = [false; UPosTag::ALL.len()];
    for (features, gold) in examples {
        class_seen[gold.index()] = true;
        for name in features.names() {
            feature_set.insert(name, ());
        }
    }
    let feature_names: Vec<String> = feature_set.keys().map(|s| s.to_string()).collect();
    let classes: Vec<UPosTag> = UPosTag::ALL
        .iter()
        .copied()
        .filter(|t| class_seen[t.index()])
        .collect();
    let class_pos: BTreeMap<UPosTag, usize> = classes
        .iter()
        .copied()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let n_classes = classes.len();
    let n_features = feature_names.len();

    let feature_ids: Vec<Vec<usize>> = examples
        .iter()
        .map(|(features, _)| {
            features
                .names()
                .iter()
                .map(|name| {
                    feature_names
                        .binary_search_by(|f| f.as_str().cmp(name))
                        .expect("feature collected above")
                })
                .collect()
        })
        .collect();
    let golds: Vec<usize> = examples.iter().map(|(_, g)| class_pos[g]).collect();

    let mut weights = vec![vec![0.0f64; n_features]; n_classes];
    let mut totals = vec![vec![0.0f64; n_features]; n_classes];
    let mut step = 1.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let gold = golds[i];
            let ids = &feature_ids[i];
            let mut best_other = usize::MAX;
            let mut best_other_score = f64::NEG_INFINITY;
            let mut gold_score = 0.0;
            for c in 0..n_classes {
                let score: f64 = ids.iter().map(|&f| weights[c][f]).sum();
                if c == gold {
                    gold_score = score;
                } else if score > best_other_score {
                    best_other_score = score;
                    best_other = c;
                }
            }
            if n_classes > 1 && gold_score - best_other_score < MARGIN {
                for &f in ids {
                    weights[gold][f] += 1.0;
                    totals[gold][f] += step;
                    weights[best_other][f] -= 1.0;
                    totals[best_other][f] -= step;
                }
            }
            step += 1.0;
        }
    }
    // Averaged weights: w_avg = w - accumulated/step.
    let averaged: Vec<Vec<f64>> = weights
        .iter()
        .zip(&totals)
        .map(|(w_row, t_row)| {
            w_row
                .iter()
                .zip(t_row)
                .map(|(w, t)| w - t / step)
                .collect()
        })
        .collect();
    Ok(StackModel {
        classes,
        feature_names,
        weights: averaged,
        meta: StackMeta {
            epochs,
            seed,
            folds: None,
            feature_opts,
        },
    })
}

/// Accuracy of `model` on a labeled example set.
pub fn example_accuracy(model: &StackModel, examples: &[(StackFeatures, UPosTag)]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let correct = examples
        .iter()
        .filter(|(features, gold)| model.predict(features) == *gold)
        .count();
    correct as f64 / examples.len() as f64
}

/// Cross-validation report plus the final model trained on all folds.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub model: StackModel,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Sentence-level k-fold protocol over pre-built per-sentence example
/// groups: each fold is held out once for validation, then the shipped
/// model is retrained on everything.
pub fn train_with_cross_validation(
    sentence_examples: &[Vec<(StackFeatures, UPosTag)>],
    k: usize,
    epochs: usize,
    seed: u64,
    feature_opts: FeatureOpts,
) -> Result<CvOutcome, StackError> {
    let folds = fold_partition(sentence_examples.len(), k, seed)?;
    let mut fold_accuracies = Vec::with_capacity(k);
    for fold in &folds {
        let mut in_fold = vec![false; sentence_examples.len()];
        for &i in fold {
            in_fold[i] = true;
        }
        let train_set: Vec<(StackFeatures, UPosTag)> = sentence_examples
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_fold[*i])
            .flat_map(|(_, ex)| ex.iter().cloned())
            .collect();
        let val_set: Vec<(StackFeatures, UPosTag)> = sentence_examples
            .iter()
            .enumerate()
            .filter(|(i, _)| in_fold[*i])
            .flat_map(|(_, ex)| ex.iter().cloned())
            .collect();
        let model = train_stacker(&train_set, epochs, seed, feature_opts)?;
        fold_accuracies.push(example_accuracy(&model, &val_set));
    }
    let all: Vec<(StackFeatures, UPosTag)> = sentence_examples
        .iter()
        .flat_map(|ex| ex.iter().cloned())
        .collect();
    let mut model = train_stacker(&all, epochs, seed, feature_opts)?;
    model.meta.folds = Some(k);
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    Ok(CvOutcome {
        model,
        fold_accuracies,
        mean_accuracy,
    })
}
