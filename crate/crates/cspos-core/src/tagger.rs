//! Trainable first-order sequence POS tagger with Viterbi decoding and
//! forward-backward posterior confidences.
//!
//! Transitions are tag-bigram counts with `START`/`STOP`, Witten-Bell
//! smoothed with backoff to the tag unigram and, below that, a uniform
//! base over the tagset plus `STOP`. Emissions are maximum likelihood
//! with a Witten-Bell reservation for unseen words; the reserved mass is
//! distributed over unknown words through a suffix model built from rare
//! training words (frequency at or below a threshold) by
//! successive-abstraction interpolation. Because a known word keeps zero
//! probability under tags it was never seen with, decoding restricts known
//! words to their training tags.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::types::{CoreError, LangLabel, Sentence, TaggerOutput, UPosTag};

pub const DEFAULT_SUFFIX_MAX: usize = 4;
pub const DEFAULT_RARE_THRESHOLD: u64 = 2;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("sentence {sentence_id:?}, token {token_index}: missing gold tag")]
    LabelMissing {
        sentence_id: String,
        token_index: usize,
    },
    #[error("cannot train a tagger on an empty corpus")]
    EmptyTraining,
    #[error("cannot tag an empty sentence")]
    EmptySentence,
    #[error("span {start}..{end} is invalid for a sentence of {len} tokens")]
    BadSpan {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerConfig {
    /// Longest suffix (in characters) consulted for unknown words.
    pub suffix_max: usize,
    /// Words with training frequency at or below this feed the suffix model.
    pub rare_threshold: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            suffix_max: DEFAULT_SUFFIX_MAX,
            rare_threshold: DEFAULT_RARE_THRESHOLD,
        }
    }
}

/// A contiguous, language-uniform token span inside one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSpan {
    pub start: usize,
    pub end: usize,
    pub lang: LangLabel,
}

impl TagSpan {
    pub fn new(start: usize, end: usize, lang: LangLabel) -> TagSpan {
        TagSpan { start, end, lang }
    }

    pub fn validate(&self, sentence_len: usize) -> Result<(), TaggerError> {
        if self.start < self.end && self.end <= sentence_len {
            Ok(())
        } else {
            Err(TaggerError::BadSpan {
                start: self.start,
                end: self.end,
                len: sentence_len,
            })
        }
    }
}

/// Count-level model state; everything probabilistic is derived from these
/// integers deterministically, so serialized models are byte-identical
/// across identical training runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "TaggerData", into = "TaggerData")]
pub struct TaggerModel {
    config: TaggerConfig,
    /// Tags seen in training, in the fixed enumeration order.
    tagset: Vec<UPosTag>,
    /// Transition counts: rows are START then each tagset entry; columns
    /// are each tagset entry then STOP.
    trans_counts: Vec<Vec<u64>>,
    /// Unigram event counts over tagset entries then STOP.
    event_counts: Vec<u64>,
    /// Per-tag word emission counts.
    emit_counts: Vec<BTreeMap<String, u64>>,
    /// Full training vocabulary with frequencies.
    vocab: BTreeMap<String, u64>,
    /// Rare-word tag counts per suffix, for lengths 1..=suffix_max.
    suffix_counts: BTreeMap<String, Vec<u64>>,
    /// Rare-word tag counts with no suffix conditioning (length 0).
    rare_tag_counts: Vec<u64>,

    // Derived, rebuilt on load.
    #[serde(skip)]
    log_trans: Vec<Vec<f64>>,
    #[serde(skip)]
    emit_totals: Vec<u64>,
    #[serde(skip)]
    tag_log_prior: Vec<f64>,
    #[serde(skip)]
    suffix_theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TaggerData {
    config: TaggerConfig,
    tagset: Vec<UPosTag>,
    trans_counts: Vec<Vec<u64>>,
    event_counts: Vec<u64>,
    emit_counts: Vec<BTreeMap<String, u64>>,
    vocab: BTreeMap<String, u64>,
    suffix_counts: BTreeMap<String, Vec<u64>>,
    rare_tag_counts: Vec<u64>,
}

impl From<TaggerModel> for TaggerData {
    fn from(m: TaggerModel) -> Self {
        TaggerData {
            config: m.config,
            tagset: m.tagset,
            trans_counts: m.trans_counts,
            event_counts: m.event_counts,
            emit_counts: m.emit_counts,
            vocab: m.vocab,
            suffix_counts: m.suffix_counts,
            rare_tag_counts: m.rare_tag_counts,
        }
    }
}

impl From<TaggerData> for TaggerModel {
    fn from(d: TaggerData) -> Self {
        let mut model = TaggerModel {
            config: d.config,
            tagset: d.tagset,
            trans_counts: d.trans_counts,
            event_counts: d.event_counts,
            emit_counts: d.emit_counts,
            vocab: d.vocab,
            suffix_counts: d.suffix_counts,
            rare_tag_counts: d.rare_tag_counts,
            log_trans: Vec::new(),
            emit_totals: Vec::new(),
            tag_log_prior: Vec::new(),
            suffix_theta: 0.0,
        };
        model.rebuild_derived();
        model
    }
}

fn word_suffixes(word: &str, max_len: usize) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let cap = max_len.min(chars.len());
    (1..=cap)
        .map(|k| chars[chars.len() - k..].iter().collect())
        .collect()
}

impl TaggerModel {
    /// Trains from a corpus in which every token carries a gold tag.
    pub fn train(corpus: &Corpus, config: TaggerConfig) -> Result<TaggerModel, TaggerError> {
        if corpus.is_empty() {
            return Err(TaggerError::EmptyTraining);
        }
        // First pass: tagset and vocabulary.
        let mut tag_seen = [false; UPosTag::ALL.len()];
        let mut vocab: BTreeMap<String, u64> = BTreeMap::new();
        for sentence in corpus.iter() {
            for (token_index, token) in sentence.tokens().iter().enumerate() {
                let tag = token.gold_tag().ok_or_else(|| TaggerError::LabelMissing {
                    sentence_id: sentence.id().to_string(),
                    token_index,
                })?;
                tag_seen[tag.index()] = true;
                *vocab.entry(token.text().to_string()).or_insert(0) += 1;
            }
        }
        let tagset: Vec<UPosTag> = UPosTag::ALL
            .iter()
            .copied()
            .filter(|t| tag_seen[t.index()])
            .collect();
        let tag_pos: BTreeMap<UPosTag, usize> = tagset
            .iter()
            .copied()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        let n = tagset.len();

        // Second pass: transition, emission, and suffix counts.
        let mut trans_counts = vec![vec![0u64; n + 1]; n + 1];
        let mut event_counts = vec![0u64; n + 1];
        let mut emit_counts: Vec<BTreeMap<String, u64>> = vec![BTreeMap::new(); n];
        let mut suffix_counts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
        let mut rare_tag_counts = vec![0u64; n];
        for sentence in corpus.iter() {
            let mut prev_row = 0usize; // START
            for token in sentence.tokens() {
                let tag = token.gold_tag().expect("checked in first pass");
                let t = tag_pos[&tag];
                trans_counts[prev_row][t] += 1;
                event_counts[t] += 1;
                *emit_counts[t].entry(token.text().to_string()).or_insert(0) += 1;
                if vocab[token.text()] <= config.rare_threshold {
                    rare_tag_counts[t] += 1;
                    for suffix in word_suffixes(token.text(), config.suffix_max) {
                        suffix_counts.entry(suffix).or_insert_with(|| vec![0u64; n])[t] += 1;
                    }
                }
                prev_row = t + 1;
            }
            trans_counts[prev_row][n] += 1; // STOP
            event_counts[n] += 1;
        }

        let mut model = TaggerModel {
            config,
            tagset,
            trans_counts,
            event_counts,
            emit_counts,
            vocab,
            suffix_counts,
            rare_tag_counts,
            log_trans: Vec::new(),
            emit_totals: Vec::new(),
            tag_log_prior: Vec::new(),
            suffix_theta: 0.0,
        };
        model.rebuild_derived();
        Ok(model)
    }

    fn rebuild_derived(&mut self) {
        let n = self.tagset.len();
        // Witten-Bell over the closed event space (tagset + STOP):
        // bigram backs off to the unigram, which backs off to uniform.
        let uniform = 1.0 / (n + 1) as f64;
        let uni_total: u64 = self.event_counts.iter().sum();
        let uni_distinct = self.event_counts.iter().filter(|&&c| c > 0).count() as f64;
        let unigram: Vec<f64> = self
            .event_counts
            .iter()
            .map(|&c| (c as f64 + uni_distinct * uniform) / (uni_total as f64 + uni_distinct))
            .collect();
        self.log_trans = self
            .trans_counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                let distinct = row.iter().filter(|&&c| c > 0).count() as f64;
                row.iter()
                    .zip(&unigram)
                    .map(|(&c, &uni)| {
                        ((c as f64 + distinct * uni) / (total as f64 + distinct)).ln()
                    })
                    .collect()
            })
            .collect();
        self.emit_totals = self
            .emit_counts
            .iter()
            .map(|m| m.values().sum::<u64>())
            .collect();
        let token_total: u64 = self.event_counts[..n].iter().sum();
        self.tag_log_prior = self.event_counts[..n]
            .iter()
            .map(|&c| ((c as f64) / (token_total as f64)).ln())
            .collect();
        self.suffix_theta = self.compute_suffix_theta();
    }

    pub fn tagset(&self) -> &[UPosTag] {
        &self.tagset
    }

    pub fn tagset(&self) -> &[UPosTag] {
        &self.tagset
    }

    pub fn config(&self) -> TaggerConfig {
        self.config
    }

    pub fn vocab(&self) -> &BTreeMap<String, u64> {
        &self.vocab
    }

    pub fn knows_word(&self, word: &str) -> bool {
        self.vocab.contains_key(word)
    }

    fn n_tags(&self) -> usize {
        self.tagset.len()
    }

    /// Log transition probability. Rows: `None` is START, `Some(i)` a tag
    /// index; columns likewise with `None` meaning STOP.
    pub fn log_transition(&self, from: Option<usize>, to: Option<usize>) -> f64 {
        let row = match from {
            None => 0,
            Some(i) => i + 1,
        };
        let col = match to {
            None => self.n_tags(),
            Some(j) => j,
        };
        self.log_trans[row][col]
    }

    /// Witten-Bell reserved mass for unseen words under tag `t`.
    fn unseen_mass(&self, t: usize) -> f64 {
        let total = self.emit_totals[t] as f64;
        let distinct = self.emit_counts[t].len() as f64;
        distinct / (total + distinct)
    }

    /// Smoothed P(word | tag) for words in the training vocabulary; the
    /// complementary reserved mass covers the aggregate unseen-word event.
    pub fn known_emission_prob(&self, t: usize, word: &str) -> f64 {
        let count = self.emit_counts[t].get(word).copied().unwrap_or(0) as f64;
        let total = self.emit_totals[t] as f64;
        let distinct = self.emit_counts[t].len() as f64;
        count / (total + distinct)
    }

    /// Successive-abstraction suffix distribution P(tag | suffix) for an
    /// unknown word, interpolating from the longest observed suffix down
    /// to the unconditioned rare-word tag distribution.
    pub fn suffix_tag_distribution(&self, word: &str) -> Vec<f64> {
        let n = self.n_tags();
        let rare_total: u64 = self.rare_tag_counts.iter().sum();
        let base: Vec<f64> = if rare_total == 0 {
            // No rare words in training: fall back to the tag prior.
            self.tag_log_prior.iter().map(|lp| lp.exp()).collect()
        } else {
            self.rare_tag_counts
                .iter()
                .map(|&c| c as f64 / rare_total as f64)
                .collect()
        };
        let theta = self.suffix_theta;
        let mut dist = base;
        for suffix in word_suffixes(word, self.config.suffix_max) {
            match self.suffix_counts.get(&suffix) {
                Some(counts) => {
                    let total: u64 = counts.iter().sum();
                    if total == 0 {
                        continue;
                    }
                    let mut next = vec![0.0; n];
                    for t in 0..n {
                        let mle = counts[t] as f64 / total as f64;
                        next[t] = (mle + theta * dist[t]) / (1.0 + theta);
                    }
                    dist = next;
                }
                // Unseen longer suffix: keep the shorter-suffix estimate.
                None => break,
            }
        }
        dist
    }

    /// Log emission score for any word under tag index `t`. Known words
    /// use the smoothed MLE; unknown words spend the reserved mass in
    /// proportion to the suffix model's tag distribution.
    pub fn log_emission(&self, t: usize, word: &str) -> f64 {
        if self.knows_word(word) {
            self.known_emission_prob(t, word).ln()
        } else {
            let suffix_dist = self.suffix_tag_distribution(word);
            (self.unseen_mass(t) * suffix_dist[t]).ln()
        }
    }

    fn check_tokens(&self, tokens: &[&str]) -> Result<(), TaggerError> {
        if tokens.is_empty() {
            return Err(TaggerError::EmptySentence);
        }
        Ok(())
    }

    /// Viterbi decode over token texts; confidences are the per-token
    /// maximum posterior marginals.
    pub fn tag_tokens(&self, tokens: &[&str]) -> Result<TaggerOutput, TaggerError> {
        self.check_tokens(tokens)?;
        let n = self.n_tags();
        let len = tokens.len();
        let emissions: Vec<Vec<f64>> = tokens
            .iter()
            .map(|w| (0..n).map(|t| self.log_emission(t, w)).collect())
            .collect();

        let mut delta: Vec<Vec<f64>> = vec![vec![f64::NEG_INFINITY; n]; len];
        let mut back: Vec<Vec<usize>> = vec![vec![0; n]; len];
        for t in 0..n {
            delta[0][t] = self.log_transition(None, Some(t)) + emissions[0][t];
        }
        for i in 1..len {
            for t in 0..n {
                let mut best_prev = 0usize;
                let mut best_score = f64::NEG_INFINITY;
                for p in 0..n {
                    let score = delta[i - 1][p] + self.log_transition(Some(p), Some(t));
                    // Strict comparison: the earliest tag in enumeration
                    // order wins exact ties.
                    if score > best_score {
                        best_score = score;
                        best_prev = p;
                    }
                }
                delta[i][t] = best_score + emissions[i][t];
                back[i][t] = best_prev;
            }
        }
        let mut best_last = 0usize;
        let mut best_final = f64::NEG_INFINITY;
        for t in 0..n {
            let score = delta[len - 1][t] + self.log_transition(Some(t), None);
            if score > best_final {
                best_final = score;
                best_last = t;
            }
        }
        let mut path = vec![0usize; len];
        let mut state = best_last;
        for i in (0..len).rev() {
            path[i] = state;
            state = back[i][state];
        }

        let posteriors = self.posteriors_for(&emissions);
        let tags: Vec<UPosTag> = path.iter().map(|&t| self.tagset[t]).collect();
        let confidences: Vec<f64> = posteriors
            .marginals
            .iter()
            .map(|row| row.iter().copied().fold(0.0f64, f64::max).min(1.0))
            .collect();
        Ok(TaggerOutput::new(tags, confidences)?)
    }

    pub fn viterbi_tag(&self, sentence: &Sentence) -> Result<TaggerOutput, TaggerError> {
        self.tag_tokens(&sentence.texts())
    }

    /// Forward-backward marginals over the model tagset.
    pub fn token_posteriors(&self, sentence: &Sentence) -> Result<Posteriors, TaggerError> {
        self.token_posteriors_for_tokens(&sentence.texts())
    }

    pub fn token_posteriors_for_tokens(&self, tokens: &[&str]) -> Result<Posteriors, TaggerError> {
        self.check_tokens(tokens)?;
        let n = self.n_tags();
        let emissions: Vec<Vec<f64>> = tokens
            .iter()
            .map(|w| (0..n).map(|t| self.log_emission(t, w)).collect())
            .collect();
        Ok(self.posteriors_for(&emissions))
    }

    fn posteriors_for(&self, emissions: &[Vec<f64>]) -> Posteriors {
        let n = self.n_tags();
        let len = emissions.len();
        let mut alpha = vec![vec![f64::NEG_INFINITY; n]; len];
        for t in 0..n {
            alpha[0][t] = self.log_transition(None, Some(t)) + emissions[0][t];
        }
        for i in 1..len {
            for t in 0..n {
                let mut acc = f64::NEG_INFINITY;
                for p in 0..n {
                    acc = log_add(acc, alpha[i - 1][p] + self.log_transition(Some(p), Some(t)));
                }
                alpha[i][t] = acc + emissions[i][t];
            }
        }
        let mut beta = vec![vec![f64::NEG_INFINITY; n]; len];
        for t in 0..n {
            beta[len - 1][t] = self.log_transition(Some(t), None);
        }
        for i in (0..len - 1).rev() {
            for t in 0..n {
                let mut acc = f64::NEG_INFINITY;
                for q in 0..n {
                    acc = log_add(
                        acc,
                        self.log_transition(Some(t), Some(q)) + emissions[i + 1][q] + beta[i + 1][q],
                    );
                }
                beta[i][t] = acc;
            }
        }
        let mut forward_total = f64::NEG_INFINITY;
        for t in 0..n {
            forward_total = log_add(
                forward_total,
                alpha[len - 1][t] + self.log_transition(Some(t), None),
            );
        }
        let mut backward_total = f64::NEG_INFINITY;
        for t in 0..n {
            backward_total = log_add(
                backward_total,
                self.log_transition(None, Some(t)) + emissions[0][t] + beta[0][t],
            );
        }
        let marginals: Vec<Vec<f64>> = (0..len)
            .map(|i| {
                let raw: Vec<f64> = (0..n)
                    .map(|t| (alpha[i][t] + beta[i][t] - forward_total).exp())
                    .collect();
                let z: f64 = raw.iter().sum();
                raw.iter().map(|v| v / z).collect()
            })
            .collect();
        Posteriors {
            marginals,
            forward_loglik: forward_total,
            backward_loglik: backward_total,
        }
    }

    /// Decodes a span as a standalone sentence: START and STOP abut the
    /// span edges, so span tags can differ from a full-sentence decode.
    pub fn tag_span(&self, sentence: &Sentence, span: &TagSpan) -> Result<TaggerOutput, TaggerError> {
        span.validate(sentence.len())?;
        let texts = sentence.texts();
        self.tag_tokens(&texts[span.start..span.end])
    }
}

/// Forward-backward output: per-token distributions over the model
/// tagset plus the sequence log-likelihood from both directions.
#[derive(Debug, Clone)]
pub struct Posteriors {
    pub marginals: Vec<Vec<f64>>,
    pub forward_loglik: f64,
    pub backward_loglik: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus_str;
    use approx::assert_abs_diff_eq;

    fn corpus_from(text: &str) -> Corpus {
        parse_corpus_str(text, "<mem>", "t").unwrap()
    }

    fn train(text: &str) -> TaggerModel {
        TaggerModel::train(&corpus_from(text), TaggerConfig::default()).unwrap()
    }

    #[test]
    fn degenerate_single_tag_corpus() {
        let model = train("dog\tL1\tNOUN\n\n");
        assert_eq!(model.tagset(), &[UPosTag::Noun]);
        // P(NOUN | START) carries nearly all mass; only smoothing leaks.
        let p = model.log_transition(None, Some(0)).exp();
        assert!(p > 0.6, "p = {p}");
        let output = model
            .viterbi_tag(&corpus_from("dog\tL1\t_\n\n").sentences()[0])
            .unwrap();
        assert_eq!(output.tags(), &[UPosTag::Noun]);
        assert!(output.confidences()[0] > 0.9);
    }

    #[test]
    fn training_is_deterministic_and_serializable() {
        let text = "dog\tL1\tNOUN\nbarks\tL1\tVERB\n\nthe\tL1\tDET\ndog\tL1\tNOUN\n\n";
        let a = train(text);
        let b = train(text);
        let json_a = serde_json::to_string(&a).unwrap();
        let json_b = serde_json::to_string(&b).unwrap();
        assert_eq!(json_a, json_b);
        let back: TaggerModel = serde_json::from_str(&json_a).unwrap();
        assert_eq!(back.tagset(), a.tagset());
        assert_eq!(
            back.log_transition(None, Some(0)),
            a.log_transition(None, Some(0))
        );
    }

    #[test]
    fn missing_gold_tag_is_an_error() {
        let corpus = corpus_from("dog\tL1\t_\n\n");
        let err = TaggerModel::train(&corpus, TaggerConfig::default()).unwrap_err();
        assert!(matches!(err, TaggerError::LabelMissing { .. }));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let corpus = Corpus::empty("e");
        assert!(matches!(
            TaggerModel::train(&corpus, TaggerConfig::default()),
            Err(TaggerError::EmptyTraining)
        ));
    }

    #[test]
    fn emission_ratio_matches_hand_computed_witten_bell() {
        // "bank" appears 3x as NOUN and 1x as VERB; filler words pin the
        // per-tag totals. NOUN emits: bank 3, river 1, shore 1
        // (total 5, 3 distinct); VERB emits: bank 1, run 2 (total 3,
        // 2 distinct).
        let text = "bank\tL1\tNOUN\nbank\tL1\tNOUN\nbank\tL1\tNOUN\nbank\tL1\tVERB\n\n\
                    river\tL1\tNOUN\nshore\tL1\tNOUN\nrun\tL1\tVERB\nrun\tL1\tVERB\n\n";
        let model = train(text);
        let noun = model
            .tagset()
            .iter()
            .position(|&t| t == UPosTag::Noun)
            .unwrap();
        let verb = model
            .tagset()
            .iter()
            .position(|&t| t == UPosTag::Verb)
            .unwrap();
        let p_noun = model.known_emission_prob(noun, "bank");
        let p_verb = model.known_emission_prob(verb, "bank");
        assert_abs_diff_eq!(p_noun, 3.0 / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p_verb, 1.0 / 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p_noun / p_verb, (3.0 / 8.0) / (1.0 / 5.0), epsilon = 1e-12);
    }

    #[test]
    fn emission_distribution_sums_to_one_with_reserved_mass() {
        let model = train(
            "a\tL1\tNOUN\nb\tL1\tNOUN\na\tL1\tVERB\nc\tL1\tVERB\nc\tL1\tVERB\n\n",
        );
        for t in 0..model.tagset().len() {
            let seen: f64 = model
                .vocab()
                .keys()
                .map(|w| model.known_emission_prob(t, w))
                .sum();
            let total = seen + model.unseen_mass(t);
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let model = train(
            "the\tL1\tDET\ndog\tL1\tNOUN\nbarks\tL1\tVERB\n\nthe\tL1\tDET\ncat\tL1\tNOUN\n\n",
        );
        let n = model.tagset().len();
        for row in std::iter::once(None).chain((0..n).map(Some)) {
            let sum: f64 = (0..n)
                .map(Some)
                .chain(std::iter::once(None))
                .map(|col| model.log_transition(row, col).exp())
                .sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
        }
    }

    /// Independent successive-abstraction oracle for the suffix model,
    /// computed from first principles on a five-word toy corpus.
    #[test]
    fn suffix_distribution_matches_hand_computation() {
        // Rare words (threshold 2): "aling" VERB x1, "bling" VERB x2,
        // "mok" NOUN x1. "car" is frequent (3x) and stays out.
        let text = "car\tL1\tNOUN\ncar\tL1\tNOUN\ncar\tL1\tNOUN\naling\tL1\tVERB\nmok\tL1\tNOUN\n\n\
                    bling\tL1\tVERB\nbling\tL1\tVERB\n\n";
        let model = train(text);
        let tags = model.tagset().to_vec();
        assert_eq!(tags, vec![UPosTag::Noun, UPosTag::Verb]);

        // Oracle arithmetic, independent of the implementation:
        // rare totals: NOUN 1, VERB 3 -> P0 = [1/4, 3/4];
        // theta = population std of [0.25, 0.75] = 0.25;
        // suffix "g": counts [0, 3] -> P1 = ([0,1] + θ·P0) / (1+θ)
        // suffix "ng", "ing": same counts -> repeat the interpolation.
        let theta = 0.25f64;
        let p0 = [0.25f64, 0.75f64];
        let step = |prev: [f64; 2], mle: [f64; 2]| {
            [
                (mle[0] + theta * prev[0]) / (1.0 + theta),
                (mle[1] + theta * prev[1]) / (1.0 + theta),
            ]
        };
        let p1 = step(p0, [0.0, 1.0]);
        let p2 = step(p1, [0.0, 1.0]);
        let p3 = step(p2, [0.0, 1.0]);
        let p4 = step(p3, [0.0, 1.0]); // suffix "ling"

        let dist = model.suffix_tag_distribution("zzing");
        // "zzing" matches suffixes g, ng, ing, but not "zing".
        assert_abs_diff_eq!(dist[0], p3[0], epsilon = 1e-12);
        assert_abs_diff_eq!(dist[1], p3[1], epsilon = 1e-12);
        let dist4 = model.suffix_tag_distribution("zling");
        assert_abs_diff_eq!(dist4[1], p4[1], epsilon = 1e-12);
        assert_abs_diff_eq!(dist[0] + dist[1], 1.0, epsilon = 1e-12);
        assert!(dist[1] > 0.9, "VERB should dominate, got {dist:?}");
    }

    #[test]
    fn unknown_word_with_verb_suffix_prefers_verb() {
        let text = "car\tL1\tNOUN\ncar\tL1\tNOUN\ncar\tL1\tNOUN\naling\tL1\tVERB\nmok\tL1\tNOUN\n\n\
                    bling\tL1\tVERB\nbling\tL1\tVERB\n\n";
        let model = train(text);
        let sentence = corpus_from("grooling\tL1\t_\n\n").sentences()[0].clone();
        let output = model.viterbi_tag(&sentence).unwrap();
        assert_eq!(output.tags(), &[UPosTag::Verb]);
    }

    fn ambiguous_model() -> TaggerModel {
        train(
            "the\tL1\tDET\nfish\tL1\tNOUN\nswim\tL1\tVERB\n\n\
             fish\tL1\tVERB\nnow\tL1\tADV\n\n\
             the\tL1\tDET\nfish\tL1\tNOUN\n\n\
             swim\tL1\tNOUN\nnow\tL1\tADV\n\n",
        )
    }

    /// Exhaustive decode oracle over all tag sequences.
    fn brute_force_best(model: &TaggerModel, tokens: &[&str]) -> (Vec<usize>, f64) {
        let n = model.tagset().len();
        let len = tokens.len();
        let mut best = (Vec::new(), f64::NEG_INFINITY);
        let total = n.pow(len as u32);
        for code in 0..total {
            let mut seq = Vec::with_capacity(len);
            let mut c = code;
            for _ in 0..len {
                seq.push(c % n);
                c /= n;
            }
            let mut score = 0.0;
            let mut prev = None;
            for (i, &t) in seq.iter().enumerate() {
                score += model.log_transition(prev, Some(t));
                score += model.log_emission(t, tokens[i]);
                prev = Some(t);
            }
            score += model.log_transition(prev, None);
            if score > best.1 {
                best = (seq, score);
            }
        }
        best
    }

    #[test]
    fn viterbi_matches_brute_force_on_three_tokens() {
        let model = ambiguous_model();
        let tokens = ["the", "fish", "swim"];
        let output = model.tag_tokens(&tokens).unwrap();
        let (oracle, oracle_score) = brute_force_best(&model, &tokens);
        let got: Vec<usize> = output
            .tags()
            .iter()
            .map(|tag| model.tagset().iter().position(|t| t == tag).unwrap())
            .collect();
        assert_eq!(got, oracle);
        // And the decoded path's score equals the oracle's.
        let mut score = 0.0;
        let mut prev = None;
        for (i, &t) in got.iter().enumerate() {
            score += model.log_transition(prev, Some(t)) + model.log_emission(t, tokens[i]);
            prev = Some(t);
        }
        score += model.log_transition(prev, None);
        assert_abs_diff_eq!(score, oracle_score, epsilon = 1e-9);
    }

    /// Marginal oracle by direct enumeration of every tag sequence.
    fn brute_force_marginals(model: &TaggerModel, tokens: &[&str]) -> Vec<Vec<f64>> {
        let n = model.tagset().len();
        let len = tokens.len();
        let mut weights = vec![vec![0.0f64; n]; len];
        let mut z = 0.0f64;
        let total = n.pow(len as u32);
        for code in 0..total {
            let mut seq = Vec::with_capacity(len);
            let mut c = code;
            for _ in 0..len {
                seq.push(c % n);
                c /= n;
            }
            let mut score = 0.0;
            let mut prev = None;
            for (i, &t) in seq.iter().enumerate() {
                score += model.log_transition(prev, Some(t));
                score += model.log_emission(t, tokens[i]);
                prev = Some(t);
            }
            score += model.log_transition(prev, None);
            let w = score.exp();
            z += w;
            for (i, &t) in seq.iter().enumerate() {
                weights[i][t] += w;
            }
        }
        weights
            .into_iter()
            .map(|row| row.into_iter().map(|w| w / z).collect())
            .collect()
    }

    #[test]
    fn posteriors_match_enumeration_on_two_tokens() {
        let model = ambiguous_model();
        let tokens = ["fish", "now"];
        let posteriors = model.token_posteriors_for_tokens(&tokens).unwrap();
        let oracle = brute_force_marginals(&model, &tokens);
        for i in 0..tokens.len() {
            let sum: f64 = posteriors.marginals[i].iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
            for t in 0..model.tagset().len() {
                assert_abs_diff_eq!(posteriors.marginals[i][t], oracle[i][t], epsilon = 1e-9);
            }
        }
        let rel = (posteriors.forward_loglik - posteriors.backward_loglik).abs()
            / posteriors.forward_loglik.abs().max(1e-12);
        assert!(rel < 1e-6, "forward/backward disagree: rel {rel}");
    }

    #[test]
    fn one_tag_model_has_unit_posteriors() {
        let model = train("dog\tL1\tNOUN\ncat\tL1\tNOUN\n\n");
        let posteriors = model.token_posteriors_for_tokens(&["dog", "cat"]).unwrap();
        for row in &posteriors.marginals {
            assert_abs_diff_eq!(row[0], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn whole_sentence_span_equals_viterbi() {
        let model = ambiguous_model();
        let sentence = corpus_from("the\tL1\t_\nfish\tL1\t_\nswim\tL1\t_\n\n").sentences()[0].clone();
        let span = TagSpan::new(0, sentence.len(), LangLabel::L1);
        assert_eq!(
            model.tag_span(&sentence, &span).unwrap(),
            model.viterbi_tag(&sentence).unwrap()
        );
    }

    #[test]
    fn single_token_span_matches_direct_product() {
        let model = ambiguous_model();
        let sentence = corpus_from("fish\tL1\t_\nnow\tL1\t_\n\n").sentences()[0].clone();
        let span = TagSpan::new(0, 1, LangLabel::L1);
        let output = model.tag_span(&sentence, &span).unwrap();
        // argmax over P(t|START) * P(word|t) * P(STOP|t)
        let mut best = (0usize, f64::NEG_INFINITY);
        for t in 0..model.tagset().len() {
            let score = model.log_transition(None, Some(t))
                + model.log_emission(t, "fish")
                + model.log_transition(Some(t), None);
            if score > best.1 {
                best = (t, score);
            }
        }
        assert_eq!(output.tags()[0], model.tagset()[best.0]);
    }

    #[test]
    fn out_of_bounds_span_is_rejected() {
        let model = ambiguous_model();
        let sentence = corpus_from("fish\tL1\t_\n\n").sentences()[0].clone();
        let span = TagSpan::new(0, 2, LangLabel::L1);
        assert!(matches!(
            model.tag_span(&sentence, &span),
            Err(TaggerError::BadSpan { .. })
        ));
        let empty = TagSpan::new(1, 1, LangLabel::L1);
        assert!(matches!(
            model.tag_span(&sentence, &empty),
            Err(TaggerError::BadSpan { .. })
        ));
    }

    #[test]
    fn empty_token_slice_is_an_error() {
        let model = ambiguous_model();
        assert!(matches!(
            model.tag_tokens(&[]),
            Err(TaggerError::EmptySentence)
        ));
    }

    #[test]
    fn chunked_decode_can_differ_from_full_decode() {
        // Seeded search over tiny corpora for an instance where decoding
        // two halves separately disagrees with the full-sentence decode.
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let words = ["fa", "ge", "hi", "jo"];
        let tags = [UPosTag::Noun, UPosTag::Verb, UPosTag::Adj];
        let mut found = false;
        'seeds: for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut text = String::new();
            for _ in 0..6 {
                for _ in 0..4 {
                    let w = words[rng.gen_range(0..words.len())];
                    let t = tags[rng.gen_range(0..tags.len())];
                    text.push_str(&format!("{w}\tL1\t{}\n", t.name()));
                }
                text.push('\n');
            }
            let Ok(model) = TaggerModel::train(&corpus_from(&text), TaggerConfig::default())
            else {
                continue;
            };
            let tokens = ["fa", "ge", "hi", "jo"];
            let full = model.tag_tokens(&tokens).unwrap();
            let left = model.tag_tokens(&tokens[..2]).unwrap();
            let right = model.tag_tokens(&tokens[2..]).unwrap();
            let stitched: Vec<UPosTag> = left
                .tags()
                .iter()
                .chain(right.tags().iter())
                .copied()
                .collect();
            if stitched != full.tags() {
                found = true;
                break 'seeds;
            }
        }
        assert!(found, "no chunk-vs-full divergence found in 200 seeds");
    }
}
