//! Deterministic synthetic code-switched corpus generation.
//!
//! Two artificial languages share a vowel inventory but draw most
//! consonants from disjoint sets, so character models can separate them
//! well without being perfect. Each language owns a tag-transition chain
//! and a tag-conditional lexicon; a configurable fraction of word forms
//! (`homograph_rate`) is shared between the languages with divergent tag
//! assignments, which is the knob emulating how close the language pair
//! is. Everything derives from one seeded generator, so equal configs
//! produce byte-identical corpora.

use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use std::collections::BTreeSet;

use crate::corpus::{corpus_stats, Corpus, CorpusStats};
use crate::types::{LangLabel, Sentence, TaggedToken, UPosTag};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("bad generator config: {0}")]
    BadConfig(String),
}

/// Generator parameters. `homograph_rate` emulates language-pair
/// closeness: the close-pair preset uses 0.25, the far-pair preset 0.02.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_sentences: usize,
    pub vocab_per_lang: usize,
    pub tagset_size: usize,
    pub cs_sentence_rate: f64,
    pub within_cs_switch_rate: f64,
    pub homograph_rate: f64,
    pub mean_sentence_len: usize,
}

impl SynthConfig {
    pub fn preset(name: &str, seed: u64) -> Option<SynthConfig> {
        let homograph_rate = match name {
            "close-pair" => 0.25,
            "far-pair" => 0.02,
            _ => return None,
        };
        Some(SynthConfig {
            homograph_rate,
            ..SynthConfig::base(seed)
        })
    }

    /// Shared defaults behind the presets.
    pub fn base(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            n_sentences: 10_000,
            vocab_per_lang: 1200,
            tagset_size: 10,
            cs_sentence_rate: 0.2,
            within_cs_switch_rate: 0.3,
            homograph_rate: 0.02,
            mean_sentence_len: 9,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, rate) in [
            ("cs_sentence_rate", self.cs_sentence_rate),
            ("within_cs_switch_rate", self.within_cs_switch_rate),
            ("homograph_rate", self.homograph_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) || !rate.is_finite() {
                return Err(SynthError::BadConfig(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        if self.n_sentences < 5 {
            return Err(SynthError::BadConfig(
                "n_sentences must be at least 5 for the 80/20 split".to_string(),
            ));
        }
        if self.tagset_size == 0 || self.tagset_size > UPosTag::ALL.len() {
            return Err(SynthError::BadConfig(format!(
                "tagset_size must lie in 1..={}, got {}",
                UPosTag::ALL.len(),
                self.tagset_size
            )));
        }
        if self.tagset_size == 1 && self.homograph_rate > 0.0 {
            return Err(SynthError::BadConfig(
                "homographs need at least two tags to diverge".to_string(),
            ));
        }
        if self.vocab_per_lang < self.tagset_size {
            return Err(SynthError::BadConfig(format!(
                "vocab_per_lang ({}) must cover the tagset ({})",
                self.vocab_per_lang, self.tagset_size
            )));
        }
        if self.mean_sentence_len < 3 {
            return Err(SynthError::BadConfig(
                "mean_sentence_len must be at least 3".to_string(),
            ));
        }
        Ok(())
    }
}

/// Measured properties of one generated corpus pair, recorded for
/// reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasuredStats {
    pub pct_cs_generated: f64,
    pub train: CorpusStats,
    pub test: CorpusStats,
    /// Word types occurring in both the train and test portions.
    pub train_test_shared_types: usize,
    /// Word forms present in both languages' lexicons.
    pub cross_language_shared_forms: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub measured: MeasuredStats,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub train: Corpus,
    pub test: Corpus,
    pub manifest: SynthManifest,
}

// Internal generator constants. The exclusive consonant sets keep the two
// languages separable by character models; the shared consonants and the
// common vowels keep that separation imperfect, and homograph forms mix
// both pools so they look like either language.
const L1_CONSONANTS: &[char] = &['b', 'd', 'g', 'k'];
const L2_CONSONANTS: &[char] = &['p', 't', 'f', 'v'];
const SHARED_CONSONANTS: &[char] = &['m', 'n', 'r', 's', 'l', 'z'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];
const SHARED_CONSONANT_PROB: f64 = 0.65;
/// Fraction of a language's own words built from the fully mixed
/// character pool (loanword-like forms the identifier must memorize).
const MIXED_LOOK_PROB: f64 = 0.2;
/// Probability that a token is emitted under its word's secondary tag,
/// which is what makes tagging need context.
const SECONDARY_EMISSION_PROB: f64 = 0.15;
/// Zipf exponent for word frequencies within a tag's lexicon slice; the
/// steep tail keeps a realistic stock of rare and unseen words.
const ZIPF_EXPONENT: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    L1,
    L2,
}

#[derive(Debug, Clone)]
struct Word {
    form: String,
    primary: usize,
    secondary: Option<usize>,
}

#[derive(Debug, Clone)]
struct Lexicon {
    words: Vec<Word>,
    /// Per tag: indices of words with that primary tag.
    by_primary: Vec<Vec<usize>>,
    /// Per tag: indices of words with that secondary tag.
    by_secondary: Vec<Vec<usize>>,
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.gen_range(0..items.len())]
}

fn gen_form(rng: &mut ChaCha8Rng, side: Option<Side>) -> String {
    let syllables = rng.gen_range(1..=3);
    let mut form = String::with_capacity(syllables * 2);
    for _ in 0..syllables {
        let consonant = match side {
            Some(Side::L1) => {
                if rng.gen_bool(SHARED_CONSONANT_PROB) {
                    pick(rng, SHARED_CONSONANTS)
                } else {
                    pick(rng, L1_CONSONANTS)
                }
            }
            Some(Side::L2) => {
                if rng.gen_bool(SHARED_CONSONANT_PROB) {
                    pick(rng, SHARED_CONSONANTS)
                } else {
                    pick(rng, L2_CONSONANTS)
                }
            }
            // Homographs mix every pool.
            None => {
                let all: Vec<char> = L1_CONSONANTS
                    .iter()
                    .chain(SHARED_CONSONANTS)
                    .chain(L2_CONSONANTS)
                    .copied()
                    .collect();
                pick(rng, &all)
            }
        };
        form.push(consonant);
        form.push(pick(rng, VOWELS));
    }
    form
}

fn gen_unique_form(
    rng: &mut ChaCha8Rng,
    side: Option<Side>,
    taken: &mut BTreeSet<String>,
) -> String {
    loop {
        let form = gen_form(rng, side);
        if taken.insert(form.clone()) {
            return form;
        }
    }
}

fn other_tag(rng: &mut ChaCha8Rng, tag: usize, k: usize) -> usize {
    (tag + 1 + rng.gen_range(0..k - 1)) % k
}

fn build_lexicon(words: Vec<Word>, k: usize) -> Lexicon {
    let mut by_primary = vec![Vec::new(); k];
    let mut by_secondary = vec![Vec::new(); k];
    for (i, word) in words.iter().enumerate() {
        by_primary[word.primary].push(i);
        if let Some(secondary) = word.secondary {
            by_secondary[secondary].push(i);
        }
    }
    Lexicon {
        words,
        by_primary,
        by_secondary,
    }
}

impl Lexicon {
    /// Weighted pick within a tag's word list: earlier entries are more
    /// frequent (Zipf weights).
    fn sample_from(&self, rng: &mut ChaCha8Rng, list: &[usize]) -> usize {
        debug_assert!(!list.is_empty());
        let weights: Vec<f64> = (0..list.len())
            .map(|r| ((r + 1) as f64).powf(-ZIPF_EXPONENT))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut draw = rng.gen_range(0.0..total);
        for (pos, w) in weights.iter().enumerate() {
            if draw < *w {
                return list[pos];
            }
            draw -= w;
        }
        list[list.len() - 1]
    }

    fn emit(&self, rng: &mut ChaCha8Rng, tag: usize) -> &str {
        let use_secondary = !self.by_secondary[tag].is_empty()
            && rng.gen_bool(SECONDARY_EMISSION_PROB);
        let list = if use_secondary {
            &self.by_secondary[tag]
        } else {
            &self.by_primary[tag]
        };
        let word = self.sample_from(rng, list);
        &self.words[word].form
    }
}

/// One language's sentence machinery: a start distribution plus a
/// tag-transition row per tag.
#[derive(Debug, Clone)]
struct Chain {
    start: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

fn dirichlet_row(rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("valid gamma parameters");
    let mut row: Vec<f64> = (0..k).map(|_| gamma.sample(rng).max(1e-9)).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= total);
    row
}

fn sample_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut draw = rng.gen_range(0.0..1.0);
    for (i, p) in probs.iter().enumerate() {
        if draw < *p {
            return i;
        }
        draw -= p;
    }
    probs.len() - 1
}

/// Generates a train/test pair with gold tags, gold language labels, and
/// generator-consistent purity. Fully deterministic per config.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.tagset_size;
    let tagset: Vec<UPosTag> = UPosTag::ALL[..k].to_vec();

    // Lexicons: per-language own forms plus shared homograph forms with
    // divergent tag assignments.
    let n_homo = (config.homograph_rate * config.vocab_per_lang as f64).round() as usize;
    let n_own = config.vocab_per_lang - n_homo;
    let mut taken = BTreeSet::new();
    let homo_forms: Vec<String> = (0..n_homo)
        .map(|_| gen_unique_form(&mut rng, None, &mut taken))
        .collect();
    let own_l1: Vec<String> = (0..n_own)
        .map(|_| {
            let side = if rng.gen_bool(MIXED_LOOK_PROB) {
                None
            } else {
                Some(Side::L1)
            };
            gen_unique_form(&mut rng, side, &mut taken)
        })
        .collect();
    let own_l2: Vec<String> = (0..n_own)
        .map(|_| {
            let side = if rng.gen_bool(MIXED_LOOK_PROB) {
                None
            } else {
                Some(Side::L2)
            };
            gen_unique_form(&mut rng, side, &mut taken)
        })
        .collect();

    // Homograph forms are spread through the frequency ranks (not left in
    // the rare tail), so shared forms carry realistic token mass.
    let stride = if n_homo == 0 {
        usize::MAX
    } else {
        (config.vocab_per_lang / n_homo).max(2)
    };
    let mut build_words = |own: &[String], homo_primary_shift: bool| -> Vec<Word> {
        let mut words = Vec::with_capacity(config.vocab_per_lang);
        let mut own_iter = own.iter();
        let mut homo_iter = homo_forms.iter();
        for slot in 0..config.vocab_per_lang {
            let wants_homo = stride != usize::MAX && slot % stride == 1;
            let (form, is_homo) = if wants_homo {
                match homo_iter.next() {
                    Some(form) => (form, true),
                    None => (own_iter.next().expect("slot counts match"), false),
                }
            } else {
                match own_iter.next() {
                    Some(form) => (form, false),
                    None => (homo_iter.next().expect("slot counts match"), true),
                }
            };
            let mut primary = slot % k;
            if is_homo && homo_primary_shift {
                // The second language reads shared forms differently.
                primary = other_tag(&mut rng, primary, k);
            }
            let secondary = if k >= 2 {
                Some(other_tag(&mut rng, primary, k))
            } else {
                None
            };
            words.push(Word {
                form: form.clone(),
                primary,
                secondary,
            });
        }
        words
    };
    let lex_l1 = build_lexicon(build_words(&own_l1, false), k);
    let lex_l2 = build_lexicon(build_words(&own_l2, true), k);
    // Cyclic assignment guarantees every tag owns at least one word.
    debug_assert!(lex_l1.by_primary.iter().all(|l| !l.is_empty()));
    debug_assert!(lex_l2.by_primary.iter().all(|l| !l.is_empty()));

    let make_chain = |rng: &mut ChaCha8Rng| Chain {
        start: dirichlet_row(rng, k, 1.0),
        rows: (0..k).map(|_| dirichlet_row(rng, k, 1.0)).collect(),
    };
    let chain_l1 = make_chain(&mut rng);
    let chain_l2 = make_chain(&mut rng);

    let geometric_p = 1.0 / (config.mean_sentence_len as f64 - 2.0);
    let geometric = Geometric::new(geometric_p.min(1.0)).expect("valid geometric parameter");
    let max_len = 2 * config.mean_sentence_len;

    let mut sentences = Vec::with_capacity(config.n_sentences);
    let mut n_cs_flagged = 0usize;
    for index in 0..config.n_sentences {
        let len = ((3 + geometric.sample(&mut rng) as usize).min(max_len)).max(3);
        let is_cs = config.cs_sentence_rate > 0.0 && rng.gen_bool(config.cs_sentence_rate);
        // Language run per token; flagged CS sentences always realize at
        // least one switch so gold purity matches the flag.
        let mut langs = Vec::with_capacity(len);
        if is_cs {
            n_cs_flagged += 1;
            let mut current = if rng.gen_bool(0.5) { Side::L1 } else { Side::L2 };
            langs.push(current);
            let mut switched = false;
            for _ in 1..len {
                if config.within_cs_switch_rate > 0.0
                    && rng.gen_bool(config.within_cs_switch_rate)
                {
                    current = match current {
                        Side::L1 => Side::L2,
                        Side::L2 => Side::L1,
                    };
                    switched = true;
                }
                langs.push(current);
            }
            if !switched {
                let at = rng.gen_range(1..len);
                for lang in langs.iter_mut().skip(at) {
                    *lang = match *lang {
                        Side::L1 => Side::L2,
                        Side::L2 => Side::L1,
                    };
                }
            }
        } else {
            let side = if rng.gen_bool(0.5) { Side::L1 } else { Side::L2 };
            langs.extend(std::iter::repeat(side).take(len));
        }

        let mut tokens = Vec::with_capacity(len);
        let mut prev_tag: Option<usize> = None;
        for &side in &langs {
            let chain = match side {
                Side::L1 => &chain_l1,
                Side::L2 => &chain_l2,
            };
            let probs = match prev_tag {
                None => &chain.start,
                Some(p) => &chain.rows[p],
            };
            let tag = sample_index(&mut rng, probs);
            prev_tag = Some(tag);
            let lex = match side {
                Side::L1 => &lex_l1,
                Side::L2 => &lex_l2,
            };
            let form = lex.emit(&mut rng, tag).to_string();
            let label = match side {
                Side::L1 => LangLabel::L1,
                Side::L2 => LangLabel::L2,
            };
            tokens.push(
                TaggedToken::new(form)
                    .expect("generated forms are non-empty and whitespace-free")
                    .with_lang(label)
                    .with_tag(tagset[tag]),
            );
        }
        sentences.push(
            Sentence::new(format!("s{}", index + 1), tokens)
                .expect("generated sentences are non-empty"),
        );
    }

    let n_train = config.n_sentences * 4 / 5;
    let test_sentences = sentences.split_off(n_train);
    let train = Corpus::new("synth-train", sentences).expect("ids are unique by construction");
    let test = Corpus::new("synth-test", test_sentences).expect("ids are unique by construction");

    let train_stats = corpus_stats(&train).expect("generated labels are complete");
    let test_stats = corpus_stats(&test).expect("generated labels are complete");
    let train_types: BTreeSet<&str> = train
        .iter()
        .flat_map(|s| s.tokens().iter().map(|t| t.text()))
        .collect();
    let test_types: BTreeSet<&str> = test
        .iter()
        .flat_map(|s| s.tokens().iter().map(|t| t.text()))
        .collect();
    let manifest = SynthManifest {
        config: *config,
        measured: MeasuredStats {
            pct_cs_generated: 100.0 * n_cs_flagged as f64 / config.n_sentences as f64,
            train: train_stats,
            test: test_stats,
            train_test_shared_types: train_types.intersection(&test_types).count(),
            cross_language_shared_forms: n_homo,
        },
    };
    Ok(SynthOutput {
        train,
        test,
        manifest,
    })
}
