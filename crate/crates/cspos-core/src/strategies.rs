//! The seven experimental conditions over trained resources: four ways of
//! combining two monolingual taggers at inference time (COMB1-COMB4) and
//! three integrated training regimes (INT1-INT3).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError};
use crate::lid::{LidError, LidModel};
use crate::modelfile::{self, ModelFileError};
use crate::stacker::{build_features, StackError, StackFeatures, StackModel};
use crate::tagger::{TagSpan, TaggerError, TaggerModel};
use crate::types::{CoreError, LangLabel, Sentence, TaggerOutput, UPosTag};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("unknown condition {0:?}")]
    UnknownCondition(String),
    #[error("bundle is missing resource {0}")]
    MissingResource(String),
    #[error("the two monolingual taggers must share one tagset")]
    TagsetMismatch,
    #[error("language labels cover {labels} tokens but the sentence has {tokens}")]
    LabelsLength { labels: usize, tokens: usize },
    #[error("selected training data for {condition} is empty")]
    EmptySelection { condition: IntStrategy },
    #[error("language identification failed: {0}")]
    Lid(#[from] LidError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
}

/// The three tagger-combination strategies that pick between the two
/// monolingual taggers per token or chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CombStrategy {
    /// Language identification first, then each same-language chunk is
    /// tagged standalone by the matching tagger.
    LidThenTag,
    /// Both taggers decode the full sentence, then each token takes the
    /// tag from the tagger matching its language label.
    TagThenLid,
    /// Both taggers decode the full sentence, then each token takes the
    /// higher-confidence tag.
    ConfidencePick,
}

/// The three integrated training regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntStrategy {
    /// Code-switched training data only.
    CsOnly,
    /// Both monolingual corpora merged.
    AllMono,
    /// Merged monolingual corpora plus the code-switched data.
    AllMonoPlusCs,
}

impl fmt::Display for IntStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(ConditionId::Integrated(*self).short_name())
    }
}

/// Closed identifier set for the seven experimental conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    Combined(CombStrategy),
    Stacked,
    Integrated(IntStrategy),
}

impl ConditionId {
    pub const ALL: [ConditionId; 7] = [
        ConditionId::Combined(CombStrategy::LidThenTag),
        ConditionId::Combined(CombStrategy::TagThenLid),
        ConditionId::Combined(CombStrategy::ConfidencePick),
        ConditionId::Stacked,
        ConditionId::Integrated(IntStrategy::CsOnly),
        ConditionId::Integrated(IntStrategy::AllMono),
        ConditionId::Integrated(IntStrategy::AllMonoPlusCs),
    ];

    /// The short identifier accepted on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            ConditionId::Combined(CombStrategy::LidThenTag) => "COMB1",
            ConditionId::Combined(CombStrategy::TagThenLid) => "COMB2",
            ConditionId::Combined(CombStrategy::ConfidencePick) => "COMB3",
            ConditionId::Stacked => "COMB4",
            ConditionId::Integrated(IntStrategy::CsOnly) => "INT1",
            ConditionId::Integrated(IntStrategy::AllMono) => "INT2",
            ConditionId::Integrated(IntStrategy::AllMonoPlusCs) => "INT3",
        }
    }

    /// Descriptive label used in report rows.
    pub fn label(self) -> &'static str {
        match self {
            ConditionId::Combined(CombStrategy::LidThenTag) => "COMB1:LID-MonoLT",
            ConditionId::Combined(CombStrategy::TagThenLid) => "COMB2:MonoLT-LID",
            ConditionId::Combined(CombStrategy::ConfidencePick) => "COMB3:MonoLT-Conf",
            ConditionId::Stacked => "COMB4:MonoLT-SVM",
            ConditionId::Integrated(IntStrategy::CsOnly) => "INT1:CSD",
            ConditionId::Integrated(IntStrategy::AllMono) => "INT2:AllMonoData",
            ConditionId::Integrated(IntStrategy::AllMonoPlusCs) => "INT3:AllMonoData+CSD",
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ConditionId {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, StrategyError> {
        let upper = s.to_ascii_uppercase();
        ConditionId::ALL
            .iter()
            .copied()
            .find(|c| c.short_name() == upper)
            .ok_or_else(|| StrategyError::UnknownCondition(s.to_string()))
    }
}

/// Every trained resource a run can need. The two monolingual taggers
/// must share one tagset; the stacker and integrated taggers are present
/// only when the corresponding conditions will run.
#[derive(Debug, Clone)]
pub struct ResourceBundle {
    tagger_l1: TaggerModel,
    tagger_l2: TaggerModel,
    lid: LidModel,
    stacker: Option<StackModel>,
    integrated: BTreeMap<IntStrategy, TaggerModel>,
    /// Tokens labeled `Other` are routed to L1 by default.
    route_other_to_l2: bool,
}

impl ResourceBundle {
    pub fn new(
        tagger_l1: TaggerModel,
        tagger_l2: TaggerModel,
        lid: LidModel,
    ) -> Result<ResourceBundle, StrategyError> {
        if tagger_l1.tagset() != tagger_l2.tagset() {
            return Err(StrategyError::TagsetMismatch);
        }
        Ok(ResourceBundle {
            tagger_l1,
            tagger_l2,
            lid,
            stacker: None,
            integrated: BTreeMap::new(),
            route_other_to_l2: false,
        })
    }

    pub fn with_stacker(mut self, stacker: StackModel) -> Self {
        self.stacker = Some(stacker);
        self
    }

    pub fn with_integrated(mut self, condition: IntStrategy, model: TaggerModel) -> Self {
        self.integrated.insert(condition, model);
        self
    }

    pub fn route_other_to_l2(mut self, yes: bool) -> Self {
        self.route_other_to_l2 = yes;
        self
    }

    pub fn tagger_l1(&self) -> &TaggerModel {
        &self.tagger_l1
    }

    pub fn tagger_l2(&self) -> &TaggerModel {
        &self.tagger_l2
    }

    pub fn lid(&self) -> &LidModel {
        &self.lid
    }

    pub fn stacker(&self) -> Option<&StackModel> {
        self.stacker.as_ref()
    }

    pub fn integrated(&self, condition: IntStrategy) -> Option<&TaggerModel> {
        self.integrated.get(&condition)
    }

    fn tagger_for(&self, lang: LangLabel) -> &TaggerModel {
        match self.effective_lang(lang) {
            LangLabel::L2 => &self.tagger_l2,
            _ => &self.tagger_l1,
        }
    }

    fn effective_lang(&self, lang: LangLabel) -> LangLabel {
        match lang {
            LangLabel::Other(_) => {
                if self.route_other_to_l2 {
                    LangLabel::L2
                } else {
                    LangLabel::L1
                }
            }
            concrete => concrete,
        }
    }

    /// Writes every resource as a named model file in `dir`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<(), StrategyError> {
        let dir = dir.as_ref();
        modelfile::save(dir.join("tagger_l1.json"), "cspos-tagger", &self.tagger_l1)?;
        modelfile::save(dir.join("tagger_l2.json"), "cspos-tagger", &self.tagger_l2)?;
        modelfile::save(dir.join("lid.json"), "cspos-lid", &self.lid)?;
        if let Some(stacker) = &self.stacker {
            modelfile::save(dir.join("stacker.json"), "cspos-stacker", stacker)?;
        }
        for (condition, model) in &self.integrated {
            let file = match condition {
                IntStrategy::CsOnly => "int1.json",
                IntStrategy::AllMono => "int2.json",
                IntStrategy::AllMonoPlusCs => "int3.json",
            };
            modelfile::save(dir.join(file), "cspos-tagger", model)?;
        }
        Ok(())
    }

    /// Loads a bundle from a directory laid out by [`save_dir`]:
    /// `tagger_l1.json`, `tagger_l2.json`, `lid.json` required;
    /// `stacker.json` and `int1..3.json` picked up when present.
    ///
    /// [`save_dir`]: ResourceBundle::save_dir
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<ResourceBundle, StrategyError> {
        let dir = dir.as_ref();
        let tagger_l1: TaggerModel = modelfile::load(dir.join("tagger_l1.json"), "cspos-tagger")?;
        let tagger_l2: TaggerModel = modelfile::load(dir.join("tagger_l2.json"), "cspos-tagger")?;
        let lid: LidModel = modelfile::load(dir.join("lid.json"), "cspos-lid")?;
        let mut bundle = ResourceBundle::new(tagger_l1, tagger_l2, lid)?;
        let stacker_path = dir.join("stacker.json");
        if stacker_path.exists() {
            bundle.stacker = Some(modelfile::load(stacker_path, "cspos-stacker")?);
        }
        for (condition, file) in [
            (IntStrategy::CsOnly, "int1.json"),
            (IntStrategy::AllMono, "int2.json"),
            (IntStrategy::AllMonoPlusCs, "int3.json"),
        ] {
            let path = dir.join(file);
            if path.exists() {
                bundle
                    .integrated
                    .insert(condition, modelfile::load(path, "cspos-tagger")?);
            }
        }
        Ok(bundle)
    }
}

/// Maximal runs of identical effective language labels, in order.
pub fn spans_from_labels(labels: &[LangLabel], bundle: &ResourceBundle) -> Vec<TagSpan> {
    let mut spans = Vec::new();
    let mut start = 0usize;
    for i in 1..=labels.len() {
        let boundary = i == labels.len()
            || bundle.effective_lang(labels[i]) != bundle.effective_lang(labels[start]);
        if boundary {
            spans.push(TagSpan::new(
                start,
                i,
                bundle.effective_lang(labels[start]),
            ));
            start = i;
        }
    }
    spans
}

fn check_labels(labels: &[LangLabel], sentence: &Sentence) -> Result<(), StrategyError> {
    if labels.len() != sentence.len() {
        return Err(StrategyError::LabelsLength {
            labels: labels.len(),
            tokens: sentence.len(),
        });
    }
    Ok(())
}

/// COMB1 with externally supplied labels (e.g. a gold-label oracle):
/// chunks are tagged standalone by the language-matching tagger and the
/// outputs concatenated.
pub fn run_comb1_with_labels(
    bundle: &ResourceBundle,
    sentence: &Sentence,
    labels: &[LangLabel],
) -> Result<TaggerOutput, StrategyError> {
    check_labels(labels, sentence)?;
    let mut tags = Vec::with_capacity(sentence.len());
    let mut confidences = Vec::with_capacity(sentence.len());
    for span in spans_from_labels(labels, bundle) {
        let tagger = bundle.tagger_for(span.lang);
        let output = tagger.tag_span(sentence, &span)?;
        tags.extend_from_slice(output.tags());
        confidences.extend_from_slice(output.confidences());
    }
    Ok(TaggerOutput::new(tags, confidences)?)
}

/// COMB2 with externally supplied labels: both taggers decode the whole
/// sentence and each token takes the label-matching tagger's tag.
pub fn run_comb2_with_labels(
    bundle: &ResourceBundle,
    sentence: &Sentence,
    labels: &[LangLabel],
) -> Result<TaggerOutput, StrategyError> {
    check_labels(labels, sentence)?;
    let out1 = bundle.tagger_l1.viterbi_tag(sentence)?;
    let out2 = bundle.tagger_l2.viterbi_tag(sentence)?;
    let mut tags = Vec::with_capacity(sentence.len());
    let mut confidences = Vec::with_capacity(sentence.len());
    for (i, &label) in labels.iter().enumerate() {
        let pick = match bundle.effective_lang(label) {
            LangLabel::L2 => &out2,
            _ => &out1,
        };
        tags.push(pick.tags()[i]);
        confidences.push(pick.confidences()[i]);
    }
    Ok(TaggerOutput::new(tags, confidences)?)
}

/// COMB3 plus the number of exact confidence ties (which go to the L1
/// tagger).
pub fn run_comb3_counting(
    bundle: &ResourceBundle,
    sentence: &Sentence,
) -> Result<(TaggerOutput, u64), StrategyError> {
    let out1 = bundle.tagger_l1.viterbi_tag(sentence)?;
    let out2 = bundle.tagger_l2.viterbi_tag(sentence)?;
    let mut tags = Vec::with_capacity(sentence.len());
    let mut confidences = Vec::with_capacity(sentence.len());
    let mut ties = 0u64;
    for i in 0..sentence.len() {
        let c1 = out1.confidences()[i];
        let c2 = out2.confidences()[i];
        if c1 == c2 && out1.tags()[i] != out2.tags()[i] {
            ties += 1;
        }
        if c2 > c1 {
            tags.push(out2.tags()[i]);
            confidences.push(c2);
        } else {
            tags.push(out1.tags()[i]);
            confidences.push(c1);
        }
    }
    Ok((TaggerOutput::new(tags, confidences)?, ties))
}

/// Runs one of the three combined strategies on a sentence.
pub fn run_combined(
    bundle: &ResourceBundle,
    strategy: CombStrategy,
    sentence: &Sentence,
) -> Result<TaggerOutput, StrategyError> {
    match strategy {
        CombStrategy::LidThenTag => {
            let labeling = bundle.lid.label_sentence(sentence)?;
            run_comb1_with_labels(bundle, sentence, &labeling.labels)
        }
        CombStrategy::TagThenLid => {
            let labeling = bundle.lid.label_sentence(sentence)?;
            run_comb2_with_labels(bundle, sentence, &labeling.labels)
        }
        CombStrategy::ConfidencePick => Ok(run_comb3_counting(bundle, sentence)?.0),
    }
}

/// COMB4: both taggers decode the sentence, per-token features feed the
/// stacker, and its predictions are emitted with confidence 1.0 (the
/// stacker produces labels, not probabilities).
pub fn run_stacked(
    bundle: &ResourceBundle,
    sentence: &Sentence,
) -> Result<TaggerOutput, StrategyError> {
    let stacker = bundle
        .stacker()
        .ok_or_else(|| StrategyError::MissingResource("stacker".to_string()))?;
    let out1 = bundle.tagger_l1.viterbi_tag(sentence)?;
    let out2 = bundle.tagger_l2.viterbi_tag(sentence)?;
    let opts = stacker.feature_opts();
    let mut tags = Vec::with_capacity(sentence.len());
    for i in 0..sentence.len() {
        let features = build_features(&out1, &out2, i, opts)?;
        tags.push(stacker.predict(&features));
    }
    let confidences = vec![1.0; tags.len()];
    Ok(TaggerOutput::new(tags, confidences)?)
}

/// Assembles the training corpus for an integrated condition.
pub fn select_training_data(
    condition: IntStrategy,
    mono_l1: &Corpus,
    mono_l2: &Corpus,
    cs: &Corpus,
) -> Result<Corpus, StrategyError> {
    let selected = match condition {
        IntStrategy::CsOnly => Corpus::concat("int1-train", &[cs])?,
        IntStrategy::AllMono => Corpus::concat("int2-train", &[mono_l1, mono_l2])?,
        IntStrategy::AllMonoPlusCs => Corpus::concat("int3-train", &[mono_l1, mono_l2, cs])?,
    };
    if selected.is_empty() {
        return Err(StrategyError::EmptySelection { condition });
    }
    Ok(selected)
}

/// Runs an integrated condition: one Viterbi decode with the condition's
/// tagger.
pub fn run_integrated(
    bundle: &ResourceBundle,
    condition: IntStrategy,
    sentence: &Sentence,
) -> Result<TaggerOutput, StrategyError> {
    let model = bundle.integrated(condition).ok_or_else(|| {
        StrategyError::MissingResource(ConditionId::Integrated(condition).short_name().to_string())
    })?;
    Ok(model.viterbi_tag(sentence)?)
}

/// Dispatches any of the seven conditions on one sentence.
pub fn run_condition(
    bundle: &ResourceBundle,
    condition: ConditionId,
    sentence: &Sentence,
) -> Result<TaggerOutput, StrategyError> {
    match condition {
        ConditionId::Combined(strategy) => run_combined(bundle, strategy, sentence),
        ConditionId::Stacked => run_stacked(bundle, sentence),
        ConditionId::Integrated(strategy) => run_integrated(bundle, strategy, sentence),
    }
}

/// A condition applied to every sentence of a corpus, with COMB3 tie
/// counts aggregated for the evaluation logs.
#[derive(Debug, Clone)]
pub struct CorpusRun {
    pub outputs: Vec<TaggerOutput>,
    pub comb3_ties: u64,
}

/// Runs a condition over a whole corpus, in parallel across sentences
/// with deterministic output order.
pub fn run_corpus(
    bundle: &ResourceBundle,
    condition: ConditionId,
    corpus: &Corpus,
) -> Result<CorpusRun, StrategyError> {
    if condition == ConditionId::Combined(CombStrategy::ConfidencePick) {
        let results: Result<Vec<(TaggerOutput, u64)>, StrategyError> = corpus
            .sentences()
            .par_iter()
            .map(|sentence| run_comb3_counting(bundle, sentence))
            .collect();
        let results = results?;
        let comb3_ties = results.iter().map(|(_, t)| t).sum();
        Ok(CorpusRun {
            outputs: results.into_iter().map(|(o, _)| o).collect(),
            comb3_ties,
        })
    } else {
        let outputs: Result<Vec<TaggerOutput>, StrategyError> = corpus
            .sentences()
            .par_iter()
            .map(|sentence| run_condition(bundle, condition, sentence))
            .collect();
        Ok(CorpusRun {
            outputs: outputs?,
            comb3_ties: 0,
        })
    }
}

/// Per-sentence stacker training examples over a gold-tagged corpus: both
/// monolingual taggers decode each sentence and every token becomes one
/// (features, gold tag) pair.
pub fn build_stack_training(
    bundle: &ResourceBundle,
    corpus: &Corpus,
    opts: crate::stacker::FeatureOpts,
) -> Result<Vec<Vec<(StackFeatures, UPosTag)>>, StrategyError> {
    corpus
        .sentences()
        .par_iter()
        .map(|sentence| {
            let out1 = bundle.tagger_l1.viterbi_tag(sentence)?;
            let out2 = bundle.tagger_l2.viterbi_tag(sentence)?;
            let mut examples = Vec::with_capacity(sentence.len());
            for (i, token) in sentence.tokens().iter().enumerate() {
                let gold = token.gold_tag().ok_or_else(|| TaggerError::LabelMissing {
                    sentence_id: sentence.id().to_string(),
                    token_index: i,
                })?;
                examples.push((build_features(&out1, &out2, i, opts)?, gold));
            }
            Ok(examples)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus_str;
    use crate::lid::{CharLM, DEFAULT_PRIOR_L1, DEFAULT_SWITCH_PENALTY};
    use crate::stacker::{train_stacker, FeatureOpts};
    use crate::tagger::TaggerConfig;

    fn corpus_from(text: &str) -> Corpus {
        parse_corpus_str(text, "<mem>", "t").unwrap()
    }

    /// Two tiny languages with mostly disjoint alphabets, a shared
    /// tagset, and a context-ambiguous word each ("mano" / "xipo" are
    /// NOUN after a determiner but VERB after a noun).
    fn toy_bundle() -> ResourceBundle {
        let repeat = |block: &str, times: usize| block.repeat(times);
        let l1_text = format!(
            "{}{}{}{}{}",
            repeat("da\tL1\tDET\nmano\tL1\tNOUN\n\n", 4),
            repeat("bana\tL1\tNOUN\nmano\tL1\tVERB\n\n", 4),
            repeat("bana\tL1\tNOUN\n\n", 2),
            "bada\tL1\tVERB\nbana\tL1\tNOUN\n\n",
            "miko\tL1\tNOUN\n\n",
        );
        let l2_text = format!(
            "{}{}{}{}{}",
            repeat("tu\tL2\tDET\nxipo\tL2\tNOUN\n\n", 4),
            repeat("xozi\tL2\tNOUN\nxipo\tL2\tVERB\n\n", 4),
            repeat("xozi\tL2\tNOUN\n\n", 2),
            "zupi\tL2\tVERB\nxozi\tL2\tNOUN\n\n",
            "vemo\tL2\tNOUN\n\n",
        );
        let tagger_l1 =
            TaggerModel::train(&corpus_from(&l1_text), TaggerConfig::default()).unwrap();
        let tagger_l2 =
            TaggerModel::train(&corpus_from(&l2_text), TaggerConfig::default()).unwrap();
        let lm1 = CharLM::train(["da", "mano", "bada", "bana", "miko"].repeat(4), 3).unwrap();
        let lm2 = CharLM::train(["tu", "xipo", "zupi", "xozi", "vemo"].repeat(4), 3).unwrap();
        let lid = LidModel::new(lm1, lm2, DEFAULT_PRIOR_L1, DEFAULT_SWITCH_PENALTY).unwrap();
        ResourceBundle::new(tagger_l1, tagger_l2, lid).unwrap()
    }

    #[test]
    fn condition_ids_parse_and_print() {
        for condition in ConditionId::ALL {
            let parsed: ConditionId = condition.short_name().parse().unwrap();
            assert_eq!(parsed, condition);
        }
        assert!("COMB9".parse::<ConditionId>().is_err());
        assert!("banana".parse::<ConditionId>().is_err());
        assert_eq!(
            "comb4".parse::<ConditionId>().unwrap(),
            ConditionId::Stacked
        );
    }

    #[test]
    fn mismatched_tagsets_are_rejected() {
        let l1 = TaggerModel::train(
            &corpus_from("a\tL1\tNOUN\n\n"),
            TaggerConfig::default(),
        )
        .unwrap();
        let l2 = TaggerModel::train(
            &corpus_from("b\tL2\tVERB\n\n"),
            TaggerConfig::default(),
        )
        .unwrap();
        let lm = CharLM::train(["a"], 2).unwrap();
        let lid = LidModel::new(lm.clone(), lm, 0.5, 0.0).unwrap();
        assert!(matches!(
            ResourceBundle::new(l1, l2, lid),
            Err(StrategyError::TagsetMismatch)
        ));
    }

    #[test]
    fn spans_are_maximal_runs() {
        let bundle = toy_bundle();
        let labels = [
            LangLabel::L1,
            LangLabel::L1,
            LangLabel::L2,
            LangLabel::L1,
            LangLabel::L1,
        ];
        let spans = spans_from_labels(&labels, &bundle);
        assert_eq!(spans.len(), 3);
        assert_eq!((spans[0].start, spans[0].end), (0, 2));
        assert_eq!((spans[1].start, spans[1].end), (2, 3));
        assert_eq!((spans[2].start, spans[2].end), (3, 5));
    }

    #[test]
    fn other_labels_merge_into_l1_spans_by_default() {
        let bundle = toy_bundle();
        let labels = [
            LangLabel::L1,
            LangLabel::Other(crate::types::OtherKind::NamedEntity),
            LangLabel::L1,
        ];
        let spans = spans_from_labels(&labels, &bundle);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].lang, LangLabel::L1);
    }

    #[test]
    fn pure_sentence_with_gold_labels_equals_monolingual_decode() {
        let bundle = toy_bundle();
        let sentence = corpus_from("da\tL1\t_\nmano\tL1\t_\nbada\tL1\t_\n\n").sentences()[0]
            .clone();
        let labels = vec![LangLabel::L1; 3];
        let full = bundle.tagger_l1().viterbi_tag(&sentence).unwrap();
        let comb1 = run_comb1_with_labels(&bundle, &sentence, &labels).unwrap();
        let comb2 = run_comb2_with_labels(&bundle, &sentence, &labels).unwrap();
        assert_eq!(comb1, full);
        assert_eq!(comb2, full);
    }

    #[test]
    fn comb_outputs_preserve_token_count() {
        let bundle = toy_bundle();
        let sentence = corpus_from("da\tL1\t_\nxipo\tL2\t_\nzupi\tL2\t_\n\n").sentences()[0]
            .clone();
        for strategy in [
            CombStrategy::LidThenTag,
            CombStrategy::TagThenLid,
            CombStrategy::ConfidencePick,
        ] {
            let output = run_combined(&bundle, strategy, &sentence).unwrap();
            assert_eq!(output.len(), sentence.len());
        }
    }

    #[test]
    fn comb3_agreement_keeps_the_common_tag() {
        let bundle = toy_bundle();
        // "da" is DET for tagger L1; for tagger L2 it is unknown, so the
        // taggers may disagree; use an L1-only sentence and check that
        // any agreeing position keeps the shared tag.
        let sentence = corpus_from("da\tL1\t_\nmano\tL1\t_\n\n").sentences()[0].clone();
        let out1 = bundle.tagger_l1().viterbi_tag(&sentence).unwrap();
        let out2 = bundle.tagger_l2().viterbi_tag(&sentence).unwrap();
        let (comb3, _) = run_comb3_counting(&bundle, &sentence).unwrap();
        for i in 0..sentence.len() {
            if out1.tags()[i] == out2.tags()[i] {
                assert_eq!(comb3.tags()[i], out1.tags()[i]);
            }
            assert!(comb3.tags()[i] == out1.tags()[i] || comb3.tags()[i] == out2.tags()[i]);
        }
    }

    #[test]
    fn comb1_and_comb2_can_differ_on_mixed_sentences() {
        let bundle = toy_bundle();
        // "mano" is NOUN-leaning when decoded as a standalone chunk but
        // follows its left context in a full-sentence decode, so a mixed
        // sentence whose L2 prefix forms its own chunk exposes the
        // chunk-context effect. Search a small crafted set and require a
        // divergence to exist.
        let l2_words = ["tu", "xipo", "zupi", "xozi"];
        let l1_words = ["mano", "bana", "da"];
        let mut found = false;
        'outer: for &a in &l2_words {
            for &b in &l1_words {
                for rest in [None, Some("mano"), Some("bana")] {
                    let mut text = format!("{a}\tL2\t_\n{b}\tL1\t_\n");
                    if let Some(extra) = rest {
                        text.push_str(&format!("{extra}\tL1\t_\n"));
                    }
                    text.push('\n');
                    let sentence = corpus_from(&text).sentences()[0].clone();
                    let comb1 =
                        run_combined(&bundle, CombStrategy::LidThenTag, &sentence).unwrap();
                    let comb2 =
                        run_combined(&bundle, CombStrategy::TagThenLid, &sentence).unwrap();
                    if comb1.tags() != comb2.tags() {
                        found = true;
                        break 'outer;
                    }
                }
            }
        }
        assert!(found, "no chunk-context divergence found");
    }

    #[test]
    fn stacked_copy_task_follows_tagger_l1() {
        let bundle = toy_bundle();
        // Train the stacker to copy t1 using features built from real
        // decodes of L1 training sentences.
        let train = corpus_from(
            "da\tL1\tDET\nmano\tL1\tNOUN\nbada\tL1\tVERB\n\n\
             da\tL1\tDET\nbana\tL1\tNOUN\n\n",
        );
        let mut examples = Vec::new();
        for sentence in train.iter() {
            let out1 = bundle.tagger_l1().viterbi_tag(sentence).unwrap();
            let out2 = bundle.tagger_l2().viterbi_tag(sentence).unwrap();
            for i in 0..sentence.len() {
                let features =
                    build_features(&out1, &out2, i, FeatureOpts::default()).unwrap();
                examples.push((features, out1.tags()[i]));
            }
        }
        let stacker = train_stacker(&examples, 10, 1, FeatureOpts::default()).unwrap();
        let bundle = bundle.with_stacker(stacker);
        let sentence = corpus_from("da\tL1\t_\nmano\tL1\t_\nbada\tL1\t_\n\n").sentences()[0]
            .clone();
        let stacked = run_stacked(&bundle, &sentence).unwrap();
        let direct = bundle.tagger_l1().viterbi_tag(&sentence).unwrap();
        assert_eq!(stacked.tags(), direct.tags());
        assert!(stacked.confidences().iter().all(|&c| c == 1.0));
    }

    #[test]
    fn stacker_can_learn_trust_t2_on_disagreement() {
        use crate::types::TaggerOutput as Out;
        let bundle = toy_bundle();
        // Synthesize a training set realizing "t1 when agree else t2".
        let tags = [UPosTag::Det, UPosTag::Noun, UPosTag::Verb];
        let mut examples = Vec::new();
        for &t1 in &tags {
            for &t2 in &tags {
                let gold = if t1 == t2 { t1 } else { t2 };
                let o1 = Out::new(vec![t1], vec![0.9]).unwrap();
                let o2 = Out::new(vec![t2], vec![0.9]).unwrap();
                for _ in 0..5 {
                    examples.push((
                        build_features(&o1, &o2, 0, FeatureOpts::default()).unwrap(),
                        gold,
                    ));
                }
            }
        }
        let stacker = train_stacker(&examples, 20, 2, FeatureOpts::default()).unwrap();
        let bundle = bundle.with_stacker(stacker);
        // A disagreeing token: the stacker must side with tagger L2.
        let o1 = Out::new(vec![UPosTag::Det], vec![0.9]).unwrap();
        let o2 = Out::new(vec![UPosTag::Verb], vec![0.9]).unwrap();
        let features = build_features(&o1, &o2, 0, FeatureOpts::default()).unwrap();
        assert_eq!(
            bundle.stacker().unwrap().predict(&features),
            UPosTag::Verb
        );
    }

    #[test]
    fn missing_stacker_is_reported() {
        let bundle = toy_bundle();
        let sentence = corpus_from("da\tL1\t_\n\n").sentences()[0].clone();
        assert!(matches!(
            run_stacked(&bundle, &sentence),
            Err(StrategyError::MissingResource(_))
        ));
    }

    fn labeled_corpus(name: &str, ids: &[&str]) -> Corpus {
        let sentences = ids
            .iter()
            .map(|id| {
                Sentence::new(
                    *id,
                    vec![crate::types::TaggedToken::new("w")
                        .unwrap()
                        .with_lang(LangLabel::L1)
                        .with_tag(UPosTag::Noun)],
                )
                .unwrap()
            })
            .collect();
        Corpus::new(name, sentences).unwrap()
    }

    #[test]
    fn selection_rules() {
        let mono_l1 = labeled_corpus("l1", &["a1", "a2", "a3"]);
        let mono_l2 = labeled_corpus("l2", &["b1", "b2", "b3", "b4"]);
        let cs = labeled_corpus("cs", &["c1", "c2", "c3", "c4", "c5"]);
        let int1 = select_training_data(IntStrategy::CsOnly, &mono_l1, &mono_l2, &cs).unwrap();
        assert_eq!(int1.len(), 5);
        let int2 = select_training_data(IntStrategy::AllMono, &mono_l1, &mono_l2, &cs).unwrap();
        assert_eq!(int2.len(), 7);
        let order: Vec<&str> = int2.iter().map(|s| s.id()).collect();
        assert_eq!(order, vec!["a1", "a2", "a3", "b1", "b2", "b3", "b4"]);
        let int3 =
            select_training_data(IntStrategy::AllMonoPlusCs, &mono_l1, &mono_l2, &cs).unwrap();
        assert_eq!(int3.len(), int2.len() + cs.len());
    }

    #[test]
    fn empty_selection_is_an_error() {
        let empty = Corpus::empty("none");
        let cs = labeled_corpus("cs", &["c1"]);
        assert!(matches!(
            select_training_data(IntStrategy::AllMono, &empty, &empty, &cs),
            Err(StrategyError::EmptySelection { .. })
        ));
    }

    #[test]
    fn integrated_requires_model_and_is_deterministic() {
        let bundle = toy_bundle();
        let sentence = corpus_from("da\tL1\t_\nmano\tL1\t_\n\n").sentences()[0].clone();
        assert!(matches!(
            run_integrated(&bundle, IntStrategy::CsOnly, &sentence),
            Err(StrategyError::MissingResource(_))
        ));
        let int_model = TaggerModel::train(
            &corpus_from("da\tL1\tDET\nmano\tL1\tNOUN\n\nxipo\tL2\tNOUN\n\n"),
            TaggerConfig::default(),
        )
        .unwrap();
        let bundle = bundle.with_integrated(IntStrategy::CsOnly, int_model);
        let a = run_integrated(&bundle, IntStrategy::CsOnly, &sentence).unwrap();
        let b = run_integrated(&bundle, IntStrategy::CsOnly, &sentence).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bundle_round_trips_through_directory() {
        let bundle = toy_bundle();
        let dir = tempfile::tempdir().unwrap();
        bundle.save_dir(dir.path()).unwrap();
        let loaded = ResourceBundle::load_dir(dir.path()).unwrap();
        let sentence = corpus_from("da\tL1\t_\nxipo\tL2\t_\n\n").sentences()[0].clone();
        for strategy in [
            CombStrategy::LidThenTag,
            CombStrategy::TagThenLid,
            CombStrategy::ConfidencePick,
        ] {
            assert_eq!(
                run_combined(&bundle, strategy, &sentence).unwrap(),
                run_combined(&loaded, strategy, &sentence).unwrap()
            );
        }
    }
}
