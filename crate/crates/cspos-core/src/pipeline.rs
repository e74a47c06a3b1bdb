//! End-to-end benchmark pipeline: build every resource from a training
//! corpus, run the two monolingual baselines and all seven conditions on a
//! test corpus, and render the comparison report.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{split_by_purity, Corpus, CorpusError};
use crate::eval::{breakdown, EvalError, EvalReport};
use crate::lid::{LidError, LidModel};
use crate::stacker::{self, FeatureOpts, StackError};
use crate::strategies::{
    build_stack_training, run_corpus, select_training_data, ConditionId, IntStrategy,
    ResourceBundle, StrategyError,
};
use crate::synth::{self, SynthConfig, SynthError, SynthManifest};
use crate::tagger::{TaggerConfig, TaggerError, TaggerModel};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lid(#[from] LidError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("training corpus has no {0} sentences to train on")]
    MissingSplit(&'static str),
}

/// Everything a full run needs besides the corpora.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOpts {
    pub lid_order: usize,
    pub prior_l1: f64,
    pub switch_penalty: f64,
    pub tagger: TaggerConfig,
    pub folds: usize,
    pub epochs: usize,
    pub stacker_seed: u64,
    pub features: FeatureOpts,
}

impl Default for PipelineOpts {
    fn default() -> Self {
        PipelineOpts {
            lid_order: crate::lid::DEFAULT_ORDER,
            prior_l1: crate::lid::DEFAULT_PRIOR_L1,
            switch_penalty: crate::lid::DEFAULT_SWITCH_PENALTY,
            tagger: TaggerConfig::default(),
            folds: stacker::DEFAULT_FOLDS,
            epochs: stacker::DEFAULT_EPOCHS,
            stacker_seed: 1,
            features: FeatureOpts::default(),
        }
    }
}

/// Resources plus the stacker's cross-validation accuracy.
#[derive(Debug, Clone)]
pub struct BuiltResources {
    pub bundle: ResourceBundle,
    pub cv_mean_accuracy: f64,
    pub cv_fold_accuracies: Vec<f64>,
}

/// Trains every resource from one gold-labeled, gold-tagged training
/// corpus: the purity splits provide the monolingual and code-switched
/// portions, mirroring a pipeline that selects training sentences with a
/// sentence-level language identifier.
pub fn build_resources(
    train: &Corpus,
    opts: &PipelineOpts,
) -> Result<BuiltResources, PipelineError> {
    let split = split_by_purity(train)?;
    if split.pure_l1.is_empty() {
        return Err(PipelineError::MissingSplit("pure L1"));
    }
    if split.pure_l2.is_empty() {
        return Err(PipelineError::MissingSplit("pure L2"));
    }
    if split.code_switched.is_empty() {
        return Err(PipelineError::MissingSplit("code-switched"));
    }

    let tagger_l1 = TaggerModel::train(&split.pure_l1, opts.tagger)?;
    let tagger_l2 = TaggerModel::train(&split.pure_l2, opts.tagger)?;
    // Character models see every token of their language, including those
    // inside code-switched sentences.
    let lid = LidModel::train_from_corpus(train, opts.lid_order, opts.prior_l1, opts.switch_penalty)?;
    let mut bundle = ResourceBundle::new(tagger_l1, tagger_l2, lid)?;

    for condition in [
        IntStrategy::CsOnly,
        IntStrategy::AllMono,
        IntStrategy::AllMonoPlusCs,
    ] {
        let data = select_training_data(
            condition,
            &split.pure_l1,
            &split.pure_l2,
            &split.code_switched,
        )?;
        let model = TaggerModel::train(&data, opts.tagger)?;
        bundle = bundle.with_integrated(condition, model);
    }

    // Stacker: features over the code-switched training sentences,
    // validated by sentence-level cross-validation, then retrained on all.
    let examples = build_stack_training(&bundle, &split.code_switched, opts.features)?;
    let outcome = stacker::train_with_cross_validation(
        &examples,
        opts.folds.min(examples.len()).max(2),
        opts.epochs,
        opts.stacker_seed,
        opts.features,
    )?;
    let bundle = bundle.with_stacker(outcome.model);
    Ok(BuiltResources {
        bundle,
        cv_mean_accuracy: outcome.mean_accuracy,
        cv_fold_accuracies: outcome.fold_accuracies,
    })
}

pub const BASELINE_L1: &str = "BASE:Mono-L1";
pub const BASELINE_L2: &str = "BASE:Mono-L2";

/// Runs the two baselines and all seven conditions on `test`, producing
/// one report row each, in fixed order.
pub fn evaluate_conditions(
    bundle: &ResourceBundle,
    test: &Corpus,
) -> Result<EvalReport, PipelineError> {
    let mut report = EvalReport::default();
    let base1: Result<Vec<_>, StrategyError> = test
        .sentences()
        .iter()
        .map(|s| bundle.tagger_l1().viterbi_tag(s).map_err(StrategyError::from))
        .collect();
    report.push(BASELINE_L1, breakdown(test, &base1?)?);
    let base2: Result<Vec<_>, StrategyError> = test
        .sentences()
        .iter()
        .map(|s| bundle.tagger_l2().viterbi_tag(s).map_err(StrategyError::from))
        .collect();
    report.push(BASELINE_L2, breakdown(test, &base2?)?);
    for condition in ConditionId::ALL {
        let run = run_corpus(bundle, condition, test)?;
        let mut row = breakdown(test, &run.outputs)?;
        if condition == ConditionId::Combined(crate::strategies::CombStrategy::ConfidencePick) {
            row.ties = Some(run.comb3_ties);
        }
        report.push(condition.label(), row);
    }
    Ok(report)
}

/// A full run's outputs.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub report: EvalReport,
    pub cv_mean_accuracy: f64,
    pub manifest: Option<SynthManifest>,
}

impl BenchResult {
    /// The deterministic text rendering written by the `bench` command.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if let Some(manifest) = &self.manifest {
            out.push_str(&format!(
                "synthetic corpus: seed {} | {} sentences | homograph rate {} | measured CS {:.2}%\n",
                manifest.config.seed,
                manifest.config.n_sentences,
                manifest.config.homograph_rate,
                manifest.measured.pct_cs_generated,
            ));
        }
        out.push_str(&format!(
            "stacker cross-validation accuracy: {:.4}\n\n",
            self.cv_mean_accuracy
        ));
        out.push_str(&self.report.render_text());
        out
    }

    /// The matching JSON rendering.
    pub fn to_json(&self) -> serde_json::Value {
        let mut value = serde_json::json!({
            "cv_mean_accuracy": self.cv_mean_accuracy,
            "report": self.report.to_json(),
        });
        if let Some(manifest) = &self.manifest {
            value["manifest"] = serde_json::to_value(manifest).expect("manifest serializes");
        }
        value
    }
}

/// Full pipeline over explicit corpora (any source, e.g. converted
/// real data).
pub fn run_on_corpora(
    train: &Corpus,
    test: &Corpus,
    opts: &PipelineOpts,
) -> Result<BenchResult, PipelineError> {
    let built = build_resources(train, opts)?;
    let report = evaluate_conditions(&built.bundle, test)?;
    Ok(BenchResult {
        report,
        cv_mean_accuracy: built.cv_mean_accuracy,
        manifest: None,
    })
}

/// Full pipeline over a generated corpus: the reproducible benchmark.
pub fn run_bench(config: &SynthConfig, opts: &PipelineOpts) -> Result<BenchResult, PipelineError> {
    let generated = synth::generate(config)?;
    let built = build_resources(&generated.train, opts)?;
    let report = evaluate_conditions(&built.bundle, &generated.test)?;
    Ok(BenchResult {
        report,
        cv_mean_accuracy: built.cv_mean_accuracy,
        manifest: Some(generated.manifest),
    })
}
