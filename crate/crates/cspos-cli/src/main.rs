//! Batch command line for the code-switched POS tagging toolkit.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use cspos_core::corpus::{
    corpus_stats, parse_corpus, parse_raw_corpus, write_corpus, Corpus,
};
use cspos_core::eval::{accuracy, breakdown, EvalReport};
use cspos_core::lid::{self, LidModel};
use cspos_core::modelfile;
use cspos_core::pipeline::{run_bench, PipelineOpts};
use cspos_core::stacker::{self, FeatureOpts};
use cspos_core::strategies::{run_corpus, ConditionId, ResourceBundle};
use cspos_core::synth::{generate, SynthConfig};
use cspos_core::tagger::{self, TaggerConfig, TaggerModel};

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "cspos",
    version,
    about = "POS tagging strategies for code-switched text"
)]
struct Cli {
    /// Optional key=value config file; explicit flags win on conflict.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic code-switched corpus pair.
    Synth(SynthArgs),
    /// Corpus statistics: sentences, words, types, %CS.
    Stats(StatsArgs),
    /// Map a source-tagged corpus onto the universal tagset.
    MapTags(MapTagsArgs),
    /// Train the character-model language identifier.
    TrainLid(TrainLidArgs),
    /// Train a sequence tagger from one or more gold-tagged corpora.
    TrainTagger(TrainTaggerArgs),
    /// Train the stacking combiner with k-fold cross-validation.
    TrainStacker(TrainStackerArgs),
    /// Run one condition over a corpus and write the tagged output.
    Run(RunArgs),
    /// Score predictions against gold tags.
    Evaluate(EvaluateArgs),
    /// Full reproducible benchmark: synthesize, train, run, report.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthGenArgs {
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Preset: `close-pair` (homograph rate 0.25) or `far-pair` (0.02).
    #[arg(long, default_value = "far-pair")]
    preset: String,
    #[arg(long)]
    n_sentences: Option<usize>,
    #[arg(long)]
    vocab_per_lang: Option<usize>,
    #[arg(long)]
    tagset_size: Option<usize>,
    #[arg(long)]
    cs_rate: Option<f64>,
    #[arg(long)]
    switch_rate: Option<f64>,
    /// Overrides the preset's homograph rate.
    #[arg(long)]
    homograph_rate: Option<f64>,
    #[arg(long)]
    mean_len: Option<usize>,
}

impl SynthGenArgs {
    fn build(&self, cfg: &FileConfig) -> Result<SynthConfig> {
        let preset: String = cfg.resolve(
            Some(self.preset.clone()),
            "preset",
            "far-pair".to_string(),
        )?;
        let seed = cfg.resolve(self.seed, "seed", 0)?;
        let mut config = SynthConfig::preset(&preset, seed)
            .with_context(|| format!("unknown preset {preset:?} (use close-pair or far-pair)"))?;
        config.n_sentences = cfg.resolve(self.n_sentences, "n-sentences", config.n_sentences)?;
        config.vocab_per_lang =
            cfg.resolve(self.vocab_per_lang, "vocab-per-lang", config.vocab_per_lang)?;
        config.tagset_size = cfg.resolve(self.tagset_size, "tagset-size", config.tagset_size)?;
        config.cs_sentence_rate = cfg.resolve(self.cs_rate, "cs-rate", config.cs_sentence_rate)?;
        config.within_cs_switch_rate =
            cfg.resolve(self.switch_rate, "switch-rate", config.within_cs_switch_rate)?;
        config.homograph_rate =
            cfg.resolve(self.homograph_rate, "homograph-rate", config.homograph_rate)?;
        config.mean_sentence_len = cfg.resolve(self.mean_len, "mean-len", config.mean_sentence_len)?;
        Ok(config)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    gen: SynthGenArgs,
    /// Output directory for train.tsv, test.tsv, manifest.json.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Also write the statistics as JSON to this path.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct MapTagsArgs {
    /// Corpus whose tag column holds source tags.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Built-in table name (`bw`, `bangor`) or a mapping-file path.
    #[arg(long, default_value = "bw")]
    table: String,
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
}

#[derive(Args)]
struct TrainLidArgs {
    /// Gold language-labeled training corpus.
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Character n-gram order.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    prior_l1: Option<f64>,
    #[arg(long)]
    switch_penalty: Option<f64>,
}

#[derive(Args)]
struct TrainTaggerArgs {
    /// Gold-tagged training corpus; repeat to concatenate corpora.
    #[arg(long, value_name = "FILE", required = true)]
    train: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long)]
    suffix_max: Option<usize>,
    #[arg(long)]
    rare_threshold: Option<u64>,
}

#[derive(Args)]
struct TrainStackerArgs {
    /// Bundle directory holding tagger_l1.json and tagger_l2.json.
    #[arg(long, value_name = "DIR")]
    bundle: PathBuf,
    /// Gold-tagged (typically code-switched) training corpus.
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Drop the neighboring-tag features, keeping the minimal set.
    #[arg(long)]
    paper_features_only: bool,
}

#[derive(Args)]
struct RunArgs {
    /// One of COMB1, COMB2, COMB3, COMB4, INT1, INT2, INT3.
    #[arg(long)]
    condition: String,
    /// Bundle directory with the named model files.
    #[arg(long, value_name = "DIR")]
    bundle: PathBuf,
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Route tokens labeled OTHER:* to the L2 tagger instead of L1.
    #[arg(long)]
    route_other_to_l2: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    gold: PathBuf,
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
    /// Write the evaluation as JSON to this path.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    gen: SynthGenArgs,
    /// Output directory for report.txt and report.json.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    prior_l1: Option<f64>,
    #[arg(long)]
    switch_penalty: Option<f64>,
    #[arg(long)]
    suffix_max: Option<usize>,
    #[arg(long)]
    rare_threshold: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    stacker_seed: Option<u64>,
    #[arg(long)]
    paper_features_only: bool,
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    parse_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating directory {}", dir.display()))
}

fn pipeline_opts(args: &BenchArgs, cfg: &FileConfig) -> Result<PipelineOpts> {
    let defaults = PipelineOpts::default();
    Ok(PipelineOpts {
        lid_order: cfg.resolve(args.order, "order", defaults.lid_order)?,
        prior_l1: cfg.resolve(args.prior_l1, "prior-l1", defaults.prior_l1)?,
        switch_penalty: cfg.resolve(args.switch_penalty, "switch-penalty", defaults.switch_penalty)?,
        tagger: TaggerConfig {
            suffix_max: cfg.resolve(args.suffix_max, "suffix-max", defaults.tagger.suffix_max)?,
            rare_threshold: cfg.resolve(
                args.rare_threshold,
                "rare-threshold",
                defaults.tagger.rare_threshold,
            )?,
        },
        folds: cfg.resolve(args.folds, "folds", defaults.folds)?,
        epochs: cfg.resolve(args.epochs, "epochs", defaults.epochs)?,
        stacker_seed: cfg.resolve(args.stacker_seed, "stacker-seed", defaults.stacker_seed)?,
        features: FeatureOpts {
            context: !args.paper_features_only,
        },
    })
}

fn cmd_synth(args: &SynthArgs, cfg: &FileConfig) -> Result<()> {
    let config = args.gen.build(cfg)?;
    let out = generate(&config)?;
    ensure_dir(&args.out)?;
    write_corpus(&out.train, args.out.join("train.tsv"))?;
    write_corpus(&out.test, args.out.join("test.tsv"))?;
    let manifest = serde_json::to_string_pretty(&out.manifest)?;
    std::fs::write(args.out.join("manifest.json"), manifest)?;
    println!(
        "wrote {} train / {} test sentences to {} (measured CS {:.2}%)",
        out.train.len(),
        out.test.len(),
        args.out.display(),
        out.manifest.measured.pct_cs_generated
    );
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let stats = corpus_stats(&corpus)?;
    print!("{}", stats.to_tsv());
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&stats)?)?;
    }
    Ok(())
}

fn cmd_map_tags(args: &MapTagsArgs) -> Result<()> {
    let raw = parse_raw_corpus(&args.input)
        .with_context(|| format!("loading corpus {}", args.input.display()))?;
    let loaded;
    let table = match cspos_core::tagmap::builtin(&args.table) {
        Some(table) => table,
        None => {
            loaded = cspos_core::tagmap::load_mapping(&args.table)
                .with_context(|| format!("loading mapping table {}", args.table))?;
            &loaded
        }
    };
    let mapped = cspos_core::tagmap::map_corpus(&raw, table)?;
    write_corpus(&mapped, &args.output)?;
    println!(
        "mapped {} sentences with table {}",
        mapped.len(),
        table.name()
    );
    Ok(())
}

fn cmd_train_lid(args: &TrainLidArgs, cfg: &FileConfig) -> Result<()> {
    let corpus = load_corpus(&args.train)?;
    let order = cfg.resolve(args.order, "order", lid::DEFAULT_ORDER)?;
    let prior_l1 = cfg.resolve(args.prior_l1, "prior-l1", lid::DEFAULT_PRIOR_L1)?;
    let switch_penalty = cfg.resolve(
        args.switch_penalty,
        "switch-penalty",
        lid::DEFAULT_SWITCH_PENALTY,
    )?;
    let model = LidModel::train_from_corpus(&corpus, order, prior_l1, switch_penalty)?;
    modelfile::save(&args.model, "cspos-lid", &model)?;
    println!(
        "trained order-{order} language identifier ({} / {} alphabet chars) -> {}",
        model.lm1().alphabet().len(),
        model.lm2().alphabet().len(),
        args.model.display()
    );
    Ok(())
}

fn cmd_train_tagger(args: &TrainTaggerArgs, cfg: &FileConfig) -> Result<()> {
    let mut corpora = Vec::new();
    for path in &args.train {
        corpora.push(load_corpus(path)?);
    }
    let refs: Vec<&Corpus> = corpora.iter().collect();
    let merged = Corpus::concat("train", &refs)?;
    let config = TaggerConfig {
        suffix_max: cfg.resolve(args.suffix_max, "suffix-max", tagger::DEFAULT_SUFFIX_MAX)?,
        rare_threshold: cfg.resolve(
            args.rare_threshold,
            "rare-threshold",
            tagger::DEFAULT_RARE_THRESHOLD,
        )?,
    };
    let model = TaggerModel::train(&merged, config)?;
    modelfile::save(&args.model, "cspos-tagger", &model)?;
    println!(
        "trained tagger on {} sentences ({} tags, {} word types) -> {}",
        merged.len(),
        model.tagset().len(),
        model.vocab().len(),
        args.model.display()
    );
    Ok(())
}

fn cmd_train_stacker(args: &TrainStackerArgs, cfg: &FileConfig) -> Result<()> {
    let tagger_l1: TaggerModel =
        modelfile::load(args.bundle.join("tagger_l1.json"), "cspos-tagger")?;
    let tagger_l2: TaggerModel =
        modelfile::load(args.bundle.join("tagger_l2.json"), "cspos-tagger")?;
    let corpus = load_corpus(&args.train)?;
    let folds = cfg.resolve(args.folds, "folds", stacker::DEFAULT_FOLDS)?;
    let epochs = cfg.resolve(args.epochs, "epochs", stacker::DEFAULT_EPOCHS)?;
    let seed = cfg.resolve(args.seed, "seed", 1)?;
    let features = FeatureOpts {
        context: !args.paper_features_only,
    };

    // Feature generation needs both taggers; a placeholder identifier is
    // enough since no combined condition runs here.
    let lm = cspos_core::lid::CharLM::train(["a"], 1)?;
    let lid = LidModel::new(lm.clone(), lm, 0.5, 0.0)?;
    let bundle = ResourceBundle::new(tagger_l1, tagger_l2, lid)?;
    let examples = cspos_core::strategies::build_stack_training(&bundle, &corpus, features)?;
    let outcome = stacker::train_with_cross_validation(&examples, folds, epochs, seed, features)?;
    modelfile::save(&args.model, "cspos-stacker", &outcome.model)?;
    println!(
        "cross-validation accuracy over {} folds: {:.4}",
        folds, outcome.mean_accuracy
    );
    for (i, acc) in outcome.fold_accuracies.iter().enumerate() {
        println!("  fold {}: {acc:.4}", i + 1);
    }
    println!("stacker model -> {}", args.model.display());
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let condition: ConditionId = args
        .condition
        .parse()
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let bundle =
        ResourceBundle::load_dir(&args.bundle)?.route_other_to_l2(args.route_other_to_l2);
    let corpus = load_corpus(&args.input)?;
    let run = run_corpus(&bundle, condition, &corpus)?;
    let mut tagged = corpus.sentences().to_vec();
    for (sentence, output) in tagged.iter_mut().zip(&run.outputs) {
        for (token, &tag) in sentence.tokens_mut().iter_mut().zip(output.tags()) {
            token.set_gold_tag(Some(tag));
        }
    }
    let out_corpus = Corpus::new(corpus.name(), tagged)?;
    write_corpus(&out_corpus, &args.output)?;
    println!(
        "{} tagged {} sentences -> {}",
        condition.label(),
        out_corpus.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let gold = load_corpus(&args.gold)?;
    let pred_corpus = load_corpus(&args.pred)?;
    let preds: Vec<cspos_core::TaggerOutput> = pred_corpus
        .sentences()
        .iter()
        .map(|sentence| {
            let tags: Result<Vec<_>> = sentence
                .tokens()
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    t.gold_tag().with_context(|| {
                        format!(
                            "prediction file {}: sentence {:?} token {} has no tag",
                            args.pred.display(),
                            sentence.id(),
                            i
                        )
                    })
                })
                .collect();
            let tags = tags?;
            let n = tags.len();
            Ok(cspos_core::TaggerOutput::new(tags, vec![1.0; n])?)
        })
        .collect::<Result<_>>()?;

    let has_langs = gold
        .iter()
        .all(|s| s.tokens().iter().all(|t| t.gold_lang().is_some()));
    let mut report = EvalReport::default();
    if has_langs {
        report.push("evaluation", breakdown(&gold, &preds)?);
    } else {
        let overall = accuracy(&gold, &preds)?;
        println!("overall accuracy: {overall:.2}");
        let mut row = cspos_core::eval::EvalRow::default();
        let total = gold.n_tokens() as u64;
        let correct = (overall / 100.0 * total as f64).round() as u64;
        row.overall = cspos_core::eval::Cell { correct, total };
        report.push("evaluation", row);
    }
    print!("{}", report.render_text());
    if let Some(path) = &args.report {
        std::fs::write(path, serde_json::to_string_pretty(&report.to_json())?)?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs, cfg: &FileConfig) -> Result<()> {
    let config = args.gen.build(cfg)?;
    let opts = pipeline_opts(args, cfg)?;
    let result = run_bench(&config, &opts)?;
    let text = result.render_text();
    print!("{text}");
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        std::fs::write(dir.join("report.txt"), &text)?;
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&result.to_json())?,
        )?;
        println!("reports -> {}", dir.display());
    }
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    cspos_core::init_thread_cap();
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Synth(args) => cmd_synth(args, &cfg),
        Command::Stats(args) => cmd_stats(args),
        Command::MapTags(args) => cmd_map_tags(args),
        Command::TrainLid(args) => cmd_train_lid(args, &cfg),
        Command::TrainTagger(args) => cmd_train_tagger(args, &cfg),
        Command::TrainStacker(args) => cmd_train_stacker(args, &cfg),
        Command::Run(args) => cmd_run(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Bench(args) => cmd_bench(args, &cfg),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
