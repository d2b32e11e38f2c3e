//! Command-line front end: dataset synthesis, lexicon induction, feature
//! dumps, model training, evaluation, and the full three-method experiment.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 every configured stock failed.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use polarstock_core::config::ExperimentConfig;
use polarstock_core::corpus::{align, load_news, load_prices};
use polarstock_core::error::{Error, Result};
use polarstock_core::experiment::{evaluate, prepare_experiment, run_experiment};
use polarstock_core::features::{assemble, make_spec_with, DenominatorMode, FeatureSequence};
use polarstock_core::lexicon::{build_lexicon, PolarityLexicon, SeedSets};
use polarstock_core::model::checkpoint::load_checkpoint;
use polarstock_core::model::{forward, train};
use polarstock_core::synth::{achievable_accuracy, generate, write_dataset, SynthConfig};

#[derive(Parser)]
#[command(
    name = "polarstock",
    version,
    about = "News-polarity features and recurrent models for next-day stock movement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic dataset with a planted news signal.
    Synth(SynthArgs),
    /// Induce the polarity lexicon from the whole news file.
    Lexicon(ConfigArgs),
    /// Dump per-day feature rows (returns, labels, histograms) as CSV.
    Featurize(FeaturizeArgs),
    /// Train the recurrent model per stock and save checkpoints.
    Train(ConfigArgs),
    /// Score saved checkpoints on the test split.
    Evaluate(EvaluateArgs),
    /// Run the full three-method comparison and write reports.
    Run(ConfigArgs),
}

/// Configuration file plus per-field overrides; flags win over the file.
#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Price CSV path.
    #[arg(long)]
    prices: Option<String>,
    /// News JSONL path.
    #[arg(long)]
    news: Option<String>,
    /// Seed-token file; omit for the built-in list.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated stock ids; omit for every stock in the price file.
    #[arg(long)]
    stocks: Option<String>,
    #[arg(long)]
    split_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lexicon_k: Option<usize>,
    #[arg(long)]
    lexicon_min_df: Option<u32>,
    #[arg(long)]
    lexicon_epsilon: Option<f64>,
    #[arg(long)]
    exclude_seeds: Option<bool>,
    #[arg(long)]
    histogram_bins: Option<usize>,
    /// in_vocab or all_tokens.
    #[arg(long)]
    histogram_denominator: Option<String>,
    #[arg(long)]
    hidden_price: Option<usize>,
    #[arg(long)]
    hidden_news: Option<usize>,
    #[arg(long)]
    hidden_fusion: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    l2_lambda: Option<f64>,
    #[arg(long)]
    l2_include_biases: Option<bool>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Gradient-norm cap; 0 disables clipping.
    #[arg(long)]
    grad_clip: Option<f64>,
    /// Steps per truncated-backpropagation window; 0 trains full sequences.
    #[arg(long)]
    bptt_truncation: Option<usize>,
    #[arg(long)]
    baseline_reg: Option<f64>,
    #[arg(long)]
    baseline_epochs: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
                // A missing or unreadable config file is a usage problem,
                // not a data problem.
                Error::Io { path, source } => {
                    Error::config(format!("cannot read config file {path}: {source}"))
                }
                other => other,
            })?,
            None => ExperimentConfig::default(),
        };
        macro_rules! override_field {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$field {
                    config.$field = v.clone();
                })*
            };
        }
        override_field!(
            prices,
            news,
            seeds,
            split_fraction,
            seed,
            lexicon_k,
            lexicon_min_df,
            lexicon_epsilon,
            exclude_seeds,
            histogram_bins,
            hidden_price,
            hidden_news,
            hidden_fusion,
            learning_rate,
            lr_decay,
            l2_lambda,
            l2_include_biases,
            epochs,
            grad_clip,
            bptt_truncation,
            baseline_reg,
            baseline_epochs,
        );
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        if let Some(stocks) = &self.stocks {
            config.stocks = stocks
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
        }
        if let Some(mode) = &self.histogram_denominator {
            config.histogram_denominator = match mode.as_str() {
                "in_vocab" => DenominatorMode::InVocab,
                "all_tokens" => DenominatorMode::AllTokens,
                other => {
                    return Err(Error::config(format!(
                        "histogram_denominator must be in_vocab or all_tokens, got {other}"
                    )))
                }
            };
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for prices.csv, news.jsonl, seeds.txt, and config.toml.
    #[arg(long, default_value = "synth_data")]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    stocks: usize,
    #[arg(long, default_value_t = 600)]
    days: usize,
    #[arg(long, default_value_t = 0.5)]
    news_prob: f64,
    /// Edge over a fair coin on the day after news, in [0, 0.5].
    #[arg(long, default_value_t = 0.4)]
    signal: f64,
    /// Geometric persistence of stale news; 0 limits news to one day.
    #[arg(long, default_value_t = 0.0)]
    carry: f64,
    #[arg(long, default_value_t = 12)]
    cluster_size: usize,
    #[arg(long, default_value_t = 30)]
    neutral_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Reuse an induced lexicon TSV instead of rebuilding from the corpus.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory holding rnn_<stock>.ckpt files; defaults to the output dir.
    #[arg(long)]
    checkpoints: Option<PathBuf>,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if help { 0 } else { 1 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::AllStocksFailed { .. } => 3,
                e if e.is_config() => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Lexicon(args) => cmd_lexicon(&args.resolve()?),
        Command::Featurize(args) => cmd_featurize(&args.config.resolve()?, args.lexicon.as_deref()),
        Command::Train(args) => cmd_train(&args.resolve()?),
        Command::Evaluate(args) => cmd_evaluate(&args.config.resolve()?, args.checkpoints.as_deref()),
        Command::Run(args) => cmd_run(&args.resolve()?),
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let synth = SynthConfig {
        stocks: args.stocks,
        days: args.days,
        news_prob: args.news_prob,
        signal: args.signal,
        carry: args.carry,
        cluster_size: args.cluster_size,
        neutral_size: args.neutral_size,
        seed: args.seed,
    };
    let dataset = generate(&synth)?;
    let (prices, news, seeds) = write_dataset(&args.out, &dataset)?;

    let config = ExperimentConfig {
        prices: prices.display().to_string(),
        news: news.display().to_string(),
        seeds: seeds.display().to_string(),
        out_dir: args.out.join("out").display().to_string(),
        seed: args.seed,
        ..ExperimentConfig::default()
    };
    let config_path = args.out.join("config.toml");
    config.save(&config_path)?;
    println!(
        "wrote {} stocks x {} days to {} (best achievable accuracy {:.4})",
        args.stocks,
        args.days,
        args.out.display(),
        achievable_accuracy(&synth)
    );
    println!("experiment config: {}", config_path.display());
    Ok(())
}

fn load_seed_sets(config: &ExperimentConfig) -> Result<SeedSets> {
    if config.seeds.is_empty() {
        Ok(SeedSets::builtin())
    } else {
        SeedSets::load(Path::new(&config.seeds))
    }
}

fn cmd_lexicon(config: &ExperimentConfig) -> Result<()> {
    let docs = load_news(&config.news)?;
    let seeds = load_seed_sets(config)?;
    let lexicon = build_lexicon(&docs, &seeds, &config.lexicon_params())?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(config.out_dir.clone(), e))?;
    let path = config.out_path("lexicon.tsv");
    lexicon.write_tsv(&path)?;
    let (lo, hi) = lexicon.polarity_range();
    println!(
        "lexicon: {} tokens from {} documents, polarity range [{lo:.4}, {hi:.4}]",
        lexicon.entries().len(),
        docs.len()
    );
    println!("written to {}", path.display());
    Ok(())
}

fn selected_series<'a>(
    config: &ExperimentConfig,
    prices: &'a [polarstock_core::corpus::PriceSeries],
) -> Result<Vec<&'a polarstock_core::corpus::PriceSeries>> {
    if config.stocks.is_empty() {
        return Ok(prices.iter().collect());
    }
    config
        .stocks
        .iter()
        .map(|id| {
            prices
                .iter()
                .find(|s| &s.stock_id == id)
                .ok_or_else(|| Error::config(format!("stock {id} is not in the price file")))
        })
        .collect()
}

fn cmd_featurize(config: &ExperimentConfig, lexicon_path: Option<&Path>) -> Result<()> {
    let prices = load_prices(&config.prices)?;
    let docs = load_news(&config.news)?;
    let lexicon = match lexicon_path {
        Some(path) => PolarityLexicon::read_tsv(path)?,
        None => build_lexicon(&docs, &load_seed_sets(config)?, &config.lexicon_params())?,
    };
    let spec = make_spec_with(&lexicon, config.histogram_bins, config.histogram_denominator);
    let mut sequences: Vec<FeatureSequence> = Vec::new();
    for series in selected_series(config, &prices)? {
        let aligned = align(series, &docs);
        sequences.push(assemble(&aligned, &lexicon, &spec)?);
    }
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(config.out_dir.clone(), e))?;
    let path = config.out_path("features.csv");
    polarstock_core::features::write_features(&path, &sequences)?;
    println!(
        "wrote features for {} stocks to {}",
        sequences.len(),
        path.display()
    );
    Ok(())
}

fn cmd_train(config: &ExperimentConfig) -> Result<()> {
    let prepared = prepare_experiment(config)?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(config.out_dir.clone(), e))?;
    for report in &prepared.reports {
        if let Some(err) = &report.error {
            eprintln!("{}: skipped: {err}", report.stock_id);
        }
    }
    let mut trained = 0usize;
    for stock in &prepared.stocks {
        let stock_seed = config.seed.wrapping_add(stock.stock_index as u64);
        let train_config = config.train_config(stock_seed);
        match train(
            &[stock.rnn_train_sequence()],
            &config.rnn_dims(),
            &train_config,
        ) {
            Ok(outcome) => {
                let ckpt = config.out_path(&format!("rnn_{}.ckpt", stock.stock_id));
                polarstock_core::model::checkpoint::save_checkpoint(
                    &ckpt,
                    &outcome.params,
                    stock_seed,
                    &train_config,
                )?;
                let mut csv = String::from("epoch,loss\n");
                for (epoch, loss) in outcome.epoch_losses.iter().enumerate() {
                    csv.push_str(&format!("{},{loss}\n", epoch + 1));
                }
                std::fs::write(config.out_path(&format!("loss_{}.csv", stock.stock_id)), csv)
                    .map_err(|e| Error::io(config.out_dir.clone(), e))?;
                println!(
                    "{}: trained {} steps for {} epochs, final loss {:.6}, checkpoint {}",
                    stock.stock_id,
                    stock.idx - 1,
                    train_config.epochs,
                    outcome.epoch_losses.last().copied().unwrap_or(f64::NAN),
                    ckpt.display()
                );
                trained += 1;
            }
            Err(err) => eprintln!("{}: training failed: {err}", stock.stock_id),
        }
    }
    if trained == 0 {
        return Err(Error::AllStocksFailed {
            n: prepared.reports.len(),
        });
    }
    Ok(())
}

fn cmd_evaluate(config: &ExperimentConfig, checkpoints: Option<&Path>) -> Result<()> {
    let prepared = prepare_experiment(config)?;
    let dir = checkpoints
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.out_dir));
    for report in &prepared.reports {
        if let Some(err) = &report.error {
            eprintln!("{}: skipped: {err}", report.stock_id);
        }
    }
    println!("{:<10} {:>9} {:>12}", "stock", "test_days", "rnn_accuracy");
    let mut accuracies = Vec::new();
    for stock in &prepared.stocks {
        let path = dir.join(format!("rnn_{}.ckpt", stock.stock_id));
        let result = load_checkpoint(&path).and_then(|ckpt| {
            let trace = forward(
                &ckpt.params,
                &stock.features.returns,
                &stock.features.histograms,
            )?;
            let preds: Vec<u8> = stock
                .test_label_range()
                .map(|t| u8::from(trace.steps[t].y[1] > trace.steps[t].y[0]))
                .collect();
            evaluate(&preds, stock.test_labels())
        });
        match result {
            Ok(accuracy) => {
                println!(
                    "{:<10} {:>9} {:>12.4}",
                    stock.stock_id,
                    stock.test_labels().len(),
                    accuracy
                );
                accuracies.push(accuracy);
            }
            Err(err) => eprintln!("{}: evaluation failed: {err}", stock.stock_id),
        }
    }
    if accuracies.is_empty() {
        return Err(Error::AllStocksFailed {
            n: prepared.reports.len(),
        });
    }
    let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    println!("{:<10} {:>9} {:>12.4}", "mean", "", mean);
    Ok(())
}

fn cmd_run(config: &ExperimentConfig) -> Result<()> {
    let report = run_experiment(config)?;
    print!("{}", report.to_text());
    println!();
    println!("report: {}", config.out_path("report.json").display());
    Ok(())
}
