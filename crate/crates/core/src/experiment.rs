//! End-to-end experiment: chronological split, three competing methods, and
//! deterministic reports.
//!
//! All three methods predict the same test days per stock. For the split
//! index i over a stock's feature days, the network trains on steps
//! 0..i-1 (every label it sees dates inside the training window), then runs
//! forward over the whole sequence once so each test-day prediction is
//! warm-started by the full history; the prediction at step i-1 targets the
//! first test day. The linear baselines consume lagged samples whose label
//! indices land in the same test range. The polarity lexicon is built
//! jointly from every configured stock's documents dated inside its own
//! training window, so nothing downstream of the split leaks backwards.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::baseline::{build_lag_samples, predict_linear, train_linear, write_linear_tsv};
use crate::config::ExperimentConfig;
use crate::corpus::{align, load_news, load_prices, AlignedSeries, Document};
use crate::error::{Error, Result};
use crate::features::{assemble, make_spec_with, FeatureSequence};
use crate::lexicon::{build_lexicon, PolarityLexicon, SeedSets};
use crate::model::checkpoint::save_checkpoint;
use crate::model::{forward, train, TrainSequence};

/// One side of a chronological split: contiguous feature days.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitHalf {
    /// Index of this half's first feature day.
    pub start: usize,
    pub dates: Vec<NaiveDate>,
}

impl SplitHalf {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Earliest floor(fraction * day count) feature days train, the rest test;
/// never shuffled.
pub fn split(features: &FeatureSequence, fraction: f64) -> Result<(SplitHalf, SplitHalf)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::BadSplit {
            msg: format!("fraction must lie strictly between 0 and 1, got {fraction}"),
        });
    }
    let len = features.returns.len();
    let idx = (fraction * len as f64).floor() as usize;
    if idx == 0 || idx >= len {
        return Err(Error::BadSplit {
            msg: format!(
                "{}: splitting {len} feature days at {fraction} leaves an empty side",
                features.stock_id
            ),
        });
    }
    Ok((
        SplitHalf {
            start: 0,
            dates: features.dates[..idx].to_vec(),
        },
        SplitHalf {
            start: idx,
            dates: features.dates[idx..].to_vec(),
        },
    ))
}

/// Fraction of exact matches.
pub fn evaluate(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::NoSamples);
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Per-method test accuracy for one stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAccuracies {
    pub price_linear: f64,
    pub news_linear: f64,
    pub rnn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockReport {
    pub stock_id: String,
    /// Set when this stock's pipeline failed; the other fields are absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_days: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_days: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rnn_train_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_train_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_predictions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<MethodAccuracies>,
}

/// Where the shared lexicon came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconProvenance {
    pub tokens: usize,
    pub documents: usize,
    pub k: usize,
    pub min_df: u32,
    pub epsilon: f64,
    pub polarity_min: f64,
    pub polarity_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: ExperimentConfig,
    pub lexicon: LexiconProvenance,
    pub stocks: Vec<StockReport>,
    /// Unweighted mean of per-stock accuracies over successful stocks.
    pub mean: MethodAccuracies,
    pub failed_stocks: usize,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned-column text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<10} {:>11} {:>14} {:>19} {:>16}",
            "stock", "train/test", "price+linear", "price+news+linear", "price+news+rnn"
        )
        .expect("string write");
        for stock in &self.stocks {
            match (&stock.accuracy, &stock.error) {
                (Some(acc), _) => writeln!(
                    out,
                    "{:<10} {:>11} {:>14.4} {:>19.4} {:>16.4}",
                    stock.stock_id,
                    format!(
                        "{}/{}",
                        stock.train_days.unwrap_or(0),
                        stock.test_days.unwrap_or(0)
                    ),
                    acc.price_linear,
                    acc.news_linear,
                    acc.rnn
                ),
                (None, Some(err)) => {
                    writeln!(out, "{:<10} failed: {err}", stock.stock_id)
                }
                (None, None) => unreachable!("stock report has accuracy or error"),
            }
            .expect("string write");
        }
        writeln!(
            out,
            "{:<10} {:>11} {:>14.4} {:>19.4} {:>16.4}",
            "mean", "", self.mean.price_linear, self.mean.news_linear, self.mean.rnn
        )
        .expect("string write");
        out
    }
}

struct StockOutcome {
    report: StockReport,
    predictions_csv: String,
}

/// One stock ready to train: features assembled, split placed.
#[derive(Debug, Clone)]
pub struct PreparedStock {
    /// Position in the configured stock list; seeds derive from it.
    pub stock_index: usize,
    /// Row in [`PreparedExperiment::reports`] owned by this stock.
    pub report_slot: usize,
    pub stock_id: String,
    pub features: FeatureSequence,
    /// First test feature day.
    pub idx: usize,
}

impl PreparedStock {
    /// Training window slices: every label a model may see dates inside the
    /// training days.
    pub fn rnn_train_sequence(&self) -> TrainSequence<f64> {
        TrainSequence {
            returns: self.features.returns[..self.idx - 1].to_vec(),
            histograms: self.features.histograms[..self.idx - 1].to_vec(),
            labels: self.features.labels[..self.idx - 1].to_vec(),
        }
    }

    /// Label indices scored at test time; the prediction for label index t
    /// comes from the forward step at t and targets feature day t+1.
    pub fn test_label_range(&self) -> std::ops::Range<usize> {
        self.idx - 1..self.features.returns.len() - 1
    }

    pub fn test_labels(&self) -> &[u8] {
        &self.features.labels[self.test_label_range()]
    }
}

/// Shared state after loading, planning, and lexicon induction.
#[derive(Debug, Clone)]
pub struct PreparedExperiment {
    pub lexicon: PolarityLexicon,
    pub provenance: LexiconProvenance,
    /// One row per configured stock; failed rows carry an error message.
    pub reports: Vec<StockReport>,
    pub stocks: Vec<PreparedStock>,
}

/// Load inputs, place each stock's split, build the pooled training-window
/// lexicon, and assemble features. Stocks fail independently into report
/// rows; an empty survivor set is an error.
pub fn prepare_experiment(config: &ExperimentConfig) -> Result<PreparedExperiment> {
    config.validate()?;
    let prices = load_prices(&config.prices)?;
    let docs = load_news(&config.news)?;
    let seeds = if config.seeds.is_empty() {
        SeedSets::builtin()
    } else {
        SeedSets::load(Path::new(&config.seeds))?
    };

    let by_id: HashMap<&str, &crate::corpus::PriceSeries> =
        prices.iter().map(|s| (s.stock_id.as_str(), s)).collect();
    let selected: Vec<String> = if config.stocks.is_empty() {
        prices.iter().map(|s| s.stock_id.clone()).collect()
    } else {
        config.stocks.clone()
    };

    let mut reports: Vec<StockReport> = Vec::with_capacity(selected.len());
    let mut plans: Vec<StockPlan> = Vec::new();
    for (stock_index, stock_id) in selected.iter().enumerate() {
        let Some(series) = by_id.get(stock_id.as_str()) else {
            let err = Error::config(format!("stock {stock_id} is not in the price file"));
            reports.push(failed(stock_id, &err));
            continue;
        };
        let aligned = align(series, &docs);
        match plan_stock(stock_index, aligned, config.split_fraction) {
            Ok(mut plan) => {
                plan.report_slot = reports.len();
                reports.push(StockReport {
                    stock_id: stock_id.clone(),
                    error: None,
                    train_days: None,
                    test_days: None,
                    rnn_train_steps: None,
                    baseline_train_samples: None,
                    test_predictions: None,
                    accuracy: None,
                });
                plans.push(plan);
            }
            Err(err) => reports.push(failed(stock_id, &err)),
        }
    }
    if plans.is_empty() {
        return Err(Error::AllStocksFailed { n: reports.len() });
    }

    // Pooled lexicon corpus: each planned stock contributes documents dated
    // inside its own training window.
    let cutoff_by_stock: HashMap<&str, NaiveDate> = plans
        .iter()
        .map(|p| (p.stock_id.as_str(), p.cutoff))
        .collect();
    let lexicon_docs: Vec<Document> = docs
        .iter()
        .filter(|d| {
            cutoff_by_stock
                .get(d.stock_id.as_str())
                .is_some_and(|&cutoff| d.date <= cutoff)
        })
        .cloned()
        .collect();
    let lexicon = build_lexicon(&lexicon_docs, &seeds, &config.lexicon_params())?;
    let (polarity_min, polarity_max) = lexicon.polarity_range();
    let provenance = LexiconProvenance {
        tokens: lexicon.entries().len(),
        documents: lexicon_docs.len(),
        k: config.lexicon_k,
        min_df: config.lexicon_min_df,
        epsilon: config.lexicon_epsilon,
        polarity_min,
        polarity_max,
    };

    let spec = make_spec_with(
        &lexicon,
        config.histogram_bins,
        config.histogram_denominator,
    );
    let mut stocks = Vec::with_capacity(plans.len());
    for plan in plans {
        match assemble(&plan.aligned, &lexicon, &spec) {
            Ok(features) => stocks.push(PreparedStock {
                stock_index: plan.stock_index,
                report_slot: plan.report_slot,
                stock_id: plan.stock_id,
                features,
                idx: plan.idx,
            }),
            Err(err) => reports[plan.report_slot] = failed(&plan.stock_id, &err),
        }
    }
    if stocks.is_empty() {
        return Err(Error::AllStocksFailed { n: reports.len() });
    }
    Ok(PreparedExperiment {
        lexicon,
        provenance,
        reports,
        stocks,
    })
}

/// Everything run_experiment computed for one stock before reporting.
struct StockPlan {
    stock_index: usize,
    /// Index of this stock's row in the report.
    report_slot: usize,
    stock_id: String,
    aligned: AlignedSeries,
    /// First test feature day.
    idx: usize,
    /// Documents before this date (inclusive) may enter the lexicon.
    cutoff: NaiveDate,
}

fn plan_stock(
    stock_index: usize,
    aligned: AlignedSeries,
    fraction: f64,
) -> Result<StockPlan> {
    let day_count = aligned.days.len();
    if day_count < 3 {
        return Err(Error::TooShort {
            msg: format!(
                "{}: need at least 3 aligned days, have {day_count}",
                aligned.stock_id
            ),
        });
    }
    let feature_days = day_count - 1;
    let idx = (fraction * feature_days as f64).floor() as usize;
    // idx >= 4 guarantees at least one training sample for every method.
    if idx < 4 {
        return Err(Error::BadSplit {
            msg: format!(
                "{}: {feature_days} feature days give only {idx} training days; need 4",
                aligned.stock_id
            ),
        });
    }
    if idx >= feature_days {
        return Err(Error::BadSplit {
            msg: format!(
                "{}: split leaves no test days ({feature_days} feature days)",
                aligned.stock_id
            ),
        });
    }
    // Feature day idx-1 (the last training day) is aligned day idx.
    let cutoff = aligned.days[idx].date;
    Ok(StockPlan {
        stock_index,
        report_slot: 0,
        stock_id: aligned.stock_id.clone(),
        aligned,
        idx,
        cutoff,
    })
}

fn run_stock(stock: &PreparedStock, config: &ExperimentConfig) -> Result<StockOutcome> {
    let features = &stock.features;
    let len = features.returns.len();
    let idx = stock.idx;
    let stock_seed = config.seed.wrapping_add(stock.stock_index as u64);

    // Recurrent model: train on steps 0..idx-1, then one full warm pass.
    let train_config = config.train_config(stock_seed);
    let outcome = train(
        &[stock.rnn_train_sequence()],
        &config.rnn_dims(),
        &train_config,
    )?;
    let trace = forward(&outcome.params, &features.returns, &features.histograms)?;
    let test_range = stock.test_label_range();
    let mut rnn_preds = Vec::with_capacity(test_range.len());
    let mut rnn_probs = Vec::with_capacity(test_range.len());
    for t in test_range.clone() {
        let y = trace.steps[t].y;
        rnn_preds.push(u8::from(y[1] > y[0]));
        rnn_probs.push(y[1]);
    }
    let test_labels = stock.test_labels();

    // Linear baselines: sample k carries label index k+2, so the test
    // samples are exactly those whose label index falls in the test range.
    let linear_config = config.linear_config(stock_seed);
    let mut linear_preds = Vec::new();
    for with_news in [false, true] {
        let samples = build_lag_samples(features, with_news)?;
        let boundary = idx - 3;
        let trained = train_linear(&samples[..boundary], &linear_config)?;
        let mut preds = Vec::with_capacity(samples.len() - boundary);
        for sample in &samples[boundary..] {
            preds.push(predict_linear(&trained.model, &sample.x)?);
        }
        debug_assert!(samples[boundary..]
            .iter()
            .zip(test_labels)
            .all(|(s, &l)| s.class() == l));
        let name = if with_news { "news" } else { "price" };
        write_linear_tsv(
            &config.out_path(&format!("linear_{name}_{}.tsv", stock.stock_id)),
            &trained.model,
        )?;
        linear_preds.push(preds);
    }

    save_checkpoint(
        &config.out_path(&format!("rnn_{}.ckpt", stock.stock_id)),
        &outcome.params,
        stock_seed,
        &train_config,
    )?;

    let accuracy = MethodAccuracies {
        price_linear: evaluate(&linear_preds[0], test_labels)?,
        news_linear: evaluate(&linear_preds[1], test_labels)?,
        rnn: evaluate(&rnn_preds, test_labels)?,
    };

    let mut csv = String::from("date,label,price_linear,news_linear,rnn,rnn_up_prob\n");
    for (row, t) in test_range.clone().enumerate() {
        // The prediction at step t targets feature day t+1.
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            features.dates[t + 1],
            test_labels[row],
            linear_preds[0][row],
            linear_preds[1][row],
            rnn_preds[row],
            rnn_probs[row]
        )
        .expect("string write");
    }

    Ok(StockOutcome {
        report: StockReport {
            stock_id: stock.stock_id.clone(),
            error: None,
            train_days: Some(idx),
            test_days: Some(len - idx),
            rnn_train_steps: Some(idx - 1),
            baseline_train_samples: Some(idx - 3),
            test_predictions: Some(test_range.len()),
            accuracy: Some(accuracy),
        },
        predictions_csv: csv,
    })
}

fn failed(stock_id: &str, err: &Error) -> StockReport {
    StockReport {
        stock_id: stock_id.to_string(),
        error: Some(err.to_string()),
        train_days: None,
        test_days: None,
        rnn_train_steps: None,
        baseline_train_samples: None,
        test_predictions: None,
        accuracy: None,
    }
}

/// Load data, build the shared lexicon from pooled training-window
/// documents, run all three methods per stock, and write the report JSON,
/// text table, lexicon TSV, per-stock prediction CSVs, model checkpoints,
/// and baseline TSVs into the output directory. Stocks fail independently;
/// only a full wipeout is an error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvaluationReport> {
    let prepared = prepare_experiment(config)?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.clone(), e))?;
    prepared.lexicon.write_tsv(config.out_path("lexicon.tsv"))?;

    // Per-stock pipelines, isolated from each other.
    let mut reports = prepared.reports;
    for stock in &prepared.stocks {
        let slot = &mut reports[stock.report_slot];
        match run_stock(stock, config) {
            Ok(outcome) => {
                std::fs::write(
                    config.out_path(&format!("predictions_{}.csv", stock.stock_id)),
                    outcome.predictions_csv,
                )
                .map_err(|e| Error::io(config.out_dir.clone(), e))?;
                *slot = outcome.report;
            }
            Err(err) => *slot = failed(&stock.stock_id, &err),
        }
    }

    let succeeded: Vec<&MethodAccuracies> =
        reports.iter().filter_map(|r| r.accuracy.as_ref()).collect();
    if succeeded.is_empty() {
        return Err(Error::AllStocksFailed { n: reports.len() });
    }
    let n = succeeded.len() as f64;
    let mean = MethodAccuracies {
        price_linear: succeeded.iter().map(|a| a.price_linear).sum::<f64>() / n,
        news_linear: succeeded.iter().map(|a| a.news_linear).sum::<f64>() / n,
        rnn: succeeded.iter().map(|a| a.rnn).sum::<f64>() / n,
    };
    let report = EvaluationReport {
        config: config.clone(),
        lexicon: prepared.provenance,
        failed_stocks: reports.len() - succeeded.len(),
        stocks: reports,
        mean,
    };
    std::fs::write(config.out_path("report.json"), report.to_json())
        .map_err(|e| Error::io(config.out_dir.clone(), e))?;
    std::fs::write(config.out_path("report.txt"), report.to_text())
        .map_err(|e| Error::io(config.out_dir.clone(), e))?;
    Ok(report)
}
