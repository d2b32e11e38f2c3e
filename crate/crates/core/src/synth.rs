//! Deterministic synthetic dataset with a planted news signal.
//!
//! The generator builds a vocabulary with a positive cluster, a negative
//! cluster, and neutral filler. On each trading day, with probability
//! `news_prob`, it emits one to three documents drawn mostly from one
//! cluster chosen by a fair coin; the next day's close then follows that
//! cluster's direction (up for positive) with probability 0.5 + `signal`.
//! Days without fresh news follow the most recent cluster, seen `a` days
//! ago, with probability 0.5 + `signal * carry^a`; with no prior news the
//! direction is a fair coin. The first two tokens of each cluster are
//! exported as the seed sets.
//!
//! Because stale news reaches the label only through this decaying carry, a
//! per-day histogram classifier tops out below a model that remembers
//! recent news, which is exactly the gap the recurrent network is meant to
//! exploit.
//!
//! Long-run accuracy of the Bayes predictor (follow the latest cluster) on
//! labeled days:
//!
//! ```text
//! p * (0.5 + s)  +  (1 - p) * (0.5 + s * p * c / (1 - (1 - p) * c))
//! ```
//!
//! with p = news_prob, s = signal, c = carry; the defaults (p = 0.5,
//! s = 0.4, c = 0) give 0.5 * 0.9 + 0.5 * 0.5 = 0.7. See
//! [`achievable_accuracy`].

use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, PriceBar, PriceSeries};
use crate::error::{Error, Result};
use crate::lexicon::SeedSets;

/// First trading day of every generated series (a Monday).
pub const START_DATE: NaiveDate = match NaiveDate::from_ymd_opt(2020, 1, 6) {
    Some(d) => d,
    None => panic!("valid date"),
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub stocks: usize,
    /// Trading days per stock.
    pub days: usize,
    /// Probability a day carries news.
    pub news_prob: f64,
    /// Edge over a fair coin for the day after news, in [0, 0.5].
    pub signal: f64,
    /// Geometric persistence of day-old news; 0 means news affects only the
    /// very next day.
    pub carry: f64,
    /// Tokens per polarity cluster (at least two; two become seeds).
    pub cluster_size: usize,
    /// Neutral filler tokens shared by all news.
    pub neutral_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            stocks: 20,
            days: 600,
            news_prob: 0.5,
            signal: 0.4,
            carry: 0.0,
            cluster_size: 12,
            neutral_size: 30,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config(msg));
        if self.stocks == 0 {
            return fail("need at least one stock".to_string());
        }
        if self.days < 5 {
            return fail(format!("need at least 5 trading days, got {}", self.days));
        }
        if !(0.0..=1.0).contains(&self.news_prob) {
            return fail(format!("news_prob must be in [0,1], got {}", self.news_prob));
        }
        if !(0.0..=0.5).contains(&self.signal) {
            return fail(format!("signal must be in [0,0.5], got {}", self.signal));
        }
        if self.carry < 0.0 || self.signal * self.carry > 0.5 {
            return fail(format!(
                "carry must be >= 0 with signal*carry <= 0.5, got carry {}",
                self.carry
            ));
        }
        if (1.0 - self.news_prob) * self.carry >= 1.0 {
            return fail(format!(
                "(1-news_prob)*carry must stay below 1, got {}",
                (1.0 - self.news_prob) * self.carry
            ));
        }
        if self.cluster_size < 2 {
            return fail(format!(
                "cluster_size must be at least 2, got {}",
                self.cluster_size
            ));
        }
        Ok(())
    }
}

/// Long-run accuracy of following the most recent cluster, per the module
/// formula; an upper bound for any predictor that only sees the news.
pub fn achievable_accuracy(config: &SynthConfig) -> f64 {
    let (p, s, c) = (config.news_prob, config.signal, config.carry);
    let fresh = p * (0.5 + s);
    let stale = (1.0 - p) * (0.5 + s * p * c / (1.0 - (1.0 - p) * c));
    fresh + stale
}

/// Generated corpus plus the ground-truth cluster assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub prices: Vec<PriceSeries>,
    pub docs: Vec<Document>,
    pub seeds: SeedSets,
    pub pos_tokens: Vec<String>,
    pub neg_tokens: Vec<String>,
}

fn next_trading_day(mut date: NaiveDate) -> NaiveDate {
    date = date + Days::new(1);
    while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
        date = date + Days::new(1);
    }
    date
}

pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let pos_tokens: Vec<String> = (0..config.cluster_size)
        .map(|i| format!("good_{i:02}"))
        .collect();
    let neg_tokens: Vec<String> = (0..config.cluster_size)
        .map(|i| format!("bad_{i:02}"))
        .collect();
    let neutral: Vec<String> = (0..config.neutral_size)
        .map(|i| format!("filler_{i:02}"))
        .collect();
    let seeds = SeedSets::new(pos_tokens[..2].to_vec(), neg_tokens[..2].to_vec())?;

    let mut dates = Vec::with_capacity(config.days);
    let mut date = START_DATE;
    for _ in 0..config.days {
        dates.push(date);
        date = next_trading_day(date);
    }

    let mut prices = Vec::with_capacity(config.stocks);
    let mut docs = Vec::new();
    for stock in 0..config.stocks {
        let stock_id = format!("syn{stock:02}");
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(stock as u64));
        let mut close: f64 = rng.random_range(20.0..200.0);
        let mut bars = Vec::with_capacity(config.days);
        // Most recent cluster direction and how many days ago it appeared.
        let mut last_news: Option<(f64, u32)> = None;
        for (day, &d) in dates.iter().enumerate() {
            let has_news = rng.random_range(0.0..1.0) < config.news_prob;
            if has_news {
                let sign = if rng.random_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 };
                let cluster = if sign > 0.0 { &pos_tokens } else { &neg_tokens };
                let n_docs = rng.random_range(1..=3);
                for k in 0..n_docs {
                    let n_tokens = rng.random_range(4..=8);
                    let tokens: Vec<String> = (0..n_tokens)
                        .map(|_| {
                            if rng.random_range(0.0..1.0) < 0.7 || neutral.is_empty() {
                                cluster[rng.random_range(0..cluster.len())].clone()
                            } else {
                                neutral[rng.random_range(0..neutral.len())].clone()
                            }
                        })
                        .collect();
                    docs.push(Document {
                        doc_id: format!("{stock_id}-{d}-{k}"),
                        date: d,
                        stock_id: stock_id.clone(),
                        tokens,
                    });
                }
                last_news = Some((sign, 0));
            }

            // Direction of the NEXT day's close, decided today.
            let p_follow = match last_news {
                Some((_, age)) => 0.5 + config.signal * config.carry.powi(age as i32),
                None => 0.5,
            };
            let base_sign = last_news.map(|(s, _)| s).unwrap_or(1.0);
            let follows = rng.random_range(0.0..1.0) < p_follow;
            let direction = if follows { base_sign } else { -base_sign };

            let open = close * rng.random_range(0.995..1.005);
            let high = close.max(open) * rng.random_range(1.0..1.01);
            let volume = rng.random_range(10_000..5_000_000);
            bars.push(PriceBar {
                date: d,
                open,
                close,
                high,
                volume,
            });

            if day + 1 < config.days {
                let magnitude = rng.random_range(0.002..0.03);
                close *= 1.0 + direction * magnitude;
                if let Some((_, age)) = last_news.as_mut() {
                    *age += 1;
                }
            }
        }
        prices.push(PriceSeries { stock_id, bars });
    }
    Ok(SynthDataset {
        prices,
        docs,
        seeds,
        pos_tokens,
        neg_tokens,
    })
}

/// Write prices.csv, news.jsonl, and seeds.txt under `dir`.
pub fn write_dataset(dir: &Path, dataset: &SynthDataset) -> Result<(PathBuf, PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let prices = dir.join("prices.csv");
    let news = dir.join("news.jsonl");
    let seeds = dir.join("seeds.txt");
    crate::corpus::write_prices(&prices, &dataset.prices)?;
    crate::corpus::write_news(&news, &dataset.docs)?;
    dataset.seeds.write(&seeds)?;
    Ok((prices, news, seeds))
}
